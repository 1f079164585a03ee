//! The k-d count tree on its own: accumulate, look up, list.
//!
//! `cargo run --example haplotype_store`

use hapsim::{KdCountTree, RandomStream};

fn main() -> hapsim::Result<()> {
    let mut tree = KdCountTree::new(2);
    tree.insert_or_add(&[0, 0], 1)?;
    tree.insert_or_add(&[1, 0], 1)?;
    tree.insert_or_add(&[0, 0], 2)?;
    println!("(0,0) -> {}", tree.lookup(&[0, 0])?);
    println!("(5,5) -> {}", tree.lookup(&[5, 5])?);
    println!("distinct, total = {:?}", tree.totals());

    let mut stream = RandomStream::new(3);
    let mut big = KdCountTree::new(4);
    for _ in 0..200_000 {
        let h: Vec<i32> = (0..4).map(|_| stream.below(9) as i32 - 4).collect();
        big.insert_or_add(&h, 1)?;
    }
    println!(
        "\n200000 draws over 9^4 cells: {} distinct, mean depth {:.1}",
        big.distinct(),
        big.mean_depth()
    );
    for (h, n) in big.collect_sorted().iter().take(5) {
        println!("  {:?} {n}", h.alleles());
    }
    Ok(())
}
