//! Seeded k-means with its objective trace.

use clusterlens::cluster::kmeans_detailed;
use clusterlens::EmbeddingMatrix;

fn main() -> clusterlens::Result<()> {
    let mut rows = Vec::new();
    for i in 0..60 {
        let t = i as f64 * 0.37;
        let offset = (i % 3) as f64 * 1.5;
        rows.push(vec![offset + t.sin(), 0.5 * offset + t.cos()]);
    }
    let x = EmbeddingMatrix::from_rows(&rows)?;
    for seed in [1, 2, 3] {
        let run = kmeans_detailed(&x, 3, seed, 100)?;
        println!(
            "seed {seed}: {} iterations, converged {}, objective {:?}",
            run.iterations, run.converged, run.objective_history
        );
        println!("  labels {:?}", &run.assignment.labels()[..10]);
    }
    Ok(())
}
