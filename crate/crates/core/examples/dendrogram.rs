//! Build dendrograms with every linkage and cut them at several k.

use clusterlens::cluster::format_dendrogram;
use clusterlens::{build_dendrogram, cut, EmbeddingMatrix, LinkageKind};

fn main() -> clusterlens::Result<()> {
    let line = EmbeddingMatrix::from_rows(&[vec![0.0], vec![1.0], vec![10.0]])?;
    for linkage in LinkageKind::ALL {
        let tree = build_dendrogram(&line, linkage)?;
        let heights: Vec<String> = tree.heights().map(|h| format!("{h:.4}")).collect();
        println!("{linkage:>8}: heights {}", heights.join(", "));
    }

    let ward = build_dendrogram(&line, LinkageKind::Ward)?;
    print!("{}", format_dendrogram(&ward));
    for k in 1..=3 {
        println!("k={k}: {:?}", cut(&ward, k)?.labels());
    }
    Ok(())
}
