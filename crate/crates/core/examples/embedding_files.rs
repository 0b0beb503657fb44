//! Write and read EMB1 embedding files and label CSVs, then unit-normalize.

use clusterlens::embedding::{decode_embeddings, encode_embeddings};
use clusterlens::labels::format_labels;
use clusterlens::{l2_normalize, load_embeddings, load_labels, save_embeddings, save_labels, Dtype, EmbeddingMatrix, LabelTable};

fn main() -> clusterlens::Result<()> {
    let dir = std::env::temp_dir().join("clusterlens-embedding-files");
    std::fs::create_dir_all(&dir).map_err(|e| clusterlens::Error::Io { path: dir.clone(), source: e })?;

    let m = EmbeddingMatrix::with_dtype(2, 2, vec![1.0, 2.0, 3.0, 4.0], Dtype::F32)?;
    let bytes = encode_embeddings(&m);
    println!("2x2 f32 file is {} bytes: {:02x?}", bytes.len(), &bytes[..8]);
    assert_eq!(decode_embeddings(&bytes)?.data(), m.data());

    let path = dir.join("penultimate.emb");
    save_embeddings(&m, &path)?;
    let back = load_embeddings(&path)?;
    println!("loaded layer {:?}: {}x{}", back.layer_name, back.n(), back.d());

    let mut labels = LabelTable::new(vec![0, 1], vec![0, 4])?;
    labels.subclass_names.insert(0, "tabby".into());
    labels.subclass_names.insert(4, "beagle".into());
    save_labels(&labels, dir.join("labels.csv"))?;
    print!("{}", format_labels(&load_labels(dir.join("labels.csv"))?));

    let with_zero = EmbeddingMatrix::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0]])?;
    let (unit, summary) = l2_normalize(&with_zero);
    println!("normalized rows {:?}, zero rows left as-is: {:?}", unit.data(), summary.zero_rows);
    Ok(())
}
