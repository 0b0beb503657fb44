//! Per-sample superclass/subclass labels and the comma-delimited label file.
//!
//! Header: `sample_index,superclass_id,subclass_id[,superclass_name,subclass_name]`.
//! Rows may appear in any order; they are stored by sample index.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::fsio::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelTable {
    superclass: Vec<usize>,
    subclass: Vec<usize>,
    pub superclass_names: BTreeMap<usize, String>,
    pub subclass_names: BTreeMap<usize, String>,
}

impl LabelTable {
    /// Builds a table from per-sample ids, validating that every subclass
    /// belongs to exactly one superclass.
    pub fn new(superclass: Vec<usize>, subclass: Vec<usize>) -> Result<Self> {
        if superclass.len() != subclass.len() {
            return Err(Error::LengthMismatch {
                left: superclass.len(),
                right: subclass.len(),
            });
        }
        let table = Self {
            superclass,
            subclass,
            superclass_names: BTreeMap::new(),
            subclass_names: BTreeMap::new(),
        };
        table.subclass_parents()?;
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.superclass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.superclass.is_empty()
    }

    pub fn superclass(&self) -> &[usize] {
        &self.superclass
    }

    pub fn subclass(&self) -> &[usize] {
        &self.subclass
    }

    /// Subclass id -> owning superclass id.
    pub fn subclass_parents(&self) -> Result<BTreeMap<usize, usize>> {
        let mut parents = BTreeMap::new();
        for (&sup, &sub) in self.superclass.iter().zip(&self.subclass) {
            match parents.insert(sub, sup) {
                Some(prev) if prev != sup => {
                    return Err(Error::SubclassInTwoSuperclasses {
                        subclass: sub,
                        first: prev.min(sup),
                        second: prev.max(sup),
                    })
                }
                _ => {}
            }
        }
        Ok(parents)
    }

    /// Sample indices of each superclass, ascending, keyed by superclass id.
    pub fn superclass_members(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &s) in self.superclass.iter().enumerate() {
            groups.entry(s).or_default().push(i);
        }
        groups
    }

    /// Replaces superclass ids in place. Callers own the invariant check.
    pub(crate) fn set_superclasses(&mut self, superclass: Vec<usize>) {
        debug_assert_eq!(superclass.len(), self.subclass.len());
        self.superclass = superclass;
    }

    pub fn subclass_name(&self, id: usize) -> Option<&str> {
        self.subclass_names.get(&id).map(String::as_str)
    }
}

const REQUIRED: [&str; 3] = ["sample_index", "superclass_id", "subclass_id"];

fn parse_id(field: &str, line: u64, column: &str) -> Result<usize> {
    field.trim().parse().map_err(|_| Error::LabelParse {
        line,
        message: format!("{column} \"{field}\" is not a non-negative integer"),
    })
}

/// Parses label CSV text.
pub fn parse_labels(text: &str) -> Result<LabelTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::LabelParse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut required = [0usize; 3];
    for (slot, name) in required.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let sup_name_col = col("superclass_name");
    let sub_name_col = col("subclass_name");

    let mut rows: Vec<(usize, usize, usize)> = Vec::new();
    let mut superclass_names = BTreeMap::new();
    let mut subclass_names = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::LabelParse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize, name: &str| {
            record.get(i).ok_or_else(|| Error::LabelParse {
                line,
                message: format!("missing {name}"),
            })
        };
        let idx = parse_id(get(required[0], REQUIRED[0])?, line, REQUIRED[0])?;
        let sup = parse_id(get(required[1], REQUIRED[1])?, line, REQUIRED[1])?;
        let sub = parse_id(get(required[2], REQUIRED[2])?, line, REQUIRED[2])?;
        if let Some(name) = sup_name_col.and_then(|c| record.get(c)).filter(|s| !s.is_empty()) {
            superclass_names.insert(sup, name.to_string());
        }
        if let Some(name) = sub_name_col.and_then(|c| record.get(c)).filter(|s| !s.is_empty()) {
            subclass_names.insert(sub, name.to_string());
        }
        rows.push((idx, sup, sub));
    }

    let n = rows.len();
    let mut superclass = vec![usize::MAX; n];
    let mut subclass = vec![usize::MAX; n];
    for &(idx, sup, sub) in &rows {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
        if superclass[idx] != usize::MAX {
            return Err(Error::DuplicateIndex(idx));
        }
        superclass[idx] = sup;
        subclass[idx] = sub;
    }
    let mut table = LabelTable::new(superclass, subclass)?;
    table.superclass_names = superclass_names;
    table.subclass_names = subclass_names;
    Ok(table)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

/// Renders a table as label CSV, including name columns when any name is set.
pub fn format_labels(table: &LabelTable) -> String {
    let with_names = !table.superclass_names.is_empty() || !table.subclass_names.is_empty();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sample_index", "superclass_id", "subclass_id"];
    if with_names {
        header.extend(["superclass_name", "subclass_name"]);
    }
    writer.write_record(&header).expect("in-memory write");
    for i in 0..table.len() {
        let (sup, sub) = (table.superclass[i], table.subclass[i]);
        let mut rec = vec![i.to_string(), sup.to_string(), sub.to_string()];
        if with_names {
            rec.push(table.superclass_names.get(&sup).cloned().unwrap_or_default());
            rec.push(table.subclass_names.get(&sub).cloned().unwrap_or_default());
        }
        writer.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn save_labels(table: &LabelTable, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_labels(table).as_bytes())
}

/// Embeddings joined with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub embeddings: EmbeddingMatrix,
    pub labels: LabelTable,
}

impl LabeledDataset {
    pub fn new(embeddings: EmbeddingMatrix, labels: LabelTable) -> Result<Self> {
        if embeddings.n() != labels.len() {
            return Err(Error::LengthMismatch {
                left: embeddings.n(),
                right: labels.len(),
            });
        }
        Ok(Self { embeddings, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_four_rows() {
        let t = parse_labels("sample_index,superclass_id,subclass_id\n3,1,5\n0,0,2\n1,0,3\n2,1,5\n")
            .unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.superclass(), &[0, 0, 1, 1]);
        assert_eq!(t.subclass(), &[2, 3, 5, 5]);
    }

    #[test]
    fn subclass_in_two_superclasses() {
        let err = parse_labels("sample_index,superclass_id,subclass_id\n0,1,7\n1,2,7\n").unwrap_err();
        assert!(matches!(
            err,
            Error::SubclassInTwoSuperclasses { subclass: 7, first: 1, second: 2 }
        ));
    }

    #[test]
    fn duplicate_and_missing() {
        assert!(matches!(
            parse_labels("sample_index,superclass_id,subclass_id\n0,0,0\n0,0,1\n"),
            Err(Error::DuplicateIndex(0))
        ));
        assert!(matches!(
            parse_labels("sample_index,superclass_id\n0,0\n"),
            Err(Error::MissingColumn(c)) if c == "subclass_id"
        ));
        assert!(matches!(
            parse_labels("sample_index,superclass_id,subclass_id\n0,0,0\n5,0,1\n"),
            Err(Error::IndexOutOfRange { index: 5, n: 2 })
        ));
        assert!(matches!(
            parse_labels("sample_index,superclass_id,subclass_id\n0,x,0\n"),
            Err(Error::LabelParse { line: 2, .. })
        ));
    }

    #[test]
    fn entity13_shape_validates() {
        let mut text = String::from("sample_index,superclass_id,subclass_id\n");
        let mut i = 0;
        for sup in 0..13 {
            for k in 0..4 {
                for _ in 0..3 {
                    text.push_str(&format!("{i},{sup},{}\n", sup * 4 + k));
                    i += 1;
                }
            }
        }
        let t = parse_labels(&text).unwrap();
        assert_eq!(t.len(), 13 * 4 * 3);
        let parents = t.subclass_parents().unwrap();
        assert_eq!(parents.len(), 52);
        assert_eq!(t.superclass_members().len(), 13);
    }

    #[test]
    fn names_roundtrip_with_quoting() {
        let text = "sample_index,superclass_id,subclass_id,superclass_name,subclass_name\n\
                    0,0,0,\"dog, domestic dog\",beagle\n1,0,1,\"dog, domestic dog\",collie\n";
        let t = parse_labels(text).unwrap();
        assert_eq!(t.superclass_names[&0], "dog, domestic dog");
        assert_eq!(parse_labels(&format_labels(&t)).unwrap(), t);
    }
}
