use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{LabelTable, LabeledDataset};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Superclass {
    pub id: usize,
    pub subclasses: Vec<usize>,
}

/// Superclass -> subclass mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchySpec {
    pub name: String,
    pub superclasses: Vec<Superclass>,
}

impl HierarchySpec {
    pub fn new(name: impl Into<String>, superclasses: Vec<Superclass>) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            superclasses,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `n_super` superclasses with `n_sub` consecutive subclass ids each.
    pub fn uniform(name: impl Into<String>, n_super: usize, n_sub: usize) -> Self {
        let superclasses = (0..n_super)
            .map(|s| Superclass {
                id: s,
                subclasses: (s * n_sub..(s + 1) * n_sub).collect(),
            })
            .collect();
        Self {
            name: name.into(),
            superclasses,
        }
    }

    /// Reads the hierarchy implied by a label table.
    pub fn from_labels(name: impl Into<String>, labels: &LabelTable) -> Result<Self> {
        let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (sub, sup) in labels.subclass_parents()? {
            groups.entry(sup).or_default().insert(sub);
        }
        Self::new(
            name,
            groups
                .into_iter()
                .map(|(id, subs)| Superclass {
                    id,
                    subclasses: subs.into_iter().collect(),
                })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let mut ids = BTreeSet::new();
        for sc in &self.superclasses {
            if !ids.insert(sc.id) {
                return Err(Error::ShapeMismatch(format!("superclass {} listed twice", sc.id)));
            }
            if sc.subclasses.is_empty() {
                return Err(Error::ShapeMismatch(format!("superclass {} has no subclasses", sc.id)));
            }
            for &sub in &sc.subclasses {
                if !seen.insert(sub) {
                    return Err(Error::ShapeMismatch(format!("subclass {sub} listed twice")));
                }
            }
        }
        Ok(())
    }

    /// Subclass id -> superclass id.
    pub fn parent_map(&self) -> BTreeMap<usize, usize> {
        self.superclasses
            .iter()
            .flat_map(|sc| sc.subclasses.iter().map(move |&sub| (sub, sc.id)))
            .collect()
    }
}

/// Reassigns subclasses to superclass slots by a seeded uniform permutation,
/// keeping every superclass's subclass count.
pub fn shuffle_hierarchy(spec: &HierarchySpec, seed: u64) -> Result<HierarchySpec> {
    spec.validate()?;
    let width = spec.superclasses.first().map_or(0, |s| s.subclasses.len());
    if let Some(bad) = spec.superclasses.iter().find(|s| s.subclasses.len() != width) {
        return Err(Error::ShapeMismatch(format!(
            "superclass {} has {} subclasses, expected {width}",
            bad.id,
            bad.subclasses.len()
        )));
    }
    let mut pool: Vec<usize> = spec
        .superclasses
        .iter()
        .flat_map(|s| s.subclasses.iter().copied())
        .collect();
    pool.shuffle(&mut rng::seeded(seed));
    let superclasses = spec
        .superclasses
        .iter()
        .zip(pool.chunks(width.max(1)))
        .map(|(sc, chunk)| Superclass {
            id: sc.id,
            subclasses: chunk.to_vec(),
        })
        .collect();
    Ok(HierarchySpec {
        name: format!("{}-shuffled", spec.name),
        superclasses,
    })
}

/// Rewrites every sample's superclass according to `spec`.
pub fn relabel_labels(labels: &LabelTable, spec: &HierarchySpec) -> Result<LabelTable> {
    spec.validate()?;
    let parents = spec.parent_map();
    let superclass = labels
        .subclass()
        .iter()
        .map(|sub| parents.get(sub).copied().ok_or(Error::UnknownSubclass(*sub)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = labels.clone();
    // Superclass names describe the original grouping and no longer apply
    // once any subclass has moved.
    if out.superclass() != superclass.as_slice() {
        out.superclass_names.clear();
    }
    out.set_superclasses(superclass);
    Ok(out)
}

pub fn relabel_dataset(ds: &LabeledDataset, spec: &HierarchySpec) -> Result<LabeledDataset> {
    Ok(LabeledDataset {
        embeddings: ds.embeddings.clone(),
        labels: relabel_labels(&ds.labels, spec)?,
    })
}
