//! Seeded synthetic hierarchical embeddings.
//!
//! In `Natural` mode each subclass center is drawn around its superclass
//! center, so subclasses of one superclass resemble each other. In `Shuffled`
//! mode every subclass center is drawn independently from the
//! superclass-center distribution, which removes that resemblance while
//! keeping the label structure unchanged.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::labels::{LabelTable, LabeledDataset};
use crate::protocol::HierarchySpec;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMode {
    Natural,
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub spec: HierarchySpec,
    pub d: usize,
    pub sigma_super: f64,
    pub sigma_sub: f64,
    pub sigma_noise: f64,
    pub n_per_subclass: usize,
    pub mode: SynthMode,
    pub seed: u64,
}

impl SynthConfig {
    /// 13 superclasses x 4 subclasses, d = 64, scales 1.0 / 0.3 / 0.5 and
    /// 100 samples per subclass.
    pub fn entity13(mode: SynthMode, seed: u64) -> Self {
        Self {
            spec: HierarchySpec::uniform("entity-13", 13, 4),
            d: 64,
            sigma_super: 1.0,
            sigma_sub: 0.3,
            sigma_noise: 0.5,
            n_per_subclass: 100,
            mode,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if !(self.sigma_super > 0.0 && self.sigma_super.is_finite()) {
            return bad("sigma_super must be positive");
        }
        if !(self.sigma_sub >= 0.0 && self.sigma_sub.is_finite()) {
            return bad("sigma_sub must be non-negative");
        }
        if !(self.sigma_noise >= 0.0 && self.sigma_noise.is_finite()) {
            return bad("sigma_noise must be non-negative");
        }
        if self.n_per_subclass == 0 {
            return bad("n_per_subclass must be at least 1");
        }
        Ok(())
    }
}

fn gaussian(rng: &mut rng::Rng, center: &[f64], scale: f64) -> Vec<f64> {
    center
        .iter()
        .map(|c| {
            let z: f64 = StandardNormal.sample(rng);
            c + scale * z
        })
        .collect()
}

/// Samples a labeled dataset. Rows are ordered by superclass, then subclass,
/// in the order the hierarchy lists them.
pub fn generate(cfg: &SynthConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mut rng = rng::seeded(cfg.seed);
    let origin = vec![0.0; cfg.d];
    let (mut data, mut sup_ids, mut sub_ids) = (Vec::new(), Vec::new(), Vec::new());
    for sc in &cfg.spec.superclasses {
        let super_center = gaussian(&mut rng, &origin, cfg.sigma_super);
        for &sub in &sc.subclasses {
            let sub_center = match cfg.mode {
                SynthMode::Natural => gaussian(&mut rng, &super_center, cfg.sigma_sub),
                SynthMode::Shuffled => gaussian(&mut rng, &origin, cfg.sigma_super),
            };
            for _ in 0..cfg.n_per_subclass {
                data.extend(gaussian(&mut rng, &sub_center, cfg.sigma_noise));
                sup_ids.push(sc.id);
                sub_ids.push(sub);
            }
        }
    }
    let embeddings = EmbeddingMatrix::new(sup_ids.len(), cfg.d, data)?.named(
        "synthetic",
        format!("synth-{}-{}", mode_name(cfg.mode), cfg.seed),
    );
    LabeledDataset::new(embeddings, LabelTable::new(sup_ids, sub_ids)?)
}

fn mode_name(mode: SynthMode) -> &'static str {
    match mode {
        SynthMode::Natural => "natural",
        SynthMode::Shuffled => "shuffled",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: SynthMode) -> SynthConfig {
        SynthConfig {
            spec: HierarchySpec::uniform("small", 3, 2),
            d: 4,
            sigma_super: 1.0,
            sigma_sub: 0.2,
            sigma_noise: 0.1,
            n_per_subclass: 5,
            mode,
            seed: 11,
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = small(SynthMode::Natural);
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = SynthConfig { seed: 12, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn zero_noise_collapses_subclasses() {
        let cfg = SynthConfig {
            sigma_noise: 0.0,
            ..small(SynthMode::Shuffled)
        };
        let ds = generate(&cfg).unwrap();
        for block in 0..6 {
            let first = ds.embeddings.row(block * 5).to_vec();
            for i in 1..5 {
                assert_eq!(ds.embeddings.row(block * 5 + i), first.as_slice());
            }
        }
    }

    #[test]
    fn labels_follow_spec() {
        let ds = generate(&small(SynthMode::Natural)).unwrap();
        assert_eq!(ds.len(), 30);
        let parents = ds.labels.subclass_parents().unwrap();
        assert_eq!(parents, small(SynthMode::Natural).spec.parent_map());
    }

    #[test]
    fn invalid_scales() {
        let mut cfg = small(SynthMode::Natural);
        cfg.sigma_super = 0.0;
        assert!(generate(&cfg).is_err());
        let mut cfg = small(SynthMode::Natural);
        cfg.sigma_noise = -1.0;
        assert!(generate(&cfg).is_err());
    }
}
