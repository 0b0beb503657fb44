//! List the lowest-index members of every cluster with their true subclass.

use clusterlens::protocol::{export_exemplars, format_exemplars};
use clusterlens::synth::{generate, SynthConfig, SynthMode};
use clusterlens::{agglomerative, l2_normalize, HierarchySpec, LinkageKind};

fn main() -> clusterlens::Result<()> {
    let mut ds = generate(&SynthConfig {
        spec: HierarchySpec::uniform("pets", 1, 3),
        n_per_subclass: 6,
        ..SynthConfig::entity13(SynthMode::Natural, 2)
    })?;
    for (id, name) in ["tabby", "siamese", "persian"].iter().enumerate() {
        ds.labels.subclass_names.insert(id, name.to_string());
    }
    let x = l2_normalize(&ds.embeddings).0;
    let assignment = agglomerative(&x, LinkageKind::Ward, 3)?;
    let groups = export_exemplars(&assignment, &ds.labels, 3)?;
    print!("{}", format_exemplars(&groups));
    Ok(())
}
