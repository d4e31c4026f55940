//! Writes the synthetic instances of a plan to disk.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::gaussian::matrix_to_csv;
use crate::simbench::{gen_instance, ExperimentPlan};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub id: String,
    pub graph_type: String,
    pub p: usize,
    pub n: usize,
    pub replication: usize,
    pub master_seed: u64,
    pub edges: usize,
    pub graph_file: String,
    pub precision_file: String,
    pub data_file: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    format: &'static str,
    instances: &'a [ManifestEntry],
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// One edge list, `K*` CSV and data CSV per replication, plus `manifest.json`.
pub fn write_instances(plans: &[ExperimentPlan], dir: &Path) -> Result<Vec<ManifestEntry>> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for plan in plans {
        let n = plan.n.n(plan.p);
        for rep in 0..plan.replications {
            let inst = gen_instance(plan.graph_type, plan.p, n, plan.edge_prob, plan.master_seed, rep)?;
            let id = format!("{}-p{}-n{}-s{}-r{}", plan.graph_type, plan.p, n, plan.master_seed, rep);
            let entry = ManifestEntry {
                graph_file: format!("{id}.edges"),
                precision_file: format!("{id}-k.csv"),
                data_file: format!("{id}-y.csv"),
                id,
                graph_type: plan.graph_type.name().into(),
                p: plan.p,
                n,
                replication: rep,
                master_seed: plan.master_seed,
                edges: inst.g_true.edge_count(),
            };
            std::fs::write(dir.join(&entry.graph_file), inst.g_true.to_edge_list())?;
            std::fs::write(dir.join(&entry.precision_file), matrix_to_csv(inst.k_true.matrix()))?;
            std::fs::write(dir.join(&entry.data_file), matrix_to_csv(inst.data.matrix()))?;
            log::info!("wrote {}", entry.id);
            entries.push(entry);
        }
    }
    let manifest = Manifest { format: "ggmsl-instances v1", instances: &entries };
    std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest).expect("plain data") + "\n")?;
    Ok(entries)
}
