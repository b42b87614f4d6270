//! Stage artifacts and their manifests.
//!
//! Every stage writes `<stage>.manifest.json` next to its outputs. The
//! manifest records a hash of the configuration the stage depends on,
//! chained with the hashes of its inputs, so a later stage can refuse
//! artifacts produced under a different configuration.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use citefuse_core::config::RunConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Prepare,
    EmbedText,
    EmbedGraph,
    TrainFusion,
    Infer,
    Rank,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Prepare,
        Stage::EmbedText,
        Stage::EmbedGraph,
        Stage::TrainFusion,
        Stage::Infer,
        Stage::Rank,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Prepare => "prepare",
            Stage::EmbedText => "embed-text",
            Stage::EmbedGraph => "embed-graph",
            Stage::TrainFusion => "train-fusion",
            Stage::Infer => "infer",
            Stage::Rank => "rank",
            Stage::Evaluate => "evaluate",
        }
    }

    pub fn inputs(self) -> &'static [Stage] {
        match self {
            Stage::Prepare => &[],
            Stage::EmbedText | Stage::EmbedGraph => &[Stage::Prepare],
            Stage::TrainFusion => &[Stage::EmbedText, Stage::EmbedGraph],
            Stage::Infer => &[Stage::TrainFusion],
            Stage::Rank => &[Stage::Infer],
            Stage::Evaluate => &[Stage::Rank],
        }
    }

    /// Configuration this stage reads directly, as canonical JSON.
    fn own_config(self, cfg: &RunConfig) -> serde_json::Value {
        use serde_json::json;
        match self {
            Stage::Prepare => json!({
                "corpus": cfg.paths.corpus,
                "prune": cfg.prune,
                "split": cfg.split,
            }),
            Stage::EmbedText => json!({ "text": cfg.text, "dense": cfg.dense_text() }),
            Stage::EmbedGraph => json!({
                "graph": cfg.graph.walk(cfg.seed),
                "skipgram": cfg.graph.skipgram(cfg.seed, cfg.deterministic),
            }),
            Stage::TrainFusion => {
                json!({ "fusion": cfg.fusion, "seed": cfg.seed, "view": cfg.retrieval.view })
            }
            Stage::Infer => json!({ "inference": cfg.inference }),
            Stage::Rank => json!({ "retrieval": cfg.retrieval, "k": cfg.rank_k() }),
            Stage::Evaluate => json!({ "eval": cfg.eval }),
        }
    }

    /// Hash of this stage's configuration chained with all upstream stages.
    pub fn config_hash(self, cfg: &RunConfig) -> String {
        let mut h = Sha256::new();
        h.update(self.name().as_bytes());
        h.update(self.own_config(cfg).to_string().as_bytes());
        for input in self.inputs() {
            h.update(input.config_hash(cfg).as_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<String>,
    pub wall_seconds: f64,
    /// Peak resident set size of the process so far, in KiB.
    pub peak_rss_kib: Option<u64>,
    pub version: String,
    /// The full run configuration, TOML.
    pub config: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

/// `VmHWM` from `/proc/self/status`, where available.
pub fn peak_rss_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

pub struct WorkDir {
    root: PathBuf,
}

impl WorkDir {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("creating work dir {}", root.display()))?;
        Ok(WorkDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    pub fn open(&self, name: &str) -> Result<BufReader<File>> {
        let path = self.path(name);
        let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        Ok(BufReader::new(f))
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    fn manifest_name(stage: Stage) -> String {
        format!("{}.manifest.json", stage.name())
    }

    pub fn read_manifest(&self, stage: Stage) -> Result<Option<Manifest>> {
        let name = Self::manifest_name(stage);
        if !self.exists(&name) {
            return Ok(None);
        }
        let m = serde_json::from_reader(self.open(&name)?)
            .with_context(|| format!("parsing {name}"))?;
        Ok(Some(m))
    }

    /// Refuses to proceed unless every input stage ran with this config.
    pub fn check_inputs(&self, stage: Stage, cfg: &RunConfig) -> Result<Vec<(String, String)>> {
        let mut inputs = Vec::new();
        for &input in stage.inputs() {
            let expected = input.config_hash(cfg);
            let Some(m) = self.read_manifest(input)? else {
                bail!(
                    "`{}` has not run in {}; run it first",
                    input.name(),
                    self.root.display()
                );
            };
            if m.config_hash != expected {
                bail!(
                    "artifacts of `{}` were produced with a different configuration \
                     (hash {} vs expected {}); rerun `{}` or restore the matching config",
                    input.name(),
                    &m.config_hash[..12],
                    &expected[..12],
                    input.name()
                );
            }
            inputs.push((input.name().to_string(), m.config_hash));
        }
        Ok(inputs)
    }

    /// True when the stage's manifest matches `cfg`.
    pub fn is_current(&self, stage: Stage, cfg: &RunConfig) -> Result<bool> {
        Ok(self
            .read_manifest(stage)?
            .is_some_and(|m| m.config_hash == stage.config_hash(cfg)))
    }

    pub fn write_manifest(
        &self,
        stage: Stage,
        cfg: &RunConfig,
        inputs: Vec<(String, String)>,
        outputs: &[&str],
        started: Instant,
        summary: serde_json::Value,
    ) -> Result<()> {
        let m = Manifest {
            stage: stage.name().to_string(),
            config_hash: stage.config_hash(cfg),
            inputs,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            wall_seconds: started.elapsed().as_secs_f64(),
            peak_rss_kib: peak_rss_kib(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: crate::settings::to_toml(cfg)?,
            summary,
        };
        let mut out = self.create(&Self::manifest_name(stage))?;
        serde_json::to_writer_pretty(&mut out, &m)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }
}
