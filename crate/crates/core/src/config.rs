//! Run configuration shared by every pipeline stage.
//!
//! Defaults follow the reference experimental setup: prune 15/20, train
//! through 2013 and test 2014–2017, min_df 5, node2vec p=4 q=2 with 200
//! walks of length 80, 128-d skip-gram with window 10, a 128-128 sigmoid
//! DCCA trained 20 epochs at batch 256, projected concatenation, N=5 and
//! k ∈ {10, 15, 20}.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::{PruneConfig, SplitConfig};
use crate::error::{Error, Result};
use crate::evaluation::EvalConfig;
use crate::fusion::{Activation, CcaConfig, DccaConfig, FusionStrategy};
use crate::graph::{Direction, SkipGramConfig, WalkConfig};
use crate::inference::InferenceConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds walks, skip-gram and DCCA initialisation.
    pub seed: u64,
    /// Single-worker training, so reruns are bit-identical.
    pub deterministic: bool,
    pub paths: PathsConfig,
    pub prune: PruneConfig,
    pub split: SplitConfig,
    pub text: TextConfig,
    pub graph: GraphConfig,
    pub fusion: FusionConfig,
    pub inference: InferenceConfig,
    pub eval: EvalConfig,
    pub retrieval: RetrievalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Line-delimited JSON corpus.
    pub corpus: PathBuf,
    pub work_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            corpus: PathBuf::from("corpus.jsonl"),
            work_dir: PathBuf::from("work"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextModel {
    Tfidf,
    /// Precomputed embeddings in the interchange format.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextConfig {
    pub model: TextModel,
    /// Embedding file covering train and test papers, for `external`.
    pub external_path: Option<PathBuf>,
    pub min_df: usize,
    /// Keep only the most frequent terms; bounds dense TF-IDF width.
    pub max_features: Option<usize>,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            model: TextModel::Tfidf,
            external_path: None,
            min_df: 5,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub p: f64,
    pub q: f64,
    pub direction: Direction,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Skip-gram threads; 0 uses every core. Forced to 1 when deterministic.
    pub workers: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        let walk = WalkConfig::default();
        let sg = SkipGramConfig::default();
        GraphConfig {
            walks_per_node: walk.walks_per_node,
            walk_length: walk.walk_length,
            p: walk.p,
            q: walk.q,
            direction: walk.direction,
            dim: sg.dim,
            window: sg.window,
            negatives: sg.negatives,
            epochs: sg.epochs,
            lr: sg.initial_lr,
            workers: 0,
        }
    }
}

impl GraphConfig {
    pub fn walk(&self, seed: u64) -> WalkConfig {
        WalkConfig {
            walks_per_node: self.walks_per_node,
            walk_length: self.walk_length,
            p: self.p,
            q: self.q,
            seed,
            direction: self.direction,
        }
    }

    pub fn skipgram(&self, seed: u64, deterministic: bool) -> SkipGramConfig {
        SkipGramConfig {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            initial_lr: self.lr,
            seed,
            workers: if deterministic { 1 } else { self.workers },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMethod {
    None,
    Cca,
    Dcca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    SimpleConcat,
    ProjectedConcat,
    LinearCombination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub method: FusionMethod,
    pub d: usize,
    pub reg: f64,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub strategy: StrategyName,
    /// Text weight for `linear_combination`.
    pub alpha: f64,
    /// DCCA hidden layer widths.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub standardize: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        let dcca = DccaConfig::default();
        FusionConfig {
            method: FusionMethod::Dcca,
            d: dcca.d,
            reg: dcca.reg,
            epochs: dcca.epochs,
            batch: dcca.batch,
            lr: dcca.lr,
            strategy: StrategyName::ProjectedConcat,
            alpha: 0.75,
            hidden: dcca.hidden,
            activation: dcca.activation,
            standardize: dcca.standardize,
        }
    }
}

impl FusionConfig {
    pub fn strategy(&self) -> FusionStrategy {
        match self.strategy {
            StrategyName::SimpleConcat => FusionStrategy::SimpleConcat,
            StrategyName::ProjectedConcat => FusionStrategy::ProjectedConcat,
            StrategyName::LinearCombination => {
                FusionStrategy::LinearCombination { alpha: self.alpha }
            }
        }
    }

    pub fn cca(&self) -> CcaConfig {
        CcaConfig {
            d: self.d,
            reg: self.reg,
            standardize: self.standardize,
        }
    }

    pub fn dcca(&self, seed: u64) -> DccaConfig {
        DccaConfig {
            hidden: self.hidden.clone(),
            d: self.d,
            activation: self.activation,
            epochs: self.epochs,
            batch: self.batch,
            reg: self.reg,
            lr: self.lr,
            seed,
            standardize: self.standardize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.strategy().validate()?;
        match (self.method, self.strategy) {
            (FusionMethod::None, StrategyName::SimpleConcat) => Ok(()),
            (FusionMethod::None, s) => Err(Error::config(format!(
                "fusion strategy `{}` needs method cca or dcca",
                FusionConfig {
                    strategy: s,
                    ..self.clone()
                }
                .strategy()
                .name()
            ))),
            _ if self.d == 0 => Err(Error::config("fusion d must be at least 1")),
            _ => Ok(()),
        }
    }

    /// True when a model must be fitted.
    pub fn trains_model(&self) -> bool {
        self.method != FusionMethod::None && self.strategy().needs_projection()
    }
}

/// Which representation is ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Fused,
    Text,
    Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub view: View,
    /// List length; defaults to the largest evaluation cutoff.
    pub k: Option<usize>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            view: View::Fused,
            k: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.eval.validate()?;
        self.graph.walk(self.seed).validate()?;
        self.graph
            .skipgram(self.seed, self.deterministic)
            .validate()?;
        self.fusion.validate()?;
        if self.inference.n == 0 {
            return Err(Error::config("inference N must be at least 1"));
        }
        if self.text.min_df == 0 {
            return Err(Error::config("text min_df must be at least 1"));
        }
        if self.text.model == TextModel::External && self.text.external_path.is_none() {
            return Err(Error::config(
                "text model `external` needs text.external_path",
            ));
        }
        if let Some(k) = self.retrieval.k {
            if k < self.eval.max_k() {
                return Err(Error::config(format!(
                    "retrieval k = {k} is shorter than the largest evaluation cutoff {}",
                    self.eval.max_k()
                )));
            }
        }
        Ok(())
    }

    pub fn rank_k(&self) -> usize {
        self.retrieval.k.unwrap_or_else(|| self.eval.max_k())
    }

    /// Whether the text view must be materialised as a dense table.
    pub fn dense_text(&self) -> bool {
        self.text.model == TextModel::External || self.retrieval.view == View::Fused
    }
}
