//! Precision@k, Recall@k and MAP@k over a set of ranked lists.
//!
//! Per-query terms are summed in ascending query-id order, so results do not
//! depend on the order lists are supplied in.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::GroundTruth;
use crate::error::{Error, Result};
use crate::retrieval::RankedList;

pub const DEFAULT_KS: [usize; 3] = [10, 15, 20];

/// Denominator of average precision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApNormalizer {
    /// `1 / |R_i|`; AP cannot reach 1 when `|R_i| > k`.
    #[default]
    Relevant,
    /// `1 / min(k, |R_i|)`.
    MinKRelevant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    /// Score missing ranks of short lists as non-relevant instead of failing.
    pub pad: bool,
    pub normalizer: ApNormalizer,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ks: DEFAULT_KS.to_vec(),
            pad: false,
            normalizer: ApNormalizer::Relevant,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::config(
                "ks must be a non-empty list of positive cutoffs",
            ));
        }
        Ok(())
    }

    pub fn max_k(&self) -> usize {
        self.ks.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMetrics {
    pub precision: f64,
    pub recall: f64,
    pub map: f64,
    /// Total relevant items in the top k across all queries.
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub ks: Vec<usize>,
    pub per_k: BTreeMap<usize, KMetrics>,
    pub n_queries: usize,
    /// query id → AP at each k.
    pub per_query_ap: BTreeMap<String, BTreeMap<usize, f64>>,
}

/// Relevance flags for the first `k` ranks of one list.
struct Judged<'a> {
    query: &'a str,
    rel: Vec<bool>,
    n_relevant: usize,
}

impl Judged<'_> {
    fn hits(&self, k: usize) -> usize {
        self.rel.iter().take(k).filter(|&&r| r).count()
    }

    fn ap(&self, k: usize, normalizer: ApNormalizer) -> f64 {
        let mut hits = 0usize;
        let mut sum = 0.0;
        for (j, &r) in self.rel.iter().take(k).enumerate() {
            if r {
                hits += 1;
                sum += hits as f64 / (j + 1) as f64;
            }
        }
        let denom = match normalizer {
            ApNormalizer::Relevant => self.n_relevant,
            ApNormalizer::MinKRelevant => self.n_relevant.min(k),
        };
        sum / denom as f64
    }
}

fn judge<'a>(
    recs: &'a [RankedList],
    truth: &GroundTruth,
    max_k: usize,
    pad: bool,
) -> Result<Vec<Judged<'a>>> {
    if recs.is_empty() {
        return Err(Error::Empty("recommendation lists"));
    }
    let mut sorted: Vec<&RankedList> = recs.iter().collect();
    sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    if let Some(w) = sorted.windows(2).find(|w| w[0].query_id == w[1].query_id) {
        return Err(Error::config(format!(
            "query `{}` ranked twice",
            w[0].query_id
        )));
    }
    sorted
        .into_par_iter()
        .map(|list| {
            let relevant = truth
                .get(&list.query_id)
                .filter(|r| !r.is_empty())
                .ok_or_else(|| Error::MissingTruth(list.query_id.clone()))?;
            if list.len() < max_k && !pad {
                return Err(Error::ShortList {
                    query: list.query_id.clone(),
                    len: list.len(),
                    k: max_k,
                });
            }
            let mut seen = BTreeSet::new();
            let rel = list
                .ids()
                .take(max_k)
                .map(|id| seen.insert(id) && relevant.contains(id))
                .collect();
            Ok(Judged {
                query: &list.query_id,
                rel,
                n_relevant: relevant.len(),
            })
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Mean over queries of `hits / k`.
pub fn precision_at_k(recs: &[RankedList], truth: &GroundTruth, k: usize) -> Result<f64> {
    let cfg = EvalConfig {
        ks: vec![k],
        ..EvalConfig::default()
    };
    Ok(evaluate_run(recs, truth, &cfg)?.per_k[&k].precision)
}

/// Mean over queries of `hits / |R_i|`.
pub fn recall_at_k(recs: &[RankedList], truth: &GroundTruth, k: usize) -> Result<f64> {
    let cfg = EvalConfig {
        ks: vec![k],
        ..EvalConfig::default()
    };
    Ok(evaluate_run(recs, truth, &cfg)?.per_k[&k].recall)
}

/// Mean over queries of `(1/|R_i|) Σ_{j≤k} P@j · rel(j)`.
pub fn map_at_k(recs: &[RankedList], truth: &GroundTruth, k: usize) -> Result<f64> {
    let cfg = EvalConfig {
        ks: vec![k],
        ..EvalConfig::default()
    };
    Ok(evaluate_run(recs, truth, &cfg)?.per_k[&k].map)
}

pub fn evaluate_run(
    recs: &[RankedList],
    truth: &GroundTruth,
    cfg: &EvalConfig,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let mut ks = cfg.ks.clone();
    ks.sort_unstable();
    ks.dedup();
    let judged = judge(recs, truth, cfg.max_k(), cfg.pad)?;
    let n = judged.len();

    let mut per_k = BTreeMap::new();
    let mut per_query_ap: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    for &k in &ks {
        let hits: Vec<usize> = judged.iter().map(|j| j.hits(k)).collect();
        let aps: Vec<f64> = judged.iter().map(|j| j.ap(k, cfg.normalizer)).collect();
        for (j, &ap) in judged.iter().zip(&aps) {
            per_query_ap
                .entry(j.query.to_string())
                .or_default()
                .insert(k, ap);
        }
        per_k.insert(
            k,
            KMetrics {
                precision: mean(hits.iter().map(|&h| h as f64 / k as f64), n),
                recall: mean(
                    judged
                        .iter()
                        .zip(&hits)
                        .map(|(j, &h)| h as f64 / j.n_relevant as f64),
                    n,
                ),
                map: mean(aps.iter().copied(), n),
                hits: hits.iter().map(|&h| h as u64).sum(),
            },
        );
    }
    Ok(MetricsReport {
        ks,
        per_k,
        n_queries: n,
        per_query_ap,
    })
}

impl MetricsReport {
    /// Flat object keyed `precision@10`, `recall@15`, `map@20`, ...
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert("n_queries".into(), self.n_queries.into());
        obj.insert("ks".into(), self.ks.clone().into());
        for (k, m) in &self.per_k {
            obj.insert(format!("precision@{k}"), m.precision.into());
            obj.insert(format!("recall@{k}"), m.recall.into());
            obj.insert(format!("map@{k}"), m.map.into());
            obj.insert(format!("hits@{k}"), m.hits.into());
        }
        serde_json::Value::Object(obj)
    }

    /// Reads back the object written by [`MetricsReport::to_json`];
    /// per-query APs are not part of it.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let bad =
            |what: &str| Error::config(format!("metrics report: missing or invalid `{what}`"));
        let n_queries = value["n_queries"]
            .as_u64()
            .ok_or_else(|| bad("n_queries"))? as usize;
        let ks: Vec<usize> = serde_json::from_value(value["ks"].clone()).map_err(|_| bad("ks"))?;
        let mut per_k = BTreeMap::new();
        for &k in &ks {
            let num = |name: &str| {
                let key = format!("{name}@{k}");
                value[&key].as_f64().ok_or_else(|| bad(&key))
            };
            per_k.insert(
                k,
                KMetrics {
                    precision: num("precision")?,
                    recall: num("recall")?,
                    map: num("map")?,
                    hits: value[&format!("hits@{k}")]
                        .as_u64()
                        .ok_or_else(|| bad("hits"))?,
                },
            );
        }
        Ok(MetricsReport {
            ks,
            per_k,
            n_queries,
            per_query_ap: BTreeMap::new(),
        })
    }

    /// `<query_id>\t<ap>` lines at cutoff `k`.
    pub fn write_per_query_ap<W: Write>(&self, k: usize, mut out: W) -> Result<()> {
        for (q, aps) in &self.per_query_ap {
            let ap = aps
                .get(&k)
                .ok_or_else(|| Error::config(format!("k = {k} was not evaluated")))?;
            writeln!(out, "{q}\t{ap}")?;
        }
        out.flush()?;
        Ok(())
    }
}

impl std::fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "queries: {}", self.n_queries)?;
        writeln!(f, "{:>5} {:>10} {:>10} {:>10}", "k", "P@k", "R@k", "MAP@k")?;
        for (k, m) in &self.per_k {
            writeln!(
                f,
                "{k:>5} {:>10.4} {:>10.4} {:>10.4}",
                m.precision, m.recall, m.map
            )?;
        }
        Ok(())
    }
}
