//! Paper metadata, pruning, and the temporal train/test split.
//!
//! Corpus files are line-delimited JSON, one paper per line:
//!
//! ```text
//! {"id": "p1", "title": "...", "abstract": "...", "year": 2011, "references": ["p0"]}
//! ```
//!
//! Extra keys (`authors`, `venue`, `n_citation`, ...) are accepted and ignored.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paper {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub year: i32,
    /// Outgoing citations, sorted and deduplicated. Never contains `id`.
    pub references: Vec<String>,
}

impl Paper {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        abstract_text: impl Into<String>,
        year: i32,
        references: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        let id = id.into();
        let mut refs: Vec<String> = references.into_iter().map(Into::into).collect();
        refs.sort();
        refs.dedup();
        refs.retain(|r| *r != id);
        Paper {
            id,
            title: title.into(),
            abstract_text: abstract_text.into(),
            year,
            references: refs,
        }
    }

    /// Title and abstract joined by a single space.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.abstract_text)
    }
}

/// Id-indexed paper collection. Iteration order is ascending id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    papers: BTreeMap<String, Paper>,
    edge_count: usize,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_papers(papers: impl IntoIterator<Item = Paper>) -> Self {
        let papers: BTreeMap<String, Paper> =
            papers.into_iter().map(|p| (p.id.clone(), p)).collect();
        let mut corpus = Corpus {
            papers,
            edge_count: 0,
        };
        corpus.recount_edges();
        corpus
    }

    fn recount_edges(&mut self) {
        let papers = &self.papers;
        self.edge_count = papers
            .values()
            .map(|p| {
                p.references
                    .iter()
                    .filter(|r| papers.contains_key(*r))
                    .count()
            })
            .sum();
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    /// Number of (citing, cited) pairs with both endpoints in the corpus.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn get(&self, id: &str) -> Option<&Paper> {
        self.papers.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.papers.contains_key(id)
    }

    pub fn papers(&self) -> impl Iterator<Item = &Paper> {
        self.papers.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.papers.keys().map(String::as_str)
    }

    /// Drops every reference whose target is not in the corpus.
    pub fn restrict_references(&mut self) {
        let ids: BTreeSet<String> = self.papers.keys().cloned().collect();
        for paper in self.papers.values_mut() {
            paper.references.retain(|r| ids.contains(r));
        }
        self.recount_edges();
    }

    /// Writes the corpus in the line-delimited format read by [`parse_corpus`].
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for paper in self.papers.values() {
            serde_json::to_writer(&mut out, paper).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// In-degree counted over citations from papers inside the corpus.
    fn in_degrees(&self) -> HashMap<&str, usize> {
        let mut deg: HashMap<&str, usize> = HashMap::with_capacity(self.papers.len());
        for paper in self.papers.values() {
            for r in &paper.references {
                if let Some((key, _)) = self.papers.get_key_value(r) {
                    *deg.entry(key.as_str()).or_default() += 1;
                }
            }
        }
        deg
    }

    fn out_degree(&self, paper: &Paper) -> usize {
        paper
            .references
            .iter()
            .filter(|r| self.papers.contains_key(*r))
            .count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseIssue {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub accepted: usize,
    /// Records missing a required field (or carrying an empty one).
    pub incomplete: usize,
    /// Later records whose id was already seen; the first one wins.
    pub duplicates: usize,
    pub malformed: Vec<ParseIssue>,
}

impl ParseReport {
    pub fn rejected(&self) -> usize {
        self.incomplete + self.duplicates + self.malformed.len()
    }
}

impl std::fmt::Display for ParseReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "accepted {} records, rejected {} (incomplete {}, duplicate {}, malformed {})",
            self.accepted,
            self.rejected(),
            self.incomplete,
            self.duplicates,
            self.malformed.len()
        )
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    title: Option<String>,
    #[serde(rename = "abstract")]
    abstract_text: Option<String>,
    year: Option<i64>,
    references: Option<Vec<String>>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.trim().is_empty())
}

/// Parses a line-delimited corpus stream.
///
/// Incomplete records (a required key absent, null, or an empty string) are
/// excluded and counted. Lines that are not valid JSON objects are recorded
/// with their 1-based line number. Blank lines are skipped. Only an I/O
/// failure of the underlying reader is an error.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<(Corpus, ParseReport)> {
    let mut report = ParseReport::default();
    let mut papers: BTreeMap<String, Paper> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(e) => {
                report.malformed.push(ParseIssue {
                    line: lineno,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let year = match raw.year.map(i32::try_from) {
            Some(Ok(y)) => Some(y),
            Some(Err(_)) => {
                report.malformed.push(ParseIssue {
                    line: lineno,
                    message: "year out of range".into(),
                });
                continue;
            }
            None => None,
        };
        let (Some(id), Some(title), Some(abstract_text), Some(year), Some(references)) = (
            non_empty(raw.id),
            non_empty(raw.title),
            non_empty(raw.abstract_text),
            year,
            raw.references,
        ) else {
            report.incomplete += 1;
            continue;
        };
        if papers.contains_key(&id) {
            report.duplicates += 1;
            continue;
        }
        papers.insert(
            id.clone(),
            Paper::new(id, title, abstract_text, year, references),
        );
        report.accepted += 1;
    }
    Ok((Corpus::from_papers(papers.into_values()), report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    pub min_in: usize,
    pub min_out: usize,
    /// Repeat the filter until no paper is removed.
    pub iterate: bool,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            min_in: 15,
            min_out: 20,
            iterate: false,
        }
    }
}

/// Removes papers with fewer than `min_in` incoming or `min_out` outgoing
/// in-corpus citations.
///
/// Degrees are measured on the input corpus, then all failing papers are
/// removed at once and surviving reference lists are restricted to surviving
/// ids. With `iterate` set the pass repeats until it removes nothing.
pub fn prune(corpus: &Corpus, cfg: &PruneConfig) -> Corpus {
    let mut current = prune_once(corpus, cfg);
    if cfg.iterate {
        loop {
            let next = prune_once(&current, cfg);
            if next.len() == current.len() {
                break;
            }
            current = next;
        }
    }
    current
}

fn prune_once(corpus: &Corpus, cfg: &PruneConfig) -> Corpus {
    let in_deg = corpus.in_degrees();
    let survivors = corpus.papers().filter(|p| {
        in_deg.get(p.id.as_str()).copied().unwrap_or(0) >= cfg.min_in
            && corpus.out_degree(p) >= cfg.min_out
    });
    let mut pruned = Corpus::from_papers(survivors.cloned());
    pruned.restrict_references();
    pruned
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_end: i32,
    pub test_start: i32,
    pub test_end: i32,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_end: 2013,
            test_start: 2014,
            test_end: 2017,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_end < self.test_start && self.test_start <= self.test_end {
            Ok(())
        } else {
            Err(crate::Error::config(format!(
                "split years must satisfy train_end < test_start <= test_end, got {} / {} / {}",
                self.train_end, self.test_start, self.test_end
            )))
        }
    }
}

/// Ground truth: test paper id -> cited train paper ids (never empty).
pub type GroundTruth = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitCorpus {
    pub train: Corpus,
    pub test: Corpus,
    pub ground_truth: GroundTruth,
}

/// Splits by publication year.
///
/// Train papers keep only references to other train papers. Test papers are
/// kept only if they cite at least one train paper; those citations form
/// the ground truth. Papers outside both year ranges are dropped.
pub fn temporal_split(corpus: &Corpus, cfg: &SplitConfig) -> Result<SplitCorpus> {
    cfg.validate()?;
    let mut train =
        Corpus::from_papers(corpus.papers().filter(|p| p.year <= cfg.train_end).cloned());
    train.restrict_references();

    let mut ground_truth = GroundTruth::new();
    let mut test_papers = Vec::new();
    for paper in corpus
        .papers()
        .filter(|p| (cfg.test_start..=cfg.test_end).contains(&p.year))
    {
        let truth: BTreeSet<String> = paper
            .references
            .iter()
            .filter(|r| train.contains(r))
            .cloned()
            .collect();
        if truth.is_empty() {
            continue;
        }
        ground_truth.insert(paper.id.clone(), truth);
        test_papers.push(paper.clone());
    }
    Ok(SplitCorpus {
        train,
        test: Corpus::from_papers(test_papers),
        ground_truth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub papers: usize,
    pub citations: usize,
    /// `citations / papers`, or 0 for an empty partition.
    pub avg_citations: f64,
    pub min_year: Option<i32>,
    pub max_year: Option<i32>,
}

impl PartitionStats {
    fn new<'a>(papers: impl Iterator<Item = &'a Paper>, citations: usize) -> Self {
        let mut count = 0;
        let mut min_year = None;
        let mut max_year = None;
        for p in papers {
            count += 1;
            min_year = Some(min_year.map_or(p.year, |y: i32| y.min(p.year)));
            max_year = Some(max_year.map_or(p.year, |y: i32| y.max(p.year)));
        }
        PartitionStats {
            papers: count,
            citations,
            avg_citations: if count == 0 {
                0.0
            } else {
                citations as f64 / count as f64
            },
            min_year,
            max_year,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub train: PartitionStats,
    /// Test citations are ground-truth links into the training set.
    pub test: PartitionStats,
}

pub fn corpus_stats(split: &SplitCorpus) -> StatsReport {
    let truth_links = split.ground_truth.values().map(BTreeSet::len).sum();
    StatsReport {
        train: PartitionStats::new(split.train.papers(), split.train.edge_count()),
        test: PartitionStats::new(split.test.papers(), truth_links),
    }
}

pub fn partition_stats(corpus: &Corpus) -> PartitionStats {
    PartitionStats::new(corpus.papers(), corpus.edge_count())
}

/// Ground truth as `<test_id>\t<train_id> <train_id> ...` lines.
pub fn write_ground_truth<W: Write>(truth: &GroundTruth, mut out: W) -> Result<()> {
    for (q, refs) in truth {
        let joined: Vec<&str> = refs.iter().map(String::as_str).collect();
        writeln!(out, "{q}\t{}", joined.join(" "))?;
    }
    Ok(())
}

pub fn read_ground_truth<R: BufRead>(reader: R, path: &str) -> Result<GroundTruth> {
    let mut truth = GroundTruth::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let Some((q, refs)) = line.split_once('\t') else {
            return Err(crate::Error::Format {
                path: path.to_string(),
                line: idx + 1,
                message: "expected `<id>\\t<ids>`".into(),
            });
        };
        let set: BTreeSet<String> = refs.split_whitespace().map(str::to_string).collect();
        if set.is_empty() {
            return Err(crate::Error::Format {
                path: path.to_string(),
                line: idx + 1,
                message: format!("empty ground truth for `{q}`"),
            });
        }
        truth.insert(q.to_string(), set);
    }
    Ok(truth)
}
