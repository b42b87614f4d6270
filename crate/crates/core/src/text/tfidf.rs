use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::text::preprocess;

/// Terms kept after document-frequency filtering, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    term_index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    fn from_sorted(entries: Vec<(String, usize)>, n_docs: usize) -> Self {
        let term_index = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        let (terms, doc_freq) = entries.into_iter().unzip();
        Vocabulary {
            terms,
            term_index,
            doc_freq,
            n_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index(&self, term: &str) -> Option<usize> {
        self.term_index.get(term).copied()
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.index(term).map(|i| self.doc_freq[i])
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

/// Sparse vector with strictly increasing indices and no zero weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Sorts, merges duplicate indices and drops zeros.
    pub fn new(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            if i >= dim {
                return Err(Error::dim(dim, i + 1, "sparse index out of range"));
            }
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += w,
                _ => merged.push((i, w)),
            }
        }
        merged.retain(|&(_, w)| w != 0.0);
        Ok(SparseVector {
            dim,
            entries: merged,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (
            self.entries.iter().peekable(),
            other.entries.iter().peekable(),
        );
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            v[i] = w;
        }
        v
    }
}

/// TF-IDF weights: `(1 + ln count) * ln(N / df)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocab: Vocabulary,
    idf: Vec<f64>,
}

/// Fits a vocabulary on training documents, keeping terms whose document
/// frequency is at least `min_df`.
pub fn fit_tfidf<'a, I>(docs: I, min_df: usize) -> Result<TfidfModel>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    let mut n_docs = 0;
    for doc in docs {
        n_docs += 1;
        let unique: HashSet<String> = preprocess(doc).into_iter().collect();
        for term in unique {
            *df.entry(term).or_default() += 1;
        }
    }
    if n_docs == 0 {
        return Err(Error::Empty("no training documents"));
    }
    let kept: Vec<(String, usize)> = df.into_iter().filter(|&(_, c)| c >= min_df).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary { min_df });
    }
    Ok(TfidfModel::from_vocabulary(Vocabulary::from_sorted(
        kept, n_docs,
    )))
}

impl TfidfModel {
    fn from_vocabulary(vocab: Vocabulary) -> Self {
        let n = vocab.n_docs as f64;
        let idf = vocab
            .doc_freq
            .iter()
            .map(|&df| (n / df as f64).ln())
            .collect();
        TfidfModel { vocab, idf }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.vocab.len()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocab.index(term).map(|i| self.idf[i])
    }

    /// Keeps the `max` most frequent terms (ties by term order). IDF values
    /// of kept terms are unchanged.
    pub fn limit_features(self, max: usize) -> Result<Self> {
        if max == 0 {
            return Err(Error::config("max_features must be at least 1"));
        }
        if max >= self.dim() {
            return Ok(self);
        }
        let v = self.vocab;
        let mut order: Vec<usize> = (0..v.terms.len()).collect();
        order.sort_by(|&a, &b| v.doc_freq[b].cmp(&v.doc_freq[a]).then(a.cmp(&b)));
        order.truncate(max);
        order.sort_unstable();
        let kept = order
            .into_iter()
            .map(|i| (v.terms[i].clone(), v.doc_freq[i]))
            .collect();
        Ok(TfidfModel::from_vocabulary(Vocabulary::from_sorted(
            kept, v.n_docs,
        )))
    }

    /// Unnormalized TF-IDF vector of a raw document.
    pub fn embed(&self, doc: &str) -> SparseVector {
        let mut counts: HashMap<usize, u32> = HashMap::new();
        for term in preprocess(doc) {
            if let Some(i) = self.vocab.index(&term) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let entries = counts
            .into_iter()
            .map(|(i, c)| (i, (1.0 + f64::from(c).ln()) * self.idf[i]))
            .collect();
        SparseVector::new(self.dim(), entries).expect("indices come from the vocabulary")
    }

    /// `<N>` header line, then `<term>\t<df>` per term.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.vocab.n_docs)?;
        for (term, df) in self.vocab.terms.iter().zip(&self.vocab.doc_freq) {
            writeln!(out, "{term}\t{df}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let fail = |line: usize, message: String| Error::Format {
            path: source.to_string(),
            line,
            message,
        };
        let mut lines = reader.lines();
        let n_docs: usize = match lines.next() {
            Some(l) => {
                let l = l?;
                l.trim()
                    .parse()
                    .map_err(|_| fail(1, format!("bad document count {l:?}")))?
            }
            None => return Err(fail(1, "missing document count".into())),
        };
        let mut entries: Vec<(String, usize)> = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let lineno = idx + 2;
            if line.is_empty() {
                continue;
            }
            let (term, df) = line
                .split_once('\t')
                .ok_or_else(|| fail(lineno, "expected `<term>\\t<df>`".into()))?;
            let df: usize = df
                .parse()
                .map_err(|_| fail(lineno, format!("bad df {df:?}")))?;
            if df == 0 || df > n_docs {
                return Err(fail(lineno, format!("df {df} outside 1..={n_docs}")));
            }
            if let Some((prev, _)) = entries.last() {
                if prev.as_str() >= term {
                    return Err(fail(lineno, "terms must be strictly increasing".into()));
                }
            }
            entries.push((term.to_string(), df));
        }
        Ok(Self::from_vocabulary(Vocabulary::from_sorted(
            entries, n_docs,
        )))
    }
}
