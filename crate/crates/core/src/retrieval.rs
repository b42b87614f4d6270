//! Exact cosine top-k retrieval over dense and sparse candidate sets.
//!
//! Ties are broken by ascending candidate id, so every ranking is total and
//! independent of candidate storage order.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::text::SparseVector;

/// `a·b / (‖a‖‖b‖)` clamped to [-1, 1]; 0 when either norm is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine of vectors with different lengths");
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    scaled(dot, na.sqrt(), nb.sqrt())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scaled(dot: f64, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    /// `(candidate id, score)`, best first.
    pub items: Vec<(String, f64)>,
    /// Set when fewer than `k` candidates existed.
    pub truncated: bool,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(id, _)| id.as_str())
    }
}

/// Sorts `(position, score)` pairs best-first and keeps `k`.
fn top_k(mut scored: Vec<(usize, f64)>, k: usize, ids: &[String]) -> Vec<(usize, f64)> {
    let cmp = |a: &(usize, f64), b: &(usize, f64)| {
        b.1.total_cmp(&a.1).then_with(|| ids[a.0].cmp(&ids[b.0]))
    };
    if k < scored.len() {
        scored.select_nth_unstable_by(k, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    scored
}

fn to_list(query_id: &str, top: Vec<(usize, f64)>, ids: &[String], k: usize) -> RankedList {
    RankedList {
        query_id: query_id.to_string(),
        truncated: top.len() < k,
        items: top.into_iter().map(|(i, s)| (ids[i].clone(), s)).collect(),
    }
}

/// Exact top-k search over a fixed candidate set.
pub trait NeighborSearch: Sync {
    type Query: ?Sized + Sync;

    fn candidate_ids(&self) -> &[String];

    /// Top-k `(candidate position, cosine)` pairs, best first.
    fn top_k(&self, query: &Self::Query, k: usize) -> Result<Vec<(usize, f64)>>;

    fn rank(&self, query_id: &str, query: &Self::Query, k: usize) -> Result<RankedList> {
        let top = self.top_k(query, k)?;
        Ok(to_list(query_id, top, self.candidate_ids(), k))
    }
}

/// Brute-force index over a dense table with precomputed norms.
#[derive(Debug, Clone)]
pub struct DenseIndex<'a> {
    table: &'a EmbeddingTable,
    norms: Vec<f64>,
}

impl<'a> DenseIndex<'a> {
    pub fn new(table: &'a EmbeddingTable) -> Self {
        let norms = (0..table.len()).map(|i| norm(table.row(i))).collect();
        DenseIndex { table, norms }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn table(&self) -> &'a EmbeddingTable {
        self.table
    }

    /// Ranks every row of `queries`, in query order.
    pub fn rank_all(&self, queries: &EmbeddingTable, k: usize) -> Result<Vec<RankedList>> {
        (0..queries.len())
            .into_par_iter()
            .map(|i| self.rank(&queries.ids()[i], queries.row(i), k))
            .collect()
    }
}

impl NeighborSearch for DenseIndex<'_> {
    type Query = [f64];

    fn candidate_ids(&self) -> &[String] {
        self.table.ids()
    }

    fn top_k(&self, query: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        if query.len() != self.table.dim() {
            return Err(Error::dim(self.table.dim(), query.len(), "query vector"));
        }
        if k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        let qn = norm(query);
        let scored = (0..self.table.len())
            .map(|i| (i, scaled(dot(query, self.table.row(i)), qn, self.norms[i])))
            .collect();
        Ok(top_k(scored, k, self.table.ids()))
    }
}

/// Ranks `candidates` by cosine to `query`.
pub fn rank(query: &[f64], candidates: &EmbeddingTable, k: usize) -> Result<RankedList> {
    DenseIndex::new(candidates).rank("", query, k)
}

/// Inverted index over sparse TF-IDF vectors.
#[derive(Debug, Clone)]
pub struct SparseIndex {
    ids: Vec<String>,
    norms: Vec<f64>,
    dim: usize,
    postings: Vec<Vec<(u32, f64)>>,
}

impl SparseIndex {
    pub fn new(dim: usize, docs: Vec<(String, SparseVector)>) -> Result<Self> {
        let mut postings = vec![Vec::new(); dim];
        let mut ids = Vec::with_capacity(docs.len());
        let mut norms = Vec::with_capacity(docs.len());
        let mut seen = HashMap::with_capacity(docs.len());
        for (pos, (id, v)) in docs.into_iter().enumerate() {
            if v.dim() != dim {
                return Err(Error::dim(dim, v.dim(), format!("sparse vector `{id}`")));
            }
            if seen.insert(id.clone(), pos).is_some() {
                return Err(Error::config(format!("duplicate candidate id `{id}`")));
            }
            for &(t, w) in v.entries() {
                postings[t].push((pos as u32, w));
            }
            norms.push(v.norm());
            ids.push(id);
        }
        Ok(SparseIndex {
            ids,
            norms,
            dim,
            postings,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rank_all(
        &self,
        queries: &[(String, SparseVector)],
        k: usize,
    ) -> Result<Vec<RankedList>> {
        queries
            .par_iter()
            .map(|(id, q)| self.rank(id, q, k))
            .collect()
    }
}

impl NeighborSearch for SparseIndex {
    type Query = SparseVector;

    fn candidate_ids(&self) -> &[String] {
        &self.ids
    }

    fn top_k(&self, query: &SparseVector, k: usize) -> Result<Vec<(usize, f64)>> {
        if query.dim() != self.dim {
            return Err(Error::dim(self.dim, query.dim(), "sparse query"));
        }
        if k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        let mut dots = vec![0.0; self.ids.len()];
        for &(t, w) in query.entries() {
            for &(d, x) in &self.postings[t] {
                dots[d as usize] += w * x;
            }
        }
        let qn = query.norm();
        let scored = dots
            .into_iter()
            .enumerate()
            .map(|(i, d)| (i, scaled(d, qn, self.norms[i])))
            .collect();
        Ok(top_k(scored, k, &self.ids))
    }
}

/// Fails if any query id is also a candidate.
pub fn ensure_disjoint<'a>(
    queries: impl IntoIterator<Item = &'a str>,
    is_candidate: impl Fn(&str) -> bool,
) -> Result<()> {
    for q in queries {
        if is_candidate(q) {
            return Err(Error::config(format!("query `{q}` is also a candidate")));
        }
    }
    Ok(())
}

/// `<query>\t<cand>:<score> ...`, six decimals.
pub fn write_recommendations<W: Write>(lists: &[RankedList], mut out: W) -> Result<()> {
    for list in lists {
        write!(out, "{}\t", list.query_id)?;
        for (j, (id, score)) in list.items.iter().enumerate() {
            if j > 0 {
                out.write_all(b" ")?;
            }
            write!(out, "{id}:{score:.6}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_recommendations<R: BufRead>(reader: R, source: &str) -> Result<Vec<RankedList>> {
    let mut lists = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fail = |message: String| Error::Format {
            path: source.to_string(),
            line: n + 1,
            message,
        };
        let (query, rest) = line
            .split_once('\t')
            .ok_or_else(|| fail("expected `<query>\\t<items>`".into()))?;
        let mut items = Vec::new();
        for tok in rest.split(' ').filter(|t| !t.is_empty()) {
            let (id, score) = tok
                .rsplit_once(':')
                .ok_or_else(|| fail(format!("item `{tok}` lacks a score")))?;
            let score: f64 = score
                .parse()
                .map_err(|_| fail(format!("bad score in `{tok}`")))?;
            items.push((id.to_string(), score));
        }
        lists.push(RankedList {
            query_id: query.to_string(),
            items,
            truncated: false,
        });
    }
    Ok(lists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(rows: &[(&str, &[f64])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(rows[0].1.len());
        for (id, v) in rows {
            t.push(*id, v).unwrap();
        }
        t
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[0.3, 0.4], &[0.3, 0.4]), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]), -1.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn query_equal_to_candidate_ranks_first() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.6, 0.8]), ("c", &[0.0, 1.0])]);
        let r = rank(&[0.6, 0.8], &t, 2).unwrap();
        assert_eq!(r.items[0].0, "b");
        assert_eq!(r.items[0].1, 1.0);
        assert!(!r.truncated);
    }

    #[test]
    fn top3_of_five_matches_exhaustive_sort() {
        let t = table(&[
            ("e", &[1.0, 1.0]),
            ("d", &[2.0, 0.0]),
            ("c", &[0.0, 3.0]),
            ("b", &[1.0, 2.0]),
            ("a", &[-1.0, 1.0]),
        ]);
        let q = [1.0, 0.5];
        let mut oracle: Vec<(String, f64)> = t
            .iter()
            .map(|(id, v)| (id.to_string(), cosine(&q, v)))
            .collect();
        oracle.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
        let r = rank(&q, &t, 3).unwrap();
        assert_eq!(r.items, oracle[..3].to_vec());
        assert_eq!(r.ids().collect::<Vec<_>>(), ["e", "d", "b"]);
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let t = table(&[("z", &[1.0, 0.0]), ("m", &[2.0, 0.0]), ("a", &[3.0, 0.0])]);
        let r = rank(&[1.0, 0.0], &t, 3).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), ["a", "m", "z"]);
    }

    #[test]
    fn oversized_k_is_flagged() {
        let t = table(&[("a", &[1.0]), ("b", &[2.0])]);
        let r = rank(&[1.0], &t, 5).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.truncated);
        assert!(rank(&[1.0, 2.0], &t, 1).is_err());
        assert!(rank(&[1.0], &t, 0).is_err());
    }

    #[test]
    fn zero_vectors_rank_last() {
        let t = table(&[("a", &[0.0, 0.0]), ("b", &[-1.0, 0.0]), ("c", &[0.0, 1.0])]);
        let r = rank(&[0.0, 1.0], &t, 3).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), ["c", "a", "b"]);
    }

    #[test]
    fn sparse_matches_dense() {
        let docs = [
            ("a", vec![(0, 1.0), (2, 2.0)]),
            ("b", vec![(1, 1.5)]),
            ("c", vec![]),
            ("d", vec![(0, 0.5), (1, 0.5), (2, 0.5)]),
        ];
        let sparse: Vec<(String, SparseVector)> = docs
            .iter()
            .map(|(id, e)| (id.to_string(), SparseVector::new(3, e.clone()).unwrap()))
            .collect();
        let dense = {
            let mut t = EmbeddingTable::new(3);
            for (id, v) in &sparse {
                t.push(id.as_str(), &v.to_dense()).unwrap();
            }
            t
        };
        let idx = SparseIndex::new(3, sparse).unwrap();
        let q = SparseVector::new(3, vec![(0, 1.0), (1, 0.2)]).unwrap();
        let s = idx.rank("q", &q, 4).unwrap();
        let d = DenseIndex::new(&dense).rank("q", &q.to_dense(), 4).unwrap();
        assert_eq!(s.ids().collect::<Vec<_>>(), d.ids().collect::<Vec<_>>());
        for (x, y) in s.items.iter().zip(&d.items) {
            assert!((x.1 - y.1).abs() < 1e-12);
        }
    }

    #[test]
    fn recommendations_round_trip() {
        let lists = vec![RankedList {
            query_id: "q1".into(),
            items: vec![("a".into(), 0.9), ("b:x".into(), -0.25)],
            truncated: false,
        }];
        let mut buf = Vec::new();
        write_recommendations(&lists, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "q1\ta:0.900000 b:x:-0.250000\n"
        );
        assert_eq!(read_recommendations(&buf[..], "mem").unwrap(), lists);
        assert!(read_recommendations(&b"q\ta\n"[..], "mem").is_err());
    }

    #[test]
    fn disjointness() {
        assert!(ensure_disjoint(["x"], |c| c == "a").is_ok());
        assert!(ensure_disjoint(["a"], |c| c == "a").is_err());
    }

    fn candidates() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
        (1usize..5).prop_flat_map(|dim| {
            (
                prop::collection::vec(prop::collection::vec(-3i32..4, dim), 1..12),
                prop::collection::vec(-3i32..4, dim),
            )
                .prop_map(|(rows, q)| {
                    let f = |v: Vec<i32>| v.into_iter().map(f64::from).collect::<Vec<_>>();
                    (rows.into_iter().map(f).collect(), f(q))
                })
        })
    }

    fn build(rows: &[Vec<f64>], order: impl Iterator<Item = usize>) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(rows[0].len());
        for i in order {
            t.push(format!("c{i:02}"), &rows[i]).unwrap();
        }
        t
    }

    proptest! {
        #[test]
        fn prefix_property((rows, q) in candidates(), k in 1usize..12, extra in 0usize..6) {
            let t = build(&rows, 0..rows.len());
            let short = rank(&q, &t, k).unwrap();
            let long = rank(&q, &t, k + extra).unwrap();
            prop_assert_eq!(&long.items[..short.len()], &short.items[..]);
        }

        #[test]
        fn positive_scaling_preserves_order((rows, q) in candidates(), e in -8i32..9) {
            // powers of two scale exactly, so near-ties cannot flip by rounding
            let s = 2f64.powi(e);
            let t = build(&rows, 0..rows.len());
            let scaled_q: Vec<f64> = q.iter().map(|v| v * s).collect();
            let a = rank(&q, &t, rows.len()).unwrap();
            let b = rank(&scaled_q, &t, rows.len()).unwrap();
            prop_assert_eq!(a.ids().collect::<Vec<_>>(), b.ids().collect::<Vec<_>>());
        }

        #[test]
        fn candidate_scaling_preserves_order((rows, q) in candidates(), pick in 0usize..12, e in -8i32..9) {
            let mut scaled_rows = rows.clone();
            let i = pick % rows.len();
            scaled_rows[i].iter_mut().for_each(|v| *v *= 2f64.powi(e));
            let a = rank(&q, &build(&rows, 0..rows.len()), rows.len()).unwrap();
            let b = rank(&q, &build(&scaled_rows, 0..rows.len()), rows.len()).unwrap();
            prop_assert_eq!(a.ids().collect::<Vec<_>>(), b.ids().collect::<Vec<_>>());
        }

        #[test]
        fn independent_of_storage_order((rows, q) in candidates()) {
            let fwd = build(&rows, 0..rows.len());
            let rev = build(&rows, (0..rows.len()).rev());
            prop_assert_eq!(rank(&q, &fwd, rows.len()).unwrap(), rank(&q, &rev, rows.len()).unwrap());
        }

        #[test]
        fn scores_are_bounded_and_sorted((rows, q) in candidates()) {
            let t = build(&rows, 0..rows.len());
            let r = rank(&q, &t, rows.len()).unwrap();
            prop_assert!(r.items.iter().all(|(_, s)| (-1.0..=1.0).contains(s)));
            prop_assert!(r.items.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }
}
