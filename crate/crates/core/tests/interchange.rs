//! Loading text embeddings written by the exporter and running the
//! pipeline on them.

use std::io::Write;

use citefuse_core::config::{FusionMethod, RunConfig, TextModel, View};
use citefuse_core::corpus::{Corpus, Paper};
use citefuse_core::embedding::{read_embeddings, EmbeddingTable};
use citefuse_core::pipeline;

/// Float text as Python's `repr` would print it.
fn py_float(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains('e') && !s.contains("e-") {
        s.replace('e', "e+")
    } else {
        s
    }
}

#[test]
fn exporter_header_and_rows() {
    let mut text = String::from("3 768\n");
    for (i, id) in ["a", "b", "c"].iter().enumerate() {
        let row: Vec<String> = (0..768)
            .map(|j| py_float((i * 768 + j) as f64 * 1e-3 - 0.5))
            .collect();
        text.push_str(&format!("{id}\t{}\n", row.join(" ")));
    }
    let table = read_embeddings(text.as_bytes(), "export").unwrap();
    assert_eq!((table.len(), table.dim()), (3, 768));
    assert_eq!(table.get("b").unwrap()[0], 768.0 * 1e-3 - 0.5);

    let mut out = Vec::new();
    table.write(&mut out).unwrap();
    assert_eq!(read_embeddings(out.as_slice(), "again").unwrap(), table);
}

#[test]
fn exponent_notation_is_accepted() {
    let table = read_embeddings("1 3\nx\t1e-05 -2.5E+3 0\n".as_bytes(), "t").unwrap();
    assert_eq!(table.get("x").unwrap(), &[1e-5, -2500.0, 0.0]);
}

fn corpus() -> Corpus {
    let mut papers = Vec::new();
    for i in 0..60usize {
        let topic = i % 3;
        let refs: Vec<String> = (0..i)
            .filter(|j| j % 3 == topic)
            .map(|j| format!("p{j:02}"))
            .collect();
        papers.push(Paper::new(
            format!("p{i:02}"),
            "title",
            "abstract",
            2000 + (i / 4) as i32,
            refs,
        ));
    }
    Corpus::from_papers(papers)
}

/// Topic direction plus a little per-paper jitter.
fn external(corpus: &Corpus) -> EmbeddingTable {
    let mut t = EmbeddingTable::new(6);
    for (i, id) in corpus.ids().enumerate() {
        let topic = i % 3;
        let v: Vec<f64> = (0..6)
            .map(|j| if j / 2 == topic { 1.0 } else { 0.0 } + ((i * 7 + j * 3) % 11) as f64 * 0.01)
            .collect();
        t.push(id, &v).unwrap();
    }
    t
}

fn cfg() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.seed = 1;
    cfg.deterministic = true;
    cfg.prune.min_in = 0;
    cfg.prune.min_out = 0;
    cfg.split.train_end = 2010;
    cfg.split.test_start = 2011;
    cfg.text.model = TextModel::External;
    cfg.text.external_path = Some("unused".into());
    cfg.graph.walks_per_node = 5;
    cfg.graph.walk_length = 10;
    cfg.graph.dim = 8;
    cfg.fusion.method = FusionMethod::Cca;
    cfg.fusion.d = 4;
    cfg.eval.ks = vec![5];
    cfg
}

#[test]
fn pipeline_on_external_text() {
    let corpus = corpus();
    let table = external(&corpus);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("text.emb");
    let mut f = std::fs::File::create(&path).unwrap();
    table.write(&mut f).unwrap();
    f.flush().unwrap();
    let loaded = EmbeddingTable::load(&path).unwrap();

    let prepared = pipeline::prepare_corpus(&corpus, Default::default(), &cfg()).unwrap();
    let out = pipeline::run_prepared(prepared.clone(), &cfg(), Some(&loaded)).unwrap();
    let fused = out.fused.unwrap();
    assert_eq!(fused.train.dim(), 8, "projected concat of two 4-d views");
    let m = &out.metrics.per_k[&5];
    assert!(
        m.precision > 0.5,
        "topic-aligned text should find same-topic citations: {m:?}"
    );

    let mut text_only = cfg();
    text_only.retrieval.view = View::Text;
    let t = pipeline::run_prepared(prepared, &text_only, Some(&loaded)).unwrap();
    assert!(t.fused.is_none());
    assert_eq!(t.metrics.n_queries, out.metrics.n_queries);
}

#[test]
fn missing_papers_in_external_table_fail() {
    let corpus = corpus();
    let mut table = EmbeddingTable::new(6);
    table.push("p00", &[0.0; 6]).unwrap();
    let prepared = pipeline::prepare_corpus(&corpus, Default::default(), &cfg()).unwrap();
    assert!(pipeline::run_prepared(prepared, &cfg(), Some(&table)).is_err());
}
