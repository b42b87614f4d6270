use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use citefuse_core::config::{RunConfig, TextModel, View};
use citefuse_core::corpus::{parse_corpus, read_ground_truth, write_ground_truth, SplitCorpus};
use citefuse_core::embedding::EmbeddingTable;
use citefuse_core::evaluation::MetricsReport;
use citefuse_core::fusion::{read_model, write_model, FusionModel};
use citefuse_core::inference::NeighborEstimate;
use citefuse_core::pipeline::{self, Fused, TextViews, ALPHA_GRID, PQ_GRID};
use citefuse_core::retrieval::{read_recommendations, write_recommendations};
use citefuse_core::text::TfidfModel;
use serde_json::json;

use crate::workdir::{Stage, WorkDir};

const TRAIN: &str = "train.jsonl";
const TEST: &str = "test.jsonl";
const TRUTH: &str = "ground_truth.tsv";
const STATS: &str = "stats.json";
const VOCAB: &str = "tfidf.vocab";
const TEXT_TRAIN: &str = "text_train.emb";
const TEXT_TEST: &str = "text_test.emb";
const NODE_TRAIN: &str = "node_train.emb";
const NODE_TEST: &str = "node_test.emb";
const NEIGHBORS: &str = "neighbors.tsv";
const MODEL: &str = "fusion.model";
const FUSED_TRAIN: &str = "fused_train.emb";
const FUSED_TEST: &str = "fused_test.emb";
const RECS: &str = "recommendations.tsv";
const METRICS: &str = "metrics.json";

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub wd: WorkDir,
}

impl Ctx<'_> {
    fn table(&self, name: &str) -> Result<EmbeddingTable> {
        Ok(EmbeddingTable::load(self.wd.path(name))?)
    }

    fn save(&self, name: &str, table: &EmbeddingTable) -> Result<()> {
        let mut out = self.wd.create(name)?;
        table.write(&mut out)?;
        out.flush()?;
        Ok(())
    }

    fn split(&self) -> Result<SplitCorpus> {
        let (train, _) = parse_corpus(self.wd.open(TRAIN)?)?;
        let (test, _) = parse_corpus(self.wd.open(TEST)?)?;
        let truth = read_ground_truth(
            self.wd.open(TRUTH)?,
            &self.wd.path(TRUTH).display().to_string(),
        )?;
        Ok(SplitCorpus {
            train,
            test,
            ground_truth: truth,
        })
    }

    fn text_views(&self, split: &SplitCorpus) -> Result<TextViews> {
        if self.cfg.dense_text() {
            Ok(TextViews {
                train: pipeline::TextView::Dense(self.table(TEXT_TRAIN)?),
                test: pipeline::TextView::Dense(self.table(TEXT_TEST)?),
            })
        } else {
            let model = TfidfModel::read(self.wd.open(VOCAB)?, VOCAB)?;
            Ok(pipeline::tfidf_views(&model, split, self.cfg)?)
        }
    }

    fn model(&self) -> Result<Option<FusionModel>> {
        if !self.wd.exists(MODEL) {
            return Ok(None);
        }
        Ok(Some(read_model(self.wd.open(MODEL)?, MODEL)?))
    }

    fn fused(&self) -> Result<Option<Fused>> {
        if self.cfg.retrieval.view != View::Fused {
            return Ok(None);
        }
        Ok(Some(Fused {
            train: self.table(FUSED_TRAIN)?,
            test: self.table(FUSED_TEST)?,
        }))
    }
}

pub fn prepare(ctx: &Ctx) -> Result<()> {
    let started = Instant::now();
    let cfg = ctx.cfg;
    let path = &cfg.paths.corpus;
    let file =
        std::fs::File::open(path).with_context(|| format!("opening corpus {}", path.display()))?;
    let prepared = pipeline::prepare(std::io::BufReader::new(file), cfg)?;
    if prepared.parse.rejected() > 0 {
        log::warn!("{}", prepared.parse);
    }
    let split = &prepared.split;
    let mut out = ctx.wd.create(TRAIN)?;
    split.train.write_jsonl(&mut out)?;
    out.flush()?;
    let mut out = ctx.wd.create(TEST)?;
    split.test.write_jsonl(&mut out)?;
    out.flush()?;
    let mut out = ctx.wd.create(TRUTH)?;
    write_ground_truth(&split.ground_truth, &mut out)?;
    out.flush()?;

    let stats = json!({
        "parse": prepared.parse,
        "pruned": prepared.pruned,
        "train": prepared.stats.train,
        "test": prepared.stats.test,
    });
    let mut out = ctx.wd.create(STATS)?;
    serde_json::to_writer_pretty(&mut out, &stats)?;
    out.write_all(b"\n")?;
    out.flush()?;

    println!(
        "pruned: {} papers, {} citations\ntrain:  {} papers, {} citations\ntest:   {} papers, {} citations",
        prepared.pruned.papers,
        prepared.pruned.citations,
        prepared.stats.train.papers,
        prepared.stats.train.citations,
        prepared.stats.test.papers,
        prepared.stats.test.citations
    );
    ctx.wd.write_manifest(
        Stage::Prepare,
        cfg,
        vec![],
        &[TRAIN, TEST, TRUTH, STATS],
        started,
        stats,
    )
}

pub fn embed_text(ctx: &Ctx) -> Result<()> {
    let started = Instant::now();
    let cfg = ctx.cfg;
    let inputs = ctx.wd.check_inputs(Stage::EmbedText, cfg)?;
    let split = ctx.split()?;
    let mut outputs = Vec::new();
    let views = match cfg.text.model {
        TextModel::Tfidf => {
            let model = pipeline::fit_text_model(&split.train, cfg)?;
            let mut out = ctx.wd.create(VOCAB)?;
            model.write(&mut out)?;
            out.flush()?;
            outputs.push(VOCAB);
            log::info!("tf-idf vocabulary: {} terms", model.dim());
            pipeline::tfidf_views(&model, &split, cfg)?
        }
        TextModel::External => {
            let path = cfg
                .text
                .external_path
                .as_ref()
                .context("text.external_path is not set")?;
            let table = EmbeddingTable::load(path)?;
            pipeline::external_views(&table, &split)?
        }
    };
    if cfg.dense_text() {
        ctx.save(TEXT_TRAIN, views.train.dense()?)?;
        ctx.save(TEXT_TEST, views.test.dense()?)?;
        outputs.extend([TEXT_TRAIN, TEXT_TEST]);
    }
    let summary =
        json!({ "dim": views.train.dim(), "train": views.train.len(), "test": views.test.len() });
    ctx.wd
        .write_manifest(Stage::EmbedText, cfg, inputs, &outputs, started, summary)
}

pub fn embed_graph(ctx: &Ctx) -> Result<()> {
    let started = Instant::now();
    let cfg = ctx.cfg;
    let inputs = ctx.wd.check_inputs(Stage::EmbedGraph, cfg)?;
    let split = ctx.split()?;
    let node = pipeline::embed_graph(&split.train, cfg)?;
    ctx.save(NODE_TRAIN, &node)?;
    let summary = json!({ "nodes": node.len(), "dim": node.dim() });
    ctx.wd.write_manifest(
        Stage::EmbedGraph,
        cfg,
        inputs,
        &[NODE_TRAIN],
        started,
        summary,
    )
}

pub fn train_fusion(ctx: &Ctx) -> Result<()> {
    let started = Instant::now();
    let cfg = ctx.cfg;
    let inputs = ctx.wd.check_inputs(Stage::TrainFusion, cfg)?;
    if ctx.wd.exists(MODEL) {
        std::fs::remove_file(ctx.wd.path(MODEL))?;
    }
    let mut outputs = Vec::new();
    let mut summary = serde_json::Value::Null;
    if cfg.retrieval.view == View::Fused && cfg.fusion.trains_model() {
        let split = ctx.split()?;
        let text = ctx.text_views(&split)?;
        let node = ctx.table(NODE_TRAIN)?;
        let model = pipeline::train_fusion(text.train.dense()?, &node, cfg)?
            .context("fusion configuration trains no model")?;
        let mut out = ctx.wd.create(MODEL)?;
        write_model(&model, &mut out)?;
        out.flush()?;
        outputs.push(MODEL);
        summary = match &model {
            FusionModel::Cca(m) => {
                json!({ "method": "cca", "total_correlation": m.total_correlation() })
            }
            FusionModel::Dcca(m) => json!({ "method": "dcca", "train_log": m.train_log }),
        };
    } else {
        log::info!("no fusion model needed for this configuration");
    }
    ctx.wd
        .write_manifest(Stage::TrainFusion, cfg, inputs, &outputs, started, summary)
}

fn write_neighbors(ctx: &Ctx, estimates: &[NeighborEstimate]) -> Result<()> {
    let mut out = ctx.wd.create(NEIGHBORS)?;
    for e in estimates {
        write!(out, "{}\t", e.query_id)?;
        for (j, (id, s)) in e.neighbor_ids.iter().zip(&e.similarities).enumerate() {
            if j > 0 {
                out.write_all(b" ")?;
            }
            write!(out, "{id}:{s:.6}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn infer(ctx: &Ctx) -> Result<()> {
    let started = Instant::now();
    let cfg = ctx.cfg;
    let inputs = ctx.wd.check_inputs(Stage::Infer, cfg)?;
    let split = ctx.split()?;
    let text = ctx.text_views(&split)?;
    let train_node = ctx.table(NODE_TRAIN)?;
    let (test_node, estimates) = pipeline::estimate_test_nodes(&text, &train_node, cfg)?;
    ctx.save(NODE_TEST, &test_node)?;
    write_neighbors(ctx, &estimates)?;
    let mut outputs = vec![NODE_TEST, NEIGHBORS];
    if cfg.retrieval.view == View::Fused {
        let model = ctx.model()?;
        if cfg.fusion.trains_model() && model.is_none() {
            bail!("fusion model missing; rerun `train-fusion`");
        }
        let fused = pipeline::fuse_partitions(
            &text,
            &train_node,
            &test_node,
            model.as_ref(),
            cfg.fusion.strategy(),
        )?;
        ctx.save(FUSED_TRAIN, &fused.train)?;
        ctx.save(FUSED_TEST, &fused.test)?;
        outputs.extend([FUSED_TRAIN, FUSED_TEST]);
    }
    let summary = json!({ "test_papers": test_node.len(), "N": cfg.inference.n });
    ctx.wd
        .write_manifest(Stage::Infer, cfg, inputs, &outputs, started, summary)
}

pub fn rank(ctx: &Ctx) -> Result<()> {
    let started = Instant::now();
    let cfg = ctx.cfg;
    let inputs = ctx.wd.check_inputs(Stage::Rank, cfg)?;
    let split = ctx.split()?;
    // only the text view needs the text vectors here
    let text = if cfg.retrieval.view == View::Text {
        ctx.text_views(&split)?
    } else {
        TextViews {
            train: pipeline::TextView::Dense(EmbeddingTable::new(1)),
            test: pipeline::TextView::Dense(EmbeddingTable::new(1)),
        }
    };
    let train_node = ctx.table(NODE_TRAIN)?;
    let test_node = ctx.table(NODE_TEST)?;
    let fused = ctx.fused()?;
    let lists = pipeline::rank_view(
        cfg.retrieval.view,
        &text,
        &train_node,
        &test_node,
        fused.as_ref(),
        cfg.rank_k(),
    )?;
    let mut out = ctx.wd.create(RECS)?;
    write_recommendations(&lists, &mut out)?;
    out.flush()?;
    let summary = json!({ "queries": lists.len(), "k": cfg.rank_k(), "view": cfg.retrieval.view });
    ctx.wd
        .write_manifest(Stage::Rank, cfg, inputs, &[RECS], started, summary)
}

fn write_metrics(ctx: &Ctx, report: &MetricsReport) -> Result<Vec<String>> {
    let mut out = ctx.wd.create(METRICS)?;
    serde_json::to_writer_pretty(&mut out, &report.to_json())?;
    out.write_all(b"\n")?;
    out.flush()?;
    let mut names = vec![METRICS.to_string()];
    for &k in &report.ks {
        let name = format!("per_query_ap@{k}.tsv");
        report.write_per_query_ap(k, ctx.wd.create(&name)?)?;
        names.push(name);
    }
    Ok(names)
}

pub fn evaluate(ctx: &Ctx) -> Result<()> {
    let started = Instant::now();
    let cfg = ctx.cfg;
    let inputs = ctx.wd.check_inputs(Stage::Evaluate, cfg)?;
    let truth = read_ground_truth(ctx.wd.open(TRUTH)?, TRUTH)?;
    let lists = read_recommendations(ctx.wd.open(RECS)?, RECS)?;
    let report = pipeline::evaluate(&lists, &truth, cfg)?;
    print!("{report}");
    let names = write_metrics(ctx, &report)?;
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    ctx.wd.write_manifest(
        Stage::Evaluate,
        cfg,
        inputs,
        &names,
        started,
        report.to_json(),
    )
}

pub fn run(ctx: &Ctx, stage: Stage) -> Result<()> {
    let result = match stage {
        Stage::Prepare => prepare(ctx),
        Stage::EmbedText => embed_text(ctx),
        Stage::EmbedGraph => embed_graph(ctx),
        Stage::TrainFusion => train_fusion(ctx),
        Stage::Infer => infer(ctx),
        Stage::Rank => rank(ctx),
        Stage::Evaluate => evaluate(ctx),
    };
    result.with_context(|| format!("[{}]", stage.name()))
}

/// Every stage in order; with `resume`, stages whose manifest already
/// matches the configuration are skipped.
pub fn pipeline(ctx: &Ctx, resume: bool) -> Result<()> {
    for stage in Stage::ALL {
        if resume && ctx.wd.is_current(stage, ctx.cfg)? {
            log::info!("{}: up to date, skipping", stage.name());
            continue;
        }
        log::info!("{}: running", stage.name());
        run(ctx, stage)?;
    }
    Ok(())
}

pub fn grid_pq(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    // node vectors are retrained per cell; only the split and text are reused
    for s in [Stage::Prepare, Stage::EmbedText] {
        if !ctx.wd.is_current(s, cfg)? {
            bail!(
                "`{}` has not run in this work dir with this configuration",
                s.name()
            );
        }
    }
    let split = ctx.split()?;
    let text = ctx.text_views(&split)?;
    let grid = pipeline::grid_pq(&split, &text, cfg, &PQ_GRID)?;

    let mut tsv = ctx.wd.create("grid_pq.tsv")?;
    let ks = &grid.rows[0].metrics["ks"];
    let ks: Vec<u64> = ks
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|v| v.as_u64())
        .collect();
    write!(tsv, "p\tq")?;
    for k in &ks {
        write!(tsv, "\tprecision@{k}\trecall@{k}\tmap@{k}")?;
    }
    writeln!(tsv)?;
    for row in &grid.rows {
        write!(tsv, "{}\t{}", row.p, row.q)?;
        for k in &ks {
            for m in ["precision", "recall", "map"] {
                write!(tsv, "\t{}", row.metrics[format!("{m}@{k}")])?;
            }
        }
        writeln!(tsv)?;
    }
    tsv.flush()?;
    let mut out = ctx.wd.create("grid_pq.json")?;
    serde_json::to_writer_pretty(&mut out, &grid)?;
    out.flush()?;

    println!("MAP@{} (rows p, columns q)", grid.k);
    print!("{:>6}", "p\\q");
    for q in PQ_GRID {
        print!("{q:>8}");
    }
    println!();
    for p in PQ_GRID {
        print!("{p:>6}");
        for q in PQ_GRID {
            let row = grid
                .rows
                .iter()
                .find(|r| r.p == p && r.q == q)
                .expect("full grid");
            print!("{:>8.4}", row.map);
        }
        println!();
    }
    println!("best: p = {}, q = {}", grid.best.0, grid.best.1);
    Ok(())
}

pub fn grid_alpha(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    ctx.wd.check_inputs(Stage::Rank, cfg)?;
    if cfg.retrieval.view != View::Fused {
        bail!("grid-alpha needs retrieval.view = fused");
    }
    let model = ctx
        .model()?
        .context("grid-alpha needs a trained fusion model (fusion.method cca or dcca with a projecting strategy)")?;
    let split = ctx.split()?;
    let text = ctx.text_views(&split)?;
    let train_node = ctx.table(NODE_TRAIN)?;
    let test_node = ctx.table(NODE_TEST)?;
    let reports = pipeline::grid_alpha(
        &text,
        &train_node,
        &test_node,
        &model,
        &split.ground_truth,
        cfg,
        &ALPHA_GRID,
    )?;
    let json: Vec<serde_json::Value> = reports
        .iter()
        .map(|(alpha, r)| {
            let mut v = r.to_json();
            v["alpha"] = json!(alpha);
            v
        })
        .collect();
    let mut out = ctx.wd.create("grid_alpha.json")?;
    serde_json::to_writer_pretty(&mut out, &json)?;
    out.flush()?;
    for (alpha, r) in &reports {
        println!("alpha = {alpha}");
        print!("{r}");
    }
    Ok(())
}
