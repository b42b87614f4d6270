//! Loading a `RunConfig` from TOML plus `section.key=value` overrides.

use std::path::Path;

use anyhow::{bail, Context, Result};
use citefuse_core::config::RunConfig;
use toml::{Table, Value};

const SECTIONS: &[&str] = &[
    "paths",
    "prune",
    "split",
    "text",
    "graph",
    "fusion",
    "inference",
    "eval",
    "retrieval",
];

/// Rewrites `--graph.p 4` and `--graph.p=4` into `--set graph.p=4` so clap
/// sees one repeatable option.
pub fn expand_dotted_flags(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.into_iter().peekable();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            out.push(arg);
            continue;
        };
        let (key, inline) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (key.to_string(), None),
        };
        let is_config_key = key
            .split_once('.')
            .is_some_and(|(section, _)| SECTIONS.contains(&section));
        if !is_config_key {
            out.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            // a bare boolean flag such as `--prune.iterate`
            None => match it.peek() {
                Some(next) if !next.starts_with("--") => it.next().unwrap_or_default(),
                _ => "true".to_string(),
            },
        };
        out.push("--set".into());
        out.push(format!("{key}={value}"));
    }
    out
}

/// Parses an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .with_context(|| format!("override `{assignment}` is not of the form key=value"))?;
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().context("empty override key")?;
    let mut cur = table;
    for part in path {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => bail!("override `{key}`: `{part}` is not a section"),
        };
    }
    cur.insert(last.to_string(), parse_value(raw));
    Ok(())
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str::<Table>(&text)
                .with_context(|| format!("parsing config {}", p.display()))?
        }
        None => Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = Value::Table(table)
        .try_into()
        .context("invalid configuration")?;
    cfg.validate().context("invalid configuration")?;
    Ok(cfg)
}

pub fn to_toml(cfg: &RunConfig) -> Result<String> {
    Ok(toml::to_string(cfg)?)
}
