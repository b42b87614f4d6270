//! Plain-text container for fitted fusion models.
//!
//! ```text
//! citefuse-fusion-model 1
//! kind <cca|dcca>
//! param <name> <value>
//! matrix <name> <rows> <cols>
//! <row 0: cols space-separated decimals>
//! ...
//! end
//! ```
//!
//! Matrices are row-major. Floats use the shortest decimal that parses back
//! to the same `f64`, so a reloaded model projects bit-identically.
//!
//! CCA models carry `x_mean x_scale y_mean y_scale wx wy correlations`
//! (vectors as `1 × n` matrices) and `param reg`. DCCA models carry the same
//! normalizers, `param activation`, `param layers_x`, `param layers_y`,
//! `param reg`, per-layer `x_w<i> x_b<i> y_w<i> y_b<i>` and `train_log`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use super::{Activation, CcaModel, DccaModel, Dense, FusionModel, Mlp, Standardizer};
use crate::error::{Error, Result};

const MAGIC: &str = "citefuse-fusion-model 1";

struct Writer<W> {
    out: W,
}

impl<W: Write> Writer<W> {
    fn line(&mut self, s: &str) -> Result<()> {
        self.out.write_all(s.as_bytes())?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    fn param(&mut self, name: &str, value: impl std::fmt::Display) -> Result<()> {
        self.line(&format!("param {name} {value}"))
    }

    fn matrix(&mut self, name: &str, m: &DMatrix<f64>) -> Result<()> {
        self.line(&format!("matrix {name} {} {}", m.nrows(), m.ncols()))?;
        let mut buf = String::new();
        for row in m.row_iter() {
            buf.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    buf.push(' ');
                }
                write!(buf, "{v}").expect("writing to a String");
            }
            self.line(&buf)?;
        }
        Ok(())
    }

    fn vector(&mut self, name: &str, v: &DVector<f64>) -> Result<()> {
        self.matrix(name, &DMatrix::from_row_slice(1, v.len(), v.as_slice()))
    }

    fn standardizer(&mut self, prefix: &str, s: &Standardizer) -> Result<()> {
        self.vector(&format!("{prefix}_mean"), &s.mean)?;
        self.vector(&format!("{prefix}_scale"), &s.scale)
    }

    fn mlp(&mut self, prefix: &str, net: &Mlp) -> Result<()> {
        for (i, layer) in net.layers.iter().enumerate() {
            self.matrix(&format!("{prefix}_w{i}"), &layer.w)?;
            self.vector(&format!("{prefix}_b{i}"), &layer.b)?;
        }
        Ok(())
    }
}

pub fn write_model<W: Write>(model: &FusionModel, out: W) -> Result<()> {
    let mut w = Writer { out };
    w.line(MAGIC)?;
    match model {
        FusionModel::Cca(m) => {
            w.line("kind cca")?;
            w.param("reg", m.reg)?;
            w.standardizer("x", &m.x_norm)?;
            w.standardizer("y", &m.y_norm)?;
            w.matrix("wx", &m.wx)?;
            w.matrix("wy", &m.wy)?;
            w.vector("correlations", &m.correlations)?;
        }
        FusionModel::Dcca(m) => {
            w.line("kind dcca")?;
            w.param("reg", m.reg)?;
            w.param("activation", m.net_x.activation.name())?;
            w.param("layers_x", m.net_x.layers.len())?;
            w.param("layers_y", m.net_y.layers.len())?;
            w.standardizer("x", &m.x_norm)?;
            w.standardizer("y", &m.y_norm)?;
            w.mlp("x", &m.net_x)?;
            w.mlp("y", &m.net_y)?;
            w.vector("train_log", &DVector::from_column_slice(&m.train_log))?;
        }
    }
    w.line("end")?;
    w.out.flush()?;
    Ok(())
}

struct Parsed {
    kind: String,
    params: HashMap<String, String>,
    matrices: HashMap<String, DMatrix<f64>>,
    source: String,
}

impl Parsed {
    fn err(&self, msg: String) -> Error {
        Error::Format {
            path: self.source.clone(),
            line: 0,
            message: msg,
        }
    }

    fn param<T: std::str::FromStr>(&self, name: &str) -> Result<T> {
        self.params
            .get(name)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| self.err(format!("missing or invalid param `{name}`")))
    }

    fn matrix(&mut self, name: &str) -> Result<DMatrix<f64>> {
        self.matrices
            .remove(name)
            .ok_or_else(|| self.err(format!("missing matrix `{name}`")))
    }

    fn vector(&mut self, name: &str) -> Result<DVector<f64>> {
        let m = self.matrix(name)?;
        if m.nrows() != 1 {
            return Err(self.err(format!("`{name}` must be a 1 × n matrix")));
        }
        Ok(DVector::from_row_slice(m.as_slice()))
    }

    fn standardizer(&mut self, prefix: &str) -> Result<Standardizer> {
        let mean = self.vector(&format!("{prefix}_mean"))?;
        let scale = self.vector(&format!("{prefix}_scale"))?;
        if mean.len() != scale.len() {
            return Err(self.err(format!("{prefix} mean/scale length mismatch")));
        }
        Ok(Standardizer { mean, scale })
    }

    fn mlp(&mut self, prefix: &str, layers: usize, activation: Activation) -> Result<Mlp> {
        let mut out = Vec::with_capacity(layers);
        for i in 0..layers {
            let w = self.matrix(&format!("{prefix}_w{i}"))?;
            let b = self.vector(&format!("{prefix}_b{i}"))?;
            if b.len() != w.ncols() {
                return Err(self.err(format!("{prefix} layer {i}: bias length mismatch")));
            }
            if let Some(prev) = out.last() {
                let prev: &Dense = prev;
                if prev.w.ncols() != w.nrows() {
                    return Err(self.err(format!("{prefix} layer {i}: shape mismatch")));
                }
            }
            out.push(Dense { w, b });
        }
        if out.is_empty() {
            return Err(self.err(format!("{prefix} network has no layers")));
        }
        Ok(Mlp {
            layers: out,
            activation,
        })
    }
}

fn parse<R: BufRead>(reader: R, source: &str) -> Result<Parsed> {
    let fail = |line: usize, message: String| Error::Format {
        path: source.to_string(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, l)) => Ok((n, l?)),
            None => Err(fail(0, format!("unexpected end of file, expected {what}"))),
        }
    };
    let (n, magic) = next("header")?;
    if magic != MAGIC {
        return Err(fail(n, format!("expected `{MAGIC}`")));
    }
    let (n, kind) = next("kind")?;
    let kind = kind
        .strip_prefix("kind ")
        .ok_or_else(|| fail(n, "expected `kind <cca|dcca>`".into()))?
        .to_string();

    let mut params = HashMap::new();
    let mut matrices = HashMap::new();
    loop {
        let (n, line) = next("`end`")?;
        let mut parts = line.split(' ');
        match parts.next() {
            Some("end") => break,
            Some("param") => {
                let (Some(name), Some(value)) = (parts.next(), parts.next()) else {
                    return Err(fail(n, "expected `param <name> <value>`".into()));
                };
                params.insert(name.to_string(), value.to_string());
            }
            Some("matrix") => {
                let (Some(name), Some(rows), Some(cols)) =
                    (parts.next(), parts.next(), parts.next())
                else {
                    return Err(fail(n, "expected `matrix <name> <rows> <cols>`".into()));
                };
                let rows: usize = rows.parse().map_err(|_| fail(n, "bad row count".into()))?;
                let cols: usize = cols
                    .parse()
                    .map_err(|_| fail(n, "bad column count".into()))?;
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let (rn, row) = next("matrix row")?;
                    let before = data.len();
                    for tok in row.split(' ').filter(|t| !t.is_empty()) {
                        data.push(
                            tok.parse::<f64>()
                                .map_err(|_| fail(rn, format!("`{tok}` is not a number")))?,
                        );
                    }
                    if data.len() - before != cols {
                        return Err(fail(rn, format!("expected {cols} values")));
                    }
                }
                matrices.insert(name.to_string(), DMatrix::from_row_slice(rows, cols, &data));
            }
            _ => return Err(fail(n, format!("unexpected line {line:?}"))),
        }
    }
    Ok(Parsed {
        kind,
        params,
        matrices,
        source: source.to_string(),
    })
}

pub fn read_model<R: BufRead>(reader: R, source: &str) -> Result<FusionModel> {
    let mut p = parse(reader, source)?;
    let reg: f64 = p.param("reg")?;
    match p.kind.as_str() {
        "cca" => {
            let x_norm = p.standardizer("x")?;
            let y_norm = p.standardizer("y")?;
            let wx = p.matrix("wx")?;
            let wy = p.matrix("wy")?;
            let correlations = p.vector("correlations")?;
            if wx.nrows() != x_norm.dim() || wy.nrows() != y_norm.dim() || wx.ncols() != wy.ncols()
            {
                return Err(p.err("CCA projection shapes are inconsistent".into()));
            }
            Ok(FusionModel::Cca(CcaModel {
                x_norm,
                y_norm,
                wx,
                wy,
                correlations,
                reg,
            }))
        }
        "dcca" => {
            let name: String = p.param("activation")?;
            let activation = Activation::from_name(&name)
                .ok_or_else(|| p.err(format!("unknown activation `{name}`")))?;
            let layers_x: usize = p.param("layers_x")?;
            let layers_y: usize = p.param("layers_y")?;
            let x_norm = p.standardizer("x")?;
            let y_norm = p.standardizer("y")?;
            let net_x = p.mlp("x", layers_x, activation)?;
            let net_y = p.mlp("y", layers_y, activation)?;
            let train_log = p.vector("train_log")?.as_slice().to_vec();
            if net_x.input_dim() != x_norm.dim()
                || net_y.input_dim() != y_norm.dim()
                || net_x.output_dim() != net_y.output_dim()
            {
                return Err(p.err("DCCA network shapes are inconsistent".into()));
            }
            Ok(FusionModel::Dcca(DccaModel {
                x_norm,
                y_norm,
                net_x,
                net_y,
                reg,
                train_log,
            }))
        }
        other => Err(p.err(format!("unknown model kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{fit_cca, fit_dcca, CcaConfig, DccaConfig, PairedViews, Side};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn views() -> PairedViews {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = DMatrix::from_fn(60, 4, |_, _| rng.random::<f64>());
        let y = DMatrix::from_fn(60, 3, |i, j| x[(i, j)] * 0.5 + rng.random::<f64>());
        PairedViews::new((0..60).map(|i| format!("p{i}")).collect(), x, y).unwrap()
    }

    fn round_trip(model: &FusionModel) -> FusionModel {
        let mut buf = Vec::new();
        write_model(model, &mut buf).unwrap();
        read_model(&buf[..], "mem").unwrap()
    }

    #[test]
    fn cca_round_trip_is_bit_exact() {
        let v = views();
        let model = FusionModel::Cca(
            fit_cca(
                &v,
                &CcaConfig {
                    d: 3,
                    ..CcaConfig::default()
                },
            )
            .unwrap(),
        );
        let back = round_trip(&model);
        assert_eq!(back, model);
        assert_eq!(
            back.project(&v.x, Side::X).unwrap(),
            model.project(&v.x, Side::X).unwrap()
        );
    }

    #[test]
    fn dcca_round_trip_is_bit_exact() {
        let v = views();
        let cfg = DccaConfig {
            hidden: vec![5],
            d: 2,
            epochs: 2,
            batch: 20,
            ..DccaConfig::default()
        };
        let model = FusionModel::Dcca(fit_dcca(&v, &cfg).unwrap());
        let back = round_trip(&model);
        assert_eq!(back, model);
        assert_eq!(
            back.project(&v.y, Side::Y).unwrap(),
            model.project(&v.y, Side::Y).unwrap()
        );
    }

    #[test]
    fn corrupt_files_fail() {
        assert!(read_model(&b"nope\n"[..], "x").is_err());
        let text = format!("{MAGIC}\nkind cca\nparam reg 0\nmatrix wx 1 2\n1\nend\n");
        assert!(read_model(text.as_bytes(), "x").is_err());
        let text = format!("{MAGIC}\nkind cca\nparam reg 0\n");
        assert!(read_model(text.as_bytes(), "x").is_err());
    }
}
