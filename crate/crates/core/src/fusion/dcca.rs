//! Deep CCA: one fully connected network per view, trained jointly to
//! maximize the total canonical correlation of their outputs.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{add_ridge, center, cross_covariance, inv_sqrt_spd};
use super::{PairedViews, Side, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation output `a = f(z)`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sigmoid" => Activation::Sigmoid,
            "tanh" => Activation::Tanh,
            "relu" => Activation::Relu,
            "linear" => Activation::Linear,
            _ => return None,
        })
    }
}

/// Affine layer, `out = input · w + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `fan_in × fan_out`
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    fn init(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Dense {
            w: DMatrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-limit..limit)),
            b: DVector::zeros(fan_out),
        }
    }

    fn forward(&self, input: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = input * &self.w;
        for (mut col, &b) in z.column_iter_mut().zip(self.b.iter()) {
            col.add_scalar_mut(b);
        }
        z
    }
}

/// Hidden layers use `activation`; the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activation: Activation,
}

struct Trace {
    /// Input to each layer (`inputs[0]` is the network input).
    inputs: Vec<DMatrix<f64>>,
    /// Pre-activations of hidden layers.
    pre: Vec<DMatrix<f64>>,
}

impl Mlp {
    pub fn new(sizes: &[usize], activation: Activation, rng: &mut impl Rng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], rng))
            .collect();
        Mlp { layers, activation }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.w.nrows())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.ncols())
    }

    pub fn forward(&self, input: &DMatrix<f64>) -> DMatrix<f64> {
        let last = self.layers.len() - 1;
        let mut a = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            a = if i == last {
                z
            } else {
                z.map(|v| self.activation.apply(v))
            };
        }
        a
    }

    fn forward_trace(&self, input: &DMatrix<f64>) -> (DMatrix<f64>, Trace) {
        let last = self.layers.len() - 1;
        let mut trace = Trace {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(last),
        };
        let mut a = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            trace.inputs.push(a);
            if i == last {
                return (z, trace);
            }
            a = z.map(|v| self.activation.apply(v));
            trace.pre.push(z);
        }
        unreachable!("network has at least one layer")
    }

    /// Parameter gradients given the gradient at the output, in layer order.
    fn backward(&self, trace: &Trace, grad_out: DMatrix<f64>) -> Vec<Dense> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = grad_out;
        for i in (0..self.layers.len()).rev() {
            let input = &trace.inputs[i];
            let gw = input.tr_mul(&delta);
            let gb = DVector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
            if i > 0 {
                let mut back = &delta * self.layers[i].w.transpose();
                let z = &trace.pre[i - 1];
                let a = &trace.inputs[i];
                for ((g, &z), &a) in back.iter_mut().zip(z.iter()).zip(a.iter()) {
                    *g *= self.activation.derivative(z, a);
                }
                delta = back;
            }
            grads.push(Dense { w: gw, b: gb });
        }
        grads.reverse();
        grads
    }

    fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }
}

/// Adam moments for one network.
struct Adam {
    m: Vec<Dense>,
    v: Vec<Dense>,
    t: i32,
    lr: f64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(net: &Mlp, lr: f64) -> Self {
        let zeros = || {
            net.layers
                .iter()
                .map(|l| Dense {
                    w: DMatrix::zeros(l.w.nrows(), l.w.ncols()),
                    b: DVector::zeros(l.b.len()),
                })
                .collect::<Vec<_>>()
        };
        Adam {
            m: zeros(),
            v: zeros(),
            t: 0,
            lr,
        }
    }

    /// Descends along `grads`.
    fn step(&mut self, net: &mut Mlp, grads: &[Dense]) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let lr = self.lr;
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
            }
        };
        for (((layer, g), m), v) in net
            .layers
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            update(
                layer.w.as_mut_slice(),
                g.w.as_slice(),
                m.w.as_mut_slice(),
                v.w.as_mut_slice(),
            );
            update(
                layer.b.as_mut_slice(),
                g.b.as_slice(),
                m.b.as_mut_slice(),
                v.b.as_mut_slice(),
            );
        }
    }
}

/// Negative total canonical correlation of two batches and its gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationLoss {
    /// `-Σ ρ_j`
    pub loss: f64,
    /// Canonical correlations, descending.
    pub correlations: Vec<f64>,
    pub grad_h1: DMatrix<f64>,
    pub grad_h2: DMatrix<f64>,
}

fn lexicographic(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Ordering {
    (a.nrows(), a.ncols())
        .cmp(&(b.nrows(), b.ncols()))
        .then_with(|| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Loss `-Σ ρ_j` over all singular values of
/// `T = Σ11^{-1/2} Σ12 Σ22^{-1/2}`, with `reg·I` added to both view
/// covariances, together with its closed-form gradient with respect to each
/// batch. Both inputs must be `n × d`.
///
/// The operands are put in a canonical order before the computation, so
/// swapping them swaps the gradients and gives a bit-identical loss.
pub fn correlation_objective(
    h1: &DMatrix<f64>,
    h2: &DMatrix<f64>,
    reg: f64,
) -> Result<CorrelationLoss> {
    if lexicographic(h1, h2) == Ordering::Greater {
        let mut out = correlation_objective_ordered(h2, h1, reg)?;
        std::mem::swap(&mut out.grad_h1, &mut out.grad_h2);
        return Ok(out);
    }
    correlation_objective_ordered(h1, h2, reg)
}

fn correlation_objective_ordered(
    h1: &DMatrix<f64>,
    h2: &DMatrix<f64>,
    reg: f64,
) -> Result<CorrelationLoss> {
    let n = h1.nrows();
    if n < 2 {
        return Err(Error::config(
            "correlation objective needs at least two rows",
        ));
    }
    if h2.nrows() != n || h1.ncols() != h2.ncols() {
        return Err(Error::dim(
            h1.ncols(),
            h2.ncols(),
            "correlation objective operands must both be n x d",
        ));
    }
    let scale = 1.0 / (n as f64 - 1.0);
    let c1 = center(h1);
    let c2 = center(h2);
    let mut s11 = cross_covariance(&c1, &c1);
    let mut s22 = cross_covariance(&c2, &c2);
    add_ridge(&mut s11, reg);
    add_ridge(&mut s22, reg);
    let s12 = cross_covariance(&c1, &c2);

    let k1 = inv_sqrt_spd(&s11, "first")?;
    let k2 = inv_sqrt_spd(&s22, "second")?;
    let t = &k1 * s12 * &k2;
    let svd = t.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let sigma = &svd.singular_values;

    let mut correlations: Vec<f64> = sigma.iter().copied().collect();
    correlations.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = correlations.iter().sum();

    // d(Σσ)/dΣ12 and d(Σσ)/dΣ11, d(Σσ)/dΣ22
    let grad12 = &k1 * &u * &v_t * &k2;
    let usu = &u * DMatrix::from_diagonal(sigma) * u.transpose();
    let vsv = v_t.transpose() * DMatrix::from_diagonal(sigma) * &v_t;
    let grad11 = &k1 * usu * &k1 * -0.5;
    let grad22 = &k2 * vsv * &k2 * -0.5;

    // Chain through the covariances; negate for the loss.
    let grad_h1 = (&c1 * grad11 * 2.0 + &c2 * grad12.transpose()) * -scale;
    let grad_h2 = (&c2 * grad22 * 2.0 + &c1 * grad12) * -scale;

    Ok(CorrelationLoss {
        loss: -total,
        correlations,
        grad_h1,
        grad_h2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DccaConfig {
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    /// Shared output dimension.
    pub d: usize,
    pub activation: Activation,
    pub epochs: usize,
    pub batch: usize,
    pub reg: f64,
    pub lr: f64,
    pub seed: u64,
    pub standardize: bool,
}

impl Default for DccaConfig {
    fn default() -> Self {
        DccaConfig {
            hidden: vec![128],
            d: 128,
            activation: Activation::Sigmoid,
            epochs: 20,
            batch: 256,
            reg: 1e-4,
            lr: 1e-3,
            seed: 0,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DccaModel {
    pub x_norm: Standardizer,
    pub y_norm: Standardizer,
    pub net_x: Mlp,
    pub net_y: Mlp,
    pub reg: f64,
    /// Full-dataset objective after each epoch.
    pub train_log: Vec<f64>,
}

impl DccaModel {
    pub fn dim(&self) -> usize {
        self.net_x.output_dim()
    }

    pub fn input_dim(&self, side: Side) -> usize {
        match side {
            Side::X => self.net_x.input_dim(),
            Side::Y => self.net_y.input_dim(),
        }
    }

    pub fn project(&self, view: &DMatrix<f64>, side: Side) -> Result<DMatrix<f64>> {
        let (norm, net) = match side {
            Side::X => (&self.x_norm, &self.net_x),
            Side::Y => (&self.y_norm, &self.net_y),
        };
        Ok(net.forward(&norm.apply(view)?))
    }

    /// Objective `-Σρ` of the projected views, at the model's regularizer.
    pub fn objective(&self, views: &PairedViews) -> Result<f64> {
        let px = self.project(&views.x, Side::X)?;
        let py = self.project(&views.y, Side::Y)?;
        Ok(correlation_objective(&px, &py, self.reg)?.loss)
    }
}

/// Σρ of two already-projected views, with a negligible ridge.
pub fn total_correlation(px: &DMatrix<f64>, py: &DMatrix<f64>) -> Result<f64> {
    Ok(-correlation_objective(px, py, 1e-10)?.loss)
}

fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(epoch as u64).to_le_bytes());
    key[16] = 0xdc;
    ChaCha8Rng::from_seed(key)
}

/// Trains both networks with Adam on shuffled mini-batches.
pub fn fit_dcca(views: &PairedViews, cfg: &DccaConfig) -> Result<DccaModel> {
    if cfg.d == 0 {
        return Err(Error::config("DCCA output dimension must be >= 1"));
    }
    if cfg.batch <= cfg.d {
        return Err(Error::config(format!(
            "batch size {} must exceed the output dimension {}",
            cfg.batch, cfg.d
        )));
    }
    if !(cfg.lr > 0.0) || !(cfg.reg >= 0.0) {
        return Err(Error::config("DCCA needs lr > 0 and reg >= 0"));
    }
    let n = views.len();
    let x_norm = Standardizer::fit(&views.x, cfg.standardize);
    let y_norm = Standardizer::fit(&views.y, cfg.standardize);
    let x = x_norm.apply(&views.x)?;
    let y = y_norm.apply(&views.y)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sizes = |input: usize| {
        let mut s = vec![input];
        s.extend_from_slice(&cfg.hidden);
        s.push(cfg.d);
        s
    };
    let mut net_x = Mlp::new(&sizes(x.ncols()), cfg.activation, &mut rng);
    let mut net_y = Mlp::new(&sizes(y.ncols()), cfg.activation, &mut rng);
    let mut opt_x = Adam::new(&net_x, cfg.lr);
    let mut opt_y = Adam::new(&net_y, cfg.lr);

    let mut order: Vec<usize> = (0..n).collect();
    let mut train_log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut epoch_rng(cfg.seed, epoch));
        for (b, idx) in order.chunks(cfg.batch).enumerate() {
            if idx.len() <= cfg.d {
                continue;
            }
            let bx = x.select_rows(idx);
            let by = y.select_rows(idx);
            let (hx, trace_x) = net_x.forward_trace(&bx);
            let (hy, trace_y) = net_y.forward_trace(&by);
            let obj = correlation_objective(&hx, &hy, cfg.reg)
                .map_err(|_| Error::NonFinite { epoch, batch: b })?;
            if !obj.loss.is_finite() {
                return Err(Error::NonFinite { epoch, batch: b });
            }
            let gx = net_x.backward(&trace_x, obj.grad_h1);
            let gy = net_y.backward(&trace_y, obj.grad_h2);
            opt_x.step(&mut net_x, &gx);
            opt_y.step(&mut net_y, &gy);
        }
        if !(net_x.is_finite() && net_y.is_finite()) {
            return Err(Error::NonFinite {
                epoch,
                batch: n / cfg.batch,
            });
        }
        let full = correlation_objective(&net_x.forward(&x), &net_y.forward(&y), cfg.reg)?.loss;
        log::info!(
            "DCCA epoch {}/{}: objective {full:.6}",
            epoch + 1,
            cfg.epochs
        );
        train_log.push(full);
    }

    Ok(DccaModel {
        x_norm,
        y_norm,
        net_x,
        net_y,
        reg: cfg.reg,
        train_log,
    })
}
