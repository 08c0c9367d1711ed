//! Small fully-connected autoencoders `X ↦ g(X)·W_L`, where `g` is a stack of
//! affine layers with a nonlinearity and the last hidden layer has width `k`.
//! The output map `W_L` is linear with no bias.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrixops::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::InvalidConfig(format!("unknown activation {other:?}"))),
        }
    }
}

/// Shape of `g`: `depth` hidden layers, all of width `width_factor·k` except
/// the last, which has width `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ArchSpec {
    pub depth: usize,
    pub width_factor: usize,
    pub activation: Activation,
}

impl ArchSpec {
    pub fn new(depth: usize, width_factor: usize, activation: Activation) -> Self {
        Self {
            depth,
            width_factor,
            activation,
        }
    }

    /// Hidden widths for bottleneck `k`.
    pub fn widths(&self, k: usize) -> Vec<usize> {
        let mut w = vec![self.width_factor * k; self.depth.saturating_sub(1)];
        w.push(k);
        w
    }

    pub fn label(&self) -> String {
        format!("d{}w{}k-{}", self.depth, self.width_factor, self.activation.name())
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.width_factor == 0 {
            return Err(Error::InvalidConfig(format!("depth and width factor must be >= 1, got {self:?}")));
        }
        Ok(())
    }
}

/// One affine layer `H·W + 1·bᵀ`; `w` is `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: DenseMatrix,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepAEParams {
    pub hidden: Vec<Layer>,
    /// `k × n`.
    pub w_out: DenseMatrix,
    pub activation: Activation,
}

impl DeepAEParams {
    /// Gaussian hidden weights scaled by `1/√fan_in`, zero biases, zero `W_L`.
    pub fn init(arch: &ArchSpec, n: usize, k: usize, seed: u64) -> Result<Self> {
        arch.validate()?;
        if k == 0 || n == 0 {
            return Err(Error::InvalidConfig(format!("need n >= 1 and k >= 1, got n={n}, k={k}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fan_in = n;
        let hidden = arch
            .widths(k)
            .into_iter()
            .map(|out| {
                let scale = 1.0 / (fan_in as f64).sqrt();
                let values = (0..fan_in * out)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let layer = Layer {
                    w: DenseMatrix::from_vec(fan_in, out, values).expect("finite"),
                    b: vec![0.0; out],
                };
                fan_in = out;
                layer
            })
            .collect();
        Ok(Self {
            hidden,
            w_out: DenseMatrix::zeros(k, n),
            activation: arch.activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.first().map_or(self.w_out.cols(), |l| l.w.rows())
    }

    pub fn bottleneck(&self) -> usize {
        self.w_out.rows()
    }

    pub fn num_params(&self) -> usize {
        self.hidden.iter().map(|l| l.w.rows() * l.w.cols() + l.b.len()).sum::<usize>()
            + self.w_out.rows() * self.w_out.cols()
    }

    /// All parameters in a fixed order: per layer `W` then `b`, then `W_L`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.hidden {
            out.extend_from_slice(l.w.as_slice());
            out.extend_from_slice(&l.b);
        }
        out.extend_from_slice(self.w_out.as_slice());
        out
    }

    /// Inverse of [`flatten`](Self::flatten) using `self` as the shape template.
    pub fn unflatten(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut out = self.clone();
        let mut at = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[at..at + dst.len()]);
            at += dst.len();
        };
        for l in &mut out.hidden {
            take(l.w.as_mut_slice());
            take(&mut l.b);
        }
        take(out.w_out.as_mut_slice());
        Ok(out)
    }
}

struct Trace {
    /// Pre-activations of each hidden layer.
    pre: Vec<DenseMatrix>,
    /// Activations; `post[0]` is the input.
    post: Vec<DenseMatrix>,
    output: DenseMatrix,
}

fn affine(h: &DenseMatrix, layer: &Layer) -> Result<DenseMatrix> {
    let mut z = h.matmul(&layer.w)?;
    for i in 0..z.rows() {
        for (v, b) in z.row_mut(i).iter_mut().zip(&layer.b) {
            *v += b;
        }
    }
    Ok(z)
}

fn run(params: &DeepAEParams, x: &DenseMatrix) -> Result<Trace> {
    if x.cols() != params.input_dim() || params.w_out.cols() != x.cols() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} columns, network expects {} in and {} out",
            x.cols(),
            params.input_dim(),
            params.w_out.cols()
        )));
    }
    let act = params.activation;
    let mut pre = Vec::with_capacity(params.hidden.len());
    let mut post = vec![x.clone()];
    for layer in &params.hidden {
        let z = affine(post.last().expect("non-empty"), layer)?;
        let mut h = z.clone();
        h.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        pre.push(z);
        post.push(h);
    }
    let output = post.last().expect("non-empty").matmul(&params.w_out)?;
    Ok(Trace { pre, post, output })
}

pub fn deep_ae_forward(params: &DeepAEParams, x: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(run(params, x)?.output)
}

/// `‖X − X̂‖_F²`.
pub fn squared_error(x: &DenseMatrix, xhat: &DenseMatrix) -> Result<f64> {
    Ok(x.sub(xhat)?.frobenius_norm_sq())
}

/// Squared error and its gradient by backpropagation, laid out as [`DeepAEParams::flatten`].
pub fn loss_and_gradient(params: &DeepAEParams, x: &DenseMatrix) -> Result<(f64, Vec<f64>)> {
    let trace = run(params, x)?;
    let mut delta = trace.output.sub(x)?;
    let loss = delta.frobenius_norm_sq();
    delta = delta.scale(2.0);

    let last = trace.post.last().expect("non-empty");
    let g_out = last.t_matmul(&delta)?;
    let mut dh = delta.matmul_t(&params.w_out)?;

    let mut layer_grads = Vec::with_capacity(params.hidden.len());
    for l in (0..params.hidden.len()).rev() {
        let mut dz = dh;
        for (d, &z) in dz.as_mut_slice().iter_mut().zip(trace.pre[l].as_slice()) {
            *d *= params.activation.derivative(z);
        }
        let gw = trace.post[l].t_matmul(&dz)?;
        let gb: Vec<f64> = (0..dz.cols()).map(|j| (0..dz.rows()).map(|i| dz[(i, j)]).sum()).collect();
        dh = dz.matmul_t(&params.hidden[l].w)?;
        layer_grads.push((gw, gb));
    }
    layer_grads.reverse();

    let mut grad = Vec::with_capacity(params.num_params());
    for (gw, gb) in &layer_grads {
        grad.extend_from_slice(gw.as_slice());
        grad.extend_from_slice(gb);
    }
    grad.extend_from_slice(g_out.as_slice());
    Ok((loss, grad))
}

/// Central differences of the squared error with step `h`, in flattened order.
pub fn finite_difference_gradient(params: &DeepAEParams, x: &DenseMatrix, h: f64) -> Result<Vec<f64>> {
    let base = params.flatten();
    let mut probe = base.clone();
    let mut grad = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        probe[i] = base[i] + h;
        let plus = squared_error(x, &deep_ae_forward(&params.unflatten(&probe)?, x)?)?;
        probe[i] = base[i] - h;
        let minus = squared_error(x, &deep_ae_forward(&params.unflatten(&probe)?, x)?)?;
        probe[i] = base[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// `max|a − b| / max|a|`, the worst component error relative to the gradient scale.
pub fn max_relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = analytic
        .iter()
        .zip(reference)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Gradient-descent settings for [`train_deep_ae`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings {
    pub steps: usize,
    /// Initial step, divided by `‖X‖_F²/m` so that it is insensitive to data scale.
    pub lr: f64,
    /// Halvings allowed before giving up with [`Error::Divergence`].
    pub max_halvings: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            steps: 3000,
            lr: 0.02,
            max_halvings: 60,
        }
    }
}

/// Full-batch gradient descent from [`DeepAEParams::init`]. A step that
/// produces a non-finite or larger loss is undone and the step size halved.
/// Returns the best parameters seen and their squared error.
pub fn train_deep_ae(
    x: &DenseMatrix,
    arch: &ArchSpec,
    k: usize,
    settings: &TrainSettings,
    seed: u64,
) -> Result<(DeepAEParams, f64)> {
    let (m, n) = x.shape();
    if k == 0 || k >= m.min(n) {
        return Err(Error::InvalidConfig(format!(
            "bottleneck must satisfy 1 <= k < min(m, n), got k={k}, m={m}, n={n}"
        )));
    }
    let mut params = DeepAEParams::init(arch, n, k, seed)?;
    let energy = x.frobenius_norm_sq();
    let mut lr = if energy > 0.0 { settings.lr * m as f64 / energy } else { settings.lr };
    let (mut loss, mut grad) = loss_and_gradient(&params, x)?;
    let mut flat = params.flatten();
    let mut halvings = 0;
    let mut step = 0;
    while step < settings.steps {
        let candidate: Vec<f64> = flat.iter().zip(&grad).map(|(p, g)| p - lr * g).collect();
        let next = params.unflatten(&candidate)?;
        let (next_loss, next_grad) = loss_and_gradient(&next, x)?;
        if !next_loss.is_finite() || next_loss > loss {
            halvings += 1;
            if halvings > settings.max_halvings {
                return Err(Error::Divergence { lr });
            }
            lr *= 0.5;
            continue;
        }
        params = next;
        flat = candidate;
        loss = next_loss;
        grad = next_grad;
        step += 1;
    }
    Ok((params, loss))
}
