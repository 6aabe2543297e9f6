//! Second-order input jets of the value ansatz and reverse accumulation of
//! parameter gradients through them.
//!
//! A batch of `B` points is pushed through the network as `C = 2 + 2d` column
//! blocks: the value, `∂/∂t`, first derivatives along the eigenvectors `u_k` of
//! `a = σσᵀ`, and second derivatives along the same `u_k`. Each affine layer is
//! then a single matrix product over all blocks.

use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use super::{LayerLayout, NetworkState};
use crate::game::{DifferentialGame, Diffusion, TerminalJet};
use crate::{Error, Result};

/// Points per independent chunk. Chunk boundaries do not depend on the number
/// of worker threads, so reductions are reproducible.
pub const DEFAULT_CHUNK: usize = 250;

/// How the network output maps to the value function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// `v = g(x) + (T - t) N(t, x)`; the terminal condition holds exactly.
    #[default]
    Ansatz,
    /// `v = N(t, x)`; the terminal condition must be penalized in the loss.
    Plain,
}

/// `v`, `∂ₜv`, `∇ₓv` and `Tr(a D²ₓv)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueJet {
    pub v: f64,
    pub dv_dt: f64,
    pub grad_x: Vec<f64>,
    pub diff_contract: f64,
}

/// Partial derivatives of a scalar residual with respect to the jet fields.
#[derive(Debug, Clone, PartialEq)]
pub struct JetSensitivity {
    pub v: f64,
    pub dt: f64,
    pub grad: Vec<f64>,
    pub diff: f64,
}

impl JetSensitivity {
    pub fn zeros(d: usize) -> Self {
        JetSensitivity { v: 0.0, dt: 0.0, grad: vec![0.0; d], diff: 0.0 }
    }
}

/// Scalar residual of a point given its jet. Implementations must fill every
/// field of `sens` with the exact partial derivatives of the returned value.
pub trait ResidualModel: Sync {
    fn residual(&self, index: usize, t: f64, x: &[f64], jet: &ValueJet, sens: &mut JetSensitivity) -> f64;
}

struct Tape {
    /// Inputs to each affine layer, `fan_in × C·B`.
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of each hidden layer, `fan_out × C·B`.
    pre: Vec<Array2<f64>>,
    /// `(sin z, cos z)` of the value block of each hidden layer, `fan_out × B` each.
    trig: Vec<(Array2<f64>, Array2<f64>)>,
    /// Output blocks, length `C·B`.
    out: Vec<f64>,
}

/// Per-point eigen data of `a`, flattened.
struct Directions {
    d: usize,
    /// `dirs[j*d*d + k*d + i]` is coordinate `i` of direction `k` at point `j`.
    dirs: Vec<f64>,
    weights: Vec<f64>,
}

impl Directions {
    fn collect<G: DifferentialGame + ?Sized>(game: &G, t: &[f64], x: &[f64]) -> Self {
        let d = game.dim();
        let b = t.len();
        let mut dirs = Vec::with_capacity(b * d * d);
        let mut weights = Vec::with_capacity(b * d);
        for j in 0..b {
            let diff = game.diffusion(t[j], &x[j * d..(j + 1) * d]);
            push_diffusion(&diff, &mut dirs, &mut weights);
        }
        Directions { d, dirs, weights }
    }

    fn dir(&self, j: usize, k: usize) -> &[f64] {
        let d = self.d;
        &self.dirs[j * d * d + k * d..j * d * d + (k + 1) * d]
    }
}

fn push_diffusion(diff: &Diffusion, dirs: &mut Vec<f64>, weights: &mut Vec<f64>) {
    for u in diff.directions() {
        dirs.extend_from_slice(u);
    }
    weights.extend_from_slice(diff.weights());
}

fn weight_view<'a>(params: &'a [f64], l: &LayerLayout) -> ArrayView2<'a, f64> {
    ArrayView2::from_shape((l.fan_out, l.fan_in), &params[l.weights..l.bias]).expect("layout")
}

fn forward_tape(state: &NetworkState, t: &[f64], x: &[f64], dirs: &Directions) -> Tape {
    let d = dirs.d;
    let b = t.len();
    let c = 2 + 2 * d;
    let layers = state.arch.layers();
    let params = &state.params;

    let mut h0 = Array2::<f64>::zeros((d + 1, c * b));
    for j in 0..b {
        h0[(0, j)] = t[j];
        for i in 0..d {
            h0[(i + 1, j)] = x[j * d + i];
        }
        h0[(0, b + j)] = 1.0;
        for k in 0..d {
            let u = dirs.dir(j, k);
            for i in 0..d {
                h0[(i + 1, (2 + k) * b + j)] = u[i];
            }
        }
    }

    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len() - 1);
    let mut trig = Vec::with_capacity(layers.len() - 1);
    let mut h = h0;
    let last = layers.len() - 1;
    for (li, layer) in layers.iter().enumerate() {
        let w = weight_view(params, layer);
        let mut z = w.dot(&h);
        let bias = &params[layer.bias..layer.bias + layer.fan_out];
        for (i, mut row) in z.axis_iter_mut(Axis(0)).enumerate() {
            row.slice_mut(s![..b]).mapv_inplace(|v| v + bias[i]);
        }
        inputs.push(h);
        if li == last {
            let out = z.row(0).to_vec();
            return Tape { inputs, pre, trig, out };
        }
        let mut act = Array2::<f64>::zeros(z.raw_dim());
        let mut sines = Array2::<f64>::zeros((layer.fan_out, b));
        let mut cosines = Array2::<f64>::zeros((layer.fan_out, b));
        for (i, (zr, mut ar)) in z.axis_iter(Axis(0)).zip(act.axis_iter_mut(Axis(0))).enumerate() {
            let zr = zr.as_slice().expect("contiguous");
            let ar = ar.as_slice_mut().expect("contiguous");
            for j in 0..b {
                let (sn, cs) = zr[j].sin_cos();
                sines[(i, j)] = sn;
                cosines[(i, j)] = cs;
                ar[j] = sn;
                ar[b + j] = cs * zr[b + j];
                for k in 0..d {
                    let zt = zr[(2 + k) * b + j];
                    ar[(2 + k) * b + j] = cs * zt;
                    ar[(2 + d + k) * b + j] = cs * zr[(2 + d + k) * b + j] - sn * zt * zt;
                }
            }
        }
        pre.push(z);
        trig.push((sines, cosines));
        h = act;
    }
    unreachable!("network has an output layer")
}

/// Accumulates `∂loss/∂θ` into `grad` given `∂loss/∂(output blocks)`.
fn backward(state: &NetworkState, tape: &Tape, g_out: &[f64], b: usize, d: usize, grad: &mut [f64]) {
    let layers = state.arch.layers();
    let params = &state.params;
    let last = layers.len() - 1;

    let out_layer = &layers[last];
    let h_last = &tape.inputs[last];
    for i in 0..out_layer.fan_in {
        let row = h_last.row(i);
        grad[out_layer.weights + i] += row.iter().zip(g_out).map(|(h, g)| h * g).sum::<f64>();
    }
    grad[out_layer.bias] += g_out[..b].iter().sum::<f64>();
    let w_out = &params[out_layer.weights..out_layer.bias];
    let mut g_h = Array2::<f64>::zeros((out_layer.fan_in, g_out.len()));
    for (i, mut row) in g_h.axis_iter_mut(Axis(0)).enumerate() {
        for (r, g) in row.iter_mut().zip(g_out) {
            *r = w_out[i] * g;
        }
    }

    for li in (0..last).rev() {
        let layer = &layers[li];
        let z = &tape.pre[li];
        let (sines, cosines) = &tape.trig[li];
        let mut g_z = Array2::<f64>::zeros(z.raw_dim());
        for (i, ((zr, gr), mut gzr)) in z.axis_iter(Axis(0)).zip(g_h.axis_iter(Axis(0))).zip(g_z.axis_iter_mut(Axis(0))).enumerate() {
            let zr = zr.as_slice().expect("contiguous");
            let gr = gr.as_slice().expect("contiguous");
            let gzr = gzr.as_slice_mut().expect("contiguous");
            let (srow, crow) = (sines.row(i), cosines.row(i));
            for j in 0..b {
                let (sn, cs) = (srow[j], crow[j]);
                let mut gv = gr[j] * cs;
                let zdt = zr[b + j];
                gv -= gr[b + j] * sn * zdt;
                gzr[b + j] = gr[b + j] * cs;
                for k in 0..d {
                    let it = (2 + k) * b + j;
                    let is = (2 + d + k) * b + j;
                    let zt = zr[it];
                    let zs = zr[is];
                    let gt = gr[it];
                    let gs = gr[is];
                    gv -= gt * sn * zt + gs * (sn * zs + cs * zt * zt);
                    gzr[it] = gt * cs - 2.0 * gs * sn * zt;
                    gzr[is] = gs * cs;
                }
                gzr[j] = gv;
            }
        }
        let h = &tape.inputs[li];
        let gw = g_z.dot(&h.t());
        let gslice = &mut grad[layer.weights..layer.bias];
        for (g, v) in gslice.iter_mut().zip(gw.iter()) {
            *g += v;
        }
        for i in 0..layer.fan_out {
            grad[layer.bias + i] += g_z.row(i).slice(s![..b]).sum();
        }
        if li > 0 {
            g_h = weight_view(params, layer).t().dot(&g_z);
        }
    }
}

struct ChunkJets {
    jets: Vec<ValueJet>,
}

fn assemble<G: DifferentialGame + ?Sized>(
    game: &G,
    repr: Representation,
    horizon: f64,
    t: &[f64],
    x: &[f64],
    dirs: &Directions,
    out: &[f64],
) -> ChunkJets {
    let d = dirs.d;
    let b = t.len();
    let mut jets = Vec::with_capacity(b);
    for j in 0..b {
        let xj = &x[j * d..(j + 1) * d];
        let n = out[j];
        let n_t = out[b + j];
        let (tau, term) = match repr {
            Representation::Ansatz => (horizon - t[j], Some(game.terminal(xj))),
            Representation::Plain => (1.0, None),
        };
        let (v, dv_dt) = match &term {
            Some(g) => (g.value + tau * n, -n + tau * n_t),
            None => (n, n_t),
        };
        let mut grad_x = vec![0.0; d];
        let mut diff_contract = 0.0;
        for k in 0..d {
            let u = dirs.dir(j, k);
            let mut tan = tau * out[(2 + k) * b + j];
            let mut sec = tau * out[(2 + d + k) * b + j];
            if let Some(g) = &term {
                tan += dot(u, &g.grad);
                sec += quad(&g.hess, u);
            }
            for i in 0..d {
                grad_x[i] += tan * u[i];
            }
            diff_contract += dirs.weights[j * d + k] * sec;
        }
        jets.push(ValueJet { v, dv_dt, grad_x, diff_contract });
    }
    ChunkJets { jets }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(h: &[f64], u: &[f64]) -> f64 {
    let d = u.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += u[i] * h[i * d + j] * u[j];
        }
    }
    s
}

fn check_batch(state: &NetworkState, d: usize, t: &[f64], x: &[f64]) -> Result<()> {
    if state.arch.state_dim != d {
        return Err(Error::Dimension { expected: d, got: state.arch.state_dim });
    }
    if x.len() != t.len() * d {
        return Err(Error::Dimension { expected: t.len() * d, got: x.len() });
    }
    Ok(())
}

/// Jets of the value representation at every point of a batch.
/// `x` holds the points row-major (`t.len() × d`).
pub fn value_jets<G: DifferentialGame + ?Sized>(
    state: &NetworkState,
    game: &G,
    repr: Representation,
    t: &[f64],
    x: &[f64],
) -> Result<Vec<ValueJet>> {
    let d = game.dim();
    check_batch(state, d, t, x)?;
    let horizon = game.horizon();
    let parts: Vec<Vec<ValueJet>> = t
        .par_chunks(DEFAULT_CHUNK)
        .zip(x.par_chunks(DEFAULT_CHUNK * d))
        .map(|(tc, xc)| {
            let dirs = Directions::collect(game, tc, xc);
            let tape = forward_tape(state, tc, xc, &dirs);
            assemble(game, repr, horizon, tc, xc, &dirs, &tape.out).jets
        })
        .collect();
    let jets: Vec<ValueJet> = parts.into_iter().flatten().collect();
    if let Some(j) = jets.iter().position(|j| !jet_finite(j)) {
        return Err(Error::NonFinite(format!("value jet at batch index {j}")));
    }
    Ok(jets)
}

/// Jet of the ansatz `g(x) + (T - t) N(t, x)` at a single point, for an
/// explicitly given diffusion and terminal jet.
pub fn value_jet(state: &NetworkState, t: f64, x: &[f64], diffusion: &Diffusion, terminal: &TerminalJet, horizon: f64) -> Result<ValueJet> {
    let d = x.len();
    check_batch(state, d, &[t], x)?;
    if diffusion.dim() != d || terminal.grad.len() != d || terminal.hess.len() != d * d {
        return Err(Error::Dimension { expected: d, got: diffusion.dim() });
    }
    let mut dirs = Directions { d, dirs: Vec::new(), weights: Vec::new() };
    push_diffusion(diffusion, &mut dirs.dirs, &mut dirs.weights);
    let tape = forward_tape(state, &[t], x, &dirs);
    let out = &tape.out;
    let tau = horizon - t;
    let mut grad_x = terminal.grad.clone();
    let mut diff_contract = 0.0;
    for k in 0..d {
        let u = dirs.dir(0, k);
        let tan = tau * out[2 + k];
        for i in 0..d {
            grad_x[i] += tan * u[i];
        }
        diff_contract += dirs.weights[k] * (quad(&terminal.hess, u) + tau * out[2 + d + k]);
    }
    let jet = ValueJet { v: terminal.value + tau * out[0], dv_dt: -out[0] + tau * out[1], grad_x, diff_contract };
    if !jet_finite(&jet) {
        return Err(Error::NonFinite("value jet".into()));
    }
    Ok(jet)
}

fn jet_finite(j: &ValueJet) -> bool {
    j.v.is_finite() && j.dv_dt.is_finite() && j.diff_contract.is_finite() && j.grad_x.iter().all(|v| v.is_finite())
}

/// Mean squared residual over the batch and its exact gradient in `θ`.
pub fn loss_and_gradient<G: DifferentialGame + ?Sized, R: ResidualModel + ?Sized>(
    state: &NetworkState,
    game: &G,
    repr: Representation,
    t: &[f64],
    x: &[f64],
    residual: &R,
) -> Result<(f64, Vec<f64>)> {
    let d = game.dim();
    check_batch(state, d, t, x)?;
    if t.is_empty() {
        return Err(Error::Empty("collocation batch"));
    }
    let horizon = game.horizon();
    let total = t.len() as f64;
    let n_params = state.params.len();
    let parts: Vec<(f64, Vec<f64>)> = t
        .par_chunks(DEFAULT_CHUNK)
        .zip(x.par_chunks(DEFAULT_CHUNK * d))
        .enumerate()
        .map(|(ci, (tc, xc))| {
            let b = tc.len();
            let dirs = Directions::collect(game, tc, xc);
            let tape = forward_tape(state, tc, xc, &dirs);
            let jets = assemble(game, repr, horizon, tc, xc, &dirs, &tape.out).jets;
            let c = 2 + 2 * d;
            let mut g_out = vec![0.0; c * b];
            let mut sens = JetSensitivity::zeros(d);
            let mut loss = 0.0;
            for (j, jet) in jets.iter().enumerate() {
                sens.v = 0.0;
                sens.dt = 0.0;
                sens.diff = 0.0;
                sens.grad.iter_mut().for_each(|v| *v = 0.0);
                let r = residual.residual(ci * DEFAULT_CHUNK + j, tc[j], &xc[j * d..(j + 1) * d], jet, &mut sens);
                loss += r * r;
                let w = 2.0 * r / total;
                let tau = match repr {
                    Representation::Ansatz => horizon - tc[j],
                    Representation::Plain => 1.0,
                };
                g_out[j] = match repr {
                    Representation::Ansatz => w * (sens.v * tau - sens.dt),
                    Representation::Plain => w * sens.v,
                };
                g_out[b + j] = w * sens.dt * tau;
                for k in 0..d {
                    let u = dirs.dir(j, k);
                    g_out[(2 + k) * b + j] = w * tau * dot(&sens.grad, u);
                    g_out[(2 + d + k) * b + j] = w * tau * sens.diff * dirs.weights[j * d + k];
                }
            }
            let mut grad = vec![0.0; n_params];
            backward(state, &tape, &g_out, b, d, &mut grad);
            (loss, grad)
        })
        .collect();
    let mut loss = 0.0;
    let mut grad = vec![0.0; n_params];
    for (l, g) in parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    loss /= total;
    if !loss.is_finite() || grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("loss {loss}")));
    }
    Ok((loss, grad))
}
