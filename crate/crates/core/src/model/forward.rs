use crate::error::{Error, Result};
use crate::features::MelChunk;
use crate::numerics::{dot, matmul_bt, sigmoid_scalar, softmax_in_place, Matrix};

use super::gru::{project, run_layer, BiGruCache};
use super::params::ModelParams;
use super::ModelMode;

/// Floor on the per-event localization mass in the chunk aggregation. A
/// floor rather than an additive guard keeps the aggregation exact whenever
/// the mass is not vanishing.
pub const LOC_DENOM_FLOOR: f64 = 1e-8;

/// Everything computed by one forward pass over a chunk.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub mode: ModelMode,
    /// CNN activations, `T × filters`.
    pub y_cnn: Matrix,
    /// Winning conv position per frame and filter (`T × filters`, row-major).
    pub cnn_argmax: Vec<usize>,
    /// Frame attention factor, one scalar per frame.
    pub z_att: Vec<f64>,
    /// Attention-gated CNN activations.
    pub y_cnn_gated: Matrix,
    pub gru: Vec<BiGruCache>,
    /// ReLU feed-forward activations, `T × fnn_units`.
    pub fnn: Matrix,
    /// Linear tag outputs before the sigmoid, `T × events`.
    pub s: Matrix,
    /// Frame tag posteriors.
    pub o: Matrix,
    /// Per-frame localization softmax, `T × events`.
    pub z_loc: Matrix,
    /// Gated frame outputs `z_att · o ⊙ z_loc`.
    pub o_gated: Matrix,
    /// Per-event localization mass `max(Σ_t z_loc(t), floor)`.
    pub loc_mass: Vec<f64>,
    /// Chunk-level tag posterior.
    pub output: Vec<f64>,
}

impl ForwardTrace {
    pub fn num_frames(&self) -> usize {
        self.o.rows()
    }

    /// `z_att(t) · z_loc(t, e)`, the attention-masked localization trace.
    pub fn localization_scores(&self) -> Matrix {
        let mut m = self.z_loc.clone();
        for t in 0..m.rows() {
            let a = self.z_att[t];
            m.row_mut(t).iter_mut().for_each(|v| *v *= a);
        }
        m
    }
}

fn conv_frame(x: &[f64], params: &ModelParams) -> (Vec<f64>, Vec<usize>) {
    let arch = params.architecture();
    let positions = arch.conv_positions();
    let mut y = vec![0.0; arch.filters];
    let mut arg = vec![0; arch.filters];
    for f in 0..arch.filters {
        let w = params.cnn_w.row(f);
        let b = params.cnn_b.data()[f];
        let mut best = f64::NEG_INFINITY;
        let mut best_p = 0;
        for p in 0..positions {
            let a = dot(w, &x[p..p + arch.kernel]) + b;
            if a > best {
                best = a;
                best_p = p;
            }
        }
        // max(relu(a_p)) = relu(max(a_p))
        y[f] = best.max(0.0);
        arg[f] = best_p;
    }
    (y, arg)
}

/// Valid 1-D convolution of each filter along the mel axis, bias, ReLU, then
/// max over positions.
pub fn cnn_frame(x: &[f64], params: &ModelParams) -> Vec<f64> {
    conv_frame(x, params).0
}

/// Frame attention factor in `(0, 1)`.
pub fn attention_gate(x: &[f64], params: &ModelParams) -> f64 {
    sigmoid_scalar(dot(params.att_w.data(), x) + params.att_b.data()[0])
}

/// Per-event localization posterior of one frame; sums to one.
pub fn localize_frame(x: &[f64], params: &ModelParams) -> Vec<f64> {
    let mut logits: Vec<f64> = (0..params.loc_w.rows())
        .map(|e| dot(params.loc_w.row(e), x) + params.loc_b.data()[e])
        .collect();
    softmax_in_place(&mut logits);
    logits
}

fn check(stage: &str, m: &Matrix) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("forward stage `{stage}` produced a non-finite value")))
    }
}

pub fn forward(chunk: &MelChunk, params: &ModelParams, mode: ModelMode) -> Result<ForwardTrace> {
    forward_impl(chunk, params, mode, None)
}

/// Forward pass that takes the CNN, attention and the first `layers` GRU
/// layers from `base` instead of recomputing them. Valid when `params`
/// differs from the parameters behind `base` only in later layers; the
/// result is then bit-identical to [`forward`].
pub fn forward_resume(
    chunk: &MelChunk,
    params: &ModelParams,
    mode: ModelMode,
    base: &ForwardTrace,
    layers: usize,
) -> Result<ForwardTrace> {
    if base.mode != mode || layers > base.gru.len() || base.num_frames() != chunk.frames().rows() {
        return Err(Error::Shape("resume trace does not match this forward pass".into()));
    }
    forward_impl(chunk, params, mode, Some((base, layers)))
}

fn forward_impl(
    chunk: &MelChunk,
    params: &ModelParams,
    mode: ModelMode,
    reuse: Option<(&ForwardTrace, usize)>,
) -> Result<ForwardTrace> {
    let arch = params.architecture();
    let x = chunk.frames();
    if x.cols() != arch.n_mels {
        return Err(Error::Shape(format!("chunk has {} mel bins, model expects {}", x.cols(), arch.n_mels)));
    }
    let t_len = x.rows();
    let events = arch.events;

    let (y_cnn, cnn_argmax, z_att, y_cnn_gated) = match reuse {
        Some((base, _)) => (base.y_cnn.clone(), base.cnn_argmax.clone(), base.z_att.clone(), base.y_cnn_gated.clone()),
        None => front(x, params, mode)?,
    };

    let mut gru = Vec::with_capacity(params.gru.len());
    let mut seq = y_cnn_gated.clone();
    let kept = reuse.map_or(0, |(_, k)| k);
    if let Some((base, k)) = reuse {
        gru.extend(base.gru[..k].iter().cloned());
        if let Some(last) = gru.last() {
            seq = last.output.clone();
        }
    }
    for (l, layer) in params.gru.iter().enumerate().skip(kept) {
        let cache = run_layer(&seq, layer)?;
        check(&format!("gru layer {l}"), &cache.output)?;
        seq = cache.output.clone();
        gru.push(cache);
    }

    let mut fnn = project(&seq, &params.fnn_w, &params.fnn_b)?;
    fnn.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    check("fnn", &fnn)?;
    let s = project(&fnn, &params.out_w, &params.out_b)?;
    check("output", &s)?;
    let o = s.map(sigmoid_scalar);

    let (z_loc, o_gated, loc_mass, output) = match mode {
        ModelMode::AttLoc => {
            let mut z_loc = matmul_bt(x, &params.loc_w)?;
            z_loc.add_row_broadcast(params.loc_b.data());
            for t in 0..t_len {
                softmax_in_place(z_loc.row_mut(t));
            }
            check("localization", &z_loc)?;
            let mut o_gated = Matrix::zeros(t_len, events);
            for t in 0..t_len {
                for e in 0..events {
                    o_gated.set(t, e, z_att[t] * o.get(t, e) * z_loc.get(t, e));
                }
            }
            let num = o_gated.col_sums();
            let loc_mass: Vec<f64> = z_loc.col_sums().iter().map(|m| m.max(LOC_DENOM_FLOOR)).collect();
            let output = num.iter().zip(&loc_mass).map(|(n, d)| n / d).collect();
            (z_loc, o_gated, loc_mass, output)
        }
        ModelMode::Baseline => {
            let z_loc = Matrix::filled(t_len, events, 1.0 / events as f64);
            let output = o.col_sums().iter().map(|v| v / t_len as f64).collect();
            (z_loc, o.clone(), vec![t_len as f64 / events as f64; events], output)
        }
    };
    let output: Vec<f64> = output;
    if output.iter().any(|v: &f64| !v.is_finite()) {
        return Err(Error::NonFinite("forward stage `aggregation` produced a non-finite value".into()));
    }

    Ok(ForwardTrace {
        mode,
        y_cnn,
        cnn_argmax,
        z_att,
        y_cnn_gated,
        gru,
        fnn,
        s,
        o,
        z_loc,
        o_gated,
        loc_mass,
        output,
    })
}

/// CNN, attention gate and gated CNN activations.
fn front(x: &Matrix, params: &ModelParams, mode: ModelMode) -> Result<(Matrix, Vec<usize>, Vec<f64>, Matrix)> {
    let arch = params.architecture();
    let t_len = x.rows();
    let mut y_cnn = Matrix::zeros(t_len, arch.filters);
    let mut cnn_argmax = Vec::with_capacity(t_len * arch.filters);
    for t in 0..t_len {
        let (y, arg) = conv_frame(x.row(t), params);
        y_cnn.row_mut(t).copy_from_slice(&y);
        cnn_argmax.extend(arg);
    }
    check("cnn", &y_cnn)?;

    let z_att: Vec<f64> = match mode {
        ModelMode::AttLoc => (0..t_len).map(|t| attention_gate(x.row(t), params)).collect(),
        ModelMode::Baseline => vec![1.0; t_len],
    };
    if z_att.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forward stage `attention` produced a non-finite value".into()));
    }
    let mut y_cnn_gated = y_cnn.clone();
    if mode == ModelMode::AttLoc {
        for (t, a) in z_att.iter().enumerate() {
            y_cnn_gated.row_mut(t).iter_mut().for_each(|v| *v *= a);
        }
    }
    Ok((y_cnn, cnn_argmax, z_att, y_cnn_gated))
}

/// Chunk-level tag posteriors only.
pub fn predict(chunk: &MelChunk, params: &ModelParams, mode: ModelMode) -> Result<Vec<f64>> {
    Ok(forward(chunk, params, mode)?.output)
}
