//! Reverse-mode gradients of the chunk loss through the whole graph.

use std::ops::{Deref, DerefMut};

use crate::data::TagLabel;
use crate::error::{Error, Result};
use crate::features::MelChunk;
use crate::model::{forward, BiGruCache, LOC_DENOM_FLOOR, ForwardTrace, GruDirectionCache, GruParams, ModelMode, ModelParams};
use crate::numerics::{axpy, matmul, matmul_acc, matmul_at_acc, matvec_t_acc, Matrix};

use super::loss::{bce_grad, bce_loss};

/// One gradient tensor per parameter tensor, same names and shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients(ModelParams);

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients(params.zeros_like())
    }

    pub fn into_inner(self) -> ModelParams {
        self.0
    }

    pub fn accumulate(&mut self, other: &Gradients) -> Result<()> {
        for (a, b) in self.0.tensors_mut().into_iter().zip(other.0.tensors()) {
            a.add_scaled(b, 1.0)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.0.tensors_mut().into_iter().for_each(|m| m.scale(alpha));
    }

    pub fn l2_norm(&self) -> f64 {
        self.0
            .tensors()
            .iter()
            .map(|m| m.data().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    fn ensure_finite(&self) -> Result<()> {
        for (name, m) in self.0.named_tensors() {
            if !m.is_finite() {
                return Err(Error::NonFinite(format!("gradient of `{name}` is not finite")));
            }
        }
        Ok(())
    }
}

impl Deref for Gradients {
    type Target = ModelParams;

    fn deref(&self) -> &ModelParams {
        &self.0
    }
}

impl DerefMut for Gradients {
    fn deref_mut(&mut self) -> &mut ModelParams {
        &mut self.0
    }
}

/// Backpropagates `d_out` (gradient w.r.t. the direction's per-frame hidden
/// states) and returns the gradient w.r.t. the layer input.
fn gru_direction_backward(
    input: &Matrix,
    cache: &GruDirectionCache,
    p: &GruParams,
    d_out: &Matrix,
    reverse: bool,
    g: &mut GruParams,
) -> Result<Matrix> {
    let t_len = input.rows();
    let hidden = p.hidden();
    let mut da_z = Matrix::zeros(t_len, hidden);
    let mut da_r = Matrix::zeros(t_len, hidden);
    let mut da_c = Matrix::zeros(t_len, hidden);
    let mut rh = Matrix::zeros(t_len, hidden);
    let mut carry = vec![0.0; hidden];
    let mut dh = vec![0.0; hidden];
    let mut drh = vec![0.0; hidden];

    // Reverse of the forward processing order.
    for step in 0..t_len {
        let t = if reverse { step } else { t_len - 1 - step };
        let (z, r, c, hp) = (cache.z.row(t), cache.r.row(t), cache.c.row(t), cache.h_prev.row(t));
        for j in 0..hidden {
            dh[j] = d_out.get(t, j) + carry[j];
        }
        let mut dhp: Vec<f64> = (0..hidden).map(|j| dh[j] * (1.0 - z[j])).collect();
        {
            let dac = da_c.row_mut(t);
            for j in 0..hidden {
                dac[j] = dh[j] * z[j] * (1.0 - c[j] * c[j]);
            }
        }
        drh.iter_mut().for_each(|v| *v = 0.0);
        matvec_t_acc(&p.uh, da_c.row(t), &mut drh);
        {
            let dar = da_r.row_mut(t);
            for j in 0..hidden {
                dar[j] = drh[j] * hp[j] * r[j] * (1.0 - r[j]);
                dhp[j] += drh[j] * r[j];
            }
        }
        {
            let daz = da_z.row_mut(t);
            for j in 0..hidden {
                daz[j] = dh[j] * (c[j] - hp[j]) * z[j] * (1.0 - z[j]);
            }
        }
        matvec_t_acc(&p.uz, da_z.row(t), &mut dhp);
        matvec_t_acc(&p.ur, da_r.row(t), &mut dhp);
        let rh_row = rh.row_mut(t);
        for j in 0..hidden {
            rh_row[j] = r[j] * hp[j];
        }
        carry = dhp;
    }

    matmul_at_acc(&da_z, &cache.h_prev, &mut g.uz)?;
    matmul_at_acc(&da_r, &cache.h_prev, &mut g.ur)?;
    matmul_at_acc(&da_c, &rh, &mut g.uh)?;
    matmul_at_acc(&da_z, input, &mut g.wz)?;
    matmul_at_acc(&da_r, input, &mut g.wr)?;
    matmul_at_acc(&da_c, input, &mut g.wh)?;
    axpy(1.0, &da_z.col_sums(), g.bz.data_mut());
    axpy(1.0, &da_r.col_sums(), g.br.data_mut());
    axpy(1.0, &da_c.col_sums(), g.bh.data_mut());

    let mut d_input = matmul(&da_z, &p.wz)?;
    matmul_acc(&da_r, &p.wr, &mut d_input)?;
    matmul_acc(&da_c, &p.wh, &mut d_input)?;
    Ok(d_input)
}

fn bigru_backward(
    cache: &BiGruCache,
    p: &crate::model::BiGruParams,
    d_out: &Matrix,
    g: &mut crate::model::BiGruParams,
) -> Result<Matrix> {
    let hidden = p.fwd.hidden();
    let t_len = d_out.rows();
    let mut d_fwd = Matrix::zeros(t_len, hidden);
    let mut d_bwd = Matrix::zeros(t_len, hidden);
    for t in 0..t_len {
        let row = d_out.row(t);
        d_fwd.row_mut(t).copy_from_slice(&row[..hidden]);
        d_bwd.row_mut(t).copy_from_slice(&row[hidden..]);
    }
    let mut dx = gru_direction_backward(&cache.input, &cache.fwd, &p.fwd, &d_fwd, false, &mut g.fwd)?;
    let dxb = gru_direction_backward(&cache.input, &cache.bwd, &p.bwd, &d_bwd, true, &mut g.bwd)?;
    dx.add_scaled(&dxb, 1.0)?;
    Ok(dx)
}

/// Gradients of `bce_loss(forward(chunk).output, label)` given a trace
/// already computed for `chunk`.
pub fn backward_from_trace(
    chunk: &MelChunk,
    label: &TagLabel,
    params: &ModelParams,
    trace: &ForwardTrace,
) -> Result<Gradients> {
    let x = chunk.frames();
    let t_len = trace.num_frames();
    let events = trace.output.len();
    let mode = trace.mode;
    let mut g = Gradients::zeros_like(params);

    let dq = bce_grad(&trace.output, label);
    let mut d_o = Matrix::zeros(t_len, events);
    let mut d_att = vec![0.0; t_len];

    match mode {
        ModelMode::AttLoc => {
            // o''_e = num_e / den_e, num_e = Σ_t z_att o_e z_loc,e, den_e = max(Σ_t z_loc,e, floor)
            let d_num: Vec<f64> = (0..events).map(|e| dq[e] / trace.loc_mass[e]).collect();
            let d_den: Vec<f64> = (0..events)
                .map(|e| {
                    if trace.loc_mass[e] > LOC_DENOM_FLOOR {
                        -dq[e] * trace.output[e] / trace.loc_mass[e]
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut d_logits = Matrix::zeros(t_len, events);
            for t in 0..t_len {
                let a = trace.z_att[t];
                let zl = trace.z_loc.row(t);
                let o = trace.o.row(t);
                let mut d_zl = vec![0.0; events];
                for e in 0..events {
                    d_o.set(t, e, d_num[e] * a * zl[e]);
                    d_att[t] += d_num[e] * o[e] * zl[e];
                    d_zl[e] = d_num[e] * a * o[e] + d_den[e];
                }
                let inner: f64 = zl.iter().zip(&d_zl).map(|(z, d)| z * d).sum();
                let row = d_logits.row_mut(t);
                for e in 0..events {
                    row[e] = zl[e] * (d_zl[e] - inner);
                }
            }
            matmul_at_acc(&d_logits, x, &mut g.loc_w)?;
            axpy(1.0, &d_logits.col_sums(), g.loc_b.data_mut());
        }
        ModelMode::Baseline => {
            for t in 0..t_len {
                for e in 0..events {
                    d_o.set(t, e, dq[e] / t_len as f64);
                }
            }
        }
    }

    let mut d_s = d_o;
    for (ds, o) in d_s.data_mut().iter_mut().zip(trace.o.data()) {
        *ds *= o * (1.0 - o);
    }
    matmul_at_acc(&d_s, &trace.fnn, &mut g.out_w)?;
    axpy(1.0, &d_s.col_sums(), g.out_b.data_mut());

    let mut d_fnn = matmul(&d_s, &params.out_w)?;
    for (d, a) in d_fnn.data_mut().iter_mut().zip(trace.fnn.data()) {
        if *a <= 0.0 {
            *d = 0.0;
        }
    }
    let top = &trace.gru.last().expect("at least one GRU layer").output;
    matmul_at_acc(&d_fnn, top, &mut g.fnn_w)?;
    axpy(1.0, &d_fnn.col_sums(), g.fnn_b.data_mut());

    let mut d_seq = matmul(&d_fnn, &params.fnn_w)?;
    for l in (0..params.gru.len()).rev() {
        d_seq = bigru_backward(&trace.gru[l], &params.gru[l], &d_seq, &mut g.gru[l])?;
    }

    // d_seq is now the gradient w.r.t. the gated CNN activations.
    let mut d_cnn = d_seq;
    if mode == ModelMode::AttLoc {
        for t in 0..t_len {
            let a = trace.z_att[t];
            let row = d_cnn.row_mut(t);
            d_att[t] += row.iter().zip(trace.y_cnn.row(t)).map(|(d, y)| d * y).sum::<f64>();
            row.iter_mut().for_each(|d| *d *= a);
        }
        for t in 0..t_len {
            let a = trace.z_att[t];
            let d_pre = d_att[t] * a * (1.0 - a);
            axpy(d_pre, x.row(t), g.att_w.data_mut());
            g.att_b.data_mut()[0] += d_pre;
        }
    }

    let arch = params.architecture();
    for t in 0..t_len {
        let xt = x.row(t);
        for f in 0..arch.filters {
            let d = d_cnn.get(t, f);
            if d == 0.0 || trace.y_cnn.get(t, f) <= 0.0 {
                continue;
            }
            let p = trace.cnn_argmax[t * arch.filters + f];
            axpy(d, &xt[p..p + arch.kernel], g.cnn_w.row_mut(f));
            g.cnn_b.data_mut()[f] += d;
        }
    }

    g.ensure_finite()?;
    Ok(g)
}

/// Loss and exact gradients for one chunk.
pub fn backward(chunk: &MelChunk, label: &TagLabel, params: &ModelParams, mode: ModelMode) -> Result<(f64, Gradients)> {
    let trace = forward(chunk, params, mode)?;
    let loss = bce_loss(&trace.output, label);
    let grads = backward_from_trace(chunk, label, params, &trace)?;
    Ok((loss, grads))
}
