//! Bidirectional GRU layer.
//!
//! ```text
//! z_t = σ(W_z x_t + U_z h_{t-1} + b_z)
//! r_t = σ(W_r x_t + U_r h_{t-1} + b_r)
//! c_t = tanh(W_h x_t + U_h (r_t ⊙ h_{t-1}) + b_h)
//! h_t = (1 - z_t) ⊙ h_{t-1} + z_t ⊙ c_t,   h_0 = 0
//! ```
//! The backward direction runs the same recurrence from the last frame to the
//! first; layer output is `[h_t ; h'_t]`.

use crate::error::Result;
use crate::numerics::{matmul, matvec_t_acc, sigmoid_scalar, Matrix};

use super::params::{BiGruParams, GruParams};

/// Per-frame intermediates of one direction, indexed by frame (not by
/// processing step).
#[derive(Clone, Debug)]
pub struct GruDirectionCache {
    /// State entering the step that produces frame `t`.
    pub h_prev: Matrix,
    pub z: Matrix,
    pub r: Matrix,
    /// Candidate state.
    pub c: Matrix,
    pub h: Matrix,
}

#[derive(Clone, Debug)]
pub struct BiGruCache {
    pub input: Matrix,
    pub fwd: GruDirectionCache,
    pub bwd: GruDirectionCache,
    pub output: Matrix,
}

/// `x Wᵀ + b` for every frame.
pub(crate) fn project(x: &Matrix, w: &Matrix, b: &Matrix) -> Result<Matrix> {
    let mut out = matmul(x, &w.transpose())?;
    out.add_row_broadcast(b.data());
    Ok(out)
}

pub fn run_direction(seq: &Matrix, p: &GruParams, reverse: bool) -> Result<GruDirectionCache> {
    let t_len = seq.rows();
    let hidden = p.hidden();
    let xz = project(seq, &p.wz, &p.bz)?;
    let xr = project(seq, &p.wr, &p.br)?;
    let xh = project(seq, &p.wh, &p.bh)?;
    let (uz_t, ur_t, uh_t) = (p.uz.transpose(), p.ur.transpose(), p.uh.transpose());

    let mut cache = GruDirectionCache {
        h_prev: Matrix::zeros(t_len, hidden),
        z: Matrix::zeros(t_len, hidden),
        r: Matrix::zeros(t_len, hidden),
        c: Matrix::zeros(t_len, hidden),
        h: Matrix::zeros(t_len, hidden),
    };
    let mut h = vec![0.0; hidden];
    let mut rh = vec![0.0; hidden];
    for step in 0..t_len {
        let t = if reverse { t_len - 1 - step } else { step };
        let mut az = xz.row(t).to_vec();
        matvec_t_acc(&uz_t, &h, &mut az);
        let mut ar = xr.row(t).to_vec();
        matvec_t_acc(&ur_t, &h, &mut ar);
        let z: Vec<f64> = az.iter().map(|&a| sigmoid_scalar(a)).collect();
        let r: Vec<f64> = ar.iter().map(|&a| sigmoid_scalar(a)).collect();
        for j in 0..hidden {
            rh[j] = r[j] * h[j];
        }
        let mut ac = xh.row(t).to_vec();
        matvec_t_acc(&uh_t, &rh, &mut ac);
        let c: Vec<f64> = ac.iter().map(|a| a.tanh()).collect();

        cache.h_prev.row_mut(t).copy_from_slice(&h);
        for j in 0..hidden {
            h[j] = (1.0 - z[j]) * h[j] + z[j] * c[j];
        }
        cache.z.row_mut(t).copy_from_slice(&z);
        cache.r.row_mut(t).copy_from_slice(&r);
        cache.c.row_mut(t).copy_from_slice(&c);
        cache.h.row_mut(t).copy_from_slice(&h);
    }
    Ok(cache)
}

pub fn run_layer(seq: &Matrix, p: &BiGruParams) -> Result<BiGruCache> {
    let fwd = run_direction(seq, &p.fwd, false)?;
    let bwd = run_direction(seq, &p.bwd, true)?;
    let hidden = p.fwd.hidden();
    let mut output = Matrix::zeros(seq.rows(), 2 * hidden);
    for t in 0..seq.rows() {
        let row = output.row_mut(t);
        row[..hidden].copy_from_slice(fwd.h.row(t));
        row[hidden..].copy_from_slice(bwd.h.row(t));
    }
    Ok(BiGruCache { input: seq.clone(), fwd, bwd, output })
}

/// Runs one bidirectional layer over `seq` (`T × input`) and returns `T × 2·hidden`.
pub fn bigru_layer(seq: &Matrix, p: &BiGruParams) -> Result<Matrix> {
    Ok(run_layer(seq, p)?.output)
}
