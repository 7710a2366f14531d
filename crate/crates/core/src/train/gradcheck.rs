//! Finite-difference verification of the analytic gradients.
//!
//! The numeric derivative is the Richardson extrapolation of two central
//! differences, `(4·D(ε) − D(2ε)) / 3`, whose truncation error is O(ε⁴).
//! That lets ε be large enough for roundoff in the forward pass (which
//! grows like 1/ε) to stay far below the tolerance even for gradients
//! near the 1e-8 floor of the relative error.

use crate::data::TagLabel;
use crate::error::Result;
use crate::features::MelChunk;
use crate::model::{forward, forward_resume, ForwardTrace, ModelMode, ModelParams};
use crate::numerics::Rng;

use super::backward::{backward, Gradients};
use super::loss::bce_loss_difference;

pub const DEFAULT_SAMPLES_PER_TENSOR: usize = 200;

/// Default step; probes go to ±ε and ±2ε.
pub const DEFAULT_EPS: f64 = 5e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    /// Coordinates left out because a probe crossed a ReLU or max-pool
    /// switch, where the loss is not differentiable.
    pub skipped: usize,
    pub max_rel_err: f64,
    pub worst_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub coordinates: usize,
    pub skipped: usize,
    pub tensors: Vec<TensorCheck>,
}

/// `|a - b| / max(1e-8, |a| + |b|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Which piecewise-linear branch every ReLU and max-pool took.
fn activation_pattern(trace: &ForwardTrace) -> (Vec<bool>, Vec<usize>) {
    let active = trace.fnn.data().iter().chain(trace.y_cnn.data()).map(|v| *v > 0.0).collect();
    (active, trace.cnn_argmax.clone())
}

/// How many leading GRU layers a perturbation of tensor `name` leaves
/// untouched (`None` when the CNN or attention changes too).
fn resume_layers(name: &str, gru_layers: usize) -> Option<usize> {
    if let Some(rest) = name.strip_prefix("gru.") {
        return rest.split('.').next().and_then(|l| l.parse().ok());
    }
    match name {
        "cnn_w" | "cnn_b" | "att_w" | "att_b" => None,
        _ => Some(gru_layers),
    }
}

/// Indices to check in a tensor of `len` entries: all of them when
/// `len <= samples`, otherwise a fixed pseudo-random subset keyed by name.
fn sample_indices(name: &str, len: usize, samples: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    if len <= samples {
        return idx;
    }
    let mut rng = Rng::new(0x6772_6164).derive(name);
    for i in 0..samples {
        let j = i + rng.below(len - i);
        idx.swap(i, j);
    }
    idx.truncate(samples);
    idx.sort_unstable();
    idx
}

/// Compares `analytic` against extrapolated central differences of the chunk loss.
/// Coordinates whose probe switches an activation branch are skipped and
/// counted in the report.
pub fn grad_check_against(
    analytic: &Gradients,
    params: &ModelParams,
    chunk: &MelChunk,
    label: &TagLabel,
    mode: ModelMode,
    eps: f64,
    samples_per_tensor: usize,
) -> Result<GradCheckReport> {
    let mut probe = params.clone();
    let names: Vec<String> = params.named_tensors().into_iter().map(|(n, _)| n).collect();
    let analytic_tensors = analytic.tensors();
    let base = forward(chunk, params, mode)?;
    let base_pattern = activation_pattern(&base);
    let mut tensors = Vec::with_capacity(names.len());
    for (ti, name) in names.iter().enumerate() {
        let len = analytic_tensors[ti].data().len();
        let mut worst = (0.0f64, 0usize);
        let mut skipped = 0;
        let indices = sample_indices(name, len, samples_per_tensor);
        let resume = resume_layers(name, params.gru.len());
        for &i in &indices {
            let orig = params.tensors()[ti].data()[i];
            let mut outputs = Vec::with_capacity(4);
            let mut kink = false;
            for step in [eps, -eps, 2.0 * eps, -2.0 * eps] {
                probe.tensors_mut()[ti].data_mut()[i] = orig + step;
                let trace = match resume {
                    Some(k) => forward_resume(chunk, &probe, mode, &base, k)?,
                    None => forward(chunk, &probe, mode)?,
                };
                if activation_pattern(&trace) != base_pattern {
                    kink = true;
                    break;
                }
                outputs.push(trace.output);
            }
            probe.tensors_mut()[ti].data_mut()[i] = orig;
            if kink {
                skipped += 1;
                continue;
            }
            let d1 = bce_loss_difference(&outputs[0], &outputs[1], label) / (2.0 * eps);
            let d2 = bce_loss_difference(&outputs[2], &outputs[3], label) / (4.0 * eps);
            let numeric = (4.0 * d1 - d2) / 3.0;
            let err = relative_error(analytic_tensors[ti].data()[i], numeric);
            if err > worst.0 {
                worst = (err, i);
            }
        }
        tensors.push(TensorCheck {
            name: name.clone(),
            checked: indices.len() - skipped,
            skipped,
            max_rel_err: worst.0,
            worst_index: worst.1,
        });
    }
    let worst = tensors
        .iter()
        .fold(None::<&TensorCheck>, |acc, t| match acc {
            Some(a) if a.max_rel_err >= t.max_rel_err => Some(a),
            _ => Some(t),
        })
        .expect("model has tensors");
    Ok(GradCheckReport {
        max_rel_err: worst.max_rel_err,
        worst_tensor: worst.name.clone(),
        worst_index: worst.worst_index,
        coordinates: tensors.iter().map(|t| t.checked).sum(),
        skipped: tensors.iter().map(|t| t.skipped).sum(),
        tensors,
    })
}

pub fn grad_check(
    params: &ModelParams,
    chunk: &MelChunk,
    label: &TagLabel,
    mode: ModelMode,
    eps: f64,
) -> Result<GradCheckReport> {
    let (_, analytic) = backward(chunk, label, params, mode)?;
    grad_check_against(&analytic, params, chunk, label, mode, eps, DEFAULT_SAMPLES_PER_TENSOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Architecture;

    fn setup(seed: u64, t: usize) -> (ModelParams, MelChunk, TagLabel) {
        let arch = Architecture { filters: 8, hidden: 6, fnn_units: 10, gru_layers: 2, ..Default::default() };
        let mut rng = Rng::new(seed);
        let mut p = ModelParams::init(arch, &mut rng);
        // Non-zero biases and gate weights so every path is exercised.
        for m in p.tensors_mut() {
            if m.max_abs() == 0.0 {
                *m = rng.matrix_uniform(m.rows(), m.cols(), -0.2, 0.2);
            }
        }
        let chunk = MelChunk::new(rng.matrix_normal(t, 40)).unwrap();
        (p, chunk, "cmv".parse().unwrap())
    }

    #[test]
    fn small_model_passes_in_both_modes() {
        for mode in [ModelMode::AttLoc, ModelMode::Baseline] {
            for t in [1, 2, 8] {
                let (p, c, l) = setup(t as u64, t);
                let r = grad_check(&p, &c, &l, mode, DEFAULT_EPS).unwrap();
                assert!(r.max_rel_err < 1e-4, "{mode} T={t}: {} at {}[{}]", r.max_rel_err, r.worst_tensor, r.worst_index);
            }
        }
    }

    #[test]
    fn single_frame_has_no_loc_gradient() {
        let (p, c, l) = setup(1, 1);
        // One frame: the localization weight cancels against its own mass, so
        // the output does not depend on the loc branch at all.
        let (_, g) = backward(&c, &l, &p, ModelMode::AttLoc).unwrap();
        for name in ["loc_w", "loc_b"] {
            assert!(g.tensor(name).unwrap().max_abs() < 1e-12, "{name}");
        }
    }

    #[test]
    fn baseline_gate_gradients_are_zero() {
        let (p, c, l) = setup(3, 5);
        let (_, g) = backward(&c, &l, &p, ModelMode::Baseline).unwrap();
        for name in ["att_w", "att_b", "loc_w", "loc_b"] {
            assert!(g.tensor(name).unwrap().data().iter().all(|v| *v == 0.0), "{name}");
        }
    }

    #[test]
    fn fault_injection_is_reported() {
        let (p, c, l) = setup(4, 4);
        let (_, mut g) = backward(&c, &l, &p, ModelMode::AttLoc).unwrap();
        g.tensor_mut("gru.1.bwd.ur").unwrap().fill(0.0);
        let r = grad_check_against(&g, &p, &c, &l, ModelMode::AttLoc, DEFAULT_EPS, 50).unwrap();
        assert_eq!(r.worst_tensor, "gru.1.bwd.ur");
        assert!(r.max_rel_err > 0.5);
    }

    #[test]
    fn halving_eps_is_stable() {
        let (p, c, l) = setup(5, 6);
        let a = grad_check(&p, &c, &l, ModelMode::AttLoc, DEFAULT_EPS).unwrap();
        let b = grad_check(&p, &c, &l, ModelMode::AttLoc, DEFAULT_EPS / 2.0).unwrap();
        assert!(b.max_rel_err <= 10.0 * a.max_rel_err.max(1e-10), "{} vs {}", a.max_rel_err, b.max_rel_err);
    }

    #[test]
    fn resume_points() {
        assert_eq!(resume_layers("cnn_w", 3), None);
        assert_eq!(resume_layers("att_b", 3), None);
        assert_eq!(resume_layers("gru.0.fwd.wz", 3), Some(0));
        assert_eq!(resume_layers("gru.2.bwd.bh", 3), Some(2));
        assert_eq!(resume_layers("loc_w", 3), Some(3));
        assert_eq!(resume_layers("fnn_b", 3), Some(3));
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let a = sample_indices("x", 1000, 200);
        assert_eq!(a, sample_indices("x", 1000, 200));
        assert_eq!(a.len(), 200);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_indices("y", 7, 200), (0..7).collect::<Vec<_>>());
    }
}

