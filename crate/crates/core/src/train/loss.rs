use crate::data::TagLabel;

pub const PROB_CLAMP: f64 = 1e-12;

fn clamp(q: f64) -> f64 {
    q.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Binary cross-entropy summed over tags, with posteriors clamped to
/// `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(output: &[f64], label: &TagLabel) -> f64 {
    output
        .iter()
        .zip(label.targets())
        .map(|(&q, p)| {
            let q = clamp(q);
            -(p * q.ln() + (1.0 - p) * (1.0 - q).ln())
        })
        .sum()
}

/// Derivative of [`bce_loss`] w.r.t. each posterior; zero where the clamp is active.
pub fn bce_grad(output: &[f64], label: &TagLabel) -> Vec<f64> {
    output
        .iter()
        .zip(label.targets())
        .map(|(&q, p)| {
            if q != clamp(q) {
                0.0
            } else {
                -p / q + (1.0 - p) / (1.0 - q)
            }
        })
        .collect()
}

/// `bce_loss(a, label) - bce_loss(b, label)`, evaluated per tag through
/// log-ratios so that nearly equal posteriors do not lose their difference to
/// the rounding of the summed loss.
pub fn bce_loss_difference(a: &[f64], b: &[f64], label: &TagLabel) -> f64 {
    a.iter()
        .zip(b)
        .zip(label.targets())
        .map(|((&qa, &qb), p)| {
            let (ca, cb) = (clamp(qa), clamp(qb));
            if ca != qa || cb != qb {
                return -(p * (ca.ln() - cb.ln()) + (1.0 - p) * ((1.0 - ca).ln() - (1.0 - cb).ln()));
            }
            let pos = ((qa - qb) / qb).ln_1p();
            let neg = ((qb - qa) / (1.0 - qb)).ln_1p();
            -(p * pos + (1.0 - p) * neg)
        })
        .sum()
}

/// Batch loss: the sum of per-chunk losses.
pub fn bce_batch_loss<'a>(items: impl IntoIterator<Item = (&'a [f64], &'a TagLabel)>) -> f64 {
    items.into_iter().map(|(o, l)| bce_loss(o, l)).sum()
}
