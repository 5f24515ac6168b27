/// Numerically stable log-softmax (max-subtracted log-sum-exp).
pub fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(scores);
    scores.iter().map(|s| s - lse).collect()
}

pub fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Gradient of `sum_i d_out[i] * log_softmax(x)[i]` with respect to `x`.
pub fn log_softmax_backward(log_probs: &[f64], d_out: &[f64]) -> Vec<f64> {
    let total: f64 = d_out.iter().sum();
    log_probs
        .iter()
        .zip(d_out)
        .map(|(lp, d)| d - lp.exp() * total)
        .collect()
}

/// Gradient of `sum_i d_out[i] * softmax(x)[i]` with respect to `x`, given the forward output.
pub fn softmax_backward(probs: &[f64], d_out: &[f64]) -> Vec<f64> {
    let inner: f64 = probs.iter().zip(d_out).map(|(p, d)| p * d).sum();
    probs.iter().zip(d_out).map(|(p, d)| p * (d - inner)).collect()
}
