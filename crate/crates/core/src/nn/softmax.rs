use crate::error::{Error, Result};

/// Numerically stable softmax; internal sums run in `f64`.
pub fn softmax(logits: &[f32]) -> Vec<f32> {
    let max = logits.iter().fold(f32::NEG_INFINITY, |m, &v| m.max(v)) as f64;
    let exps: Vec<f64> = logits.iter().map(|&v| (v as f64 - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| (e / sum) as f32).collect()
}

/// Softmax probabilities and `log p[action]`.
pub fn softmax_logprob(logits: &[f32], action: usize) -> Result<(Vec<f32>, f32)> {
    if logits.len() < 2 {
        return Err(Error::invalid("softmax needs at least two logits"));
    }
    if action >= logits.len() {
        return Err(Error::invalid(format!(
            "action {action} out of range for {} logits",
            logits.len()
        )));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmax logits".into()));
    }
    let max = logits.iter().fold(f32::NEG_INFINITY, |m, &v| m.max(v)) as f64;
    let sum: f64 = logits.iter().map(|&v| (v as f64 - max).exp()).sum();
    let logp = (logits[action] as f64 - max) - sum.ln();
    Ok((softmax(logits), logp as f32))
}
