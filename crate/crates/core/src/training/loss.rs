use crate::numerics::softmax;

/// Softmax cross-entropy for one example.
///
/// Returns `-log softmax(logits)[label]` and its gradient
/// `softmax(logits) - onehot(label)`.
pub fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    assert!(label < logits.len(), "label {label} out of range");
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let loss = lse - logits[label];
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_k() {
        for k in 2..6 {
            let (loss, _) = cross_entropy(&vec![0.3; k], 1);
            assert!((loss - (k as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let (loss, grad) = cross_entropy(&[1000.0, 0.0], 0);
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|g| g.is_finite()));
        let (loss, _) = cross_entropy(&[1000.0, 0.0], 1);
        assert!((loss - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let logits = [0.4, -1.3, 2.2, 0.05];
        let label = 2;
        let (_, grad) = cross_entropy(&logits, label);
        let eps = 1e-6;
        for i in 0..logits.len() {
            let mut up = logits;
            let mut down = logits;
            up[i] += eps;
            down[i] -= eps;
            let numeric = (cross_entropy(&up, label).0 - cross_entropy(&down, label).0) / (2.0 * eps);
            assert!((numeric - grad[i]).abs() < 1e-8, "coord {i}: {numeric} vs {}", grad[i]);
        }
    }
}
