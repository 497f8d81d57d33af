use super::Matrix;
use crate::error::{Error, Result};

/// Compares an analytic gradient against central differences.
///
/// Each coordinate is perturbed by `±eps` and the numeric derivative
/// `(f(x+eps) - f(x-eps)) / 2eps` is formed. The return value is the largest
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)` over all
/// coordinates.
pub fn check_gradient<F>(mut f: F, x: &Matrix, analytic: &Matrix, eps: f64) -> Result<f64>
where
    F: FnMut(&Matrix) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::Input(format!("eps must be positive, got {eps}")));
    }
    if x.shape() != analytic.shape() {
        return Err(Error::Shape {
            op: "check_gradient",
            left: x.shape(),
            right: analytic.shape(),
        });
    }
    let mut probe = x.clone();
    let mut worst: f64 = 0.0;
    for idx in 0..x.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + eps;
        let plus = f(&probe);
        probe.as_mut_slice()[idx] = orig - eps;
        let minus = f(&probe);
        probe.as_mut_slice()[idx] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Evaluation(format!(
                "non-finite function value at coordinate {idx}"
            )));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic.as_slice()[idx];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn linear_function() {
        let x = Rng::new(1).uniform_matrix(3, 4, -1.0, 1.0);
        let err = check_gradient(|m| m.sum(), &x, &Matrix::filled(3, 4, 1.0), 1e-5).unwrap();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn quadratic() {
        let x = Rng::new(2).uniform_matrix(2, 5, -2.0, 2.0);
        let f = |m: &Matrix| 0.5 * m.as_slice().iter().map(|v| v * v).sum::<f64>();
        let err = check_gradient(f, &x, &x, 1e-5).unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn detects_wrong_gradient() {
        let x = Matrix::filled(1, 2, 1.0);
        let err = check_gradient(|m| m.sum(), &x, &Matrix::filled(1, 2, 2.0), 1e-5).unwrap();
        assert!(err > 0.4);
    }

    #[test]
    fn non_finite_is_an_error() {
        let x = Matrix::zeros(1, 1);
        let r = check_gradient(|_| f64::NAN, &x, &x, 1e-5);
        assert!(matches!(r, Err(Error::Evaluation(_))));
    }

    #[test]
    fn rejects_bad_eps() {
        let x = Matrix::zeros(1, 1);
        assert!(check_gradient(|m| m.sum(), &x, &x, 0.0).is_err());
    }
}
