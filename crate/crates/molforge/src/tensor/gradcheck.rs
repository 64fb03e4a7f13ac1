//! Central finite differences for validating analytic gradients. The
//! numeric side only evaluates forward passes, so it stays independent of
//! the backward implementation it checks.

/// Central-difference gradient of a scalar function at `x`.
pub fn finite_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = f(&probe);
        probe[i] = x[i] - h;
        let minus = f(&probe);
        probe[i] = x[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    grad
}

/// Largest relative disagreement between two gradient vectors, with a scale
/// floor so near-zero entries compare absolutely.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-4))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ops::{mul, sum};
    use crate::tensor::{Parameter, Tape};

    #[test]
    fn finite_difference_matches_simple_polynomial() {
        let mut f = |x: &[f64]| x[0] * x[0] + 3.0 * x[1];
        let g = finite_difference(&mut f, &[2.0, 5.0], 1e-6);
        assert!((g[0] - 4.0).abs() < 1e-6);
        assert!((g[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn tape_gradient_agrees_with_numeric() {
        let x0 = vec![0.3, -0.7, 1.1];
        let analytic = {
            let p = Parameter::new("x", vec![3], x0.clone());
            let tape = Tape::new();
            let x = tape.leaf(&p);
            sum(&mul(&x, &x)).backward().unwrap();
            let g = p.grad().clone();
            g
        };
        let mut f = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let numeric = finite_difference(&mut f, &x0, 1e-5);
        assert!(max_relative_error(&analytic, &numeric) < 1e-6);
    }
}
