//! Expected improvement under a Gaussian posterior, with the standard
//! normal density and distribution functions it needs.

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF via an erf rational approximation (absolute error
/// below 1.5e-7).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// `E[max(Y - best, 0)]` for `Y ~ N(mean, variance)`. Collapses to
/// `max(mean - best, 0)` at zero variance.
pub fn expected_improvement(mean: f64, variance: f64, best_y: f64) -> f64 {
    debug_assert!(variance >= 0.0, "negative variance {variance}");
    let sigma = variance.max(0.0).sqrt();
    if sigma < 1e-12 {
        return (mean - best_y).max(0.0);
    }
    let u = (mean - best_y) / sigma;
    (sigma * (u * normal_cdf(u) + normal_pdf(u))).max(0.0)
}
