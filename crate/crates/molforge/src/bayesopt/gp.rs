//! Gaussian-process regression with an isotropic squared-exponential kernel.
//!
//! Hyperparameters (log lengthscale, log signal variance, log noise
//! variance) are fit by gradient ascent on the log marginal likelihood with
//! analytic gradients fed through Adam. Exact inference up to a size
//! threshold; beyond it, an inducing-point approximation with k-means
//! centers takes over, with hyperparameters fit on a subsample.

use super::BayesoptError;
use crate::tensor::{adam_step, AdamParams, AdamState, Rng};

#[derive(Debug, Clone)]
pub struct GpConfig {
    /// Adam steps on the log marginal likelihood.
    pub hyper_iters: usize,
    pub hyper_lr: f64,
    /// Training-set size beyond which the sparse path activates.
    pub sparse_threshold: usize,
    pub inducing: usize,
    /// Subsample used for hyperparameter fitting in sparse mode.
    pub hyper_subsample: usize,
    /// Pins the noise variance after hyperparameter fitting; used for
    /// noise-free interpolation checks.
    pub noise_override: Option<f64>,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            hyper_iters: 40,
            hyper_lr: 0.1,
            sparse_threshold: 2000,
            inducing: 256,
            hyper_subsample: 512,
            noise_override: None,
            seed: 31,
        }
    }
}

/// Fitted model. Exact mode keeps the Cholesky factor of `K + noise I`;
/// sparse mode keeps the inducing-point factorization.
pub struct GpModel {
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<f64>,
    dim: usize,
    y_mean: f64,
    /// log lengthscale, log signal variance, log noise variance
    log_hyper: [f64; 3],
    exact: Option<ExactState>,
    sparse: Option<SparseState>,
    /// Final jitter added to keep the factorization positive definite.
    pub jitter: f64,
}

struct ExactState {
    chol: Chol,
    alpha: Vec<f64>,
}

struct SparseState {
    inducing: Vec<Vec<f64>>,
    /// Cholesky of K(Z,Z) + jitter.
    quu_chol: Chol,
    /// Cholesky of A = Quu + Kuf diag(lambda)^-1 Kfu.
    a_chol: Chol,
    /// A^-1 Kuf lambda^-1 y_centered.
    beta: Vec<f64>,
}

impl GpModel {
    pub fn lengthscale(&self) -> f64 {
        self.log_hyper[0].exp()
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_hyper[1].exp()
    }

    pub fn noise_variance(&self) -> f64 {
        self.log_hyper[2].exp()
    }

    pub fn is_sparse(&self) -> bool {
        self.sparse.is_some()
    }

    /// Latent posterior mean and variance at a point (noise not included;
    /// see [`GpModel::predict_observed`]). Negative variances below -1e-10
    /// warn; small negatives clamp to zero.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64), BayesoptError> {
        if x.len() != self.dim {
            return Err(BayesoptError::DimensionMismatch { got: x.len(), want: self.dim });
        }
        let s = self.signal_variance();
        let (mean, var) = if let Some(exact) = &self.exact {
            let k_star = self.kernel_row(x, &self.train_x);
            let mean: f64 =
                k_star.iter().zip(&exact.alpha).map(|(k, a)| k * a).sum::<f64>() + self.y_mean;
            let v = exact.chol.forward_solve(&k_star);
            let var = s - v.iter().map(|vi| vi * vi).sum::<f64>();
            (mean, var)
        } else {
            let sp = self.sparse.as_ref().expect("fitted model");
            let k_star = self.kernel_row(x, &sp.inducing);
            let mean: f64 =
                k_star.iter().zip(&sp.beta).map(|(k, b)| k * b).sum::<f64>() + self.y_mean;
            let vq = sp.quu_chol.forward_solve(&k_star);
            let va = sp.a_chol.forward_solve(&k_star);
            let var = s - vq.iter().map(|v| v * v).sum::<f64>()
                + va.iter().map(|v| v * v).sum::<f64>();
            (mean, var)
        };
        if var < -1e-10 {
            eprintln!("warning: clamping negative posterior variance {var:.3e}");
        }
        Ok((mean, var.max(0.0)))
    }

    /// Posterior for a noisy observation: latent variance plus noise.
    pub fn predict_observed(&self, x: &[f64]) -> Result<(f64, f64), BayesoptError> {
        let (mean, var) = self.predict(x)?;
        Ok((mean, var + self.noise_variance()))
    }

    /// Gradient of the posterior (mean, sigma) with respect to the query
    /// point; used by the acquisition ascent.
    pub fn predict_grad(&self, x: &[f64]) -> Result<(f64, f64, Vec<f64>, Vec<f64>), BayesoptError> {
        let (mean, var) = self.predict(x)?;
        let sigma = var.sqrt();
        let ell2 = self.lengthscale().powi(2);
        let exact = self.exact.as_ref().expect("gradient ascent requires the exact path");
        let k_star = self.kernel_row(x, &self.train_x);
        // dmu/dx = sum_i alpha_i dk_i/dx, dk_i/dx = k_i (x_i - x)/ell^2
        let mut dmean = vec![0.0; self.dim];
        for (i, xi) in self.train_x.iter().enumerate() {
            let coeff = exact.alpha[i] * k_star[i] / ell2;
            for d in 0..self.dim {
                dmean[d] += coeff * (xi[d] - x[d]);
            }
        }
        // dvar/dx = -2 (A^-1 k)^T dk/dx
        let ainv_k = exact.chol.solve(&k_star);
        let mut dvar = vec![0.0; self.dim];
        for (i, xi) in self.train_x.iter().enumerate() {
            let coeff = -2.0 * ainv_k[i] * k_star[i] / ell2;
            for d in 0..self.dim {
                dvar[d] += coeff * (xi[d] - x[d]);
            }
        }
        let dsigma: Vec<f64> = if sigma > 1e-12 {
            dvar.iter().map(|dv| dv / (2.0 * sigma)).collect()
        } else {
            vec![0.0; self.dim]
        };
        Ok((mean, sigma, dmean, dsigma))
    }

    /// Log marginal likelihood of the training data under the fitted
    /// hyperparameters (exact path).
    pub fn log_marginal_likelihood(&self) -> f64 {
        let exact = self.exact.as_ref().expect("exact path");
        let y: Vec<f64> = self.train_y.iter().map(|v| v - self.y_mean).collect();
        let n = y.len() as f64;
        let fit: f64 = y.iter().zip(&exact.alpha).map(|(yi, ai)| yi * ai).sum();
        -0.5 * fit - exact.chol.log_det_half() - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    fn kernel_row(&self, x: &[f64], points: &[Vec<f64>]) -> Vec<f64> {
        let s = self.signal_variance();
        let ell2 = self.lengthscale().powi(2);
        points
            .iter()
            .map(|p| s * (-sq_dist(x, p) / (2.0 * ell2)).exp())
            .collect()
    }
}

/// Fits hyperparameters and the posterior factorization.
pub fn gp_fit(
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    config: &GpConfig,
) -> Result<GpModel, BayesoptError> {
    if x.is_empty() || x.len() != y.len() {
        return Err(BayesoptError::EmptyTrainingSet);
    }
    let dim = x[0].len();
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut rng = Rng::seed_from(config.seed);

    // hyperparameter fitting set
    let (hx, hy): (Vec<Vec<f64>>, Vec<f64>) = if x.len() > config.hyper_subsample {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        rng.shuffle(&mut idx);
        idx.truncate(config.hyper_subsample);
        (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
    } else {
        (x.clone(), y.clone())
    };
    let hy_c: Vec<f64> = hy.iter().map(|v| v - y_mean).collect();

    let mut log_hyper = optimize_hypers(&hx, &hy_c, config)?;
    if let Some(noise) = config.noise_override {
        log_hyper[2] = noise.max(1e-300).ln();
    }

    let mut model = GpModel {
        dim,
        y_mean,
        log_hyper,
        exact: None,
        sparse: None,
        jitter: 0.0,
        train_x: x,
        train_y: y,
    };

    if model.train_x.len() <= config.sparse_threshold {
        let yc: Vec<f64> = model.train_y.iter().map(|v| v - y_mean).collect();
        let (chol, jitter) = factorize(&model.train_x, &model.log_hyper)?;
        let alpha = chol.solve(&yc);
        model.jitter = jitter;
        model.exact = Some(ExactState { chol, alpha });
    } else {
        model.sparse = Some(fit_sparse(&model, config, &mut rng)?);
    }
    Ok(model)
}

/// Adam ascent on the log marginal likelihood with analytic gradients.
fn optimize_hypers(
    x: &[Vec<f64>],
    y_centered: &[f64],
    config: &GpConfig,
) -> Result<[f64; 3], BayesoptError> {
    let n = x.len();
    let y_var = (y_centered.iter().map(|v| v * v).sum::<f64>() / n as f64).max(1e-6);
    // median-distance lengthscale init
    let mut dists = Vec::new();
    for i in 0..n.min(50) {
        for j in (i + 1)..n.min(50) {
            dists.push(sq_dist(&x[i], &x[j]).sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = dists.get(dists.len() / 2).copied().unwrap_or(1.0).max(1e-3);

    let mut theta = vec![median.ln(), y_var.ln(), (0.01 * y_var).ln()];
    let mut state = AdamState::new(3);
    let hp = AdamParams::with_lr(config.hyper_lr);
    for _ in 0..config.hyper_iters {
        let grad = match lml_gradient(x, y_centered, &theta) {
            Some(g) => g,
            None => break, // singular at these hyperparameters; keep previous
        };
        // ascent: feed the negated gradient to the minimizer
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        theta = adam_step(&theta, &neg, &mut state, &hp);
        theta[2] = theta[2].max((1e-8f64).ln()); // keep noise positive definite
    }
    Ok([theta[0], theta[1], theta[2]])
}

/// Analytic LML gradient for (log ell, log s, log noise).
fn lml_gradient(x: &[Vec<f64>], y: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
    let n = x.len();
    let (ell2, s, noise) = ((theta[0] * 2.0).exp(), theta[1].exp(), theta[2].exp());
    let mut k = vec![0.0; n * n];
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = sq_dist(&x[i], &x[j]);
            d2[i * n + j] = d;
            k[i * n + j] = s * (-d / (2.0 * ell2)).exp();
        }
    }
    let mut a = k.clone();
    for i in 0..n {
        a[i * n + i] += noise;
    }
    let chol = Chol::new(&a, n)?;
    let alpha = chol.solve(y);
    let a_inv = chol.inverse();

    // dLML/dtheta = 0.5 tr((alpha alpha^T - A^-1) dA/dtheta)
    let mut grads = Vec::with_capacity(3);
    for which in 0..3 {
        let mut trace = 0.0;
        for i in 0..n {
            for j in 0..n {
                let da = match which {
                    0 => k[i * n + j] * d2[i * n + j] / ell2, // d/dlog ell
                    1 => k[i * n + j],                        // d/dlog s
                    _ => {
                        if i == j {
                            noise
                        } else {
                            0.0
                        }
                    }
                };
                trace += (alpha[i] * alpha[j] - a_inv[i * n + j]) * da;
            }
        }
        grads.push(0.5 * trace);
    }
    Some(grads)
}

fn factorize(x: &[Vec<f64>], theta: &[f64; 3]) -> Result<(Chol, f64), BayesoptError> {
    let n = x.len();
    let (ell2, s, noise) = ((theta[0] * 2.0).exp(), theta[1].exp(), theta[2].exp());
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = s * (-sq_dist(&x[i], &x[j]) / (2.0 * ell2)).exp();
        }
        a[i * n + i] += noise;
    }
    // jitter escalation before declaring the kernel singular
    let scale = s + noise;
    let mut jitter = 0.0;
    loop {
        let mut trial = a.clone();
        if jitter > 0.0 {
            for i in 0..n {
                trial[i * n + i] += jitter * scale;
            }
        }
        if let Some(chol) = Chol::new(&trial, n) {
            return Ok((chol, jitter * scale));
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
        if jitter > 1e-6 {
            return Err(BayesoptError::SingularKernel);
        }
    }
}

fn fit_sparse(
    model: &GpModel,
    config: &GpConfig,
    rng: &mut Rng,
) -> Result<SparseState, BayesoptError> {
    let k = config.inducing.min(model.train_x.len());
    let inducing = kmeans(&model.train_x, k, 10, rng);
    let (ell2, s, noise) =
        (model.lengthscale().powi(2), model.signal_variance(), model.noise_variance());
    let kern = |a: &[f64], b: &[f64]| s * (-sq_dist(a, b) / (2.0 * ell2)).exp();

    let m = inducing.len();
    let n = model.train_x.len();
    let mut quu = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            quu[i * m + j] = kern(&inducing[i], &inducing[j]);
        }
        quu[i * m + i] += 1e-8 * s;
    }
    let quu_chol = Chol::new(&quu, m).ok_or(BayesoptError::SingularKernel)?;

    let kfu: Vec<Vec<f64>> = model
        .train_x
        .iter()
        .map(|xi| inducing.iter().map(|z| kern(xi, z)).collect())
        .collect();

    // FITC diagonal: k(x,x) - q(x,x) + noise
    let mut lambda = vec![0.0; n];
    for i in 0..n {
        let v = quu_chol.forward_solve(&kfu[i]);
        let qff: f64 = v.iter().map(|a| a * a).sum();
        lambda[i] = (s - qff).max(0.0) + noise;
    }

    // A = Quu + Kuf lambda^-1 Kfu
    let mut a = quu.clone();
    for p in 0..m {
        for q in 0..m {
            let mut acc = 0.0;
            for i in 0..n {
                acc += kfu[i][p] * kfu[i][q] / lambda[i];
            }
            a[p * m + q] += acc;
        }
    }
    let a_chol = Chol::new(&a, m).ok_or(BayesoptError::SingularKernel)?;

    let yc: Vec<f64> = model.train_y.iter().map(|v| v - model.y_mean).collect();
    let mut rhs = vec![0.0; m];
    for p in 0..m {
        for i in 0..n {
            rhs[p] += kfu[i][p] * yc[i] / lambda[i];
        }
    }
    let beta = a_chol.solve(&rhs);
    Ok(SparseState { inducing, quu_chol, a_chol, beta })
}

/// Seeded Lloyd iterations for inducing-point selection.
fn kmeans(points: &[Vec<f64>], k: usize, iters: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    rng.shuffle(&mut idx);
    let mut centers: Vec<Vec<f64>> = idx[..k].iter().map(|&i| points[i].clone()).collect();
    let dim = points[0].len();
    for _ in 0..iters {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for p in points {
            let nearest = (0..k)
                .min_by(|&a, &b| {
                    sq_dist(p, &centers[a]).partial_cmp(&sq_dist(p, &centers[b])).unwrap()
                })
                .unwrap();
            counts[nearest] += 1;
            for d in 0..dim {
                sums[nearest][d] += p[d];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..dim {
                    centers[c][d] = sums[c][d] / counts[c] as f64;
                }
            }
        }
    }
    centers
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Dense lower-triangular Cholesky factor with solves.
pub(crate) struct Chol {
    l: Vec<f64>,
    n: usize,
}

impl Chol {
    /// Returns `None` when the matrix is not positive definite.
    pub(crate) fn new(a: &[f64], n: usize) -> Option<Chol> {
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[i * n + j];
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return None;
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Some(Chol { l, n })
    }

    /// Solves L v = b.
    pub(crate) fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut v = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self.l[i * n + k] * v[k];
            }
            v[i] = sum / self.l[i * n + i];
        }
        v
    }

    /// Solves (L L^T) x = b.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = self.forward_solve(b);
        for i in (0..n).rev() {
            let mut sum = x[i];
            for k in (i + 1)..n {
                sum -= self.l[k * n + i] * x[k];
            }
            x[i] = sum / self.l[i * n + i];
        }
        x
    }

    /// Full inverse via column solves.
    pub(crate) fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for col in 0..n {
            e[col] = 1.0;
            let x = self.solve(&e);
            for row in 0..n {
                inv[row * n + col] = x[row];
            }
            e[col] = 0.0;
        }
        inv
    }

    /// Sum of log diagonal entries, i.e. 0.5 log det A.
    pub(crate) fn log_det_half(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum()
    }

    /// Reconstruction L L^T for factorization checks.
    #[cfg(test)]
    pub(crate) fn reconstruct(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut sum = 0.0;
                for k in 0..n {
                    sum += self.l[i * n + k] * self.l[j * n + k];
                }
                a[i * n + j] = sum;
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> GpConfig {
        GpConfig { hyper_iters: 25, ..Default::default() }
    }

    #[test]
    fn empty_training_set_rejected() {
        assert!(matches!(
            gp_fit(vec![], vec![], &quick_config()),
            Err(BayesoptError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn single_point_interpolates_as_noise_vanishes() {
        let model = gp_fit(vec![vec![0.5]], vec![3.0], &quick_config()).unwrap();
        let (mean, var) = model.predict(&[0.5]).unwrap();
        // with one point, the posterior mean at that point approaches y as
        // noise shrinks; the fitted noise is small relative to signal
        assert!((mean - 3.0).abs() < 0.1, "mean {mean}");
        assert!(var <= model.noise_variance() + model.jitter + 1e-9, "var {var}");
    }

    #[test]
    fn training_point_variance_bounded_by_noise() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.3]).collect();
        let y: Vec<f64> = x.iter().map(|p| (2.0 * p[0]).sin()).collect();
        let model = gp_fit(x.clone(), y, &quick_config()).unwrap();
        for p in &x {
            let (_, var) = model.predict(p).unwrap();
            assert!(
                var <= model.noise_variance() + model.jitter + 1e-9,
                "latent variance {var} above noise {}",
                model.noise_variance()
            );
        }
    }

    #[test]
    fn far_point_reverts_to_prior() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.1]).collect();
        let y = vec![0.3, 0.5, 0.1, 0.4, 0.2, 0.3];
        let model = gp_fit(x, y, &quick_config()).unwrap();
        let (_, var) = model.predict_observed(&[1e6]).unwrap();
        let prior = model.signal_variance() + model.noise_variance();
        assert!((var - prior).abs() < 1e-9 * prior.max(1.0), "var {var} vs prior {prior}");
    }

    #[test]
    fn mean_is_linear_in_targets() {
        let mut rng = Rng::seed_from(7);
        let x: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let y1: Vec<f64> = (0..10).map(|_| rng.normal()).collect();
        let y2: Vec<f64> = (0..10).map(|_| rng.normal()).collect();
        // hold hyperparameters fixed across fits to expose linearity
        let cfg = GpConfig { hyper_iters: 0, ..quick_config() };
        let m1 = gp_fit(x.clone(), y1.clone(), &cfg).unwrap();
        let m2 = gp_fit(x.clone(), y2.clone(), &cfg).unwrap();
        let y_sum: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
        let m3 = gp_fit(x.clone(), y_sum, &cfg).unwrap();
        // hyper init depends only on x and y variance; pin identical hypers
        // by reusing m1's for a manual check instead when they differ
        if (m1.log_hyper[0] - m2.log_hyper[0]).abs() < 1e-12
            && (m1.log_hyper[0] - m3.log_hyper[0]).abs() < 1e-12
        {
            let q = vec![0.2, -0.4];
            let (a, _) = m1.predict(&q).unwrap();
            let (b, _) = m2.predict(&q).unwrap();
            let (c, _) = m3.predict(&q).unwrap();
            assert!((a + b - c).abs() < 1e-8, "{a} + {b} != {c}");
        }
    }

    #[test]
    fn symmetric_inputs_give_symmetric_predictions() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![2.0, 2.0];
        let model = gp_fit(x, y, &quick_config()).unwrap();
        let (ma, va) = model.predict(&[-0.3]).unwrap();
        let (mb, vb) = model.predict(&[0.3]).unwrap();
        assert!((ma - mb).abs() < 1e-9);
        assert!((va - vb).abs() < 1e-9);
    }

    /// Independent dense-formula oracle for the log marginal likelihood.
    #[test]
    fn lml_matches_direct_dense_formula() {
        let mut rng = Rng::seed_from(13);
        let x: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let y: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        let model = gp_fit(x.clone(), y.clone(), &quick_config()).unwrap();
        let got = model.log_marginal_likelihood();

        // direct: -0.5 y^T A^-1 y - 0.5 ln det A - n/2 ln 2pi via Gauss-Jordan
        let n = x.len();
        let (s, ell2, noise) = (
            model.signal_variance(),
            model.lengthscale().powi(2),
            model.noise_variance(),
        );
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = s * (-sq_dist(&x[i], &x[j]) / (2.0 * ell2)).exp();
            }
            a[i * n + i] += noise + model.jitter;
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        let (inv, det) = gauss_jordan(&a, n);
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += yc[i] * inv[i * n + j] * yc[j];
            }
        }
        let want =
            -0.5 * quad - 0.5 * det.ln() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    fn gauss_jordan(a: &[f64], n: usize) -> (Vec<f64>, f64) {
        let mut m = a.to_vec();
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            inv[i * n + i] = 1.0;
        }
        let mut det = 1.0;
        for col in 0..n {
            let pivot = m[col * n + col];
            det *= pivot;
            for j in 0..n {
                m[col * n + j] /= pivot;
                inv[col * n + j] /= pivot;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let f = m[row * n + col];
                for j in 0..n {
                    m[row * n + j] -= f * m[col * n + j];
                    inv[row * n + j] -= f * inv[col * n + j];
                }
            }
        }
        (inv, det)
    }

    #[test]
    fn cholesky_reconstructs_random_psd() {
        let mut rng = Rng::seed_from(3);
        for _ in 0..5 {
            let n = 6;
            let mut b = vec![0.0; n * n];
            for v in b.iter_mut() {
                *v = rng.normal();
            }
            // A = B B^T + I is positive definite
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut sum = 0.0;
                    for k in 0..n {
                        sum += b[i * n + k] * b[j * n + k];
                    }
                    a[i * n + j] = sum;
                }
                a[i * n + i] += 1.0;
            }
            let chol = Chol::new(&a, n).unwrap();
            let rec = chol.reconstruct();
            let max_err = a
                .iter()
                .zip(&rec)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(max_err < 1e-8, "reconstruction error {max_err}");
        }
    }

    #[test]
    fn sparse_path_tracks_exact_predictions() {
        let mut rng = Rng::seed_from(21);
        let x: Vec<Vec<f64>> = (0..300)
            .map(|_| vec![rng.range_f64(-2.0, 2.0), rng.range_f64(-2.0, 2.0)])
            .collect();
        let y: Vec<f64> = x.iter().map(|p| (p[0]).sin() + 0.5 * p[1]).collect();
        let exact = gp_fit(x.clone(), y.clone(), &quick_config()).unwrap();
        let sparse_cfg = GpConfig {
            sparse_threshold: 100,
            inducing: 128,
            ..quick_config()
        };
        let sparse = gp_fit(x, y, &sparse_cfg).unwrap();
        assert!(sparse.is_sparse());
        assert!(!exact.is_sparse());
        let mut err = 0.0f64;
        for _ in 0..50 {
            let q = vec![rng.range_f64(-2.0, 2.0), rng.range_f64(-2.0, 2.0)];
            let (me, _) = exact.predict(&q).unwrap();
            let (ms, _) = sparse.predict(&q).unwrap();
            err = err.max((me - ms).abs());
        }
        assert!(err < 0.15, "sparse deviates from exact by {err}");
    }
}
