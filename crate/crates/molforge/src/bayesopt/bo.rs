//! The batched optimization loop: fit the surrogate on everything evaluated
//! so far, propose a batch of expected-improvement maximizers (random
//! restarts refined by gradient ascent), evaluate, and repeat for a fixed
//! number of iterations.

use super::ei::expected_improvement;
use super::gp::{gp_fit, GpConfig};
use super::BayesoptError;
use crate::chem::canonical_smiles;
use crate::jtvae::{DecodeMode, TreeVae, Vocabulary};
use crate::scoring::ScoreFunction;
use crate::tensor::Rng;

#[derive(Debug, Clone)]
pub struct BoConfig {
    pub iterations: usize,
    /// Proposals evaluated per iteration.
    pub batch: usize,
    /// Random restarts for acquisition maximization.
    pub restarts: usize,
    pub ascent_steps: usize,
    pub ascent_lr: f64,
    /// Latent box half-width; proposals stay inside [-bounds, bounds]^d.
    pub bounds: f64,
    pub seed: u64,
    pub gp: GpConfig,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            iterations: 10,
            batch: 50,
            restarts: 60,
            ascent_steps: 100,
            ascent_lr: 0.1,
            bounds: 3.0,
            seed: 41,
            gp: GpConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoTraceRow {
    pub iteration: usize,
    pub candidate: usize,
    pub smiles: Option<String>,
    pub score: Option<f64>,
    pub incumbent: f64,
}

pub struct BoOutcome<T> {
    /// Everything evaluated: latent point, score, payload.
    pub evaluated: Vec<(Vec<f64>, f64, Option<T>)>,
    /// Incumbent best score after each iteration (non-decreasing).
    pub incumbent_trace: Vec<f64>,
    pub trace: Vec<BoTraceRow>,
    pub best_score: f64,
    pub best_point: Vec<f64>,
    pub best_payload: Option<T>,
}

impl<T> BoOutcome<T> {
    /// Trace CSV: iteration, candidate, smiles, score, incumbent.
    pub fn trace_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["iteration", "candidate", "smiles", "score", "incumbent"])
            .expect("in-memory write");
        for row in &self.trace {
            w.write_record([
                row.iteration.to_string(),
                row.candidate.to_string(),
                row.smiles.clone().unwrap_or_default(),
                row.score.map(|s| format!("{s:.6}")).unwrap_or_default(),
                format!("{:.6}", row.incumbent),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf8")
    }
}

/// Maximizes a latent-space objective. The objective may decline a point
/// (returning `None`), which is logged and skipped.
pub fn bo_latent_maximize<T: Clone>(
    mut objective: impl FnMut(&[f64]) -> Option<(f64, Option<T>)>,
    initial: Vec<(Vec<f64>, f64, Option<T>)>,
    dim: usize,
    config: &BoConfig,
) -> Result<BoOutcome<T>, BayesoptError> {
    assert!(!initial.is_empty(), "need a non-empty initial design");
    let mut rng = Rng::seed_from(config.seed);
    let mut evaluated = initial;
    let mut trace = Vec::new();
    let mut incumbent_trace = Vec::with_capacity(config.iterations);
    let mut incumbent = evaluated
        .iter()
        .map(|(_, s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);

    for iteration in 0..config.iterations {
        let x: Vec<Vec<f64>> = evaluated.iter().map(|(p, _, _)| p.clone()).collect();
        let y: Vec<f64> = evaluated.iter().map(|(_, s, _)| *s).collect();
        let model = gp_fit(x, y, &config.gp)?;
        let best_y = incumbent;

        // restart pool: gradient-ascended starts ranked by acquisition
        // value; half are prior draws, half perturb the incumbent so late
        // iterations refine locally
        let incumbent_point = evaluated
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(p, _, _)| p.clone())
            .expect("non-empty");
        let mut proposals: Vec<(f64, Vec<f64>)> = Vec::with_capacity(config.restarts);
        for restart in 0..config.restarts {
            let mut point: Vec<f64> = if restart % 2 == 0 {
                (0..dim).map(|_| rng.normal().clamp(-config.bounds, config.bounds)).collect()
            } else {
                incumbent_point
                    .iter()
                    .map(|v| (v + 0.3 * rng.normal()).clamp(-config.bounds, config.bounds))
                    .collect()
            };
            for _ in 0..config.ascent_steps {
                let (mean, sigma, dmean, dsigma) = model.predict_grad(&point)?;
                if sigma < 1e-12 {
                    break;
                }
                let u = (mean - best_y) / sigma;
                let phi = super::ei::normal_pdf(u);
                let cdf = super::ei::normal_cdf(u);
                for d in 0..dim {
                    let g = cdf * dmean[d] + phi * dsigma[d];
                    point[d] = (point[d] + config.ascent_lr * g)
                        .clamp(-config.bounds, config.bounds);
                }
            }
            let (mean, var) = model.predict(&point)?;
            proposals.push((expected_improvement(mean, var, best_y), point));
        }
        proposals.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

        // batch selection with a small spacing filter; refill randomly
        let mut batch: Vec<Vec<f64>> = Vec::with_capacity(config.batch);
        for (_, p) in proposals {
            if batch.len() == config.batch {
                break;
            }
            if batch.iter().all(|q| sq_dist(q, &p) > 1e-10) {
                batch.push(p);
            }
        }
        while batch.len() < config.batch {
            batch.push(
                (0..dim).map(|_| rng.normal().clamp(-config.bounds, config.bounds)).collect(),
            );
        }

        for (ci, point) in batch.into_iter().enumerate() {
            match objective(&point) {
                Some((score, payload)) => {
                    incumbent = incumbent.max(score);
                    trace.push(BoTraceRow {
                        iteration,
                        candidate: ci,
                        smiles: None,
                        score: Some(score),
                        incumbent,
                    });
                    evaluated.push((point, score, payload));
                }
                None => {
                    trace.push(BoTraceRow {
                        iteration,
                        candidate: ci,
                        smiles: None,
                        score: None,
                        incumbent,
                    });
                }
            }
        }
        incumbent_trace.push(incumbent);
    }

    let (best_point, best_score, best_payload) = evaluated
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(p, s, t)| (p.clone(), *s, t.clone()))
        .expect("non-empty evaluations");
    Ok(BoOutcome { evaluated, incumbent_trace, trace, best_score, best_point, best_payload })
}

/// Molecule optimization through a trained autoencoder: the initial design
/// encodes a corpus subsample, proposals decode greedily and score under the
/// objective. Budget-truncated decodes are skipped with a log entry.
pub fn bo_loop(
    vae: &TreeVae,
    vocab: &Vocabulary,
    corpus: &[crate::chem::MolGraph],
    score_fn: &ScoreFunction,
    init_design: usize,
    config: &BoConfig,
) -> Result<BoOutcome<String>, BayesoptError> {
    let mut rng = Rng::seed_from(config.seed ^ 0xb0);
    let mut initial = Vec::new();
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    rng.shuffle(&mut order);
    for &i in order.iter().take(init_design.max(1)) {
        let mol = &corpus[i];
        let mut tree = crate::jtvae::decompose(mol)?;
        vocab.assign(&mut tree, mol)?;
        let (mu, _) = vae.encode(&tree);
        let report = score_fn.score(mol)?;
        initial.push((mu, report.total, Some(canonical_smiles(mol).into_string())));
    }

    let objective = |z: &[f64]| -> Option<(f64, Option<String>)> {
        let decoded = vae.decode(z, vocab, &mut DecodeMode::Greedy).ok()?;
        if decoded.budget_exceeded {
            return None;
        }
        let report = score_fn.score(&decoded.mol).ok()?;
        Some((report.total, Some(canonical_smiles(&decoded.mol).into_string())))
    };

    let mut outcome = bo_latent_maximize(objective, initial, vae.config.latent, config)?;
    // attach molecule labels to the trace rows in evaluation order
    let labels: Vec<Option<String>> =
        outcome.evaluated.iter().map(|(_, _, s)| s.clone()).collect();
    let offset = labels.len() - outcome.trace.iter().filter(|r| r.score.is_some()).count();
    let mut li = offset;
    for row in outcome.trace.iter_mut() {
        if row.score.is_some() {
            row.smiles = labels[li].clone();
            li += 1;
        }
    }
    Ok(outcome)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incumbent_trace_is_non_decreasing() {
        let mut rng = Rng::seed_from(1);
        let dim = 3;
        let target = vec![0.5, -0.7, 0.2];
        let objective = |z: &[f64]| {
            let d: f64 = z.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum();
            Some((-d, None::<()>))
        };
        let initial: Vec<(Vec<f64>, f64, Option<()>)> = (0..20)
            .map(|_| {
                let p: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
                let s = objective(&p).unwrap().0;
                (p, s, None)
            })
            .collect();
        let cfg = BoConfig {
            iterations: 4,
            batch: 8,
            restarts: 10,
            ascent_steps: 30,
            ..Default::default()
        };
        let outcome = bo_latent_maximize(objective, initial, dim, &cfg).unwrap();
        for w in outcome.incumbent_trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert_eq!(outcome.incumbent_trace.len(), 4);
        assert!(outcome.best_score > -1.0, "made progress: {}", outcome.best_score);
    }

    #[test]
    fn declined_candidates_are_logged_not_fatal() {
        let mut calls = 0;
        let objective = move |_z: &[f64]| {
            calls += 1;
            if calls % 2 == 0 {
                None
            } else {
                Some((calls as f64, None::<()>))
            }
        };
        let initial = vec![(vec![0.0, 0.0], 0.0, None)];
        let cfg = BoConfig {
            iterations: 2,
            batch: 4,
            restarts: 4,
            ascent_steps: 5,
            ..Default::default()
        };
        let outcome = bo_latent_maximize(objective, initial, 2, &cfg).unwrap();
        let skipped = outcome.trace.iter().filter(|r| r.score.is_none()).count();
        assert!(skipped > 0, "some candidates were declined");
        let csv = outcome.trace_csv();
        assert!(csv.starts_with("iteration,candidate,smiles,score,incumbent"));
    }
}
