//! Autoencoder training (negative ELBO under Adam with KL warm-up) and
//! prior sampling with descriptor reporting.

use super::model::{DecodeMode, TreeVae, VaeConfig};
use super::vocab::Vocabulary;
use super::{decompose, JtvaeError, JunctionTree};
use crate::chem::{canonical_smiles, MolGraph};
use crate::descriptors::{descriptor_set, DescriptorSet, FragmentScoreTable};
use crate::mpnn::SurrogateModel;
use crate::tensor::ops::{add, mul_scalar};
use crate::tensor::{AdamOptimizer, AdamParams, Rng, Tape, Tensor};

#[derive(Debug, Clone)]
pub struct VaeTrainConfig {
    /// Optimizer updates.
    pub iterations: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Final KL weight after warm-up.
    pub beta_max: f64,
    /// Updates over which beta ramps linearly from zero.
    pub beta_warmup: usize,
    pub seed: u64,
}

impl Default for VaeTrainConfig {
    fn default() -> Self {
        VaeTrainConfig {
            iterations: 400,
            batch_size: 8,
            lr: 1e-3,
            beta_max: 0.01,
            beta_warmup: 100,
            seed: 23,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VaeTrainLog {
    /// Mean reconstruction loss per iteration.
    pub recon_curve: Vec<f64>,
    /// Mean KL per iteration.
    pub kl_curve: Vec<f64>,
}

/// Trains a fresh model on the corpus; molecules must all decompose into the
/// vocabulary.
pub fn train_vae(
    corpus: &[MolGraph],
    vocab: &Vocabulary,
    config: VaeConfig,
    tc: &VaeTrainConfig,
) -> Result<(TreeVae, VaeTrainLog), JtvaeError> {
    if corpus.is_empty() {
        return Err(JtvaeError::EmptyCorpus);
    }
    let mut trees: Vec<(JunctionTree, &MolGraph)> = Vec::with_capacity(corpus.len());
    for mol in corpus {
        let mut tree = decompose(mol)?;
        vocab.assign(&mut tree, mol)?;
        trees.push((tree, mol));
    }

    let mut seed_rng = Rng::seed_from(tc.seed);
    let vae = TreeVae::new(config, &mut seed_rng.split());
    let mut noise_rng = seed_rng.split();
    let mut shuffle_rng = seed_rng.split();

    let params = vae.params();
    let mut optimizer = AdamOptimizer::new(&params, AdamParams::with_lr(tc.lr));
    let mut order: Vec<usize> = (0..trees.len()).collect();
    let mut cursor = order.len(); // trigger shuffle on first use
    let mut recon_curve = Vec::with_capacity(tc.iterations);
    let mut kl_curve = Vec::with_capacity(tc.iterations);

    for iter in 0..tc.iterations {
        let beta = if tc.beta_warmup == 0 {
            tc.beta_max
        } else {
            tc.beta_max * (iter as f64 / tc.beta_warmup as f64).min(1.0)
        };
        let tape = Tape::new();
        let mut total: Option<Tensor> = None;
        let mut recon_sum = 0.0;
        let mut kl_sum = 0.0;
        let batch = tc.batch_size.min(trees.len());
        for _ in 0..batch {
            if cursor >= order.len() {
                shuffle_rng.shuffle(&mut order);
                cursor = 0;
            }
            let (tree, mol) = &trees[order[cursor]];
            cursor += 1;
            let (loss, recon, kl) = vae.elbo_loss(&tape, tree, mol, beta, &mut noise_rng);
            recon_sum += recon;
            kl_sum += kl;
            total = Some(match total {
                Some(t) => add(&t, &loss),
                None => loss,
            });
        }
        let loss = mul_scalar(&total.expect("non-empty batch"), 1.0 / batch as f64);
        loss.backward().expect("fresh tape");
        optimizer.step(&params);
        recon_curve.push(recon_sum / batch as f64);
        kl_curve.push(kl_sum / batch as f64);
    }

    Ok((vae, VaeTrainLog { recon_curve, kl_curve }))
}

/// One sampled molecule with its descriptors.
#[derive(Debug, Clone)]
pub struct SampleRow {
    pub canonical: String,
    pub descriptors: DescriptorSet,
    pub pic50: Option<f64>,
    pub budget_exceeded: bool,
}

#[derive(Debug, Clone)]
pub struct SampleReport {
    pub requested: usize,
    /// Unique molecules by canonical SMILES.
    pub rows: Vec<SampleRow>,
}

impl SampleReport {
    pub fn unique_count(&self) -> usize {
        self.rows.len()
    }

    /// Per-molecule CSV: canonical_smiles, qed, logp, sa, pic50.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["canonical_smiles", "qed", "logp", "sa", "pic50"])
            .expect("in-memory write");
        for row in &self.rows {
            w.write_record([
                row.canonical.clone(),
                format!("{:.6}", row.descriptors.qed),
                format!("{:.6}", row.descriptors.logp),
                format!("{:.6}", row.descriptors.sa),
                row.pic50.map(|p| format!("{p:.6}")).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf8")
    }

    /// Binned distribution CSV for descriptor comparisons:
    /// descriptor, bin_low, bin_high, count.
    pub fn histogram_csv(&self, bins: usize) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["descriptor", "bin_low", "bin_high", "count"])
            .expect("in-memory write");
        let series: [(&str, Vec<f64>); 4] = [
            ("qed", self.rows.iter().map(|r| r.descriptors.qed).collect()),
            ("logp", self.rows.iter().map(|r| r.descriptors.logp).collect()),
            ("sa", self.rows.iter().map(|r| r.descriptors.sa).collect()),
            ("pic50", self.rows.iter().filter_map(|r| r.pic50).collect()),
        ];
        for (name, values) in series {
            if values.is_empty() {
                continue;
            }
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let width = ((hi - lo) / bins as f64).max(1e-9);
            let mut counts = vec![0usize; bins];
            for v in &values {
                let idx = (((v - lo) / width) as usize).min(bins - 1);
                counts[idx] += 1;
            }
            for (i, count) in counts.iter().enumerate() {
                w.write_record([
                    name.to_string(),
                    format!("{:.6}", lo + i as f64 * width),
                    format!("{:.6}", lo + (i + 1) as f64 * width),
                    count.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf8")
    }
}

/// Draws `n` prior samples, decodes and deduplicates them, and reports
/// descriptor values (potency included when a surrogate is supplied).
pub fn sample_and_report(
    vae: &TreeVae,
    vocab: &Vocabulary,
    n: usize,
    frag_table: &FragmentScoreTable,
    surrogate: Option<&SurrogateModel>,
    rng: &mut Rng,
) -> Result<SampleReport, JtvaeError> {
    let mut seen = std::collections::BTreeMap::new();
    for _ in 0..n {
        let z: Vec<f64> = (0..vae.config.latent).map(|_| rng.normal()).collect();
        let decoded = vae.decode(&z, vocab, &mut DecodeMode::Sample(rng))?;
        let key = canonical_smiles(&decoded.mol).into_string();
        seen.entry(key).or_insert(decoded);
    }
    let mut rows = Vec::with_capacity(seen.len());
    for (canonical, decoded) in seen {
        let descriptors = descriptor_set(&decoded.mol, frag_table)
            .map_err(|e| JtvaeError::Io(e.to_string()))?;
        let pic50 = match surrogate {
            Some(model) => Some(
                model
                    .predict(&decoded.mol)
                    .map_err(|e| JtvaeError::Io(e.to_string()))?,
            ),
            None => None,
        };
        rows.push(SampleRow {
            canonical,
            descriptors,
            pic50,
            budget_exceeded: decoded.budget_exceeded,
        });
    }
    Ok(SampleReport { requested: n, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use crate::descriptors::build_fragment_table;
    use crate::jtvae::build_vocabulary;

    fn toy_corpus() -> Vec<MolGraph> {
        ["CCO", "CCC", "CCN", "c1ccccc1", "CC(C)O", "CCCO", "OCCO", "CCCC"]
            .iter()
            .map(|s| parse_smiles(s).unwrap())
            .collect()
    }

    #[test]
    fn training_reduces_reconstruction_loss() {
        let corpus = toy_corpus();
        let vocab = build_vocabulary(&corpus).unwrap();
        let tc = VaeTrainConfig { iterations: 60, batch_size: 4, ..Default::default() };
        let (_, log) = train_vae(&corpus, &vocab, VaeConfig::desk(vocab.len()), &tc).unwrap();
        let head: f64 = log.recon_curve[..10].iter().sum::<f64>() / 10.0;
        let tail: f64 = log.recon_curve[log.recon_curve.len() - 10..].iter().sum::<f64>() / 10.0;
        assert!(tail < head, "reconstruction did not improve: {head} -> {tail}");
        assert!(log.kl_curve.iter().all(|&k| k >= 0.0));
    }

    #[test]
    fn empty_corpus_rejected() {
        let corpus = toy_corpus();
        let vocab = build_vocabulary(&corpus).unwrap();
        let err = train_vae(&[], &vocab, VaeConfig::desk(vocab.len()), &Default::default());
        assert!(matches!(err, Err(JtvaeError::EmptyCorpus)));
    }

    #[test]
    fn sampling_report_contract() {
        let corpus = toy_corpus();
        let vocab = build_vocabulary(&corpus).unwrap();
        let table = build_fragment_table(&corpus).unwrap();
        let vae = TreeVae::new(VaeConfig::desk(vocab.len()), &mut Rng::seed_from(2));
        let mut rng = Rng::seed_from(3);

        let empty = sample_and_report(&vae, &vocab, 0, &table, None, &mut rng).unwrap();
        assert_eq!(empty.unique_count(), 0);

        let report = sample_and_report(&vae, &vocab, 25, &table, None, &mut rng).unwrap();
        assert!(report.unique_count() <= 25);
        // closure: every sampled molecule decomposes
        for row in &report.rows {
            let mol = parse_smiles(&row.canonical).unwrap();
            assert!(decompose(&mol).is_ok(), "{} does not decompose", row.canonical);
        }
        let csv = report.to_csv();
        assert!(csv.starts_with("canonical_smiles,qed,logp,sa,pic50"));
        let hist = report.histogram_csv(10);
        assert!(hist.starts_with("descriptor,bin_low,bin_high,count"));
    }
}
