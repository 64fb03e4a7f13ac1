//! Stage runner. Every stage reads its inputs from the artifact directory
//! and writes its outputs atomically, so stages are individually resumable:
//! a stage whose outputs already exist is skipped, and deleting one output
//! set reruns only that stage.

use super::config::RunConfig;
use super::corpus::toy_corpus;
use super::ingest::{ingest, read_curated, DatasetRecord};
use super::report::{pareto_csv, pareto_svg, top_k, top_k_csv, MethodPool};
use super::{write_atomic, PipelineError};
use crate::chem::{parse_smiles, MolGraph};
use crate::descriptors::{build_fragment_table, descriptor_set, FragmentScoreTable};
use crate::dqn::train_agent;
use crate::dtba::{synthetic_pairs, train_dtba, validate_candidates, DtbaConfig, TargetSequence};
use crate::fingerprint::similarity_matrix;
use crate::jtvae::{build_vocabulary, sample_and_report, train_vae, TreeVae, Vocabulary};
use crate::mpnn::{readout_ablation, train, SurrogateModel};
use crate::scoring::{score_csv, screen, Normalization, ScoreFunction, ScoreReport};
use crate::tensor::Rng;
use std::path::PathBuf;
use std::rc::Rc;

/// A fixed validation target sequence (protease-like composition), used when
/// no FASTA is supplied.
const DEFAULT_TARGET: &str = "SGFRKMAFPSGKVEGCMVQVTCGTTTLNGLWLDDVVYCPRHVICTSEDMLNPNYEDLLIRKSNHNFLVQAGNVQLRVIGHSMQNCVLKLKVDTANPKTPKYKFVRIQPGQTFSVLACYNGSPSGVYQCAMRPNFTIKGSFLNGSCGSVGF";

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    TrainSurrogate,
    TrainJtvae,
    OptimizeBo,
    TrainDqn,
    Score,
    Screen,
    ValidateDtba,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::TrainSurrogate,
        Stage::TrainJtvae,
        Stage::OptimizeBo,
        Stage::TrainDqn,
        Stage::Score,
        Stage::Screen,
        Stage::ValidateDtba,
        Stage::Report,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::TrainSurrogate => "train-surrogate",
            Stage::TrainJtvae => "train-jtvae",
            Stage::OptimizeBo => "optimize-bo",
            Stage::TrainDqn => "train-dqn",
            Stage::Score => "score",
            Stage::Screen => "screen",
            Stage::ValidateDtba => "validate-dtba",
            Stage::Report => "report",
        }
    }

    /// Files this stage promises to produce.
    pub fn outputs(&self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["curated.csv", "curation_log.txt", "fragments.mfsa"],
            Stage::TrainSurrogate => {
                &["surrogate.mfck", "surrogate.json", "surrogate_metrics.csv"]
            }
            Stage::TrainJtvae => &["vocab.tsv", "jtvae.mfck", "jtvae.json", "jtvae_train.csv"],
            Stage::OptimizeBo => &["bo_trace.csv", "bo_candidates.csv"],
            Stage::TrainDqn => &["dqn_episodes.jsonl", "dqn_pool.csv", "dqn_hits.csv"],
            Stage::Score => &["scores.csv"],
            Stage::Screen => &["screened.csv"],
            Stage::ValidateDtba => &["dtba.mfck", "dtba.json", "dtba_validated.csv"],
            Stage::Report => &[
                "top_k.csv",
                "pareto.csv",
                "pareto.svg",
                "similarity.csv",
                "samples.csv",
                "sample_hist.csv",
                "corpus_descriptors.csv",
            ],
        }
    }
}

/// Artifact directory handle.
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Artifacts> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Artifacts { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn read(&self, name: &str) -> Result<String, PipelineError> {
        std::fs::read_to_string(self.path(name))
            .map_err(|e| PipelineError::Io(format!("{name}: {e}")))
    }

    pub fn write(&self, name: &str, text: &str) -> Result<(), PipelineError> {
        write_atomic(&self.path(name), text.as_bytes()).map_err(PipelineError::from)
    }

    pub fn stage_done(&self, stage: Stage) -> bool {
        stage.outputs().iter().all(|f| self.path(f).exists())
    }
}

/// Runs one stage unconditionally.
pub fn stage(which: Stage, cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    match which {
        Stage::Ingest => stage_ingest(cfg, artifacts),
        Stage::TrainSurrogate => stage_surrogate(cfg, artifacts),
        Stage::TrainJtvae => stage_jtvae(cfg, artifacts),
        Stage::OptimizeBo => stage_bo(cfg, artifacts),
        Stage::TrainDqn => stage_dqn(cfg, artifacts),
        Stage::Score => stage_score(cfg, artifacts),
        Stage::Screen => stage_screen(cfg, artifacts),
        Stage::ValidateDtba => stage_dtba(cfg, artifacts),
        Stage::Report => stage_report(cfg, artifacts),
    }
}

/// Runs every stage in order, skipping the ones whose outputs exist.
/// Returns (stage name, ran) pairs.
pub fn run_all(
    cfg: &RunConfig,
    artifacts: &Artifacts,
) -> Result<Vec<(&'static str, bool)>, PipelineError> {
    let mut journal = Vec::new();
    for s in Stage::ALL {
        if artifacts.stage_done(s) {
            journal.push((s.name(), false));
            continue;
        }
        stage(s, cfg, artifacts)?;
        journal.push((s.name(), true));
    }
    Ok(journal)
}

fn stage_ingest(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    let raw = if let Some(spec) = cfg.input.strip_prefix("toy:") {
        let n: usize = spec
            .parse()
            .map_err(|_| PipelineError::Config(format!("bad toy corpus size '{spec}'")))?;
        let mut text = String::from("smiles,ic50_nm\n");
        for (smiles, ic50) in toy_corpus(n, cfg.seed) {
            text.push_str(&format!("{smiles},{ic50:.6}\n"));
        }
        text
    } else {
        std::fs::read_to_string(&cfg.input)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", cfg.input)))?
    };
    let outcome = ingest(&raw)?;
    artifacts.write("curated.csv", &outcome.to_csv())?;
    artifacts.write("curation_log.txt", &outcome.log_lines())?;

    let mols = curated_mols(&outcome.records)?;
    let table = build_fragment_table(&mols)
        .map_err(|e| PipelineError::in_stage("ingest", e))?;
    table
        .save(&artifacts.path("fragments.mfsa"))
        .map_err(|e| PipelineError::Io(e.to_string()))?;
    Ok(())
}

fn stage_surrogate(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    let records = load_records(artifacts)?;
    let dataset = dataset_pairs(&records)?;
    let mut rng = Rng::seed_from(cfg.seed ^ 0x5u64);
    let model = SurrogateModel::new(cfg.surrogate.clone(), &mut rng);
    let report = train(&model, &dataset, &cfg.surrogate_train)
        .map_err(|e| PipelineError::in_stage("train-surrogate", e))?;
    model
        .save(&artifacts.path("surrogate.mfck"))
        .map_err(|e| PipelineError::in_stage("train-surrogate", e))?;
    let variant = format!(
        "{}/{}",
        cfg.surrogate.readout.aggregator.name(),
        cfg.surrogate.readout.mode.name()
    );
    let metrics = format!(
        "variant,split,r2,mse\n{variant},train,{:.6},{:.6}\n{variant},validation,{:.6},{:.6}\n",
        report.train_r2, report.train_mse, report.val_r2, report.val_mse
    );
    artifacts.write("surrogate_metrics.csv", &metrics)?;
    Ok(())
}

/// The readout sweep; its own command rather than a run-all stage.
pub fn run_ablation(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    let records = load_records(artifacts)?;
    let dataset = dataset_pairs(&records)?;
    let table = readout_ablation(&dataset, &cfg.surrogate, &cfg.surrogate_train)
        .map_err(|e| PipelineError::in_stage("ablate-readouts", e))?;
    artifacts.write("ablation.csv", &table.to_csv())?;
    Ok(())
}

fn stage_jtvae(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    let records = load_records(artifacts)?;
    let mols = curated_mols(&records)?;
    let vocab =
        build_vocabulary(&mols).map_err(|e| PipelineError::in_stage("train-jtvae", e))?;
    artifacts.write("vocab.tsv", &vocab.to_tsv())?;
    let (vae, log) = train_vae(&mols, &vocab, cfg.vae_config(vocab.len()), &cfg.vae_train)
        .map_err(|e| PipelineError::in_stage("train-jtvae", e))?;
    vae.save(&artifacts.path("jtvae.mfck"))
        .map_err(|e| PipelineError::in_stage("train-jtvae", e))?;
    let mut curve = String::from("iteration,reconstruction,kl\n");
    for (i, (r, k)) in log.recon_curve.iter().zip(&log.kl_curve).enumerate() {
        curve.push_str(&format!("{i},{r:.6},{k:.6}\n"));
    }
    artifacts.write("jtvae_train.csv", &curve)?;
    Ok(())
}

fn stage_bo(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    let records = load_records(artifacts)?;
    let mols = curated_mols(&records)?;
    let vocab = load_vocab(artifacts)?;
    let vae = TreeVae::load(&artifacts.path("jtvae.mfck"))
        .map_err(|e| PipelineError::in_stage("optimize-bo", e))?;
    let score_fn = load_score_fn(cfg, artifacts)?;
    let bo_cfg = crate::bayesopt::BoConfig {
        iterations: cfg.bo_iterations,
        batch: cfg.bo_batch,
        restarts: cfg.bo_restarts,
        ascent_steps: cfg.bo_ascent_steps,
        seed: cfg.seed ^ 0xb0,
        ..Default::default()
    };
    let outcome =
        crate::bayesopt::bo_loop(&vae, &vocab, &mols, &score_fn, cfg.bo_init_design, &bo_cfg)
            .map_err(|e| PipelineError::in_stage("optimize-bo", e))?;
    artifacts.write("bo_trace.csv", &outcome.trace_csv())?;

    // unique proposed molecules (excluding the initial design) with scores
    let proposed = outcome.evaluated.len();
    let initial = proposed - outcome.trace.iter().filter(|r| r.score.is_some()).count();
    let mut seen = std::collections::BTreeMap::new();
    for (_, _, smiles) in outcome.evaluated.iter().skip(initial) {
        if let Some(s) = smiles {
            seen.entry(s.clone()).or_insert(());
        }
    }
    let rows = rescore_pool(seen.keys().cloned().collect(), &score_fn)?;
    let refs: Vec<(String, &ScoreReport)> =
        rows.iter().map(|(s, r)| (s.clone(), r)).collect();
    artifacts.write("bo_candidates.csv", &score_csv(&refs))?;
    Ok(())
}

fn stage_dqn(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    let score_fn = load_score_fn(cfg, artifacts)?;
    let outcome = train_agent(&score_fn, &cfg.dqn)
        .map_err(|e| PipelineError::in_stage("train-dqn", e))?;
    artifacts.write("dqn_episodes.jsonl", &outcome.episodes_jsonl())?;
    artifacts.write("dqn_pool.csv", &outcome.pool_csv())?;
    let mut hits = String::from("filter,global_step,unique_hits\n");
    for (step, count) in crate::dqn::count_hits(&outcome.pool, cfg.screen_delta, None) {
        hits.push_str(&format!("pic50,{step},{count}\n"));
    }
    for (step, count) in crate::dqn::count_hits(&outcome.pool, cfg.screen_delta, Some(0.5)) {
        hits.push_str(&format!("pic50_and_qed,{step},{count}\n"));
    }
    artifacts.write("dqn_hits.csv", &hits)?;
    Ok(())
}

fn stage_score(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    let score_fn = load_score_fn(cfg, artifacts)?;
    let mut smiles: Vec<String> = Vec::new();
    for file in ["bo_candidates.csv", "dqn_pool.csv"] {
        smiles.extend(read_smiles_column(&artifacts.read(file)?)?);
    }
    smiles.sort();
    smiles.dedup();
    let rows = rescore_pool(smiles, &score_fn)?;
    let refs: Vec<(String, &ScoreReport)> =
        rows.iter().map(|(s, r)| (s.clone(), r)).collect();
    artifacts.write("scores.csv", &score_csv(&refs))?;
    Ok(())
}

fn stage_screen(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    let score_fn = load_score_fn(cfg, artifacts)?;
    let smiles = read_smiles_column(&artifacts.read("scores.csv")?)?;
    let mols: Vec<MolGraph> = smiles
        .iter()
        .map(|s| parse_smiles(s))
        .collect::<Result<_, _>>()
        .map_err(|e| PipelineError::in_stage("screen", e))?;
    let passing = screen(&mols, &score_fn, cfg.screen_delta)
        .map_err(|e| PipelineError::in_stage("screen", e))?;
    let rows: Vec<(String, &ScoreReport)> = passing
        .iter()
        .map(|(mol, report)| (crate::chem::canonical_smiles(mol).into_string(), report))
        .collect();
    artifacts.write("screened.csv", &score_csv(&rows))?;
    Ok(())
}

fn stage_dtba(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    let pairs = synthetic_pairs(cfg.dtba_pairs, cfg.seed ^ 0xd7);
    let dtba_cfg = DtbaConfig {
        epochs: cfg.dtba_epochs,
        fp_width: 512,
        hidden: vec![16, 8],
        lr: 3e-3,
        seed: cfg.seed ^ 0xd7,
        ..Default::default()
    };
    let (model, report) =
        train_dtba(&pairs, dtba_cfg).map_err(|e| PipelineError::in_stage("validate-dtba", e))?;
    model
        .save(&artifacts.path("dtba.mfck"))
        .map_err(|e| PipelineError::in_stage("validate-dtba", e))?;

    let target = TargetSequence::new("target", DEFAULT_TARGET)
        .map_err(|e| PipelineError::in_stage("validate-dtba", e))?;
    let smiles = read_smiles_column(&artifacts.read("screened.csv")?)?;
    let mols: Vec<(String, MolGraph)> = smiles
        .iter()
        .map(|s| parse_smiles(s).map(|m| (s.clone(), m)))
        .collect::<Result<_, _>>()
        .map_err(|e| PipelineError::in_stage("validate-dtba", e))?;
    let mut out = format!(
        "# held-out auc {:.4}\ncanonical_smiles,probability,flagged\n",
        report.held_out_auc
    );
    for (smiles, p, flagged) in validate_candidates(&model, &mols, &target) {
        out.push_str(&format!("{smiles},{p:.6},{flagged}\n"));
    }
    artifacts.write("dtba_validated.csv", &out)?;
    Ok(())
}

fn stage_report(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), PipelineError> {
    let score_fn = load_score_fn(cfg, artifacts)?;
    let records = load_records(artifacts)?;

    let mut pools = Vec::new();
    for (method, file) in [("jtvae_bo", "bo_candidates.csv"), ("dqn", "dqn_pool.csv")] {
        let smiles = read_smiles_column(&artifacts.read(file)?)?;
        let rows = rescore_pool(smiles, &score_fn)?;
        pools.push(MethodPool { method: method.to_string(), rows });
    }
    let ranked = top_k(&pools, score_fn.kind.name(), cfg.report_top_k);
    artifacts.write("top_k.csv", &top_k_csv(&ranked))?;
    artifacts.write("pareto.csv", &pareto_csv(&pools))?;
    artifacts.write("pareto.svg", &pareto_svg(&pools))?;

    // corpus similarity heat-map data, capped for matrix size
    let cap = 200.min(records.len());
    let mols: Vec<MolGraph> = records[..cap]
        .iter()
        .map(|r| parse_smiles(&r.canonical_smiles))
        .collect::<Result<_, _>>()
        .map_err(|e| PipelineError::in_stage("report", e))?;
    let pic50s: Vec<f64> = records[..cap].iter().map(|r| r.pic50).collect();
    let matrix = similarity_matrix(&mols, &pic50s, 2, 1024);
    artifacts.write("similarity.csv", &matrix.to_csv())?;

    // generated-versus-corpus descriptor distributions
    let vocab = load_vocab(artifacts)?;
    let vae = TreeVae::load(&artifacts.path("jtvae.mfck"))
        .map_err(|e| PipelineError::in_stage("report", e))?;
    let table = load_fragments(artifacts)?;
    let surrogate = SurrogateModel::load(&artifacts.path("surrogate.mfck"))
        .map_err(|e| PipelineError::in_stage("report", e))?;
    let mut rng = Rng::seed_from(cfg.seed ^ 0x5a);
    let report = sample_and_report(
        &vae,
        &vocab,
        cfg.sample_count,
        &table,
        Some(&surrogate),
        &mut rng,
    )
    .map_err(|e| PipelineError::in_stage("report", e))?;
    artifacts.write("samples.csv", &report.to_csv())?;
    artifacts.write("sample_hist.csv", &report.histogram_csv(20))?;

    let mut corpus_rows = String::from("canonical_smiles,qed,logp,sa,pic50\n");
    for r in &records {
        let mol = parse_smiles(&r.canonical_smiles)
            .map_err(|e| PipelineError::in_stage("report", e))?;
        let d = descriptor_set(&mol, &table).map_err(|e| PipelineError::in_stage("report", e))?;
        corpus_rows.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            r.canonical_smiles, d.qed, d.logp, d.sa, r.pic50
        ));
    }
    artifacts.write("corpus_descriptors.csv", &corpus_rows)?;
    Ok(())
}

// ---- shared loading helpers ----

fn load_records(artifacts: &Artifacts) -> Result<Vec<DatasetRecord>, PipelineError> {
    read_curated(&artifacts.read("curated.csv")?)
}

fn curated_mols(records: &[DatasetRecord]) -> Result<Vec<MolGraph>, PipelineError> {
    records
        .iter()
        .map(|r| parse_smiles(&r.canonical_smiles))
        .collect::<Result<_, _>>()
        .map_err(|e| PipelineError::Io(format!("curated corpus: {e}")))
}

fn dataset_pairs(records: &[DatasetRecord]) -> Result<Vec<(MolGraph, f64)>, PipelineError> {
    records
        .iter()
        .map(|r| parse_smiles(&r.canonical_smiles).map(|m| (m, r.pic50)))
        .collect::<Result<_, _>>()
        .map_err(|e| PipelineError::Io(format!("curated corpus: {e}")))
}

fn load_vocab(artifacts: &Artifacts) -> Result<Vocabulary, PipelineError> {
    Vocabulary::from_tsv(&artifacts.read("vocab.tsv")?)
        .map_err(|e| PipelineError::Io(e.to_string()))
}

fn load_fragments(artifacts: &Artifacts) -> Result<FragmentScoreTable, PipelineError> {
    FragmentScoreTable::load(&artifacts.path("fragments.mfsa"))
        .map_err(|e| PipelineError::Io(e.to_string()))
}

/// Builds the configured objective from saved artifacts.
pub fn load_score_fn(cfg: &RunConfig, artifacts: &Artifacts) -> Result<ScoreFunction, PipelineError> {
    let table = Rc::new(load_fragments(artifacts)?);
    let surrogate = if artifacts.path("surrogate.mfck").exists() {
        Some(Rc::new(
            SurrogateModel::load(&artifacts.path("surrogate.mfck"))
                .map_err(|e| PipelineError::Io(e.to_string()))?,
        ))
    } else {
        None
    };
    let mut f = ScoreFunction::new(cfg.score_kind, surrogate, table)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    if cfg.zscore {
        let records = load_records(artifacts)?;
        let mols = curated_mols(&records)?;
        let stats =
            f.corpus_stats(&mols).map_err(|e| PipelineError::Io(e.to_string()))?;
        f = f.with_normalization(Normalization::Zscore(stats));
    }
    Ok(f)
}

fn rescore_pool(
    smiles: Vec<String>,
    score_fn: &ScoreFunction,
) -> Result<Vec<(String, ScoreReport)>, PipelineError> {
    let mut rows = Vec::with_capacity(smiles.len());
    for s in smiles {
        let mol = parse_smiles(&s).map_err(|e| PipelineError::Io(format!("{s}: {e}")))?;
        let report =
            score_fn.score(&mol).map_err(|e| PipelineError::Io(format!("{s}: {e}")))?;
        rows.push((s, report));
    }
    Ok(rows)
}

fn read_smiles_column(csv_text: &str) -> Result<Vec<String>, PipelineError> {
    let body: String = csv_text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers().map_err(|e| PipelineError::Io(e.to_string()))?.clone();
    let col = headers
        .iter()
        .position(|h| h == "canonical_smiles" || h == "smiles")
        .ok_or_else(|| PipelineError::MissingColumn("canonical_smiles".into()))?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| PipelineError::Io(e.to_string()))?;
        if let Some(s) = row.get(col) {
            if !s.is_empty() {
                out.push(s.to_string());
            }
        }
    }
    Ok(out)
}

/// Convenience used by the command-line interface: clears a stage's outputs
/// so it reruns.
pub fn clear_stage(artifacts: &Artifacts, which: Stage) -> std::io::Result<()> {
    for f in which.outputs() {
        let p = artifacts.path(f);
        if p.exists() {
            std::fs::remove_file(p)?;
        }
    }
    // model sidecars ride along with their checkpoints
    for f in ["surrogate", "jtvae", "dtba"] {
        let sidecar = artifacts.path(&format!("{f}.json"));
        let ck = artifacts.path(&format!("{f}.mfck"));
        if !ck.exists() && sidecar.exists() {
            std::fs::remove_file(sidecar)?;
        }
    }
    Ok(())
}
