//! Molecule objective functions shared by the latent-space optimizer and the
//! reinforcement-learning reward: penalized logP, penalized druglikeness,
//! predicted potency, and the potency-plus-druglikeness combination, each
//! with optional corpus z-scoring and per-term weights.

use crate::chem::MolGraph;
use crate::descriptors::{descriptor_set, DescriptorError, FragmentScoreTable};
use crate::mpnn::{MpnnError, SurrogateModel};
use std::collections::BTreeMap;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("scoring kind {0:?} requires a potency surrogate")]
    MissingSurrogate(ScoreKind),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Surrogate(#[from] MpnnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// logP - SA - cycle
    LogpPen,
    /// QED - SA - cycle
    QedPen,
    /// predicted potency alone
    Pic50,
    /// potency + QED - SA - cycle
    Pic50QedPen,
}

impl ScoreKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScoreKind::LogpPen => "logp_pen",
            ScoreKind::QedPen => "qed_pen",
            ScoreKind::Pic50 => "pic50",
            ScoreKind::Pic50QedPen => "pic50_qed_pen",
        }
    }

    pub fn parse(name: &str) -> Option<ScoreKind> {
        match name {
            "logp_pen" => Some(ScoreKind::LogpPen),
            "qed_pen" => Some(ScoreKind::QedPen),
            "pic50" => Some(ScoreKind::Pic50),
            "pic50_qed_pen" => Some(ScoreKind::Pic50QedPen),
            _ => None,
        }
    }

    pub fn needs_surrogate(&self) -> bool {
        matches!(self, ScoreKind::Pic50 | ScoreKind::Pic50QedPen)
    }
}

/// Per-term multipliers; all 1.0 unless configured otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights {
    pub logp: f64,
    pub qed: f64,
    pub sa: f64,
    pub cycle: f64,
    pub pic50: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights { logp: 1.0, qed: 1.0, sa: 1.0, cycle: 1.0, pic50: 1.0 }
    }
}

/// Component means/standard deviations over a reference corpus, for the
/// optional z-scored mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub mean: BTreeMap<String, f64>,
    pub std: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default)]
pub enum Normalization {
    #[default]
    Raw,
    Zscore(CorpusStats),
}

/// A configured objective.
pub struct ScoreFunction {
    pub kind: ScoreKind,
    surrogate: Option<Rc<SurrogateModel>>,
    frag_table: Rc<FragmentScoreTable>,
    pub normalization: Normalization,
    pub weights: ScoreWeights,
}

/// One molecule's evaluation: the total plus every raw component.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub total: f64,
    /// Raw (unnormalized) component values keyed logp/qed/sa/cycle and,
    /// when a surrogate is attached, pic50.
    pub components: BTreeMap<String, f64>,
}

impl ScoreReport {
    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.get(name).copied()
    }
}

impl ScoreFunction {
    pub fn new(
        kind: ScoreKind,
        surrogate: Option<Rc<SurrogateModel>>,
        frag_table: Rc<FragmentScoreTable>,
    ) -> Result<ScoreFunction, ScoreError> {
        if kind.needs_surrogate() && surrogate.is_none() {
            return Err(ScoreError::MissingSurrogate(kind));
        }
        Ok(ScoreFunction {
            kind,
            surrogate,
            frag_table,
            normalization: Normalization::Raw,
            weights: ScoreWeights::default(),
        })
    }

    pub fn with_weights(mut self, weights: ScoreWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn has_surrogate(&self) -> bool {
        self.surrogate.is_some()
    }

    /// Evaluates the objective; components are always populated.
    pub fn score(&self, mol: &MolGraph) -> Result<ScoreReport, ScoreError> {
        let d = descriptor_set(mol, &self.frag_table)?;
        let pic50 = match &self.surrogate {
            Some(model) => Some(model.predict(mol)?),
            None => None,
        };
        if self.kind.needs_surrogate() && pic50.is_none() {
            return Err(ScoreError::MissingSurrogate(self.kind));
        }

        let mut components = BTreeMap::new();
        components.insert("logp".to_string(), d.logp);
        components.insert("qed".to_string(), d.qed);
        components.insert("sa".to_string(), d.sa);
        components.insert("cycle".to_string(), d.cycle as f64);
        if let Some(p) = pic50 {
            components.insert("pic50".to_string(), p);
        }

        let total = total_from_components(
            self.kind,
            &self.weights,
            &self.normalization,
            &components,
        );
        Ok(ScoreReport { total, components })
    }

    /// Computes corpus statistics for the z-scored mode.
    pub fn corpus_stats(&self, corpus: &[MolGraph]) -> Result<CorpusStats, ScoreError> {
        let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for mol in corpus {
            let report = self.score(mol)?;
            for (k, v) in &report.components {
                acc.entry(k.clone()).or_default().push(*v);
            }
        }
        let mut mean = BTreeMap::new();
        let mut std = BTreeMap::new();
        for (k, vals) in acc {
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64;
            mean.insert(k.clone(), m);
            std.insert(k, if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Ok(CorpusStats { mean, std })
    }
}

/// The exact arithmetic of each objective over (possibly normalized)
/// component values. Exposed so reports can be independently recomputed.
pub fn total_from_components(
    kind: ScoreKind,
    weights: &ScoreWeights,
    normalization: &Normalization,
    components: &BTreeMap<String, f64>,
) -> f64 {
    let get = |name: &str| -> f64 {
        let raw = components.get(name).copied().unwrap_or(0.0);
        match normalization {
            Normalization::Raw => raw,
            Normalization::Zscore(stats) => {
                let m = stats.mean.get(name).copied().unwrap_or(0.0);
                let s = stats.std.get(name).copied().unwrap_or(1.0);
                (raw - m) / s
            }
        }
    };
    let logp = weights.logp * get("logp");
    let qed = weights.qed * get("qed");
    let sa = weights.sa * get("sa");
    let cycle = weights.cycle * get("cycle");
    let pic50 = weights.pic50 * get("pic50");
    match kind {
        ScoreKind::LogpPen => logp - sa - cycle,
        ScoreKind::QedPen => qed - sa - cycle,
        ScoreKind::Pic50 => pic50,
        ScoreKind::Pic50QedPen => pic50 + qed - sa - cycle,
    }
}

/// Molecules whose predicted potency exceeds `delta`, sorted by descending
/// potency.
pub fn screen(
    mols: &[MolGraph],
    f: &ScoreFunction,
    delta: f64,
) -> Result<Vec<(MolGraph, ScoreReport)>, ScoreError> {
    let mut passing = Vec::new();
    for mol in mols {
        let report = f.score(mol)?;
        match report.component("pic50") {
            Some(p) if p > delta => passing.push((mol.clone(), report)),
            Some(_) => {}
            None => return Err(ScoreError::MissingSurrogate(f.kind)),
        }
    }
    passing.sort_by(|a, b| {
        let pa = a.1.component("pic50").unwrap_or(f64::NEG_INFINITY);
        let pb = b.1.component("pic50").unwrap_or(f64::NEG_INFINITY);
        pb.partial_cmp(&pa).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(passing)
}

/// Score CSV rows: canonical_smiles, total, pic50, qed, logp, sa, cycle.
pub fn score_csv(rows: &[(String, &ScoreReport)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["canonical_smiles", "total", "pic50", "qed", "logp", "sa", "cycle"])
        .expect("in-memory write");
    for (smiles, report) in rows {
        let cell = |name: &str| {
            report.component(name).map(|v| format!("{v:.6}")).unwrap_or_default()
        };
        w.write_record([
            smiles.clone(),
            format!("{:.6}", report.total),
            cell("pic50"),
            cell("qed"),
            cell("logp"),
            cell("sa"),
            cell("cycle"),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flushed")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use crate::descriptors::build_fragment_table;

    fn table() -> Rc<FragmentScoreTable> {
        let corpus: Vec<MolGraph> =
            ["CCO", "c1ccccc1", "CC(=O)O"].iter().map(|s| parse_smiles(s).unwrap()).collect();
        Rc::new(build_fragment_table(&corpus).unwrap())
    }

    #[test]
    fn exact_arithmetic_per_kind() {
        let mut components = BTreeMap::new();
        components.insert("logp".into(), 3.0);
        components.insert("qed".into(), 0.9);
        components.insert("sa".into(), 2.0);
        components.insert("cycle".into(), 1.0);
        components.insert("pic50".into(), 8.0);
        let w = ScoreWeights::default();
        let raw = Normalization::Raw;
        assert_eq!(total_from_components(ScoreKind::LogpPen, &w, &raw, &components), 0.0);
        components.insert("sa".into(), 1.9);
        components.insert("cycle".into(), 0.0);
        let qed_pen = total_from_components(ScoreKind::QedPen, &w, &raw, &components);
        assert!((qed_pen - -1.0).abs() < 1e-12);
        components.insert("qed".into(), 0.8);
        components.insert("sa".into(), 2.0);
        let combo = total_from_components(ScoreKind::Pic50QedPen, &w, &raw, &components);
        assert!((combo - 6.8).abs() < 1e-12);
        assert_eq!(total_from_components(ScoreKind::Pic50, &w, &raw, &components), 8.0);
    }

    #[test]
    fn surrogate_required_for_potency_kinds() {
        assert!(matches!(
            ScoreFunction::new(ScoreKind::Pic50, None, table()),
            Err(ScoreError::MissingSurrogate(_))
        ));
        assert!(ScoreFunction::new(ScoreKind::LogpPen, None, table()).is_ok());
    }

    #[test]
    fn report_total_matches_component_recomputation() {
        let f = ScoreFunction::new(ScoreKind::QedPen, None, table()).unwrap();
        for s in ["CCO", "c1ccccc1", "CC(C)Cc1ccc(cc1)C(C)C(=O)O"] {
            let report = f.score(&parse_smiles(s).unwrap()).unwrap();
            let again = total_from_components(
                f.kind,
                &f.weights,
                &f.normalization,
                &report.components,
            );
            assert!((report.total - again).abs() < 1e-12);
        }
    }

    #[test]
    fn screening_filters_and_sorts() {
        use crate::mpnn::{SurrogateConfig, SurrogateModel};
        use crate::tensor::Rng;
        // untrained surrogate with pinned target stats gives deterministic
        // predictions; set std 0 so every molecule scores the mean
        let model = SurrogateModel::new(
            SurrogateConfig { width: 8, depth: 1, ..Default::default() },
            &mut Rng::seed_from(1),
        );
        model.set_target_stats(9.0, 0.0);
        let f = ScoreFunction::new(ScoreKind::Pic50, Some(Rc::new(model)), table()).unwrap();
        let mols: Vec<MolGraph> =
            ["CCO", "CCC"].iter().map(|s| parse_smiles(s).unwrap()).collect();
        let hits = screen(&mols, &f, 8.0).unwrap();
        assert_eq!(hits.len(), 2);
        let none = screen(&mols, &f, 10.0).unwrap();
        assert!(none.is_empty());
        let empty: Vec<MolGraph> = Vec::new();
        assert!(screen(&empty, &f, 8.0).unwrap().is_empty());
    }

    #[test]
    fn zscore_mode_changes_total_not_components() {
        let f = ScoreFunction::new(ScoreKind::LogpPen, None, table()).unwrap();
        let corpus: Vec<MolGraph> =
            ["CCO", "CCC", "CCCC", "c1ccccc1"].iter().map(|s| parse_smiles(s).unwrap()).collect();
        let stats = f.corpus_stats(&corpus).unwrap();
        let g = ScoreFunction::new(ScoreKind::LogpPen, None, table())
            .unwrap()
            .with_normalization(Normalization::Zscore(stats));
        let mol = parse_smiles("CCO").unwrap();
        let raw = f.score(&mol).unwrap();
        let z = g.score(&mol).unwrap();
        assert_eq!(raw.components, z.components, "components stay raw");
        assert_ne!(raw.total, z.total);
    }

    #[test]
    fn csv_schema() {
        let f = ScoreFunction::new(ScoreKind::QedPen, None, table()).unwrap();
        let mol = parse_smiles("CCO").unwrap();
        let report = f.score(&mol).unwrap();
        let csv = score_csv(&[("CCO".to_string(), &report)]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "canonical_smiles,total,pic50,qed,logp,sa,cycle"
        );
        assert_eq!(lines.count(), 1);
    }
}
