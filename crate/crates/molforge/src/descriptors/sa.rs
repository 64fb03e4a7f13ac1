//! Synthetic-accessibility score.
//!
//! A fragment-familiarity term (mean log-frequency of radius-2 circular
//! environments against a reference corpus) minus complexity penalties for
//! size, ring fusion, and macrocycles, mapped affinely and clamped to
//! [1, 10] where 1 means easy to make.

use super::DescriptorError;
use crate::chem::MolGraph;
use crate::fingerprint::morgan_environments;
use std::collections::BTreeMap;
use std::io::{Read, Write};

const FRAGMENT_RADIUS: u32 = 2;
const MAGIC: &[u8; 5] = b"MFSA1";

/// Environment-hash to log-frequency score map built from a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentScoreTable {
    /// score = ln(count) - ln(max count), so the most common fragment is 0
    /// and everything else is negative.
    scores: BTreeMap<u64, f64>,
    max_log_count: f64,
    total_environments: u64,
}

impl FragmentScoreTable {
    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn total_environments(&self) -> u64 {
        self.total_environments
    }

    /// Score for one environment; unseen environments cost a bit more than
    /// the rarest corpus fragment.
    pub fn score(&self, env_hash: u64) -> f64 {
        match self.scores.get(&env_hash) {
            Some(&s) => s,
            None => -(self.max_log_count + std::f64::consts::LN_2),
        }
    }

    /// Binary serialization: magic, entry count, (hash, score) pairs, then
    /// the normalization constants.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.scores.len() as u64).to_le_bytes())?;
        for (&hash, &score) in &self.scores {
            w.write_all(&hash.to_le_bytes())?;
            w.write_all(&score.to_le_bytes())?;
        }
        w.write_all(&self.max_log_count.to_le_bytes())?;
        w.write_all(&self.total_environments.to_le_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, DescriptorError> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic).map_err(|e| DescriptorError::BadTableData(e.to_string()))?;
        if &magic != MAGIC {
            return Err(DescriptorError::BadTableData(format!(
                "bad magic {:?}, expected {:?}",
                magic, MAGIC
            )));
        }
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u64buf).map_err(|e| DescriptorError::BadTableData(e.to_string()))?;
        let count = u64::from_le_bytes(u64buf);
        let mut scores = BTreeMap::new();
        for _ in 0..count {
            r.read_exact(&mut u64buf)
                .map_err(|e| DescriptorError::BadTableData(e.to_string()))?;
            let hash = u64::from_le_bytes(u64buf);
            r.read_exact(&mut u64buf)
                .map_err(|e| DescriptorError::BadTableData(e.to_string()))?;
            let score = f64::from_le_bytes(u64buf);
            scores.insert(hash, score);
        }
        r.read_exact(&mut u64buf).map_err(|e| DescriptorError::BadTableData(e.to_string()))?;
        let max_log_count = f64::from_le_bytes(u64buf);
        r.read_exact(&mut u64buf).map_err(|e| DescriptorError::BadTableData(e.to_string()))?;
        let total_environments = u64::from_le_bytes(u64buf);
        Ok(FragmentScoreTable { scores, max_log_count, total_environments })
    }

    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, DescriptorError> {
        let data =
            std::fs::read(path).map_err(|e| DescriptorError::BadTableData(e.to_string()))?;
        Self::read_from(data.as_slice())
    }
}

/// Counts all radius-0..2 environments over the corpus and converts counts
/// to log-frequency scores.
pub fn build_fragment_table(
    corpus: &[MolGraph],
) -> Result<FragmentScoreTable, DescriptorError> {
    if corpus.is_empty() {
        return Err(DescriptorError::EmptyCorpus);
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut total = 0u64;
    for mol in corpus {
        for (_, _, hash) in morgan_environments(mol, FRAGMENT_RADIUS) {
            *counts.entry(hash).or_insert(0) += 1;
            total += 1;
        }
    }
    let max_count = counts.values().copied().max().unwrap_or(1);
    let max_log_count = (max_count as f64).ln();
    let scores = counts
        .into_iter()
        .map(|(hash, count)| (hash, (count as f64).ln() - max_log_count))
        .collect();
    Ok(FragmentScoreTable { scores, max_log_count, total_environments: total })
}

/// Synthetic-accessibility estimate in [1, 10].
pub fn sa_score(mol: &MolGraph, table: &FragmentScoreTable) -> Result<f64, DescriptorError> {
    if table.is_empty() {
        return Err(DescriptorError::EmptyTable);
    }
    if mol.atom_count() == 0 {
        return Ok(1.0);
    }
    let envs = morgan_environments(mol, FRAGMENT_RADIUS);
    let fragment_term: f64 =
        envs.iter().map(|&(_, _, h)| table.score(h)).sum::<f64>() / envs.len() as f64;

    let n = mol.atom_count() as f64;
    let size_penalty = n.powf(1.005) - n;
    let fused_atoms = (0..mol.atom_count())
        .filter(|&i| mol.rings().iter().filter(|r| r.contains(&i)).count() >= 2)
        .count() as f64;
    let fusion_penalty = (1.0 + fused_atoms).ln() * 0.5;
    let macro_rings = mol.rings().iter().filter(|r| r.len() > 8).count() as f64;
    let macro_penalty = (1.0 + macro_rings).ln();

    let raw = 1.0 + 1.2 * (-fragment_term) + size_penalty + fusion_penalty + macro_penalty;
    Ok(raw.clamp(1.0, 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn corpus(smiles: &[&str]) -> Vec<MolGraph> {
        smiles.iter().map(|s| parse_smiles(s).unwrap()).collect()
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(build_fragment_table(&[]), Err(DescriptorError::EmptyCorpus)));
    }

    #[test]
    fn single_symmetric_molecule_scores_maximal() {
        let table = build_fragment_table(&corpus(&["c1ccccc1"])).unwrap();
        let mol = parse_smiles("c1ccccc1").unwrap();
        for (_, _, h) in morgan_environments(&mol, 2) {
            assert_eq!(table.score(h), 0.0, "all benzene environments are the most common");
        }
    }

    #[test]
    fn deterministic_under_corpus_permutation() {
        let a = build_fragment_table(&corpus(&["CCO", "c1ccccc1", "CC(=O)O"])).unwrap();
        let b = build_fragment_table(&corpus(&["CC(=O)O", "CCO", "c1ccccc1"])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn frequencies_sum_to_environment_count() {
        let mols = corpus(&["CCO", "CCN", "c1ccccc1", "CC(C)O"]);
        let table = build_fragment_table(&mols).unwrap();
        let recount: u64 =
            mols.iter().map(|m| morgan_environments(m, 2).len() as u64).sum();
        assert_eq!(table.total_environments(), recount);
    }

    #[test]
    fn familiar_molecule_scores_below_corpus_median() {
        let mols = corpus(&[
            "CCO", "CCC", "CCCC", "CCN", "CCCO", "CC(C)C", "CCOC", "CCCN", "CC(C)O", "CCCCC",
        ]);
        let table = build_fragment_table(&mols).unwrap();
        let mut scores: Vec<f64> =
            mols.iter().map(|m| sa_score(m, &table).unwrap()).collect();
        let familiar = sa_score(&parse_smiles("CCC").unwrap(), &table).unwrap();
        scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = scores[scores.len() / 2];
        assert!(familiar <= median, "familiar {familiar} vs median {median}");
    }

    #[test]
    fn macrocycle_scores_above_acyclic_isomer() {
        let mols = corpus(&["CCO", "CCCC", "c1ccccc1", "C1CCCCC1", "CCCCCCCCCC"]);
        let table = build_fragment_table(&mols).unwrap();
        let ring = sa_score(&parse_smiles("C1CCCCCCCCC1").unwrap(), &table).unwrap();
        let chain = sa_score(&parse_smiles("CCCCCCCCCC").unwrap(), &table).unwrap();
        assert!(ring > chain, "macrocycle {ring} vs chain {chain}");
    }

    #[test]
    fn clamped_to_ten_on_adversarial_input() {
        let table = build_fragment_table(&corpus(&["CCO"])).unwrap();
        // very large unfamiliar fused structure
        let big = parse_smiles(
            "C1CC2CCC1CC2C1CC2CCC1CC2C1CC2CCC1CC2C1CC2CCC1CC2C1CC2CCC1CC2C1CC2CCC1CC2",
        )
        .unwrap();
        let s = sa_score(&big, &table).unwrap();
        assert!(s <= 10.0);
        assert!(s >= 1.0);
    }

    #[test]
    fn serialization_round_trip() {
        let table = build_fragment_table(&corpus(&["CCO", "c1ccccc1"])).unwrap();
        let mut buf = Vec::new();
        table.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..5], b"MFSA1");
        let loaded = FragmentScoreTable::read_from(buf.as_slice()).unwrap();
        assert_eq!(table, loaded);
    }

    #[test]
    fn bad_magic_rejected() {
        let err = FragmentScoreTable::read_from(&b"NOPE!xxxxxxxx"[..]);
        assert!(matches!(err, Err(DescriptorError::BadTableData(_))));
    }

    #[test]
    fn empty_table_rejected_by_scorer() {
        let table = FragmentScoreTable {
            scores: Default::default(),
            max_log_count: 0.0,
            total_environments: 0,
        };
        let mol = parse_smiles("CCO").unwrap();
        assert!(matches!(sa_score(&mol, &table), Err(DescriptorError::EmptyTable)));
    }
}
