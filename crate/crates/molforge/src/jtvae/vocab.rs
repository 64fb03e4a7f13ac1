//! Substructure vocabulary: every decomposed cluster, extracted as a
//! standalone molecule, keyed by canonical SMILES with corpus frequencies.

use super::{decompose, JtvaeError, JunctionTree};
use crate::chem::{canonical_smiles, parse_smiles, Atom, Bond, MolGraph};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct VocabularyEntry {
    pub id: usize,
    pub smiles: String,
    pub template: MolGraph,
    pub frequency: u64,
}

#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<VocabularyEntry>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabularyEntry] {
        &self.entries
    }

    pub fn entry(&self, id: usize) -> &VocabularyEntry {
        &self.entries[id]
    }

    pub fn lookup(&self, smiles: &str) -> Option<usize> {
        self.index.get(smiles).copied()
    }

    /// Assigns vocabulary ids to every cluster of a decomposed tree.
    pub fn assign(&self, tree: &mut JunctionTree, mol: &MolGraph) -> Result<(), JtvaeError> {
        for cluster in &mut tree.clusters {
            let template = cluster_template(mol, &cluster.atoms);
            let key = canonical_smiles(&template).into_string();
            let id = self
                .lookup(&key)
                .ok_or_else(|| JtvaeError::UnknownCluster(key.clone()))?;
            cluster.vocab_id = Some(id);
        }
        Ok(())
    }

    /// TSV rows: id, canonical cluster SMILES, frequency.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\tsmiles\tfrequency\n");
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\n", e.id, e.smiles, e.frequency));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Vocabulary, JtvaeError> {
        let mut entries = Vec::new();
        let mut index = BTreeMap::new();
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(JtvaeError::Io(format!("bad vocabulary row: {line}")));
            }
            let id: usize =
                cols[0].parse().map_err(|_| JtvaeError::Io(format!("bad id: {line}")))?;
            let smiles = cols[1].to_string();
            let frequency: u64 =
                cols[2].parse().map_err(|_| JtvaeError::Io(format!("bad frequency: {line}")))?;
            let template = parse_smiles(&smiles)?;
            if id != entries.len() {
                return Err(JtvaeError::Io("vocabulary ids must be dense from 0".into()));
            }
            index.insert(smiles.clone(), id);
            entries.push(VocabularyEntry { id, smiles, template, frequency });
        }
        if entries.is_empty() {
            return Err(JtvaeError::EmptyCorpus);
        }
        Ok(Vocabulary { entries, index })
    }
}

/// Counts every cluster over the corpus; ids are dense, ordered by
/// descending frequency then SMILES.
pub fn build_vocabulary(corpus: &[MolGraph]) -> Result<Vocabulary, JtvaeError> {
    if corpus.is_empty() {
        return Err(JtvaeError::EmptyCorpus);
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for mol in corpus {
        let tree = decompose(mol)?;
        for cluster in &tree.clusters {
            let template = cluster_template(mol, &cluster.atoms);
            let key = canonical_smiles(&template).into_string();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    let mut ordered: Vec<(String, u64)> = counts.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut entries = Vec::with_capacity(ordered.len());
    let mut index = BTreeMap::new();
    for (id, (smiles, frequency)) in ordered.into_iter().enumerate() {
        let template = parse_smiles(&smiles)?;
        index.insert(smiles.clone(), id);
        entries.push(VocabularyEntry { id, smiles, template, frequency });
    }
    Ok(Vocabulary { entries, index })
}

/// Extracts a cluster as a standalone molecule.
///
/// Atoms keep element and charge. Hydrogens absorb the valence freed by
/// bonds that stay behind in the parent molecule. Aromatic flags survive
/// only when the cluster still contains a full aromatic ring; otherwise the
/// fragment is downgraded to its plain form.
pub fn cluster_template(mol: &MolGraph, cluster_atoms: &[usize]) -> MolGraph {
    let local: BTreeMap<usize, usize> =
        cluster_atoms.iter().enumerate().map(|(new, &old)| (old, new)).collect();

    let mut bonds = Vec::new();
    for bond in mol.bonds() {
        if let (Some(&a), Some(&b)) = (local.get(&bond.a), local.get(&bond.b)) {
            bonds.push(Bond { a, b, order: bond.order });
        }
    }

    let atoms: Vec<Atom> = cluster_atoms
        .iter()
        .enumerate()
        .map(|(new_idx, &old_idx)| {
            let src = mol.atom(old_idx);
            // hydrogen budget under filling semantics, so lone-pair donors
            // (e.g. substituted pyrrole-type nitrogen) do not overcount
            let mol_sum = crate::chem::fill_valence_units(
                src.element,
                src.aromatic,
                mol.neighbors(old_idx).iter().map(|&(_, bi)| mol.bonds()[bi].order),
            );
            let template_sum = crate::chem::fill_valence_units(
                src.element,
                src.aromatic,
                bonds
                    .iter()
                    .filter(|b| b.a == new_idx || b.b == new_idx)
                    .map(|b| b.order),
            );
            let freed = mol_sum - template_sum;
            let implicit_h = (src.implicit_h as f64 + freed).max(0.0).floor() as u8;
            Atom {
                element: src.element,
                formal_charge: src.formal_charge,
                implicit_h,
                aromatic: src.aromatic,
            }
        })
        .collect();

    match MolGraph::new(atoms.clone(), bonds.clone()) {
        Ok(g) => g,
        Err(_) => {
            // downgrade: aromatic context did not survive extraction
            let plain: Vec<Atom> = atoms
                .into_iter()
                .map(|mut a| {
                    a.aromatic = false;
                    a
                })
                .collect();
            let plain_bonds: Vec<Bond> = bonds
                .into_iter()
                .map(|mut b| {
                    if b.order == crate::chem::BondOrder::Aromatic {
                        b.order = crate::chem::BondOrder::Single;
                    }
                    b
                })
                .collect();
            MolGraph::new(plain, plain_bonds).expect("plain fragment is valid")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn benzene_corpus_has_one_entry() {
        let vocab = build_vocabulary(&[parse_smiles("c1ccccc1").unwrap()]).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.entries()[0].frequency, 1);
    }

    #[test]
    fn ethanol_corpus_has_two_bond_entries() {
        let vocab = build_vocabulary(&[parse_smiles("CCO").unwrap()]).unwrap();
        assert_eq!(vocab.len(), 2); // C-C and C-O
    }

    #[test]
    fn every_corpus_cluster_resolves() {
        let corpus: Vec<MolGraph> = [
            "CC(=O)Oc1ccccc1C(=O)O",
            "c1ccc2ccccc2c1",
            "CC(C)(C)C",
            "CCO",
        ]
        .iter()
        .map(|s| parse_smiles(s).unwrap())
        .collect();
        let vocab = build_vocabulary(&corpus).unwrap();
        for mol in &corpus {
            let mut tree = decompose(mol).unwrap();
            vocab.assign(&mut tree, mol).unwrap();
            assert!(tree.clusters.iter().all(|c| c.vocab_id.is_some()));
        }
    }

    #[test]
    fn out_of_vocabulary_cluster_is_an_error() {
        let vocab = build_vocabulary(&[parse_smiles("CCO").unwrap()]).unwrap();
        let mol = parse_smiles("c1ccccc1").unwrap();
        let mut tree = decompose(&mol).unwrap();
        assert!(matches!(vocab.assign(&mut tree, &mol), Err(JtvaeError::UnknownCluster(_))));
    }

    #[test]
    fn toluene_ring_template_is_benzene() {
        let mol = parse_smiles("Cc1ccccc1").unwrap();
        let tree = decompose(&mol).unwrap();
        let ring = tree
            .clusters
            .iter()
            .find(|c| c.kind == super::super::ClusterKind::Ring)
            .unwrap();
        let template = cluster_template(&mol, &ring.atoms);
        let benzene = parse_smiles("c1ccccc1").unwrap();
        assert!(crate::chem::is_isomorphic(&template, &benzene));
    }

    #[test]
    fn pyrrole_template_keeps_nh() {
        let mol = parse_smiles("c1cc[nH]c1").unwrap();
        let tree = decompose(&mol).unwrap();
        let template = cluster_template(&mol, &tree.clusters[0].atoms);
        let n = template.atoms().iter().find(|a| a.element == 7).unwrap();
        assert_eq!(n.implicit_h, 1);
    }

    #[test]
    fn tsv_round_trip() {
        let corpus: Vec<MolGraph> =
            ["CCO", "c1ccccc1"].iter().map(|s| parse_smiles(s).unwrap()).collect();
        let vocab = build_vocabulary(&corpus).unwrap();
        let tsv = vocab.to_tsv();
        let loaded = Vocabulary::from_tsv(&tsv).unwrap();
        assert_eq!(vocab.len(), loaded.len());
        for (a, b) in vocab.entries().iter().zip(loaded.entries()) {
            assert_eq!(a.smiles, b.smiles);
            assert_eq!(a.frequency, b.frequency);
        }
    }
}
