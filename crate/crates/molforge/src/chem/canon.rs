//! Canonical SMILES via iterative extended-connectivity (Morgan) rank
//! refinement. Two isomorphic graphs yield byte-identical output; remaining
//! rank ties fall back to the input index, which only matters between
//! automorphic atoms.

use super::writer;
use super::{BondOrder, MolGraph};

/// Normal-form SMILES with deterministic atom ordering. Parsing and
/// re-canonicalizing is a fixed point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalSmiles(String);

impl CanonicalSmiles {
    pub fn text(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl std::fmt::Display for CanonicalSmiles {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for CanonicalSmiles {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Canonicalizes a molecular graph.
pub fn canonical_smiles(mol: &MolGraph) -> CanonicalSmiles {
    let ranks = morgan_ranks(mol);
    CanonicalSmiles(writer::write_with_ranks(mol, &ranks))
}

/// Dense canonical ranks from iterative neighborhood refinement.
pub(crate) fn morgan_ranks(mol: &MolGraph) -> Vec<usize> {
    let n = mol.atom_count();
    if n == 0 {
        return Vec::new();
    }

    // initial invariant: element, charge, degree, hydrogens, aromaticity,
    // and smallest containing ring
    let min_ring: Vec<usize> = (0..n)
        .map(|i| {
            mol.rings()
                .iter()
                .filter(|r| r.contains(&i))
                .map(|r| r.len())
                .min()
                .unwrap_or(0)
        })
        .collect();
    let initial: Vec<(u8, i8, usize, u8, bool, usize)> = (0..n)
        .map(|i| {
            let a = mol.atom(i);
            (a.element, a.formal_charge, mol.degree(i), a.implicit_h, a.aromatic, min_ring[i])
        })
        .collect();
    let mut ranks = dense_ranks(&initial);

    loop {
        let keys: Vec<(usize, Vec<(u8, usize)>)> = (0..n)
            .map(|i| {
                let mut nbr: Vec<(u8, usize)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(w, bi)| (bond_code(mol.bonds()[bi].order), ranks[w]))
                    .collect();
                nbr.sort_unstable();
                (ranks[i], nbr)
            })
            .collect();
        let next = dense_ranks(&keys);
        let classes_before = class_count(&ranks);
        let classes_after = class_count(&next);
        ranks = next;
        if classes_after == classes_before {
            break;
        }
    }
    ranks
}

fn bond_code(order: BondOrder) -> u8 {
    order.code()
}

fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

fn class_count(ranks: &[usize]) -> usize {
    let mut seen: Vec<usize> = ranks.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn permuted_input_same_canonical_text() {
        let a = canonical_smiles(&parse_smiles("OCC").unwrap());
        let b = canonical_smiles(&parse_smiles("CCO").unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn kekule_and_aromatic_benzene_agree() {
        let a = canonical_smiles(&parse_smiles("C1=CC=CC=C1").unwrap());
        let b = canonical_smiles(&parse_smiles("c1ccccc1").unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn canonicalization_is_idempotent() {
        for s in ["CC(=O)Oc1ccccc1C(=O)O", "CN1C=NC2=C1C(=O)N(C)C(=O)N2C", "CCO"] {
            let first = canonical_smiles(&parse_smiles(s).unwrap());
            let second = canonical_smiles(&parse_smiles(first.text()).unwrap());
            assert_eq!(first, second, "not a fixed point for {s}");
        }
    }

    #[test]
    fn distinguishes_constitutional_isomers() {
        let a = canonical_smiles(&parse_smiles("CCCO").unwrap());
        let b = canonical_smiles(&parse_smiles("CC(C)O").unwrap());
        assert_ne!(a, b);
    }
}
