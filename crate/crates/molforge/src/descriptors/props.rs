//! Simple counted properties feeding the druglikeness estimate: hydrogen-bond
//! acceptors/donors, fragment-additive polar surface area, rotatable bonds,
//! and aromatic ring count.

use crate::chem::{BondOrder, MolGraph};
use std::collections::HashMap;
use std::sync::OnceLock;

const TPSA_TABLE: &str = include_str!("data/tpsa.tsv");

fn tpsa_table() -> &'static HashMap<String, f64> {
    static TABLE: OnceLock<HashMap<String, f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        TPSA_TABLE
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                let mut parts = l.split('\t');
                let key = parts.next().expect("type").to_string();
                let value: f64 = parts.next().expect("area").trim().parse().expect("numeric");
                (key, value)
            })
            .collect()
    })
}

/// Hydrogen-bond acceptors: nitrogen and oxygen atoms.
pub fn hba_count(mol: &MolGraph) -> u32 {
    mol.atoms().iter().filter(|a| matches!(a.element, 7 | 8)).count() as u32
}

/// Hydrogen-bond donors: N or O atoms carrying at least one hydrogen.
pub fn hbd_count(mol: &MolGraph) -> u32 {
    mol.atoms()
        .iter()
        .filter(|a| matches!(a.element, 7 | 8) && a.implicit_h > 0)
        .count() as u32
}

/// Topological polar surface area from the shipped N/O fragment table.
pub fn polar_surface_area(mol: &MolGraph) -> f64 {
    let table = tpsa_table();
    (0..mol.atom_count())
        .filter_map(|i| table.get(&tpsa_type(mol, i)?).copied())
        .sum()
}

fn tpsa_type(mol: &MolGraph, idx: usize) -> Option<String> {
    let atom = mol.atom(idx);
    let has_double = mol
        .neighbors(idx)
        .iter()
        .any(|&(_, bi)| mol.bonds()[bi].order == BondOrder::Double);
    let has_triple = mol
        .neighbors(idx)
        .iter()
        .any(|&(_, bi)| mol.bonds()[bi].order == BondOrder::Triple);
    let doubles = mol
        .neighbors(idx)
        .iter()
        .filter(|&&(_, bi)| mol.bonds()[bi].order == BondOrder::Double)
        .count();

    let key = match atom.element {
        7 => {
            if atom.formal_charge > 0 {
                if atom.implicit_h > 0 {
                    "N.pos.h"
                } else {
                    "N.pos.0h"
                }
            } else if atom.aromatic {
                if atom.implicit_h > 0 {
                    "n.ar.1h"
                } else if mol.degree(idx) >= 3 {
                    "n.ar.3conn"
                } else {
                    "n.ar.0h"
                }
            } else if has_triple {
                "N.triple"
            } else if doubles >= 2 {
                "N.nitro"
            } else if has_double {
                "N.double"
            } else {
                match atom.implicit_h {
                    0 => "N.3single.0h",
                    1 => "N.3single.1h",
                    _ => "N.3single.2h",
                }
            }
        }
        8 => {
            if atom.formal_charge < 0 {
                "O.neg"
            } else if atom.aromatic {
                "o.ar"
            } else if has_double {
                "O.double"
            } else if atom.implicit_h > 0 {
                "O.1single.1h"
            } else {
                "O.2single.0h"
            }
        }
        _ => return None,
    };
    Some(key.to_string())
}

/// Rotatable bonds: non-ring single bonds whose endpoints each bind at least
/// two heavy atoms.
pub fn rotatable_bonds(mol: &MolGraph) -> u32 {
    mol.bonds()
        .iter()
        .enumerate()
        .filter(|(bi, bond)| {
            bond.order == BondOrder::Single
                && !mol.is_ring_bond(*bi)
                && mol.degree(bond.a) >= 2
                && mol.degree(bond.b) >= 2
        })
        .count() as u32
}

/// Number of rings whose atoms are all aromatic.
pub fn aromatic_ring_count(mol: &MolGraph) -> u32 {
    mol.rings()
        .iter()
        .filter(|ring| ring.iter().all(|&i| mol.atom(i).aromatic))
        .count() as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn acceptor_and_donor_counts() {
        let mol = parse_smiles("NCCO").unwrap();
        assert_eq!(hba_count(&mol), 2);
        assert_eq!(hbd_count(&mol), 2);
        let ether = parse_smiles("COC").unwrap();
        assert_eq!(hba_count(&ether), 1);
        assert_eq!(hbd_count(&ether), 0);
    }

    #[test]
    fn tpsa_reference_values() {
        // single hydroxyl
        let ethanol = polar_surface_area(&parse_smiles("CCO").unwrap());
        assert!((ethanol - 20.23).abs() < 1e-9);
        // carboxylic acid: carbonyl O + hydroxyl O
        let acid = polar_surface_area(&parse_smiles("CC(=O)O").unwrap());
        assert!((acid - (17.07 + 20.23)).abs() < 1e-9);
        // benzene has none
        assert_eq!(polar_surface_area(&parse_smiles("c1ccccc1").unwrap()), 0.0);
    }

    #[test]
    fn rotatable_bond_counting() {
        assert_eq!(rotatable_bonds(&parse_smiles("CCCC").unwrap()), 1);
        assert_eq!(rotatable_bonds(&parse_smiles("CC").unwrap()), 0);
        assert_eq!(rotatable_bonds(&parse_smiles("C1CCCCC1").unwrap()), 0);
        assert_eq!(rotatable_bonds(&parse_smiles("c1ccccc1-c1ccccc1").unwrap()), 1);
    }

    #[test]
    fn aromatic_rings_counted() {
        assert_eq!(aromatic_ring_count(&parse_smiles("c1ccc2ccccc2c1").unwrap()), 2);
        assert_eq!(aromatic_ring_count(&parse_smiles("C1CCCCC1").unwrap()), 0);
    }
}
