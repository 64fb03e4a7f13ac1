//! Quantitative druglikeness estimate: the geometric mean of eight
//! desirability curves (weight, logP, acceptors, donors, polar surface,
//! rotatable bonds, aromatic rings, structural alerts), each an asymmetric
//! double sigmoid with the published parameterization shipped as data.

use super::{alerts, logp, props};
use crate::chem::MolGraph;
use std::sync::OnceLock;

const QED_TABLE: &str = include_str!("data/qed.tsv");

#[derive(Debug, Clone, Copy)]
struct AdsParams {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    f: f64,
    dmax: f64,
}

fn params() -> &'static [(String, AdsParams)] {
    static TABLE: OnceLock<Vec<(String, AdsParams)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        QED_TABLE
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                let cols: Vec<&str> = l.split('\t').collect();
                let v: Vec<f64> =
                    cols[1..8].iter().map(|s| s.trim().parse().expect("numeric")).collect();
                (
                    cols[0].to_string(),
                    AdsParams { a: v[0], b: v[1], c: v[2], d: v[3], e: v[4], f: v[5], dmax: v[6] },
                )
            })
            .collect()
    })
}

/// Asymmetric double sigmoid, normalized by its maximum.
fn ads(x: f64, p: &AdsParams) -> f64 {
    let raw = p.a
        + p.b / (1.0 + (-(x - p.c + p.d / 2.0) / p.e).exp())
            * (1.0 - 1.0 / (1.0 + (-(x - p.c - p.d / 2.0) / p.f).exp()));
    (raw / p.dmax).clamp(1e-6, 1.0)
}

/// Druglikeness in (0, 1).
pub fn qed(mol: &MolGraph) -> f64 {
    let values = [
        super::mol_weight(mol),
        logp::crippen_logp(mol),
        props::hba_count(mol) as f64,
        props::hbd_count(mol) as f64,
        props::polar_surface_area(mol),
        props::rotatable_bonds(mol) as f64,
        props::aromatic_ring_count(mol) as f64,
        alerts::alert_count(mol) as f64,
    ];
    let table = params();
    debug_assert_eq!(table.len(), values.len());
    let log_sum: f64 = table
        .iter()
        .zip(values)
        .map(|((_, p), x)| ads(x, p).ln())
        .sum();
    (log_sum / values.len() as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn strictly_inside_unit_interval() {
        for s in ["C", "CCO", "c1ccccc1", "CC(=O)Oc1ccccc1C(=O)O", "CCCCCCCCCCCCCCCCCCCC"] {
            let q = qed(&parse_smiles(s).unwrap());
            assert!(q > 0.0 && q < 1.0, "{s} gave {q}");
        }
    }

    #[test]
    fn druglike_beats_pathological() {
        let aspirin = qed(&parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap());
        let icosane = qed(&parse_smiles("CCCCCCCCCCCCCCCCCCCC").unwrap());
        assert!(aspirin > icosane, "aspirin {aspirin} vs icosane {icosane}");
    }

    #[test]
    fn adding_structural_alert_never_increases_qed() {
        // drug-like bases, so weight gain does not mask the alert penalty
        let pairs = [
            ("CC(C)Cc1ccc(cc1)C(C)C(=O)O", "CC(C)Cc1ccc(cc1[N+](=O)[O-])C(C)C(=O)O"),
            ("CC(=O)Oc1ccccc1C(=O)O", "CC(=O)Oc1ccc(cc1C(=O)O)[N+](=O)[O-]"),
            ("CN1C=NC2=C1C(=O)N(C)C(=O)N2C", "CN1C(=NC2=C1C(=O)N(C)C(=O)N2C)N=O"),
        ];
        for (base, with) in pairs {
            let plain = qed(&parse_smiles(base).unwrap());
            let with_alert = qed(&parse_smiles(with).unwrap());
            assert!(with_alert <= plain, "{base}: alert raised qed {plain} -> {with_alert}");
        }
    }

    #[test]
    fn qed_is_atom_order_invariant() {
        let mol = parse_smiles("CN1C=NC2=C1C(=O)N(C)C(=O)N2C").unwrap();
        let perm: Vec<usize> = (0..mol.atom_count()).rev().collect();
        let permuted = mol.permuted(&perm).unwrap();
        assert!((qed(&mol) - qed(&permuted)).abs() < 1e-12);
    }
}
