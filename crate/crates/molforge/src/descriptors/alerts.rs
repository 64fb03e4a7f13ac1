//! Structural alert matching. The shipped list holds ~20 reactive or toxic
//! substructures; counting is by subgraph embedding, with optional minimum
//! hydrogen requirements per pattern atom.

use crate::chem::{parse_smiles, subgraph_matches, subgraph_matches_min_h, MolGraph};
use std::sync::OnceLock;

const ALERTS_TABLE: &str = include_str!("data/alerts.tsv");

/// One alert pattern.
pub struct Alert {
    pub name: String,
    pub pattern: MolGraph,
    /// Minimum hydrogen count per pattern atom (all zero when absent).
    pub min_h: Vec<u8>,
}

/// The shipped alert list.
pub struct AlertTable {
    pub alerts: Vec<Alert>,
}

impl AlertTable {
    pub fn shipped() -> &'static AlertTable {
        static TABLE: OnceLock<AlertTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let alerts = ALERTS_TABLE
                .lines()
                .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
                .map(|l| {
                    let cols: Vec<&str> = l.split('\t').collect();
                    let name = cols[0].to_string();
                    let pattern = parse_smiles(cols[1]).unwrap_or_else(|e| {
                        panic!("shipped alert {name} failed to parse: {e}")
                    });
                    let mut min_h = vec![0u8; pattern.atom_count()];
                    if let Some(spec) = cols.get(2) {
                        for pair in spec.split(',').filter(|p| !p.trim().is_empty()) {
                            let (idx, h) = pair.split_once(':').expect("idx:h");
                            min_h[idx.trim().parse::<usize>().expect("index")] =
                                h.trim().parse().expect("count");
                        }
                    }
                    Alert { name, pattern, min_h }
                })
                .collect();
            AlertTable { alerts }
        })
    }

    /// Number of distinct alerts present in the molecule.
    pub fn count_in(&self, mol: &MolGraph) -> u32 {
        self.alerts
            .iter()
            .filter(|alert| {
                if alert.min_h.iter().any(|&h| h > 0) {
                    subgraph_matches_min_h(&alert.pattern, mol, &alert.min_h)
                } else {
                    subgraph_matches(&alert.pattern, mol)
                }
            })
            .count() as u32
    }
}

/// Alert count against the shipped table.
pub fn alert_count(mol: &MolGraph) -> u32 {
    AlertTable::shipped().count_in(mol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_table_parses() {
        let table = AlertTable::shipped();
        assert!(table.alerts.len() >= 18, "got {}", table.alerts.len());
    }

    #[test]
    fn nitro_triggers_nitro_and_nitroso() {
        let mol = parse_smiles("c1ccccc1[N+](=O)[O-]").unwrap();
        assert!(alert_count(&mol) >= 1);
        let clean = parse_smiles("c1ccccc1C").unwrap();
        assert_eq!(alert_count(&clean), 0);
    }

    #[test]
    fn thiol_needs_hydrogen() {
        let thiol = parse_smiles("CCS").unwrap(); // S carries one implicit H
        let thioether = parse_smiles("CSC").unwrap();
        assert_eq!(alert_count(&thiol), 1);
        assert_eq!(alert_count(&thioether), 0);
    }

    #[test]
    fn epoxide_matches() {
        let mol = parse_smiles("CC1CO1").unwrap();
        assert!(alert_count(&mol) >= 1);
    }
}
