//! Property calculators feeding the scoring functions: logP, QED,
//! synthetic-accessibility score, long-cycle penalty, molecular weight, and
//! potency unit conversion. Parameter tables ship as versioned TSV data.

mod alerts;
mod logp;
mod props;
mod qed;
mod sa;

pub use alerts::{alert_count, AlertTable};
pub use logp::{crippen_logp, crippen_logp_detailed};
pub use props::{aromatic_ring_count, hba_count, hbd_count, polar_surface_area, rotatable_bonds};
pub use qed::qed;
pub use sa::{build_fragment_table, sa_score, FragmentScoreTable};

use crate::chem::MolGraph;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DescriptorError {
    #[error("ic50 must be positive, got {0}")]
    NonPositiveConcentration(f64),
    #[error("fragment score table is empty")]
    EmptyTable,
    #[error("fragment corpus is empty")]
    EmptyCorpus,
    #[error("bad fragment table data: {0}")]
    BadTableData(String),
}

/// The descriptor bundle consumed by the scoring functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorSet {
    pub logp: f64,
    /// Druglikeness in (0, 1).
    pub qed: f64,
    /// Synthetic accessibility in [1, 10]; 1 is easy.
    pub sa: f64,
    /// Number of rings with more than six atoms.
    pub cycle: u32,
    pub mol_weight: f64,
}

/// Computes the full bundle for one molecule.
pub fn descriptor_set(
    mol: &MolGraph,
    frag_table: &FragmentScoreTable,
) -> Result<DescriptorSet, DescriptorError> {
    Ok(DescriptorSet {
        logp: crippen_logp(mol),
        qed: qed(mol),
        sa: sa_score(mol, frag_table)?,
        cycle: cycle_penalty(mol),
        mol_weight: mol_weight(mol),
    })
}

/// Number of rings with more than six atoms.
pub fn cycle_penalty(mol: &MolGraph) -> u32 {
    mol.rings().iter().filter(|r| r.len() > 6).count() as u32
}

/// Molecular weight in Dalton, including implicit hydrogens.
pub fn mol_weight(mol: &MolGraph) -> f64 {
    let h_mass = crate::chem::atomic_mass(1).expect("hydrogen mass");
    mol.atoms()
        .iter()
        .map(|a| {
            crate::chem::atomic_mass(a.element).expect("validated element")
                + a.implicit_h as f64 * h_mass
        })
        .sum()
}

/// Potency conversion: pIC50 = 9 - log10(ic50 in nM), i.e. the negative
/// decadic log of the molar concentration.
pub fn pic50_from_ic50(ic50_nm: f64) -> Result<f64, DescriptorError> {
    if !(ic50_nm > 0.0) {
        return Err(DescriptorError::NonPositiveConcentration(ic50_nm));
    }
    Ok(9.0 - ic50_nm.log10())
}
