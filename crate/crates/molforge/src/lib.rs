//! Molecular-design optimization toolkit.
//!
//! Building blocks, bottom to top:
//!
//! - [`chem`]: SMILES parsing/writing, molecular graphs, valence model,
//!   ring perception, aromaticity, canonicalization.
//! - [`fingerprint`]: circular substructure fingerprints and Tanimoto
//!   similarity.

pub mod bayesopt;
pub mod chem;
pub mod descriptors;
pub mod dqn;
pub mod dtba;
pub mod fingerprint;
pub mod jtvae;
pub mod mpnn;
pub mod pipeline;
pub mod scoring;
pub mod tensor;
