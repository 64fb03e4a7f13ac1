//! Graph batching: molecules are concatenated with index offsets so one
//! forward pass covers the whole minibatch; aggregation keys rows by
//! molecule id.

use super::MpnnError;
use crate::chem::MolGraph;

/// A batch of molecular graphs flattened for tensor ops.
pub struct GraphBatch {
    /// Embedding-table row per atom.
    pub atom_rows: Vec<usize>,
    /// Embedding-table row per undirected bond.
    pub bond_rows: Vec<usize>,
    /// Directed edges (both directions per bond).
    pub edge_src: Vec<usize>,
    pub edge_dst: Vec<usize>,
    /// Undirected bond index per directed edge.
    pub edge_bond: Vec<usize>,
    /// Molecule id per atom.
    pub mol_id: Vec<usize>,
    pub mol_atom_counts: Vec<usize>,
    pub n_atoms: usize,
    pub n_bonds: usize,
    pub n_mols: usize,
}

impl GraphBatch {
    pub fn build(mols: &[&MolGraph], elements: &[u8]) -> Result<GraphBatch, MpnnError> {
        let mut batch = GraphBatch {
            atom_rows: Vec::new(),
            bond_rows: Vec::new(),
            edge_src: Vec::new(),
            edge_dst: Vec::new(),
            edge_bond: Vec::new(),
            mol_id: Vec::new(),
            mol_atom_counts: Vec::new(),
            n_atoms: 0,
            n_bonds: 0,
            n_mols: mols.len(),
        };
        for (mi, mol) in mols.iter().enumerate() {
            let atom_offset = batch.n_atoms;
            let bond_offset = batch.n_bonds;
            for atom in mol.atoms() {
                let row = elements
                    .iter()
                    .position(|&e| e == atom.element)
                    .ok_or(MpnnError::UnknownElement(atom.element))?;
                batch.atom_rows.push(row);
                batch.mol_id.push(mi);
            }
            for bond in mol.bonds() {
                batch.bond_rows.push(bond.order.code() as usize - 1);
                let (a, b) = (atom_offset + bond.a, atom_offset + bond.b);
                let bond_idx = batch.n_bonds;
                batch.edge_src.push(a);
                batch.edge_dst.push(b);
                batch.edge_bond.push(bond_idx);
                batch.edge_src.push(b);
                batch.edge_dst.push(a);
                batch.edge_bond.push(bond_idx);
                batch.n_bonds += 1;
            }
            let _ = bond_offset;
            batch.n_atoms += mol.atom_count();
            batch.mol_atom_counts.push(mol.atom_count().max(1));
        }
        Ok(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn offsets_are_applied() {
        let a = parse_smiles("CC").unwrap();
        let b = parse_smiles("CCO").unwrap();
        let batch = GraphBatch::build(&[&a, &b], &[6, 8]).unwrap();
        assert_eq!(batch.n_atoms, 5);
        assert_eq!(batch.n_bonds, 3);
        assert_eq!(batch.mol_id, vec![0, 0, 1, 1, 1]);
        assert_eq!(batch.edge_src.len(), 6);
        // second molecule's first bond connects atoms 2 and 3
        assert!(batch.edge_src.contains(&2) && batch.edge_dst.contains(&3));
    }
}
