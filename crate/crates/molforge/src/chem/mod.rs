//! Molecular graphs: SMILES parsing/writing, valence model, ring perception,
//! aromaticity, and canonicalization.

mod aromatic;
mod canon;
mod element;
mod iso;
mod parser;
mod rings;
mod valence;
mod writer;

pub use canon::{canonical_smiles, CanonicalSmiles};
pub use element::{atomic_mass, atomic_number, element_symbol, is_supported_element};
pub use iso::{find_subgraph_match, is_isomorphic, subgraph_matches, subgraph_matches_min_h};
pub use parser::{parse_smiles, ParseWarning};
pub use valence::{max_valence, smallest_admissible_valence, valence_options};

/// Bond-order sum under the capped aromatic counting used everywhere in the
/// valence model (see [`MolGraph::order_sum`]).
pub fn valence_units_capped(orders: impl Iterator<Item = BondOrder>) -> f64 {
    valence::effective_order_sum(orders)
}

/// Bond-order sum under hydrogen-filling semantics: aromatic bonds of
/// lone-pair donors (aromatic O/S, three-connected aromatic N/P) count as
/// sigma bonds. Matches what the parser uses to assign implicit hydrogens.
pub fn fill_valence_units(
    element: u8,
    aromatic: bool,
    orders: impl Iterator<Item = BondOrder> + Clone,
) -> f64 {
    valence::fill_order_sum(element, aromatic, orders)
}
pub use writer::write_smiles;

use thiserror::Error;

/// Index of an atom inside a [`MolGraph`].
pub type AtomIdx = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChemError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("valence error on atom {atom}: {message}")]
    Valence { atom: usize, message: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

impl ChemError {
    pub(crate) fn syntax(position: usize, message: impl Into<String>) -> Self {
        ChemError::Syntax { position, message: message.into() }
    }
}

/// Bond order between two heavy atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Valence units consumed on each endpoint (aromatic counts 1.5).
    pub fn valence_units(self) -> f64 {
        match self {
            BondOrder::Single => 1.0,
            BondOrder::Double => 2.0,
            BondOrder::Triple => 3.0,
            BondOrder::Aromatic => 1.5,
        }
    }

    /// Small stable code used in hashing and serialization.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

/// A heavy atom. Hydrogens are implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom {
    /// Atomic number (6 = C, 7 = N, ...).
    pub element: u8,
    pub formal_charge: i8,
    /// Implicit hydrogen count; the single source of truth for attached H.
    pub implicit_h: u8,
    pub aromatic: bool,
}

impl Atom {
    pub fn new(element: u8) -> Self {
        Atom { element, formal_charge: 0, implicit_h: 0, aromatic: false }
    }
}

/// An undirected bond between two atom indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: AtomIdx,
    pub b: AtomIdx,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, idx: AtomIdx) -> AtomIdx {
        if self.a == idx {
            self.b
        } else {
            self.a
        }
    }
}

/// Immutable heavy-atom molecular graph with perceived rings.
///
/// Construction validates the valence model and computes the smallest set of
/// smallest rings; edits must build a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    rings: Vec<Vec<AtomIdx>>,
    adjacency: Vec<Vec<(AtomIdx, usize)>>,
}

impl MolGraph {
    /// Builds a graph from atoms and bonds, checking all structural invariants.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, ChemError> {
        let n = atoms.len();
        let mut seen = std::collections::HashSet::new();
        for bond in &bonds {
            if bond.a >= n || bond.b >= n {
                return Err(ChemError::InvalidGraph(format!(
                    "bond ({}, {}) references atom out of range (n = {})",
                    bond.a, bond.b, n
                )));
            }
            if bond.a == bond.b {
                return Err(ChemError::InvalidGraph(format!("self-bond on atom {}", bond.a)));
            }
            let key = (bond.a.min(bond.b), bond.a.max(bond.b));
            if !seen.insert(key) {
                return Err(ChemError::InvalidGraph(format!(
                    "duplicate bond between atoms {} and {}",
                    key.0, key.1
                )));
            }
        }

        let mut adjacency = vec![Vec::new(); n];
        for (i, bond) in bonds.iter().enumerate() {
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }

        let rings = rings::sssr(n, &bonds, &adjacency);
        let graph = MolGraph { atoms, bonds, rings, adjacency };
        graph.check_valence()?;
        graph.check_aromatic_consistency()?;
        Ok(graph)
    }

    fn check_valence(&self) -> Result<(), ChemError> {
        for (i, atom) in self.atoms.iter().enumerate() {
            if !element::is_supported_element(atom.element) {
                return Err(ChemError::InvalidGraph(format!(
                    "unsupported element {} on atom {i}",
                    atom.element
                )));
            }
            let total = self.order_sum(i) + atom.implicit_h as f64;
            let has_exo_double = self.adjacency[i]
                .iter()
                .any(|&(_, bi)| self.bonds[bi].order == BondOrder::Double);
            let limit = valence::validation_limit(atom, has_exo_double);
            if total > limit + 1e-9 {
                return Err(ChemError::Valence {
                    atom: i,
                    message: format!(
                        "bond order sum {total:.1} exceeds max valence {limit:.1} for element {}",
                        element::element_symbol(atom.element).unwrap_or("?")
                    ),
                });
            }
        }
        Ok(())
    }

    /// Aromatic bonds require aromatic endpoints, and every aromatic atom must
    /// sit in at least one all-aromatic ring.
    fn check_aromatic_consistency(&self) -> Result<(), ChemError> {
        for bond in &self.bonds {
            if bond.order == BondOrder::Aromatic
                && (!self.atoms[bond.a].aromatic || !self.atoms[bond.b].aromatic)
            {
                return Err(ChemError::InvalidGraph(format!(
                    "aromatic bond ({}, {}) with non-aromatic endpoint",
                    bond.a, bond.b
                )));
            }
        }
        'atom: for (i, atom) in self.atoms.iter().enumerate() {
            if !atom.aromatic {
                continue;
            }
            for ring in &self.rings {
                if ring.contains(&i) && ring.iter().all(|&j| self.atoms[j].aromatic) {
                    continue 'atom;
                }
            }
            return Err(ChemError::InvalidGraph(format!(
                "aromatic atom {i} is not part of any aromatic ring"
            )));
        }
        Ok(())
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, idx: AtomIdx) -> &Atom {
        &self.atoms[idx]
    }

    /// Smallest set of smallest rings, each as an atom-index cycle.
    pub fn rings(&self) -> &[Vec<AtomIdx>] {
        &self.rings
    }

    /// Neighbors of an atom as `(neighbor, bond index)` pairs.
    pub fn neighbors(&self, idx: AtomIdx) -> &[(AtomIdx, usize)] {
        &self.adjacency[idx]
    }

    pub fn degree(&self, idx: AtomIdx) -> usize {
        self.adjacency[idx].len()
    }

    pub fn bond_between(&self, a: AtomIdx, b: AtomIdx) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|(nbr, _)| *nbr == b)
            .map(|&(_, bi)| &self.bonds[bi])
    }

    /// Sum of bond orders on an atom. Aromatic bonds count 1.5, capped at two
    /// per atom so fused-ring bridgeheads stay within carbon's valence.
    pub fn order_sum(&self, idx: AtomIdx) -> f64 {
        valence::effective_order_sum(
            self.adjacency[idx].iter().map(|&(_, bi)| self.bonds[bi].order),
        )
    }

    /// Remaining bonding capacity of an atom; implicit hydrogens are treated
    /// as consumable and do not reduce it.
    pub fn free_valence(&self, idx: AtomIdx) -> u8 {
        let atom = &self.atoms[idx];
        let max = valence::max_valence(atom.element, atom.formal_charge);
        let free = max - self.order_sum(idx);
        if free <= 0.0 {
            0
        } else {
            free.floor() as u8
        }
    }

    pub fn is_ring_atom(&self, idx: AtomIdx) -> bool {
        self.rings.iter().any(|r| r.contains(&idx))
    }

    pub fn is_ring_bond(&self, bond_idx: usize) -> bool {
        let bond = &self.bonds[bond_idx];
        self.rings.iter().any(|ring| {
            let pos_a = ring.iter().position(|&x| x == bond.a);
            let pos_b = ring.iter().position(|&x| x == bond.b);
            match (pos_a, pos_b) {
                (Some(i), Some(j)) => {
                    let n = ring.len();
                    (i + 1) % n == j || (j + 1) % n == i
                }
                _ => false,
            }
        })
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.atoms.is_empty() || self.component_count() == 1
    }

    /// Total hydrogen-inclusive heavy atom count (heavy atoms only; hydrogens
    /// are implicit and not counted).
    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Rebuilds the graph with atoms relabeled so that new index `i` holds old
    /// atom `perm[i]`. Used by order-invariance tests and canonical output.
    pub fn permuted(&self, perm: &[AtomIdx]) -> Result<MolGraph, ChemError> {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length mismatch");
        let mut inverse = vec![0usize; perm.len()];
        for (new_idx, &old_idx) in perm.iter().enumerate() {
            inverse[old_idx] = new_idx;
        }
        let atoms = perm.iter().map(|&old| self.atoms[old]).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond { a: inverse[b.a], b: inverse[b.b], order: b.order })
            .collect();
        MolGraph::new(atoms, bonds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_bond() {
        let atoms = vec![Atom::new(6)];
        let bonds = vec![Bond { a: 0, b: 1, order: BondOrder::Single }];
        assert!(matches!(MolGraph::new(atoms, bonds), Err(ChemError::InvalidGraph(_))));
    }

    #[test]
    fn rejects_duplicate_bond() {
        let atoms = vec![Atom::new(6), Atom::new(6)];
        let bonds = vec![
            Bond { a: 0, b: 1, order: BondOrder::Single },
            Bond { a: 1, b: 0, order: BondOrder::Double },
        ];
        assert!(MolGraph::new(atoms, bonds).is_err());
    }

    #[test]
    fn rejects_valence_overflow() {
        // carbon with five single bonds
        let mut atoms = vec![Atom::new(6)];
        let mut bonds = Vec::new();
        for i in 1..=5 {
            atoms.push(Atom::new(6));
            bonds.push(Bond { a: 0, b: i, order: BondOrder::Single });
        }
        assert!(matches!(MolGraph::new(atoms, bonds), Err(ChemError::Valence { .. })));
    }

    #[test]
    fn free_valence_counts_hydrogens_as_available() {
        let mut methane = Atom::new(6);
        methane.implicit_h = 4;
        let mol = MolGraph::new(vec![methane], vec![]).unwrap();
        assert_eq!(mol.free_valence(0), 4);
    }
}
