//! Aromaticity perception.
//!
//! Rings written in lowercase are trusted as given. Kekulé rings are
//! aromatized when every member is sp2-capable and the Hückel 4n+2 electron
//! count holds; perception iterates so fused systems settle.

use super::rings;
use super::{Atom, Bond, BondOrder, ChemError};

/// Perceives aromatic rings over raw parsed atoms/bonds, upgrading Kekulé
/// rings in place. Returns the updated atoms and bonds.
pub(crate) fn perceive(
    mut atoms: Vec<Atom>,
    mut bonds: Vec<Bond>,
) -> Result<(Vec<Atom>, Vec<Bond>), ChemError> {
    let n = atoms.len();
    let mut adjacency = vec![Vec::new(); n];
    for (i, bond) in bonds.iter().enumerate() {
        adjacency[bond.a].push((bond.b, i));
        adjacency[bond.b].push((bond.a, i));
    }
    let rings = rings::sssr(n, &bonds, &adjacency);
    let in_any_ring: Vec<bool> =
        (0..n).map(|i| rings.iter().any(|r| r.contains(&i))).collect();

    // trusted pass: rings whose atoms all carry the input aromatic flag
    for ring in &rings {
        if ring.iter().all(|&i| atoms[i].aromatic) {
            set_ring_aromatic(ring, &mut atoms, &mut bonds, &adjacency);
        }
    }

    // Hückel passes for Kekulé rings; iterate until stable
    for _ in 0..=rings.len() {
        let mut changed = false;
        for ring in &rings {
            if ring_fully_aromatic(ring, &atoms, &bonds, &adjacency) {
                continue;
            }
            if huckel_aromatic(ring, &atoms, &bonds, &adjacency, &in_any_ring) {
                set_ring_aromatic(ring, &mut atoms, &mut bonds, &adjacency);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok((atoms, bonds))
}

fn ring_fully_aromatic(
    ring: &[usize],
    atoms: &[Atom],
    bonds: &[Bond],
    adjacency: &[Vec<(usize, usize)>],
) -> bool {
    ring.iter().all(|&i| atoms[i].aromatic)
        && ring_bond_indices(ring, adjacency)
            .iter()
            .all(|&bi| bonds[bi].order == BondOrder::Aromatic)
}

fn set_ring_aromatic(
    ring: &[usize],
    atoms: &mut [Atom],
    bonds: &mut [Bond],
    adjacency: &[Vec<(usize, usize)>],
) {
    for &i in ring {
        atoms[i].aromatic = true;
    }
    for bi in ring_bond_indices(ring, adjacency) {
        bonds[bi].order = BondOrder::Aromatic;
    }
}

fn ring_bond_indices(ring: &[usize], adjacency: &[Vec<(usize, usize)>]) -> Vec<usize> {
    let n = ring.len();
    (0..n)
        .filter_map(|k| {
            let (u, v) = (ring[k], ring[(k + 1) % n]);
            adjacency[u].iter().find(|(nbr, _)| *nbr == v).map(|&(_, bi)| bi)
        })
        .collect()
}

/// Hückel test for one ring: all atoms sp2-capable, pi-electron total = 4n+2.
fn huckel_aromatic(
    ring: &[usize],
    atoms: &[Atom],
    bonds: &[Bond],
    adjacency: &[Vec<(usize, usize)>],
    in_any_ring: &[bool],
) -> bool {
    let mut total = 0u32;
    for &i in ring {
        match pi_contribution(i, atoms, bonds, adjacency, in_any_ring) {
            Some(pi) => total += pi,
            None => return false,
        }
    }
    total % 4 == 2
}

/// Pi electrons an atom donates to its ring, or `None` when not sp2-capable.
fn pi_contribution(
    idx: usize,
    atoms: &[Atom],
    bonds: &[Bond],
    adjacency: &[Vec<(usize, usize)>],
    in_any_ring: &[bool],
) -> Option<u32> {
    let atom = &atoms[idx];
    if !super::element::aromatic_capable(atom.element) {
        return None;
    }
    if adjacency[idx].len() > 3 {
        return None;
    }

    let mut doubles = 0;
    let mut double_partner_in_ring = false;
    let mut has_aromatic_bond = false;
    for &(nbr, bi) in &adjacency[idx] {
        match bonds[bi].order {
            BondOrder::Triple => return None,
            BondOrder::Double => {
                doubles += 1;
                if in_any_ring[nbr] {
                    double_partner_in_ring = true;
                }
            }
            BondOrder::Aromatic => has_aromatic_bond = true,
            BondOrder::Single => {}
        }
    }
    if doubles > 1 {
        return None;
    }

    let is_carbon = atom.element == super::element::C;
    let is_boron = atom.element == super::element::B;
    if doubles == 1 {
        // an endocyclic double bond contributes one electron; an exocyclic
        // one (quinone or amide carbonyl) keeps the whole ring Kekulé here,
        // since aromatizing around it would overflow the carbon valence
        return if double_partner_in_ring { Some(1) } else { None };
    }
    if atom.aromatic || has_aromatic_bond {
        // already-perceived neighbor ring; classify by element
        if is_carbon {
            return Some(1);
        }
        if is_boron {
            return Some(0);
        }
        // heteroatom: pyridine-type when bare with two connections,
        // pyrrole-type (lone pair) when carrying H or a third substituent
        if atom.implicit_h > 0 || adjacency[idx].len() == 3 {
            return Some(2);
        }
        return Some(1);
    }
    if is_carbon {
        // saturated carbon blocks aromaticity
        return None;
    }
    if is_boron {
        return Some(0);
    }
    Some(2) // saturated heteroatom lone pair
}
