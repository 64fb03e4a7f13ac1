//! Molecule assembly during decoding: a child cluster template attaches to
//! the growing molecule by unifying one shared atom (or one shared bond for
//! fused rings) with the parent cluster's atoms. Every candidate is built
//! and validated; invalid valence combinations simply never appear.

use crate::chem::{Atom, Bond, MolGraph};

/// One viable way to attach a template, with the molecule it produces.
#[derive(Debug, Clone)]
pub struct AttachmentCandidate {
    /// `(molecule atom, template atom)` unifications.
    pub unify: Vec<(usize, usize)>,
    pub result: MolGraph,
    /// Template-atom positions in the result molecule.
    pub child_atoms: Vec<usize>,
}

/// Enumerates all valence-valid attachments of `template` onto `mol` at the
/// given parent-cluster atoms.
pub fn enumerate_attachments(
    mol: &MolGraph,
    parent_atoms: &[usize],
    template: &MolGraph,
) -> Vec<AttachmentCandidate> {
    let mut out = Vec::new();

    if template.atom_count() == 1 && template.bond_count() == 0 {
        // junction singleton: identifies an existing atom, adds nothing
        let t_atom = template.atom(0);
        for &p in parent_atoms {
            let m_atom = mol.atom(p);
            if m_atom.element == t_atom.element && m_atom.formal_charge == t_atom.formal_charge
            {
                out.push(AttachmentCandidate {
                    unify: vec![(p, 0)],
                    result: mol.clone(),
                    child_atoms: vec![p],
                });
            }
        }
        return out;
    }

    // single-atom unification (bond clusters and spiro/substituent rings)
    for t in 0..template.atom_count() {
        for &p in parent_atoms {
            if let Some(candidate) = try_unify(mol, template, &[(p, t)]) {
                out.push(candidate);
            }
        }
    }

    // bond unification (fused rings): template edge onto an existing edge
    // between parent atoms, both orientations
    for bond in template.bonds() {
        for &p1 in parent_atoms {
            for &p2 in parent_atoms {
                if p1 == p2 {
                    continue;
                }
                let existing = match mol.bond_between(p1, p2) {
                    Some(b) => b,
                    None => continue,
                };
                if existing.order != bond.order {
                    continue;
                }
                if let Some(candidate) =
                    try_unify(mol, template, &[(p1, bond.a), (p2, bond.b)])
                {
                    out.push(candidate);
                }
            }
        }
    }
    out
}

/// Builds the merged molecule for a unification map, or `None` when elements
/// clash or any valence overflows.
fn try_unify(
    mol: &MolGraph,
    template: &MolGraph,
    unify: &[(usize, usize)],
) -> Option<AttachmentCandidate> {
    for &(p, t) in unify {
        let (ma, ta) = (mol.atom(p), template.atom(t));
        if ma.element != ta.element || ma.formal_charge != ta.formal_charge {
            return None;
        }
    }

    let mut atoms: Vec<Atom> = mol.atoms().to_vec();
    let mut bonds: Vec<Bond> = mol.bonds().to_vec();

    // map template atoms into the merged graph
    let mut t_to_new = vec![usize::MAX; template.atom_count()];
    for &(p, t) in unify {
        t_to_new[t] = p;
    }
    for t in 0..template.atom_count() {
        if t_to_new[t] == usize::MAX {
            t_to_new[t] = atoms.len();
            atoms.push(*template.atom(t));
        }
    }
    for bond in template.bonds() {
        let (a, b) = (t_to_new[bond.a], t_to_new[bond.b]);
        match find_bond(&bonds, a, b) {
            Some(existing) => {
                // only identical orders may overlap (fused unification)
                if bonds[existing].order != bond.order {
                    return None;
                }
            }
            None => bonds.push(Bond { a, b, order: bond.order }),
        }
    }

    // unified atoms may become aromatic when the template ring is aromatic
    for &(p, t) in unify {
        if template.atom(t).aromatic {
            atoms[p].aromatic = true;
        }
    }

    // hydrogens absorb order-sum changes; each atom keeps its total budget
    let old_sum = |idx: usize, graph: &MolGraph| graph.order_sum(idx);
    let new_sum = |idx: usize| {
        crate::chem::valence_units_capped(
            bonds
                .iter()
                .filter(|b| b.a == idx || b.b == idx)
                .map(|b| b.order),
        )
    };
    for p in 0..mol.atom_count() {
        let delta = new_sum(p) - old_sum(p, mol);
        if delta != 0.0 {
            let h = atoms[p].implicit_h as f64 - delta;
            if h < -1e-9 {
                return None; // no hydrogen budget for the new bonds
            }
            atoms[p].implicit_h = h.max(0.0).floor() as u8;
        }
    }
    for t in 0..template.atom_count() {
        let idx = t_to_new[t];
        if idx >= mol.atom_count() {
            let delta = new_sum(idx) - old_sum(t, template);
            if delta != 0.0 {
                let h = atoms[idx].implicit_h as f64 - delta;
                if h < -1e-9 {
                    return None;
                }
                atoms[idx].implicit_h = h.max(0.0).floor() as u8;
            }
        }
    }

    let result = MolGraph::new(atoms, bonds).ok()?;
    Some(AttachmentCandidate {
        unify: unify.to_vec(),
        result,
        child_atoms: t_to_new,
    })
}

fn find_bond(bonds: &[Bond], a: usize, b: usize) -> Option<usize> {
    bonds
        .iter()
        .position(|bd| (bd.a == a && bd.b == b) || (bd.a == b && bd.b == a))
}
