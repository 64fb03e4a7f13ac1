//! Backtracking (sub)graph isomorphism over labeled molecular graphs.
//! Used for whole-graph identity checks and structural-alert matching.

use super::{AtomIdx, MolGraph};

/// Whole-graph isomorphism: same atom labels (element, charge, hydrogens,
/// aromaticity) and same bond orders under some atom bijection.
pub fn is_isomorphic(a: &MolGraph, b: &MolGraph) -> bool {
    if a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    let mut a_labels: Vec<_> = a.atoms().iter().map(full_label).collect();
    let mut b_labels: Vec<_> = b.atoms().iter().map(full_label).collect();
    a_labels.sort_unstable();
    b_labels.sort_unstable();
    if a_labels != b_labels {
        return false;
    }
    match_graphs(a, b, &MatchMode::FullIso).is_some()
}

/// True when `pattern` embeds into `target` (bond-preserving monomorphism).
/// Hydrogen counts on the pattern are ignored; use
/// [`subgraph_matches_min_h`] to require them.
pub fn subgraph_matches(pattern: &MolGraph, target: &MolGraph) -> bool {
    find_subgraph_match(pattern, target).is_some()
}

/// Monomorphism test with per-pattern-atom minimum hydrogen counts.
pub fn subgraph_matches_min_h(pattern: &MolGraph, target: &MolGraph, min_h: &[u8]) -> bool {
    if pattern.atom_count() == 0 || pattern.atom_count() > target.atom_count() {
        return false;
    }
    match_graphs(pattern, target, &MatchMode::Substructure { min_h: Some(min_h) }).is_some()
}

/// First embedding of `pattern` into `target`, as pattern->target indices.
pub fn find_subgraph_match(pattern: &MolGraph, target: &MolGraph) -> Option<Vec<AtomIdx>> {
    if pattern.atom_count() == 0 || pattern.atom_count() > target.atom_count() {
        return None;
    }
    match_graphs(pattern, target, &MatchMode::Substructure { min_h: None })
}

type FullLabel = (u8, i8, u8, bool);

fn full_label(atom: &super::Atom) -> FullLabel {
    (atom.element, atom.formal_charge, atom.implicit_h, atom.aromatic)
}

enum MatchMode<'a> {
    FullIso,
    Substructure { min_h: Option<&'a [u8]> },
}

impl MatchMode<'_> {
    fn atoms_compatible(&self, p_idx: usize, p: &super::Atom, t: &super::Atom) -> bool {
        match self {
            MatchMode::FullIso => full_label(p) == full_label(t),
            MatchMode::Substructure { min_h } => {
                p.element == t.element
                    && p.formal_charge == t.formal_charge
                    && p.aromatic == t.aromatic
                    && min_h.map_or(true, |req| t.implicit_h >= req[p_idx])
            }
        }
    }

    fn degrees_compatible(&self, p_deg: usize, t_deg: usize) -> bool {
        match self {
            MatchMode::FullIso => p_deg == t_deg,
            MatchMode::Substructure { .. } => p_deg <= t_deg,
        }
    }
}

fn match_graphs(pattern: &MolGraph, target: &MolGraph, mode: &MatchMode) -> Option<Vec<AtomIdx>> {
    // visit pattern atoms so each one (after the first per component) touches
    // an already-mapped neighbor
    let order = connected_order(pattern);
    let mut mapping = vec![usize::MAX; pattern.atom_count()];
    let mut used = vec![false; target.atom_count()];
    if backtrack(pattern, target, mode, &order, 0, &mut mapping, &mut used) {
        Some(mapping)
    } else {
        None
    }
}

fn connected_order(g: &MolGraph) -> Vec<AtomIdx> {
    let n = g.atom_count();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &(w, _) in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

fn backtrack(
    pattern: &MolGraph,
    target: &MolGraph,
    mode: &MatchMode,
    order: &[AtomIdx],
    depth: usize,
    mapping: &mut Vec<usize>,
    used: &mut Vec<bool>,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let p = order[depth];
    let p_atom = pattern.atom(p);

    // candidates: neighbors of an already-mapped pattern neighbor, or all
    // unused target atoms when this starts a new component
    let anchor = pattern
        .neighbors(p)
        .iter()
        .find(|&&(w, _)| mapping[w] != usize::MAX)
        .map(|&(w, _)| mapping[w]);
    let candidates: Vec<usize> = match anchor {
        Some(t_anchor) => target.neighbors(t_anchor).iter().map(|&(w, _)| w).collect(),
        None => (0..target.atom_count()).collect(),
    };

    'next: for t in candidates {
        if used[t] || !mode.atoms_compatible(p, p_atom, target.atom(t)) {
            continue;
        }
        if !mode.degrees_compatible(pattern.degree(p), target.degree(t)) {
            continue;
        }
        // every mapped pattern edge must exist in the target with equal order
        for &(w, bi) in pattern.neighbors(p) {
            if mapping[w] == usize::MAX {
                continue;
            }
            match target.bond_between(t, mapping[w]) {
                Some(tb) if tb.order == pattern.bonds()[bi].order => {}
                _ => continue 'next,
            }
        }
        mapping[p] = t;
        used[t] = true;
        if backtrack(pattern, target, mode, order, depth + 1, mapping, used) {
            return true;
        }
        mapping[p] = usize::MAX;
        used[t] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn isomorphic_under_reordering() {
        let a = parse_smiles("CC(C)O").unwrap();
        let b = parse_smiles("OC(C)C").unwrap();
        assert!(is_isomorphic(&a, &b));
    }

    #[test]
    fn different_molecules_not_isomorphic() {
        let a = parse_smiles("CCO").unwrap();
        let b = parse_smiles("CCN").unwrap();
        assert!(!is_isomorphic(&a, &b));
        let c = parse_smiles("CCCO").unwrap();
        let d = parse_smiles("CC(C)O").unwrap();
        assert!(!is_isomorphic(&c, &d));
    }

    #[test]
    fn substructure_embedding() {
        let nitro = parse_smiles("[N+](=O)[O-]").unwrap();
        let nitrobenzene = parse_smiles("c1ccccc1[N+](=O)[O-]").unwrap();
        assert!(subgraph_matches(&nitro, &nitrobenzene));
        let toluene = parse_smiles("Cc1ccccc1").unwrap();
        assert!(!subgraph_matches(&nitro, &toluene));
    }

    #[test]
    fn substructure_respects_bond_orders() {
        let ketone = parse_smiles("CC(=O)C").unwrap();
        let alcohol = parse_smiles("CC(O)C").unwrap();
        let carbonyl = parse_smiles("C=O").unwrap();
        assert!(subgraph_matches(&carbonyl, &ketone));
        assert!(!subgraph_matches(&carbonyl, &alcohol));
    }

    /// Brute-force permutation check agrees with the matcher on small graphs.
    #[test]
    fn agrees_with_permutation_bruteforce() {
        let cases = [
            ("CCO", "OCC", true),
            ("CC=O", "CCO", false),
            ("C1CC1", "CCC", false),
            ("NC(=O)C", "CC(N)=O", true),
        ];
        for (sa, sb, expected) in cases {
            let a = parse_smiles(sa).unwrap();
            let b = parse_smiles(sb).unwrap();
            assert_eq!(is_isomorphic(&a, &b), expected, "{sa} vs {sb}");
            assert_eq!(brute_force_iso(&a, &b), expected, "brute force {sa} vs {sb}");
        }
    }

    fn brute_force_iso(a: &MolGraph, b: &MolGraph) -> bool {
        if a.atom_count() != b.atom_count() {
            return false;
        }
        let n = a.atom_count();
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            if perm_maps(a, b, &perm) {
                return true;
            }
            if !next_permutation(&mut perm) {
                return false;
            }
        }
    }

    fn perm_maps(a: &MolGraph, b: &MolGraph, perm: &[usize]) -> bool {
        for i in 0..a.atom_count() {
            if full_label(a.atom(i)) != full_label(b.atom(perm[i])) {
                return false;
            }
        }
        if a.bond_count() != b.bond_count() {
            return false;
        }
        a.bonds().iter().all(|bond| {
            matches!(b.bond_between(perm[bond.a], perm[bond.b]), Some(tb) if tb.order == bond.order)
        })
    }

    fn next_permutation(p: &mut [usize]) -> bool {
        let n = p.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }
}
