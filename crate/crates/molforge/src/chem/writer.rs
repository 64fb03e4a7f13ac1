//! SMILES output. A DFS over a spanning tree with ring closures on the back
//! edges; atoms are bracketed only when a bare symbol would reparse
//! differently.

use super::element;
use super::valence;
use super::{AtomIdx, BondOrder, MolGraph};

/// Writes SMILES in input atom order. The output reparses to an isomorphic
/// graph.
pub fn write_smiles(mol: &MolGraph) -> String {
    let identity: Vec<usize> = (0..mol.atom_count()).collect();
    write_with_ranks(mol, &identity)
}

struct Traversal {
    visited: Vec<bool>,
    children: Vec<Vec<AtomIdx>>,
    closures: Vec<Vec<(u16, BondOrder, bool)>>,
    closure_seen: std::collections::HashSet<(AtomIdx, AtomIdx)>,
    next_closure: u16,
}

/// Writes SMILES choosing the start atom and neighbor order by rank
/// (ties broken by input index).
pub(crate) fn write_with_ranks(mol: &MolGraph, ranks: &[usize]) -> String {
    let n = mol.atom_count();
    if n == 0 {
        return String::new();
    }
    let start = (0..n).min_by_key(|&i| (ranks[i], i)).unwrap();

    let mut tr = Traversal {
        visited: vec![false; n],
        children: vec![Vec::new(); n],
        closures: vec![Vec::new(); n],
        closure_seen: std::collections::HashSet::new(),
        next_closure: 1,
    };
    discover(mol, ranks, start, usize::MAX, &mut tr);

    let mut out = String::new();
    emit(mol, start, usize::MAX, &tr, &mut out);
    out
}

/// Pass 1: preorder DFS assigning tree edges and ring-closure numbers.
fn discover(mol: &MolGraph, ranks: &[usize], v: AtomIdx, parent: AtomIdx, tr: &mut Traversal) {
    tr.visited[v] = true;
    let mut nbrs: Vec<AtomIdx> = mol
        .neighbors(v)
        .iter()
        .map(|&(w, _)| w)
        .filter(|&w| w != parent)
        .collect();
    nbrs.sort_by_key(|&w| (ranks[w], w));
    for w in nbrs {
        if tr.visited[w] {
            let key = (v.min(w), v.max(w));
            if tr.closure_seen.insert(key) {
                let number = tr.next_closure;
                tr.next_closure += 1;
                let order = mol.bond_between(v, w).expect("edge exists").order;
                // w was visited (and is emitted) first, so it opens the digit
                tr.closures[w].push((number, order, true));
                tr.closures[v].push((number, order, false));
            }
        } else {
            tr.children[v].push(w);
            discover(mol, ranks, w, v, tr);
        }
    }
}

/// Pass 2: string emission over the discovered tree.
fn emit(mol: &MolGraph, v: AtomIdx, parent: AtomIdx, tr: &Traversal, out: &mut String) {
    if parent != usize::MAX {
        let bond = mol.bond_between(parent, v).expect("tree edge");
        out.push_str(bond_symbol(mol, parent, v, bond.order));
    }
    out.push_str(&atom_token(mol, v));
    for &(number, order, first) in &tr.closures[v] {
        if first {
            let other = closure_partner(mol, v, number, &tr.closures);
            out.push_str(bond_symbol(mol, v, other, order));
        }
        if number < 10 {
            out.push((b'0' + number as u8) as char);
        } else {
            out.push('%');
            out.push_str(&format!("{number:02}"));
        }
    }
    let kids = &tr.children[v];
    for (k, &child) in kids.iter().enumerate() {
        if k + 1 < kids.len() {
            out.push('(');
            emit(mol, child, v, tr, out);
            out.push(')');
        } else {
            emit(mol, child, v, tr, out);
        }
    }
}

fn closure_partner(
    mol: &MolGraph,
    v: AtomIdx,
    number: u16,
    closures: &[Vec<(u16, BondOrder, bool)>],
) -> AtomIdx {
    for w in 0..mol.atom_count() {
        if w != v && closures[w].iter().any(|&(num, _, _)| num == number) {
            return w;
        }
    }
    v
}

/// Bond symbol as emitted before an atom or ring-closure digit.
fn bond_symbol(mol: &MolGraph, a: AtomIdx, b: AtomIdx, order: BondOrder) -> &'static str {
    match order {
        BondOrder::Single => {
            // implicit between two aromatic atoms means aromatic, so a plain
            // single bond there needs the explicit symbol
            if mol.atom(a).aromatic && mol.atom(b).aromatic {
                "-"
            } else {
                ""
            }
        }
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => "",
    }
}

fn atom_token(mol: &MolGraph, idx: AtomIdx) -> String {
    let atom = mol.atom(idx);
    let symbol = element::element_symbol(atom.element).expect("validated element");
    let symbol = if atom.aromatic { symbol.to_ascii_lowercase() } else { symbol.to_string() };

    let needs_bracket = atom.formal_charge != 0
        || atom.element == element::H
        || !element::organic_subset(atom.element)
        || atom.implicit_h != reparse_default_h(mol, idx);

    if !needs_bracket {
        return symbol;
    }
    let mut token = String::from("[");
    token.push_str(&symbol);
    match atom.implicit_h {
        0 => {}
        1 => token.push('H'),
        h => token.push_str(&format!("H{h}")),
    }
    match atom.formal_charge {
        0 => {}
        1 => token.push('+'),
        -1 => token.push('-'),
        c if c > 0 => token.push_str(&format!("+{c}")),
        c => token.push_str(&format!("{c}")),
    }
    token.push(']');
    token
}

/// Hydrogen count the parser would infer for a bare symbol with this atom's
/// bonds.
fn reparse_default_h(mol: &MolGraph, idx: AtomIdx) -> u8 {
    let atom = mol.atom(idx);
    let order_sum = valence::fill_order_sum(
        atom.element,
        atom.aromatic,
        mol.neighbors(idx).iter().map(|&(_, bi)| mol.bonds()[bi].order),
    );
    match valence::smallest_admissible_valence(atom.element, 0, order_sum) {
        Some(v) => (v - order_sum).max(0.0).floor() as u8,
        None => u8::MAX, // force brackets
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{is_isomorphic, parse_smiles};

    fn round_trip(smiles: &str) {
        let mol = parse_smiles(smiles).unwrap();
        let written = write_smiles(&mol);
        let reparsed = parse_smiles(&written)
            .unwrap_or_else(|e| panic!("rewrite of {smiles} -> {written} failed: {e}"));
        assert!(
            is_isomorphic(&mol, &reparsed),
            "{smiles} -> {written} is not isomorphic to the original"
        );
    }

    #[test]
    fn round_trips_simple_molecules() {
        for s in [
            "C",
            "CCO",
            "CC(=O)O",
            "c1ccccc1",
            "C1CCCCC1",
            "c1ccc2ccccc2c1",
            "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
            "C[N+](=O)[O-]",
            "c1cc[nH]c1",
            "CS(=O)(=O)c1ccccc1",
            "OC(=O)c1ccccc1OC(C)=O",
            "N#Cc1ccccc1",
            "ClC(Cl)(Cl)Cl",
            "c1ccccc1-c1ccccc1",
            "C1CC2CCC1CC2",
        ] {
            round_trip(s);
        }
    }

    #[test]
    fn benzene_write_has_one_ring_closure_pair() {
        let mol = parse_smiles("c1ccccc1").unwrap();
        let written = write_smiles(&mol);
        let digits: Vec<char> = written.chars().filter(|c| c.is_ascii_digit()).collect();
        assert_eq!(digits.len(), 2);
        assert_eq!(digits[0], digits[1]);
    }

    #[test]
    fn pyrrole_nitrogen_keeps_bracket() {
        let mol = parse_smiles("c1cc[nH]c1").unwrap();
        let written = write_smiles(&mol);
        assert!(written.contains("[nH]"), "got {written}");
    }

    #[test]
    fn charge_tokens() {
        round_trip("[NH4+]");
        round_trip("[O-]c1ccccc1");
        round_trip("C[N+](C)(C)C");
    }
}
