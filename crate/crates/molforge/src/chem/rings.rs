//! Smallest set of smallest rings.
//!
//! Candidate cycles come from the shortest cycle through each bond (BFS with
//! the bond removed). Candidates are then selected greedily in size order,
//! keeping only those linearly independent over GF(2) in edge-incidence
//! space, until the cyclomatic number is reached.

use super::{AtomIdx, Bond};

/// Computes the SSSR. Returns exactly `|bonds| - |atoms| + components` cycles.
pub(crate) fn sssr(
    atom_count: usize,
    bonds: &[Bond],
    adjacency: &[Vec<(AtomIdx, usize)>],
) -> Vec<Vec<AtomIdx>> {
    let components = component_count(atom_count, adjacency);
    let cyclomatic = (bonds.len() + components).saturating_sub(atom_count);
    if cyclomatic == 0 {
        return Vec::new();
    }

    let mut candidates: Vec<Vec<AtomIdx>> = Vec::new();
    for (bi, bond) in bonds.iter().enumerate() {
        if let Some(path) = shortest_path_avoiding(bond.a, bond.b, bi, atom_count, adjacency) {
            // path runs a..=b; closing the bond forms a cycle
            candidates.push(path);
        }
    }

    // dedup by edge set, then order by (size, edge set) for determinism
    let mut keyed: Vec<(Vec<usize>, Vec<AtomIdx>)> = candidates
        .into_iter()
        .map(|cycle| (edge_indices(&cycle, adjacency), cycle))
        .collect();
    keyed.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
    keyed.dedup_by(|a, b| a.0 == b.0);

    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut rings = Vec::new();
    let words = bonds.len().div_ceil(64);
    for (edges, cycle) in keyed {
        if rings.len() == cyclomatic {
            break;
        }
        let mut vector = vec![0u64; words];
        for e in &edges {
            vector[e / 64] ^= 1 << (e % 64);
        }
        if gf2_reduce(&mut vector, &basis) {
            basis.push(vector);
            rings.push(cycle);
        }
    }
    rings
}

/// Reduces `vector` against the basis; returns true (and leaves the reduced
/// pivot form) when it is independent.
fn gf2_reduce(vector: &mut [u64], basis: &[Vec<u64>]) -> bool {
    for row in basis {
        let pivot = match leading_bit(row) {
            Some(p) => p,
            None => continue,
        };
        if bit(vector, pivot) {
            for (v, r) in vector.iter_mut().zip(row) {
                *v ^= r;
            }
        }
    }
    leading_bit(vector).is_some()
}

fn leading_bit(v: &[u64]) -> Option<usize> {
    for (i, word) in v.iter().enumerate() {
        if *word != 0 {
            return Some(i * 64 + word.trailing_zeros() as usize);
        }
    }
    None
}

fn bit(v: &[u64], idx: usize) -> bool {
    v[idx / 64] >> (idx % 64) & 1 == 1
}

/// Bond indices along a cycle given as an atom sequence.
fn edge_indices(cycle: &[AtomIdx], adjacency: &[Vec<(AtomIdx, usize)>]) -> Vec<usize> {
    let n = cycle.len();
    let mut edges: Vec<usize> = (0..n)
        .map(|i| {
            let (u, v) = (cycle[i], cycle[(i + 1) % n]);
            adjacency[u]
                .iter()
                .find(|(nbr, _)| *nbr == v)
                .map(|&(_, bi)| bi)
                .expect("cycle edge must exist")
        })
        .collect();
    edges.sort_unstable();
    edges
}

/// BFS shortest path from `a` to `b` that never crosses bond `skip`.
fn shortest_path_avoiding(
    a: AtomIdx,
    b: AtomIdx,
    skip: usize,
    atom_count: usize,
    adjacency: &[Vec<(AtomIdx, usize)>],
) -> Option<Vec<AtomIdx>> {
    let mut prev = vec![usize::MAX; atom_count];
    let mut queue = std::collections::VecDeque::new();
    prev[a] = a;
    queue.push_back(a);
    while let Some(v) = queue.pop_front() {
        if v == b {
            break;
        }
        for &(w, bi) in &adjacency[v] {
            if bi == skip || prev[w] != usize::MAX {
                continue;
            }
            prev[w] = v;
            queue.push_back(w);
        }
    }
    if prev[b] == usize::MAX {
        return None;
    }
    let mut path = vec![b];
    let mut cur = b;
    while cur != a {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

fn component_count(atom_count: usize, adjacency: &[Vec<(AtomIdx, usize)>]) -> usize {
    let mut seen = vec![false; atom_count];
    let mut count = 0;
    for start in 0..atom_count {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}
