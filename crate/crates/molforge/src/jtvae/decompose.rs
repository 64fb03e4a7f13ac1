//! Junction-tree construction: ring clusters (merged when bridged), bond
//! clusters for every non-ring bond, singleton clusters at 3-way junction
//! atoms, and a maximum spanning tree over the cluster-intersection graph.

use super::{Cluster, ClusterKind, JtvaeError, JunctionTree};
use crate::chem::MolGraph;

pub fn decompose(mol: &MolGraph) -> Result<JunctionTree, JtvaeError> {
    if mol.atom_count() == 0 || !mol.is_connected() {
        return Err(JtvaeError::DisconnectedMolecule);
    }

    // ring clusters, merging rings that share more than two atoms
    let mut ring_sets: Vec<std::collections::BTreeSet<usize>> = mol
        .rings()
        .iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    loop {
        let mut merged = false;
        'outer: for i in 0..ring_sets.len() {
            for j in (i + 1)..ring_sets.len() {
                let shared = ring_sets[i].intersection(&ring_sets[j]).count();
                if shared > 2 {
                    let other = ring_sets.remove(j);
                    ring_sets[i].extend(other);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }

    let mut clusters: Vec<Cluster> = ring_sets
        .into_iter()
        .map(|atoms| Cluster {
            kind: ClusterKind::Ring,
            atoms: atoms.into_iter().collect(),
            vocab_id: None,
        })
        .collect();

    // bonds not covered by any ring cluster
    for bond in mol.bonds() {
        let covered = clusters.iter().any(|c| {
            c.kind == ClusterKind::Ring
                && c.atoms.binary_search(&bond.a).is_ok()
                && c.atoms.binary_search(&bond.b).is_ok()
        });
        if !covered {
            let mut atoms = vec![bond.a, bond.b];
            atoms.sort_unstable();
            clusters.push(Cluster { kind: ClusterKind::Bond, atoms, vocab_id: None });
        }
    }

    if clusters.is_empty() {
        // single atom, no bonds
        clusters.push(Cluster {
            kind: ClusterKind::AtomBridge,
            atoms: vec![0],
            vocab_id: None,
        });
    }

    // junction singletons where three or more clusters meet at one atom
    let base_count = clusters.len();
    for atom in 0..mol.atom_count() {
        let containing = (0..base_count)
            .filter(|&c| clusters[c].atoms.binary_search(&atom).is_ok())
            .count();
        if containing >= 3 {
            clusters.push(Cluster {
                kind: ClusterKind::AtomBridge,
                atoms: vec![atom],
                vocab_id: None,
            });
        }
    }

    // intersection graph; singleton-junction edges get a dominating weight so
    // the spanning tree routes through them
    let mut weighted: Vec<(i64, usize, usize)> = Vec::new();
    for i in 0..clusters.len() {
        for j in (i + 1)..clusters.len() {
            let shared = intersection_size(&clusters[i].atoms, &clusters[j].atoms);
            if shared == 0 {
                continue;
            }
            let junction = clusters[i].kind == ClusterKind::AtomBridge
                || clusters[j].kind == ClusterKind::AtomBridge;
            let weight = if junction { 100 } else { shared as i64 };
            weighted.push((weight, i, j));
        }
    }
    weighted.sort_by(|a, b| (b.0, a.1, a.2).cmp(&(a.0, b.1, b.2)));

    // maximum spanning tree (Kruskal)
    let mut parent: Vec<usize> = (0..clusters.len()).collect();
    let mut edges = Vec::new();
    for (_, i, j) in weighted {
        if union(&mut parent, i, j) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();

    let tree = JunctionTree { clusters, edges };
    debug_assert!(tree.edges.len() + 1 == tree.clusters.len(), "spanning tree shape");
    Ok(tree)
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let set: std::collections::BTreeSet<usize> = a.iter().copied().collect();
    b.iter().filter(|x| set.contains(x)).count()
}

fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut Vec<usize>, a: usize, b: usize) -> bool {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra == rb {
        return false;
    }
    parent[ra] = rb;
    true
}

/// Tree-shape invariants, used by tests and the acceptance suite.
pub fn validate_tree(tree: &JunctionTree, mol: &MolGraph) -> Result<(), String> {
    let n = tree.clusters.len();
    if tree.edges.len() + 1 != n {
        return Err(format!("{} edges for {} clusters", tree.edges.len(), n));
    }
    // connectivity over tree edges
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in &tree.edges {
            let other = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            if !seen[other] {
                seen[other] = true;
                stack.push(other);
            }
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err("tree is not connected".into());
    }
    // coverage
    let covered: std::collections::BTreeSet<usize> =
        tree.clusters.iter().flat_map(|c| c.atoms.iter().copied()).collect();
    if covered.len() != mol.atom_count() {
        return Err(format!("covers {} of {} atoms", covered.len(), mol.atom_count()));
    }
    // adjacent clusters intersect
    for &(a, b) in &tree.edges {
        if intersection_size(&tree.clusters[a].atoms, &tree.clusters[b].atoms) == 0 {
            return Err(format!("edge ({a},{b}) joins disjoint clusters"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn benzene_is_one_ring_cluster() {
        let tree = decompose(&parse_smiles("c1ccccc1").unwrap()).unwrap();
        assert_eq!(tree.clusters.len(), 1);
        assert_eq!(tree.clusters[0].kind, ClusterKind::Ring);
        assert!(tree.edges.is_empty());
    }

    #[test]
    fn ethanol_is_two_bond_clusters() {
        let mol = parse_smiles("CCO").unwrap();
        let tree = decompose(&mol).unwrap();
        assert_eq!(tree.clusters.len(), 2);
        assert!(tree.clusters.iter().all(|c| c.kind == ClusterKind::Bond));
        assert_eq!(tree.edges.len(), 1);
        validate_tree(&tree, &mol).unwrap();
    }

    #[test]
    fn biphenyl_is_ring_bond_ring_path() {
        let mol = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        let tree = decompose(&mol).unwrap();
        assert_eq!(tree.clusters.len(), 3);
        let kinds: Vec<ClusterKind> = tree.clusters.iter().map(|c| c.kind).collect();
        assert_eq!(kinds.iter().filter(|k| **k == ClusterKind::Ring).count(), 2);
        assert_eq!(kinds.iter().filter(|k| **k == ClusterKind::Bond).count(), 1);
        assert_eq!(tree.edges.len(), 2);
        validate_tree(&tree, &mol).unwrap();
        // the bond cluster sits between the rings
        let bond_idx =
            tree.clusters.iter().position(|c| c.kind == ClusterKind::Bond).unwrap();
        assert_eq!(tree.neighbors(bond_idx).len(), 2);
    }

    #[test]
    fn single_atom_molecule_is_one_singleton() {
        let tree = decompose(&parse_smiles("C").unwrap()).unwrap();
        assert_eq!(tree.clusters.len(), 1);
        assert_eq!(tree.clusters[0].kind, ClusterKind::AtomBridge);
    }

    #[test]
    fn fused_rings_stay_separate_bridged_rings_merge() {
        // naphthalene: two rings share exactly 2 atoms -> stay separate
        let naph = decompose(&parse_smiles("c1ccc2ccccc2c1").unwrap()).unwrap();
        assert_eq!(
            naph.clusters.iter().filter(|c| c.kind == ClusterKind::Ring).count(),
            2
        );
        // norbornane: rings share 3+ atoms -> merged
        let nor = decompose(&parse_smiles("C1CC2CCC1C2").unwrap()).unwrap();
        assert_eq!(
            nor.clusters.iter().filter(|c| c.kind == ClusterKind::Ring).count(),
            1
        );
    }

    #[test]
    fn three_way_junction_gets_singleton() {
        // neopentane: central carbon carries four bond clusters
        let mol = parse_smiles("CC(C)(C)C").unwrap();
        let tree = decompose(&mol).unwrap();
        assert!(tree
            .clusters
            .iter()
            .any(|c| c.kind == ClusterKind::AtomBridge && c.atoms == vec![1]));
        validate_tree(&tree, &mol).unwrap();
    }

    #[test]
    fn corpus_invariants_hold() {
        for s in [
            "CC(=O)Oc1ccccc1C(=O)O",
            "CN1C=NC2=C1C(=O)N(C)C(=O)N2C",
            "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
            "C1CC2CCC1CC2",
            "OCC1OC(O)C(O)C(O)C1O",
        ] {
            let mol = parse_smiles(s).unwrap();
            let tree = decompose(&mol).unwrap();
            validate_tree(&tree, &mol).unwrap_or_else(|e| panic!("{s}: {e}"));
        }
    }
}
