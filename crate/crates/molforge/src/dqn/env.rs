//! The graph-edit environment. Actions are enumerated exhaustively and
//! filtered by the valence model; every applied action yields a fresh,
//! validated, connected graph with hydrogens implicit.

use super::DqnError;
use crate::chem::{valence_options, Atom, Bond, BondOrder, MolGraph};

/// A point in an episode: the molecule so far and the step budget.
#[derive(Debug, Clone, PartialEq)]
pub struct MolState {
    pub graph: MolGraph,
    pub steps_taken: u32,
    pub max_steps: u32,
}

impl MolState {
    pub fn initial(max_steps: u32) -> MolState {
        let graph = MolGraph::new(Vec::new(), Vec::new()).expect("empty graph is valid");
        MolState { graph, steps_taken: 0, max_steps }
    }

    pub fn steps_remaining(&self) -> u32 {
        self.max_steps.saturating_sub(self.steps_taken)
    }

    pub fn out_of_steps(&self) -> bool {
        self.steps_taken >= self.max_steps
    }
}

/// One graph edit. Bond orders here are always single/double/triple;
/// aromatic bonds are never created or touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    AddAtom { element: u8, attach_to: Option<usize>, order: BondOrder },
    AddBond { a: usize, b: usize, order: BondOrder },
    ChangeBond { a: usize, b: usize, order: BondOrder },
    RemoveBond { a: usize, b: usize },
    NoOp,
}

const EDIT_ORDERS: [BondOrder; 3] = [BondOrder::Single, BondOrder::Double, BondOrder::Triple];

/// Environment parameters: which elements may be added and the step budget.
#[derive(Debug, Clone)]
pub struct Environment {
    pub atom_set: Vec<u8>,
    pub max_steps: u32,
}

impl Environment {
    pub fn new(atom_set: Vec<u8>, max_steps: u32) -> Environment {
        Environment { atom_set, max_steps }
    }

    pub fn initial_state(&self) -> MolState {
        MolState::initial(self.max_steps)
    }

    /// Every legal action from this state, deterministically ordered.
    ///
    /// The empty graph admits exactly one first-atom placement per element.
    /// Otherwise: atom additions over (target, element, order), new bonds
    /// over free-valence pairs, order changes on existing bonds, removals of
    /// ring bonds (so the graph stays connected), and a no-op.
    pub fn enumerate_actions(&self, state: &MolState) -> Vec<Action> {
        let graph = &state.graph;
        let mut actions = Vec::new();
        if graph.atom_count() == 0 {
            for &element in &self.atom_set {
                actions.push(Action::AddAtom {
                    element,
                    attach_to: None,
                    order: BondOrder::Single,
                });
            }
            return actions;
        }

        let free: Vec<u8> = (0..graph.atom_count()).map(|i| graph.free_valence(i)).collect();

        for target in 0..graph.atom_count() {
            if free[target] == 0 {
                continue;
            }
            for &element in &self.atom_set {
                let new_cap = valence_options(element).last().copied().unwrap_or(0);
                for order in EDIT_ORDERS {
                    let k = order.code();
                    if k <= free[target] && k <= new_cap {
                        actions.push(Action::AddAtom {
                            element,
                            attach_to: Some(target),
                            order,
                        });
                    }
                }
            }
        }

        for a in 0..graph.atom_count() {
            for b in (a + 1)..graph.atom_count() {
                if graph.bond_between(a, b).is_some() {
                    continue;
                }
                for order in EDIT_ORDERS {
                    let k = order.code();
                    if k <= free[a] && k <= free[b] {
                        actions.push(Action::AddBond { a, b, order });
                    }
                }
            }
        }

        for bond in graph.bonds() {
            if bond.order == BondOrder::Aromatic {
                continue;
            }
            let current = bond.order.code() as i16;
            for order in EDIT_ORDERS {
                let k = order.code() as i16;
                if k == current {
                    continue;
                }
                let demand = (k - current).max(0) as u8;
                if demand <= free[bond.a].min(free[bond.b]) {
                    actions.push(Action::ChangeBond { a: bond.a, b: bond.b, order });
                }
            }
        }

        for (bi, bond) in graph.bonds().iter().enumerate() {
            if bond.order == BondOrder::Aromatic {
                continue;
            }
            if stays_connected_without(graph, bi) {
                actions.push(Action::RemoveBond { a: bond.a, b: bond.b });
            }
        }

        actions.push(Action::NoOp);
        actions
    }

    /// Applies a legal action, producing the successor state.
    pub fn apply(&self, state: &MolState, action: &Action) -> Result<MolState, DqnError> {
        if state.out_of_steps() {
            return Err(DqnError::EpisodeFinished);
        }
        if !self.enumerate_actions(state).contains(action) {
            return Err(DqnError::IllegalAction(format!("{action:?}")));
        }
        let graph = apply_edit(&state.graph, action)?;
        Ok(MolState {
            graph,
            steps_taken: state.steps_taken + 1,
            max_steps: state.max_steps,
        })
    }

    /// Successor graph without legality re-checking; callers pass actions
    /// fresh out of `enumerate_actions`.
    pub fn peek(&self, state: &MolState, action: &Action) -> Result<MolGraph, DqnError> {
        apply_edit(&state.graph, action)
    }
}

/// Rebuilds the graph with the edit applied and hydrogens refilled.
fn apply_edit(graph: &MolGraph, action: &Action) -> Result<MolGraph, DqnError> {
    let mut atoms: Vec<Atom> = graph.atoms().to_vec();
    let mut bonds: Vec<Bond> = graph.bonds().to_vec();
    match *action {
        Action::NoOp => return Ok(graph.clone()),
        Action::AddAtom { element, attach_to, order } => {
            atoms.push(Atom::new(element));
            if let Some(target) = attach_to {
                bonds.push(Bond { a: target, b: atoms.len() - 1, order });
            }
        }
        Action::AddBond { a, b, order } => {
            bonds.push(Bond { a, b, order });
        }
        Action::ChangeBond { a, b, order } => {
            let bond = bonds
                .iter_mut()
                .find(|bd| (bd.a == a && bd.b == b) || (bd.a == b && bd.b == a))
                .ok_or_else(|| DqnError::IllegalAction(format!("no bond {a}-{b}")))?;
            bond.order = order;
        }
        Action::RemoveBond { a, b } => {
            bonds.retain(|bd| !((bd.a == a && bd.b == b) || (bd.a == b && bd.b == a)));
        }
    }
    refill_hydrogens(&mut atoms, &bonds);
    Ok(MolGraph::new(atoms, bonds)?)
}

/// Implicit hydrogens fill the remaining valence (agent-built graphs carry
/// no charges or aromatic systems).
fn refill_hydrogens(atoms: &mut [Atom], bonds: &[Bond]) {
    let mut sums = vec![0.0f64; atoms.len()];
    for bond in bonds {
        sums[bond.a] += bond.order.valence_units();
        sums[bond.b] += bond.order.valence_units();
    }
    for (atom, sum) in atoms.iter_mut().zip(&sums) {
        let fill = crate::chem::smallest_admissible_valence(atom.element, atom.formal_charge, *sum)
            .map(|v| (v - sum).max(0.0).floor() as u8)
            .unwrap_or(0);
        atom.implicit_h = fill;
    }
}

fn stays_connected_without(graph: &MolGraph, bond_idx: usize) -> bool {
    let n = graph.atom_count();
    if n < 2 {
        return false;
    }
    let bond = &graph.bonds()[bond_idx];
    let mut seen = vec![false; n];
    let mut stack = vec![bond.a];
    seen[bond.a] = true;
    while let Some(v) = stack.pop() {
        for &(w, bi) in graph.neighbors(v) {
            if bi == bond_idx || seen[w] {
                continue;
            }
            seen[w] = true;
            stack.push(w);
        }
    }
    seen[bond.b]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn env() -> Environment {
        Environment::new(vec![6, 7, 8], 40)
    }

    fn state_of(smiles: &str) -> MolState {
        MolState { graph: parse_smiles(smiles).unwrap(), steps_taken: 1, max_steps: 40 }
    }

    #[test]
    fn empty_state_offers_one_placement_per_element() {
        let e = env();
        let actions = e.enumerate_actions(&e.initial_state());
        assert_eq!(actions.len(), 3);
        assert!(actions.iter().all(|a| matches!(a, Action::AddAtom { attach_to: None, .. })));
    }

    #[test]
    fn lone_carbon_admits_three_orders_per_element_plus_noop() {
        let e = Environment::new(vec![6], 40);
        let actions = e.enumerate_actions(&state_of("C"));
        // orders 1..3 on one target with free valence 4, plus no-op
        assert_eq!(actions.len(), 4);
        assert!(actions.contains(&Action::NoOp));
    }

    #[test]
    fn oxygen_cannot_receive_triple_bond() {
        let e = Environment::new(vec![8], 40);
        let actions = e.enumerate_actions(&state_of("C"));
        assert!(!actions
            .iter()
            .any(|a| matches!(a, Action::AddAtom { order: BondOrder::Triple, .. })));
        assert!(actions
            .iter()
            .any(|a| matches!(a, Action::AddAtom { order: BondOrder::Double, .. })));
    }

    #[test]
    fn every_enumerated_action_applies_cleanly() {
        let e = env();
        for smiles in ["C", "CCO", "C=CC(N)=O", "C1CCCCC1", "OC1CCC1C#N"] {
            let state = state_of(smiles);
            for action in e.enumerate_actions(&state) {
                let next = e.apply(&state, &action).unwrap_or_else(|err| {
                    panic!("{smiles}: action {action:?} failed: {err}")
                });
                assert_eq!(next.steps_taken, state.steps_taken + 1);
                assert!(next.graph.is_connected());
            }
        }
    }

    #[test]
    fn illegal_action_rejected() {
        let e = env();
        let state = state_of("C");
        let bad = Action::AddBond { a: 0, b: 5, order: BondOrder::Single };
        assert!(matches!(e.apply(&state, &bad), Err(DqnError::IllegalAction(_))));
    }

    #[test]
    fn apply_sequence_builds_expected_molecules() {
        let e = env();
        let s0 = e.initial_state();
        let s1 = e
            .apply(&s0, &Action::AddAtom { element: 6, attach_to: None, order: BondOrder::Single })
            .unwrap();
        assert_eq!(crate::chem::write_smiles(&s1.graph), "C");
        let s2 = e
            .apply(&s1, &Action::AddAtom { element: 8, attach_to: Some(0), order: BondOrder::Single })
            .unwrap();
        assert_eq!(crate::chem::write_smiles(&s2.graph), "CO");
        let s3 = e
            .apply(&s2, &Action::ChangeBond { a: 0, b: 1, order: BondOrder::Double })
            .unwrap();
        assert_eq!(crate::chem::write_smiles(&s3.graph), "C=O");
        assert_eq!(s3.graph.atom(0).implicit_h, 2);
    }

    #[test]
    fn bridge_bonds_cannot_be_removed() {
        let e = env();
        let chain = state_of("CCC");
        assert!(!e
            .enumerate_actions(&chain)
            .iter()
            .any(|a| matches!(a, Action::RemoveBond { .. })));
        let ring = state_of("C1CCCCC1");
        assert!(e
            .enumerate_actions(&ring)
            .iter()
            .any(|a| matches!(a, Action::RemoveBond { .. })));
    }

    #[test]
    fn out_of_steps_state_rejects_actions() {
        let e = env();
        let mut state = state_of("C");
        state.steps_taken = 40;
        assert!(matches!(e.apply(&state, &Action::NoOp), Err(DqnError::EpisodeFinished)));
    }

    /// Oracle: brute-force generation over all (pair, order, element)
    /// combinations filtered by a validity check on the result.
    pub(crate) fn brute_force_actions(env: &Environment, state: &MolState) -> Vec<Action> {
        let graph = &state.graph;
        let mut out = Vec::new();
        if graph.atom_count() == 0 {
            for &element in &env.atom_set {
                out.push(Action::AddAtom { element, attach_to: None, order: BondOrder::Single });
            }
            return out;
        }
        let valid = |action: &Action| -> bool {
            match apply_edit(graph, action) {
                Ok(next) => next.is_connected(),
                Err(_) => false,
            }
        };
        for target in 0..graph.atom_count() {
            for &element in &env.atom_set {
                for order in EDIT_ORDERS {
                    let a = Action::AddAtom { element, attach_to: Some(target), order };
                    // the new atom must still carry its own valence: adding O
                    // by triple bond would overflow the fresh atom
                    let cap = valence_options(element).last().copied().unwrap_or(0);
                    if order.code() <= cap && valid(&a) {
                        out.push(a);
                    }
                }
            }
        }
        for a in 0..graph.atom_count() {
            for b in (a + 1)..graph.atom_count() {
                if graph.bond_between(a, b).is_some() {
                    continue;
                }
                for order in EDIT_ORDERS {
                    let act = Action::AddBond { a, b, order };
                    if valid(&act) {
                        out.push(act);
                    }
                }
            }
        }
        for bond in graph.bonds() {
            if bond.order == BondOrder::Aromatic {
                continue;
            }
            for order in EDIT_ORDERS {
                if order == bond.order {
                    continue;
                }
                let act = Action::ChangeBond { a: bond.a, b: bond.b, order };
                if valid(&act) {
                    out.push(act);
                }
            }
            let act = Action::RemoveBond { a: bond.a, b: bond.b };
            if valid(&act) {
                out.push(act);
            }
        }
        out.push(Action::NoOp);
        out
    }

    #[test]
    fn enumeration_matches_bruteforce_on_samples() {
        let e = env();
        for smiles in ["C", "CCO", "C1CCCCC1", "C(=O)O", "N#CC1CC1O"] {
            let state = state_of(smiles);
            let mut fast: Vec<Action> = e.enumerate_actions(&state);
            let mut brute = brute_force_actions(&e, &state);
            fast.sort_by_key(|a| format!("{a:?}"));
            brute.sort_by_key(|a| format!("{a:?}"));
            assert_eq!(fast, brute, "mismatch on {smiles}");
        }
    }
}
