//! SMILES reader for the organic subset: bare and bracket atoms, charges,
//! explicit H counts, ring closures (digits and `%nn`), branches, and the
//! bond symbols `-`, `=`, `#`, `:`. Aromatic rings are perceived after
//! parsing. Stereo markers and isotopes are accepted and discarded with a
//! warning; the full grammar lives in `docs/smiles-grammar.md`.

use super::aromatic;
use super::element;
use super::valence;
use super::{Atom, Bond, BondOrder, ChemError, MolGraph};

/// Non-fatal information dropped during parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    StereoDiscarded { position: usize },
    IsotopeDiscarded { position: usize },
    AtomClassDiscarded { position: usize },
}

/// Parses a SMILES string into a molecular graph.
pub fn parse_smiles(text: &str) -> Result<MolGraph, ChemError> {
    parse_smiles_with_warnings(text).map(|(mol, _)| mol)
}

/// Like [`parse_smiles`], also returning the discarded-feature warnings.
pub fn parse_smiles_with_warnings(
    text: &str,
) -> Result<(MolGraph, Vec<ParseWarning>), ChemError> {
    let mut parser = Parser::new(text);
    parser.run()?;
    let warnings = std::mem::take(&mut parser.warnings);
    let mol = parser.finish()?;
    Ok((mol, warnings))
}

/// Atom as read from the text, before implicit hydrogen assignment.
struct RawAtom {
    element: u8,
    charge: i8,
    aromatic: bool,
    /// Explicit H count from a bracket atom; organic-subset atoms fill by
    /// valence instead.
    bracket_h: Option<u8>,
    position: usize,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<RawAtom>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    pending_bond: Option<BondOrder>,
    branch_stack: Vec<usize>,
    ring_closures: std::collections::BTreeMap<u16, (usize, Option<BondOrder>, usize)>,
    warnings: Vec<ParseWarning>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            bonds: Vec::new(),
            prev: None,
            pending_bond: None,
            branch_stack: Vec::new(),
            ring_closures: std::collections::BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn run(&mut self) -> Result<(), ChemError> {
        if self.bytes.is_empty() {
            return Err(ChemError::syntax(0, "empty SMILES"));
        }
        while let Some(byte) = self.peek() {
            match byte {
                b'(' => {
                    self.pos += 1;
                    let prev = self.prev.ok_or_else(|| {
                        ChemError::syntax(self.pos - 1, "branch with no preceding atom")
                    })?;
                    self.branch_stack.push(prev);
                }
                b')' => {
                    self.pos += 1;
                    if self.pending_bond.is_some() {
                        return Err(ChemError::syntax(self.pos - 1, "dangling bond before ')'"));
                    }
                    let restored = self.branch_stack.pop().ok_or_else(|| {
                        ChemError::syntax(self.pos - 1, "unbalanced ')'")
                    })?;
                    self.prev = Some(restored);
                }
                b'-' => {
                    self.set_pending(BondOrder::Single)?;
                    self.pos += 1;
                }
                b'=' => {
                    self.set_pending(BondOrder::Double)?;
                    self.pos += 1;
                }
                b'#' => {
                    self.set_pending(BondOrder::Triple)?;
                    self.pos += 1;
                }
                b':' => {
                    self.set_pending(BondOrder::Aromatic)?;
                    self.pos += 1;
                }
                b'/' | b'\\' => {
                    self.warnings.push(ParseWarning::StereoDiscarded { position: self.pos });
                    self.set_pending(BondOrder::Single)?;
                    self.pos += 1;
                }
                b'0'..=b'9' => {
                    let n = (byte - b'0') as u16;
                    self.pos += 1;
                    self.ring_closure(n)?;
                }
                b'%' => {
                    self.pos += 1;
                    let d1 = self.bump();
                    let d2 = self.bump();
                    match (d1, d2) {
                        (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                            let n = ((a - b'0') as u16) * 10 + (b - b'0') as u16;
                            self.ring_closure(n)?;
                        }
                        _ => {
                            return Err(ChemError::syntax(
                                self.pos,
                                "'%' must be followed by two digits",
                            ))
                        }
                    }
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom)?;
                }
                b'.' => {
                    return Err(ChemError::syntax(
                        self.pos,
                        "disconnected components ('.') are not supported",
                    ));
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom)?;
                }
            }
        }
        if !self.branch_stack.is_empty() {
            return Err(ChemError::syntax(self.pos, "unbalanced '('"));
        }
        if self.pending_bond.is_some() {
            return Err(ChemError::syntax(self.pos, "trailing bond symbol"));
        }
        if let Some((&n, _)) = self.ring_closures.iter().next() {
            return Err(ChemError::syntax(self.pos, format!("unclosed ring bond {n}")));
        }
        Ok(())
    }

    fn set_pending(&mut self, order: BondOrder) -> Result<(), ChemError> {
        if self.pending_bond.is_some() {
            return Err(ChemError::syntax(self.pos, "two bond symbols in a row"));
        }
        if self.prev.is_none() {
            return Err(ChemError::syntax(self.pos, "bond symbol with no preceding atom"));
        }
        self.pending_bond = Some(order);
        Ok(())
    }

    fn ring_closure(&mut self, number: u16) -> Result<(), ChemError> {
        let here = self.prev.ok_or_else(|| {
            ChemError::syntax(self.pos, "ring closure with no preceding atom")
        })?;
        let pending = self.pending_bond.take();
        match self.ring_closures.remove(&number) {
            None => {
                self.ring_closures.insert(number, (here, pending, self.pos));
            }
            Some((other, other_pending, _)) => {
                if other == here {
                    return Err(ChemError::syntax(self.pos, "ring bond to the same atom"));
                }
                let order = match (pending, other_pending) {
                    (None, None) => self.implicit_order(here, other),
                    (Some(o), None) | (None, Some(o)) => o,
                    (Some(a), Some(b)) if a == b => a,
                    (Some(_), Some(_)) => {
                        return Err(ChemError::syntax(
                            self.pos,
                            "conflicting bond symbols on ring closure",
                        ))
                    }
                };
                self.bonds.push(Bond { a: other, b: here, order });
            }
        }
        Ok(())
    }

    fn implicit_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn add_atom(&mut self, atom: RawAtom) -> Result<(), ChemError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let order = self.pending_bond.take().unwrap_or_else(|| self.implicit_order(prev, idx));
            self.bonds.push(Bond { a: prev, b: idx, order });
        } else if self.pending_bond.is_some() {
            return Err(ChemError::syntax(self.pos, "bond with no preceding atom"));
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<RawAtom, ChemError> {
        let start = self.pos;
        let byte = self.bump().expect("caller checked non-empty");
        let (element, aromatic) = match byte {
            b'C' if self.peek() == Some(b'l') => {
                self.pos += 1;
                (element::CL, false)
            }
            b'B' if self.peek() == Some(b'r') => {
                self.pos += 1;
                (element::BR, false)
            }
            b'B' => (element::B, false),
            b'C' => (element::C, false),
            b'N' => (element::N, false),
            b'O' => (element::O, false),
            b'P' => (element::P, false),
            b'S' => (element::S, false),
            b'F' => (element::F, false),
            b'I' => (element::I, false),
            b'b' => (element::B, true),
            b'c' => (element::C, true),
            b'n' => (element::N, true),
            b'o' => (element::O, true),
            b'p' => (element::P, true),
            b's' => (element::S, true),
            other => {
                return Err(ChemError::syntax(
                    start,
                    format!("unexpected character '{}'", other as char),
                ))
            }
        };
        Ok(RawAtom { element, charge: 0, aromatic, bracket_h: None, position: start })
    }

    fn bracket_atom(&mut self) -> Result<RawAtom, ChemError> {
        let start = self.pos;
        self.pos += 1; // consume '['

        // isotope digits are read and discarded
        let mut saw_isotope = false;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            saw_isotope = true;
            self.pos += 1;
        }
        if saw_isotope {
            self.warnings.push(ParseWarning::IsotopeDiscarded { position: start });
        }

        let sym_start = self.pos;
        let first = self
            .bump()
            .ok_or_else(|| ChemError::syntax(sym_start, "unterminated bracket atom"))?;
        let (element, aromatic) = if first.is_ascii_lowercase() {
            let el = match first {
                b'b' => element::B,
                b'c' => element::C,
                b'n' => element::N,
                b'o' => element::O,
                b'p' => element::P,
                b's' => element::S,
                other => {
                    return Err(ChemError::syntax(
                        sym_start,
                        format!("unknown aromatic element '{}'", other as char),
                    ))
                }
            };
            (el, true)
        } else {
            let mut symbol = String::new();
            symbol.push(first as char);
            if self.peek().is_some_and(|b| b.is_ascii_lowercase()) {
                // two-letter symbol, but only when the pair is a known element;
                // [CH4] must read as carbon + hcount, not symbol "Ch"
                let two: String =
                    format!("{}{}", first as char, self.peek().unwrap() as char);
                if element::atomic_number(&two).is_some() {
                    symbol = two;
                    self.pos += 1;
                }
            }
            let z = element::atomic_number(&symbol).ok_or_else(|| {
                ChemError::syntax(sym_start, format!("unknown or unsupported element '{symbol}'"))
            })?;
            (z, false)
        };

        // chirality markers are discarded
        if self.peek() == Some(b'@') {
            self.warnings.push(ParseWarning::StereoDiscarded { position: self.pos });
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            }
        }

        let mut bracket_h = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            bracket_h = 1;
            if let Some(d) = self.peek().filter(|b| b.is_ascii_digit()) {
                bracket_h = d - b'0';
                self.pos += 1;
            }
        }

        let mut charge = 0i8;
        match self.peek() {
            Some(b'+') => {
                self.pos += 1;
                charge = 1;
                if let Some(d) = self.peek().filter(|b| b.is_ascii_digit()) {
                    charge = (d - b'0') as i8;
                    self.pos += 1;
                } else {
                    while self.peek() == Some(b'+') {
                        charge += 1;
                        self.pos += 1;
                    }
                }
            }
            Some(b'-') => {
                self.pos += 1;
                charge = -1;
                if let Some(d) = self.peek().filter(|b| b.is_ascii_digit()) {
                    charge = -((d - b'0') as i8);
                    self.pos += 1;
                } else {
                    while self.peek() == Some(b'-') {
                        charge -= 1;
                        self.pos += 1;
                    }
                }
            }
            _ => {}
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            let mut saw = false;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
                saw = true;
            }
            if !saw {
                return Err(ChemError::syntax(self.pos, "atom class ':' needs digits"));
            }
            self.warnings.push(ParseWarning::AtomClassDiscarded { position: start });
        }

        if self.bump() != Some(b']') {
            return Err(ChemError::syntax(start, "unterminated bracket atom"));
        }
        Ok(RawAtom { element, charge, aromatic, bracket_h: Some(bracket_h), position: start })
    }

    /// Assigns implicit hydrogens, perceives aromaticity, and builds the
    /// final validated graph.
    fn finish(self) -> Result<MolGraph, ChemError> {
        let Parser { atoms: raw, bonds, .. } = self;

        let mut incident: Vec<Vec<BondOrder>> = vec![Vec::new(); raw.len()];
        for bond in &bonds {
            incident[bond.a].push(bond.order);
            incident[bond.b].push(bond.order);
        }
        let order_sums: Vec<f64> = incident
            .iter()
            .zip(&raw)
            .map(|(orders, ra)| {
                valence::fill_order_sum(ra.element, ra.aromatic, orders.iter().copied())
            })
            .collect();

        let mut atoms = Vec::with_capacity(raw.len());
        for (i, ra) in raw.iter().enumerate() {
            let implicit_h = match ra.bracket_h {
                Some(h) => {
                    let limit = valence::max_valence(ra.element, ra.charge)
                        + if ra.aromatic { 1.0 } else { 0.0 };
                    if order_sums[i] + h as f64 > limit + 1e-9 {
                        return Err(ChemError::Valence {
                            atom: i,
                            message: format!(
                                "explicit bonds plus H count exceed valence at position {}",
                                ra.position
                            ),
                        });
                    }
                    h
                }
                None => {
                    let admissible =
                        valence::smallest_admissible_valence(ra.element, ra.charge, order_sums[i])
                            .ok_or_else(|| ChemError::Valence {
                                atom: i,
                                message: format!(
                                    "explicit bonds exceed valence table at position {}",
                                    ra.position
                                ),
                            })?;
                    (admissible - order_sums[i]).max(0.0).floor() as u8
                }
            };
            atoms.push(Atom {
                element: ra.element,
                formal_charge: ra.charge,
                implicit_h,
                aromatic: ra.aromatic,
            });
        }

        let (atoms, bonds) = aromatic::perceive(atoms, bonds)?;
        MolGraph::new(atoms, bonds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane() {
        let mol = parse_smiles("C").unwrap();
        assert_eq!(mol.atom_count(), 1);
        assert_eq!(mol.bond_count(), 0);
        assert_eq!(mol.atom(0).implicit_h, 4);
    }

    #[test]
    fn benzene_lowercase() {
        let mol = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(mol.atom_count(), 6);
        assert_eq!(mol.bond_count(), 6);
        assert!(mol.atoms().iter().all(|a| a.aromatic && a.implicit_h == 1));
        assert!(mol.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert_eq!(mol.rings().len(), 1);
        assert_eq!(mol.rings()[0].len(), 6);
    }

    #[test]
    fn unbalanced_branch_is_syntax_error() {
        assert!(matches!(parse_smiles("C("), Err(ChemError::Syntax { .. })));
        assert!(matches!(parse_smiles("C)C"), Err(ChemError::Syntax { .. })));
    }

    #[test]
    fn acetic_acid_orders_and_hydrogens() {
        let mol = parse_smiles("CC(=O)O").unwrap();
        assert_eq!(mol.atom_count(), 4);
        let orders: Vec<_> = mol.bonds().iter().map(|b| b.order).collect();
        assert_eq!(orders, vec![BondOrder::Single, BondOrder::Double, BondOrder::Single]);
        let hs: Vec<_> = mol.atoms().iter().map(|a| a.implicit_h).collect();
        assert_eq!(hs, vec![3, 0, 0, 1]);
    }

    #[test]
    fn charges_parse() {
        let mol = parse_smiles("[NH4+]").unwrap();
        assert_eq!(mol.atom(0).formal_charge, 1);
        assert_eq!(mol.atom(0).implicit_h, 4);
        let mol = parse_smiles("[O-]C").unwrap();
        assert_eq!(mol.atom(0).formal_charge, -1);
        assert_eq!(mol.atom(0).implicit_h, 0);
        let mol = parse_smiles("[Ca+2]");
        assert!(mol.is_err(), "metals are unsupported");
    }

    #[test]
    fn nitro_group_parses_with_charges() {
        let mol = parse_smiles("C[N+](=O)[O-]").unwrap();
        assert_eq!(mol.atom_count(), 4);
        assert_eq!(mol.atom(1).formal_charge, 1);
        assert_eq!(mol.atom(3).formal_charge, -1);
    }

    #[test]
    fn kekule_benzene_is_perceived_aromatic() {
        let mol = parse_smiles("C1=CC=CC=C1").unwrap();
        assert!(mol.atoms().iter().all(|a| a.aromatic));
        assert!(mol.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn cyclohexane_stays_aliphatic() {
        let mol = parse_smiles("C1CCCCC1").unwrap();
        assert!(mol.atoms().iter().all(|a| !a.aromatic));
        assert_eq!(mol.rings().len(), 1);
    }

    #[test]
    fn pyrrole_keeps_bracket_hydrogen() {
        let mol = parse_smiles("c1cc[nH]c1").unwrap();
        let n = mol.atoms().iter().position(|a| a.element == 7).unwrap();
        assert_eq!(mol.atom(n).implicit_h, 1);
        assert!(mol.atom(n).aromatic);
    }

    #[test]
    fn aromatic_atom_outside_ring_rejected() {
        assert!(parse_smiles("cC").is_err());
    }

    #[test]
    fn stereo_is_discarded_with_warning() {
        let (mol, warnings) = parse_smiles_with_warnings("F/C=C/F").unwrap();
        assert_eq!(mol.atom_count(), 4);
        assert_eq!(
            warnings.iter().filter(|w| matches!(w, ParseWarning::StereoDiscarded { .. })).count(),
            2
        );
        let (_, warnings) = parse_smiles_with_warnings("N[C@@H](C)C(=O)O").unwrap();
        assert!(!warnings.is_empty());
    }

    #[test]
    fn ring_closure_percent_syntax() {
        let a = parse_smiles("C%12CCCCC%12").unwrap();
        let b = parse_smiles("C1CCCCC1").unwrap();
        assert_eq!(a.bond_count(), b.bond_count());
    }

    #[test]
    fn conflicting_ring_bond_symbols_rejected() {
        assert!(parse_smiles("C=1CCCCC-1").is_err());
    }

    #[test]
    fn unclosed_ring_rejected() {
        assert!(matches!(parse_smiles("C1CCC"), Err(ChemError::Syntax { .. })));
    }

    #[test]
    fn valence_error_on_overbonded_carbon() {
        assert!(matches!(parse_smiles("C(=O)(=O)=O"), Err(ChemError::Valence { .. })));
    }

    #[test]
    fn triple_bond_nitrile() {
        let mol = parse_smiles("CC#N").unwrap();
        assert_eq!(mol.bonds()[1].order, BondOrder::Triple);
        assert_eq!(mol.atom(2).implicit_h, 0);
    }

    #[test]
    fn sulfur_hypervalence() {
        let mol = parse_smiles("CS(=O)(=O)C").unwrap();
        assert_eq!(mol.atom(1).implicit_h, 0);
        assert!(parse_smiles("S(=O)(=O)(=O)=O").is_err());
    }

    #[test]
    fn dot_rejected() {
        assert!(parse_smiles("C.C").is_err());
    }
}
