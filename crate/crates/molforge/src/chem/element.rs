//! Supported-element table: symbols, atomic numbers, and average masses.
//!
//! The set is the SMILES organic subset plus hydrogen. Metals and anything
//! else outside the table are rejected at parse time.

pub(crate) const H: u8 = 1;
pub(crate) const B: u8 = 5;
pub(crate) const C: u8 = 6;
pub(crate) const N: u8 = 7;
pub(crate) const O: u8 = 8;
pub(crate) const F: u8 = 9;
pub(crate) const P: u8 = 15;
pub(crate) const S: u8 = 16;
pub(crate) const CL: u8 = 17;
pub(crate) const BR: u8 = 35;
pub(crate) const I: u8 = 53;

const TABLE: &[(u8, &str, f64)] = &[
    (H, "H", 1.008),
    (B, "B", 10.811),
    (C, "C", 12.011),
    (N, "N", 14.007),
    (O, "O", 15.999),
    (F, "F", 18.998),
    (P, "P", 30.974),
    (S, "S", 32.06),
    (CL, "Cl", 35.45),
    (BR, "Br", 79.904),
    (I, "I", 126.904),
];

/// Atomic number for a symbol, if the element is supported.
pub fn atomic_number(symbol: &str) -> Option<u8> {
    TABLE.iter().find(|(_, s, _)| *s == symbol).map(|&(z, _, _)| z)
}

/// Symbol for an atomic number, if supported.
pub fn element_symbol(z: u8) -> Option<&'static str> {
    TABLE.iter().find(|&&(n, _, _)| n == z).map(|&(_, s, _)| s)
}

/// Average atomic mass in Dalton.
pub fn atomic_mass(z: u8) -> Option<f64> {
    TABLE.iter().find(|&&(n, _, _)| n == z).map(|&(_, _, m)| m)
}

pub fn is_supported_element(z: u8) -> bool {
    TABLE.iter().any(|&(n, _, _)| n == z)
}

/// Elements that may appear bare (unbracketed) in SMILES.
pub fn organic_subset(z: u8) -> bool {
    matches!(z, B | C | N | O | F | P | S | CL | BR | I)
}

/// Elements that may carry the aromatic (lowercase) flag.
pub fn aromatic_capable(z: u8) -> bool {
    matches!(z, B | C | N | O | P | S)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_round_trip() {
        for &(z, sym, _) in TABLE {
            assert_eq!(atomic_number(sym), Some(z));
            assert_eq!(element_symbol(z), Some(sym));
        }
        assert_eq!(atomic_number("Na"), None);
        assert_eq!(atomic_number("Fe"), None);
    }
}
