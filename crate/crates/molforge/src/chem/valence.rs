//! Valence model.
//!
//! Admissible valences per element, as data: C=4, N=3, O=2, S in {2,4,6},
//! P in {3,5}, halogens 1, H=1, B=3. Multi-valent elements use the smallest
//! admissible value that covers the explicit bond order sum. A formal charge
//! shifts every option by the charge sign.

use super::element;
use super::Atom;

/// Admissible valence options for an uncharged atom, ascending.
pub fn valence_options(element_z: u8) -> &'static [u8] {
    match element_z {
        element::H => &[1],
        element::B => &[3],
        element::C => &[4],
        element::N => &[3],
        element::O => &[2],
        element::F | element::CL | element::BR | element::I => &[1],
        element::P => &[3, 5],
        element::S => &[2, 4, 6],
        _ => &[],
    }
}

/// Largest valence an atom of this element/charge supports.
pub fn max_valence(element_z: u8, charge: i8) -> f64 {
    let options = valence_options(element_z);
    let base = options.last().copied().unwrap_or(0) as f64;
    (base + charge as f64).max(0.0)
}

/// Smallest admissible valence covering `order_sum`, or `None` when every
/// option is exceeded.
pub fn smallest_admissible_valence(element_z: u8, charge: i8, order_sum: f64) -> Option<f64> {
    valence_options(element_z)
        .iter()
        .map(|&v| (v as f64 + charge as f64).max(0.0))
        .find(|&v| v + 1e-9 >= order_sum)
}

/// Bond order sum for valence accounting.
///
/// Aromatic bonds count 1.5 units, capped at two per atom; additional
/// aromatic bonds (fused-ring bridgeheads) contribute their sigma unit only,
/// since the pi electron is already counted once.
pub(crate) fn effective_order_sum(orders: impl Iterator<Item = super::BondOrder>) -> f64 {
    let mut sum = 0.0;
    let mut aromatic_seen = 0u32;
    for order in orders {
        if order == super::BondOrder::Aromatic {
            aromatic_seen += 1;
            sum += if aromatic_seen <= 2 { 1.5 } else { 1.0 };
        } else {
            sum += order.valence_units();
        }
    }
    sum
}

/// Order sum used when filling implicit hydrogens at parse time.
///
/// Lone-pair donors contribute two ring electrons without a pi bond, so
/// their aromatic bonds are plain sigma bonds (1.0 each); counting them at
/// 1.5 would overflow the valence of furan-type oxygen or three-connected
/// pyrrole-type nitrogen. Oxygen and sulfur always donate the pair;
/// nitrogen and phosphorus only when they carry a third connection.
pub(crate) fn fill_order_sum(
    element: u8,
    aromatic_atom: bool,
    orders: impl Iterator<Item = super::BondOrder> + Clone,
) -> f64 {
    let degree = orders.clone().count();
    let lone_pair_donor = aromatic_atom
        && (matches!(element, super::element::O | super::element::S)
            || (matches!(element, super::element::N | super::element::P) && degree >= 3));
    if lone_pair_donor {
        orders
            .map(|o| {
                if o == super::BondOrder::Aromatic {
                    1.0
                } else {
                    o.valence_units()
                }
            })
            .sum()
    } else {
        effective_order_sum(orders)
    }
}

/// Upper bound used when validating a constructed graph.
///
/// Aromatic bonds count 1.5 valence units, which overcounts pyrrole-type
/// heteroatoms that donate a lone pair to the ring (two aromatic bonds plus
/// one hydrogen on nitrogen sums to 4 against nitrogen's valence 3), and
/// aromatic carbons carrying an exocyclic double bond (lowercase pyridone
/// style input). Both get one extra unit of slack.
pub(crate) fn validation_limit(atom: &Atom, has_exocyclic_double: bool) -> f64 {
    let heteroatom_slack = atom.aromatic
        && matches!(atom.element, element::N | element::O | element::S | element::P | element::B);
    let carbonyl_slack = atom.aromatic && has_exocyclic_double;
    let slack = if heteroatom_slack || carbonyl_slack { 1.0 } else { 0.0 };
    max_valence(atom.element, atom.formal_charge) + slack
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charge_shifts_options() {
        assert_eq!(max_valence(element::N, 1), 4.0); // ammonium
        assert_eq!(max_valence(element::O, -1), 1.0); // alkoxide
        assert_eq!(max_valence(element::F, -1), 0.0); // fluoride
    }

    #[test]
    fn smallest_admissible_picks_lowest_cover() {
        assert_eq!(smallest_admissible_valence(element::S, 0, 1.0), Some(2.0));
        assert_eq!(smallest_admissible_valence(element::S, 0, 3.0), Some(4.0));
        assert_eq!(smallest_admissible_valence(element::S, 0, 5.5), Some(6.0));
        assert_eq!(smallest_admissible_valence(element::S, 0, 7.0), None);
        assert_eq!(smallest_admissible_valence(element::P, 0, 4.0), Some(5.0));
    }
}
