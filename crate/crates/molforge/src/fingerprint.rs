//! Circular substructure fingerprints and Tanimoto similarity.
//!
//! Atom environments start from local invariants (element, degree, charge,
//! hydrogens, ring membership) and expand outward one bond per iteration.
//! Every environment hash is folded into a fixed-width bitset. Hashing is
//! 64-bit FNV-1a over sorted neighbor tuples, so fingerprints are independent
//! of input atom order and stable across platforms.

use crate::chem::MolGraph;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FingerprintError {
    #[error("fingerprint width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
}

/// Fixed-width circular-substructure fingerprint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    bits: Vec<u64>,
    width: usize,
    radius: u32,
    /// Per-bit counts when built in count mode.
    counts: Option<Vec<u32>>,
}

impl Fingerprint {
    /// Morgan/circular fingerprint in bit mode.
    pub fn morgan(mol: &MolGraph, radius: u32, width: usize) -> Fingerprint {
        Self::build(mol, radius, width, false)
    }

    /// Morgan/circular fingerprint keeping per-bit environment counts.
    pub fn morgan_counts(mol: &MolGraph, radius: u32, width: usize) -> Fingerprint {
        Self::build(mol, radius, width, true)
    }

    fn build(mol: &MolGraph, radius: u32, width: usize, count_mode: bool) -> Fingerprint {
        assert!(width.is_power_of_two(), "fingerprint width must be a power of two");
        let mut bits = vec![0u64; width.div_ceil(64)];
        let mut counts = if count_mode { Some(vec![0u32; width]) } else { None };
        for (_, _, hash) in morgan_environments(mol, radius) {
            let idx = (hash as usize) & (width - 1);
            bits[idx / 64] |= 1 << (idx % 64);
            if let Some(c) = counts.as_mut() {
                c[idx] += 1;
            }
        }
        Fingerprint { bits, width, radius, counts }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn count_mode(&self) -> bool {
        self.counts.is_some()
    }

    pub fn popcount(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }

    pub fn bit(&self, idx: usize) -> bool {
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    /// Dense 0/1 vector view, used as neural-network input.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        (0..self.width).map(|i| if self.bit(i) { 1.0 } else { 0.0 }).collect()
    }

    pub fn counts(&self) -> Option<&[u32]> {
        self.counts.as_deref()
    }
}

/// Tanimoto similarity `|a AND b| / |a OR b|` over the bitsets.
///
/// Two empty fingerprints score 0.0, not 1.0, so degenerate atom-free graphs
/// never register as similar.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.width != b.width {
        return Err(FingerprintError::WidthMismatch(a.width, b.width));
    }
    let mut inter = 0u32;
    let mut union = 0u32;
    for (wa, wb) in a.bits.iter().zip(&b.bits) {
        inter += (wa & wb).count_ones();
        union += (wa | wb).count_ones();
    }
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}

/// All `(atom, radius, hash)` environment identifiers up to `radius`.
///
/// Shared with the synthetic-accessibility fragment table, which counts the
/// same environments.
pub fn morgan_environments(mol: &MolGraph, radius: u32) -> Vec<(usize, u32, u64)> {
    let n = mol.atom_count();
    let mut current: Vec<u64> = (0..n)
        .map(|i| {
            let a = mol.atom(i);
            let mut h = Fnv::new();
            h.write_u8(a.element);
            h.write_u8(a.formal_charge as u8);
            h.write_u8(mol.degree(i) as u8);
            h.write_u8(a.implicit_h);
            h.write_u8(a.aromatic as u8);
            h.write_u8(mol.is_ring_atom(i) as u8);
            h.finish()
        })
        .collect();

    let mut out = Vec::with_capacity(n * (radius as usize + 1));
    for (i, &h) in current.iter().enumerate() {
        out.push((i, 0, tag_radius(0, h)));
    }
    for r in 1..=radius {
        let mut next = vec![0u64; n];
        for i in 0..n {
            let mut nbrs: Vec<(u8, u64)> = mol
                .neighbors(i)
                .iter()
                .map(|&(w, bi)| (mol.bonds()[bi].order.code(), current[w]))
                .collect();
            nbrs.sort_unstable();
            let mut h = Fnv::new();
            h.write_u64(current[i]);
            for (code, nh) in nbrs {
                h.write_u8(code);
                h.write_u64(nh);
            }
            next[i] = h.finish();
            out.push((i, r, tag_radius(r, next[i])));
        }
        current = next;
    }
    out
}

fn tag_radius(radius: u32, hash: u64) -> u64 {
    let mut h = Fnv::new();
    h.write_u8(radius as u8);
    h.write_u64(hash);
    h.finish()
}

/// Dense pairwise similarity matrix with rows ordered by ascending potency.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    /// Canonical SMILES in row order.
    pub labels: Vec<String>,
    /// Row-major symmetric matrix.
    pub values: Vec<Vec<f64>>,
}

/// Computes all pairwise Tanimoto similarities, ordering rows and columns by
/// ascending `order_by` value (input order breaks ties).
pub fn similarity_matrix(
    mols: &[MolGraph],
    order_by: &[f64],
    radius: u32,
    width: usize,
) -> SimilarityMatrix {
    assert_eq!(mols.len(), order_by.len(), "one ordering value per molecule");
    let mut order: Vec<usize> = (0..mols.len()).collect();
    order.sort_by(|&a, &b| {
        order_by[a].partial_cmp(&order_by[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });

    let fps: Vec<Fingerprint> =
        order.iter().map(|&i| Fingerprint::morgan(&mols[i], radius, width)).collect();
    let labels = order
        .iter()
        .map(|&i| crate::chem::canonical_smiles(&mols[i]).into_string())
        .collect();
    let n = fps.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let s = tanimoto(&fps[i], &fps[j]).expect("equal widths");
            values[i][j] = s;
            values[j][i] = s;
        }
    }
    SimilarityMatrix { labels, values }
}

impl SimilarityMatrix {
    /// CSV with a canonical-SMILES header row and 4-decimal float cells.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.labels).expect("in-memory write");
        for row in &self.values {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
            w.write_record(&cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf8")
    }
}

/// 64-bit FNV-1a.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }

    fn write_u8(&mut self, byte: u8) {
        self.0 ^= byte as u64;
        self.0 = self.0.wrapping_mul(0x100000001b3);
    }

    fn write_u64(&mut self, value: u64) {
        for b in value.to_le_bytes() {
            self.write_u8(b);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
