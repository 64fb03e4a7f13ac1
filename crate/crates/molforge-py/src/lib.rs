//! Python bindings: molecules, fingerprints, descriptors, objectives, and
//! the acquisition math, exposed as the `molforge_py` module.

use molforge::chem;
use molforge::descriptors;
use molforge::fingerprint;
use molforge::scoring;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

/// An immutable molecular graph parsed from SMILES.
#[pyclass]
struct Molecule {
    inner: chem::MolGraph,
}

#[pymethods]
impl Molecule {
    #[new]
    fn new(smiles: &str) -> PyResult<Self> {
        let inner = chem::parse_smiles(smiles)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Molecule { inner })
    }

    fn atom_count(&self) -> usize {
        self.inner.atom_count()
    }

    fn bond_count(&self) -> usize {
        self.inner.bond_count()
    }

    fn ring_count(&self) -> usize {
        self.inner.rings().len()
    }

    /// SMILES in input atom order.
    fn smiles(&self) -> String {
        chem::write_smiles(&self.inner)
    }

    /// Deterministic normal-form SMILES.
    fn canonical_smiles(&self) -> String {
        chem::canonical_smiles(&self.inner).into_string()
    }

    fn mol_weight(&self) -> f64 {
        descriptors::mol_weight(&self.inner)
    }

    fn logp(&self) -> f64 {
        descriptors::crippen_logp(&self.inner)
    }

    fn qed(&self) -> f64 {
        descriptors::qed(&self.inner)
    }

    fn cycle_penalty(&self) -> u32 {
        descriptors::cycle_penalty(&self.inner)
    }

    fn free_valence(&self, atom: usize) -> PyResult<u8> {
        if atom >= self.inner.atom_count() {
            return Err(PyValueError::new_err(format!("atom {atom} out of range")));
        }
        Ok(self.inner.free_valence(atom))
    }

    fn is_isomorphic(&self, other: &Molecule) -> bool {
        chem::is_isomorphic(&self.inner, &other.inner)
    }

    fn fingerprint(&self, radius: u32, width: usize) -> PyResult<Fingerprint> {
        if !width.is_power_of_two() {
            return Err(PyValueError::new_err("width must be a power of two"));
        }
        Ok(Fingerprint { inner: fingerprint::Fingerprint::morgan(&self.inner, radius, width) })
    }

    fn __repr__(&self) -> String {
        format!("Molecule({})", self.canonical_smiles())
    }
}

/// Fixed-width circular fingerprint.
#[pyclass]
struct Fingerprint {
    inner: fingerprint::Fingerprint,
}

#[pymethods]
impl Fingerprint {
    fn width(&self) -> usize {
        self.inner.width()
    }

    fn popcount(&self) -> u32 {
        self.inner.popcount()
    }

    fn bits(&self) -> Vec<bool> {
        (0..self.inner.width()).map(|i| self.inner.bit(i)).collect()
    }

    fn tanimoto(&self, other: &Fingerprint) -> PyResult<f64> {
        fingerprint::tanimoto(&self.inner, &other.inner)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// Fragment-frequency table backing the synthetic-accessibility score.
#[pyclass]
struct FragmentTable {
    inner: descriptors::FragmentScoreTable,
}

#[pymethods]
impl FragmentTable {
    #[new]
    fn new(corpus: Vec<String>) -> PyResult<Self> {
        let mols: Vec<chem::MolGraph> = corpus
            .iter()
            .map(|s| chem::parse_smiles(s))
            .collect::<Result<_, _>>()
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let table = descriptors::build_fragment_table(&mols)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(FragmentTable { inner: table })
    }

    fn len(&self) -> usize {
        self.inner.len()
    }

    fn sa_score(&self, mol: &Molecule) -> PyResult<f64> {
        descriptors::sa_score(&mol.inner, &self.inner)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Evaluates one of the named objectives (logp_pen, qed_pen) for a
    /// molecule; potency-based kinds need a trained surrogate and are
    /// reached through the pipeline instead.
    fn score(&self, kind: &str, mol: &Molecule) -> PyResult<(f64, std::collections::BTreeMap<String, f64>)> {
        let kind = scoring::ScoreKind::parse(kind)
            .ok_or_else(|| PyValueError::new_err(format!("unknown scoring kind '{kind}'")))?;
        if kind.needs_surrogate() {
            return Err(PyValueError::new_err(
                "potency-based objectives need a trained surrogate; use the pipeline",
            ));
        }
        let f = scoring::ScoreFunction::new(kind, None, std::rc::Rc::new(self.inner.clone()))
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let report = f.score(&mol.inner).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((report.total, report.components))
    }
}

/// pIC50 from an IC50 in nanomolar.
#[pyfunction]
fn pic50_from_ic50(ic50_nm: f64) -> PyResult<f64> {
    descriptors::pic50_from_ic50(ic50_nm).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Expected improvement of a Gaussian over the incumbent.
#[pyfunction]
fn expected_improvement(mean: f64, variance: f64, best: f64) -> PyResult<f64> {
    if variance < 0.0 {
        return Err(PyValueError::new_err("variance must be non-negative"));
    }
    Ok(molforge::bayesopt::expected_improvement(mean, variance, best))
}

/// Pairwise Tanimoto similarity matrix ordered by ascending potency.
#[pyfunction]
fn similarity_matrix(
    smiles: Vec<String>,
    potency: Vec<f64>,
    radius: u32,
    width: usize,
) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    if smiles.len() != potency.len() {
        return Err(PyValueError::new_err("one potency value per molecule"));
    }
    let mols: Vec<chem::MolGraph> = smiles
        .iter()
        .map(|s| chem::parse_smiles(s))
        .collect::<Result<_, _>>()
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let m = fingerprint::similarity_matrix(&mols, &potency, radius, width);
    Ok((m.labels, m.values))
}

/// Built-in drug-like example structures.
#[pyfunction]
fn drug_smiles() -> Vec<String> {
    molforge::pipeline::DRUG_SMILES.iter().map(|s| s.to_string()).collect()
}

#[pymodule]
fn molforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Molecule>()?;
    m.add_class::<Fingerprint>()?;
    m.add_class::<FragmentTable>()?;
    m.add_function(wrap_pyfunction!(pic50_from_ic50, m)?)?;
    m.add_function(wrap_pyfunction!(expected_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(similarity_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(drug_smiles, m)?)?;
    Ok(())
}
