//! Python bindings for the qdsim quantum double simulator.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qdsim::experiments::script::{face_ref, vertex_ref};
use qdsim::experiments::{self, ModeKind, ProtocolScript, RunOptions};
use qdsim::protocols::{CorrectionPolicy, QuantumDouble, Session as CoreSession};
use qdsim::{Boundary, FiniteGroup, IrrepLabel, Lattice as CoreLattice, Mode};

fn py_err(e: qdsim::Error) -> PyErr {
    if e.is_usage() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for qdsim::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

#[pyclass(name = "Group", frozen)]
struct Group(FiniteGroup);

#[pymethods]
impl Group {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        FiniteGroup::by_name(name).py().map(Self)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    fn elements(&self) -> Vec<String> {
        (0..self.0.order())
            .map(|g| self.0.element_name(g).to_string())
            .collect()
    }

    fn mul(&self, a: &str, b: &str) -> PyResult<String> {
        let g = self
            .0
            .mul(self.0.element_by_name(a).py()?, self.0.element_by_name(b).py()?)
            .py()?;
        Ok(self.0.element_name(g).to_string())
    }

    fn inverse(&self, a: &str) -> PyResult<String> {
        let g = self.0.inv(self.0.element_by_name(a).py()?).py()?;
        Ok(self.0.element_name(g).to_string())
    }

    fn conjugacy_class(&self, a: &str) -> PyResult<Vec<String>> {
        let class = self.0.conjugacy_class(self.0.element_by_name(a).py()?).py()?;
        Ok(class.into_iter().map(|g| self.0.element_name(g).to_string()).collect())
    }

    fn irreps(&self) -> Vec<String> {
        self.0.irreps().iter().map(|r| r.label.to_string()).collect()
    }

    fn character(&self, irrep: &str, a: &str) -> PyResult<(f64, f64)> {
        let label: IrrepLabel = irrep.parse().py()?;
        let chi = self.0.character(label, self.0.element_by_name(a).py()?).py()?;
        Ok((chi.re, chi.im))
    }

    fn __repr__(&self) -> String {
        format!("Group({:?})", self.0.name())
    }
}

#[pyclass(name = "Lattice", frozen)]
struct Lattice(CoreLattice);

#[pymethods]
impl Lattice {
    #[new]
    #[pyo3(signature = (n, m, boundary = "open"))]
    fn new(n: usize, m: usize, boundary: &str) -> PyResult<Self> {
        let b: Boundary = boundary.parse().py()?;
        CoreLattice::new(n, m, b).py().map(Self)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.n_rows(), self.0.n_cols())
    }

    #[getter]
    fn boundary(&self) -> String {
        self.0.boundary().to_string()
    }

    fn vertices(&self) -> Vec<String> {
        (0..self.0.num_vertices()).map(|v| self.0.vertex_label(v)).collect()
    }

    fn edges(&self) -> Vec<String> {
        (0..self.0.num_edges()).map(|e| self.0.edge_label(e)).collect()
    }

    fn faces(&self) -> Vec<String> {
        (0..self.0.num_faces()).map(|f| self.0.face_label(f)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Lattice({}, {}, {:?})",
            self.0.n_rows(),
            self.0.n_cols(),
            self.0.boundary().to_string()
        )
    }
}

/// Stateful quantum double simulation on one lattice.
#[pyclass(name = "Session")]
struct Session(CoreSession);

impl Session {
    fn lattice(&self) -> &CoreLattice {
        self.0.qd.lattice()
    }

    fn group(&self) -> &FiniteGroup {
        self.0.qd.group()
    }

    fn vertex_path(&self, path: Vec<String>) -> PyResult<Vec<usize>> {
        path.iter().map(|s| vertex_ref(self.lattice(), s).py()).collect()
    }
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (group, n, m, boundary = "open", mode = "branch", seed = None))]
    fn new(group: &str, n: usize, m: usize, boundary: &str, mode: &str, seed: Option<u64>) -> PyResult<Self> {
        let lattice = CoreLattice::new(n, m, boundary.parse().py()?).py()?;
        let qd = QuantumDouble::new(FiniteGroup::by_name(group).py()?, lattice).py()?;
        let mode = match (mode.parse::<ModeKind>().py()?, seed) {
            (ModeKind::Branch, _) => Mode::branch(),
            (ModeKind::Sample, Some(s)) => Mode::sample(s),
            (ModeKind::Sample, None) => return Err(PyValueError::new_err("sample mode needs a seed")),
        };
        Ok(Self(CoreSession::new(qd, mode)))
    }

    #[getter]
    fn support(&self) -> usize {
        self.0.state.len()
    }

    #[getter]
    fn norm(&self) -> f64 {
        self.0.state.norm_sqr().sqrt()
    }

    #[pyo3(signature = (policy = "paper-correction"))]
    fn prepare_ground_state(&mut self, policy: &str) -> PyResult<()> {
        let policy: CorrectionPolicy = policy.parse().py()?;
        self.0.prepare_ground_state(policy).py()
    }

    fn gauge_transform(&mut self, vertex: &str, g: &str) -> PyResult<()> {
        let v = vertex_ref(self.lattice(), vertex).py()?;
        let g = self.group().element_by_name(g).py()?;
        self.0.gauge_transform(v, g).py()
    }

    /// Returns the outcome index and its probability.
    fn measure_vertex(&mut self, vertex: &str) -> PyResult<(usize, f64)> {
        let v = vertex_ref(self.lattice(), vertex).py()?;
        let m = self.0.measure_vertex(v).py()?;
        Ok((m.outcome, m.probability))
    }

    fn magnetic_pair(&mut self, class: &str, f1: &str, f2: &str) -> PyResult<(usize, f64)> {
        let rep = self.group().element_by_name(class).py()?;
        let (a, b) = (face_ref(self.lattice(), f1).py()?, face_ref(self.lattice(), f2).py()?);
        let m = self.0.create_magnetic_vacuum_pair(rep, a, b).py()?;
        Ok((m.outcome, m.probability))
    }

    fn transport_magnetic(&mut self, from: &str, to: &str) -> PyResult<()> {
        let (a, b) = (face_ref(self.lattice(), from).py()?, face_ref(self.lattice(), to).py()?);
        self.0.transport_magnetic(a, b).py()
    }

    fn fuse_magnetic(&mut self, f1: &str, f2: &str, class: &str) -> PyResult<BTreeMap<String, f64>> {
        let rep = self.group().element_by_name(class).py()?;
        let (a, b) = (face_ref(self.lattice(), f1).py()?, face_ref(self.lattice(), f2).py()?);
        Ok(self.0.fuse_magnetic(a, b, rep).py()?.channels)
    }

    /// Returns the survival probability of the pair creation.
    fn electric_pair(&mut self, irrep: &str, path: Vec<String>) -> PyResult<f64> {
        let label: IrrepLabel = irrep.parse().py()?;
        let path = self.vertex_path(path)?;
        self.0.create_electric_vacuum_pair(label, &path).py()
    }

    fn braid_electric(&mut self, irrep: &str, path: Vec<String>) -> PyResult<f64> {
        let label: IrrepLabel = irrep.parse().py()?;
        let path = self.vertex_path(path)?;
        self.0.braid_electric(label, &path).py()
    }

    fn fuse_electric(&mut self, path: Vec<String>) -> PyResult<BTreeMap<String, f64>> {
        let path = self.vertex_path(path)?;
        Ok(self.0.fuse_electric(&path).py()?.channels)
    }

    /// Returns `(p_plus, p_minus)` for a flux `h` threaded around `vertex`.
    fn interfere(&self, vertex: &str, h: &str) -> PyResult<(f64, f64)> {
        let v = vertex_ref(self.lattice(), vertex).py()?;
        let h = self.group().element_by_name(h).py()?;
        let r = self.0.single_face_interference(v, h).py()?;
        Ok((r.p_plus, r.p_minus))
    }

    fn stabilizers(&self) -> PyResult<BTreeMap<String, f64>> {
        let table = self.0.qd.stabilizer_table(&self.0.state).py()?;
        Ok(table.vertices.into_iter().chain(table.faces).collect())
    }

    fn oracle_overlap(&self) -> PyResult<f64> {
        let oracle = self.0.qd.ground_state_oracle().py()?;
        self.0.state.overlap(&oracle).py()
    }
}

fn options(
    group: Option<String>,
    lattice: Option<(usize, usize)>,
    boundary: Option<&str>,
    mode: &str,
    seed: Option<u64>,
    policy: &str,
) -> PyResult<RunOptions> {
    Ok(RunOptions {
        group,
        lattice,
        boundary: boundary.map(|b| b.parse()).transpose().py()?,
        mode: mode.parse().py()?,
        seed,
        policy: policy.parse().py()?,
        ..RunOptions::default()
    })
}

/// Runs a named experiment and returns the result document as JSON.
#[pyfunction]
#[pyo3(signature = (
    name, group = None, lattice = None, boundary = None, mode = "branch", seed = None,
    policy = "paper-correction", h = None, couplings = None, irrep = None, class_ = None, jobs = None
))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    name: &str,
    group: Option<String>,
    lattice: Option<(usize, usize)>,
    boundary: Option<&str>,
    mode: &str,
    seed: Option<u64>,
    policy: &str,
    h: Option<Vec<String>>,
    couplings: Option<Vec<f64>>,
    irrep: Option<String>,
    class_: Option<String>,
    jobs: Option<usize>,
) -> PyResult<String> {
    let opts = RunOptions {
        h: h.unwrap_or_default(),
        couplings: couplings.unwrap_or_default(),
        irrep,
        class: class_,
        jobs,
        ..options(group, lattice, boundary, mode, seed, policy)?
    };
    let doc = py.detach(|| experiments::run_experiment(name, &opts)).py()?;
    Ok(doc.to_json())
}

/// Runs a protocol script given as text and returns the result document.
#[pyfunction]
fn run_script(py: Python<'_>, text: &str) -> PyResult<String> {
    let script = ProtocolScript::parse(text).py()?;
    let doc = py
        .detach(|| experiments::run_script(&script, &RunOptions::default()))
        .py()?;
    Ok(doc.to_json())
}

#[pyfunction]
fn list_experiments() -> Vec<&'static str> {
    experiments::EXPERIMENTS.to_vec()
}

#[pymodule]
fn qdsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Group>()?;
    m.add_class::<Lattice>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_script, m)?)?;
    m.add_function(wrap_pyfunction!(list_experiments, m)?)?;
    Ok(())
}
