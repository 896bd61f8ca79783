//! Python bindings: building blocks, elements, towers, connecting maps and
//! traces. Matrices cross the boundary as lists of rows of `complex`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use razak_core::blocks::{self, BlockElement, BuildingBlock, ProjectionVerdict};
use razak_core::homs::{self, ConnectingMap, Interval, WITNESS_DEPTH_LIMIT};
use razak_core::numkernel::{CMatrix, GridFunction, C64};
use razak_core::tower::{self, Tower, TowerError};
use razak_core::traces::{self, Trace};

create_exception!(razak, ResourceLimitError, PyRuntimeError);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn tower_err(e: TowerError) -> PyErr {
    match e {
        TowerError::ResourceLimit { .. } | TowerError::PayloadLimit { .. } => {
            ResourceLimitError::new_err(e.to_string())
        }
        e => value_err(e),
    }
}

fn rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.dim()).map(|i| m.row(i).to_vec()).collect()
}

fn check_grid(grid: usize) -> PyResult<()> {
    if grid == 0 {
        return Err(PyValueError::new_err("grid must be positive"));
    }
    Ok(())
}

fn elements(samples: &[PyRef<'_, PyBlockElement>]) -> Vec<BlockElement> {
    samples.iter().map(|e| e.0.clone()).collect()
}

#[pyclass(name = "BuildingBlock", module = "razak", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PyBuildingBlock(pub BuildingBlock);

#[pymethods]
impl PyBuildingBlock {
    #[new]
    fn new(n: usize, a: usize) -> PyResult<Self> {
        BuildingBlock::new(n, a).map(Self).map_err(value_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn a(&self) -> usize {
        self.0.a()
    }

    #[getter]
    fn n_prime(&self) -> usize {
        self.0.n_prime()
    }

    fn point_trace_norm(&self, t: f64) -> f64 {
        self.0.point_trace_norm(t)
    }

    /// The block one step up the tower.
    fn successor(&self) -> Self {
        Self(homs::successor_block(self.0))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __hash__(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.0.hash(&mut h);
        h.finish()
    }

    fn __repr__(&self) -> String {
        format!("BuildingBlock(n={}, a={})", self.0.n(), self.0.a())
    }
}

#[pyclass(name = "BlockElement", module = "razak", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyBlockElement(pub BlockElement);

#[pymethods]
impl PyBlockElement {
    #[staticmethod]
    fn zero(block: PyRef<'_, PyBuildingBlock>, grid: usize) -> PyResult<Self> {
        check_grid(grid)?;
        Ok(Self(BlockElement::zero(block.0, grid)))
    }

    /// Smooth element with seeded random entries.
    #[staticmethod]
    #[pyo3(signature = (block, grid, seed = 0, self_adjoint = false))]
    fn random(
        block: PyRef<'_, PyBuildingBlock>,
        grid: usize,
        seed: u64,
        self_adjoint: bool,
    ) -> PyResult<Self> {
        check_grid(grid)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self(if self_adjoint {
            BlockElement::random_self_adjoint(block.0, grid, &mut rng)
        } else {
            BlockElement::random(block.0, grid, &mut rng)
        }))
    }

    #[staticmethod]
    fn canonical_h(block: PyRef<'_, PyBuildingBlock>, grid: usize) -> PyResult<Self> {
        check_grid(grid)?;
        Ok(Self(blocks::canonical_h(block.0, grid)))
    }

    /// Lift of a scalar function sampled on a uniform grid of `[0, 1]`.
    #[staticmethod]
    fn psi_embed(block: PyRef<'_, PyBuildingBlock>, values: Vec<f64>) -> PyResult<Self> {
        let g = GridFunction::from_samples(values).map_err(value_err)?;
        blocks::psi_embed(block.0, &g).map(Self).map_err(value_err)
    }

    #[getter]
    fn block(&self) -> PyBuildingBlock {
        PyBuildingBlock(self.0.block())
    }

    #[getter]
    fn grid_size(&self) -> usize {
        self.0.grid_size()
    }

    fn eval(&self, t: f64) -> PyResult<Vec<Vec<C64>>> {
        if !(0.0..=1.0).contains(&t) {
            return Err(PyValueError::new_err(format!("t = {t} outside [0, 1]")));
        }
        Ok(rows(&self.0.eval(t)))
    }

    fn boundary_datum(&self) -> Vec<Vec<C64>> {
        rows(self.0.boundary_datum())
    }

    fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    fn product(&self, other: PyRef<'_, Self>) -> PyResult<Self> {
        self.0.product(&other.0).map(Self).map_err(value_err)
    }

    fn sum(&self, other: PyRef<'_, Self>) -> PyResult<Self> {
        self.0.sum(&other.0).map(Self).map_err(value_err)
    }

    fn difference(&self, other: PyRef<'_, Self>) -> PyResult<Self> {
        self.0.difference(&other.0).map(Self).map_err(value_err)
    }

    fn scale(&self, s: C64) -> Self {
        Self(self.0.scale(s))
    }

    fn self_adjoint_defect(&self) -> f64 {
        self.0.self_adjoint_defect()
    }

    /// Largest mismatch between the endpoint values and the boundary datum.
    fn boundary_residual(&self) -> f64 {
        blocks::validate_element(&self.0)
    }

    /// `{"near_zero": True, "bound": b}` or `{"near_zero": False, "reason": ...}`.
    fn certify_no_projection<'py>(
        &self,
        py: Python<'py>,
        eps: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        match blocks::certify_no_projection(&self.0, eps) {
            ProjectionVerdict::NearZero { bound } => {
                d.set_item("near_zero", true)?;
                d.set_item("bound", bound)?;
            }
            ProjectionVerdict::NotAlmostProjection(r) => {
                d.set_item("near_zero", false)?;
                d.set_item("reason", format!("{r:?}"))?;
            }
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let b = self.0.block();
        format!(
            "BlockElement(block=BuildingBlock(n={}, a={}), grid={})",
            b.n(),
            b.a(),
            self.0.grid_size()
        )
    }
}

#[pyclass(name = "ConnectingMap", module = "razak", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyConnectingMap(pub ConnectingMap);

#[pymethods]
impl PyConnectingMap {
    #[getter]
    fn source(&self) -> PyBuildingBlock {
        PyBuildingBlock(self.0.source())
    }

    #[getter]
    fn target(&self) -> PyBuildingBlock {
        PyBuildingBlock(self.0.target())
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.0.depth()
    }

    /// Branch maps as strings such as `"x/2"` or `"(x+1)/4"`.
    fn branches(&self) -> Vec<String> {
        self.0.branches().iter().map(|b| b.to_string()).collect()
    }

    /// Largest branch slope, as an exact dyadic string.
    fn oscillation(&self) -> String {
        self.0.oscillation().to_string()
    }

    fn covers(&self) -> bool {
        self.0.covers()
    }

    fn apply(&self, e: PyRef<'_, PyBlockElement>) -> PyResult<PyBlockElement> {
        homs::apply_map(&self.0, &e.0)
            .map(PyBlockElement)
            .map_err(value_err)
    }

    fn eval_at(&self, e: PyRef<'_, PyBlockElement>, x: f64) -> PyResult<Vec<Vec<C64>>> {
        homs::eval_at(&self.0, &e.0, x)
            .map(|m| rows(&m))
            .map_err(value_err)
    }

    /// `self ∘ inner`.
    fn compose(&self, inner: PyRef<'_, Self>) -> PyResult<Self> {
        homs::compose_maps(&self.0, &inner.0)
            .map(Self)
            .map_err(value_err)
    }

    fn hom_defect(&self, samples: Vec<PyRef<'_, PyBlockElement>>) -> PyResult<f64> {
        homs::hom_defect(&self.0, &elements(&samples)).map_err(value_err)
    }

    fn adjoint_defect(&self, samples: Vec<PyRef<'_, PyBlockElement>>) -> PyResult<f64> {
        homs::adjoint_defect(&self.0, &elements(&samples)).map_err(value_err)
    }

    fn approx_unit_defect(
        &self,
        samples: Vec<PyRef<'_, PyBlockElement>>,
        n: usize,
    ) -> PyResult<f64> {
        if n == 0 {
            return Err(PyValueError::new_err("n must be positive"));
        }
        homs::approx_unit_defect(&self.0, &elements(&samples), n).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        let (s, t) = (self.0.source(), self.0.target());
        format!(
            "ConnectingMap(A({}, {}) -> A({}, {}), depth={})",
            s.n(),
            s.n_prime(),
            t.n(),
            t.n_prime(),
            self.0.depth()
        )
    }
}

#[pyclass(name = "Tower", module = "razak", frozen)]
pub struct PyTower(pub Tower);

#[pymethods]
impl PyTower {
    #[new]
    fn new(seed: PyRef<'_, PyBuildingBlock>, depth: usize, grid: usize) -> PyResult<Self> {
        tower::build_tower(seed.0, depth, grid)
            .map(Self)
            .map_err(tower_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        tower::tower_from_json(text).map(Self).map_err(tower_err)
    }

    fn to_json(&self) -> PyResult<String> {
        tower::tower_to_json(&self.0).map_err(tower_err)
    }

    #[getter]
    fn seed(&self) -> PyBuildingBlock {
        PyBuildingBlock(self.0.seed())
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }

    #[getter]
    fn grid_size(&self) -> usize {
        self.0.grid_size()
    }

    fn stages(&self) -> Vec<PyBuildingBlock> {
        self.0
            .stages()
            .iter()
            .copied()
            .map(PyBuildingBlock)
            .collect()
    }

    fn stage_map(&self, i: usize, j: usize) -> PyResult<PyConnectingMap> {
        self.0
            .stage_map(i, j)
            .map(PyConnectingMap)
            .map_err(tower_err)
    }

    /// Grid for elements of stage `i` that are pushed to stage `j`.
    fn element_grid(&self, i: usize, j: usize) -> PyResult<usize> {
        self.0.stage_map(i, j).map_err(tower_err)?;
        Ok(self.0.element_grid(i, j))
    }

    /// Spectrum of `φ_{1j}(h)(x)` and its covering radius in `[0, 1]`.
    fn eig_density<'py>(&self, py: Python<'py>, j: usize, x: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = tower::eig_density(&self.0, j, x).map_err(tower_err)?;
        let d = PyDict::new(py);
        d.set_item("delta", r.delta)?;
        d.set_item("spectrum", r.spectrum)?;
        Ok(d)
    }

    fn trace_rate<'py>(
        &self,
        py: Python<'py>,
        i: usize,
        f: PyRef<'_, PyBlockElement>,
        j: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = tower::trace_unique_rate(&self.0, i, &f.0, j).map_err(tower_err)?;
        let d = PyDict::new(py);
        d.set_item("gap", r.gap.gap)?;
        d.set_item("modulus", r.gap.modulus)?;
        d.set_item("spacing", r.gap.spacing.to_string())?;
        d.set_item("within_bound", r.within_bound)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let s = self.0.seed();
        format!(
            "Tower(seed=BuildingBlock(n={}, a={}), depth={}, grid={})",
            s.n(),
            s.a(),
            self.0.depth(),
            self.0.grid_size()
        )
    }
}

#[pyclass(name = "Trace", module = "razak", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyTrace(pub Trace);

#[pymethods]
impl PyTrace {
    /// Weighted sum of point traces, `atoms = [(t, weight), ...]`.
    #[new]
    fn new(block: PyRef<'_, PyBuildingBlock>, atoms: Vec<(f64, f64)>) -> PyResult<Self> {
        Trace::new(block.0, atoms).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn point(block: PyRef<'_, PyBuildingBlock>, t: f64) -> PyResult<Self> {
        Trace::point(block.0, t).map(Self).map_err(value_err)
    }

    #[getter]
    fn atoms(&self) -> Vec<(f64, f64)> {
        self.0.atoms().to_vec()
    }

    fn norm(&self) -> f64 {
        traces::trace_norm(&self.0)
    }

    fn __call__(&self, e: PyRef<'_, PyBlockElement>) -> PyResult<C64> {
        traces::eval_trace_complex(&self.0, &e.0).map_err(value_err)
    }

    fn pushforward(&self, map: PyRef<'_, PyConnectingMap>) -> PyResult<Self> {
        traces::pushforward_trace(&map.0, &self.0)
            .map(Self)
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Trace(atoms={:?})", self.0.atoms())
    }
}

/// Smallest depth at which a branch maps `[0, 1]` into the support interval
/// (open unless `closed`), with a lower bound for the image norm.
#[pyfunction]
#[pyo3(signature = (f, lo, hi, closed = false, max_depth = WITNESS_DEPTH_LIMIT))]
fn simplicity_witness<'py>(
    py: Python<'py>,
    f: PyRef<'_, PyBlockElement>,
    lo: f64,
    hi: f64,
    closed: bool,
    max_depth: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let support = if closed {
        Interval::closed(lo, hi)
    } else {
        Interval::open(lo, hi)
    };
    let w = homs::simplicity_witness(&f.0, support, max_depth).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("depth", w.depth)?;
    d.set_item("branch", w.branch.to_string())?;
    d.set_item("min_block_norm", w.min_block_norm)?;
    Ok(d)
}

#[pymodule]
pub fn razak(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBuildingBlock>()?;
    m.add_class::<PyBlockElement>()?;
    m.add_class::<PyConnectingMap>()?;
    m.add_class::<PyTower>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(simplicity_witness, m)?)?;
    m.add(
        "ResourceLimitError",
        m.py().get_type::<ResourceLimitError>(),
    )?;
    Ok(())
}
