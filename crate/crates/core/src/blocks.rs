//! Building blocks `A(n, (a+1)n)`: continuous `M_{(a+1)n}`-valued functions on
//! `[0, 1]` with `f(0) = diag(c, …, c, 0_n)` (`a` copies of `c`) and
//! `f(1) = diag(c, …, c)` (`a + 1` copies) for a single `c ∈ M_n`.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkernel::{herm_spectrum, CMatrix, GridFunction, KernelError, C64};

/// Tolerance on the cone relation `g(0) = a/(a+1) · g(1)` accepted by
/// [`psi_embed`].
pub const CONE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockError {
    #[error("invalid building block parameters n = {n}, a = {a} (need n ≥ 1, a ≥ 1)")]
    InvalidBlock { n: usize, a: usize },
    #[error("dimension mismatch: {what} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("function is not in C[0,1]_a: |g(0) - a/(a+1) g(1)| = {residual:e}")]
    NotInCone { residual: f64 },
    #[error("elements live on different blocks or grids")]
    Incompatible,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// The parameters `(n, a)` of `A(n, n')` with `n' = (a + 1) n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BuildingBlock {
    n: usize,
    a: usize,
}

impl BuildingBlock {
    pub fn new(n: usize, a: usize) -> Result<Self, BlockError> {
        if n == 0 || a == 0 {
            return Err(BlockError::InvalidBlock { n, a });
        }
        Ok(BuildingBlock { n, a })
    }

    /// Size of the fibre at infinity.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Multiplicity of `c` at `t = 0`.
    pub fn a(&self) -> usize {
        self.a
    }

    /// Matrix size of the generic fibre, `(a + 1) n`.
    pub fn n_prime(&self) -> usize {
        (self.a + 1) * self.n
    }

    /// `diag(c, …, c, 0_n)`.
    pub fn boundary_at_zero(&self, c: &CMatrix) -> CMatrix {
        let mut m = CMatrix::zeros(self.n_prime());
        for k in 0..self.a {
            m.set_block(k * self.n, c);
        }
        m
    }

    /// `diag(c, …, c)` with `a + 1` copies.
    pub fn boundary_at_one(&self, c: &CMatrix) -> CMatrix {
        let mut m = CMatrix::zeros(self.n_prime());
        for k in 0..=self.a {
            m.set_block(k * self.n, c);
        }
        m
    }

    /// Norm weight of `tr ⊗ δ_t`: `a/(a+1)` at the endpoint 0, else 1.
    pub fn point_trace_norm(&self, t: f64) -> f64 {
        if t == 0.0 {
            self.a as f64 / (self.a + 1) as f64
        } else {
            1.0
        }
    }
}

impl fmt::Display for BuildingBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A({},{})", self.n, self.n_prime())
    }
}

/// Where to evaluate an element: a point of `[0, 1]` or the fibre at
/// infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    At(f64),
    Infinity,
}

/// A sampled element of a building block together with its boundary datum.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockElement {
    block: BuildingBlock,
    f: GridFunction<CMatrix>,
    c: CMatrix,
}

impl BlockElement {
    /// Element whose endpoint samples are synthesized from `c`; `interior`
    /// supplies the samples at `0 < t < 1`.
    pub fn new(
        block: BuildingBlock,
        c: CMatrix,
        grid: usize,
        interior: impl Fn(f64) -> CMatrix + Sync + Send,
    ) -> Result<Self, BlockError> {
        check_dim("boundary datum", block.n, c.dim())?;
        let start = block.boundary_at_zero(&c);
        let end = block.boundary_at_one(&c);
        let f = GridFunction::tabulate(grid, |t| {
            if t == 0.0 {
                start.clone()
            } else if t == 1.0 {
                end.clone()
            } else {
                interior(t)
            }
        });
        let found = f.samples()[1..grid]
            .iter()
            .map(|m| m.dim())
            .find(|&d| d != block.n_prime());
        if let Some(found) = found {
            return Err(BlockError::DimensionMismatch {
                what: "interior sample",
                expected: block.n_prime(),
                found,
            });
        }
        Ok(BlockElement { block, f, c })
    }

    /// Element from raw samples and a boundary datum. Only dimensions are
    /// checked; use [`validate_element`] for the boundary conditions.
    pub fn from_parts(
        block: BuildingBlock,
        f: GridFunction<CMatrix>,
        c: CMatrix,
    ) -> Result<Self, BlockError> {
        check_dim("boundary datum", block.n, c.dim())?;
        for m in f.samples() {
            check_dim("sample", block.n_prime(), m.dim())?;
        }
        Ok(BlockElement { block, f, c })
    }

    pub fn zero(block: BuildingBlock, grid: usize) -> Self {
        let np = block.n_prime();
        BlockElement {
            block,
            f: GridFunction::tabulate(grid, |_| CMatrix::zeros(np)),
            c: CMatrix::zeros(block.n),
        }
    }

    /// A smooth element with random complex entries:
    /// `f(t) = (1-t) f(0) + t f(1) + t(1-t)(R_0 + t R_1)`.
    pub fn random(block: BuildingBlock, grid: usize, rng: &mut impl Rng) -> Self {
        let c = random_matrix(block.n, rng);
        let r0 = random_matrix(block.n_prime(), rng);
        let r1 = random_matrix(block.n_prime(), rng);
        Self::interpolating(block, c, grid, r0, r1)
    }

    /// Like [`BlockElement::random`] but self-adjoint.
    pub fn random_self_adjoint(block: BuildingBlock, grid: usize, rng: &mut impl Rng) -> Self {
        let c = random_matrix(block.n, rng).hermitian_part();
        let r0 = random_matrix(block.n_prime(), rng).hermitian_part();
        let r1 = random_matrix(block.n_prime(), rng).hermitian_part();
        Self::interpolating(block, c, grid, r0, r1)
    }

    fn interpolating(
        block: BuildingBlock,
        c: CMatrix,
        grid: usize,
        r0: CMatrix,
        r1: CMatrix,
    ) -> Self {
        let start = block.boundary_at_zero(&c);
        let end = block.boundary_at_one(&c);
        Self::new(block, c, grid, |t| {
            let bump = &r0 + &r1.scale_real(t);
            &(&start.scale_real(1.0 - t) + &end.scale_real(t)) + &bump.scale_real(t * (1.0 - t))
        })
        .expect("dimensions are consistent by construction")
    }

    pub fn block(&self) -> BuildingBlock {
        self.block
    }

    pub fn samples(&self) -> &GridFunction<CMatrix> {
        &self.f
    }

    pub fn boundary_datum(&self) -> &CMatrix {
        &self.c
    }

    pub fn grid_size(&self) -> usize {
        self.f.grid_size()
    }

    pub fn eval(&self, t: f64) -> CMatrix {
        self.f.eval(t)
    }

    pub fn adjoint(&self) -> Self {
        BlockElement {
            block: self.block,
            f: self.f.adjoint(),
            c: self.c.adjoint(),
        }
    }

    /// Pointwise product; the boundary datum multiplies accordingly.
    pub fn product(&self, rhs: &BlockElement) -> Result<Self, BlockError> {
        self.combine(rhs, |a, b| a.matmul(b))
    }

    pub fn sum(&self, rhs: &BlockElement) -> Result<Self, BlockError> {
        self.combine(rhs, |a, b| a + b)
    }

    pub fn difference(&self, rhs: &BlockElement) -> Result<Self, BlockError> {
        self.combine(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> Self {
        BlockElement {
            block: self.block,
            f: self.f.map(|m| m.scale(s)),
            c: self.c.scale(s),
        }
    }

    fn combine(
        &self,
        rhs: &BlockElement,
        op: impl Fn(&CMatrix, &CMatrix) -> CMatrix + Sync + Send,
    ) -> Result<Self, BlockError> {
        if self.block != rhs.block || self.grid_size() != rhs.grid_size() {
            return Err(BlockError::Incompatible);
        }
        Ok(BlockElement {
            block: self.block,
            f: self.f.zip_map(&rhs.f, &op)?,
            c: op(&self.c, &rhs.c),
        })
    }

    /// Largest `‖f(t) - f(t)*‖` over the grid.
    pub fn self_adjoint_defect(&self) -> f64 {
        let c_defect = (&self.c - &self.c.adjoint()).op_norm();
        self.f
            .samples()
            .par_iter()
            .map(|m| (m - &m.adjoint()).op_norm())
            .reduce(|| c_defect, f64::max)
    }
}

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<(), BlockError> {
    if expected != found {
        return Err(BlockError::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

pub(crate) fn random_matrix(n: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Largest endpoint residual `max(‖f(0) - diag(c×a, 0_n)‖, ‖f(1) - diag(c×(a+1))‖)`.
pub fn validate_element(e: &BlockElement) -> f64 {
    let b = e.block;
    let r0 = (e.f.first() - &b.boundary_at_zero(&e.c)).op_norm();
    let r1 = (e.f.last() - &b.boundary_at_one(&e.c)).op_norm();
    r0.max(r1)
}

/// Whether the endpoint residual is at most `tol`.
pub fn is_valid(e: &BlockElement, tol: f64) -> bool {
    validate_element(e) <= tol
}

/// `h(t) = diag(1_n, …, 1_n, t·1_n)` with `a` identity blocks; `c = 1_n`.
pub fn canonical_h(block: BuildingBlock, grid: usize) -> BlockElement {
    BlockElement::new(block, CMatrix::identity(block.n), grid, move |t| {
        canonical_h_at(block, t)
    })
    .expect("canonical element has consistent dimensions")
}

/// `h(t)` at an arbitrary point.
pub fn canonical_h_at(block: BuildingBlock, t: f64) -> CMatrix {
    let split = block.a * block.n;
    let diag: Vec<f64> = (0..block.n_prime())
        .map(|k| if k < split { 1.0 } else { t })
        .collect();
    CMatrix::from_real_diag(&diag)
}

/// Point evaluation `ev_s`, or `ev_∞` (the boundary datum `c`).
pub fn evaluate(e: &BlockElement, at: Point) -> CMatrix {
    match at {
        Point::At(s) => e.eval(s),
        Point::Infinity => e.c.clone(),
    }
}

/// The right inverse of `f ↦ (t ↦ tr f(t))` on `C[0,1]_a`:
/// `ψ(g)(t) = (a+1)/(a+t) · diag(g(t) 1_n, …, g(t) 1_n, t g(t) 1_n)`.
pub fn psi_embed(block: BuildingBlock, g: &GridFunction<f64>) -> Result<BlockElement, BlockError> {
    let a = block.a as f64;
    let residual = (g.first() - a / (a + 1.0) * g.last()).abs();
    if residual > CONE_TOLERANCE {
        return Err(BlockError::NotInCone { residual });
    }
    let np = block.n_prime();
    let split = block.a * block.n;
    let c = CMatrix::scalar(block.n, C64::new(*g.last(), 0.0));
    let samples = g.samples().to_vec();
    let grid = g.grid_size();
    BlockElement::new(block, c, grid, move |t| {
        let j = (t * grid as f64).round() as usize;
        let gt = samples[j];
        let s = (a + 1.0) / (a + t) * gt;
        let diag: Vec<f64> = (0..np).map(|k| if k < split { s } else { t * s }).collect();
        CMatrix::from_real_diag(&diag)
    })
}

/// Why [`certify_no_projection`] rejected its input.
#[derive(Clone, Debug, PartialEq)]
pub enum Rejection {
    /// `max(‖e² - e‖, ‖e - e*‖)` over the grid exceeds the tolerance.
    Defect { defect: f64 },
    /// An eigenvalue lies within the tolerance of the cut at 1/2.
    Tie { at: Point },
    /// The number of eigenvalues above 1/2 is not constant across the grid,
    /// or does not match the endpoint multiplicities `a·r_∞` and `(a+1)·r_∞`.
    RankJump {
        r_start: usize,
        r_end: usize,
        r_infinity: usize,
        jump_at: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProjectionVerdict {
    NotAlmostProjection(Rejection),
    /// Certified (on the grid) upper bound for the sup norm of the input.
    NearZero {
        bound: f64,
    },
}

impl ProjectionVerdict {
    pub fn is_near_zero(&self) -> bool {
        matches!(self, ProjectionVerdict::NearZero { .. })
    }
}

/// Finite-stage projectionlessness check.
///
/// An almost-projection has a spectral cut at 1/2 whose rank `r(t)` is
/// locally constant; at the endpoints `r(0) = a·r_∞` and `r(1) = (a+1)·r_∞`,
/// so a constant rank forces `r_∞ = 0` and the element is close to zero.
pub fn certify_no_projection(e: &BlockElement, eps: f64) -> ProjectionVerdict {
    let samples = e.f.samples();
    let defects: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|m| {
            let skew = (m - &m.adjoint()).op_norm();
            let idem = (&m.matmul(m) - m).op_norm();
            (skew, idem)
        })
        .collect();
    let skew = defects.iter().fold(0.0f64, |acc, d| acc.max(d.0));
    let idem = defects.iter().fold(0.0f64, |acc, d| acc.max(d.1));
    let defect = skew.max(idem);
    if defect > eps {
        return ProjectionVerdict::NotAlmostProjection(Rejection::Defect { defect });
    }

    let spectra: Vec<Vec<f64>> = samples.par_iter().map(|m| hermitian_spectrum(m)).collect();
    let cut = |spec: &[f64]| -> Result<usize, ()> {
        if spec.iter().any(|&l| (l - 0.5).abs() <= eps) {
            return Err(());
        }
        Ok(spec.iter().filter(|&&l| l > 0.5).count())
    };
    let mut ranks = Vec::with_capacity(spectra.len());
    for (j, spec) in spectra.iter().enumerate() {
        match cut(spec) {
            Ok(r) => ranks.push(r),
            Err(()) => {
                return ProjectionVerdict::NotAlmostProjection(Rejection::Tie {
                    at: Point::At(e.f.point(j)),
                })
            }
        }
    }
    let r_infinity = match cut(&hermitian_spectrum(&e.c)) {
        Ok(r) => r,
        Err(()) => {
            return ProjectionVerdict::NotAlmostProjection(Rejection::Tie {
                at: Point::Infinity,
            })
        }
    };

    let a = e.block.a;
    let (r_start, r_end) = (ranks[0], *ranks.last().unwrap());
    let jump_at = ranks
        .windows(2)
        .position(|w| w[0] != w[1])
        .map(|j| e.f.point(j + 1));
    if jump_at.is_some() || r_start != a * r_infinity || r_end != (a + 1) * r_infinity {
        return ProjectionVerdict::NotAlmostProjection(Rejection::RankJump {
            r_start,
            r_end,
            r_infinity,
            jump_at,
        });
    }

    let radius = spectra
        .iter()
        .flat_map(|s| s.iter())
        .fold(0.0f64, |acc, l| acc.max(l.abs()));
    ProjectionVerdict::NearZero {
        bound: radius + skew / 2.0,
    }
}

fn hermitian_spectrum(m: &CMatrix) -> Vec<f64> {
    herm_spectrum(&m.hermitian_part(), f64::INFINITY).expect("hermitian part is Hermitian")
}
