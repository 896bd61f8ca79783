//! The inductive system `A_1 → A_2 → ⋯` obtained by iterating the successor
//! construction, with composed maps and the finite-stage experiments.

mod central;
mod serial;

pub use central::{mu_embed, sigma_stage, SigmaMetrics, SimpleTensor, TensorTruncation};
pub use serial::{tower_from_json, tower_to_json, SERIAL_BYTE_CAP};

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use thiserror::Error;

use crate::blocks::{canonical_h_at, BlockElement, BlockError, BuildingBlock};
use crate::homs::{build_successor, compose_maps, eval_at, ConnectingMap, HomError};
use crate::numkernel::{herm_spectrum, CMatrix, KernelError};
use crate::traces::{oscillation_gap, OscillationGap, TraceError};

/// Largest admissible stage dimension `n'`.
pub const DEFAULT_DIM_CAP: usize = 6000;
/// Largest matrix on which dense spectral work is attempted.
pub const DENSE_DIM_CAP: usize = 2048;
/// Slack added to the modulus bound in [`trace_unique_rate`].
pub const RATE_SLACK: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TowerError {
    #[error("dimension {dim} exceeds the resource cap {cap}")]
    ResourceLimit { dim: usize, cap: usize },
    #[error("serialized payload of {bytes} bytes exceeds the cap {cap}")]
    PayloadLimit { bytes: usize, cap: usize },
    #[error("stages ({i}, {j}) out of range for a tower of depth {depth}")]
    StageOutOfRange { i: usize, j: usize, depth: usize },
    #[error("grid size {0} is not a power of two ≥ 2")]
    InvalidGrid(usize),
    #[error("depth must be at least 1")]
    InvalidDepth,
    #[error("no unital embedding of M_{k} into M_{q}")]
    NoUnitalEmbedding { k: usize, q: usize },
    #[error("tensor factor {m} out of range (truncation has {count} factors)")]
    FactorOutOfRange { m: usize, count: usize },
    #[error("malformed tower document: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Stages are numbered from 1; `steps[k]` maps stage `k + 1` to stage `k + 2`.
pub struct Tower {
    grid: usize,
    stages: Vec<BuildingBlock>,
    steps: Vec<ConnectingMap>,
    cache: Mutex<HashMap<(usize, usize), ConnectingMap>>,
}

impl fmt::Debug for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tower")
            .field("grid", &self.grid)
            .field("stages", &self.stages)
            .finish_non_exhaustive()
    }
}

impl Tower {
    pub(crate) fn from_parts(
        grid: usize,
        stages: Vec<BuildingBlock>,
        steps: Vec<ConnectingMap>,
    ) -> Self {
        Tower {
            grid,
            stages,
            steps,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn seed(&self) -> BuildingBlock {
        self.stages[0]
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    pub fn stages(&self) -> &[BuildingBlock] {
        &self.stages
    }

    /// Stage `i` (1-based).
    pub fn stage(&self, i: usize) -> Result<BuildingBlock, TowerError> {
        self.check_range(i, i)?;
        Ok(self.stages[i - 1])
    }

    pub fn steps(&self) -> &[ConnectingMap] {
        &self.steps
    }

    fn check_range(&self, i: usize, j: usize) -> Result<(), TowerError> {
        if i == 0 || i > j || j > self.depth() {
            return Err(TowerError::StageOutOfRange {
                i,
                j,
                depth: self.depth(),
            });
        }
        Ok(())
    }

    /// `φ_{ij}`, composed from the steps and cached; the identity for `i = j`.
    pub fn stage_map(&self, i: usize, j: usize) -> Result<ConnectingMap, TowerError> {
        self.check_range(i, j)?;
        if i == j {
            return Ok(ConnectingMap::identity(self.stages[i - 1]));
        }
        if j == i + 1 {
            return Ok(self.steps[i - 1].clone());
        }
        if let Some(m) = self.cache.lock().expect("cache lock").get(&(i, j)) {
            return Ok(m.clone());
        }
        let inner = self.stage_map(i, j - 1)?;
        let map = compose_maps(&self.steps[j - 2], &inner)?;
        self.cache
            .lock()
            .expect("cache lock")
            .insert((i, j), map.clone());
        Ok(map)
    }

    /// Grid size for stage-`i` elements whose image under `φ_{ij}` lands on the
    /// tower grid.
    pub fn element_grid(&self, i: usize, j: usize) -> usize {
        self.grid << (j - i)
    }
}

/// Iterates the successor construction `depth - 1` times from `seed`.
pub fn build_tower(seed: BuildingBlock, depth: usize, grid: usize) -> Result<Tower, TowerError> {
    build_tower_with_cap(seed, depth, grid, DEFAULT_DIM_CAP)
}

pub fn build_tower_with_cap(
    seed: BuildingBlock,
    depth: usize,
    grid: usize,
    cap: usize,
) -> Result<Tower, TowerError> {
    if depth == 0 {
        return Err(TowerError::InvalidDepth);
    }
    if grid < 2 || !grid.is_power_of_two() {
        return Err(TowerError::InvalidGrid(grid));
    }
    let mut stages = vec![seed];
    let mut steps = Vec::new();
    check_cap(seed, cap)?;
    for _ in 1..depth {
        let prev = *stages.last().unwrap();
        check_cap(crate::homs::successor_block(prev), cap)?;
        let (next, map) = build_successor(prev)?;
        stages.push(next);
        steps.push(map);
    }
    Ok(Tower::from_parts(grid, stages, steps))
}

fn check_cap(b: BuildingBlock, cap: usize) -> Result<(), TowerError> {
    if b.n_prime() > cap {
        return Err(TowerError::ResourceLimit {
            dim: b.n_prime(),
            cap,
        });
    }
    Ok(())
}

/// Result of [`eig_density`].
#[derive(Clone, Debug, PartialEq)]
pub struct EigDensity {
    /// Smallest `δ` with every point of `[0, 1]` within `δ` of an eigenvalue.
    pub delta: f64,
    /// Distinct eigenvalues, ascending.
    pub spectrum: Vec<f64>,
}

/// Eigenvalues closer than this are reported as one distinct value.
pub const DISTINCT_TOLERANCE: f64 = 1e-9;

/// Spectrum of `φ_{1j}(h)(x)` and its density in `[0, 1]`.
pub fn eig_density(tower: &Tower, j: usize, x: f64) -> Result<EigDensity, TowerError> {
    if j < 2 {
        return Err(TowerError::StageOutOfRange {
            i: 1,
            j,
            depth: tower.depth(),
        });
    }
    let map = tower.stage_map(1, j)?;
    let dim = map.target().n_prime();
    if dim > DENSE_DIM_CAP {
        return Err(TowerError::ResourceLimit {
            dim,
            cap: DENSE_DIM_CAP,
        });
    }
    let seed = tower.seed();
    let value = map.eval_with(&|y| canonical_h_at(seed, y), x);
    let eig = herm_spectrum(&value, 1e-9)?;
    Ok(density(&eig))
}

/// Distinct values and covering radius of a sorted list.
pub fn density(sorted: &[f64]) -> EigDensity {
    let mut spectrum: Vec<f64> = Vec::new();
    for &v in sorted {
        match spectrum.last() {
            Some(&last) if v - last <= DISTINCT_TOLERANCE => {}
            _ => spectrum.push(v),
        }
    }
    let delta = match (spectrum.first(), spectrum.last()) {
        (Some(&lo), Some(&hi)) => spectrum
            .windows(2)
            .map(|w| (w[1] - w[0]) / 2.0)
            .fold(lo.max(1.0 - hi).max(0.0), f64::max),
        _ => 1.0,
    };
    EigDensity { delta, spectrum }
}

/// Result of [`trace_unique_rate`].
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRate {
    pub gap: OscillationGap,
    /// `gap ≤ modulus + RATE_SLACK`.
    pub within_bound: bool,
}

/// Oscillation of the point traces of `φ_{ij}(f)` against the modulus of
/// continuity of `tr f` at `2^{-(j-i)}`.
pub fn trace_unique_rate(
    tower: &Tower,
    i: usize,
    f: &BlockElement,
    j: usize,
) -> Result<TraceRate, TowerError> {
    let map = tower.stage_map(i, j)?;
    let gap = oscillation_gap(&map, f)?;
    let within_bound = gap.gap <= gap.modulus + RATE_SLACK;
    Ok(TraceRate { gap, within_bound })
}

/// `ev_∞(φ_{ij}(f))`, built stage by stage from
/// `ev_∞(φ(g)) = diag(g(1/2), ev_∞(g) × a)` so that no matrix of the full
/// target size is formed.
pub fn boundary_datum_image(
    tower: &Tower,
    i: usize,
    j: usize,
    f: &BlockElement,
) -> Result<CMatrix, TowerError> {
    tower.check_range(i, j)?;
    let mut d = f.boundary_datum().clone();
    for k in i..j {
        let mid = eval_at(&tower.stage_map(i, k)?, f, 0.5)?;
        let a = tower.stages[k - 1].a();
        let mut blocks = vec![mid];
        blocks.extend(std::iter::repeat(d).take(a));
        d = CMatrix::direct_sum(&blocks);
    }
    Ok(d)
}
