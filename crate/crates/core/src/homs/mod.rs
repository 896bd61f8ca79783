//! Connecting *-homomorphisms `φ(f) = u · diag(f∘ξ_1, …, f∘ξ_m) · u*` between
//! building blocks.

mod branch;
mod map;
mod path;

pub use branch::{
    covers_unit_interval, max_oscillation, BranchMap, Dyadic, Interval, MAX_EXPONENT,
};
pub use map::{
    adjoint_defect, apply_map, approx_unit_defect, build_successor, compose_maps, eval_at,
    hom_defect, map_metrics, pair_defects, simplicity_witness, successor_block, successor_branches,
    successor_layouts, ConnectingMap, MapMetrics, PairDefects, UnitaryPath, Witness,
    WITNESS_DEPTH_LIMIT,
};
pub use path::{
    match_permutation, permutation_matrix, permutation_of, unitary_path, PermutationPath, SlotKind,
    SlotLayout, UNITARY_TOLERANCE,
};

use thiserror::Error;

use crate::blocks::{BlockError, BuildingBlock};
use crate::numkernel::KernelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomError {
    #[error("slot layouts do not have the same multiset of slots")]
    LayoutMismatch,
    #[error("matrix is not a permutation matrix")]
    NotPermutation,
    #[error("matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("element lives in {found}, map expects {expected}")]
    SourceMismatch {
        expected: BuildingBlock,
        found: BuildingBlock,
    },
    #[error("grid of size {grid} cannot be pushed through a depth-{depth} map (need a multiple of 2^{depth})")]
    GridTooCoarse { grid: usize, depth: u32 },
    #[error(
        "maps do not chain: inner target {inner_target} differs from outer source {outer_source}"
    )]
    ChainMismatch {
        inner_target: BuildingBlock,
        outer_source: BuildingBlock,
    },
    #[error("element is zero")]
    ZeroElement,
    #[error("no witness up to depth {max_depth}")]
    NotFound { max_depth: u32 },
    #[error("inconsistent connecting map: {0}")]
    InvalidMap(String),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}
