use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::blocks::{canonical_h, BlockElement, BuildingBlock};
use crate::numkernel::{scalar_calculus, CMatrix, GridFunction};

use super::branch::{covers_unit_interval, max_oscillation, BranchMap, Dyadic, Interval};
use super::path::{match_permutation, PermutationPath, SlotKind, SlotLayout};
use super::HomError;

/// Deepest relative depth [`simplicity_witness`] will enumerate.
pub const WITNESS_DEPTH_LIMIT: u32 = 20;

/// How the unitary of a connecting map is represented.
#[derive(Clone, Debug)]
pub enum UnitaryPath {
    /// The identity map of a block.
    Identity,
    /// A single step with a permutation path.
    Step(Arc<PermutationPath>),
    /// `U(x) = u_outer(x) · ⊕_l u_inner(ξ^outer_l(x))`, synthesized on demand.
    Composite {
        outer: Arc<ConnectingMap>,
        inner: Arc<ConnectingMap>,
    },
}

/// A *-homomorphism `φ: A(source) → A(target)` in diagonal form.
#[derive(Clone, Debug)]
pub struct ConnectingMap {
    source: BuildingBlock,
    target: BuildingBlock,
    branches: Arc<[BranchMap]>,
    path: UnitaryPath,
    depth: u32,
}

impl ConnectingMap {
    pub fn identity(block: BuildingBlock) -> Self {
        ConnectingMap {
            source: block,
            target: block,
            branches: Arc::from(vec![BranchMap::IDENTITY]),
            path: UnitaryPath::Identity,
            depth: 0,
        }
    }

    /// A depth-one map assembled from its parts, as read back from storage.
    pub fn from_step(
        source: BuildingBlock,
        target: BuildingBlock,
        branches: Vec<BranchMap>,
        path: PermutationPath,
    ) -> Result<Self, HomError> {
        if branches.len() * source.n_prime() != target.n_prime() {
            return Err(HomError::InvalidMap(format!(
                "{} branches of size {} do not fill {}",
                branches.len(),
                source.n_prime(),
                target.n_prime()
            )));
        }
        if path.dim() != target.n_prime() {
            return Err(HomError::InvalidMap(format!(
                "unitary of dimension {} for target {}",
                path.dim(),
                target
            )));
        }
        if let Some(b) = branches.iter().find(|b| !b.is_well_formed() || b.d != 1) {
            return Err(HomError::InvalidMap(format!(
                "branch {b:?} is not a step branch"
            )));
        }
        Ok(ConnectingMap {
            source,
            target,
            branches: Arc::from(branches),
            path: UnitaryPath::Step(Arc::new(path)),
            depth: 1,
        })
    }

    pub fn source(&self) -> BuildingBlock {
        self.source
    }

    pub fn target(&self) -> BuildingBlock {
        self.target
    }

    pub fn branches(&self) -> &[BranchMap] {
        &self.branches
    }

    /// Number of branches.
    pub fn m(&self) -> usize {
        self.branches.len()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn path(&self) -> &UnitaryPath {
        &self.path
    }

    /// The permutation path of a depth-one map.
    pub fn step_path(&self) -> Option<&PermutationPath> {
        match &self.path {
            UnitaryPath::Step(p) => Some(p),
            _ => None,
        }
    }

    pub fn oscillation(&self) -> Dyadic {
        max_oscillation(&self.branches)
    }

    pub fn covers(&self) -> bool {
        covers_unit_interval(&self.branches)
    }

    /// Dense `U(x)`.
    pub fn unitary_at(&self, x: f64) -> CMatrix {
        match &self.path {
            UnitaryPath::Identity => CMatrix::identity(self.source.n_prime()),
            UnitaryPath::Step(p) => p.at(x),
            UnitaryPath::Composite { outer, inner } => {
                let blocks: Vec<CMatrix> = outer
                    .branches
                    .iter()
                    .map(|b| inner.unitary_at(b.eval(x)))
                    .collect();
                outer.unitary_at(x).matmul(&CMatrix::direct_sum(&blocks))
            }
        }
    }

    /// `φ(f)(x)` for `f` given pointwise.
    pub fn eval_with(&self, f: &(dyn Fn(f64) -> CMatrix + Sync), x: f64) -> CMatrix {
        match &self.path {
            UnitaryPath::Identity => f(x),
            UnitaryPath::Step(p) => p.conjugate(x, &self.diagonal(f, x)),
            UnitaryPath::Composite { outer, inner } => {
                outer.eval_with(&|y| inner.eval_with(f, y), x)
            }
        }
    }

    /// `diag(f(ξ_1(x)), …, f(ξ_m(x)))`, evaluating `f` once per distinct point.
    fn diagonal(&self, f: &(dyn Fn(f64) -> CMatrix + Sync), x: f64) -> CMatrix {
        let mut cache: Vec<(f64, CMatrix)> = Vec::new();
        let mut idx = Vec::with_capacity(self.branches.len());
        for b in self.branches.iter() {
            let y = b.eval(x);
            match cache.iter().position(|(p, _)| *p == y) {
                Some(k) => idx.push(k),
                None => {
                    idx.push(cache.len());
                    cache.push((y, f(y)));
                }
            }
        }
        CMatrix::direct_sum(idx.iter().map(|&k| &cache[k].1))
    }
}

/// `A(n, (a+1)n) ↦ A(bn, (b+1)bn)` with `b = 2a + 1`.
pub fn successor_block(b1: BuildingBlock) -> BuildingBlock {
    let b = 2 * b1.a() + 1;
    BuildingBlock::new(b * b1.n(), b).expect("successor parameters are positive")
}

/// `x/2` (b times), `1/2`, `(x+1)/2` (b - 1 times), for `b = 2a + 1`.
pub fn successor_branches(a: usize) -> Vec<BranchMap> {
    let b = 2 * a + 1;
    let mut v = vec![BranchMap::affine(0, 1); b];
    v.push(BranchMap::constant(1, 1));
    v.extend(std::iter::repeat(BranchMap::affine(1, 1)).take(b - 1));
    v
}

/// Slot layouts `(source at 0, target at 0, source at 1, target at 1)` of the
/// successor construction, with `C`, `Zero` of size `n` and `Mid` of size `n'`.
pub fn successor_layouts(b1: BuildingBlock) -> [SlotLayout; 4] {
    let (n, np, a) = (b1.n(), b1.n_prime(), b1.a());
    let b = 2 * a + 1;
    let c = (SlotKind::C, n);
    let z = (SlotKind::Zero, n);
    let mid = (SlotKind::Mid, np);
    let datum: Vec<_> = std::iter::once(mid)
        .chain(std::iter::repeat(c).take(a))
        .collect();

    // f(0) = diag(c×a, 0) for the b branches x/2, f(1/2) for the rest.
    let mut src0 = Vec::new();
    for _ in 0..b {
        src0.extend(std::iter::repeat(c).take(a));
        src0.push(z);
    }
    src0.extend(std::iter::repeat(mid).take(b));
    let mut tgt0: Vec<_> = std::iter::repeat(datum.clone()).take(b).flatten().collect();
    tgt0.extend(std::iter::repeat(z).take(b));

    // f(1/2) for the first b + 1 branches, f(1) = diag(c×(a+1)) for the rest.
    let mut src1: Vec<_> = std::iter::repeat(mid).take(b + 1).collect();
    src1.extend(std::iter::repeat(c).take((a + 1) * (b - 1)));
    let tgt1: Vec<_> = std::iter::repeat(datum).take(b + 1).flatten().collect();

    [
        SlotLayout::new(src0),
        SlotLayout::new(tgt0),
        SlotLayout::new(src1),
        SlotLayout::new(tgt1),
    ]
}

/// The successor block and the connecting map into it.
pub fn build_successor(b1: BuildingBlock) -> Result<(BuildingBlock, ConnectingMap), HomError> {
    let b2 = successor_block(b1);
    let [src0, tgt0, src1, tgt1] = successor_layouts(b1);
    let path = PermutationPath::new(
        match_permutation(&src0, &tgt0)?,
        match_permutation(&src1, &tgt1)?,
    )?;
    let map = ConnectingMap::from_step(b1, b2, successor_branches(b1.a()), path)?;
    Ok((b2, map))
}

/// `φ(e)` sampled on the grid of size `N / 2^depth`, where `N` is the grid of
/// `e`: every branch then evaluates `e` at one of its grid points.
pub fn apply_map(map: &ConnectingMap, e: &BlockElement) -> Result<BlockElement, HomError> {
    if e.block() != map.source {
        return Err(HomError::SourceMismatch {
            expected: map.source,
            found: e.block(),
        });
    }
    let grid = e.grid_size();
    let step = 1usize
        .checked_shl(map.depth)
        .filter(|&s| grid % s == 0 && grid / s >= 1)
        .ok_or(HomError::GridTooCoarse {
            grid,
            depth: map.depth,
        })?;
    let f = GridFunction::tabulate(grid / step, |x| map.eval_with(&|y| e.eval(y), x));
    let c = f.first().diagonal_block(0, map.target.n());
    Ok(BlockElement::from_parts(map.target, f, c)?)
}

/// `φ(e)(x)` at an arbitrary point; the inner values are interpolated when a
/// branch lands between grid points of `e`.
pub fn eval_at(map: &ConnectingMap, e: &BlockElement, x: f64) -> Result<CMatrix, HomError> {
    if e.block() != map.source {
        return Err(HomError::SourceMismatch {
            expected: map.source,
            found: e.block(),
        });
    }
    Ok(map.eval_with(&|y| e.eval(y), x))
}

/// `outer ∘ inner`. Branches are `ξ^inner_k ∘ ξ^outer_l` with `l` major.
pub fn compose_maps(
    outer: &ConnectingMap,
    inner: &ConnectingMap,
) -> Result<ConnectingMap, HomError> {
    if inner.target != outer.source {
        return Err(HomError::ChainMismatch {
            inner_target: inner.target,
            outer_source: outer.source,
        });
    }
    if matches!(inner.path, UnitaryPath::Identity) {
        return Ok(outer.clone());
    }
    if matches!(outer.path, UnitaryPath::Identity) {
        return Ok(inner.clone());
    }
    let branches: Vec<BranchMap> = outer
        .branches
        .iter()
        .flat_map(|lo| inner.branches.iter().map(move |ki| ki.after(lo)))
        .collect();
    Ok(ConnectingMap {
        source: inner.source,
        target: outer.target,
        branches: Arc::from(branches),
        path: UnitaryPath::Composite {
            outer: Arc::new(outer.clone()),
            inner: Arc::new(inner.clone()),
        },
        depth: outer.depth + inner.depth,
    })
}

/// Largest Frobenius norm of `φ(f_k f_{k+1}) - φ(f_k) φ(f_{k+1})` over grid
/// points, for consecutive pairs of `samples` (cyclically).
pub fn hom_defect(map: &ConnectingMap, samples: &[BlockElement]) -> Result<f64, HomError> {
    let images = samples
        .iter()
        .map(|e| apply_map(map, e))
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst = 0.0f64;
    for k in 0..samples.len() {
        let next = (k + 1) % samples.len();
        let prod = apply_map(map, &samples[k].product(&samples[next])?)?;
        let d = sup_distance(&prod, &images[k], Some(&images[next]))?;
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Defects of a map measured on explicit element pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairDefects {
    /// Largest Frobenius norm of `φ(e g) - φ(e) φ(g)`.
    pub hom: f64,
    /// Largest Frobenius norm of `φ(e*) - φ(e)*`, over the first elements.
    pub adjoint: f64,
    /// Largest endpoint residual of `φ(e)` and `φ(g)`.
    pub boundary: f64,
}

/// [`hom_defect`], [`adjoint_defect`] and the boundary residual over pairs
/// `(e, g)`, applying the map four times per pair.
pub fn pair_defects(
    map: &ConnectingMap,
    pairs: &[(BlockElement, BlockElement)],
) -> Result<PairDefects, HomError> {
    let mut out = PairDefects::default();
    for (e, g) in pairs {
        let fe = apply_map(map, e)?;
        let fg = apply_map(map, g)?;
        let prod = apply_map(map, &e.product(g)?)?;
        out.hom = out.hom.max(sup_distance(&prod, &fe, Some(&fg))?);
        let adj = apply_map(map, &e.adjoint())?;
        out.adjoint = out.adjoint.max(sup_distance(&adj, &fe.adjoint(), None)?);
        out.boundary = out
            .boundary
            .max(crate::blocks::validate_element(&fe))
            .max(crate::blocks::validate_element(&fg));
    }
    Ok(out)
}

/// Largest Frobenius norm of `φ(f*) - φ(f)*` over grid points and samples.
pub fn adjoint_defect(map: &ConnectingMap, samples: &[BlockElement]) -> Result<f64, HomError> {
    let mut worst = 0.0f64;
    for e in samples {
        let lhs = apply_map(map, &e.adjoint())?;
        let rhs = apply_map(map, e)?.adjoint();
        worst = worst.max(sup_distance(&lhs, &rhs, None)?);
    }
    Ok(worst)
}

/// `sup_x ‖lhs(x) - a(x) b(x)‖_F`, or `‖lhs(x) - a(x)‖_F` without `b`.
fn sup_distance(
    lhs: &BlockElement,
    a: &BlockElement,
    b: Option<&BlockElement>,
) -> Result<f64, HomError> {
    let rhs = match b {
        Some(b) => a.samples().zip_map(b.samples(), |x, y| x.matmul(y))?,
        None => a.samples().clone(),
    };
    let d = lhs
        .samples()
        .zip_map(&rhs, |x, y| (x - y).frobenius())?
        .into_samples()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(d)
}

/// `max_f sup_x ‖φ(h)^{1/n}(x) φ(f)(x) - φ(f)(x)‖` (operator norm).
pub fn approx_unit_defect(
    map: &ConnectingMap,
    samples: &[BlockElement],
    n: usize,
) -> Result<f64, HomError> {
    let mut worst = 0.0f64;
    for e in samples {
        let h = canonical_h(map.source, e.grid_size());
        let root = scalar_calculus(h.samples(), |t| t.max(0.0).powf(1.0 / n as f64), 1e-12)?;
        let root = BlockElement::from_parts(map.source, root, h.boundary_datum().clone())?;
        let unit = apply_map(map, &root)?;
        let fe = apply_map(map, e)?;
        let d = unit
            .samples()
            .zip_map(fe.samples(), |u, f| (&u.matmul(f) - f).op_norm())?
            .into_samples()
            .into_iter()
            .fold(0.0, f64::max);
        worst = worst.max(d);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapMetrics {
    pub oscillation: Dyadic,
    pub covers: bool,
    pub hom_defect: f64,
    pub adjoint_defect: f64,
    /// Largest endpoint residual of the images of the samples.
    pub boundary_defect: f64,
    /// `(n, approx_unit_defect(n))` for each requested `n`.
    pub approx_unit_defect: Vec<(usize, f64)>,
}

pub fn map_metrics(
    map: &ConnectingMap,
    samples: &[BlockElement],
    unit_powers: &[usize],
) -> Result<MapMetrics, HomError> {
    let boundary_defect = samples
        .iter()
        .map(|e| apply_map(map, e).map(|img| crate::blocks::validate_element(&img)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let approx = unit_powers
        .iter()
        .map(|&n| approx_unit_defect(map, samples, n).map(|d| (n, d)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MapMetrics {
        oscillation: map.oscillation(),
        covers: map.covers(),
        hom_defect: hom_defect(map, samples)?,
        adjoint_defect: adjoint_defect(map, samples)?,
        boundary_defect,
        approx_unit_defect: approx,
    })
}

/// A branch of a composed map whose image lies inside the support interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    /// `j - i`.
    pub depth: u32,
    pub branch: BranchMap,
    /// `min_x ‖f(ξ(x))‖` over the grid of `f`; a lower bound for
    /// `min_x ‖φ_{ij}(f)(x)‖`.
    pub min_block_norm: f64,
}

/// Smallest depth `d` such that some branch of a depth-`d` composite of
/// successor maps has image inside `support`.
///
/// Every successor step uses the same three branch shapes `x/2`, `1/2` and
/// `(x+1)/2`, so the set of composed branches does not depend on the tower
/// and the search runs past any built depth.
pub fn simplicity_witness(
    f: &BlockElement,
    support: Interval,
    max_depth: u32,
) -> Result<Witness, HomError> {
    let nonzero = f.boundary_datum().max_abs() > 0.0
        || f.samples().samples().iter().any(|m| m.max_abs() > 0.0);
    if !nonzero {
        return Err(HomError::ZeroElement);
    }
    let step = [
        BranchMap::affine(0, 1),
        BranchMap::constant(1, 1),
        BranchMap::affine(1, 1),
    ];
    let mut level: Vec<BranchMap> = vec![BranchMap::IDENTITY];
    for depth in 0..=max_depth.min(WITNESS_DEPTH_LIMIT) {
        let mut hits: Vec<BranchMap> = level
            .iter()
            .copied()
            .filter(|b| support.contains_image(b))
            .collect();
        if !hits.is_empty() {
            hits.sort_by_key(|b| (b.constant, b.l));
            let grid = f.grid_size();
            let norms: Vec<(BranchMap, f64)> = hits
                .par_iter()
                .map(|b| {
                    let m = (0..=grid)
                        .map(|j| f.eval(b.eval(j as f64 / grid as f64)).op_norm())
                        .fold(f64::INFINITY, f64::min);
                    (*b, m)
                })
                .collect();
            let (branch, min_block_norm) = norms
                .into_iter()
                .fold(None, |best: Option<(BranchMap, f64)>, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                })
                .expect("hits is nonempty");
            return Ok(Witness {
                depth,
                branch,
                min_block_norm,
            });
        }
        let mut next = HashSet::new();
        for inner in &level {
            for s in &step {
                next.insert(inner.after(s));
            }
        }
        level = next.into_iter().collect();
    }
    Err(HomError::NotFound { max_depth })
}
