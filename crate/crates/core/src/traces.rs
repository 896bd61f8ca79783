//! Traces `τ = tr ⊗ μ` with `μ` a finite sum of point masses.
//!
//! An atom at `t = 0` is read through `ev_0 = ⊕ ev_∞`, so `tr ⊗ δ_0` equals
//! `a/(a+1) · tr_n ∘ ev_∞` and has norm `a/(a+1)`.

use thiserror::Error;

use crate::blocks::{canonical_h_at, BlockElement, BuildingBlock};
use crate::homs::{ConnectingMap, Dyadic, HomError};
use crate::numkernel::{matrix_function, GridFunction, KernelError, C64};

/// Self-adjointness tolerance of [`affine_image`].
pub const SELF_ADJOINT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace lives on {found}, element on {expected}")]
    ContextMismatch {
        expected: BuildingBlock,
        found: BuildingBlock,
    },
    #[error("atom ({t}, {weight}) is not a point of [0, 1] with positive finite weight")]
    InvalidAtom { t: f64, weight: f64 },
    #[error("element is not self-adjoint (defect {defect:e})")]
    NotSelfAdjoint { defect: f64 },
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    block: BuildingBlock,
    /// Sorted by location, locations distinct.
    atoms: Vec<(f64, f64)>,
}

impl Trace {
    /// Atoms at equal locations are merged.
    pub fn new(
        block: BuildingBlock,
        atoms: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self, TraceError> {
        let mut v: Vec<(f64, f64)> = Vec::new();
        for (t, weight) in atoms {
            if !(0.0..=1.0).contains(&t) || !(weight > 0.0 && weight.is_finite()) {
                return Err(TraceError::InvalidAtom { t, weight });
            }
            v.push((t, weight));
        }
        Ok(Trace {
            block,
            atoms: merge(v),
        })
    }

    /// `tr ⊗ δ_t`.
    pub fn point(block: BuildingBlock, t: f64) -> Result<Self, TraceError> {
        Self::new(block, [(t, 1.0)])
    }

    pub fn zero(block: BuildingBlock) -> Self {
        Trace {
            block,
            atoms: Vec::new(),
        }
    }

    pub fn block(&self) -> BuildingBlock {
        self.block
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }
}

fn merge(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (t, w) in atoms {
        match out.last_mut() {
            Some(last) if last.0 == t => last.1 += w,
            _ => out.push((t, w)),
        }
    }
    out
}

fn check_context(tau: &Trace, e: &BlockElement) -> Result<(), TraceError> {
    if tau.block != e.block() {
        return Err(TraceError::ContextMismatch {
            expected: e.block(),
            found: tau.block,
        });
    }
    Ok(())
}

/// `Σ_j w_j tr_{n'}(f(t_j))`, complex valued.
pub fn eval_trace_complex(tau: &Trace, e: &BlockElement) -> Result<C64, TraceError> {
    check_context(tau, e)?;
    Ok(tau
        .atoms
        .iter()
        .map(|&(t, w)| e.eval(t).normalized_trace() * w)
        .sum())
}

/// Real part of [`eval_trace_complex`]; the value on self-adjoint elements.
pub fn eval_trace(tau: &Trace, e: &BlockElement) -> Result<f64, TraceError> {
    Ok(eval_trace_complex(tau, e)?.re)
}

/// The dual map `φ*`: each atom `(x, w)` of a trace on the target becomes
/// the atoms `(ξ_k(x), w/m)` on the source.
pub fn pushforward_trace(map: &ConnectingMap, tau: &Trace) -> Result<Trace, TraceError> {
    if tau.block != map.target() {
        return Err(TraceError::ContextMismatch {
            expected: map.target(),
            found: tau.block,
        });
    }
    let m = map.m() as f64;
    let atoms = tau
        .atoms
        .iter()
        .flat_map(|&(x, w)| map.branches().iter().map(move |b| (b.eval(x), w / m)))
        .collect();
    Ok(Trace {
        block: map.source(),
        atoms: merge(atoms),
    })
}

/// `‖τ‖ = Σ_j w_j ν(t_j)`, with `ν(0) = a/(a+1)` and `ν = 1` elsewhere.
pub fn trace_norm(tau: &Trace) -> f64 {
    tau.atoms
        .iter()
        .map(|&(t, w)| w * tau.block.point_trace_norm(t))
        .sum()
}

/// `τ(h^{1/n})`, evaluated at the atoms directly.
pub fn trace_of_root(tau: &Trace, n: usize) -> Result<f64, TraceError> {
    let mut s = 0.0;
    for &(t, w) in &tau.atoms {
        let root = matrix_function(
            &canonical_h_at(tau.block, t),
            |x| x.max(0.0).powf(1.0 / n as f64),
            0.0,
        )?;
        s += w * root.normalized_trace().re;
    }
    Ok(s)
}

/// Richardson extrapolation `2 τ(h^{1/2n}) - τ(h^{1/n})` of `lim_n τ(h^{1/n})`;
/// the error of `τ(h^{1/n})` is `O(1/n)` at every atom.
pub fn trace_norm_extrapolated(tau: &Trace, n: usize) -> Result<f64, TraceError> {
    Ok(2.0 * trace_of_root(tau, 2 * n)? - trace_of_root(tau, n)?)
}

/// `t ↦ tr_{n'}(f(t))` for self-adjoint `f`.
pub fn affine_image(e: &BlockElement) -> Result<GridFunction<f64>, TraceError> {
    let defect = e.self_adjoint_defect();
    if defect > SELF_ADJOINT_TOLERANCE {
        return Err(TraceError::NotSelfAdjoint { defect });
    }
    Ok(e.samples().map(|m| m.normalized_trace().re))
}

/// Result of [`oscillation_gap`].
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationGap {
    /// `max_{x,y} |tr⊗δ_x(φ(f)) - tr⊗δ_y(φ(f))|` over the output grid.
    pub gap: f64,
    /// Grid modulus of continuity of `t ↦ tr(f(t))` at `spacing`.
    pub modulus: f64,
    /// `2^{-depth}`, the oscillation bound of the branches.
    pub spacing: Dyadic,
    pub values: GridFunction<f64>,
}

/// Spread of the point traces of `φ(f)`, computed from
/// `tr⊗δ_x(φ(f)) = (1/m) Σ_k tr(f(ξ_k(x)))` on the grid of size `N / 2^depth`,
/// so that every branch lands on a grid point of `f`.
pub fn oscillation_gap(
    map: &ConnectingMap,
    e: &BlockElement,
) -> Result<OscillationGap, TraceError> {
    if e.block() != map.source() {
        return Err(TraceError::ContextMismatch {
            expected: map.source(),
            found: e.block(),
        });
    }
    let depth = map.depth();
    let grid = e.grid_size();
    let step = 1usize << depth;
    if grid % step != 0 || grid < step {
        return Err(HomError::GridTooCoarse { grid, depth }.into());
    }
    let tr: Vec<f64> = e
        .samples()
        .samples()
        .iter()
        .map(|m| m.normalized_trace().re)
        .collect();
    let at = |y: f64| {
        let j = e
            .samples()
            .grid_index(y)
            .expect("branch value is a grid point");
        tr[j]
    };
    let m = map.m() as f64;
    let values = GridFunction::tabulate(grid / step, |x| {
        map.branches().iter().map(|b| at(b.eval(x))).sum::<f64>() / m
    });
    let hi = values
        .samples()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = values
        .samples()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    let spacing = Dyadic::new(1, depth);
    let reach = grid >> depth;
    let mut modulus = 0.0f64;
    for j in 0..=grid {
        for k in j + 1..=(j + reach).min(grid) {
            modulus = modulus.max((tr[k] - tr[j]).abs());
        }
    }
    Ok(OscillationGap {
        gap: hi - lo,
        modulus,
        spacing,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{canonical_h, psi_embed};
    use crate::homs::{apply_map, build_successor};

    fn seed() -> BuildingBlock {
        BuildingBlock::new(1, 1).unwrap()
    }

    #[test]
    fn point_evaluations() {
        let h = canonical_h(seed(), 256);
        let half = Trace::point(seed(), 0.5).unwrap();
        assert_eq!(eval_trace(&half, &h).unwrap(), 0.75);
        assert_eq!(
            eval_trace(&Trace::point(seed(), 0.0).unwrap(), &h).unwrap(),
            0.5
        );
        assert_eq!(
            eval_trace(&half, &BlockElement::zero(seed(), 8)).unwrap(),
            0.0
        );
        let other = Trace::point(BuildingBlock::new(2, 1).unwrap(), 0.5).unwrap();
        assert!(matches!(
            eval_trace(&other, &h),
            Err(TraceError::ContextMismatch { .. })
        ));
    }

    #[test]
    fn invalid_atoms() {
        assert!(Trace::new(seed(), [(1.5, 1.0)]).is_err());
        assert!(Trace::new(seed(), [(0.5, 0.0)]).is_err());
        assert!(Trace::new(seed(), [(0.5, f64::NAN)]).is_err());
    }

    #[test]
    fn pushforward_of_point_at_one() {
        let (b2, phi) = build_successor(seed()).unwrap();
        let tau = Trace::point(b2, 1.0).unwrap();
        let pulled = pushforward_trace(&phi, &tau).unwrap();
        assert_eq!(pulled.atoms().len(), 2);
        assert_eq!(pulled.atoms()[0].0, 0.5);
        assert!((pulled.atoms()[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(pulled.atoms()[1].0, 1.0);
        assert!((pulled.atoms()[1].1 - 1.0 / 3.0).abs() < 1e-15);
        let h = canonical_h(seed(), 512);
        let lhs = eval_trace(&pulled, &h).unwrap();
        let rhs = eval_trace(&tau, &apply_map(&phi, &h).unwrap()).unwrap();
        assert!((lhs - 5.0 / 6.0).abs() < 1e-15 && (rhs - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn pushforward_of_generic_point() {
        let (b2, phi) = build_successor(seed()).unwrap();
        let x = 0.3;
        let pulled = pushforward_trace(&phi, &Trace::point(b2, x).unwrap()).unwrap();
        let expected = [
            (x / 2.0, 0.5),
            (0.5, 1.0 / 6.0),
            ((x + 1.0) / 2.0, 1.0 / 3.0),
        ];
        for ((t, w), (et, ew)) in pulled.atoms().iter().zip(expected) {
            assert_eq!(*t, et);
            assert!((w - ew).abs() < 1e-15);
        }
        assert_eq!(
            pushforward_trace(&phi, &Trace::zero(b2)).unwrap(),
            Trace::zero(seed())
        );
    }

    #[test]
    fn norms() {
        assert_eq!(trace_norm(&Trace::point(seed(), 0.0).unwrap()), 0.5);
        assert_eq!(trace_norm(&Trace::point(seed(), 0.7).unwrap()), 1.0);
        assert_eq!(
            trace_norm(&Trace::new(seed(), [(0.0, 1.0), (0.5, 0.5)]).unwrap()),
            1.0
        );
        let at0 = Trace::point(seed(), 0.0).unwrap();
        assert!((trace_of_root(&at0, 1024).unwrap() - 0.5).abs() < 2e-3);
        let mixed = Trace::new(seed(), [(0.25, 0.5), (0.0, 1.0)]).unwrap();
        assert!((trace_norm_extrapolated(&mixed, 1024).unwrap() - trace_norm(&mixed)).abs() < 1e-6);
    }

    #[test]
    fn affine_images() {
        let h = canonical_h(seed(), 64);
        let g = affine_image(&h).unwrap();
        for (j, v) in g.samples().iter().enumerate() {
            assert_eq!(*v, (1.0 + g.point(j)) / 2.0);
        }
        let gg = GridFunction::tabulate(64, |t| (2.0 + t * t) / 3.0 + 0.1 * t * (1.0 - t));
        let b = BuildingBlock::new(2, 2).unwrap();
        let back = affine_image(&psi_embed(b, &gg).unwrap()).unwrap();
        for (x, y) in back.samples().iter().zip(gg.samples()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_at_first_step() {
        let (_, phi) = build_successor(seed()).unwrap();
        let h = canonical_h(seed(), 256);
        let g = oscillation_gap(&phi, &h).unwrap();
        // tr⊗δ_x(φ(h)) = (15 + 5x) / 24.
        assert!((g.gap - 5.0 / 24.0).abs() < 1e-15);
        assert!((g.modulus - 0.25).abs() < 1e-15);
        assert!(g.gap <= g.modulus);
    }
}
