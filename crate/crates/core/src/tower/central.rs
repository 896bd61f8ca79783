use crate::blocks::{evaluate, BlockElement, Point};
use crate::numkernel::CMatrix;

use super::{boundary_datum_image, Tower, TowerError};

/// `M_{base} ⊗ M_{q_1} ⊗ ⋯ ⊗ M_{q_r}`; factors are numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorTruncation {
    pub base_dim: usize,
    pub factors: Vec<usize>,
}

impl TensorTruncation {
    pub fn new(base_dim: usize, factors: Vec<usize>) -> Self {
        assert!(base_dim >= 1 && factors.iter().all(|&q| q >= 1));
        TensorTruncation { base_dim, factors }
    }

    pub fn dim(&self) -> usize {
        self.base_dim * self.factors.iter().product::<usize>()
    }

    fn factor(&self, m: usize) -> Result<usize, TowerError> {
        if m == 0 || m > self.factors.len() {
            return Err(TowerError::FactorOutOfRange {
                m,
                count: self.factors.len(),
            });
        }
        Ok(self.factors[m - 1])
    }
}

/// `x_0 ⊗ x_1 ⊗ ⋯ ⊗ x_r` in a truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimpleTensor {
    pub base: CMatrix,
    pub factors: Vec<CMatrix>,
}

impl SimpleTensor {
    pub fn to_dense(&self) -> CMatrix {
        self.factors
            .iter()
            .fold(self.base.clone(), |acc, x| acc.kron(x))
    }

    pub fn fits(&self, trunc: &TensorTruncation) -> bool {
        self.base.dim() == trunc.base_dim
            && self.factors.len() == trunc.factors.len()
            && self
                .factors
                .iter()
                .zip(&trunc.factors)
                .all(|(x, &q)| x.dim() == q)
    }
}

/// `μ_{k,m}(a) = 1 ⊗ ⋯ ⊗ (a ⊗ 1_{q_m/k}) ⊗ ⋯ ⊗ 1` with the nontrivial entry in
/// factor `m`.
pub fn mu_embed(
    trunc: &TensorTruncation,
    k: usize,
    m: usize,
    a: &CMatrix,
) -> Result<CMatrix, TowerError> {
    let q = trunc.factor(m)?;
    if k == 0 || q % k != 0 || a.dim() != k {
        return Err(TowerError::NoUnitalEmbedding { k, q });
    }
    let left = trunc.base_dim * trunc.factors[..m - 1].iter().product::<usize>();
    let right: usize = trunc.factors[m..].iter().product();
    let inner = a.kron(&CMatrix::identity(q / k));
    Ok(CMatrix::identity(left)
        .kron(&inner)
        .kron(&CMatrix::identity(right)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaMetrics {
    /// `σ_{i,m}(a) = μ_{n_i,m}(ev_∞(a))`.
    pub image: CMatrix,
    /// Largest entry of `[σ(a), b]` over the test elements.
    pub commutator: f64,
    /// Largest `|‖σ(a) b‖ - ‖ev_∞(a)‖ ‖b‖|` over the test elements.
    pub norm_defect: f64,
    /// `(j, ‖ev_∞(φ_{ij}(a))‖)`.
    pub norm_recovery: Vec<(usize, f64)>,
    /// `(j, tr_{n_j}(ev_∞(φ_{ij}(a))))`.
    pub trace_match: Vec<(usize, f64)>,
}

/// `σ_{i,m}` applied to `a` together with its finite-stage estimates.
/// `tests` should be simple tensors supported on factors other than `m`.
pub fn sigma_stage(
    tower: &Tower,
    i: usize,
    trunc: &TensorTruncation,
    m: usize,
    a: &BlockElement,
    tests: &[SimpleTensor],
    later_stages: &[usize],
) -> Result<SigmaMetrics, TowerError> {
    let stage = tower.stage(i)?;
    if a.block() != stage {
        return Err(crate::blocks::BlockError::Incompatible.into());
    }
    let pi = evaluate(a, Point::Infinity);
    let image = mu_embed(trunc, stage.n(), m, &pi)?;
    let pi_norm = pi.op_norm();
    let mut commutator = 0.0f64;
    let mut norm_defect = 0.0f64;
    for t in tests {
        if !t.fits(trunc) {
            return Err(crate::blocks::BlockError::Incompatible.into());
        }
        let b = t.to_dense();
        let sb = image.matmul(&b);
        commutator = commutator.max((&sb - &b.matmul(&image)).max_abs());
        norm_defect = norm_defect.max((sb.op_norm() - pi_norm * b.op_norm()).abs());
    }
    let mut norm_recovery = Vec::new();
    let mut trace_match = Vec::new();
    for &j in later_stages {
        let d = boundary_datum_image(tower, i, j, a)?;
        norm_recovery.push((j, d.op_norm()));
        trace_match.push((j, d.normalized_trace().re));
    }
    Ok(SigmaMetrics {
        image,
        commutator,
        norm_defect,
        norm_recovery,
        trace_match,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::C64;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> CMatrix {
        CMatrix::from_rows(
            2,
            vec![
                C64::new(a, 0.0),
                C64::new(b, 0.0),
                C64::new(c, 0.0),
                C64::new(d, 0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn disjoint_factors_commute() {
        let trunc = TensorTruncation::new(2, vec![2, 2]);
        let a = m2(1.0, 2.0, 0.0, -1.0);
        let mu = mu_embed(&trunc, 2, 2, &a).unwrap();
        let b = SimpleTensor {
            base: m2(0.0, 1.0, 1.0, 0.0),
            factors: vec![m2(3.0, 0.0, 1.0, 1.0), CMatrix::identity(2)],
        }
        .to_dense();
        assert_eq!((&mu.matmul(&b) - &b.matmul(&mu)).max_abs(), 0.0);
    }

    #[test]
    fn unital_and_trace_preserving() {
        let trunc = TensorTruncation::new(1, vec![3, 6]);
        let x = CMatrix::from_fn(3, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let mu = mu_embed(&trunc, 3, 2, &x).unwrap();
        assert!((mu.normalized_trace() - x.normalized_trace()).norm() < 1e-14);
        assert_eq!(
            mu_embed(&trunc, 3, 2, &CMatrix::identity(3)).unwrap(),
            CMatrix::identity(18)
        );
        assert!(matches!(
            mu_embed(&trunc, 4, 2, &CMatrix::identity(4)),
            Err(TowerError::NoUnitalEmbedding { k: 4, q: 6 })
        ));
        assert!(matches!(
            mu_embed(&trunc, 3, 3, &x),
            Err(TowerError::FactorOutOfRange { .. })
        ));
    }

    #[test]
    fn norm_multiplicative_on_simple_tensors() {
        let trunc = TensorTruncation::new(2, vec![2, 2]);
        let a = m2(0.5, 1.0, 0.0, 2.0);
        let b = SimpleTensor {
            base: m2(1.0, 1.0, 0.0, 1.0),
            factors: vec![m2(0.0, 2.0, 1.0, 0.0), CMatrix::identity(2)],
        };
        let lhs = mu_embed(&trunc, 2, 2, &a)
            .unwrap()
            .matmul(&b.to_dense())
            .op_norm();
        assert!((lhs - a.op_norm() * b.to_dense().op_norm()).abs() < 1e-12);
    }
}
