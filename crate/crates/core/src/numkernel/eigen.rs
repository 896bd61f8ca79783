//! Cyclic Jacobi eigensolver for dense Hermitian matrices.

use super::matrix::{CMatrix, C64};
use super::KernelError;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order; `vectors` holds the eigenvectors as columns
/// (empty when not requested).
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Option<CMatrix>,
}

impl HermitianEigen {
    /// `V diag(g(λ)) V*`.
    pub fn apply(&self, g: impl Fn(f64) -> f64) -> CMatrix {
        let v = self
            .vectors
            .as_ref()
            .expect("eigenvectors were not computed");
        let n = v.dim();
        let gl: Vec<f64> = self.values.iter().map(|&l| g(l)).collect();
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..n {
                    s += v[(i, k)] * gl[k] * v[(j, k)].conj();
                }
                out[(i, j)] = s;
                out[(j, i)] = s.conj();
            }
            out[(i, i)] = C64::new(out[(i, i)].re, 0.0);
        }
        out
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Fails with `NotHermitian` when the Frobenius norm of `m - m*` exceeds `tol`.
pub fn herm_spectrum(m: &CMatrix, tol: f64) -> Result<Vec<f64>, KernelError> {
    check_hermitian(m, tol)?;
    Ok(jacobi_eigen(&m.hermitian_part(), false).values)
}

/// Eigenvalues and eigenvectors of a Hermitian matrix.
pub fn herm_eigen(m: &CMatrix, tol: f64) -> Result<HermitianEigen, KernelError> {
    check_hermitian(m, tol)?;
    Ok(jacobi_eigen(&m.hermitian_part(), true))
}

fn check_hermitian(m: &CMatrix, tol: f64) -> Result<(), KernelError> {
    if !m.is_finite() {
        return Err(KernelError::NonFinite);
    }
    let defect = m.hermitian_defect();
    if defect > tol {
        return Err(KernelError::NotHermitian { defect, tol });
    }
    Ok(())
}

/// Cyclic Jacobi on an exactly Hermitian input.
///
/// Sweeps stop once the off-diagonal Frobenius mass drops below
/// `1e-12 · dim · max(1, ‖m‖_F)`.
pub(crate) fn jacobi_eigen(m: &CMatrix, want_vectors: bool) -> HermitianEigen {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = want_vectors.then(|| CMatrix::identity(n));
    let scale = m.frobenius().max(1.0);
    let threshold = 1e-12 * n as f64 * scale;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_mass(&a) < threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, v.as_mut(), p, q);
            }
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    idx.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = idx.iter().map(|&i| diag[i]).collect();
    let vectors = v.map(|v| CMatrix::from_fn(n, |r, c| v[(r, idx[c])]));
    HermitianEigen { values, vectors }
}

fn off_diagonal_mass(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
///
/// With `a[p][q] = |a_pq| e^{iφ}`, the unitary is `G = D R` where
/// `D = diag(1, e^{-iφ})` on `(p, q)` makes the pivot real and `R` is the
/// classical real rotation. Updates `a ← G* a G` and `v ← v G`.
fn rotate(a: &mut CMatrix, v: Option<&mut CMatrix>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if mag <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let phase = apq / mag;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let e = phase.conj();

    // G entries: g_pp = c, g_pq = s, g_qp = -s e, g_qq = c e.
    let g_pp = C64::new(c, 0.0);
    let g_pq = C64::new(s, 0.0);
    let g_qp = -e * s;
    let g_qq = e * c;

    let n = a.dim();
    // Columns: a ← a G.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    // Rows: a ← G* a.
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    if let Some(v) = v {
        for k in 0..n {
            let vkp = v[(k, p)];
            let vkq = v[(k, q)];
            v[(k, p)] = vkp * g_pp + vkq * g_qp;
            v[(k, q)] = vkp * g_pq + vkq * g_qq;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let m = CMatrix::from_fn(n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        m.hermitian_part()
    }

    #[test]
    fn diagonal_input() {
        let m = CMatrix::from_real_diag(&[1.0, 0.0]);
        assert_eq!(herm_spectrum(&m, 1e-12).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn swap_matrix() {
        let mut m = CMatrix::zeros(2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 0)] = C64::new(1.0, 0.0);
        let s = herm_spectrum(&m, 1e-12).unwrap();
        assert!((s[0] + 1.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            herm_spectrum(&m, 1e-9),
            Err(KernelError::NotHermitian { .. })
        ));
    }

    #[test]
    fn eigenbasis_is_unitary_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 17, 40] {
            let m = random_hermitian(n, &mut rng);
            let eig = herm_eigen(&m, 1e-12).unwrap();
            let v = eig.vectors.as_ref().unwrap();
            assert!(v.unitary_defect() <= 1e-10 * n as f64);
            let rebuilt = eig.apply(|x| x);
            assert!((&rebuilt - &m).frobenius() <= 10.0 * 1e-12 * n as f64);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn complex_phases_converge() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let mut m = CMatrix::scalar(2, C64::new(2.0, 0.0));
        m[(0, 1)] = C64::new(0.0, 1.0);
        m[(1, 0)] = C64::new(0.0, -1.0);
        let s = herm_spectrum(&m, 1e-12).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-14 && (s[1] - 3.0).abs() < 1e-14);
    }
}
