use rayon::prelude::*;

use super::eigen::herm_eigen;
use super::matrix::CMatrix;
use super::KernelError;

/// Samples of a function on the uniform grid `t_j = j / N`, `j = 0..=N`.
///
/// The endpoint samples `t_0 = 0` and `t_N = 1` are stored exactly. Evaluation
/// between grid points is piecewise linear.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    grid: usize,
    samples: Vec<T>,
}

impl<T> GridFunction<T> {
    pub fn from_samples(samples: Vec<T>) -> Result<Self, KernelError> {
        if samples.len() < 2 {
            return Err(KernelError::GridTooSmall(samples.len()));
        }
        Ok(GridFunction {
            grid: samples.len() - 1,
            samples,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.grid as f64
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample(&self, j: usize) -> &T {
        &self.samples[j]
    }

    pub fn first(&self) -> &T {
        &self.samples[0]
    }

    pub fn last(&self) -> &T {
        &self.samples[self.grid]
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    /// Index `j` with `t = j / N` exactly, if `t` is a grid point.
    pub fn grid_index(&self, t: f64) -> Option<usize> {
        let s = t * self.grid as f64;
        (s.fract() == 0.0 && (0.0..=self.grid as f64).contains(&s)).then_some(s as usize)
    }

    /// Neighbouring indices and the interpolation weight of the right one.
    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let t = t.clamp(0.0, 1.0);
        let s = t * self.grid as f64;
        let lo = (s.floor() as usize).min(self.grid - 1);
        (lo, lo + 1, s - lo as f64)
    }
}

impl<T: Send + Sync> GridFunction<T> {
    pub fn tabulate(grid: usize, f: impl Fn(f64) -> T + Sync + Send) -> Self {
        assert!(grid >= 1, "grid size must be positive");
        let samples = (0..=grid)
            .into_par_iter()
            .map(|j| f(j as f64 / grid as f64))
            .collect();
        GridFunction { grid, samples }
    }

    pub fn map<U: Send>(&self, f: impl Fn(&T) -> U + Sync + Send) -> GridFunction<U> {
        GridFunction {
            grid: self.grid,
            samples: self.samples.par_iter().map(f).collect(),
        }
    }

    pub fn try_map<U: Send, E: Send>(
        &self,
        f: impl Fn(&T) -> Result<U, E> + Sync + Send,
    ) -> Result<GridFunction<U>, E> {
        Ok(GridFunction {
            grid: self.grid,
            samples: self.samples.par_iter().map(f).collect::<Result<_, _>>()?,
        })
    }

    pub fn zip_map<U: Sync, V: Send>(
        &self,
        other: &GridFunction<U>,
        f: impl Fn(&T, &U) -> V + Sync + Send,
    ) -> Result<GridFunction<V>, KernelError> {
        if self.grid != other.grid {
            return Err(KernelError::GridMismatch(self.grid, other.grid));
        }
        Ok(GridFunction {
            grid: self.grid,
            samples: self
                .samples
                .par_iter()
                .zip(other.samples.par_iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }
}

impl GridFunction<f64> {
    pub fn eval(&self, t: f64) -> f64 {
        if let Some(j) = self.grid_index(t) {
            return self.samples[j];
        }
        let (lo, hi, w) = self.bracket(t);
        (1.0 - w) * self.samples[lo] + w * self.samples[hi]
    }

    pub fn sup_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

impl GridFunction<CMatrix> {
    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    /// Exact sample at grid points, linear interpolation elsewhere.
    pub fn eval(&self, t: f64) -> CMatrix {
        if let Some(j) = self.grid_index(t) {
            return self.samples[j].clone();
        }
        let (lo, hi, w) = self.bracket(t);
        &self.samples[lo].scale_real(1.0 - w) + &self.samples[hi].scale_real(w)
    }

    pub fn adjoint(&self) -> Self {
        self.map(|m| m.adjoint())
    }
}

/// Pointwise functional calculus `t ↦ g(f(t))` through the eigendecomposition
/// of each (Hermitian) sample.
pub fn scalar_calculus(
    f: &GridFunction<CMatrix>,
    g: impl Fn(f64) -> f64 + Sync + Send,
    tol: f64,
) -> Result<GridFunction<CMatrix>, KernelError> {
    f.try_map(|m| matrix_function(m, &g, tol))
}

/// `g(m)` for a single Hermitian matrix.
pub fn matrix_function(
    m: &CMatrix,
    g: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<CMatrix, KernelError> {
    Ok(herm_eigen(m, tol)?.apply(g))
}

/// Largest operator norm over the grid samples. This is a lower bound for
/// the supremum over the whole interval.
pub fn sup_norm(f: &GridFunction<CMatrix>) -> f64 {
    f.samples
        .par_iter()
        .map(|m| m.op_norm())
        .reduce(|| 0.0, f64::max)
}

pub fn zeros_like(f: &GridFunction<CMatrix>) -> GridFunction<CMatrix> {
    let n = f.dim();
    f.map(|_| CMatrix::zeros(n))
}

/// Pointwise product of two matrix-valued grid functions.
pub fn pointwise_product(
    f: &GridFunction<CMatrix>,
    g: &GridFunction<CMatrix>,
) -> Result<GridFunction<CMatrix>, KernelError> {
    f.zip_map(g, |a, b| a.matmul(b))
}
