use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use crate::numkernel::{CMatrix, GridFunction, C64};

use super::HomError;

/// Unitarity tolerance for inputs to [`unitary_path`].
pub const UNITARY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlotKind {
    /// A copy of the boundary datum `c`.
    C,
    /// A zero block.
    Zero,
    /// A copy of the midpoint value `f(1/2)`.
    Mid,
}

/// A block-diagonal pattern: slots in order, each with a kind and a size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotLayout {
    slots: Vec<(SlotKind, usize)>,
}

impl SlotLayout {
    pub fn new(slots: Vec<(SlotKind, usize)>) -> Self {
        SlotLayout { slots }
    }

    pub fn slots(&self) -> &[(SlotKind, usize)] {
        &self.slots
    }

    pub fn dim(&self) -> usize {
        self.slots.iter().map(|s| s.1).sum()
    }

    /// Block-diagonal matrix with every slot filled from `fill`.
    pub fn fill(&self, mut fill: impl FnMut(SlotKind, usize) -> CMatrix) -> CMatrix {
        let blocks: Vec<CMatrix> = self.slots.iter().map(|&(k, s)| fill(k, s)).collect();
        CMatrix::direct_sum(&blocks)
    }
}

/// Permutation `π` with `π[i]` the source coordinate sent to target
/// coordinate `i`. The `r`-th source slot of a given kind and size goes to the
/// `r`-th target slot of the same kind and size, preserving order inside slots.
pub fn match_permutation(source: &SlotLayout, target: &SlotLayout) -> Result<Vec<usize>, HomError> {
    let mut queues: HashMap<(SlotKind, usize), VecDeque<usize>> = HashMap::new();
    let mut off = 0;
    for &slot in &source.slots {
        queues.entry(slot).or_default().push_back(off);
        off += slot.1;
    }
    let mut perm = Vec::with_capacity(off);
    for slot in &target.slots {
        let start = queues
            .get_mut(slot)
            .and_then(|q| q.pop_front())
            .ok_or(HomError::LayoutMismatch)?;
        perm.extend(start..start + slot.1);
    }
    if queues.values().any(|q| !q.is_empty()) {
        return Err(HomError::LayoutMismatch);
    }
    Ok(perm)
}

pub(crate) fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Permutation matrix `P` with `P[i][π(i)] = 1`, so `P X P* = X.permuted(π)`.
pub fn permutation_matrix(perm: &[usize]) -> CMatrix {
    let mut p = CMatrix::zeros(perm.len());
    for (i, &j) in perm.iter().enumerate() {
        p[(i, j)] = C64::new(1.0, 0.0);
    }
    p
}

/// The permutation of a matrix whose entries are exactly 0 or 1 with a
/// single 1 in every row and column.
pub fn permutation_of(m: &CMatrix) -> Result<Vec<usize>, HomError> {
    let n = m.dim();
    let mut perm = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for i in 0..n {
        let mut hit = None;
        for (j, z) in m.row(i).iter().enumerate() {
            if *z == C64::new(1.0, 0.0) {
                if hit.is_some() {
                    return Err(HomError::NotPermutation);
                }
                hit = Some(j);
            } else if *z != C64::new(0.0, 0.0) {
                return Err(HomError::NotPermutation);
            }
        }
        let j = hit.ok_or(HomError::NotPermutation)?;
        if std::mem::replace(&mut seen[j], true) {
            return Err(HomError::NotPermutation);
        }
        perm.push(j);
    }
    Ok(perm)
}

/// The path `u(t) = exp(tH) u_0` between two permutation unitaries, where `H`
/// is the principal logarithm of `W = u_1 u_0*`.
///
/// On each `L`-cycle `c_0 → c_1 → ⋯` of `W` the generator is diagonalized by
/// the discrete Fourier basis, so `exp(tH)` restricted to the cycle is the
/// circulant with entries
/// `(1/L) Σ_k exp(i θ_k t) ω^{(q-p)k}` at `(c_p, c_q)`, `ω = e^{2πi/L}`,
/// `θ_k ∈ (-π, π]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationPath {
    start: Vec<usize>,
    end: Vec<usize>,
    cycles: Vec<Vec<usize>>,
}

impl PermutationPath {
    pub fn new(start: Vec<usize>, end: Vec<usize>) -> Result<Self, HomError> {
        if start.len() != end.len() || !is_permutation(&start) || !is_permutation(&end) {
            return Err(HomError::NotPermutation);
        }
        // W[i][w(i)] = 1 with w = start⁻¹ ∘ end, hence W e_j = e_{w⁻¹(j)}.
        let start_inv = invert(&start);
        let w: Vec<usize> = end.iter().map(|&e| start_inv[e]).collect();
        let w_inv = invert(&w);
        let mut cycles = Vec::new();
        let mut seen = vec![false; w.len()];
        for c0 in 0..w.len() {
            if seen[c0] || w_inv[c0] == c0 {
                continue;
            }
            let mut cycle = vec![c0];
            seen[c0] = true;
            let mut c = w_inv[c0];
            while c != c0 {
                seen[c] = true;
                cycle.push(c);
                c = w_inv[c];
            }
            cycles.push(cycle);
        }
        Ok(PermutationPath { start, end, cycles })
    }

    pub fn from_unitaries(u0: &CMatrix, u1: &CMatrix) -> Result<Self, HomError> {
        for u in [u0, u1] {
            let defect = u.unitary_defect();
            if !(defect <= UNITARY_TOLERANCE) {
                return Err(HomError::NotUnitary { defect });
            }
        }
        Self::new(permutation_of(u0)?, permutation_of(u1)?)
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    pub fn start(&self) -> &[usize] {
        &self.start
    }

    pub fn end(&self) -> &[usize] {
        &self.end
    }

    /// Nontrivial cycles of `W = u_1 u_0*`, each listed so that
    /// `W e_{c_j} = e_{c_{j+1}}`.
    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// `u(t)` as a dense matrix; exact permutation matrices at `t = 0, 1`.
    pub fn at(&self, t: f64) -> CMatrix {
        if t == 0.0 {
            return permutation_matrix(&self.start);
        }
        if t == 1.0 {
            return permutation_matrix(&self.end);
        }
        let n = self.dim();
        let mut e = CMatrix::identity(n);
        for (cycle, g) in self.cycles.iter().zip(cycle_coefficients(&self.cycles, t)) {
            let l = cycle.len();
            for p in 0..l {
                for q in 0..l {
                    e[(cycle[p], cycle[q])] = g[(q + l - p) % l];
                }
            }
        }
        // (E P_0)[i][start[k]] = E[i][k].
        let mut u = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                u[(i, self.start[k])] = e[(i, k)];
            }
        }
        u
    }

    /// `u(t) X u(t)*` without forming `u(t)`.
    pub fn conjugate(&self, t: f64, x: &CMatrix) -> CMatrix {
        if t == 0.0 {
            return x.permuted(&self.start);
        }
        if t == 1.0 {
            return x.permuted(&self.end);
        }
        let coeffs = cycle_coefficients(&self.cycles, t);
        let mut z = Planes::permuted(x, &self.start);
        z.mix_rows(&self.cycles, &coeffs);
        // Z E* = (E Z*)*.
        z.adjoint_in_place();
        z.mix_rows(&self.cycles, &coeffs);
        z.into_adjoint()
    }
}

/// A square complex matrix stored as separate real and imaginary planes, so
/// row updates vectorize.
struct Planes {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Planes {
    /// `X.permuted(perm)`.
    fn permuted(x: &CMatrix, perm: &[usize]) -> Self {
        let n = x.dim();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for &pi in perm {
            let row = x.row(pi);
            for &pj in perm {
                re.push(row[pj].re);
                im.push(row[pj].im);
            }
        }
        Planes { n, re, im }
    }

    fn into_adjoint(self) -> CMatrix {
        let n = self.n;
        CMatrix::from_fn(n, |i, j| C64::new(self.re[j * n + i], -self.im[j * n + i]))
    }

    fn adjoint_in_place(&mut self) {
        let n = self.n;
        for i in 0..n {
            self.im[i * n + i] = -self.im[i * n + i];
            for j in i + 1..n {
                self.re.swap(i * n + j, j * n + i);
                self.im.swap(i * n + j, j * n + i);
                self.im[i * n + j] = -self.im[i * n + j];
                self.im[j * n + i] = -self.im[j * n + i];
            }
        }
    }

    /// `E X` for the cycle-block matrix `E`: on each cycle, row `c_p` becomes
    /// `Σ_q g_{(q-p) mod L} · row c_q`. Exact zeros in the source rows are
    /// skipped.
    fn mix_rows(&mut self, cycles: &[Vec<usize>], coeffs: &[Vec<C64>]) {
        let n = self.n;
        let mut out_re = vec![0.0; n];
        let mut out_im = vec![0.0; n];
        let mut saved_re = Vec::new();
        let mut saved_im = Vec::new();
        let mut support: Vec<Vec<usize>> = Vec::new();
        for (cycle, g) in cycles.iter().zip(coeffs) {
            let l = cycle.len();
            saved_re.clear();
            saved_im.clear();
            support.clear();
            for &c in cycle {
                let (r, i) = (&self.re[c * n..(c + 1) * n], &self.im[c * n..(c + 1) * n]);
                saved_re.extend_from_slice(r);
                saved_im.extend_from_slice(i);
                support.push((0..n).filter(|&k| r[k] != 0.0 || i[k] != 0.0).collect());
            }
            for p in 0..l {
                out_re.fill(0.0);
                out_im.fill(0.0);
                let mut dense = Vec::with_capacity(l);
                for q in 0..l {
                    let w = g[(q + l - p) % l];
                    if 4 * support[q].len() >= n {
                        dense.push((q, w));
                        continue;
                    }
                    let xr = &saved_re[q * n..(q + 1) * n];
                    let xi = &saved_im[q * n..(q + 1) * n];
                    for &k in &support[q] {
                        out_re[k] += w.re * xr[k] - w.im * xi[k];
                        out_im[k] += w.re * xi[k] + w.im * xr[k];
                    }
                }
                // Two source rows per pass halves the traffic on the output row.
                let mut pairs = dense.chunks_exact(2);
                for pair in &mut pairs {
                    let ((q0, w0), (q1, w1)) = (pair[0], pair[1]);
                    let (ar, ai) = (
                        &saved_re[q0 * n..(q0 + 1) * n],
                        &saved_im[q0 * n..(q0 + 1) * n],
                    );
                    let (br, bi) = (
                        &saved_re[q1 * n..(q1 + 1) * n],
                        &saved_im[q1 * n..(q1 + 1) * n],
                    );
                    for k in 0..n {
                        out_re[k] += w0.re * ar[k] - w0.im * ai[k] + w1.re * br[k] - w1.im * bi[k];
                        out_im[k] += w0.re * ai[k] + w0.im * ar[k] + w1.re * bi[k] + w1.im * br[k];
                    }
                }
                if let [(q, w)] = *pairs.remainder() {
                    let (xr, xi) = (&saved_re[q * n..(q + 1) * n], &saved_im[q * n..(q + 1) * n]);
                    for k in 0..n {
                        out_re[k] += w.re * xr[k] - w.im * xi[k];
                        out_im[k] += w.re * xi[k] + w.im * xr[k];
                    }
                }
                let row = cycle[p] * n;
                self.re[row..row + n].copy_from_slice(&out_re);
                self.im[row..row + n].copy_from_slice(&out_im);
            }
        }
    }
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter()
        .all(|&i| i < p.len() && !std::mem::replace(&mut seen[i], true))
}

/// `g_r = (1/L) Σ_k exp(i (θ_k t + 2π r k / L))`, `r = 0..L`.
fn circulant_row(l: usize, t: f64) -> Vec<C64> {
    let lf = l as f64;
    let roots: Vec<C64> = (0..l)
        .map(|m| C64::from_polar(1.0, 2.0 * PI * m as f64 / lf))
        .collect();
    let phases: Vec<C64> = (0..l)
        .map(|k| {
            let theta = if 2 * k <= l {
                2.0 * PI * k as f64 / lf
            } else {
                2.0 * PI * k as f64 / lf - 2.0 * PI
            };
            C64::from_polar(1.0, theta * t)
        })
        .collect();
    (0..l)
        .map(|r| {
            let s: C64 = (0..l).map(|k| phases[k] * roots[(r * k) % l]).sum();
            s / lf
        })
        .collect()
}

/// [`circulant_row`] for every cycle, computed once per distinct length.
fn cycle_coefficients(cycles: &[Vec<usize>], t: f64) -> Vec<Vec<C64>> {
    let mut by_len: HashMap<usize, Vec<C64>> = HashMap::new();
    cycles
        .iter()
        .map(|c| {
            by_len
                .entry(c.len())
                .or_insert_with(|| circulant_row(c.len(), t))
                .clone()
        })
        .collect()
}

/// Samples of the path from `u0` to `u1` (both permutation matrices).
pub fn unitary_path(
    u0: &CMatrix,
    u1: &CMatrix,
    grid: usize,
) -> Result<GridFunction<CMatrix>, HomError> {
    let path = PermutationPath::from_unitaries(u0, u1)?;
    Ok(GridFunction::tabulate(grid, |t| path.at(t)))
}
