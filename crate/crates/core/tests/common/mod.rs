//! Exact rational oracles, written independently of the library.
#![allow(dead_code)]

use num_rational::Ratio;

pub type Q = Ratio<i64>;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// `x ↦ slope·x + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Affine {
    pub slope: Q,
    pub offset: Q,
}

impl Affine {
    pub fn at(&self, x: Q) -> Q {
        self.slope * x + self.offset
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &Affine) -> Affine {
        Affine {
            slope: self.slope * first.slope,
            offset: self.slope * first.offset + self.offset,
        }
    }

    pub fn image(&self) -> (Q, Q) {
        let (a, b) = (self.at(q(0, 1)), self.at(q(1, 1)));
        (a.min(b), a.max(b))
    }
}

/// The branch list of one step out of a block with parameter `a`, by the
/// case split on `k = 1..=2b`.
pub fn step_branches(a: i64) -> Vec<Affine> {
    let b = 2 * a + 1;
    (1..=2 * b)
        .map(|k| {
            if k <= b {
                Affine {
                    slope: q(1, 2),
                    offset: q(0, 1),
                }
            } else if k == b + 1 {
                Affine {
                    slope: q(0, 1),
                    offset: q(1, 2),
                }
            } else {
                Affine {
                    slope: q(1, 2),
                    offset: q(1, 2),
                }
            }
        })
        .collect()
}

/// Branches of `φ_{1,1+depth}` from a seed with parameter `a1`, outer index
/// major.
pub fn composed_branches(a1: i64, depth: usize) -> Vec<Affine> {
    let mut branches = vec![Affine {
        slope: q(1, 1),
        offset: q(0, 1),
    }];
    let mut a = a1;
    for _ in 0..depth {
        let outer = step_branches(a);
        branches = outer
            .iter()
            .flat_map(|o| branches.iter().map(move |i| i.after(o)))
            .collect();
        a = 2 * a + 1;
    }
    branches
}

/// `tr(h(t)) = (a + t)/(a + 1)`.
pub fn trace_of_h(a: i64, t: Q) -> Q {
    (Q::from_integer(a) + t) / Q::from_integer(a + 1)
}

/// `tr⊗δ_x(φ_{1,1+depth}(h))`.
pub fn point_trace_of_image(a1: i64, depth: usize, x: Q) -> Q {
    let br = composed_branches(a1, depth);
    let m = br.len() as i64;
    br.iter().map(|b| trace_of_h(a1, b.at(x))).sum::<Q>() / Q::from_integer(m)
}

/// Eigenvalues of `φ_{1,1+depth}(h)(x)` for a seed with `n = 1`: each branch
/// block `h(ξ(x)) = diag(1 × a, ξ(x))`.
pub fn spectrum_of_image(a1: i64, depth: usize, x: Q) -> Vec<Q> {
    let mut v = Vec::new();
    for b in composed_branches(a1, depth) {
        v.extend(std::iter::repeat(q(1, 1)).take(a1 as usize));
        v.push(b.at(x));
    }
    v.sort();
    v
}

/// Covering radius of `[0, 1]` by a finite set.
pub fn covering_radius(points: &[Q]) -> Q {
    let mut p: Vec<Q> = points.to_vec();
    p.sort();
    p.dedup();
    let mut r = p[0].max(q(1, 1) - *p.last().unwrap());
    for w in p.windows(2) {
        r = r.max((w[1] - w[0]) / 2);
    }
    r
}

/// `max_x tr⊗δ_x - min_x tr⊗δ_x` over `x = k/grid`.
pub fn trace_gap(a1: i64, depth: usize, grid: i64) -> Q {
    let vals: Vec<Q> = (0..=grid)
        .map(|k| point_trace_of_image(a1, depth, q(k, grid)))
        .collect();
    *vals.iter().max().unwrap() - *vals.iter().min().unwrap()
}

/// Smallest relative depth whose composed branches (shapes `x/2`, `1/2`,
/// `(x+1)/2`) include one with image inside the open interval `(lo, hi)`.
pub fn witness_depth(lo: Q, hi: Q, max_depth: usize) -> Option<usize> {
    let shapes: std::collections::BTreeSet<Affine> = step_branches(1).into_iter().collect();
    let mut level: std::collections::BTreeSet<Affine> = [Affine {
        slope: q(1, 1),
        offset: q(0, 1),
    }]
    .into_iter()
    .collect();
    for d in 0..=max_depth {
        let hit = level.iter().any(|b| {
            let (s, t) = b.image();
            lo < s && t < hi
        });
        if hit {
            return Some(d);
        }
        level = level
            .iter()
            .flat_map(|i| shapes.iter().map(move |s| i.after(s)))
            .collect();
    }
    None
}
