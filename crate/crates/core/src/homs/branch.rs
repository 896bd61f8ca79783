use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest exponent a [`Dyadic`] may carry; keeps every comparison inside
/// 128-bit integer arithmetic and every value exactly representable as `f64`
/// for the depths used here.
pub const MAX_EXPONENT: u32 = 52;

/// The non-negative dyadic rational `num / 2^exp`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: u64,
    exp: u32,
}

impl Dyadic {
    pub fn new(num: u64, exp: u32) -> Self {
        assert!(exp <= MAX_EXPONENT, "dyadic exponent {exp} out of range");
        let mut d = Dyadic { num, exp };
        while d.exp > 0 && d.num % 2 == 0 {
            d.num /= 2;
            d.exp -= 1;
        }
        if d.num == 0 {
            d.exp = 0;
        }
        d
    }

    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    /// Exact as long as `num < 2^53`.
    pub fn to_f64(&self) -> f64 {
        self.num as f64 / (1u64 << self.exp) as f64
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exp.max(other.exp);
        let lhs = (self.num as u128) << (e - self.exp);
        let rhs = (other.num as u128) << (e - other.exp);
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u64 << self.exp)
        }
    }
}

/// A self-map of `[0, 1]` of the form `x ↦ (x + l) / 2^d` or `x ↦ l / 2^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchMap {
    pub l: u64,
    pub d: u32,
    pub constant: bool,
}

impl BranchMap {
    pub const IDENTITY: BranchMap = BranchMap {
        l: 0,
        d: 0,
        constant: false,
    };

    pub fn affine(l: u64, d: u32) -> Self {
        let b = BranchMap {
            l,
            d,
            constant: false,
        };
        assert!(b.is_well_formed(), "affine branch ({l}, {d}) leaves [0, 1]");
        b
    }

    pub fn constant(l: u64, d: u32) -> Self {
        let b = BranchMap {
            l,
            d,
            constant: true,
        };
        assert!(
            b.is_well_formed(),
            "constant branch ({l}, {d}) leaves [0, 1]"
        );
        b
    }

    /// Image inside `[0, 1]` and exponent in range.
    pub fn is_well_formed(&self) -> bool {
        if self.d > MAX_EXPONENT {
            return false;
        }
        let top = 1u64 << self.d;
        if self.constant {
            self.l <= top
        } else {
            self.l < top
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let scale = (1u64 << self.d) as f64;
        if self.constant {
            self.l as f64 / scale
        } else {
            (x + self.l as f64) / scale
        }
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &BranchMap) -> BranchMap {
        let d = self.d + first.d;
        let shift = 1u64 << first.d;
        if self.constant {
            BranchMap::constant(self.l * shift, d)
        } else if first.constant {
            BranchMap::constant(first.l + self.l * shift, d)
        } else {
            BranchMap::affine(first.l + self.l * shift, d)
        }
    }

    /// The closed image interval.
    pub fn image(&self) -> (Dyadic, Dyadic) {
        let lo = Dyadic::new(self.l, self.d);
        if self.constant {
            (lo, lo)
        } else {
            (lo, Dyadic::new(self.l + 1, self.d))
        }
    }

    /// `sup |ξ(x) - ξ(y)|`.
    pub fn oscillation(&self) -> Dyadic {
        if self.constant {
            Dyadic::ZERO
        } else {
            Dyadic::new(1, self.d)
        }
    }
}

impl fmt::Display for BranchMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let den = 1u64 << self.d;
        match (self.constant, self.l, den) {
            (true, l, 1) => write!(f, "{l}"),
            (true, l, den) => write!(f, "{l}/{den}"),
            (false, 0, 1) => write!(f, "x"),
            (false, 0, den) => write!(f, "x/{den}"),
            (false, l, den) => write!(f, "(x+{l})/{den}"),
        }
    }
}

/// Whether the closed images of `branches` cover `[0, 1]`.
pub fn covers_unit_interval(branches: &[BranchMap]) -> bool {
    let mut images: Vec<(Dyadic, Dyadic)> = branches.iter().map(|b| b.image()).collect();
    images.sort();
    let mut reach: Option<Dyadic> = None;
    for (lo, hi) in images {
        match reach {
            None if lo != Dyadic::ZERO => return false,
            Some(r) if lo > r => return false,
            _ => {}
        }
        reach = Some(reach.map_or(hi, |r| r.max(hi)));
    }
    reach == Some(Dyadic::ONE)
}

/// Largest branch oscillation.
pub fn max_oscillation(branches: &[BranchMap]) -> Dyadic {
    branches
        .iter()
        .map(|b| b.oscillation())
        .max()
        .unwrap_or(Dyadic::ZERO)
}

/// An interval of the real line with open or closed ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            self.lo <= x
        } else {
            self.lo < x
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }

    /// Whether the image of `branch` lies inside the interval.
    pub fn contains_image(&self, branch: &BranchMap) -> bool {
        let (lo, hi) = branch.image();
        self.contains(lo.to_f64()) && self.contains(hi.to_f64())
    }
}
