//! Closed real intervals with outward-safe arithmetic.

use std::f64::consts::{FRAC_PI_2, PI};

use super::super::world::geometry::TAU;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Interval {
        Interval { lo: v, hi: v }
    }

    pub fn entire() -> Interval {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (false, true) => self.hi.min(0.0) - 1.0,
            (true, false) => self.lo.max(0.0) + 1.0,
            (false, false) => 0.0,
        }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval::new(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn sub(self, o: Interval) -> Interval {
        self.add(o.neg())
    }

    pub fn mul(self, o: Interval) -> Interval {
        if self.is_point() && o.is_point() {
            return Interval::point(self.lo * o.lo);
        }
        let cands = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        // 0 * inf is NaN; such products only arise at an unbounded end and
        // are dominated by the other candidates.
        let lo = cands
            .iter()
            .copied()
            .filter(|c| !c.is_nan())
            .fold(f64::INFINITY, f64::min);
        let hi = cands
            .iter()
            .copied()
            .filter(|c| !c.is_nan())
            .fold(f64::NEG_INFINITY, f64::max);
        if lo > hi {
            Interval::point(0.0)
        } else {
            Interval::new(lo, hi)
        }
    }

    /// `None` when the divisor is the point zero.
    pub fn div(self, o: Interval) -> Option<Interval> {
        if o.lo == 0.0 && o.hi == 0.0 {
            return None;
        }
        if o.lo < 0.0 && o.hi > 0.0 || o.lo == 0.0 || o.hi == 0.0 {
            if self.is_point() && self.lo == 0.0 {
                return Some(Interval::point(0.0));
            }
            return Some(Interval::entire());
        }
        Some(self.mul(Interval::new(1.0 / o.hi, 1.0 / o.lo)))
    }

    pub fn sqr(self) -> Interval {
        let a = self.lo * self.lo;
        let b = self.hi * self.hi;
        if self.lo <= 0.0 && self.hi >= 0.0 {
            Interval::new(0.0, a.max(b))
        } else {
            Interval::new(a.min(b), a.max(b))
        }
    }

    pub fn sqrt(self) -> Interval {
        Interval::new(self.lo.max(0.0).sqrt(), self.hi.max(0.0).sqrt())
    }

    pub fn sin(self) -> Interval {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.width() >= TAU {
            return Interval::new(-1.0, 1.0);
        }
        let (a, b) = (self.lo.sin(), self.hi.sin());
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if contains_phase(self, FRAC_PI_2) {
            hi = 1.0;
        }
        if contains_phase(self, -FRAC_PI_2) {
            lo = -1.0;
        }
        Interval::new(lo, hi)
    }

    pub fn cos(self) -> Interval {
        Interval::new(self.lo + FRAC_PI_2, self.hi + FRAC_PI_2).sin()
    }

    pub fn scale(self, k: f64) -> Interval {
        self.mul(Interval::point(k))
    }
}

/// Whether some `phase + 2kπ` lies in `iv`.
fn contains_phase(iv: Interval, phase: f64) -> bool {
    let k = ((iv.lo - phase) / TAU).ceil();
    phase + k * TAU <= iv.hi
}

/// Shift a heading interval so that its lower end lies in (-π, π].
pub fn normalize_heading(iv: Interval) -> Interval {
    if !iv.lo.is_finite() || !iv.hi.is_finite() || iv.width() >= TAU {
        return Interval::new(-PI, PI);
    }
    let shifted = super::super::world::geometry::wrap_angle(iv.lo);
    Interval::new(shifted, shifted + iv.width())
}
