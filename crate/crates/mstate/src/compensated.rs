//! Compensated (double-double) arithmetic for the outward solver sweeps.
//!
//! The discrete forward equations feed each cell's value back through the
//! rate atoms of every later cell. Where the ensemble occupies a region
//! thinly, estimated rate atoms reach magnitude one, and the sweep then
//! amplifies rounding error multiplicatively — a cascade of k near-unit
//! atoms scales seeds by up to 2^k, which at realistic scales turns 1e-16
//! arithmetic noise into order-one error at the far corners of the grid
//! square. Carrying the sweep in double-double precision pushes the seeds
//! to ~1e-31 so the amplified error stays far below the consistency
//! tolerance.
//!
//! A value is an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`. The
//! algorithms are the classical error-free transformations (Knuth two-sum,
//! Dekker split product), so no FMA support is assumed.

/// Double-double value: the unevaluated sum `hi + lo`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// Error-free sum: `a + b = s + err` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Error-free sum assuming `|a| >= |b|`.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

/// Dekker splitting constant, `2^27 + 1`.
const SPLITTER: f64 = 134_217_729.0;

/// Split `a` into high and low halves with 26/27 significant bits each.
#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

/// Error-free product: `a * b = p + err` exactly (Dekker).
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ahi, alo) = split(a);
    let (bhi, blo) = split(b);
    let err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo;
    (p, err)
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    /// Lift an exact double.
    #[inline]
    pub(crate) fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Round to the nearest double.
    #[inline]
    pub(crate) fn value(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub(crate) fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub(crate) fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub(crate) fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub(crate) fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi));
        Dd { hi, lo }
    }

    /// Compensated ratio of two exactly representable doubles (counts):
    /// `hi = fl(a/b)` and `lo` corrects it so `hi + lo` matches `a/b` to
    /// roughly 1e-32 relative error. Requires `b != 0`.
    #[inline]
    pub(crate) fn ratio(a: f64, b: f64) -> Dd {
        let hi = a / b;
        let (p, e) = two_prod(hi, b);
        let lo = ((a - p) - e) / b;
        Dd { hi, lo }
    }
}
