//! Certified floating-point values: a number plus an explicit absolute error
//! budget, so every inequality in the lemmas is asserted with margin rather
//! than by bare `<` on rounded doubles.

use serde::Serialize;

const EPS: f64 = 2.220446049250313e-16; // 2^-52

/// Which domain the value lives in. Products at scale are carried as sums of
/// logs, so a `Log`-tagged value certifies the exponent, not the product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Domain {
    Linear,
    Log,
}

/// A real number with a nonnegative absolute slack.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundedValue {
    pub value: f64,
    pub slack: f64,
    pub domain: Domain,
}

impl BoundedValue {
    pub fn exact(value: f64, domain: Domain) -> Self {
        BoundedValue {
            value,
            slack: 0.0,
            domain,
        }
    }

    /// A value computed by a handful of f64 operations; slack covers the
    /// last-place rounding of each.
    pub fn rounded(value: f64, ops: u32, domain: Domain) -> Self {
        BoundedValue {
            value,
            slack: ops as f64 * EPS * value.abs().max(1.0),
            domain,
        }
    }

    pub fn with_slack(value: f64, slack: f64, domain: Domain) -> Self {
        debug_assert!(slack >= 0.0);
        BoundedValue {
            value,
            slack,
            domain,
        }
    }

    /// Certified strict inequality: true only if the two slack intervals are
    /// disjoint with self entirely below other.
    pub fn certifies_less_than(&self, other: &BoundedValue) -> bool {
        self.value + self.slack < other.value - other.slack
    }

    /// Upper end of the slack interval.
    pub fn upper(&self) -> f64 {
        self.value + self.slack
    }

    /// Lower end of the slack interval.
    pub fn lower(&self) -> f64 {
        self.value - self.slack
    }

    /// Sum; slack adds, plus one rounding term.
    pub fn add(&self, other: &BoundedValue) -> BoundedValue {
        debug_assert_eq!(self.domain, other.domain);
        let v = self.value + other.value;
        BoundedValue {
            value: v,
            slack: self.slack + other.slack + EPS * v.abs(),
            domain: self.domain,
        }
    }

    pub fn scale(&self, c: f64) -> BoundedValue {
        let v = self.value * c;
        BoundedValue {
            value: v,
            slack: self.slack * c.abs() + EPS * v.abs(),
            domain: self.domain,
        }
    }
}

/// Neumaier-compensated accumulator with a running slack of count·ε·|sum|.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
    count: u64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuild from persisted state (checkpoint resume).
    pub fn from_parts(sum: f64, comp: f64, count: u64) -> Self {
        NeumaierSum { sum, comp, count }
    }

    pub fn parts(&self) -> (f64, f64, u64) {
        (self.sum, self.comp, self.count)
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn slack(&self) -> f64 {
        self.count as f64 * EPS * self.value().abs()
    }

    pub fn bounded(&self, domain: Domain) -> BoundedValue {
        BoundedValue::with_slack(self.value(), self.slack(), domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_comparison_respects_slack() {
        let a = BoundedValue::with_slack(1.0, 0.05, Domain::Linear);
        let b = BoundedValue::with_slack(1.2, 0.05, Domain::Linear);
        assert!(a.certifies_less_than(&b));
        let c = BoundedValue::with_slack(1.11, 0.1, Domain::Linear);
        assert!(!a.certifies_less_than(&c)); // intervals overlap
    }

    #[test]
    fn slack_grows_monotonically_under_add() {
        let a = BoundedValue::with_slack(1.0, 1e-12, Domain::Linear);
        let b = BoundedValue::with_slack(2.0, 2e-12, Domain::Linear);
        let s = a.add(&b);
        assert!(s.slack >= a.slack + b.slack);
        assert!((s.value - 3.0).abs() < 1e-15);
    }

    #[test]
    fn neumaier_is_order_insensitive_within_slack() {
        // 1/p over the first 10^5 integers, summed forward and backward
        let terms: Vec<f64> = (1..100_000u64).map(|n| 1.0 / n as f64).collect();
        let mut fwd = NeumaierSum::new();
        for &t in &terms {
            fwd.add(t);
        }
        let mut bwd = NeumaierSum::new();
        for &t in terms.iter().rev() {
            bwd.add(t);
        }
        assert!((fwd.value() - bwd.value()).abs() <= fwd.slack() + bwd.slack());
    }
}
