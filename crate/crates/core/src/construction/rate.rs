use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A target rate `a_n`, positive and nonincreasing in `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateSequence {
    /// `a_n = c · n^(-beta)`.
    PowerLaw { c: f64, beta: f64 },
    /// `a_n = c · ln(n + e)^(-beta)`; decays slower than any power.
    InverseLog { c: f64, beta: f64 },
}

/// Search grid for schedule probe times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchGrid {
    Integers,
    /// Powers of two only.
    Dyadic,
}

impl RateSequence {
    pub fn power_law(c: f64, beta: f64) -> Self {
        RateSequence::PowerLaw { c, beta }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, beta) = match *self {
            RateSequence::PowerLaw { c, beta } | RateSequence::InverseLog { c, beta } => (c, beta),
        };
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidRate(format!("c = {c} must be positive")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidRate(format!("beta = {beta} must be >= 0")));
        }
        Ok(())
    }

    /// `a_n`; `n = 0` is evaluated as `n = 1`.
    pub fn value(&self, n: u64) -> f64 {
        let x = n.max(1) as f64;
        match *self {
            RateSequence::PowerLaw { c, beta } => c * x.powf(-beta),
            RateSequence::InverseLog { c, beta } => c * (x + std::f64::consts::E).ln().powf(-beta),
        }
    }

    /// False when the sequence does not visibly decay over `[n, 4n]`.
    pub fn decays_near(&self, n: u64) -> bool {
        self.value(4 * n.max(1)) < self.value(n)
    }

    /// Smallest grid point `n > after`, `n <= cap`, whose `a_n` satisfies
    /// `accept`. `accept` must be monotone (false, then true) along a
    /// nonincreasing sequence.
    pub fn first_accepted(
        &self,
        after: u64,
        cap: u64,
        grid: SearchGrid,
        accept: impl Fn(f64) -> bool,
    ) -> Option<u64> {
        match grid {
            SearchGrid::Dyadic => {
                let mut n = 1u64;
                while n <= after {
                    n = n.checked_mul(2)?;
                }
                while n <= cap {
                    if accept(self.value(n)) {
                        return Some(n);
                    }
                    n = n.checked_mul(2)?;
                }
                None
            }
            SearchGrid::Integers => {
                let lo = after + 1;
                if lo > cap {
                    return None;
                }
                if accept(self.value(lo)) {
                    return Some(lo);
                }
                // Exponential search for an accepted point, then bisection.
                let mut bad = lo;
                let mut step = 1u64;
                let good = loop {
                    let probe = bad.saturating_add(step).min(cap);
                    if accept(self.value(probe)) {
                        break probe;
                    }
                    if probe == cap {
                        return None;
                    }
                    bad = probe;
                    step = step.saturating_mul(2);
                };
                let (mut bad, mut good) = (bad, good);
                while good - bad > 1 {
                    let mid = bad + (good - bad) / 2;
                    if accept(self.value(mid)) {
                        good = mid;
                    } else {
                        bad = mid;
                    }
                }
                Some(good)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        let a = RateSequence::power_law(0.5, 0.5);
        assert_eq!(a.value(16), 0.125);
        assert_eq!(a.value(0), a.value(1));
        assert!(a.decays_near(10));
        assert!(!RateSequence::power_law(0.3, 0.0).decays_near(10));
        assert!(RateSequence::power_law(-1.0, 1.0).validate().is_err());
        assert!(RateSequence::power_law(1.0, -1.0).validate().is_err());
    }

    #[test]
    fn searches() {
        let a = RateSequence::power_law(0.5, 0.5);
        let n = a.first_accepted(0, 1 << 20, SearchGrid::Integers, |v| v <= 0.125);
        assert_eq!(n, Some(16));
        let n = a.first_accepted(16, 1 << 20, SearchGrid::Integers, |v| v <= 0.125);
        assert_eq!(n, Some(17));
        let n = a.first_accepted(0, 1 << 20, SearchGrid::Integers, |v| v < 0.0625);
        assert_eq!(n, Some(65));
        let n = a.first_accepted(16, 1 << 20, SearchGrid::Dyadic, |v| v <= 0.1);
        assert_eq!(n, Some(32));
        let n = a.first_accepted(0, 100, SearchGrid::Integers, |v| v <= 0.01);
        assert_eq!(n, None);
        // Brute-force agreement.
        let b = RateSequence::InverseLog { c: 0.9, beta: 2.0 };
        for thr in [0.5, 0.3, 0.2, 0.15] {
            let want = (1..10_000u64).find(|&n| b.value(n) <= thr);
            assert_eq!(
                b.first_accepted(0, 10_000, SearchGrid::Integers, |v| v <= thr),
                want
            );
        }
    }
}
