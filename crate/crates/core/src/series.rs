//! Truncation of positive infinite series.
//!
//! Every infinite sum in this crate has positive terms generated by a ratio
//! recurrence `t_{k+1} = t_k · r_k`. A [`SeriesPolicy`] decides when such a
//! sum has converged, when it diverges, and when the evidence is too weak to
//! say either.
//!
//! * Converged: the current term is below `rel_tol` times the partial sum and
//!   the last `divergence_window` ratios were all below 1.
//! * Diverged: the last `divergence_window` ratios were all at least
//!   `divergence_ratio` and the ratio is not falling across the window, or
//!   the partial sum leaves the representable range.
//! * At `max_terms`: a sum whose terms did not shrink over the last window is
//!   reported as a low-confidence divergence; anything else is
//!   [`Error::Inconclusive`].

use std::collections::VecDeque;

use crate::arithmetic::{Real, RealContext};
use crate::Error;

/// Rules for truncating a positive series.
#[derive(Debug, Clone)]
pub struct SeriesPolicy {
    rel_tol: Real,
    max_terms: usize,
    divergence_ratio: Real,
    divergence_window: usize,
}

pub const DEFAULT_MAX_TERMS: usize = 1_000_000;
pub const DEFAULT_DIVERGENCE_WINDOW: usize = 64;

impl SeriesPolicy {
    pub fn new(
        rel_tol: Real,
        max_terms: usize,
        divergence_ratio: Real,
        divergence_window: usize,
    ) -> Result<SeriesPolicy, Error> {
        let ctx = rel_tol.context();
        assert_eq!(ctx, divergence_ratio.context(), "policy values from different contexts");
        if !(rel_tol.is_positive() && rel_tol < ctx.one()) {
            return Err(Error::InvalidPolicy("rel_tol must lie strictly between 0 and 1"));
        }
        if divergence_ratio < ctx.one() || divergence_ratio.is_infinite() {
            return Err(Error::InvalidPolicy("divergence_ratio must be at least 1"));
        }
        if divergence_window == 0 {
            return Err(Error::InvalidPolicy("divergence_window must be at least 1"));
        }
        if max_terms < divergence_window {
            return Err(Error::InvalidPolicy("max_terms must be at least divergence_window"));
        }
        Ok(SeriesPolicy {
            rel_tol,
            max_terms,
            divergence_ratio,
            divergence_window,
        })
    }

    /// `rel_tol` is `1e-14` at machine precision and `10^-(digits-2)` with
    /// extended precision; `max_terms = 10^6`, `divergence_ratio = 1`,
    /// `divergence_window = 64`.
    pub fn default_for(ctx: &RealContext) -> SeriesPolicy {
        let rel_tol = match ctx.digits() {
            None => ctx.parse_decimal("1e-14"),
            Some(digits) => ctx.parse_decimal(&format!("1e-{}", digits - 2)),
        }
        .expect("well-formed literal");
        SeriesPolicy {
            rel_tol,
            max_terms: DEFAULT_MAX_TERMS,
            divergence_ratio: ctx.one(),
            divergence_window: DEFAULT_DIVERGENCE_WINDOW,
        }
    }

    pub fn with_rel_tol(self, rel_tol: Real) -> Result<SeriesPolicy, Error> {
        SeriesPolicy::new(rel_tol, self.max_terms, self.divergence_ratio, self.divergence_window)
    }

    pub fn with_max_terms(self, max_terms: usize) -> Result<SeriesPolicy, Error> {
        SeriesPolicy::new(self.rel_tol, max_terms, self.divergence_ratio, self.divergence_window)
    }

    pub fn with_divergence(self, ratio: Real, window: usize) -> Result<SeriesPolicy, Error> {
        SeriesPolicy::new(self.rel_tol, self.max_terms, ratio, window)
    }

    pub fn rel_tol(&self) -> &Real {
        &self.rel_tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn divergence_ratio(&self) -> &Real {
        &self.divergence_ratio
    }

    pub fn divergence_window(&self) -> usize {
        self.divergence_window
    }

    pub fn context(&self) -> RealContext {
        self.rel_tol.context()
    }
}

#[derive(Debug, Clone)]
pub enum SeriesOutcome {
    Converged {
        sum: Real,
        terms: usize,
    },
    /// `low_confidence` marks a verdict reached only because `max_terms` ran
    /// out while the terms were not shrinking.
    Diverged {
        terms: usize,
        low_confidence: bool,
    },
}

impl SeriesOutcome {
    pub fn terms(&self) -> usize {
        match self {
            SeriesOutcome::Converged { terms, .. } | SeriesOutcome::Diverged { terms, .. } => *terms,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, SeriesOutcome::Converged { .. })
    }
}

/// A classified sum together with every term generated on the way.
pub(crate) struct Summation {
    pub outcome: SeriesOutcome,
    pub terms: Vec<Real>,
}

/// Sums `first + first·r_1 + first·r_1·r_2 + …` where `ratio(k)` returns the
/// ratio of term `k+1` to term `k` (terms counted from 1).
///
/// A converged sum is re-added from the smallest term up, which keeps the
/// rounding error of the result near one unit in the last place.
pub(crate) fn sum_positive_series<F>(policy: &SeriesPolicy, first: Real, mut ratio: F) -> Result<Summation, Error>
where
    F: FnMut(usize) -> Result<Real, Error>,
{
    let ctx = policy.context();
    assert_eq!(ctx, first.context(), "series term outside the policy's context");
    let one = ctx.one();
    let window = policy.divergence_window;

    let mut term = first.clone();
    let mut running = first.clone();
    let mut terms = vec![first];
    let mut recent: VecDeque<Real> = VecDeque::with_capacity(window + 1);
    let mut below_run = 0usize;
    let mut above_run = 0usize;

    loop {
        let count = terms.len();
        if below_run >= window && term < &policy.rel_tol * &running {
            let sum = terms.iter().rev().fold(ctx.zero(), |acc, t| acc + t);
            return Ok(Summation {
                outcome: SeriesOutcome::Converged { sum, terms: count },
                terms,
            });
        }
        if above_run >= window && recent.back() >= recent.front() {
            return Ok(diverged(count, false, terms));
        }
        if count >= policy.max_terms {
            let earlier = &terms[count - 1 - window.min(count - 1)];
            if term >= *earlier {
                return Ok(diverged(count, true, terms));
            }
            return Err(Error::Inconclusive { terms: count });
        }

        let r = ratio(count)?;
        below_run = if r < one { below_run + 1 } else { 0 };
        above_run = if r >= policy.divergence_ratio { above_run + 1 } else { 0 };
        term = &term * &r;
        running = &running + &term;
        if !term.is_finite() || !running.is_finite() {
            return Ok(diverged(count + 1, false, terms));
        }
        terms.push(term.clone());
        recent.push_back(r);
        if recent.len() > window {
            recent.pop_front();
        }
    }
}

fn diverged(terms_used: usize, low_confidence: bool, terms: Vec<Real>) -> Summation {
    Summation {
        outcome: SeriesOutcome::Diverged {
            terms: terms_used,
            low_confidence,
        },
        terms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine_policy() -> SeriesPolicy {
        SeriesPolicy::default_for(&RealContext::machine())
    }

    fn constant_ratio(policy: &SeriesPolicy, r: &str) -> Result<Summation, Error> {
        let ctx = policy.context();
        let r = ctx.parse_decimal(r).unwrap();
        sum_positive_series(policy, ctx.one(), |_| Ok(r.clone()))
    }

    #[test]
    fn default_policies() {
        let p = machine_policy();
        assert_eq!(p.rel_tol().to_f64(), 1e-14);
        assert_eq!(p.max_terms(), 1_000_000);
        assert_eq!(p.divergence_window(), 64);
        let ctx = RealContext::extended(70).unwrap();
        assert_eq!(SeriesPolicy::default_for(&ctx).rel_tol().to_string(), "1e-68");
    }

    #[test]
    fn policy_validation() {
        let ctx = RealContext::machine();
        let p = machine_policy();
        assert!(p.clone().with_rel_tol(ctx.one()).is_err());
        assert!(p.clone().with_rel_tol(ctx.zero()).is_err());
        assert!(p.clone().with_max_terms(10).is_err());
        assert!(p.clone().with_divergence(ctx.parse_decimal("0.5").unwrap(), 4).is_err());
        assert!(p.clone().with_divergence(ctx.one(), 0).is_err());
        assert!(p.with_max_terms(64).is_ok());
    }

    #[test]
    fn geometric_series_converges() {
        let s = constant_ratio(&machine_policy(), "0.5").unwrap();
        match s.outcome {
            SeriesOutcome::Converged { sum, terms } => {
                assert_eq!(sum.to_f64(), 2.0);
                assert_eq!(terms, 65);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ratio_one_diverges_after_one_window() {
        let s = constant_ratio(&machine_policy(), "1").unwrap();
        assert!(matches!(
            s.outcome,
            SeriesOutcome::Diverged {
                terms: 65,
                low_confidence: false
            }
        ));
    }

    #[test]
    fn overflow_counts_as_divergence() {
        let p = machine_policy()
            .with_divergence(RealContext::machine().from_u64(1000), 64)
            .unwrap();
        let s = constant_ratio(&p, "1e300").unwrap();
        assert!(matches!(
            s.outcome,
            SeriesOutcome::Diverged {
                low_confidence: false,
                ..
            }
        ));
    }

    #[test]
    fn falling_ratios_above_one_are_not_divergence() {
        // term ratios 100/k: the terms grow for a hundred steps, then the
        // series converges to e^100
        let ctx = RealContext::machine();
        let s = sum_positive_series(&machine_policy(), ctx.one(), |k| {
            Ok(&ctx.from_u64(100) / &ctx.from_u64(k as u64))
        })
        .unwrap();
        match s.outcome {
            SeriesOutcome::Converged { sum, .. } => {
                let rel = (sum.to_f64() - 100f64.exp()).abs() / 100f64.exp();
                assert!(rel < 1e-13, "{rel}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn harmonic_tail_is_inconclusive() {
        // terms 1/k: shrinking, but far too slowly to pass the tail test
        let ctx = RealContext::machine();
        let p = machine_policy().with_max_terms(5000).unwrap();
        let result = sum_positive_series(&p, ctx.one(), |k| {
            Ok(&ctx.from_u64(k as u64) / &ctx.from_u64(k as u64 + 1))
        });
        assert!(matches!(result, Err(Error::Inconclusive { terms: 5000 })));
    }

    #[test]
    fn slowly_growing_terms_are_low_confidence_divergence() {
        // terms k: ratios (k+1)/k fall towards 1 from above
        let ctx = RealContext::machine();
        let p = machine_policy().with_max_terms(5000).unwrap();
        let s = sum_positive_series(&p, ctx.one(), |k| {
            Ok(&ctx.from_u64(k as u64 + 1) / &ctx.from_u64(k as u64))
        })
        .unwrap();
        assert!(matches!(
            s.outcome,
            SeriesOutcome::Diverged {
                terms: 5000,
                low_confidence: true
            }
        ));
    }

    #[test]
    fn oscillating_ratios_at_the_cap() {
        // ratios alternate 3 and 1/4: the terms shrink overall, slowly
        let ctx = RealContext::machine();
        let p = machine_policy().with_max_terms(200).unwrap();
        let (up, down) = (ctx.from_u64(3), ctx.parse_decimal("0.25").unwrap());
        let result = sum_positive_series(&p, ctx.one(), |k| {
            Ok(if k % 2 == 0 { up.clone() } else { down.clone() })
        });
        assert!(matches!(result, Err(Error::Inconclusive { .. })));
    }
}
