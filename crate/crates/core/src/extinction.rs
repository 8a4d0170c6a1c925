//! Probability of ultimate extinction.
//!
//! With `π_k = Π_{n=1}^{k−1} μ_n/λ_n` (so `π_1 = 1`) and `S = Σ_{k≥1} π_k`,
//! the probability of reaching 0 from state `i` is
//!
//! ```text
//! a_i = 1 − Σ_{k≤i} d_k,    d_k = π_k / S
//! ```
//!
//! and `a_i = 1` for every `i` when `S` diverges. Because the `d_k` add up to
//! one, the stable engine evaluates `a_i` as the tail `Σ_{k>i} π_k / S`
//! summed from the smallest term upwards. Subtracting a partial sum from 1
//! would cancel catastrophically once `a_i` drops below the working epsilon.

use crate::arithmetic::{Real, RealContext};
use crate::diagnostics::{first_index, Method, Violation, ViolationKind};
use crate::rates::RateModel;
use crate::series::{sum_positive_series, SeriesOutcome, SeriesPolicy};
use crate::Error;

#[derive(Debug, Clone)]
pub enum ExtinctionClass {
    /// `S` diverges: extinction is certain from every state.
    Certain,
    Uncertain {
        series_sum: Real,
    },
}

#[derive(Debug, Clone)]
pub struct ExtinctionReport {
    pub classification: ExtinctionClass,
    /// `a[0..=i_max]`, with `a[0] = 1`.
    pub a: Vec<Real>,
    /// `d_1..d_{i_max}` stored from position 0; see [`ExtinctionReport::d_at`].
    pub d: Vec<Real>,
    pub terms_used: usize,
    pub method: Method,
    /// Divergence was only inferred when `max_terms` ran out.
    pub low_confidence: bool,
    pub violations: Vec<Violation>,
}

impl ExtinctionReport {
    /// `d_i` for `1 ≤ i ≤ i_max`.
    pub fn d_at(&self, i: usize) -> &Real {
        assert!(i >= 1, "d is indexed from 1");
        &self.d[i - 1]
    }

    pub fn is_certain(&self) -> bool {
        matches!(self.classification, ExtinctionClass::Certain)
    }

    pub fn first_violation(&self) -> Option<usize> {
        first_index(&self.violations)
    }

    fn certain(i_max: usize, outcome: &SeriesOutcome, method: Method, ctx: &RealContext) -> Self {
        let low_confidence = matches!(
            outcome,
            SeriesOutcome::Diverged {
                low_confidence: true,
                ..
            }
        );
        ExtinctionReport {
            classification: ExtinctionClass::Certain,
            a: vec![ctx.one(); i_max + 1],
            d: vec![ctx.zero(); i_max],
            terms_used: outcome.terms(),
            method,
            low_confidence,
            violations: Vec::new(),
        }
    }
}

/// `π_k = Π_{n=1}^{k−1} μ_n/λ_n`; the empty product `π_1` is 1.
pub fn pi_product(model: &RateModel, k: usize, ctx: &RealContext) -> Result<Real, Error> {
    check_context(model, ctx);
    if k == 0 {
        return Err(Error::InvalidArgument("pi_product is defined for k >= 1"));
    }
    let mut pi = ctx.one();
    for n in 1..k {
        let (lambda, mu) = model.rates(n as u64)?;
        pi = pi * (&mu / &lambda);
        if !pi.is_finite() {
            return Err(Error::Overflow {
                what: "pi_product",
                index: n + 1,
            });
        }
    }
    Ok(pi)
}

/// Classifies `S = Σ_{k≥1} π_k` under `policy`.
pub fn extinction_sum(model: &RateModel, policy: &SeriesPolicy, ctx: &RealContext) -> Result<SeriesOutcome, Error> {
    check_context(model, ctx);
    Ok(pi_series(model, policy, ctx)?.outcome)
}

fn pi_series(model: &RateModel, policy: &SeriesPolicy, ctx: &RealContext) -> Result<crate::series::Summation, Error> {
    sum_positive_series(policy, ctx.one(), |k| {
        let (lambda, mu) = model.rates(k as u64)?;
        Ok(&mu / &lambda)
    })
}

/// Extinction probabilities `a_0..a_{i_max}` by direct series evaluation.
pub fn extinction_probabilities(
    model: &RateModel,
    i_max: usize,
    policy: &SeriesPolicy,
    ctx: &RealContext,
) -> Result<ExtinctionReport, Error> {
    check_context(model, ctx);
    let summation = pi_series(model, policy, ctx)?;
    if !summation.outcome.is_converged() {
        return Ok(ExtinctionReport::certain(
            i_max,
            &summation.outcome,
            Method::StableSeries,
            ctx,
        ));
    }

    // The classification pass may stop before i_max, and its tail test only
    // bounds the error relative to S. Extend the terms until the tail beyond
    // i_max is itself resolved to rel_tol, then for at most one more window
    // while new terms still register in the tail, so that fast tails come out
    // correctly rounded.
    let mut pis = summation.terms;
    let mut tail = pis[i_max.min(pis.len())..].iter().fold(ctx.zero(), |acc, t| acc + t);
    let mut polish = 0;
    loop {
        let m = pis.len();
        let last = &pis[m - 1];
        let resolved = m > i_max && (last.is_zero() || last < &(policy.rel_tol() * &tail));
        if resolved {
            if polish == policy.divergence_window() {
                break;
            }
            polish += 1;
        }
        if m >= policy.max_terms() + i_max {
            return Err(Error::Inconclusive { terms: m });
        }
        let (lambda, mu) = model.rates(m as u64)?;
        let next = last * &(&mu / &lambda);
        let stalled = m >= i_max && (&tail + &next).identical(&tail);
        if m >= i_max {
            tail = tail + &next;
        }
        if !next.is_finite() || !tail.is_finite() {
            // the terms turned around and grew past the representable range:
            // the early convergence verdict was wrong and S diverges
            let outcome = SeriesOutcome::Diverged {
                terms: m + 1,
                low_confidence: false,
            };
            return Ok(ExtinctionReport::certain(i_max, &outcome, Method::StableSeries, ctx));
        }
        pis.push(next);
        if resolved && stalled {
            break;
        }
    }

    // tails[i] = Σ_{k>i} π_k, accumulated from the smallest terms
    let mut tails = vec![ctx.zero(); i_max + 1];
    let mut acc = ctx.zero();
    for k in (1..=pis.len()).rev() {
        acc = acc + &pis[k - 1];
        if k - 1 <= i_max {
            tails[k - 1] = acc.clone();
        }
    }
    let series_sum = tails[0].clone();

    let mut a = Vec::with_capacity(i_max + 1);
    a.push(ctx.one());
    for tail in &tails[1..] {
        a.push(tail / &series_sum);
    }
    let d = a.windows(2).map(|w| &w[0] - &w[1]).collect();

    Ok(ExtinctionReport {
        classification: ExtinctionClass::Uncertain { series_sum },
        a,
        d,
        terms_used: pis.len(),
        method: Method::StableSeries,
        low_confidence: false,
        violations: Vec::new(),
    })
}

/// Extinction probabilities from `a_1 = 1 − 1/S` and the forward recursion
/// `a_{i+1} = (1 + μ_i/λ_i)·a_i − (μ_i/λ_i)·a_{i−1}`.
///
/// Values outside `[0, 1]` are kept as computed and listed in
/// `violations`.
pub fn extinction_probabilities_naive(
    model: &RateModel,
    i_max: usize,
    policy: &SeriesPolicy,
    ctx: &RealContext,
) -> Result<ExtinctionReport, Error> {
    check_context(model, ctx);
    let outcome = extinction_sum(model, policy, ctx)?;
    let SeriesOutcome::Converged { sum, terms } = &outcome else {
        return Ok(ExtinctionReport::certain(i_max, &outcome, Method::NaiveRecursion, ctx));
    };

    let one = ctx.one();
    let mut a = vec![one.clone()];
    let mut violations = Vec::new();
    if i_max >= 1 {
        a.push(&one - &(&one / sum));
    }
    for i in 1..i_max {
        let (lambda, mu) = model.rates(i as u64)?;
        let r = &mu / &lambda;
        let next = &(&one + &r) * &a[i] - &r * &a[i - 1];
        if !next.is_finite() {
            violations.push(Violation {
                index: i + 1,
                kind: ViolationKind::NonFinite,
            });
            break;
        }
        a.push(next);
    }
    for (index, value) in a.iter().enumerate() {
        let kind = if value.is_negative() {
            ViolationKind::Negative
        } else if *value > one {
            ViolationKind::AboveOne
        } else {
            continue;
        };
        violations.push(Violation { index, kind });
    }
    violations.sort_by_key(|v| v.index);
    let d = a.windows(2).map(|w| &w[0] - &w[1]).collect();

    Ok(ExtinctionReport {
        classification: ExtinctionClass::Uncertain {
            series_sum: sum.clone(),
        },
        a,
        d,
        terms_used: *terms,
        method: Method::NaiveRecursion,
        low_confidence: false,
        violations,
    })
}

#[track_caller]
pub(crate) fn check_context(model: &RateModel, ctx: &RealContext) {
    assert_eq!(
        model.context(),
        *ctx,
        "model and computation use different precision contexts"
    );
}
