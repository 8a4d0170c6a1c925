//! Expected time to extinction.
//!
//! `δ_i` is the expected time to first reach state `i` starting from `i+1`:
//!
//! ```text
//! δ_i = Σ_{n>i} (1/λ_n) Π_{j=i+1}^{n} λ_j/μ_j
//! ω_i = δ_0 + δ_1 + … + δ_{i−1}
//! ```
//!
//! `δ_i` only involves rates of states above `i`. The terms are generated by
//! `t_{i+1} = 1/μ_{i+1}`, `t_{n+1} = t_n · λ_n/μ_{n+1}`, so each series costs
//! one multiply per term.
//!
//! [`omega_naive`] instead starts from `ω_1 = δ_0` and runs the forward
//! recursion `ω_{i+1} = (1 + μ_i/λ_i)·ω_i − (μ_i/λ_i)·ω_{i−1} − 1/λ_i`. Its
//! homogeneous solutions grow like `Π μ_j/λ_j`, so every rounding error in
//! `ω_1` is amplified by that product. For `λ_n = 1, μ_n = n` the output
//! becomes meaningless around `ω_18` in binary64 and around `ω_54` with 70
//! digits.

use crate::arithmetic::{Real, RealContext};
use crate::diagnostics::{first_index, Method, Violation, ViolationKind};
use crate::extinction::{check_context, extinction_sum};
use crate::rates::RateModel;
use crate::series::{sum_positive_series, SeriesOutcome, SeriesPolicy};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HittingClass {
    Finite,
    /// Some `δ_i` diverges; `ω` is `+∞` from that index on.
    Infinite,
    /// Extinction is not certain, so the unconditional mean does not exist.
    NotCertainExtinction,
}

impl HittingClass {
    pub fn as_str(self) -> &'static str {
        match self {
            HittingClass::Finite => "finite",
            HittingClass::Infinite => "infinite",
            HittingClass::NotCertainExtinction => "not_certain_extinction",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HittingTimeReport {
    pub classification: HittingClass,
    /// `δ_0..δ_{i_max−1}`.
    pub delta: Vec<Real>,
    /// `ω_0..ω_{i_max}`, `ω_0 = 0`. Empty for
    /// [`HittingClass::NotCertainExtinction`]; shorter than `i_max + 1` only
    /// when a naive run overflowed.
    pub omega: Vec<Real>,
    pub method: Method,
    pub per_delta_terms: Vec<usize>,
    pub violations: Vec<Violation>,
    /// Certain extinction or an infinite `δ` was only inferred when
    /// `max_terms` ran out.
    pub low_confidence: bool,
}

impl HittingTimeReport {
    pub fn first_violation(&self) -> Option<usize> {
        first_index(&self.violations)
    }

    pub fn terms_used(&self) -> usize {
        self.per_delta_terms.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub enum DeltaOutcome {
    Finite { value: Real, terms: usize },
    Infinite { terms: usize, low_confidence: bool },
}

/// `δ_i` by direct summation.
pub fn delta_series(
    model: &RateModel,
    i: usize,
    policy: &SeriesPolicy,
    ctx: &RealContext,
) -> Result<DeltaOutcome, Error> {
    check_context(model, ctx);
    let first = &ctx.one() / &model.mu(i as u64 + 1)?;
    // term k of the series belongs to state n = i + k
    let summation = sum_positive_series(policy, first, |k| {
        let n = (i + k) as u64;
        Ok(&model.lambda(n)? / &model.mu(n + 1)?)
    })?;
    Ok(match summation.outcome {
        SeriesOutcome::Converged { sum, terms } => DeltaOutcome::Finite { value: sum, terms },
        SeriesOutcome::Diverged { terms, low_confidence } => DeltaOutcome::Infinite { terms, low_confidence },
    })
}

/// Expected extinction times `ω_0..ω_{i_max}` from the `δ` series.
///
/// Returns [`HittingClass::NotCertainExtinction`] without computing anything
/// when the extinction series converges.
pub fn omega_stable(
    model: &RateModel,
    i_max: usize,
    policy: &SeriesPolicy,
    ctx: &RealContext,
) -> Result<HittingTimeReport, Error> {
    check_context(model, ctx);
    if i_max == 0 {
        return Err(Error::InvalidArgument("i_max must be at least 1"));
    }
    let mut report = HittingTimeReport {
        classification: HittingClass::Finite,
        delta: Vec::with_capacity(i_max),
        omega: Vec::with_capacity(i_max + 1),
        method: Method::StableSeries,
        per_delta_terms: Vec::with_capacity(i_max),
        violations: Vec::new(),
        low_confidence: false,
    };
    match extinction_sum(model, policy, ctx)? {
        SeriesOutcome::Converged { .. } => {
            report.classification = HittingClass::NotCertainExtinction;
            return Ok(report);
        }
        SeriesOutcome::Diverged { low_confidence, .. } => report.low_confidence = low_confidence,
    }

    report.omega.push(ctx.zero());
    for i in 0..i_max {
        match delta_series(model, i, policy, ctx)? {
            DeltaOutcome::Finite { value, terms } => {
                let next = &report.omega[i] + &value;
                report.omega.push(next);
                report.delta.push(value);
                report.per_delta_terms.push(terms);
            }
            DeltaOutcome::Infinite { terms, low_confidence } => {
                // every later δ shares the same divergent tail
                report.classification = HittingClass::Infinite;
                report.low_confidence |= low_confidence;
                report.per_delta_terms.push(terms);
                report.delta.resize(i_max, ctx.infinity());
                report.omega.resize(i_max + 1, ctx.infinity());
                report.per_delta_terms.resize(i_max, 0);
                break;
            }
        }
    }
    Ok(report)
}

/// Expected extinction times by the forward recursion, for comparison.
///
/// The values are never repaired. Each index where `ω` is negative, fails to
/// increase, or deviates from the stable value by more than 100% is listed in
/// `violations`. If the stable computation is not [`HittingClass::Finite`],
/// its report is returned relabelled.
pub fn omega_naive(
    model: &RateModel,
    i_max: usize,
    policy: &SeriesPolicy,
    ctx: &RealContext,
) -> Result<HittingTimeReport, Error> {
    let stable = omega_stable(model, i_max, policy, ctx)?;
    if stable.classification != HittingClass::Finite {
        return Ok(HittingTimeReport {
            method: Method::NaiveRecursion,
            ..stable
        });
    }

    let one = ctx.one();
    let mut omega = vec![ctx.zero(), stable.delta[0].clone()];
    let mut violations = Vec::new();
    for i in 1..i_max {
        let (lambda, mu) = model.rates(i as u64)?;
        let r = &mu / &lambda;
        let next = &(&one + &r) * &omega[i] - &r * &omega[i - 1] - &one / &lambda;
        if !next.is_finite() {
            violations.push(Violation {
                index: i + 1,
                kind: ViolationKind::NonFinite,
            });
            break;
        }
        omega.push(next);
    }

    for i in 1..omega.len() {
        let value = &omega[i];
        let reference = &stable.omega[i];
        let mut flag = |kind| violations.push(Violation { index: i, kind });
        if value.is_negative() {
            flag(ViolationKind::Negative);
        }
        if *value <= omega[i - 1] {
            flag(ViolationKind::NonMonotone);
        }
        if (value - reference).abs() > reference.abs() {
            flag(ViolationKind::Deviation);
        }
    }
    violations.sort_by_key(|v| v.index);

    let delta = omega.windows(2).map(|w| &w[1] - &w[0]).collect();
    Ok(HittingTimeReport {
        classification: HittingClass::Finite,
        delta,
        omega,
        method: Method::NaiveRecursion,
        per_delta_terms: vec![stable.per_delta_terms[0]],
        violations,
        low_confidence: stable.low_confidence,
    })
}

/// `ω_i − (λ_i·ω_{i+1} + μ_i·ω_{i−1} + 1)/(λ_i + μ_i)`: zero for a sequence
/// that satisfies the first-step equations.
pub fn recurrence_residual(model: &RateModel, omega: &[Real], i: usize, ctx: &RealContext) -> Result<Real, Error> {
    check_context(model, ctx);
    if i == 0 || i + 1 >= omega.len() {
        return Err(Error::InvalidArgument("need 1 <= i and i + 1 < omega.len()"));
    }
    let (lambda, mu) = model.rates(i as u64)?;
    let step = &lambda * &omega[i + 1] + &mu * &omega[i - 1] + ctx.one();
    Ok(&omega[i] - &(step / (&lambda + &mu)))
}

/// `δ_i − ((μ_i/λ_i)·δ_{i−1} − 1/λ_i)`: zero for a sequence satisfying the
/// first-order recurrence that links consecutive `δ`.
pub fn delta_residual(model: &RateModel, delta: &[Real], i: usize, ctx: &RealContext) -> Result<Real, Error> {
    check_context(model, ctx);
    if i == 0 || i >= delta.len() {
        return Err(Error::InvalidArgument("need 1 <= i < delta.len()"));
    }
    let (lambda, mu) = model.rates(i as u64)?;
    let predicted = &(&mu / &lambda) * &delta[i - 1] - &ctx.one() / &lambda;
    Ok(&delta[i] - &predicted)
}
