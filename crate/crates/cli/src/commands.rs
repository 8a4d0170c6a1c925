use anyhow::{anyhow, Context, Result};
use birthdeath::extinction::{extinction_probabilities, extinction_probabilities_naive};
use birthdeath::hitting_time::{omega_naive, omega_stable};
use birthdeath::rates::{expr_model, Rate};
use birthdeath::simulate::simulate;
use birthdeath::{
    Error, ExtinctionClass, ExtinctionReport, HittingClass, HittingTimeReport, Method, ModelError, RateModel, Real,
    RealContext, SeriesPolicy, Violation,
};
use serde_json::{json, Value};

use crate::report::{Column, Format, Report};
use crate::{Command, CompareArgs, DemoArgs, EngineArgs, ModelArgs, SeriesArgs, SimulateArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    /// A series exhausted its term budget; the report says "inconclusive".
    Inconclusive(usize),
}

pub type Outcome = (Report, Format, Status);

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Prob(args) => prob(args),
        Command::Time(args) => time(args),
        Command::Compare(args) => compare(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::DemoInstability(args) => demo(args),
    }
}

fn context(digits: Option<u32>) -> Result<RealContext> {
    match digits {
        None => Ok(RealContext::machine()),
        Some(d) => RealContext::extended(d).with_context(|| format!("invalid --digits {d}")),
    }
}

/// Parses both rate expressions; a syntax error is shown with a caret under
/// the offending byte.
fn model(args: &ModelArgs, ctx: &RealContext) -> Result<RateModel> {
    expr_model(&args.lambda, &args.mu, ctx).map_err(|err| match &err {
        ModelError::Parse { which, source } => {
            let text = match which {
                Rate::Birth => &args.lambda,
                Rate::Death => &args.mu,
            };
            let column = text.get(..source.offset).map_or(source.offset, |s| s.chars().count());
            anyhow!("{err}\n  {text}\n  {:column$}^", "")
        }
        _ => anyhow!(err),
    })
}

fn policy(args: &SeriesArgs, ctx: &RealContext) -> Result<SeriesPolicy> {
    let mut policy = SeriesPolicy::default_for(ctx);
    if let Some(tol) = &args.tol {
        let tol = ctx.parse_decimal(tol).with_context(|| format!("invalid --tol {tol}"))?;
        policy = policy.with_rel_tol(tol).context("invalid --tol")?;
    }
    if let Some(max_terms) = args.max_terms {
        policy = policy.with_max_terms(max_terms).context("invalid --max-terms")?;
    }
    Ok(policy)
}

fn precision(ctx: &RealContext) -> Value {
    match ctx.digits() {
        None => json!({ "mode": "machine", "digits": null }),
        Some(d) => json!({ "mode": "extended", "digits": d }),
    }
}

fn header(args: &ModelArgs, method: impl Into<Value>, classification: &str, ctx: &RealContext) -> Report {
    let mut report = Report::default();
    report
        .head("model", json!({ "lambda": args.lambda, "mu": args.mu }))
        .head("method", method)
        .head("classification", classification)
        .head("precision", precision(ctx));
    report
}

fn decimals(values: &[Real]) -> Vec<String> {
    values.iter().map(Real::to_decimal_string).collect()
}

fn violations(list: &[Violation]) -> Option<Vec<(usize, String)>> {
    Some(list.iter().map(|v| (v.index, v.kind.as_str().to_string())).collect())
}

fn inconclusive(args: &ModelArgs, method: impl Into<Value>, ctx: &RealContext, terms: usize) -> Result<Outcome> {
    let mut report = header(args, method, "inconclusive", ctx);
    report.tail("terms_used", terms);
    Ok((report, args.format, Status::Inconclusive(terms)))
}

fn method_of(naive: bool) -> Method {
    if naive {
        Method::NaiveRecursion
    } else {
        Method::StableSeries
    }
}

fn extinction_class(report: &ExtinctionReport) -> &'static str {
    match report.classification {
        ExtinctionClass::Certain => "certain",
        ExtinctionClass::Uncertain { .. } => "uncertain",
    }
}

fn prob(args: EngineArgs) -> Result<Outcome> {
    let ctx = context(args.digits)?;
    let model = model(&args.model, &ctx)?;
    let policy = policy(&args.series, &ctx)?;
    let method = method_of(args.naive);
    let engine = if args.naive {
        extinction_probabilities_naive
    } else {
        extinction_probabilities
    };
    let result = match engine(&model, args.imax, &policy, &ctx) {
        Err(Error::Inconclusive { terms }) => return inconclusive(&args.model, method.as_str(), &ctx, terms),
        other => other?,
    };

    let mut report = header(&args.model, method.as_str(), extinction_class(&result), &ctx);
    report.columns = vec![
        Column::decimals("a", 0, decimals(&result.a)),
        Column::decimals("d", 1, decimals(&result.d)),
    ];
    report.violations = violations(&result.violations);
    let series_sum = match &result.classification {
        ExtinctionClass::Uncertain { series_sum } => series_sum.to_decimal_string().into(),
        ExtinctionClass::Certain => Value::Null,
    };
    report
        .tail("series_sum", series_sum)
        .tail("terms_used", result.terms_used)
        .tail("low_confidence", result.low_confidence);
    Ok((report, args.model.format, Status::Done))
}

fn time(args: EngineArgs) -> Result<Outcome> {
    let ctx = context(args.digits)?;
    let model = model(&args.model, &ctx)?;
    let policy = policy(&args.series, &ctx)?;
    let method = method_of(args.naive);
    let engine = if args.naive { omega_naive } else { omega_stable };
    let result = match engine(&model, args.imax, &policy, &ctx) {
        Err(Error::Inconclusive { terms }) => return inconclusive(&args.model, method.as_str(), &ctx, terms),
        other => other?,
    };

    let mut report = header(&args.model, method.as_str(), result.classification.as_str(), &ctx);
    report.columns = vec![
        Column::decimals("delta", 0, decimals(&result.delta)),
        Column::decimals("omega", 0, decimals(&result.omega)),
    ];
    report.violations = violations(&result.violations);
    report
        .tail("terms_used", result.terms_used())
        .tail("low_confidence", result.low_confidence);
    Ok((report, args.model.format, Status::Done))
}

/// `|naive − stable| / |stable|`, with 0 for identical values and `inf` when
/// the reference is zero or either side is infinite.
fn relative_deviation(stable: &Real, naive: &Real) -> Real {
    let ctx = stable.context();
    if stable.identical(naive) {
        ctx.zero()
    } else if !stable.is_finite() || !naive.is_finite() || stable.is_zero() {
        ctx.infinity()
    } else {
        ((naive - stable) / stable.clone()).abs()
    }
}

fn compare(args: CompareArgs) -> Result<Outcome> {
    let ctx = context(args.digits)?;
    let model = model(&args.model, &ctx)?;
    let policy = policy(&args.series, &ctx)?;
    let methods = json!({ "stable": Method::StableSeries.as_str(), "naive": Method::NaiveRecursion.as_str() });

    let computed = (|| -> Result<_, Error> {
        let extinction = extinction_probabilities(&model, args.imax, &policy, &ctx)?;
        if extinction.is_certain() {
            let stable = omega_stable(&model, args.imax, &policy, &ctx)?;
            let naive = omega_naive(&model, args.imax, &policy, &ctx)?;
            Ok(Comparison::omega(stable, naive))
        } else {
            let naive = extinction_probabilities_naive(&model, args.imax, &policy, &ctx)?;
            Ok(Comparison::extinction(extinction, naive))
        }
    })();
    let cmp = match computed {
        Err(Error::Inconclusive { terms }) => return inconclusive(&args.model, methods, &ctx, terms),
        other => other?,
    };

    let deviation: Vec<Real> = cmp
        .stable
        .iter()
        .zip(&cmp.naive)
        .map(|(s, n)| relative_deviation(s, n))
        .collect();
    let one = ctx.one();
    let diverging = deviation.iter().position(|d| *d > one);
    let first_breakdown = cmp.violations.iter().map(|v| v.index).chain(diverging).min();

    let mut report = header(&args.model, methods, &cmp.classification, &ctx);
    report.head("quantity", cmp.quantity);
    report.columns = vec![
        Column::decimals(format!("stable_{}", cmp.quantity), 0, decimals(&cmp.stable)),
        Column::decimals(format!("naive_{}", cmp.quantity), 0, decimals(&cmp.naive)),
        Column::decimals("relative_deviation", 0, decimals(&deviation)),
    ];
    report.violations = violations(&cmp.violations);
    report
        .tail("first_breakdown", first_breakdown)
        .tail("terms_used", cmp.terms_used);
    Ok((report, args.model.format, Status::Done))
}

struct Comparison {
    quantity: &'static str,
    classification: String,
    stable: Vec<Real>,
    naive: Vec<Real>,
    violations: Vec<Violation>,
    terms_used: usize,
}

impl Comparison {
    fn omega(stable: HittingTimeReport, naive: HittingTimeReport) -> Self {
        Comparison {
            quantity: "omega",
            classification: stable.classification.as_str().into(),
            terms_used: stable.terms_used(),
            stable: stable.omega,
            naive: naive.omega,
            violations: naive.violations,
        }
    }

    fn extinction(stable: ExtinctionReport, naive: ExtinctionReport) -> Self {
        Comparison {
            quantity: "a",
            classification: extinction_class(&stable).into(),
            terms_used: stable.terms_used,
            stable: stable.a,
            naive: naive.a,
            violations: naive.violations,
        }
    }
}

fn float(x: f64) -> Value {
    format!("{x:?}").into()
}

fn simulate_cmd(args: SimulateArgs) -> Result<Outcome> {
    let ctx = context(args.digits)?;
    let model = model(&args.model, &ctx)?;
    let stats = simulate(&model, args.imax, args.runs, args.time_cap, args.seed)?;

    let mut report = Report::default();
    report
        .head("model", json!({ "lambda": args.model.lambda, "mu": args.model.mu }))
        .head("method", "monte_carlo")
        .head("precision", precision(&ctx))
        .tail("start_state", stats.start_state)
        .tail("runs", stats.runs)
        .tail("extinct_runs", stats.extinct_runs)
        .tail("censored_runs", stats.censored_runs)
        .tail("time_cap", float(stats.time_cap))
        .tail(
            "extinction_probability_estimate",
            float(stats.extinction_probability_estimate),
        )
        .tail("std_error_prob", float(stats.std_error_prob))
        .tail("mean_time_estimate", stats.mean_time_estimate.map(float))
        .tail("std_error_time", stats.std_error_time.map(float))
        .tail("seed", stats.seed);
    Ok((report, args.model.format, Status::Done))
}

fn demo(args: DemoArgs) -> Result<Outcome> {
    let mut contexts = vec![RealContext::machine()];
    for &d in &args.digits {
        contexts.push(context(Some(d))?);
    }

    let mut columns: [Vec<Value>; 6] = Default::default();
    for ctx in &contexts {
        let model = model(&args.model, ctx)?;
        let policy = policy(&args.series, ctx)?;
        let computed = omega_stable(&model, args.imax, &policy, ctx)
            .and_then(|stable| Ok((omega_naive(&model, args.imax, &policy, ctx)?, stable)));
        let (naive, stable) = match computed {
            Err(Error::Inconclusive { terms }) => {
                return inconclusive(&args.model, Method::NaiveRecursion.as_str(), ctx, terms)
            }
            other => other?,
        };
        if stable.classification != HittingClass::Finite {
            return Err(anyhow!(
                "expected extinction time is {} for this model; nothing to demonstrate",
                stable.classification.as_str()
            ));
        }
        let first = naive.violations.first();
        let at = |values: &[Real]| -> Value {
            first
                .and_then(|v| values.get(v.index))
                .map_or(Value::Null, |x| x.to_decimal_string().into())
        };
        let precision = precision(ctx);
        let row = [
            precision["mode"].clone(),
            precision["digits"].clone(),
            first.map(|v| v.index).into(),
            first.map(|v| v.kind.as_str()).into(),
            at(&naive.omega),
            at(&stable.omega),
        ];
        for (column, value) in columns.iter_mut().zip(row) {
            column.push(value);
        }
    }

    let mut report = Report {
        unindexed: true,
        ..Report::default()
    };
    report
        .head("model", json!({ "lambda": args.model.lambda, "mu": args.model.mu }))
        .head("method", Method::NaiveRecursion.as_str())
        .head("quantity", "omega")
        .head("imax", args.imax);
    let names = [
        "mode",
        "digits",
        "first_violation",
        "kind",
        "naive_omega",
        "stable_omega",
    ];
    report.columns = names
        .iter()
        .zip(columns)
        .map(|(name, values)| Column::new(*name, 0, values))
        .collect();
    Ok((report, args.model.format, Status::Done))
}
