//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use birthdeath::arithmetic::{Real, RealContext};
use birthdeath::extinction::{extinction_probabilities, extinction_probabilities_naive};
use birthdeath::hitting_time::{
    delta_residual, delta_series, omega_naive, omega_stable, recurrence_residual, DeltaOutcome, HittingClass,
};
use birthdeath::rates::{constant_model, expr_model, RateModel};
use birthdeath::series::SeriesPolicy;
use birthdeath::simulate::simulate;
use birthdeath::{ExtinctionClass, ExtinctionReport, HittingTimeReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

/// e to 100 significant digits.
const E_100: &str =
    "2.718281828459045235360287471352662497757247093699959574966967627724076630353547594571382178525166427";

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("omega_1 oracle", 1, criterion_1),
        ("naive breakdown, binary64", 1, criterion_2),
        ("naive breakdown, 70 digits", 10, criterion_3),
        ("stable omega up to 500", 30, criterion_4),
        ("constant-rate closed forms", 1, criterion_5),
        ("divergence semantics", 1, criterion_6),
        ("Monte Carlo cross-validation", 60, criterion_7),
        ("property suites", 120, criterion_8),
        ("determinism", u64::MAX, criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, limit, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let mut outcome = check();
        let elapsed = started.elapsed();
        if outcome.is_ok() && elapsed > Duration::from_secs(*limit) {
            outcome = Err(format!("took {elapsed:.2?}, limit {limit} s"));
        }
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} ({elapsed:.2?})", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why} ({elapsed:.2?})", k + 1);
            }
        }
    }
    if failed == 0 {
        println!("all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ext(digits: u32) -> RealContext {
    RealContext::extended(digits).unwrap()
}

fn unit_birth_linear_death(ctx: &RealContext) -> RateModel {
    expr_model("1", "n", ctx).unwrap()
}

fn constant(lam: u64, mu: u64) -> RateModel {
    let ctx = RealContext::machine();
    constant_model(ctx.from_u64(lam), ctx.from_u64(mu)).unwrap()
}

fn rel(a: &Real, b: &Real) -> Real {
    ((a - b) / b.clone()).abs()
}

fn stable(model: &RateModel, i_max: usize, ctx: &RealContext) -> Result<HittingTimeReport, String> {
    omega_stable(model, i_max, &SeriesPolicy::default_for(ctx), ctx).map_err(|e| e.to_string())
}

fn criterion_1() -> Outcome {
    let ctx = RealContext::machine();
    let omega = &stable(&unit_birth_linear_death(&ctx), 1, &ctx)?.omega;
    let expected = std::f64::consts::E - 1.0;
    let r64 = (omega[1].to_f64() - expected).abs() / expected;
    ensure(r64 <= 1e-12, || format!("binary64 relative error {r64:e}"))?;

    let ctx = ext(30);
    let omega = &stable(&unit_birth_linear_death(&ctx), 1, &ctx)?.omega;
    let wide = ext(100);
    let expected = wide.parse_decimal(E_100).unwrap() - wide.one();
    let got = wide.parse_decimal(&omega[1].to_decimal_string()).unwrap();
    let r30 = rel(&got, &expected);
    ensure(r30 <= wide.parse_decimal("1e-25").unwrap(), || {
        format!("30-digit relative error {r30}")
    })?;
    Ok(format!(
        "relative error {r64:.1e} (binary64), {:.1e} (30 digits)",
        r30.to_f64()
    ))
}

fn naive_breakdown(ctx: &RealContext, i_max: usize) -> Result<usize, String> {
    let model = unit_birth_linear_death(ctx);
    let report = omega_naive(&model, i_max, &SeriesPolicy::default_for(ctx), ctx).map_err(|e| e.to_string())?;
    report
        .first_violation()
        .ok_or_else(|| format!("no violation up to {i_max}"))
}

fn criterion_2() -> Outcome {
    let first = naive_breakdown(&RealContext::machine(), 40)?;
    ensure(first <= 25, || format!("first violation at {first}"))?;
    Ok(format!("first violation at omega_{first}"))
}

fn criterion_3() -> Outcome {
    let first = naive_breakdown(&ext(70), 80)?;
    ensure((45..=60).contains(&first), || format!("first violation at {first}"))?;
    Ok(format!("first violation at omega_{first}"))
}

fn criterion_4() -> Outcome {
    let ctx = RealContext::machine();
    let model = unit_birth_linear_death(&ctx);
    let report = stable(&model, 500, &ctx)?;
    ensure(report.classification == HittingClass::Finite, || {
        format!("{:?}", report.classification)
    })?;
    let mut worst = 0.0f64;
    for i in 1..500 {
        let r = recurrence_residual(&model, &report.omega, i, &ctx).map_err(|e| e.to_string())?;
        worst = worst.max(r.to_f64().abs() / report.omega[i + 1].to_f64());
    }
    ensure(worst <= 1e-8, || format!("recurrence residual {worst:e}"))?;

    let wide = ext(40);
    let reference = stable(&unit_birth_linear_death(&wide), 500, &wide)?;
    let got = wide.parse_decimal(&report.omega[500].to_decimal_string()).unwrap();
    let agreement = rel(&got, &reference.omega[500]).to_f64();
    ensure(agreement <= 1e-10, || format!("40-digit disagreement {agreement:e}"))?;
    Ok(format!(
        "omega_500 = {}, worst residual {worst:.1e}, 40-digit agreement {agreement:.1e}",
        report.omega[500]
    ))
}

fn criterion_5() -> Outcome {
    let ctx = RealContext::machine();
    let policy = SeriesPolicy::default_for(&ctx);

    let slow = constant(1, 2);
    let omega = stable(&slow, 100, &ctx)?.omega;
    for (i, w) in omega.iter().enumerate().skip(1) {
        let r = (w.to_f64() - i as f64).abs() / i as f64;
        ensure(r <= 1e-10, || format!("omega_{i} = {w}"))?;
    }
    let a = extinction_probabilities(&slow, 100, &policy, &ctx).map_err(|e| e.to_string())?;
    ensure(a.is_certain(), || "lambda=1, mu=2 not certain".into())?;
    ensure(a.a.iter().all(|x| x.to_f64() == 1.0), || "a_i != 1".into())?;

    let fast = constant(2, 1);
    let a = extinction_probabilities(&fast, 50, &policy, &ctx).map_err(|e| e.to_string())?;
    ensure(matches!(a.classification, ExtinctionClass::Uncertain { .. }), || {
        "lambda=2, mu=1 certain".into()
    })?;
    for (i, x) in a.a.iter().enumerate() {
        let expected = 0.5f64.powi(i as i32);
        let r = (x.to_f64() - expected).abs() / expected;
        ensure(r <= 1e-10, || format!("a_{i} = {x}"))?;
    }
    let w = stable(&fast, 5, &ctx)?;
    ensure(w.classification == HittingClass::NotCertainExtinction, || {
        format!("{:?}", w.classification)
    })?;
    Ok("omega_i = i for i <= 100, a_i = 2^-i for i <= 50".into())
}

fn criterion_6() -> Outcome {
    let ctx = RealContext::machine();
    let model = constant(1, 1);
    let a = extinction_probabilities(&model, 5, &SeriesPolicy::default_for(&ctx), &ctx).map_err(|e| e.to_string())?;
    ensure(a.is_certain(), || "extinction not certain".into())?;
    let w = stable(&model, 5, &ctx)?;
    ensure(w.classification == HittingClass::Infinite, || {
        format!("{:?}", w.classification)
    })?;
    ensure(w.omega[1..].iter().all(Real::is_infinite), || "finite omega".into())?;
    Ok("certain extinction, infinite expected time".into())
}

fn criterion_7() -> Outcome {
    let e: f64 = E_100[..18].parse().unwrap();
    let target = 4.0 * e - 8.0;
    let model = unit_birth_linear_death(&RealContext::machine());
    let s = simulate(&model, 3, 100_000, 1000.0, 20_240_601).map_err(|e| e.to_string())?;
    let (mean, se) = (
        s.mean_time_estimate.unwrap_or(f64::NAN),
        s.std_error_time.unwrap_or(f64::NAN),
    );
    ensure((mean - target).abs() <= 3.0 * se, || {
        format!("mean {mean} ± {se} vs {target}")
    })?;

    let s = simulate(&constant(2, 1), 1, 100_000, 200.0, 20_240_602).map_err(|e| e.to_string())?;
    let p = s.extinction_probability_estimate;
    ensure((p - 0.5).abs() <= 3.0 * s.std_error_prob, || {
        format!("p {p} ± {}", s.std_error_prob)
    })?;
    Ok(format!(
        "mean {mean:.4} ± {se:.4} vs {target:.4}; p {p:.4} ± {:.4}",
        s.std_error_prob
    ))
}

/// A random rate pair whose ratio μ_n/λ_n tends to `limit`, either affine or
/// a ratio of affine functions of n.
fn random_model(rng: &mut ChaCha8Rng, limit: f64) -> (String, String) {
    let affine = rng.random_bool(0.5);
    let mut coef = |lo: f64, hi: f64| (rng.random_range(lo..hi) * 1000.0).round() / 1000.0;
    let b = coef(0.2, 3.0);
    let d = b * limit;
    let (a, c) = (coef(0.1, 5.0), coef(0.1, 5.0));
    if affine {
        (format!("{a} + {b}*n"), format!("{c} + {d:.6}*n"))
    } else {
        let (e, f) = (coef(0.5, 4.0), coef(0.5, 4.0));
        let g = coef(0.5, 2.0);
        // λ_n → g·b, μ_n → g·d
        (
            format!("{g}*({a} + {b}*n)/({e} + n)"),
            format!("{g}*({c} + {d:.6}*n)/({f} + n)"),
        )
    }
}

fn check_extinction(model: &RateModel, report: &ExtinctionReport, policy: &SeriesPolicy) -> Result<(), String> {
    let tol = policy.rel_tol().to_f64() * 10.0;
    let a = &report.a;
    for i in 1..a.len() - 1 {
        let (lam, mu) = model.rates(i as u64).map_err(|e| e.to_string())?;
        let residual = &a[i] * &(&lam + &mu) - &lam * &a[i + 1] - &mu * &a[i - 1];
        let bound = tol * (&lam + &mu).to_f64();
        ensure(residual.to_f64().abs() <= bound, || {
            format!("a residual {residual} at {i}")
        })?;
        ensure(a[i] <= a[i - 1], || format!("a increases at {i}"))?;
    }
    for i in 1..a.len() {
        ensure((&a[i - 1] - &a[i]).identical(report.d_at(i)), || {
            format!("telescoping at {i}")
        })?;
    }
    Ok(())
}

fn check_omega(model: &RateModel, report: &HittingTimeReport, policy: &SeriesPolicy) -> Result<(), String> {
    let ctx = model.context();
    let tol = policy.rel_tol().to_f64() * 100.0;
    let (omega, delta) = (&report.omega, &report.delta);
    for i in 1..omega.len() - 1 {
        let r = recurrence_residual(model, omega, i, &ctx).map_err(|e| e.to_string())?;
        let bound = tol * omega[i + 1].to_f64().max(1.0);
        ensure(r.to_f64().abs() <= bound, || format!("omega residual {r} at {i}"))?;
    }
    for i in 1..delta.len() {
        let r = delta_residual(model, delta, i, &ctx).map_err(|e| e.to_string())?;
        let (lam, mu) = model.rates_f64(i as u64).map_err(|e| e.to_string())?;
        let bound = tol * (delta[i - 1].to_f64() * mu / lam).max(1.0);
        ensure(r.to_f64().abs() <= bound, || format!("delta residual {r} at {i}"))?;
    }
    ensure(omega.windows(2).all(|w| w[0] < w[1]), || "omega not increasing".into())
}

fn criterion_8() -> Outcome {
    let ctx = RealContext::machine();
    let policy = SeriesPolicy::default_for(&ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut uncertain, mut finite) = (0, 0);
    for k in 0..50 {
        let certain = k % 2 == 0;
        let limit = if certain {
            rng.random_range(1.5..4.0)
        } else {
            rng.random_range(0.25..0.6)
        };
        let (lam, mu) = random_model(&mut rng, limit);
        let label = format!("lambda={lam}, mu={mu}");
        let model = expr_model(&lam, &mu, &ctx).map_err(|e| format!("{label}: {e}"))?;
        let a = extinction_probabilities(&model, 30, &policy, &ctx).map_err(|e| format!("{label}: {e}"))?;
        let w = omega_stable(&model, 30, &policy, &ctx).map_err(|e| format!("{label}: {e}"))?;
        match (&a.classification, w.classification) {
            (ExtinctionClass::Uncertain { .. }, HittingClass::NotCertainExtinction) if !certain => {
                check_extinction(&model, &a, &policy).map_err(|e| format!("{label}: {e}"))?;
                uncertain += 1;
            }
            (ExtinctionClass::Certain, HittingClass::Finite) if certain => {
                check_omega(&model, &w, &policy).map_err(|e| format!("{label}: {e}"))?;
                finite += 1;
            }
            (c, h) => return Err(format!("{label}: classified {c:?} / {h:?}")),
        }
    }

    let mut independent = 0;
    for _ in 0..20 {
        let limit = rng.random_range(1.5..4.0);
        let (lam, mu) = random_model(&mut rng, limit);
        let i = rng.random_range(1..8u64);
        let (up, down) = (rng.random_range(1.5..9.0), rng.random_range(0.1..0.7));
        let base = expr_model(&lam, &mu, &ctx).map_err(|e| e.to_string())?;
        // multiply the rates of states 1..=i by unrelated factors
        let perturbed = expr_model(
            &format!("({lam}) * (1 + {up}*max(0, min(1, {} - n)))", i + 1),
            &format!("({mu}) * (1 - {down}*max(0, min(1, {} - n)))", i + 1),
            &ctx,
        )
        .map_err(|e| e.to_string())?;
        for n in 1..=i + 3 {
            let (x, y) = (base.rates_f64(n).unwrap(), perturbed.rates_f64(n).unwrap());
            ensure((x != y) == (n <= i), || format!("perturbation wrong at n={n}"))?;
        }
        let value = |m: &RateModel| match delta_series(m, i as usize, &policy, &ctx) {
            Ok(DeltaOutcome::Finite { value, .. }) => Ok(value),
            other => Err(format!("lambda={lam}, mu={mu}: {other:?}")),
        };
        let (x, y) = (value(&base)?, value(&perturbed)?);
        ensure(x.identical(&y), || format!("delta_{i} changed: {x} vs {y}"))?;
        independent += 1;
    }
    Ok(format!(
        "{uncertain} uncertain and {finite} finite-time models, {independent} perturbations"
    ))
}

fn criterion_9() -> Outcome {
    fn same(a: &[Real], b: &[Real]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.identical(y))
    }
    let mut checked = 0;
    for ctx in [RealContext::machine(), ext(30), ext(70)] {
        let policy = SeriesPolicy::default_for(&ctx);
        for (lam, mu) in [("1", "n"), ("2", "1"), ("1 + n/3", "n/2 + 1/n"), ("3*n", "2*n + 1")] {
            let run = || -> Result<_, String> {
                let model = expr_model(lam, mu, &ctx).map_err(|e| e.to_string())?;
                let err = |e: birthdeath::Error| e.to_string();
                Ok((
                    extinction_probabilities(&model, 40, &policy, &ctx).map_err(err)?,
                    extinction_probabilities_naive(&model, 40, &policy, &ctx).map_err(err)?,
                    omega_stable(&model, 40, &policy, &ctx).map_err(err)?,
                    omega_naive(&model, 40, &policy, &ctx).map_err(err)?,
                ))
            };
            let (a1, n1, w1, v1) = run()?;
            let (a2, n2, w2, v2) = run()?;
            let label = format!("lambda={lam}, mu={mu} at {ctx:?}");
            ensure(same(&a1.a, &a2.a) && same(&a1.d, &a2.d), || {
                format!("{label}: stable a")
            })?;
            ensure(same(&n1.a, &n2.a) && n1.violations == n2.violations, || {
                format!("{label}: naive a")
            })?;
            ensure(same(&w1.omega, &w2.omega) && same(&w1.delta, &w2.delta), || {
                format!("{label}: stable omega")
            })?;
            ensure(same(&v1.omega, &v2.omega) && v1.violations == v2.violations, || {
                format!("{label}: naive omega")
            })?;
            checked += 4;
        }
    }
    let model = unit_birth_linear_death(&RealContext::machine());
    let s1 = simulate(&model, 3, 20_000, 1000.0, 9).map_err(|e| e.to_string())?;
    let s2 = simulate(&model, 3, 20_000, 1000.0, 9).map_err(|e| e.to_string())?;
    let bits = |s: &birthdeath::TrajectoryStats| {
        (
            s.extinct_runs,
            s.mean_time_estimate.map(f64::to_bits),
            s.std_error_time.map(f64::to_bits),
            s.std_error_prob.to_bits(),
        )
    };
    ensure(bits(&s1) == bits(&s2), || "simulator".into())?;
    Ok(format!(
        "{checked} engine runs and the simulator reproduced bit for bit"
    ))
}
