//! Monte Carlo trajectories, used to cross-check the series engines.
//!
//! Each run is a Gillespie simulation in binary64: from state `n` the process
//! waits an exponential time with rate `λ_n + μ_n`, then steps up with
//! probability `λ_n / (λ_n + μ_n)` and down otherwise. A run ends when it
//! reaches 0 (extinct) or when its clock passes `time_cap` (censored).
//!
//! Run `r` draws from a ChaCha8 generator seeded with `seed` on stream `r`, so
//! the result depends only on `(model, start, runs, time_cap, seed)` and not on
//! the number of worker threads. Per-run outcomes are collected in run order
//! and reduced sequentially.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::rates::RateModel;
use crate::Error;

/// Aggregate of a batch of simulated trajectories.
///
/// `mean_time_estimate` is conditional on extinction within `time_cap`:
/// censored runs only enter the probability estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub start_state: u64,
    pub runs: u64,
    pub extinct_runs: u64,
    pub censored_runs: u64,
    pub time_cap: f64,
    pub extinction_probability_estimate: f64,
    /// `None` when no run went extinct.
    pub mean_time_estimate: Option<f64>,
    /// `None` with fewer than two extinct runs.
    pub std_error_time: Option<f64>,
    pub std_error_prob: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    /// Jumps allowed per run before it is counted as censored. Guards against
    /// explosive models whose clock never reaches the cap.
    pub max_events: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { max_events: 10_000_000 }
    }
}

pub fn simulate(model: &RateModel, start: u64, runs: u64, time_cap: f64, seed: u64) -> Result<TrajectoryStats, Error> {
    simulate_with(model, start, runs, time_cap, seed, &SimulationConfig::default())
}

pub fn simulate_with(
    model: &RateModel,
    start: u64,
    runs: u64,
    time_cap: f64,
    seed: u64,
    config: &SimulationConfig,
) -> Result<TrajectoryStats, Error> {
    if start == 0 {
        return Err(Error::InvalidArgument("start state must be at least 1"));
    }
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1"));
    }
    if time_cap.is_nan() || time_cap <= 0.0 {
        return Err(Error::InvalidArgument("time_cap must be positive"));
    }

    let outcomes: Vec<Result<Option<f64>, Error>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            run_once(model, start, time_cap, config.max_events, &mut rng)
        })
        .collect();

    // Welford over extinction times, in run order
    let mut extinct = 0u64;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for outcome in outcomes {
        if let Some(t) = outcome? {
            extinct += 1;
            let delta = t - mean;
            mean += delta / extinct as f64;
            m2 += delta * (t - mean);
        }
    }

    let p = extinct as f64 / runs as f64;
    Ok(TrajectoryStats {
        start_state: start,
        runs,
        extinct_runs: extinct,
        censored_runs: runs - extinct,
        time_cap,
        extinction_probability_estimate: p,
        mean_time_estimate: (extinct > 0).then_some(mean),
        std_error_time: (extinct > 1).then(|| (m2 / (extinct - 1) as f64 / extinct as f64).sqrt()),
        std_error_prob: (p * (1.0 - p) / runs as f64).sqrt(),
        seed,
    })
}

/// Extinction time of one trajectory, or `None` if it was censored.
fn run_once(
    model: &RateModel,
    start: u64,
    time_cap: f64,
    max_events: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<f64>, Error> {
    let mut state = start;
    let mut clock = 0.0f64;
    for _ in 0..max_events {
        let (lambda, mu) = model.rates_f64(state)?;
        let total = lambda + mu;
        let wait: f64 = rng.sample(Exp1);
        clock += wait / total;
        if clock > time_cap {
            return Ok(None);
        }
        if rng.random::<f64>() * total < lambda {
            state += 1;
        } else {
            state -= 1;
            if state == 0 {
                return Ok(Some(clock));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::RealContext;
    use crate::rates::{constant_model, expr_model};

    fn constant(lam: u64, mu: u64) -> RateModel {
        let ctx = RealContext::machine();
        constant_model(ctx.from_u64(lam), ctx.from_u64(mu)).unwrap()
    }

    #[test]
    fn same_seed_same_stats() {
        let model = expr_model("1", "n", &RealContext::machine()).unwrap();
        let a = simulate(&model, 3, 1, 1000.0, 42).unwrap();
        let b = simulate(&model, 3, 1, 1000.0, 42).unwrap();
        assert_eq!(a, b);
        let a = simulate(&model, 3, 2000, 1000.0, 7).unwrap();
        let b = simulate(&model, 3, 2000, 1000.0, 7).unwrap();
        assert_eq!(
            a.mean_time_estimate.unwrap().to_bits(),
            b.mean_time_estimate.unwrap().to_bits()
        );
        assert_eq!(a, b);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let model = constant(1, 2);
        let wide = simulate(&model, 2, 3000, 100.0, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let narrow = pool.install(|| simulate(&model, 2, 3000, 100.0, 11).unwrap());
        assert_eq!(wide, narrow);
    }

    #[test]
    fn counts_add_up() {
        let s = simulate(&constant(2, 1), 1, 5000, 20.0, 3).unwrap();
        assert_eq!(s.extinct_runs + s.censored_runs, s.runs);
        assert!((0.0..=1.0).contains(&s.extinction_probability_estimate));
    }

    #[test]
    fn raising_the_cap_never_loses_extinctions() {
        let model = constant(1, 1);
        let mut previous = 0;
        for cap in [0.5, 2.0, 10.0, 50.0] {
            let s = simulate(&model, 2, 2000, cap, 99).unwrap();
            assert!(s.extinct_runs >= previous);
            previous = s.extinct_runs;
        }
    }

    #[test]
    fn event_cap_censors() {
        let config = SimulationConfig { max_events: 1 };
        let s = simulate_with(&constant(1, 1), 5, 10, f64::INFINITY, 0, &config).unwrap();
        assert_eq!(s.censored_runs, 10);
        assert_eq!(s.mean_time_estimate, None);
        assert_eq!(s.std_error_time, None);
    }

    #[test]
    fn geometric_mean_time() {
        // ω_1 = 1/(μ − λ) = 1
        let s = simulate(&constant(1, 2), 1, 100_000, 100.0, 2024).unwrap();
        let (mean, se) = (s.mean_time_estimate.unwrap(), s.std_error_time.unwrap());
        assert!((mean - 1.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn geometric_extinction_probability() {
        // a_1 = μ/λ = 1/2
        let s = simulate(&constant(2, 1), 1, 100_000, 200.0, 2024).unwrap();
        let p = s.extinction_probability_estimate;
        assert!((p - 0.5).abs() < 3.0 * s.std_error_prob, "{p} ± {}", s.std_error_prob);
    }

    #[test]
    fn rejects_bad_arguments() {
        let model = constant(1, 2);
        assert!(simulate(&model, 0, 10, 1.0, 0).is_err());
        assert!(simulate(&model, 1, 0, 1.0, 0).is_err());
        assert!(simulate(&model, 1, 10, 0.0, 0).is_err());
        assert!(simulate(&model, 1, 10, f64::NAN, 0).is_err());
    }

    #[test]
    fn model_errors_surface() {
        let model = expr_model("1", "n - 2", &RealContext::machine()).unwrap();
        assert!(matches!(simulate(&model, 3, 50, 100.0, 1), Err(Error::Model(_))));
    }
}
