//! Birth and death rate models.
//!
//! A [`RateModel`] supplies the birth rate `λ_n` (transition `n → n+1`) and the
//! death rate `μ_n` (transition `n → n−1`) for states `n ≥ 1`. State 0 is
//! absorbing by construction and is never queried.

use std::fmt;
use std::sync::RwLock;

use thiserror::Error;

use crate::arithmetic::{Real, RealContext};
use crate::rate_expr::{self, EvalError, ParseError, RateExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rate {
    Birth,
    Death,
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rate::Birth => "lambda",
            Rate::Death => "mu",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{which}: {source}")]
    Parse { which: Rate, source: ParseError },
    #[error("{which} at n={n}: {source}")]
    Eval { which: Rate, n: u64, source: EvalError },
    #[error("{which} at n={n} is {value}, rates must be positive")]
    NonPositive { which: Rate, n: u64, value: String },
    #[error("state 0 is absorbing and has no rates")]
    AbsorbingState,
}

type RateFn = dyn Fn(u64) -> Real + Send + Sync;
type RateCache = RwLock<Vec<Option<(Real, Real)>>>;

enum Source {
    Constant { lambda: Real, mu: Real },
    Expr { lambda: RateExpr, mu: RateExpr },
    Custom { lambda: Box<RateFn>, mu: Box<RateFn> },
}

/// The rate sequences of one birth-and-death process, bound to a precision
/// context.
///
/// Expression and closure backed models memoize `(λ_n, μ_n)` per state. The
/// cache only grows, so a model is meant to live for one computation run.
pub struct RateModel {
    label: String,
    ctx: RealContext,
    source: Source,
    memo: Option<RateCache>,
}

/// `λ_n = lam`, `μ_n = mu` for every `n ≥ 1`.
pub fn constant_model(lam: Real, mu: Real) -> Result<RateModel, ModelError> {
    RateModel::constant(lam, mu)
}

/// Rates given by two [`rate_expr`] sources, evaluated under `ctx`.
pub fn expr_model(lambda_src: &str, mu_src: &str, ctx: &RealContext) -> Result<RateModel, ModelError> {
    RateModel::from_exprs(lambda_src, mu_src, ctx)
}

impl RateModel {
    pub fn constant(lam: Real, mu: Real) -> Result<RateModel, ModelError> {
        let ctx = lam.context();
        assert_eq!(ctx, mu.context(), "rates from different precision contexts");
        check_positive(Rate::Birth, 1, &lam)?;
        check_positive(Rate::Death, 1, &mu)?;
        Ok(RateModel {
            label: format!("lambda={lam}, mu={mu}"),
            ctx,
            source: Source::Constant { lambda: lam, mu },
            memo: None,
        })
    }

    pub fn from_exprs(lambda_src: &str, mu_src: &str, ctx: &RealContext) -> Result<RateModel, ModelError> {
        let lambda = rate_expr::parse(lambda_src).map_err(|source| ModelError::Parse {
            which: Rate::Birth,
            source,
        })?;
        let mu = rate_expr::parse(mu_src).map_err(|source| ModelError::Parse {
            which: Rate::Death,
            source,
        })?;
        Ok(RateModel {
            label: format!("lambda={lambda_src}, mu={mu_src}"),
            ctx: *ctx,
            source: Source::Expr { lambda, mu },
            memo: Some(RwLock::new(Vec::new())),
        })
    }

    /// Rates from closures. Each closure must return values in `ctx`.
    pub fn from_fn<L, M>(label: impl Into<String>, ctx: &RealContext, lambda: L, mu: M) -> RateModel
    where
        L: Fn(u64) -> Real + Send + Sync + 'static,
        M: Fn(u64) -> Real + Send + Sync + 'static,
    {
        RateModel {
            label: label.into(),
            ctx: *ctx,
            source: Source::Custom {
                lambda: Box::new(lambda),
                mu: Box::new(mu),
            },
            memo: Some(RwLock::new(Vec::new())),
        }
    }

    /// Disables the per-state cache.
    pub fn without_memo(mut self) -> RateModel {
        self.memo = None;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn context(&self) -> RealContext {
        self.ctx
    }

    /// `(λ_n, μ_n)` for `n ≥ 1`; both are checked to be positive.
    pub fn rates(&self, n: u64) -> Result<(Real, Real), ModelError> {
        if n == 0 {
            return Err(ModelError::AbsorbingState);
        }
        let Some(memo) = &self.memo else {
            return self.evaluate(n);
        };
        let slot = (n - 1) as usize;
        if let Some(Some(hit)) = memo.read().expect("rate cache poisoned").get(slot) {
            return Ok(hit.clone());
        }
        let fresh = self.evaluate(n)?;
        let mut cache = memo.write().expect("rate cache poisoned");
        if cache.len() <= slot {
            cache.resize(slot + 1, None);
        }
        // another reader may have filled the slot meanwhile; keep the first value
        Ok(cache[slot].get_or_insert(fresh).clone())
    }

    pub fn lambda(&self, n: u64) -> Result<Real, ModelError> {
        self.rates(n).map(|(lambda, _)| lambda)
    }

    pub fn mu(&self, n: u64) -> Result<Real, ModelError> {
        self.rates(n).map(|(_, mu)| mu)
    }

    /// Rates rounded to binary64, for the simulator.
    pub fn rates_f64(&self, n: u64) -> Result<(f64, f64), ModelError> {
        let (lambda, mu) = self.rates(n)?;
        Ok((lambda.to_f64(), mu.to_f64()))
    }

    fn evaluate(&self, n: u64) -> Result<(Real, Real), ModelError> {
        let (lambda, mu) = match &self.source {
            Source::Constant { lambda, mu } => return Ok((lambda.clone(), mu.clone())),
            Source::Expr { lambda, mu } => {
                let eval = |which, expr: &RateExpr| {
                    expr.eval(n, &self.ctx)
                        .map_err(|source| ModelError::Eval { which, n, source })
                };
                (eval(Rate::Birth, lambda)?, eval(Rate::Death, mu)?)
            }
            Source::Custom { lambda, mu } => (lambda(n), mu(n)),
        };
        assert!(
            lambda.context() == self.ctx && mu.context() == self.ctx,
            "rate closure returned a value outside the model's context"
        );
        check_positive(Rate::Birth, n, &lambda)?;
        check_positive(Rate::Death, n, &mu)?;
        Ok((lambda, mu))
    }
}

impl fmt::Debug for RateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateModel")
            .field("label", &self.label)
            .field("context", &self.ctx)
            .field("memoized", &self.memo.is_some())
            .finish()
    }
}

fn check_positive(which: Rate, n: u64, value: &Real) -> Result<(), ModelError> {
    if value.is_positive() && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositive {
            which,
            n,
            value: value.to_decimal_string(),
        })
    }
}
