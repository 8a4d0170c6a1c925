//! Precision-parameterized real arithmetic.
//!
//! Every engine in this crate works on [`Real`] values owned by a
//! [`RealContext`]. A context is either machine precision (IEEE-754 binary64)
//! or extended precision with a fixed number of significant *decimal* digits.
//! Extended values are backed by a base-10 arbitrary precision float, so
//! "70 digits" means exactly 70 significant decimal digits, rounded
//! half-to-even after every operation.
//!
//! Precision belongs to the context, never to a single value. Combining two
//! values that come from different contexts panics: it is a programming error
//! and silently promoting or truncating would hide exactly the kind of
//! rounding behaviour these engines are meant to expose.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use thiserror::Error;

type Decimal = FBig<HalfEven, 10>;

/// Smallest digit count accepted for extended precision.
pub const MIN_EXTENDED_DIGITS: u32 = 15;

/// Largest decimal exponent magnitude an extended value may carry before it
/// counts as overflow.
pub const EXTENDED_EXPONENT_LIMIT: isize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithmeticError {
    #[error("extended precision needs at least {MIN_EXTENDED_DIGITS} significant digits, got {0}")]
    TooFewDigits(u32),
    #[error("overflow at the working precision")]
    Overflow,
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0}")]
    Domain(&'static str),
    #[error("invalid decimal number `{0}`")]
    InvalidDecimal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecisionMode {
    /// IEEE-754 binary64, 53-bit significand.
    Machine,
    /// Fixed number of significant decimal digits.
    Extended,
}

/// The precision every [`Real`] of a computation is carried at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RealContext {
    mode: PrecisionMode,
    // zero in machine mode
    digits: u32,
}

/// Builds a context. `digits` is ignored in machine mode.
pub fn make_context(mode: PrecisionMode, digits: u32) -> Result<RealContext, ArithmeticError> {
    match mode {
        PrecisionMode::Machine => Ok(RealContext::machine()),
        PrecisionMode::Extended => RealContext::extended(digits),
    }
}

/// Euler's number correctly rounded (to within one unit in the last place)
/// at the context's precision.
pub fn constant_e(ctx: &RealContext) -> Real {
    match ctx.mode {
        PrecisionMode::Machine => Real::machine(std::f64::consts::E),
        PrecisionMode::Extended => Real::extended(ctx.digits as usize, ctx.decimal_one().exp()),
    }
}

impl RealContext {
    pub const fn machine() -> Self {
        RealContext {
            mode: PrecisionMode::Machine,
            digits: 0,
        }
    }

    pub fn extended(digits: u32) -> Result<Self, ArithmeticError> {
        if digits < MIN_EXTENDED_DIGITS {
            return Err(ArithmeticError::TooFewDigits(digits));
        }
        Ok(RealContext {
            mode: PrecisionMode::Extended,
            digits,
        })
    }

    pub fn mode(&self) -> PrecisionMode {
        self.mode
    }

    /// Significant decimal digits, or `None` in machine mode.
    pub fn digits(&self) -> Option<u32> {
        match self.mode {
            PrecisionMode::Machine => None,
            PrecisionMode::Extended => Some(self.digits),
        }
    }

    /// Significand width in bits for machine mode; `None` otherwise.
    pub fn binary_precision(&self) -> Option<u32> {
        match self.mode {
            PrecisionMode::Machine => Some(f64::MANTISSA_DIGITS),
            PrecisionMode::Extended => None,
        }
    }

    pub fn is_machine(&self) -> bool {
        self.mode == PrecisionMode::Machine
    }

    pub fn zero(&self) -> Real {
        self.from_u64(0)
    }

    pub fn one(&self) -> Real {
        self.from_u64(1)
    }

    /// Exact for every `n` representable at the context's precision
    /// (all `n < 2^53` in machine mode).
    pub fn from_u64(&self, n: u64) -> Real {
        match self.mode {
            PrecisionMode::Machine => Real::machine(n as f64),
            PrecisionMode::Extended => Real::extended(self.digits as usize, Decimal::from(n)),
        }
    }

    /// Converts a binary64 value. Exact in machine mode; in extended mode the
    /// shortest decimal string that round-trips `x` is used.
    pub fn from_f64(&self, x: f64) -> Result<Real, ArithmeticError> {
        if !x.is_finite() {
            return Err(ArithmeticError::Overflow);
        }
        match self.mode {
            PrecisionMode::Machine => Ok(Real::machine(x)),
            PrecisionMode::Extended => self.parse_decimal(&format!("{x:e}")),
        }
    }

    /// Parses a decimal literal (`123`, `-0.25`, `1.5e-3`, `2E+4`) and rounds
    /// it to the context's precision. `inf` yields the explicit infinity.
    pub fn parse_decimal(&self, text: &str) -> Result<Real, ArithmeticError> {
        let text = text.trim();
        if text == "inf" {
            return Ok(self.infinity());
        }
        let invalid = || ArithmeticError::InvalidDecimal(text.to_string());
        if !is_decimal_literal(text) {
            return Err(invalid());
        }
        match self.mode {
            PrecisionMode::Machine => {
                let x = f64::from_str(text).map_err(|_| invalid())?;
                if x.is_finite() {
                    Ok(Real::machine(x))
                } else {
                    Err(ArithmeticError::Overflow)
                }
            }
            PrecisionMode::Extended => {
                let normalized = text.replace("e+", "e").replace("E+", "e").replace('E', "e");
                let value = Decimal::from_str(&normalized).map_err(|_| invalid())?;
                Ok(Real::extended(self.digits as usize, value))
            }
        }
    }

    /// The explicit `+∞` used for divergent expected times.
    pub fn infinity(&self) -> Real {
        Real {
            repr: Repr::Infinity(*self),
        }
    }

    fn round(&self, value: Decimal) -> Decimal {
        value.with_precision(self.digits as usize).value()
    }

    fn decimal_one(&self) -> Decimal {
        self.round(Decimal::ONE)
    }
}

impl fmt::Display for RealContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            PrecisionMode::Machine => write!(f, "machine"),
            PrecisionMode::Extended => write!(f, "{} digits", self.digits),
        }
    }
}

fn is_decimal_literal(text: &str) -> bool {
    let body = text.strip_prefix('-').unwrap_or(text);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], Some(&body[pos + 1..])),
        None => (body, None),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (mantissa, None),
    };
    let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !frac_part.is_none_or(all_digits) {
        return false;
    }
    match exponent {
        None => true,
        Some(e) => all_digits(e.strip_prefix(['+', '-']).unwrap_or(e)),
    }
}

/// A real number carried at its owning context's precision.
///
/// Values are finite except for the explicit infinity produced by
/// [`RealContext::infinity`]. Machine-mode arithmetic follows IEEE-754, so an
/// intermediate can overflow; code that accumulates should check
/// [`Real::ensure_finite`].
#[derive(Clone)]
pub struct Real {
    repr: Repr,
}

#[derive(Clone)]
enum Repr {
    Machine(f64),
    Extended(Decimal),
    Infinity(RealContext),
}

impl Real {
    fn machine(x: f64) -> Self {
        Real { repr: Repr::Machine(x) }
    }

    // Some shortcuts in the backing library return exact results with
    // unlimited precision; every stored value is pinned to `digits`.
    fn extended(digits: usize, x: Decimal) -> Self {
        let x = if x.precision() == digits {
            x
        } else {
            x.with_precision(digits).value()
        };
        Real {
            repr: Repr::Extended(x),
        }
    }

    pub fn context(&self) -> RealContext {
        match &self.repr {
            Repr::Machine(_) => RealContext::machine(),
            Repr::Extended(x) => RealContext {
                mode: PrecisionMode::Extended,
                digits: x.precision() as u32,
            },
            Repr::Infinity(ctx) => *ctx,
        }
    }

    /// Finite and inside the representable range (for extended values,
    /// a decimal exponent within [`EXTENDED_EXPONENT_LIMIT`]).
    pub fn is_finite(&self) -> bool {
        match &self.repr {
            Repr::Machine(x) => x.is_finite(),
            Repr::Extended(x) => decimal_exponent(x).abs() <= EXTENDED_EXPONENT_LIMIT,
            Repr::Infinity(_) => false,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.repr, Repr::Infinity(_))
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Machine(x) => *x == 0.0,
            Repr::Extended(x) => x.repr().significand() == &IBig::ZERO,
            Repr::Infinity(_) => false,
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.repr {
            Repr::Machine(x) => *x < 0.0,
            Repr::Extended(x) => x.repr().significand() < &IBig::ZERO,
            Repr::Infinity(_) => false,
        }
    }

    pub fn is_positive(&self) -> bool {
        match &self.repr {
            Repr::Machine(x) => *x > 0.0,
            Repr::Extended(x) => x.repr().significand() > &IBig::ZERO,
            Repr::Infinity(_) => true,
        }
    }

    /// Whether the value is a finite integer.
    pub fn is_integer(&self) -> bool {
        match &self.repr {
            Repr::Machine(x) => x.is_finite() && x.fract() == 0.0,
            Repr::Extended(x) => x.repr().significand() == &IBig::ZERO || x.repr().exponent() >= 0,
            Repr::Infinity(_) => false,
        }
    }

    /// Turns a machine-mode overflow (or NaN) into an error.
    pub fn ensure_finite(self) -> Result<Real, ArithmeticError> {
        match &self.repr {
            Repr::Infinity(_) => Ok(self),
            _ if !self.is_finite() => Err(ArithmeticError::Overflow),
            _ => Ok(self),
        }
    }

    // Rough log10 of the magnitude, for range checks before expensive calls.
    fn log10_magnitude(&self) -> f64 {
        match &self.repr {
            Repr::Machine(x) => x.abs().log10(),
            Repr::Extended(x) => {
                let digits = x.repr().significand().to_string();
                let digits = digits.trim_start_matches('-');
                let lead: f64 = digits[..digits.len().min(17)].parse().unwrap_or(0.0);
                lead.log10() + (digits.len() - digits.len().min(17)) as f64 + x.repr().exponent() as f64
            }
            Repr::Infinity(_) => f64::INFINITY,
        }
    }

    /// Nearest binary64 value.
    pub fn to_f64(&self) -> f64 {
        match &self.repr {
            Repr::Machine(x) => *x,
            Repr::Extended(x) => x.to_f64().value(),
            Repr::Infinity(_) => f64::INFINITY,
        }
    }

    /// Bit-level identity: same context, same stored representation.
    /// Distinguishes `0.0` from `-0.0` in machine mode.
    pub fn identical(&self, other: &Real) -> bool {
        match (&self.repr, &other.repr) {
            (Repr::Machine(a), Repr::Machine(b)) => a.to_bits() == b.to_bits(),
            (Repr::Extended(a), Repr::Extended(b)) => a.precision() == b.precision() && a.repr() == b.repr(),
            (Repr::Infinity(a), Repr::Infinity(b)) => a == b,
            _ => false,
        }
    }

    pub fn abs(&self) -> Real {
        match &self.repr {
            Repr::Machine(x) => Real::machine(x.abs()),
            Repr::Extended(x) if x.repr().significand() < &IBig::ZERO => Real::extended(x.precision(), -x.clone()),
            _ => self.clone(),
        }
    }

    pub fn min(self, other: Real) -> Real {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Real) -> Real {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn checked_div(&self, rhs: &Real) -> Result<Real, ArithmeticError> {
        if rhs.is_zero() {
            return Err(ArithmeticError::DivisionByZero);
        }
        (self / rhs).ensure_finite()
    }

    pub fn exp(&self) -> Result<Real, ArithmeticError> {
        match &self.repr {
            Repr::Machine(x) => Real::machine(x.exp()).ensure_finite(),
            Repr::Extended(x) => {
                if self.to_f64().abs() > 2.0 * EXTENDED_EXPONENT_LIMIT as f64 {
                    return Err(ArithmeticError::Overflow);
                }
                Real::extended(x.precision(), x.exp()).ensure_finite()
            }
            Repr::Infinity(_) => Err(ArithmeticError::Overflow),
        }
    }

    /// Natural logarithm.
    pub fn ln(&self) -> Result<Real, ArithmeticError> {
        if !self.is_positive() {
            return Err(ArithmeticError::Domain("logarithm of a non-positive number"));
        }
        match &self.repr {
            Repr::Machine(x) => Ok(Real::machine(x.ln())),
            Repr::Extended(x) => Ok(Real::extended(x.precision(), x.ln())),
            Repr::Infinity(_) => Err(ArithmeticError::Overflow),
        }
    }

    pub fn sqrt(&self) -> Result<Real, ArithmeticError> {
        if self.is_negative() {
            return Err(ArithmeticError::Domain("square root of a negative number"));
        }
        match &self.repr {
            Repr::Machine(x) => Ok(Real::machine(x.sqrt())),
            Repr::Extended(x) if x.repr().significand() == &IBig::ZERO => Ok(self.clone()),
            Repr::Extended(x) => Ok(Real::extended(x.precision(), x.sqrt())),
            Repr::Infinity(_) => Err(ArithmeticError::Overflow),
        }
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, exponent: i64) -> Result<Real, ArithmeticError> {
        if exponent < 0 && self.is_zero() {
            return Err(ArithmeticError::DivisionByZero);
        }
        match &self.repr {
            Repr::Machine(x) => {
                let value = match i32::try_from(exponent) {
                    Ok(e) => x.powi(e),
                    Err(_) => x.powf(exponent as f64),
                };
                Real::machine(value).ensure_finite()
            }
            Repr::Extended(x) => {
                if x.repr().significand() == &IBig::ZERO {
                    return Ok(self.clone());
                }
                let scale = self.log10_magnitude().abs() * exponent.unsigned_abs() as f64;
                if scale > EXTENDED_EXPONENT_LIMIT as f64 {
                    return Err(ArithmeticError::Overflow);
                }
                Real::extended(x.precision(), x.powi(IBig::from(exponent))).ensure_finite()
            }
            Repr::Infinity(_) => Err(ArithmeticError::Overflow),
        }
    }

    /// General power. Integer exponents take the exact [`Real::powi`] path;
    /// otherwise the base must be non-negative.
    pub fn pow(&self, exponent: &Real) -> Result<Real, ArithmeticError> {
        assert_same_context(self, exponent);
        if exponent.is_integer() {
            let as_int = exponent.to_f64();
            if as_int.abs() < 9.0e15 {
                return self.powi(as_int as i64);
            }
        }
        if self.is_zero() {
            return if exponent.is_positive() {
                Ok(self.clone())
            } else {
                Err(ArithmeticError::DivisionByZero)
            };
        }
        if self.is_negative() {
            return Err(ArithmeticError::Domain("non-integer power of a negative number"));
        }
        match (&self.repr, &exponent.repr) {
            (Repr::Machine(x), Repr::Machine(y)) => Real::machine(x.powf(*y)).ensure_finite(),
            (Repr::Extended(x), Repr::Extended(y)) => {
                let scale = self.log10_magnitude().abs() * exponent.to_f64().abs();
                if scale > EXTENDED_EXPONENT_LIMIT as f64 {
                    return Err(ArithmeticError::Overflow);
                }
                Real::extended(x.precision(), x.powf(y)).ensure_finite()
            }
            _ => Err(ArithmeticError::Overflow),
        }
    }

    /// Decimal rendering carrying every stored digit. Machine values use the
    /// shortest string that round-trips to the same binary64; extended values
    /// print their exact decimal significand. `+∞` renders as `inf`.
    pub fn to_decimal_string(&self) -> String {
        match &self.repr {
            Repr::Machine(x) => format!("{x:?}"),
            Repr::Extended(x) => format_decimal(x.repr().significand(), x.repr().exponent()),
            Repr::Infinity(_) => "inf".to_string(),
        }
    }
}

fn decimal_exponent(x: &Decimal) -> isize {
    x.repr().exponent() + x.repr().digits() as isize - 1
}

fn format_decimal(significand: &IBig, exponent: isize) -> String {
    if *significand == IBig::ZERO {
        return "0".to_string();
    }
    let rendered = significand.to_string();
    let (sign, digits) = match rendered.strip_prefix('-') {
        Some(rest) => ("-", rest.to_string()),
        None => ("", rendered),
    };
    let len = digits.len() as isize;
    let adjusted = exponent + len - 1;
    let body = if (-7..21).contains(&adjusted) {
        if exponent >= 0 {
            format!("{digits}{}", "0".repeat(exponent as usize))
        } else if adjusted >= 0 {
            let point = (len + exponent) as usize;
            format!("{}.{}", &digits[..point], &digits[point..])
        } else {
            format!("0.{}{digits}", "0".repeat((-adjusted - 1) as usize))
        }
    } else if len == 1 {
        format!("{digits}e{adjusted}")
    } else {
        format!("{}.{}e{adjusted}", &digits[..1], &digits[1..])
    };
    format!("{sign}{body}")
}

#[track_caller]
fn assert_same_context(a: &Real, b: &Real) {
    let (ca, cb) = (a.context(), b.context());
    assert!(
        ca == cb,
        "mixing reals from different precision contexts ({ca} and {cb})"
    );
}

macro_rules! impl_binary_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<'a> $trait<&'a Real> for &'a Real {
            type Output = Real;

            #[track_caller]
            fn $method(self, rhs: &'a Real) -> Real {
                assert_same_context(self, rhs);
                match (&self.repr, &rhs.repr) {
                    (Repr::Machine(a), Repr::Machine(b)) => Real::machine(a $op b),
                    (Repr::Extended(a), Repr::Extended(b)) => Real::extended(a.precision(), a $op b),
                    _ => panic!("arithmetic on an infinite real"),
                }
            }
        }

        impl $trait<Real> for Real {
            type Output = Real;

            #[track_caller]
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }

        impl<'a> $trait<&'a Real> for Real {
            type Output = Real;

            #[track_caller]
            fn $method(self, rhs: &'a Real) -> Real {
                (&self).$method(rhs)
            }
        }
    };
}

impl_binary_op!(Add, add, +);
impl_binary_op!(Sub, sub, -);
impl_binary_op!(Mul, mul, *);

impl<'a> Div<&'a Real> for &'a Real {
    type Output = Real;

    /// Panics on a zero divisor; use [`Real::checked_div`] when the divisor
    /// is not known to be non-zero.
    #[track_caller]
    fn div(self, rhs: &'a Real) -> Real {
        assert_same_context(self, rhs);
        assert!(!rhs.is_zero(), "division by zero");
        match (&self.repr, &rhs.repr) {
            (Repr::Machine(a), Repr::Machine(b)) => Real::machine(a / b),
            (Repr::Extended(a), Repr::Extended(b)) => Real::extended(a.precision(), a / b),
            _ => panic!("arithmetic on an infinite real"),
        }
    }
}

impl Div<Real> for Real {
    type Output = Real;

    #[track_caller]
    fn div(self, rhs: Real) -> Real {
        &self / &rhs
    }
}

impl<'a> Div<&'a Real> for Real {
    type Output = Real;

    #[track_caller]
    fn div(self, rhs: &'a Real) -> Real {
        &self / rhs
    }
}

impl Neg for &Real {
    type Output = Real;

    fn neg(self) -> Real {
        match &self.repr {
            Repr::Machine(x) => Real::machine(-x),
            Repr::Extended(x) => Real::extended(x.precision(), -x.clone()),
            Repr::Infinity(_) => panic!("negating an infinite real"),
        }
    }
}

impl Neg for Real {
    type Output = Real;

    fn neg(self) -> Real {
        -&self
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Real) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

/// Numeric order within one context. Values from different contexts are
/// unordered.
impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Real) -> Option<Ordering> {
        if self.context() != other.context() {
            return None;
        }
        match (&self.repr, &other.repr) {
            (Repr::Machine(a), Repr::Machine(b)) => a.partial_cmp(b),
            (Repr::Extended(a), Repr::Extended(b)) => Some(a.cmp(b)),
            (Repr::Infinity(_), Repr::Infinity(_)) => Some(Ordering::Equal),
            (Repr::Infinity(_), _) => Some(Ordering::Greater),
            (_, Repr::Infinity(_)) => Some(Ordering::Less),
            _ => None,
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({} @ {})", self.to_decimal_string(), self.context())
    }
}
