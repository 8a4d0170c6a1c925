//! Labels shared by the extinction and hitting-time reports.

use std::fmt;

/// Which algorithm produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Direct summation of the closed-form series.
    StableSeries,
    /// Forward three-term recursion. Kept for comparison only: it amplifies
    /// rounding error factorially on some models.
    NaiveRecursion,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::StableSeries => "stable_series",
            Method::NaiveRecursion => "naive_recursion",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// A probability or expected time below zero.
    Negative,
    /// A probability above one.
    AboveOne,
    /// An expected time that fails to increase with the starting state.
    NonMonotone,
    /// Relative deviation from the stable value above 100%.
    Deviation,
    /// The recursion left the representable range; later entries are absent.
    NonFinite,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Negative => "negative",
            ViolationKind::AboveOne => "above_one",
            ViolationKind::NonMonotone => "non_monotone",
            ViolationKind::Deviation => "deviation",
            ViolationKind::NonFinite => "non_finite",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An invariant broken at one index of a computed sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

pub(crate) fn first_index(violations: &[Violation]) -> Option<usize> {
    violations.iter().map(|v| v.index).min()
}
