//! Certainty-factor calculus.
//!
//! Measures of belief and disbelief, the net certainty factor, and the
//! propagation/combination rules used by the weighting model. Everything
//! here is a pure function over `f64`; no rounding happens in this module.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfError {
    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    RangeViolation {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("cannot combine {0} with {1}: opposite certain evidence is undefined")]
    DegenerateEvidence(f64, f64),
    #[error("premise list is empty")]
    EmptyPremise,
}

fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64, CfError> {
    if value.is_nan() || value < lo || value > hi {
        Err(CfError::RangeViolation { what, value, lo, hi })
    } else {
        Ok(value)
    }
}

/// Measure of belief, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Belief(f64);

/// Measure of disbelief, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Disbelief(f64);

/// Net certainty on the `[-1, 1]` scale: -1 definitely false, 0 unknown,
/// +1 definitely true.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CertaintyValue(f64);

macro_rules! bounded {
    ($ty:ident, $name:literal, $lo:expr, $hi:expr) => {
        impl $ty {
            pub fn new(value: f64) -> Result<Self, CfError> {
                check_range($name, value, $lo, $hi).map($ty)
            }

            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl TryFrom<f64> for $ty {
            type Error = CfError;

            fn try_from(value: f64) -> Result<Self, Self::Error> {
                $ty::new(value)
            }
        }

        impl From<$ty> for f64 {
            fn from(v: $ty) -> f64 {
                v.0
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

bounded!(Belief, "belief", 0.0, 1.0);
bounded!(Disbelief, "disbelief", 0.0, 1.0);
bounded!(CertaintyValue, "certainty", -1.0, 1.0);

impl CertaintyValue {
    pub const UNKNOWN: CertaintyValue = CertaintyValue(0.0);
    pub const TRUE: CertaintyValue = CertaintyValue(1.0);
    pub const FALSE: CertaintyValue = CertaintyValue(-1.0);
}

/// An expert's prior `P(H)` together with the conditional `P(H|E)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorBelief {
    pub h: f64,
    pub he: f64,
}

impl PriorBelief {
    pub fn new(h: f64, he: f64) -> Result<Self, CfError> {
        Ok(PriorBelief {
            h: check_range("prior", h, 0.0, 1.0)?,
            he: check_range("conditional", he, 0.0, 1.0)?,
        })
    }

    pub fn belief(&self) -> Result<Belief, CfError> {
        measure_of_belief(self.h, self.he)
    }

    pub fn disbelief(&self) -> Result<Disbelief, CfError> {
        measure_of_disbelief(self.h, self.he)
    }

    pub fn certainty(&self) -> Result<CertaintyValue, CfError> {
        Ok(certainty_factor(self.belief()?, self.disbelief()?))
    }
}

/// How much observing the evidence raises belief in the hypothesis.
///
/// `1` when the prior is already certain, otherwise
/// `(max(he, h) - h) / (1 - h)`.
pub fn measure_of_belief(h: f64, he: f64) -> Result<Belief, CfError> {
    let h = check_range("prior", h, 0.0, 1.0)?;
    let he = check_range("conditional", he, 0.0, 1.0)?;
    if h == 1.0 {
        return Ok(Belief(1.0));
    }
    let b = (he.max(h) - h) / (1.0 - h);
    Ok(Belief(b.clamp(0.0, 1.0)))
}

/// How much observing the evidence lowers belief in the hypothesis.
///
/// `1` when the prior is zero, otherwise `(min(he, h) - h) / -h`.
pub fn measure_of_disbelief(h: f64, he: f64) -> Result<Disbelief, CfError> {
    let h = check_range("prior", h, 0.0, 1.0)?;
    let he = check_range("conditional", he, 0.0, 1.0)?;
    if h == 0.0 {
        return Ok(Disbelief(1.0));
    }
    let d = (he.min(h) - h) / -h;
    Ok(Disbelief(d.clamp(0.0, 1.0)))
}

pub fn certainty_factor(b: Belief, d: Disbelief) -> CertaintyValue {
    CertaintyValue((b.0 - d.0).clamp(-1.0, 1.0))
}

/// Combines two certainties that support the same conclusion
/// (incrementally acquired evidence).
///
/// * both non-negative: `cf1 + cf2 (1 - cf1)`
/// * both negative: `cf1 + cf2 (1 + cf1)`
/// * mixed: `(cf1 + cf2) / (1 - min(|cf1|, |cf2|))`
///
/// The same-sign branches put the larger magnitude first so the result does
/// not depend on argument order, even at the last bit.
pub fn combine_incremental(
    cf1: CertaintyValue,
    cf2: CertaintyValue,
) -> Result<CertaintyValue, CfError> {
    let (a, b) = (cf1.0, cf2.0);
    let combined = if a >= 0.0 && b >= 0.0 {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        hi + lo * (1.0 - hi)
    } else if a < 0.0 && b < 0.0 {
        // mirror of the positive branch
        let (hi, lo) = if a <= b { (-a, -b) } else { (-b, -a) };
        -(hi + lo * (1.0 - hi))
    } else {
        let m = a.abs().min(b.abs());
        if m >= 1.0 {
            return Err(CfError::DegenerateEvidence(a, b));
        }
        (a + b) / (1.0 - m)
    };
    Ok(CertaintyValue(combined.clamp(-1.0, 1.0)))
}

/// Folds [`combine_incremental`] over a list, starting from "unknown".
pub fn combine_all<I>(cfs: I) -> Result<CertaintyValue, CfError>
where
    I: IntoIterator<Item = CertaintyValue>,
{
    cfs.into_iter()
        .try_fold(CertaintyValue::UNKNOWN, combine_incremental)
}

/// Conjunctive premise: the weakest link.
pub fn propagate_conjunctive(cfs: &[CertaintyValue]) -> Result<CertaintyValue, CfError> {
    cfs.iter()
        .copied()
        .reduce(|x, y| if y.0 < x.0 { y } else { x })
        .ok_or(CfError::EmptyPremise)
}

/// Disjunctive premise: the strongest link.
pub fn propagate_disjunctive(cfs: &[CertaintyValue]) -> Result<CertaintyValue, CfError> {
    cfs.iter()
        .copied()
        .reduce(|x, y| if y.0 > x.0 { y } else { x })
        .ok_or(CfError::EmptyPremise)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfLabel {
    DefinitelyFalse,
    ProbablyFalse,
    Unknown,
    ProbablyTrue,
    DefinitelyTrue,
}

impl CfLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CfLabel::DefinitelyFalse => "definitely false",
            CfLabel::ProbablyFalse => "probably false",
            CfLabel::Unknown => "unknown",
            CfLabel::ProbablyTrue => "probably true",
            CfLabel::DefinitelyTrue => "definitely true",
        }
    }
}

impl fmt::Display for CfLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Band boundaries for [`interpret_cf`].
///
/// `|cf| >= definite` is definite; `|cf| <= probable` is unknown; anything
/// in between is "probably".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfScale {
    pub probable: f64,
    pub definite: f64,
}

impl Default for CfScale {
    fn default() -> Self {
        CfScale {
            probable: 0.2,
            definite: 1.0,
        }
    }
}

impl CfScale {
    pub fn new(probable: f64, definite: f64) -> Result<Self, CfError> {
        let probable = check_range("probable cut", probable, 0.0, 1.0)?;
        let definite = check_range("definite cut", definite, probable, 1.0)?;
        Ok(CfScale { probable, definite })
    }

    pub fn label(&self, cf: CertaintyValue) -> CfLabel {
        let v = cf.0;
        if v >= self.definite {
            CfLabel::DefinitelyTrue
        } else if v <= -self.definite {
            CfLabel::DefinitelyFalse
        } else if v > self.probable {
            CfLabel::ProbablyTrue
        } else if v < -self.probable {
            CfLabel::ProbablyFalse
        } else {
            CfLabel::Unknown
        }
    }
}

pub fn interpret_cf(cf: CertaintyValue) -> CfLabel {
    CfScale::default().label(cf)
}
