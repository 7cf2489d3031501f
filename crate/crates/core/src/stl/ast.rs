use std::fmt;

use serde::{Deserialize, Serialize};

use super::StlError;

/// Closed integer time window `[lo, hi]`, in steps relative to the
/// evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    lo: usize,
    hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self, StlError> {
        if lo > hi {
            return Err(StlError::Interval {
                lo: lo as i64,
                hi: hi as i64,
            });
        }
        Ok(Self { lo, hi })
    }

    /// Checked constructor from signed bounds, as they come out of the lexer.
    pub fn from_signed(lo: i64, hi: i64) -> Result<Self, StlError> {
        if lo < 0 || hi < 0 || lo > hi {
            return Err(StlError::Interval { lo, hi });
        }
        Ok(Self {
            lo: lo as usize,
            hi: hi as usize,
        })
    }

    #[inline]
    pub fn lo(&self) -> usize {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> usize {
        self.hi
    }

    #[inline]
    pub fn contains(&self, t: usize) -> bool {
        self.lo <= t && t <= self.hi
    }

    /// Number of steps in the window.
    #[inline]
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Inside,
    Outside,
}

/// Region membership predicate. Its quantitative value is the signed distance
/// to the region boundary, positive inside (negated for `Outside`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Predicate {
    pub region: String,
    pub polarity: Polarity,
}

impl Predicate {
    pub fn inside(region: impl Into<String>) -> Self {
        Self {
            region: region.into(),
            polarity: Polarity::Inside,
        }
    }

    pub fn outside(region: impl Into<String>) -> Self {
        Self {
            region: region.into(),
            polarity: Polarity::Outside,
        }
    }
}

/// State formula: boolean combination of predicates, no temporal operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NonTemporal {
    Atom(Predicate),
    Not(Box<NonTemporal>),
    And(Box<NonTemporal>, Box<NonTemporal>),
    Or(Box<NonTemporal>, Box<NonTemporal>),
}

impl NonTemporal {
    pub fn atom(region: impl Into<String>) -> Self {
        NonTemporal::Atom(Predicate::inside(region))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(g: NonTemporal) -> Self {
        NonTemporal::Not(Box::new(g))
    }

    pub fn and(l: NonTemporal, r: NonTemporal) -> Self {
        NonTemporal::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: NonTemporal, r: NonTemporal) -> Self {
        NonTemporal::Or(Box::new(l), Box::new(r))
    }

    /// Visit every predicate in the formula.
    pub fn for_each_predicate<'a>(&'a self, f: &mut impl FnMut(&'a Predicate)) {
        match self {
            NonTemporal::Atom(p) => f(p),
            NonTemporal::Not(g) => g.for_each_predicate(f),
            NonTemporal::And(l, r) | NonTemporal::Or(l, r) => {
                l.for_each_predicate(f);
                r.for_each_predicate(f);
            }
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonTemporal::Atom(_) | NonTemporal::Not(_) => write!(f, "{self}"),
            _ => write!(f, "({self})"),
        }
    }
}

impl fmt::Display for NonTemporal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonTemporal::Atom(p) => match p.polarity {
                Polarity::Inside => write!(f, "{}", p.region),
                Polarity::Outside => write!(f, "!{}", p.region),
            },
            NonTemporal::Not(g) => {
                write!(f, "!")?;
                g.fmt_operand(f)
            }
            NonTemporal::And(l, r) => {
                l.fmt_operand(f)?;
                write!(f, " & ")?;
                r.fmt_operand(f)
            }
            NonTemporal::Or(l, r) => {
                l.fmt_operand(f)?;
                write!(f, " | ")?;
                r.fmt_operand(f)
            }
        }
    }
}

/// Formula of the supported fragment:
///
/// ```text
/// phi := g | phi & phi | F[a,b] g | G[a,b] g | F[a,c1] G[c2,b] g
/// ```
///
/// where `g` is a [`NonTemporal`] formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    State(NonTemporal),
    And(Box<Formula>, Box<Formula>),
    Eventually(Interval, NonTemporal),
    Always(Interval, NonTemporal),
    EventuallyAlways(Interval, Interval, NonTemporal),
}

impl Formula {
    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    /// Top-level conjuncts, left to right. A formula without a top-level `&`
    /// is its own single conjunct.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.collect_conjuncts(&mut out);
        out
    }

    fn collect_conjuncts<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        match self {
            Formula::And(l, r) => {
                l.collect_conjuncts(out);
                r.collect_conjuncts(out);
            }
            other => out.push(other),
        }
    }

    /// Maximum number of future steps needed to decide the formula.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::State(_) => 0,
            Formula::Eventually(i, _) | Formula::Always(i, _) => i.hi(),
            Formula::EventuallyAlways(outer, inner, _) => outer.hi() + inner.hi(),
            Formula::And(l, r) => l.horizon().max(r.horizon()),
        }
    }

    /// Visit every predicate in the formula.
    pub fn for_each_predicate<'a>(&'a self, f: &mut impl FnMut(&'a Predicate)) {
        match self {
            Formula::State(g)
            | Formula::Eventually(_, g)
            | Formula::Always(_, g)
            | Formula::EventuallyAlways(_, _, g) => g.for_each_predicate(f),
            Formula::And(l, r) => {
                l.for_each_predicate(f);
                r.for_each_predicate(f);
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::State(g) => g.fmt_operand(f),
            Formula::And(l, r) => match **r {
                Formula::And(..) => write!(f, "{l} & ({r})"),
                _ => write!(f, "{l} & {r}"),
            },
            Formula::Eventually(i, g) => {
                write!(f, "F{i} ")?;
                g.fmt_operand(f)
            }
            Formula::Always(i, g) => {
                write!(f, "G{i} ")?;
                g.fmt_operand(f)
            }
            Formula::EventuallyAlways(o, i, g) => {
                write!(f, "F{o} G{i} ")?;
                g.fmt_operand(f)
            }
        }
    }
}

/// Horizon of a formula; free-function form of [`Formula::horizon`].
pub fn horizon(f: &Formula) -> usize {
    f.horizon()
}
