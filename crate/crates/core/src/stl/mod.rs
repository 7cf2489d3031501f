//! Signal Temporal Logic fragment: AST, parser, robustness and prefix monitor.

mod ast;
mod monitor;
mod parse;
mod robustness;

use thiserror::Error;

pub use ast::{horizon, Formula, Interval, NonTemporal, Polarity, Predicate};
pub use monitor::{prefix_verdict, ConjunctStatus, Monitor, StatusMask, Verdict, MAX_CONJUNCTS};
pub use parse::parse_spec;
pub use robustness::{eval_nontemporal, robustness, PredicateEval};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StlError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("formula outside the supported fragment: {0}")]
    Grammar(String),
    #[error("invalid interval [{lo},{hi}]")]
    Interval { lo: i64, hi: i64 },
    #[error("trace too short: need {needed} states, have {len}")]
    TraceTooShort { needed: usize, len: usize },
    #[error("too many top-level conjuncts ({0}); at most 16 are supported")]
    TooManyConjuncts(usize),
}
