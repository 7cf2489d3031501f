use super::ast::{Formula, Interval, NonTemporal, Polarity};
use super::StlError;
use crate::Scalar;

/// Grounds region predicates on a state type.
///
/// `signed_value` returns the quantitative value of "state is inside
/// `region`": positive inside, negative outside, zero on the boundary.
pub trait PredicateEval<S, T: Scalar> {
    fn signed_value(&self, state: &S, region: &str) -> T;
}

impl<S, T: Scalar, F> PredicateEval<S, T> for F
where
    F: Fn(&S, &str) -> T,
{
    fn signed_value(&self, state: &S, region: &str) -> T {
        self(state, region)
    }
}

/// Robustness of a state formula at a single state.
pub fn eval_nontemporal<S, T, E>(state: &S, g: &NonTemporal, eval: &E) -> T
where
    T: Scalar,
    E: PredicateEval<S, T> + ?Sized,
{
    match g {
        NonTemporal::Atom(p) => {
            let v = eval.signed_value(state, &p.region);
            match p.polarity {
                Polarity::Inside => v,
                Polarity::Outside => -v,
            }
        }
        NonTemporal::Not(inner) => -eval_nontemporal(state, inner, eval),
        NonTemporal::And(l, r) => eval_nontemporal(state, l, eval).min(eval_nontemporal(state, r, eval)),
        NonTemporal::Or(l, r) => eval_nontemporal(state, l, eval).max(eval_nontemporal(state, r, eval)),
    }
}

fn window_max<S, T, E>(trace: &[S], t: usize, w: Interval, g: &NonTemporal, eval: &E) -> T
where
    T: Scalar,
    E: PredicateEval<S, T> + ?Sized,
{
    (t + w.lo()..=t + w.hi())
        .map(|k| eval_nontemporal(&trace[k], g, eval))
        .fold(T::neg_infinity(), T::max)
}

fn window_min<S, T, E>(trace: &[S], t: usize, w: Interval, g: &NonTemporal, eval: &E) -> T
where
    T: Scalar,
    E: PredicateEval<S, T> + ?Sized,
{
    (t + w.lo()..=t + w.hi())
        .map(|k| eval_nontemporal(&trace[k], g, eval))
        .fold(T::infinity(), T::min)
}

fn rho<S, T, E>(trace: &[S], f: &Formula, t: usize, eval: &E) -> T
where
    T: Scalar,
    E: PredicateEval<S, T> + ?Sized,
{
    match f {
        Formula::State(g) => eval_nontemporal(&trace[t], g, eval),
        Formula::And(l, r) => rho(trace, l, t, eval).min(rho(trace, r, t, eval)),
        Formula::Eventually(w, g) => window_max(trace, t, *w, g, eval),
        Formula::Always(w, g) => window_min(trace, t, *w, g, eval),
        Formula::EventuallyAlways(outer, inner, g) => (t + outer.lo()..=t + outer.hi())
            .map(|k| window_min(trace, k, *inner, g, eval))
            .fold(T::neg_infinity(), T::max),
    }
}

/// Quantitative robustness `rho(trace, f, t)`.
///
/// Time windows are inclusive integer ranges; the trace must cover
/// `t ..= t + horizon(f)`.
pub fn robustness<S, T, E>(trace: &[S], f: &Formula, t: usize, eval: &E) -> Result<T, StlError>
where
    T: Scalar,
    E: PredicateEval<S, T> + ?Sized,
{
    let needed = t + f.horizon() + 1;
    if trace.len() < needed {
        return Err(StlError::TraceTooShort {
            needed,
            len: trace.len(),
        });
    }
    Ok(rho(trace, f, t, eval))
}
