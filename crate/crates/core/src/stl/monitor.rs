//! Incremental three-valued monitor over growing trace prefixes.
//!
//! Each top-level conjunct is tracked separately. A conjunct is `Satisfied`
//! once every extension of the prefix gives it positive robustness, and
//! `Violated` once every extension gives it non-positive robustness. Both are
//! absorbing.

use serde::{Deserialize, Serialize};

use super::ast::{Formula, Interval, NonTemporal};
use super::robustness::{eval_nontemporal, PredicateEval};
use super::StlError;
use crate::Scalar;

/// Maximum number of top-level conjuncts a [`StatusMask`] can carry.
pub const MAX_CONJUNCTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConjunctStatus {
    Pending,
    Satisfied,
    Violated,
}

impl ConjunctStatus {
    fn bits(self) -> u32 {
        match self {
            ConjunctStatus::Pending => 0,
            ConjunctStatus::Satisfied => 1,
            ConjunctStatus::Violated => 2,
        }
    }

    fn from_bits(b: u32) -> Self {
        match b & 0b11 {
            0 => ConjunctStatus::Pending,
            1 => ConjunctStatus::Satisfied,
            _ => ConjunctStatus::Violated,
        }
    }

    #[inline]
    pub fn is_resolved(self) -> bool {
        self != ConjunctStatus::Pending
    }
}

/// Per-conjunct status packed two bits per conjunct, conjunct `i` at bits
/// `2i..2i+2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StatusMask(pub u32);

impl StatusMask {
    #[inline]
    pub fn get(self, i: usize) -> ConjunctStatus {
        ConjunctStatus::from_bits(self.0 >> (2 * i))
    }

    #[inline]
    pub fn with(self, i: usize, s: ConjunctStatus) -> Self {
        let cleared = self.0 & !(0b11 << (2 * i));
        StatusMask(cleared | (s.bits() << (2 * i)))
    }

    /// Conjuncts whose status is `Violated` here but not in `before`.
    pub fn newly_violated(self, before: StatusMask, n: usize) -> usize {
        (0..n)
            .filter(|&i| self.get(i) == ConjunctStatus::Violated && before.get(i) != ConjunctStatus::Violated)
            .count()
    }
}

#[derive(Debug, Clone)]
enum Tracker {
    /// F[w] g. A bare state conjunct is tracked as F[0,0] g.
    Eventually {
        window: Interval,
        g: NonTemporal,
    },
    Always {
        window: Interval,
        g: NonTemporal,
    },
    /// F[outer] G[inner] g: `dead[k]` marks outer candidate `outer.lo + k` as
    /// refuted by a non-positive sample inside its inner window.
    EventuallyAlways {
        outer: Interval,
        inner: Interval,
        g: NonTemporal,
        dead: Vec<bool>,
        alive: usize,
    },
}

impl Tracker {
    fn new(conjunct: &Formula) -> Self {
        match conjunct {
            Formula::State(g) => Tracker::Eventually {
                window: Interval::new(0, 0).expect("valid"),
                g: g.clone(),
            },
            Formula::Eventually(w, g) => Tracker::Eventually {
                window: *w,
                g: g.clone(),
            },
            Formula::Always(w, g) => Tracker::Always {
                window: *w,
                g: g.clone(),
            },
            Formula::EventuallyAlways(outer, inner, g) => Tracker::EventuallyAlways {
                outer: *outer,
                inner: *inner,
                g: g.clone(),
                dead: vec![false; outer.len()],
                alive: outer.len(),
            },
            Formula::And(..) => unreachable!("conjuncts are flattened"),
        }
    }

    fn nontemporal(&self) -> &NonTemporal {
        match self {
            Tracker::Eventually { g, .. } | Tracker::Always { g, .. } | Tracker::EventuallyAlways { g, .. } => g,
        }
    }

    /// Feed the sample `v` observed at absolute time `t`.
    fn observe(&mut self, t: usize, positive: bool, current: ConjunctStatus) -> ConjunctStatus {
        if current.is_resolved() {
            return current;
        }
        match self {
            Tracker::Eventually { window, .. } => {
                if window.contains(t) && positive {
                    ConjunctStatus::Satisfied
                } else if t >= window.hi() {
                    ConjunctStatus::Violated
                } else {
                    ConjunctStatus::Pending
                }
            }
            Tracker::Always { window, .. } => {
                if window.contains(t) && !positive {
                    ConjunctStatus::Violated
                } else if t >= window.hi() {
                    ConjunctStatus::Satisfied
                } else {
                    ConjunctStatus::Pending
                }
            }
            Tracker::EventuallyAlways {
                outer,
                inner,
                dead,
                alive,
                ..
            } => {
                if !positive && t >= inner.lo() {
                    // refutes candidates s with s + inner.lo <= t <= s + inner.hi
                    let lo = t.saturating_sub(inner.hi()).max(outer.lo());
                    let hi = (t - inner.lo()).min(outer.hi());
                    for s in lo..=hi {
                        let k = s - outer.lo();
                        if !dead[k] {
                            dead[k] = true;
                            *alive -= 1;
                        }
                    }
                }
                if *alive == 0 {
                    return ConjunctStatus::Violated;
                }
                // candidate whose inner window closes now
                if t >= inner.hi() {
                    let s = t - inner.hi();
                    if outer.contains(s) && !dead[s - outer.lo()] {
                        return ConjunctStatus::Satisfied;
                    }
                }
                ConjunctStatus::Pending
            }
        }
    }
}

/// Incremental prefix monitor for a formula of the fragment.
#[derive(Debug, Clone)]
pub struct Monitor {
    trackers: Vec<Tracker>,
    status: StatusMask,
    next_t: usize,
}

impl Monitor {
    pub fn new(f: &Formula) -> Result<Self, StlError> {
        let conjuncts = f.conjuncts();
        if conjuncts.len() > MAX_CONJUNCTS {
            return Err(StlError::TooManyConjuncts(conjuncts.len()));
        }
        Ok(Self {
            trackers: conjuncts.into_iter().map(Tracker::new).collect(),
            status: StatusMask::default(),
            next_t: 0,
        })
    }

    /// Append the state observed at the next time step.
    pub fn push<S, T, E>(&mut self, state: &S, eval: &E)
    where
        T: Scalar,
        E: PredicateEval<S, T> + ?Sized,
    {
        let t = self.next_t;
        for (i, tr) in self.trackers.iter_mut().enumerate() {
            let current = self.status.get(i);
            if current.is_resolved() {
                continue;
            }
            let v: T = eval_nontemporal(state, tr.nontemporal(), eval);
            let next = tr.observe(t, v > T::zero(), current);
            self.status = self.status.with(i, next);
        }
        self.next_t += 1;
    }

    /// Number of states observed so far.
    #[inline]
    pub fn len(&self) -> usize {
        self.next_t
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.next_t == 0
    }

    #[inline]
    pub fn status(&self) -> StatusMask {
        self.status
    }

    #[inline]
    pub fn conjunct_count(&self) -> usize {
        self.trackers.len()
    }

    pub fn verdict(&self) -> Verdict {
        let n = self.trackers.len();
        let statuses = (0..n).map(|i| self.status.get(i));
        let mut all_sat = true;
        for s in statuses {
            match s {
                ConjunctStatus::Violated => return Verdict::Violated,
                ConjunctStatus::Pending => all_sat = false,
                ConjunctStatus::Satisfied => {}
            }
        }
        if all_sat {
            Verdict::Satisfied
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Three-valued verdict of `f` on a prefix starting at time 0.
pub fn prefix_verdict<S, T, E>(prefix: &[S], f: &Formula, eval: &E) -> Result<Verdict, StlError>
where
    T: Scalar,
    E: PredicateEval<S, T> + ?Sized,
{
    let mut m = Monitor::new(f)?;
    for s in prefix {
        m.push(s, eval);
    }
    Ok(m.verdict())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_spec;

    /// Boolean proxy: the predicate holds where the sample is positive.
    fn holds(x: &f64, _r: &str) -> f64 {
        *x
    }

    fn verdict(spec: &str, prefix: &[f64]) -> Verdict {
        prefix_verdict(prefix, &parse_spec(spec).unwrap(), &holds).unwrap()
    }

    #[test]
    fn eventually_witness_is_irrevocable() {
        assert_eq!(verdict("F[0,5] p", &[-1.0, -1.0, 1.0]), Verdict::Satisfied);
    }

    #[test]
    fn always_violation_is_irrevocable() {
        assert_eq!(verdict("G[0,5] p", &[1.0, 1.0, 1.0, -1.0]), Verdict::Violated);
    }

    #[test]
    fn open_eventually_window_is_inconclusive() {
        assert_eq!(verdict("F[0,5] p", &[-1.0, -1.0, -1.0]), Verdict::Inconclusive);
    }

    #[test]
    fn elapsed_windows_decide() {
        assert_eq!(verdict("F[0,2] p", &[-1.0, -1.0, -1.0]), Verdict::Violated);
        assert_eq!(verdict("G[0,2] p", &[1.0, 1.0, 1.0]), Verdict::Satisfied);
        assert_eq!(verdict("G[1,2] p", &[-1.0, 1.0]), Verdict::Inconclusive);
    }

    #[test]
    fn boundary_zero_is_not_satisfaction() {
        assert_eq!(verdict("F[0,0] p", &[0.0]), Verdict::Violated);
        assert_eq!(verdict("G[0,0] p", &[0.0]), Verdict::Violated);
    }

    #[test]
    fn eventually_always_candidates() {
        // F[0,2] G[1,2]: candidate s needs samples s+1, s+2 positive
        assert_eq!(verdict("F[0,2] G[1,2] p", &[-1.0, 1.0, 1.0]), Verdict::Satisfied);
        // the failure at step 1 kills s = 0 only
        assert_eq!(verdict("F[0,2] G[1,2] p", &[1.0, -1.0, 1.0]), Verdict::Inconclusive);
        // the failure at step 3 kills s = 1 and s = 2
        assert_eq!(verdict("F[0,2] G[1,2] p", &[1.0, -1.0, 1.0, -1.0]), Verdict::Violated);
    }

    #[test]
    fn conjunction_status_bits() {
        let f = parse_spec("F[0,1] p & G[0,3] p").unwrap();
        let mut m = Monitor::new(&f).unwrap();
        m.push(&1.0, &holds);
        assert_eq!(m.status().get(0), ConjunctStatus::Satisfied);
        assert_eq!(m.status().get(1), ConjunctStatus::Pending);
        assert_eq!(m.verdict(), Verdict::Inconclusive);
        let before = m.status();
        m.push(&-1.0, &holds);
        assert_eq!(m.verdict(), Verdict::Violated);
        assert_eq!(m.status().newly_violated(before, 2), 1);
    }
}
