//! Random formulas over three scalar "regions" for oracle and property tests.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use specshield::stl::{Formula, Interval, NonTemporal, Predicate};

pub const REGIONS: [&str; 3] = ["a", "b", "c"];

pub fn region_index(name: &str) -> usize {
    REGIONS.iter().position(|r| *r == name).expect("known region")
}

pub fn random_state_formula(rng: &mut ChaCha8Rng, depth: u32) -> NonTemporal {
    let choice = if depth == 0 { 0 } else { rng.gen_range(0..4) };
    match choice {
        0 => {
            let r = REGIONS[rng.gen_range(0..3)];
            if rng.gen_bool(0.5) {
                NonTemporal::atom(r)
            } else {
                NonTemporal::Atom(Predicate::outside(r))
            }
        }
        1 => NonTemporal::not(random_state_formula(rng, depth - 1)),
        2 => NonTemporal::and(
            random_state_formula(rng, depth - 1),
            random_state_formula(rng, depth - 1),
        ),
        _ => NonTemporal::or(
            random_state_formula(rng, depth - 1),
            random_state_formula(rng, depth - 1),
        ),
    }
}

fn random_interval(rng: &mut ChaCha8Rng, max_hi: usize) -> Interval {
    let lo = rng.gen_range(0..=max_hi);
    let hi = rng.gen_range(lo..=max_hi);
    Interval::new(lo, hi).unwrap()
}

fn random_conjunct(rng: &mut ChaCha8Rng) -> Formula {
    let g = random_state_formula(rng, 2);
    match rng.gen_range(0..4) {
        0 => Formula::State(g),
        1 => Formula::Eventually(random_interval(rng, 30), g),
        2 => Formula::Always(random_interval(rng, 30), g),
        _ => {
            let outer = random_interval(rng, 15);
            let inner = random_interval(rng, 30 - outer.hi());
            Formula::EventuallyAlways(outer, inner, g)
        }
    }
}

/// One to three temporal or state conjuncts, state formulas of depth at most
/// two, horizon at most 30.
pub fn random_formula(rng: &mut ChaCha8Rng) -> Formula {
    let mut f = random_conjunct(rng);
    for _ in 0..rng.gen_range(0..3) {
        f = Formula::and(f, random_conjunct(rng));
    }
    f
}

/// Predicate value of region `name` in a three-channel state.
pub fn channel(x: &[f64; 3], name: &str) -> f64 {
    x[region_index(name)]
}

pub fn random_trace(rng: &mut ChaCha8Rng, len: usize) -> Vec<[f64; 3]> {
    (0..len)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-5.0..5.0)))
        .collect()
}
