use std::io;

use serde::{Deserialize, Serialize};

use crate::runtime::RunRecord;

/// Batch aggregates. Rates are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub stl_rate: f64,
    pub main_rate: f64,
    pub mean_fallbacks: f64,
    pub mean_projected: f64,
    pub n: usize,
}

fn mean(xs: impl Iterator<Item = f64>, n: usize) -> f64 {
    xs.sum::<f64>() / n as f64
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl BatchStats {
    /// Panics on an empty batch.
    pub fn from_records(records: &[RunRecord]) -> Self {
        let n = records.len();
        assert!(n > 0, "empty batch");
        Self {
            stl_rate: 100.0 * mean(records.iter().map(|r| indicator(r.stl_satisfied)), n),
            main_rate: 100.0 * mean(records.iter().map(|r| indicator(r.main_done)), n),
            mean_fallbacks: mean(records.iter().map(|r| r.fallback_steps as f64), n),
            mean_projected: mean(records.iter().map(|r| r.projected_steps as f64), n),
            n,
        }
    }
}

#[derive(Serialize)]
struct Row {
    episode: String,
    seed: String,
    stl: String,
    main: String,
    fallbacks: String,
    projected: String,
    final_robustness: String,
    steps: String,
}

/// One row per episode in the given order, then a `summary` row holding the
/// mean of each column; the `stl` and `main` summaries are fractions.
pub fn write_csv<W: io::Write>(w: W, records: &[RunRecord]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let n = records.len().max(1);
    for (i, r) in records.iter().enumerate() {
        out.serialize(Row {
            episode: i.to_string(),
            seed: r.seed.to_string(),
            stl: u8::from(r.stl_satisfied).to_string(),
            main: u8::from(r.main_done).to_string(),
            fallbacks: r.fallback_steps.to_string(),
            projected: r.projected_steps.to_string(),
            final_robustness: r.final_robustness.to_string(),
            steps: r.steps().to_string(),
        })?;
    }
    out.serialize(Row {
        episode: "summary".into(),
        seed: String::new(),
        stl: mean(records.iter().map(|r| indicator(r.stl_satisfied)), n).to_string(),
        main: mean(records.iter().map(|r| indicator(r.main_done)), n).to_string(),
        fallbacks: mean(records.iter().map(|r| r.fallback_steps as f64), n).to_string(),
        projected: mean(records.iter().map(|r| r.projected_steps as f64), n).to_string(),
        final_robustness: mean(records.iter().map(|r| r.final_robustness), n).to_string(),
        steps: mean(records.iter().map(|r| r.steps() as f64), n).to_string(),
    })?;
    out.flush()
}
