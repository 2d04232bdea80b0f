use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::run::{execute, output_dir};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema: u32,
    pub scalar: String,
    pub tolerance: f64,
    pub rows: Vec<SweepRow>,
    /// `|v_{k+1} - v_k| / |v_k|` for adjacent rows; `None` where either side
    /// is undefined or zero.
    pub deltas: Vec<Option<f64>>,
    /// Every value undefined or zero.
    pub degenerate: bool,
    /// `Some(true)` when the values strictly increase, `Some(false)` when
    /// they strictly decrease.
    pub monotone_increasing: Option<bool>,
    pub passed: bool,
}

fn relative_delta(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if a != 0.0 => Some((b - a).abs() / a.abs()),
        _ => None,
    }
}

fn monotone(values: &[Option<f64>]) -> Option<bool> {
    let v: Vec<f64> = values.iter().copied().collect::<Option<_>>()?;
    if v.windows(2).all(|w| w[1] > w[0]) {
        Some(true)
    } else if v.windows(2).all(|w| w[1] < w[0]) {
        Some(false)
    } else {
        None
    }
}

/// Runs `cfg` once per size and passes iff the final adjacent delta is
/// within `tolerance`. A sweep whose values are all zero or undefined
/// passes as degenerate.
pub fn convergence_sweep(cfg: &ExperimentConfig, sizes: &[usize], scalar: &str, tolerance: f64) -> Result<SweepResult> {
    if sizes.len() < 3 {
        return Err(Error::Config(format!(
            "a sweep needs at least 3 sizes, got {}",
            sizes.len()
        )));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "sweep sizes must increase strictly, got {sizes:?}"
        )));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::Config(format!(
            "sweep tolerance {tolerance} must be non-negative"
        )));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut sub = cfg.clone();
        sub.space = cfg.space.with_size(n)?;
        let (report, _) = execute(&sub)?;
        if let Some(o) = &report.oracle {
            o.verdict()?;
        }
        if !report.scalars.contains_key(scalar) {
            let known: Vec<&String> = report.scalars.keys().collect();
            return Err(Error::Config(format!(
                "report has no scalar `{scalar}`; known: {known:?}"
            )));
        }
        rows.push(SweepRow {
            n,
            value: report.scalar(scalar),
        });
    }
    let values: Vec<Option<f64>> = rows.iter().map(|r| r.value).collect();
    let deltas: Vec<Option<f64>> = values.windows(2).map(|w| relative_delta(w[0], w[1])).collect();
    let degenerate = values.iter().all(|v| v.is_none_or(|x| x == 0.0));
    let passed = degenerate || deltas.last().copied().flatten().is_some_and(|d| d <= tolerance);
    Ok(SweepResult {
        schema: super::run::SCHEMA,
        scalar: scalar.to_string(),
        tolerance,
        monotone_increasing: monotone(&values),
        rows,
        deltas,
        degenerate,
        passed,
    })
}

/// Writes `<stem>_sweep.json` and `<stem>_sweep.csv` (`n,value,delta`).
pub fn write_sweep(cfg: &ExperimentConfig, result: &SweepResult, dir: Option<&Path>) -> Result<std::path::PathBuf> {
    let dir = output_dir(cfg, dir);
    std::fs::create_dir_all(&dir)?;
    let stem = cfg
        .output
        .stem
        .clone()
        .unwrap_or_else(|| cfg.functional.name().to_string());
    let json = dir.join(format!("{stem}_sweep.json"));
    std::fs::write(&json, serde_json::to_string_pretty(result)? + "\n")?;
    let mut w = csv::Writer::from_path(dir.join(format!("{stem}_sweep.csv")))?;
    w.write_record(["n", "value", "delta"])?;
    for (k, row) in result.rows.iter().enumerate() {
        let delta = k.checked_sub(1).and_then(|d| result.deltas[d]);
        let show = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        w.write_record([row.n.to_string(), show(row.value), show(delta)])?;
    }
    w.flush()?;
    Ok(json)
}
