//! Naive reference computations: `O(N)` ball scans inside `O(N²)` pair loops
//! and a supremum taken over the grid of attained quotient values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{LipField, ScalarField};
use crate::mmspace::MetricMeasureSpace;

/// Relative agreement required between engine and oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

/// Largest space the oracle accepts; the pair loop costs `N³`.
pub const ORACLE_MAX_POINTS: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub quantity: String,
    pub engine: f64,
    pub oracle: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub tolerance: f64,
    pub checks: Vec<OracleCheck>,
    /// Largest relative delta over all checks.
    pub max_relative: f64,
}

impl OracleReport {
    pub(crate) fn new() -> Self {
        Self {
            tolerance: ORACLE_TOLERANCE,
            ..Self::default()
        }
    }

    pub(crate) fn push(&mut self, quantity: &str, engine: f64, oracle: f64) {
        let scale = engine.abs().max(oracle.abs());
        let relative = if scale == 0.0 {
            0.0
        } else {
            (engine - oracle).abs() / scale
        };
        self.max_relative = self.max_relative.max(relative);
        self.checks.push(OracleCheck {
            quantity: quantity.to_string(),
            engine,
            oracle,
            relative,
        });
    }

    /// The first check beyond tolerance, as an error.
    pub fn verdict(&self) -> Result<()> {
        match self.checks.iter().find(|c| !(c.relative <= self.tolerance)) {
            Some(c) => Err(Error::OracleMismatch {
                quantity: c.quantity.clone(),
                engine: c.engine,
                oracle: c.oracle,
                relative: c.relative,
            }),
            None => Ok(()),
        }
    }
}

pub(crate) fn check_size(space: &MetricMeasureSpace) -> Result<()> {
    if space.len() > ORACLE_MAX_POINTS {
        return Err(Error::Config(format!(
            "oracle mode accepts at most {ORACLE_MAX_POINTS} points, the space has {}",
            space.len()
        )));
    }
    Ok(())
}

fn naive_volume(space: &MetricMeasureSpace, i: usize, r: f64) -> f64 {
    let w = space.weights();
    let mut v = 0.0;
    for (k, wk) in w.iter().enumerate() {
        if space.dist(i, k) < r {
            v += wk;
        }
    }
    v
}

/// `(q, w_i w_j)` for every ordered pair, `q = |Δf| / (ρ^s V^{1/r})`.
pub fn naive_spectrum(space: &MetricMeasureSpace, f: &[f64], s: f64, r: f64) -> Vec<(f64, f64)> {
    let w = space.weights();
    let n = space.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let rho = space.dist(i, j);
            let vol = naive_volume(space, i, rho);
            let q = (f[i] - f[j]).abs() / (rho.powf(s) * vol.powf(1.0 / r));
            out.push((q, w[i] * w[j]));
        }
    }
    out
}

/// `sup_λ λ^p W(λ)` over `λ` ranging over the attained values, where
/// `W(λ)` is the weight of pairs with quotient at least `λ`.
pub fn naive_weak(spectrum: &[(f64, f64)], p: f64) -> f64 {
    let mut sorted: Vec<(f64, f64)> = spectrum.iter().copied().filter(|e| e.0 > 0.0).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut k = 0;
    let mut above: Vec<f64> = Vec::new();
    while k < sorted.len() {
        let v = sorted[k].0;
        while k < sorted.len() && sorted[k].0 == v {
            above.push(sorted[k].1);
            k += 1;
        }
        let mass = crate::sum::exact_sum(&above);
        best = best.max(v.powf(p) * mass);
    }
    best
}

/// Incremental version of [`naive_weak`] for large spectra: identical
/// arithmetic with the running sum kept exact.
fn naive_weak_fast(spectrum: &[(f64, f64)], p: f64) -> f64 {
    let mut sorted: Vec<(f64, f64)> = spectrum.iter().copied().filter(|e| e.0 > 0.0).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut acc = crate::sum::ExactSum::new();
    let mut best = 0.0f64;
    let mut k = 0;
    while k < sorted.len() {
        let v = sorted[k].0;
        while k < sorted.len() && sorted[k].0 == v {
            acc.add(sorted[k].1);
            k += 1;
        }
        best = best.max(v.powf(p) * acc.value());
    }
    best
}

pub fn weak_value(space: &MetricMeasureSpace, field: &ScalarField, s: f64, r: f64, p: f64) -> f64 {
    naive_weak_fast(&naive_spectrum(space, &field.values, s, r), p)
}

/// `Σ ℓ^p w` with a plain running sum.
pub fn sobolev(space: &MetricMeasureSpace, lip: &LipField, p: f64) -> f64 {
    lip.values
        .iter()
        .zip(space.weights())
        .fold(0.0, |acc, (l, w)| acc + l.powf(p) * w)
}

/// Metric-kernel Gagliardo double sum with naive ball volumes.
pub fn gagliardo_metric(space: &MetricMeasureSpace, f: &[f64], s1: f64, p1: f64) -> f64 {
    let w = space.weights();
    let n = space.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let rho = space.dist(i, j);
                let k = rho.powf(s1 * p1) * naive_volume(space, i, rho);
                total += (f[i] - f[j]).abs().powf(p1) * w[i] * w[j] / k;
            }
        }
    }
    total
}
