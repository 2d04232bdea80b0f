//! Poincaré constants over ball families with the ball-average functional
//! `ℓ_B(f) = Σ_{B} f w / μ(B)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{LipField, ScalarField};
use crate::mmspace::MetricMeasureSpace;
use crate::par;
use crate::sum::ExactSum;

/// Balls with fewer sample points are dropped from a family.
pub const MIN_BALL_POINTS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub points: usize,
    /// The `τ`-dilate leaves the sampled box.
    pub clipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyPolicy {
    pub center_stride: usize,
    pub radius_quantiles: Vec<f64>,
    pub tau: f64,
    pub min_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    pub balls: Vec<Ball>,
    pub policy: FamilyPolicy,
    /// Candidate balls dropped for holding too few points.
    pub dropped: usize,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 1.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dilation tau = {tau} must be at least 1"
        )));
    }
    Ok(())
}

fn count_within(space: &MetricMeasureSpace, i: usize, r: f64) -> usize {
    (0..space.len()).filter(|&j| space.dist(i, j) < r).count()
}

fn is_clipped(space: &MetricMeasureSpace, i: usize, r: f64) -> bool {
    match (space.domain(), space.coords(i)) {
        (Some(d), Some(c)) => !d.contains_ball(c, r),
        _ => false,
    }
}

impl BallFamily {
    /// Explicit `(center, radius)` balls.
    pub fn from_balls(space: &MetricMeasureSpace, balls: &[(usize, f64)], tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let mut out = Vec::with_capacity(balls.len());
        for &(center, radius) in balls {
            if center >= space.len() {
                return Err(Error::IndexOutOfRange {
                    index: center,
                    len: space.len(),
                });
            }
            if !(radius > 0.0) {
                return Err(Error::NonPositiveRadius(radius));
            }
            out.push(Ball {
                center,
                radius,
                points: count_within(space, center, radius),
                clipped: is_clipped(space, center, tau * radius),
            });
        }
        Self::filtered(
            out,
            FamilyPolicy {
                center_stride: 0,
                radius_quantiles: Vec::new(),
                tau,
                min_points: MIN_BALL_POINTS,
            },
        )
    }

    fn filtered(balls: Vec<Ball>, policy: FamilyPolicy) -> Result<Self> {
        let before = balls.len();
        let balls: Vec<Ball> = balls.into_iter().filter(|b| b.points >= policy.min_points).collect();
        if balls.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Ok(Self {
            dropped: before - balls.len(),
            balls,
            policy,
        })
    }
}

/// Centres at every 8th point; radii at the 0.1, 0.2 and 0.3 quantiles of
/// the distances from those centres to all points.
pub fn default_family(space: &MetricMeasureSpace, tau: f64) -> Result<BallFamily> {
    family_with(space, tau, 8, &[0.1, 0.2, 0.3])
}

pub fn family_with(space: &MetricMeasureSpace, tau: f64, stride: usize, quantiles: &[f64]) -> Result<BallFamily> {
    check_tau(tau)?;
    if stride == 0 || quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "ball family stride {stride} quantiles {quantiles:?}"
        )));
    }
    let n = space.len();
    let centers: Vec<usize> = (0..n).step_by(stride).collect();
    let mut dists: Vec<f64> = centers
        .iter()
        .flat_map(|&i| (0..n).filter(move |&j| j != i).map(move |j| space.dist(i, j)))
        .collect();
    if dists.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let radii: Vec<f64> = quantiles
        .iter()
        .map(|&q| {
            let k = ((q * dists.len() as f64) as usize).min(dists.len() - 1);
            *dists.select_nth_unstable_by(k, f64::total_cmp).1
        })
        .collect();
    let balls = par::map_range(centers.len() * radii.len(), |k| {
        let (center, radius) = (centers[k / radii.len()], radii[k % radii.len()]);
        Ball {
            center,
            radius,
            points: count_within(space, center, radius),
            clipped: is_clipped(space, center, tau * radius),
        }
    });
    BallFamily::filtered(
        balls,
        FamilyPolicy {
            center_stride: stride,
            radius_quantiles: quantiles.to_vec(),
            tau,
            min_points: MIN_BALL_POINTS,
        },
    )
}

/// `ℓ_B(f)` over the open ball `B(x_center, radius)`.
pub fn ball_average(space: &MetricMeasureSpace, field: &ScalarField, center: usize, radius: f64) -> Result<f64> {
    field.check_len(space)?;
    if center >= space.len() {
        return Err(Error::IndexOutOfRange {
            index: center,
            len: space.len(),
        });
    }
    if !(radius > 0.0) {
        return Err(Error::NonPositiveRadius(radius));
    }
    let (num, den) = average_parts(space, &field.values, center, radius);
    if den == 0.0 {
        return Err(Error::EmptyBall(center));
    }
    Ok(num / den)
}

fn average_parts(space: &MetricMeasureSpace, f: &[f64], center: usize, radius: f64) -> (f64, f64) {
    let w = space.weights();
    let (mut num, mut den) = (ExactSum::new(), ExactSum::new());
    for j in 0..space.len() {
        if space.dist(center, j) < radius {
            num.add(f[j] * w[j]);
            den.add(w[j]);
        }
    }
    (num.value(), den.value())
}

/// `[Σ_B |φ|^q w / μ(B)]^{1/q}`.
fn power_mean(space: &MetricMeasureSpace, phi: &[f64], shift: f64, center: usize, radius: f64, q: f64) -> f64 {
    let w = space.weights();
    let (mut num, mut den) = (ExactSum::new(), ExactSum::new());
    for j in 0..space.len() {
        if space.dist(center, j) < radius {
            num.add((phi[j] - shift).abs().powf(q) * w[j]);
            den.add(w[j]);
        }
    }
    (num.value() / den.value()).powf(1.0 / q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallRow {
    pub center: usize,
    pub radius: f64,
    pub clipped: bool,
    pub lhs: f64,
    pub rhs_core: f64,
    pub ratio: Option<f64>,
    /// `rhs_core = 0` with `lhs > 0`: the inequality fails on this ball.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1Report {
    pub qs: Vec<f64>,
    pub test_fields: usize,
    pub checks: usize,
    /// Largest `|ℓ_B(φ)| / mean_q(|φ|)` seen.
    pub worst: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub q: f64,
    pub p: f64,
    pub tau: f64,
    pub rows: Vec<BallRow>,
    /// Max ratio over unclipped, non-degenerate balls.
    pub c2: f64,
    /// Max ratio including clipped balls.
    pub c2_with_clipped: f64,
    pub degenerate_failures: usize,
    pub c1: C1Report,
}

/// Estimates `C₂` for `field` on `family` and runs the `C₁` battery.
pub fn poincare_constant(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    lip: &LipField,
    q: f64,
    p: f64,
    family: &BallFamily,
) -> Result<PoincareReport> {
    field.check_len(space)?;
    if lip.values.len() != space.len() {
        return Err(Error::LengthMismatch {
            expected: space.len(),
            got: lip.values.len(),
        });
    }
    if !(q >= 1.0 && p >= 1.0 && q.is_finite() && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "exponents q = {q}, p = {p} must be at least 1"
        )));
    }
    if family.balls.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let tau = family.policy.tau;
    let f = &field.values;
    let lp: Vec<f64> = lip.values.iter().map(|l| l.powf(p)).collect();
    let rows = par::map_range(family.balls.len(), |k| {
        let b = &family.balls[k];
        let (num, den) = average_parts(space, f, b.center, b.radius);
        let avg = num / den;
        let lhs = power_mean(space, f, avg, b.center, b.radius, q);
        let (ln, ld) = average_parts(space, &lp, b.center, tau * b.radius);
        let rhs_core = b.radius * (ln / ld).powf(1.0 / p);
        BallRow {
            center: b.center,
            radius: b.radius,
            clipped: b.clipped,
            lhs,
            rhs_core,
            ratio: (rhs_core > 0.0).then(|| lhs / rhs_core),
            degenerate: rhs_core == 0.0 && lhs > 0.0,
        }
    });
    let max_ratio = |keep: &dyn Fn(&BallRow) -> bool| {
        rows.iter()
            .filter(|r| keep(r))
            .filter_map(|r| r.ratio)
            .fold(0.0, f64::max)
    };
    let c2 = max_ratio(&|r| !r.clipped);
    let c2_with_clipped = max_ratio(&|_| true);
    let mut battery = c1_battery(space);
    battery.push(f.clone());
    let c1 = c1_check(space, family, &battery, &[1.0, 1.5, 2.0, 3.0]);
    Ok(PoincareReport {
        q,
        p,
        tau,
        degenerate_failures: rows.iter().filter(|r| r.degenerate).count(),
        rows,
        c2,
        c2_with_clipped,
        c1,
    })
}

/// Bounded continuous test fields: low-frequency waves in the coordinates
/// when the space has them, index waves otherwise.
pub fn c1_battery(space: &MetricMeasureSpace) -> Vec<Vec<f64>> {
    let n = space.len();
    let mut out = Vec::new();
    for k in 1..=3 {
        let k = f64::from(k);
        out.push(
            (0..n)
                .map(|i| match space.coords(i) {
                    Some(c) => (k * c.iter().sum::<f64>()).cos(),
                    None => (0.7 * k * i as f64).cos(),
                })
                .collect(),
        );
        out.push(
            (0..n)
                .map(|i| match space.coords(i) {
                    Some(c) => (k * c[0] + 0.3).sin() - 0.5,
                    None => (1.3 * k * i as f64).sin() - 0.5,
                })
                .collect(),
        );
    }
    out.push(vec![1.0; n]);
    out
}

/// Checks `|ℓ_B(φ)| ≤ [Σ_B |φ|^q w / μ(B)]^{1/q}` for every ball, field
/// and exponent.
pub fn c1_check(space: &MetricMeasureSpace, family: &BallFamily, battery: &[Vec<f64>], qs: &[f64]) -> C1Report {
    let jobs = family.balls.len() * battery.len();
    let worst = par::map_range(jobs, |k| {
        let b = &family.balls[k / battery.len()];
        let phi = &battery[k % battery.len()];
        let (num, den) = average_parts(space, phi, b.center, b.radius);
        let avg = (num / den).abs();
        qs.iter()
            .map(|&q| {
                let m = power_mean(space, phi, 0.0, b.center, b.radius, q);
                if m > 0.0 {
                    avg / m
                } else if avg > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max);
    C1Report {
        qs: qs.to_vec(),
        test_fields: battery.len(),
        checks: jobs * qs.len(),
        worst,
        passed: worst <= 1.0 + 1e-12,
    }
}

/// Writes `center,radius,lhs,rhs_core,ratio,clipped` rows.
pub fn write_poincare_csv(report: &PoincareReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["center", "radius", "lhs", "rhs_core", "ratio", "clipped"])?;
    for r in &report.rows {
        w.write_record([
            r.center.to_string(),
            r.radius.to_string(),
            r.lhs.to_string(),
            r.rhs_core.to_string(),
            r.ratio.map_or_else(String::new, |v| v.to_string()),
            r.clipped.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
