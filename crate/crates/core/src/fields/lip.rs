use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmspace::MetricMeasureSpace;
use crate::par;

use super::ScalarField;

/// Relative change below which two consecutive schedule radii agree.
const STABILITY: f64 = 0.02;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipEstimator {
    /// `max_{0 < ρ(i,j) < r} |f_i - f_j| / ρ(i,j)`.
    #[default]
    Ratio,
    /// `max_{0 < ρ(i,j) < r} |f_i - f_j| / r`, the literal definition at a
    /// fixed scale. Underestimates on grids when no sample sits near the
    /// sphere of radius `r` in the steepest direction.
    RadiusNormalized,
}

/// Pointwise estimate of `Lip f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipField {
    pub values: Vec<f64>,
    pub estimator: LipEstimator,
    /// Radii used, largest first.
    pub schedule: Vec<f64>,
    /// Schedule index whose estimate was kept, per point (`None` if isolated).
    pub chosen: Vec<Option<usize>>,
    /// Points with no neighbour inside any schedule radius (estimate 0).
    pub isolated: Vec<usize>,
}

impl LipField {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// `r_k = 8h·2^{-k}`, `k = 0..3`, with `h` the median nearest-neighbour
/// spacing.
pub fn default_schedule(space: &MetricMeasureSpace) -> Vec<f64> {
    let h = space.median_nn_spacing();
    (0..4).map(|k| 8.0 * h / f64::from(1u32 << k)).collect()
}

/// Estimates `Lip f` at every point.
///
/// For each point the estimator is evaluated at every schedule radius. A
/// radius is admissible at a point when its punctured ball holds at least
/// `2·intrinsic_dim` neighbours, or as many as the largest radius holds if
/// that is fewer. The smallest admissible radius whose estimate changes by
/// less than 2% relative to the next larger radius is kept; if no
/// consecutive pair is stable, the smallest admissible radius wins.
pub fn lip_field(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    schedule: &[f64],
    estimator: LipEstimator,
) -> Result<LipField> {
    field.check_len(space)?;
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty radius schedule".into()));
    }
    if let Some(&r) = schedule.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::NonPositiveRadius(r));
    }
    let mut radii = schedule.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    radii.dedup();
    let m = radii.len();
    let f = &field.values;
    let n = space.len();
    let wanted = 2 * space.intrinsic_dim();

    let per_point = par::map_range_init(
        n,
        || (vec![0.0f64; m], vec![0usize; m]),
        |(est, count), i| {
            est.fill(0.0);
            count.fill(0);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = space.dist(i, j);
                if d >= radii[0] {
                    continue;
                }
                let df = (f[i] - f[j]).abs();
                let ratio = df / d;
                for k in 0..m {
                    if d < radii[k] {
                        count[k] += 1;
                        let q = match estimator {
                            LipEstimator::Ratio => ratio,
                            LipEstimator::RadiusNormalized => df / radii[k],
                        };
                        if q > est[k] {
                            est[k] = q;
                        }
                    } else {
                        break;
                    }
                }
            }
            select(est, count, wanted)
        },
    );

    let mut values = Vec::with_capacity(n);
    let mut chosen = Vec::with_capacity(n);
    let mut isolated = Vec::new();
    for (i, pick) in per_point.into_iter().enumerate() {
        match pick {
            Some((k, v)) => {
                values.push(v);
                chosen.push(Some(k));
            }
            None => {
                values.push(0.0);
                chosen.push(None);
                isolated.push(i);
            }
        }
    }
    Ok(LipField {
        values,
        estimator,
        schedule: radii,
        chosen,
        isolated,
    })
}

fn select(est: &[f64], count: &[usize], wanted: usize) -> Option<(usize, f64)> {
    let need = wanted.min(count[0]);
    if need == 0 {
        return None;
    }
    // Counts only grow with the radius, so admissible radii form a prefix.
    let smallest = (0..est.len()).rev().find(|&k| count[k] >= need)?;
    for k in (1..=smallest).rev() {
        let (a, b) = (est[k], est[k - 1]);
        let stable = if b == 0.0 {
            a == 0.0
        } else {
            ((a - b) / b).abs() < STABILITY
        };
        if stable {
            return Some((k, a));
        }
    }
    Some((smallest, est[smallest]))
}
