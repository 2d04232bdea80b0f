//! Seminorms and equivalence ratios built on the pair kernel.
//!
//! All reported seminorms are `p`-th powers; no roots are taken here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{LipField, ScalarField};
use crate::mmspace::{Metric, MetricMeasureSpace};
use crate::par;
use crate::sum::ExactSum;
use crate::weaknorm::{self, for_each_pair, pow_p, EngineMode, KernelConfig, RowScratch, WeakNormResult};

/// The liminf window is `[c/10, c]` with `c = LIMINF_CEILING · max q`.
pub const LIMINF_CEILING: f64 = 0.5;
const LIMINF_DECADE: f64 = 10.0;

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p = {p} must be at least 1")));
    }
    Ok(())
}

fn check_lip(space: &MetricMeasureSpace, lip: &LipField) -> Result<()> {
    if lip.values.len() != space.len() {
        return Err(Error::LengthMismatch {
            expected: space.len(),
            got: lip.values.len(),
        });
    }
    Ok(())
}

/// `Σ_i ℓ_i^p w_i`.
pub fn sobolev_seminorm(space: &MetricMeasureSpace, lip: &LipField, p: f64) -> Result<f64> {
    check_p(p)?;
    check_lip(space, lip)?;
    Ok(lip
        .values
        .iter()
        .zip(space.weights())
        .map(|(&l, &w)| pow_p(l, p) * w)
        .collect::<ExactSum>()
        .value())
}

/// Extent of `λ^p W(λ)` over the liminf window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiminfSummary {
    pub window: (f64, f64),
    pub points: usize,
    pub min: f64,
    pub max: f64,
    /// `min / sobolev`, when the seminorm is positive.
    pub constant: Option<f64>,
    pub exact: bool,
}

pub fn liminf_summary(weak: &WeakNormResult, sobolev: f64) -> LiminfSummary {
    let hi = LIMINF_CEILING * weak.max_value;
    let lo = hi / LIMINF_DECADE;
    let (mut min, mut max, mut points) = (f64::INFINITY, 0.0f64, 0);
    for pt in weak.profile_between(lo, hi) {
        min = min.min(pt.lambda_p_w);
        max = max.max(pt.lambda_p_w);
        points += 1;
    }
    if points == 0 {
        min = 0.0;
    }
    LiminfSummary {
        window: (lo, hi),
        points,
        min,
        max,
        constant: (sobolev > 0.0).then(|| min / sobolev),
        exact: weak.mode == EngineMode::Full || (weak.tail_exact && lo >= weak.tail_floor),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub p: f64,
    /// `sup_λ λ^p (μ⊗μ)(D_λ)`.
    pub bvsy: f64,
    /// `Σ (Lip f)^p w`.
    pub sobolev: f64,
    /// `bvsy / sobolev`; absent when the seminorm vanishes.
    pub ratio: Option<f64>,
    pub argmax: Option<f64>,
    pub max_quotient: f64,
    pub liminf: LiminfSummary,
    pub lip_max: f64,
    pub mode: EngineMode,
    pub pair_count: usize,
}

/// An equivalence report with the weak-norm result it was built from.
#[derive(Clone, Debug)]
pub struct Equivalence {
    pub report: EquivalenceReport,
    pub weak: WeakNormResult,
}

pub fn bvsy_equivalence(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    lip: &LipField,
    p: f64,
) -> Result<EquivalenceReport> {
    Ok(bvsy_equivalence_with(space, field, lip, p, &KernelConfig::default())?.report)
}

pub fn bvsy_equivalence_with(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    lip: &LipField,
    p: f64,
    cfg: &KernelConfig,
) -> Result<Equivalence> {
    check_p(p)?;
    let sobolev = sobolev_seminorm(space, lip, p)?;
    let weak = weaknorm::weak_norm_of_field(space, field, 1.0, p, p, cfg)?;
    let report = EquivalenceReport {
        p,
        bvsy: weak.value,
        sobolev,
        ratio: (sobolev > 0.0).then(|| weak.value / sobolev),
        argmax: weak.argmax,
        max_quotient: weak.max_value,
        liminf: liminf_summary(&weak, sobolev),
        lip_max: lip.max(),
        mode: weak.mode,
        pair_count: weak.pair_count,
    };
    Ok(Equivalence { report, weak })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GagliardoVariant {
    /// Kernel `ρ^{s p} V(x, y)`.
    #[default]
    Metric,
    /// Kernel `|x - y|^{n + s p}`.
    Euclidean,
}

/// `Σ_{i≠j} |f_i - f_j|^{p1} w_i w_j / K(i, j)` (the `p1`-th power of the
/// seminorm).
pub fn gagliardo(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    s1: f64,
    p1: f64,
    variant: GagliardoVariant,
) -> Result<f64> {
    field.check_len(space)?;
    if !(s1 > 0.0 && s1 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothness s1 = {s1} must lie in (0, 1)"
        )));
    }
    check_p(p1)?;
    let dim = match (variant, space.metric()) {
        (GagliardoVariant::Metric, _) => 0,
        (GagliardoVariant::Euclidean, Metric::Euclidean { dim, .. }) => *dim,
        (GagliardoVariant::Euclidean, m) => {
            return Err(Error::UnsupportedMetric {
                op: "euclidean gagliardo",
                metric: m.name(),
            })
        }
    };
    let f = &field.values;
    let w = space.weights();
    let sp = s1 * p1;
    let n = space.len();
    let total = par::fold_range(
        n,
        RowScratch::default,
        ExactSum::new,
        |scratch, acc, i| match variant {
            GagliardoVariant::Metric => for_each_pair(space, scratch, i, |j, rho, vol| {
                let df = (f[i] - f[j]).abs();
                if df > 0.0 {
                    acc.add(pow_p(df, p1) * w[i] * w[j] / (rho.powf(sp) * vol));
                }
            }),
            GagliardoVariant::Euclidean => {
                let e = dim as f64 + sp;
                for j in 0..n {
                    let df = (f[i] - f[j]).abs();
                    if j != i && df > 0.0 {
                        acc.add(pow_p(df, p1) * w[i] * w[j] / space.dist(i, j).powf(e));
                    }
                }
            }
        },
        |mut a, b| {
            a.merge(&b);
            a
        },
    );
    Ok(total.value())
}

/// `μ(S(x_i, r)) / μ(B(x_i, r))` with
/// `S = {z ∈ B : |f(z) - f(x_i)| ≥ ℓ_i ρ(z, x_i) / 8}`; `None` when
/// `ℓ_i ≤ 4δ`.
pub fn critical_set_fraction(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    lip: &LipField,
    i: usize,
    r: f64,
    delta: f64,
) -> Result<Option<f64>> {
    field.check_len(space)?;
    check_lip(space, lip)?;
    if i >= space.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: space.len(),
        });
    }
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius(r));
    }
    let l = lip.values[i];
    if l <= 4.0 * delta {
        return Ok(None);
    }
    let f = &field.values;
    let w = space.weights();
    let (mut num, mut den) = (ExactSum::new(), ExactSum::new());
    for j in 0..space.len() {
        let d = space.dist(i, j);
        if d < r {
            den.add(w[j]);
            if (f[j] - f[i]).abs() >= l * d / 8.0 {
                num.add(w[j]);
            }
        }
    }
    Ok(Some(num.value() / den.value()))
}

/// Lower bound the critical-set fraction must clear.
pub const CRITICAL_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub delta: f64,
    /// Largest sweep radius below which `|g_x - g_y| < δ` for all pairs
    /// closer than it; `None` if even the smallest sweep radius fails.
    /// `g` is the analytic gradient norm when the field carries one and
    /// the estimate `ℓ` otherwise.
    pub r_delta: Option<f64>,
    pub analytic_modulus: bool,
    /// Radii checked, from `r_delta` down to the floor, or the floor alone
    /// when `r_delta` lies below it.
    pub radii: Vec<f64>,
    pub eligible_points: usize,
    pub min_fraction: f64,
    pub worst: Option<(usize, f64)>,
    pub passed: bool,
}

/// Sweep radii `diam · 2^{-k/2}` down to `floor`, largest first.
fn sweep_radii(space: &MetricMeasureSpace, floor: f64) -> Vec<f64> {
    let diam = (0..space.len()).map(|j| space.dist(0, j)).fold(0.0, f64::max) * 2.0;
    let mut radii = Vec::new();
    let mut r = diam.max(floor);
    while r >= floor {
        radii.push(r);
        r *= std::f64::consts::FRAC_1_SQRT_2;
    }
    radii
}

/// Index of the smallest radius (radii descending) still larger than `d`.
fn deepest(radii: &[f64], d: f64) -> Option<usize> {
    let k = radii.partition_point(|&r| r > d);
    k.checked_sub(1)
}

/// Checks the critical-set bound at every point with `ℓ > 4δ`, for every
/// sweep radius in `[floor, r_δ]`, where `δ = delta_frac · max ℓ` and the
/// floor is twice the median nearest-neighbour spacing. When `r_δ` is not
/// resolved by the sweep only the floor is checked.
pub fn critical_set_study(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    lip: &LipField,
    delta_frac: f64,
) -> Result<CriticalReport> {
    field.check_len(space)?;
    check_lip(space, lip)?;
    let delta = delta_frac * lip.max();
    let floor = 2.0 * space.median_nn_spacing();
    let radii = sweep_radii(space, floor);
    let m = radii.len();
    let l = &lip.values;
    let g: &[f64] = field.grad_norm.as_deref().unwrap_or(l);
    let f = &field.values;
    let w = space.weights();
    let n = space.len();

    // modulus[k] = max |g_i - g_j| over pairs closer than radii[k].
    let buckets = par::fold_range(
        n,
        || (),
        || vec![0.0f64; m],
        |_, acc, i| {
            for j in i + 1..n {
                if let Some(k) = deepest(&radii, space.dist(i, j)) {
                    let v = (g[i] - g[j]).abs();
                    if v > acc[k] {
                        acc[k] = v;
                    }
                }
            }
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x = x.max(y);
            }
            a
        },
    );
    let mut modulus = buckets;
    for k in (0..m.saturating_sub(1)).rev() {
        modulus[k] = modulus[k].max(modulus[k + 1]);
    }
    let first = modulus.iter().position(|&v| v < delta);
    let tested: Vec<usize> = match first {
        Some(k) => (k..m).collect(),
        None => (m.saturating_sub(1)..m).collect(),
    };

    let eligible: Vec<usize> = (0..n).filter(|&i| l[i] > 4.0 * delta).collect();
    let per_point = par::map_range(eligible.len(), |e| {
        let i = eligible[e];
        let mut num = vec![ExactSum::new(); m];
        let mut den = vec![ExactSum::new(); m];
        for j in 0..n {
            let d = space.dist(i, j);
            if let Some(k) = deepest(&radii, d) {
                den[k].add(w[j]);
                if (f[j] - f[i]).abs() >= l[i] * d / 8.0 {
                    num[k].add(w[j]);
                }
            }
        }
        // Suffix-accumulate so index k holds the whole ball of radius k.
        let (mut a, mut b) = (ExactSum::new(), ExactSum::new());
        let mut worst = (f64::INFINITY, 0.0);
        for k in (0..m).rev() {
            a.merge(&num[k]);
            b.merge(&den[k]);
            if tested.contains(&k) {
                let frac = a.value() / b.value();
                if frac < worst.0 {
                    worst = (frac, radii[k]);
                }
            }
        }
        worst
    });
    let mut min_fraction = f64::INFINITY;
    let mut worst = None;
    for (e, &(frac, r)) in per_point.iter().enumerate() {
        if frac < min_fraction {
            min_fraction = frac;
            worst = Some((eligible[e], r));
        }
    }
    let checks = tested.len() * eligible.len();
    Ok(CriticalReport {
        delta,
        r_delta: first.map(|k| radii[k]),
        analytic_modulus: field.grad_norm.is_some(),
        radii: tested.iter().map(|&k| radii[k]).collect(),
        eligible_points: eligible.len(),
        min_fraction: if checks == 0 { 0.0 } else { min_fraction },
        worst,
        passed: checks > 0 && min_fraction >= CRITICAL_FRACTION,
    })
}

/// [`critical_set_study`] at `δ ∈ {0.01, 0.05, 0.1} · max ℓ`.
pub fn critical_set_sweep(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    lip: &LipField,
) -> Result<Vec<CriticalReport>> {
    [0.01, 0.05, 0.1]
        .iter()
        .map(|&d| critical_set_study(space, field, lip, d))
        .collect()
}
