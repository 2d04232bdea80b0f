//! Ordered-pair quotient spectra and exact weak-type suprema.
//!
//! For a field `f`, exponents `s > 0`, `r ≥ 1`, every ordered pair `i ≠ j`
//! contributes the value `q = |f_i - f_j| / (ρ(i,j)^s V(i,j)^{1/r})` with mass
//! `w_i w_j`. The pair measure of `{q > λ}` is a right-continuous decreasing
//! step function `W(λ)`, so
//!
//! ```text
//! sup_{λ>0} λ^p W(λ) = max over distinct values v of  v^p · W({q ≥ v})
//! ```
//!
//! (the supremum is approached as `λ ↑ v`). One descending pass with a running
//! cumulative weight evaluates it exactly.
//!
//! Spectra above [`KernelConfig::max_entries`] are never materialized: a
//! bucketed first pass bounds every bucket's contribution, and only buckets
//! that can still hold the maximum are re-enumerated exactly. Both paths
//! round each cumulative weight once from an exact sum, so they return
//! bit-identical values.

mod bucketed;
mod io;
mod kernel;

pub use io::{read_spectrum_binary, write_profile_csv, write_spectrum_binary};
pub use kernel::quotient_value;
pub(crate) use kernel::{for_each_pair, for_each_quotient, pow_p, RowScratch};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::mmspace::MetricMeasureSpace;
use crate::par;
use crate::sum::ExactSum;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub value: f64,
    pub weight: f64,
}

/// All nonzero ordered-pair quotients, sorted by value descending.
///
/// Zero quotients never enter a superlevel set `{q > λ}`, `λ > 0`; they are
/// compacted into `zero_weight`.
#[derive(Clone, Debug)]
pub struct QuotientSpectrum {
    pub entries: Vec<SpectrumEntry>,
    pub s: f64,
    pub r: f64,
    pub zero_count: usize,
    pub zero_weight: f64,
    pub total_weight: f64,
}

impl QuotientSpectrum {
    /// Builds a spectrum from raw entries (any order; zeros are compacted).
    pub fn from_entries(raw: impl IntoIterator<Item = SpectrumEntry>, s: f64, r: f64) -> Result<Self> {
        let mut entries = Vec::new();
        let mut zero = ExactSum::new();
        let mut total = ExactSum::new();
        let mut zero_count = 0;
        for e in raw {
            if !(e.value >= 0.0 && e.value.is_finite() && e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidParameter(format!("spectrum entry {e:?}")));
            }
            total.add(e.weight);
            if e.value == 0.0 {
                zero.add(e.weight);
                zero_count += 1;
            } else {
                entries.push(e);
            }
        }
        par::sort_by(&mut entries, |a, b| b.value.total_cmp(&a.value));
        Ok(Self {
            entries,
            s,
            r,
            zero_count,
            zero_weight: zero.value(),
            total_weight: total.value(),
        })
    }

    /// Number of ordered pairs represented, zeros included.
    pub fn pair_count(&self) -> usize {
        self.entries.len() + self.zero_count
    }

    pub fn max_value(&self) -> f64 {
        self.entries.first().map_or(0.0, |e| e.value)
    }
}

/// One evaluation of `λ ↦ λ^p W(λ)` at `λ ↑ value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub value: f64,
    pub lambda_p_w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    Full,
    Bucketed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakNormResult {
    pub p: f64,
    /// `sup_λ λ^p W(λ)`.
    pub value: f64,
    /// Spectrum value at which the supremum is attained (largest on ties).
    pub argmax: Option<f64>,
    /// Descending in value. Every distinct value in full mode; in bucketed
    /// mode exact points for refined buckets and one exact point (at the
    /// bucket minimum) for the others.
    pub profile: Vec<ProfilePoint>,
    /// Exact profile over `[max / tail_span, max]` when `tail_exact`.
    pub tail: Vec<ProfilePoint>,
    pub tail_exact: bool,
    /// Smallest value covered by `tail`.
    pub tail_floor: f64,
    pub max_value: f64,
    pub mode: EngineMode,
    pub pair_count: usize,
}

impl WeakNormResult {
    fn zero(p: f64, pair_count: usize, mode: EngineMode) -> Self {
        Self {
            p,
            value: 0.0,
            argmax: None,
            profile: Vec::new(),
            tail: Vec::new(),
            tail_exact: true,
            tail_floor: 0.0,
            max_value: 0.0,
            mode,
            pair_count,
        }
    }

    /// Profile points with `lo ≤ value ≤ hi`.
    pub fn profile_between(&self, lo: f64, hi: f64) -> impl Iterator<Item = &ProfilePoint> {
        let source = if self.tail_exact && lo >= self.tail_floor {
            &self.tail
        } else {
            &self.profile
        };
        source.iter().filter(move |pt| pt.value >= lo && pt.value <= hi)
    }
}

/// Engine limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Largest spectrum materialized in memory; beyond it the bucketed
    /// engine runs.
    pub max_entries: usize,
    /// The exact tail profile covers `[max / tail_span, max]`.
    pub tail_span: f64,
    /// Most entries re-enumerated for the tail profile in bucketed mode.
    pub tail_cap: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            max_entries: 20_000_000,
            tail_span: 20.0,
            tail_cap: 8_000_000,
        }
    }
}

fn check_exponents(s: f64, r: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "quotient exponent s = {s} must be positive"
        )));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "quotient exponent r = {r} must be at least 1"
        )));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p = {p} must be at least 1")));
    }
    Ok(())
}

/// Materializes the full ordered-pair spectrum.
pub fn pair_quotients(space: &MetricMeasureSpace, field: &ScalarField, s: f64, r: f64) -> Result<QuotientSpectrum> {
    field.check_len(space)?;
    check_exponents(s, r)?;
    let n = space.len();
    let f = &field.values;
    let blocks = par::map_range_init(n, RowScratch::default, |scratch, i| {
        let mut out = Vec::with_capacity(n.saturating_sub(1));
        let mut zero = ExactSum::new();
        let mut zero_count = 0usize;
        for_each_quotient(space, f, s, r, scratch, i, |_, q, w| {
            if q == 0.0 {
                zero.add(w);
                zero_count += 1;
            } else {
                out.push(SpectrumEntry { value: q, weight: w });
            }
        });
        (out, zero, zero_count)
    });
    let mut entries = Vec::with_capacity(blocks.iter().map(|b| b.0.len()).sum());
    let mut zero = ExactSum::new();
    let mut total = ExactSum::new();
    let mut zero_count = 0;
    for (block, z, zc) in blocks {
        total.extend(block.iter().map(|e| e.weight));
        entries.extend(block);
        total.merge(&z);
        zero.merge(&z);
        zero_count += zc;
    }
    par::sort_by(&mut entries, |a, b| b.value.total_cmp(&a.value));
    Ok(QuotientSpectrum {
        entries,
        s,
        r,
        zero_count,
        zero_weight: zero.value(),
        total_weight: total.value(),
    })
}

/// Exact `sup_{λ>0} λ^p W(λ)` of a materialized spectrum.
pub fn weak_norm(spectrum: &QuotientSpectrum, p: f64) -> Result<WeakNormResult> {
    weak_norm_with(spectrum, p, &KernelConfig::default())
}

pub fn weak_norm_with(spectrum: &QuotientSpectrum, p: f64, cfg: &KernelConfig) -> Result<WeakNormResult> {
    check_p(p)?;
    let entries = &spectrum.entries;
    if entries.is_empty() {
        return Ok(WeakNormResult::zero(p, spectrum.pair_count(), EngineMode::Full));
    }
    let mut acc = ExactSum::new();
    let profile = descending_profile(entries, p, &mut acc);
    let (value, argmax) = best(&profile);
    let max_value = entries[0].value;
    let cut = max_value / cfg.tail_span;
    let tail = profile.iter().take_while(|pt| pt.value >= cut).copied().collect();
    Ok(WeakNormResult {
        p,
        value,
        argmax,
        profile,
        tail,
        tail_exact: true,
        tail_floor: cut,
        max_value,
        mode: EngineMode::Full,
        pair_count: spectrum.pair_count(),
    })
}

/// Walks entries sorted descending, adding weights onto `acc` (which may
/// start from the mass of larger values), one point per distinct value.
fn descending_profile(entries: &[SpectrumEntry], p: f64, acc: &mut ExactSum) -> Vec<ProfilePoint> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < entries.len() {
        let v = entries[k].value;
        while k < entries.len() && entries[k].value == v {
            acc.add(entries[k].weight);
            k += 1;
        }
        out.push(ProfilePoint {
            value: v,
            lambda_p_w: pow_p(v, p) * acc.value(),
        });
    }
    out
}

/// Maximum over a descending profile; the first (largest-value) point wins
/// ties.
fn best(profile: &[ProfilePoint]) -> (f64, Option<f64>) {
    let mut value = 0.0;
    let mut argmax = None;
    for pt in profile {
        if pt.lambda_p_w > value {
            value = pt.lambda_p_w;
            argmax = Some(pt.value);
        }
    }
    (value, argmax)
}

/// Exact weak-type supremum of the pair quotients of `field`, without
/// materializing more than `cfg.max_entries` entries.
pub fn weak_norm_of_field(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    s: f64,
    r: f64,
    p: f64,
    cfg: &KernelConfig,
) -> Result<WeakNormResult> {
    field.check_len(space)?;
    check_exponents(s, r)?;
    check_p(p)?;
    let n = space.len();
    if n * (n - 1) <= cfg.max_entries {
        let spectrum = pair_quotients(space, field, s, r)?;
        weak_norm_with(&spectrum, p, cfg)
    } else {
        bucketed::weak_norm_bucketed(space, &field.values, s, r, p, cfg)
    }
}
