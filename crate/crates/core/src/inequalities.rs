//! Weak-type fractional Sobolev and Gagliardo–Nirenberg checks.
//!
//! Unlike [`crate::functionals`], left sides here are roots:
//! `sup_λ λ [W(λ)]^{1/p} = [sup_λ λ^p W(λ)]^{1/p}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{LipField, ScalarField};
use crate::functionals::{gagliardo, GagliardoVariant};
use crate::mmspace::MetricMeasureSpace;
use crate::sum::ExactSum;
use crate::weaknorm::{quotient_value, weak_norm_of_field, KernelConfig};

/// `s = (1-θ)s₁ + θ`, `1/p = (1-θ)/p₁ + θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationParams {
    pub s1: f64,
    pub p1: f64,
    pub theta: f64,
    pub s: f64,
    pub p: f64,
}

impl InterpolationParams {
    pub fn new(s1: f64, p1: f64, theta: f64) -> Result<Self> {
        if !(s1 > 0.0 && s1 < 1.0) || !(p1 > 1.0 && p1.is_finite()) || !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "interpolation parameters s1 = {s1}, p1 = {p1}, theta = {theta}"
            )));
        }
        Ok(Self {
            s1,
            p1,
            theta,
            s: (1.0 - theta) * s1 + theta,
            p: 1.0 / ((1.0 - theta) / p1 + theta),
        })
    }
}

/// The quantities balanced in the interpolation argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnComponents {
    /// `sup_λ λ W_{1,1}(λ)`, with `V` to the first power.
    pub h: f64,
    /// `[sup_λ λ^{p₁} W_{s₁,p₁}(λ)]^{1/p₁}`.
    pub g: f64,
    /// Solves `(G A^θ)^{p₁/p} = (H A^{θ-1})^{1/p}` (at `λ = 1`).
    pub a: Option<f64>,
    /// Measured `c` in `lhs = c H^θ G^{1-θ}`.
    pub c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; absent when `rhs = 0`.
    pub ratio: Option<f64>,
    pub components: Option<GnComponents>,
    pub params: Option<InterpolationParams>,
}

fn l1_lip(space: &MetricMeasureSpace, lip: &LipField) -> Result<f64> {
    if lip.values.len() != space.len() {
        return Err(Error::LengthMismatch {
            expected: space.len(),
            got: lip.values.len(),
        });
    }
    Ok(lip
        .values
        .iter()
        .zip(space.weights())
        .map(|(l, w)| l * w)
        .collect::<ExactSum>()
        .value())
}

/// `[sup_λ λ^p W_{s,r}(λ)]^{1/p}` with `r = p`.
fn weak_root(space: &MetricMeasureSpace, field: &ScalarField, s: f64, p: f64, cfg: &KernelConfig) -> Result<f64> {
    Ok(weak_norm_of_field(space, field, s, p, p, cfg)?.value.powf(1.0 / p))
}

/// Left: `sup_λ λ [W_{1/p,p}(λ)]^{1/p}`. Right: `‖f‖_∞^{1-1/p} ‖ℓ‖_1^{1/p}`.
pub fn sobolev_weak_check(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    lip: &LipField,
    p: f64,
    cfg: &KernelConfig,
) -> Result<InequalityReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p = {p} must be at least 1")));
    }
    let lhs = weak_root(space, field, 1.0 / p, p, cfg)?;
    let rhs = field.max_abs().powf(1.0 - 1.0 / p) * l1_lip(space, lip)?.powf(1.0 / p);
    Ok(InequalityReport {
        lhs,
        rhs,
        ratio: (rhs > 0.0).then(|| lhs / rhs),
        components: None,
        params: None,
    })
}

/// Left: `sup_λ λ [W_{s,p}(λ)]^{1/p}`. Right:
/// `‖ℓ‖_1^θ [Gagliardo_{s₁,p₁}]^{(1-θ)/p₁}` (metric kernel).
pub fn gn_check(
    space: &MetricMeasureSpace,
    field: &ScalarField,
    lip: &LipField,
    params: &InterpolationParams,
    cfg: &KernelConfig,
) -> Result<InequalityReport> {
    let InterpolationParams { s1, p1, theta, s, p } = *params;
    let lhs = weak_root(space, field, s, p, cfg)?;
    let gag = gagliardo(space, field, s1, p1, GagliardoVariant::Metric)?;
    let rhs = l1_lip(space, lip)?.powf(theta) * gag.powf((1.0 - theta) / p1);
    let h = weak_norm_of_field(space, field, 1.0, 1.0, 1.0, cfg)?.value;
    let g = weak_root(space, field, s1, p1, cfg)?;
    let a = (h > 0.0 && g > 0.0).then(|| ((h.ln() - p1 * g.ln()) / (p1 * theta - theta + 1.0)).exp());
    let scale = h.powf(theta) * g.powf(1.0 - theta);
    Ok(InequalityReport {
        lhs,
        rhs,
        ratio: (rhs > 0.0).then(|| lhs / rhs),
        components: Some(GnComponents {
            h,
            g,
            a,
            c: (scale > 0.0).then(|| lhs / scale),
        }),
        params: Some(*params),
    })
}

/// Membership of one ordered pair in `E(λ, p, s)`, `E(A^{-θ}λ, p₁, s₁)` and
/// `E(A^{1-θ}λ, 1, 1)`, where `E(λ, r, s) = {|Δf| > λ ρ^s V^{1/r}}`.
pub fn split_membership(
    df: f64,
    rho: f64,
    vol: f64,
    lambda: f64,
    a: f64,
    params: &InterpolationParams,
) -> (bool, bool, bool) {
    let InterpolationParams { s1, p1, theta, s, p } = *params;
    let inside = |lam: f64, r: f64, sx: f64| quotient_value(df, rho, vol, sx, r) > lam;
    (
        inside(lambda, p, s),
        inside(a.powf(-theta) * lambda, p1, s1),
        inside(a.powf(1.0 - theta) * lambda, 1.0, 1.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{default_schedule, gallery_make, lip_field, GalleryKind, GalleryParams, LipEstimator};
    use crate::functionals::bvsy_equivalence;
    use crate::mmspace::{random_box, uniform_grid, GridSpec};

    fn lip(s: &MetricMeasureSpace, f: &ScalarField) -> LipField {
        lip_field(s, f, &default_schedule(s), LipEstimator::Ratio).unwrap()
    }

    fn bump(n: usize) -> (MetricMeasureSpace, ScalarField) {
        let s = uniform_grid(&GridSpec::cube(1, n, -1.0, 1.0)).unwrap();
        let f = gallery_make(&s, GalleryKind::Bump, &GalleryParams::new(vec![0.0], 1.0, 1.0)).unwrap();
        (s, f)
    }

    #[test]
    fn interpolation_relations() {
        let p = InterpolationParams::new(0.5, 2.0, 0.5).unwrap();
        assert_eq!(p.s, 0.75);
        assert!((p.p - 4.0 / 3.0).abs() < 1e-15);
        assert!(p.s > p.s1 && p.s < 1.0 && p.p > 1.0 && p.p < p.p1);
        assert!(InterpolationParams::new(0.5, 2.0, 0.0).is_err());
        assert!(InterpolationParams::new(0.5, 2.0, 1.0).is_err());
        assert!(InterpolationParams::new(1.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn constant_fields() {
        let s = uniform_grid(&GridSpec::cube(1, 64, 0.0, 1.0)).unwrap();
        let c = ScalarField::new(vec![3.0; 64]).unwrap();
        let l = lip(&s, &c);
        let cfg = KernelConfig::default();
        let r = sobolev_weak_check(&s, &c, &l, 2.0, &cfg).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, None));
        let params = InterpolationParams::new(0.5, 2.0, 0.5).unwrap();
        let g = gn_check(&s, &c, &l, &params, &cfg).unwrap();
        assert_eq!(g.lhs, 0.0);
        assert!(g.components.unwrap().a.is_none());
    }

    #[test]
    fn bump_ratios_are_stable() {
        let cfg = KernelConfig::default();
        let params = InterpolationParams::new(0.5, 2.0, 0.5).unwrap();
        let run = |n| {
            let (s, f) = bump(n);
            let l = lip(&s, &f);
            (
                sobolev_weak_check(&s, &f, &l, 2.0, &cfg).unwrap(),
                gn_check(&s, &f, &l, &params, &cfg).unwrap(),
            )
        };
        let (sa, ga) = run(4096);
        let (sb, gb) = run(8192);
        let (ra, rb) = (sa.ratio.unwrap(), sb.ratio.unwrap());
        assert!(ra > 0.0 && ra <= 5.0, "{ra}");
        assert!((rb / ra - 1.0).abs() < 0.10, "{ra} {rb}");
        let (ra, rb) = (ga.ratio.unwrap(), gb.ratio.unwrap());
        assert!((rb / ra - 1.0).abs() < 0.10, "{ra} {rb}");
        let comp = ga.components.unwrap();
        let c = comp.c.unwrap();
        assert!(c.is_finite() && c > 0.0);
        assert!(ga.lhs <= c * comp.h.powf(0.5) * comp.g.powf(0.5) * (1.0 + 1e-12));
        let a = comp.a.unwrap();
        let left = (comp.g * a.powf(0.5)).powf(2.0 / params.p);
        let right = (comp.h * a.powf(-0.5)).powf(1.0 / params.p);
        assert!((left / right - 1.0).abs() < 1e-9, "{left} {right}");
    }

    #[test]
    fn ratios_are_scale_invariant() {
        let (s, f) = bump(512);
        let g = f.affine(7.0, 0.0);
        let cfg = KernelConfig::default();
        let params = InterpolationParams::new(0.3, 3.0, 0.4).unwrap();
        let (lf, lg) = (lip(&s, &f), lip(&s, &g));
        let a = sobolev_weak_check(&s, &f, &lf, 1.5, &cfg).unwrap().ratio.unwrap();
        let b = sobolev_weak_check(&s, &g, &lg, 1.5, &cfg).unwrap().ratio.unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        let a = gn_check(&s, &f, &lf, &params, &cfg).unwrap().ratio.unwrap();
        let b = gn_check(&s, &g, &lg, &params, &cfg).unwrap().ratio.unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn boundary_consistency_with_main_functional() {
        let s = random_box(1, 120, 0.0, 1.0, 9).unwrap();
        let f = ScalarField::new((0..120).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let l = lip(&s, &f);
        for p in [1.0, 1.5, 2.0] {
            let root = weak_root(&s, &f, 1.0, p, &KernelConfig::default()).unwrap();
            let main = bvsy_equivalence(&s, &f, &l, p).unwrap().bvsy.powf(1.0 / p);
            assert!((root - main).abs() <= 1e-9 * main);
        }
    }

    #[test]
    fn split_identity_on_one_pair() {
        let params = InterpolationParams::new(0.5, 2.0, 0.5).unwrap();
        let (df, rho, vol) = (0.8, 0.3, 0.2);
        let q = quotient_value(df, rho, vol, params.s, params.p);
        let q1 = quotient_value(df, rho, vol, params.s1, params.p1);
        let q2 = quotient_value(df, rho, vol, 1.0, 1.0);
        assert!((q - q1.powf(0.5) * q2.powf(0.5)).abs() < 1e-12 * q);
        let (l, a, b) = split_membership(df, rho, vol, 0.99 * q, 2.0, &params);
        assert!(l && (a || b));
        let (l, _, _) = split_membership(df, rho, vol, q, 2.0, &params);
        assert!(!l);
    }
}
