//! Sampled scalar fields, a gallery of compactly supported test functions
//! with analytic gradient norms, and pointwise Lipschitz estimators.

mod lip;

pub use lip::{default_schedule, lip_field, LipEstimator, LipField};

use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmspace::{Metric, MetricMeasureSpace};

/// Values of `f` at the sample points, optionally with `|∇f|` from the
/// analytic form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
    #[serde(default, rename = "grad_norm", skip_serializing_if = "Option::is_none")]
    pub grad_norm: Option<Vec<f64>>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field values must be finite".into()));
        }
        Ok(Self {
            values,
            grad_norm: None,
            meta: serde_json::Value::Null,
        })
    }

    /// Samples `f` at every point's coordinates.
    pub fn from_fn(space: &MetricMeasureSpace, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..space.len())
            .map(|i| {
                space.coords(i).map(&f).ok_or(Error::UnsupportedMetric {
                    op: "from_fn",
                    metric: space.metric().name(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_len(&self, space: &MetricMeasureSpace) -> Result<()> {
        if self.values.len() != space.len() {
            return Err(Error::LengthMismatch {
                expected: space.len(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    /// `a·f + b`; gradient norms scale by `|a|`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| a * v + b).collect(),
            grad_norm: self.grad_norm.as_ref().map(|g| g.iter().map(|x| a.abs() * x).collect()),
            meta: self.meta.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let f: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if f.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field values must be finite".into()));
        }
        Ok(f)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Gallery functions. All but `Sine` are radial profiles `φ(d(x, c))` in the
/// space's own metric, supported in the closed ball of radius `scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GalleryKind {
    /// Quartic bump `A(1 - d²/R²)²`.
    Bump,
    /// `A·max(0, 1 - d/R)`.
    Tent,
    /// Plane wave `A·sin(2π(x₀ - c₀)/R)` along the first coordinate.
    Sine,
    /// `A·cos⁴(πd/(2R))`, a C³ compactly supported bump.
    SineBump,
    /// Smoothed indicator of `B(c, R/2)`: 1 inside, quintic smootherstep
    /// down to 0 at `d = R`.
    IndicatorSmooth,
}

impl FromStr for GalleryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "bump" => Ok(Self::Bump),
            "tent" => Ok(Self::Tent),
            "sine" => Ok(Self::Sine),
            "sine_bump" => Ok(Self::SineBump),
            "indicator_smooth" => Ok(Self::IndicatorSmooth),
            _ => Err(Error::UnknownKind {
                what: "gallery kind",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalleryParams {
    /// Coordinates for coordinate metrics, `[node]` for graphs.
    pub center: Vec<f64>,
    pub scale: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl GalleryParams {
    pub fn new(center: Vec<f64>, scale: f64, amplitude: f64) -> Self {
        Self {
            center,
            scale,
            amplitude,
        }
    }
}

impl GalleryKind {
    pub const ALL: [GalleryKind; 5] = [
        GalleryKind::Bump,
        GalleryKind::Tent,
        GalleryKind::Sine,
        GalleryKind::SineBump,
        GalleryKind::IndicatorSmooth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GalleryKind::Bump => "bump",
            GalleryKind::Tent => "tent",
            GalleryKind::Sine => "sine",
            GalleryKind::SineBump => "sine_bump",
            GalleryKind::IndicatorSmooth => "indicator_smooth",
        }
    }

    /// Profile value and `|φ'|` at distance `d` (radial kinds).
    fn radial(self, d: f64, r: f64, a: f64) -> (f64, f64) {
        match self {
            GalleryKind::Bump => {
                if d >= r {
                    return (0.0, 0.0);
                }
                let u = 1.0 - d * d / (r * r);
                (a * u * u, 4.0 * a.abs() * d * u / (r * r))
            }
            GalleryKind::Tent => {
                if d > r {
                    return (0.0, 0.0);
                }
                // Lip f = A/R on the closed support, including the apex.
                (a * (1.0 - d / r), a.abs() / r)
            }
            GalleryKind::SineBump => {
                if d >= r {
                    return (0.0, 0.0);
                }
                let t = PI * d / (2.0 * r);
                let (s, c) = t.sin_cos();
                (a * c.powi(4), 2.0 * PI * a.abs() * c.powi(3) * s / r)
            }
            GalleryKind::IndicatorSmooth => {
                let inner = 0.5 * r;
                if d <= inner {
                    return (a, 0.0);
                }
                if d >= r {
                    return (0.0, 0.0);
                }
                let w = r - inner;
                let t = (d - inner) / w;
                let step = t * t * t * (t * (6.0 * t - 15.0) + 10.0);
                let slope = 30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
                (a * (1.0 - step), a.abs() * slope)
            }
            GalleryKind::Sine => unreachable!("sine is not radial"),
        }
    }
}

/// Samples a gallery function on `space`.
///
/// Gradient norms are analytic for coordinate metrics (on the sphere they
/// are tangential norms); graphs get values only.
pub fn gallery_make(space: &MetricMeasureSpace, kind: GalleryKind, params: &GalleryParams) -> Result<ScalarField> {
    let (r, a) = (params.scale, params.amplitude);
    if !(r > 0.0 && r.is_finite()) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("gallery scale {r}, amplitude {a}")));
    }
    let n = space.len();
    let mut values = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    if kind == GalleryKind::Sine {
        match space.metric() {
            Metric::Euclidean { .. } | Metric::FlatTorus { .. } => {}
            m => {
                return Err(Error::UnsupportedMetric {
                    op: "sine gallery field",
                    metric: m.name(),
                })
            }
        }
        let c0 = *params
            .center
            .first()
            .ok_or_else(|| Error::InvalidParameter("sine needs a center".into()))?;
        let k = 2.0 * PI / r;
        for i in 0..n {
            let x0 = space.coords(i).unwrap()[0];
            let (s, c) = (k * (x0 - c0)).sin_cos();
            values.push(a * s);
            grad.push(a.abs() * k * c.abs());
        }
    } else {
        for i in 0..n {
            let d = space.distance_to(i, &params.center)?;
            let (v, g) = kind.radial(d, r, a);
            values.push(v);
            grad.push(g);
        }
    }
    let grad_norm = match space.metric() {
        Metric::Graph { .. } => None,
        _ => Some(grad),
    };
    Ok(ScalarField {
        values,
        grad_norm,
        meta: serde_json::json!({
            "gallery": kind.name(),
            "center": params.center,
            "scale": r,
            "amplitude": a,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::{cycle_graph, icosphere, uniform_grid, GridSpec};

    fn line(n: usize) -> MetricMeasureSpace {
        uniform_grid(&GridSpec::cube(1, n, -1.0, 1.0)).unwrap()
    }

    #[test]
    fn peak_values() {
        let s = MetricMeasureSpace::euclidean(1, vec![0.0, 0.5], vec![1.0, 1.0]).unwrap();
        let p = GalleryParams::new(vec![0.0], 1.0, 3.0);
        for kind in [
            GalleryKind::Bump,
            GalleryKind::Tent,
            GalleryKind::SineBump,
            GalleryKind::IndicatorSmooth,
        ] {
            assert_eq!(gallery_make(&s, kind, &p).unwrap().values[0], 3.0, "{kind:?}");
        }
        let bump = gallery_make(&s, GalleryKind::Bump, &p).unwrap();
        assert_eq!(bump.values[1], 3.0 * 0.75 * 0.75);
    }

    #[test]
    fn bump_max_gradient() {
        let s = line(8192);
        let f = gallery_make(&s, GalleryKind::Bump, &GalleryParams::new(vec![0.0], 1.0, 1.0)).unwrap();
        let g = f.grad_norm.unwrap().into_iter().fold(0.0, f64::max);
        let exact = 8.0 / (3.0 * 3f64.sqrt());
        assert!((g - exact).abs() < 1e-6, "{g} vs {exact}");
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let s = line(4000);
        let h = 1e-6;
        for kind in [
            GalleryKind::Bump,
            GalleryKind::SineBump,
            GalleryKind::IndicatorSmooth,
            GalleryKind::Sine,
        ] {
            let p = GalleryParams::new(vec![0.1], 0.8, 1.3);
            let f = gallery_make(&s, kind, &p).unwrap();
            let g = f.grad_norm.as_ref().unwrap();
            for i in (0..s.len()).step_by(97) {
                let x = s.coords(i).unwrap()[0];
                let probe = MetricMeasureSpace::euclidean(1, vec![x - h, x + h], vec![1.0, 1.0]).unwrap();
                let v = gallery_make(&probe, kind, &p).unwrap().values;
                let fd = ((v[1] - v[0]) / (2.0 * h)).abs();
                assert!((fd - g[i]).abs() < 1e-5, "{kind:?} at {x}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn sphere_cap_and_graph() {
        let s = icosphere(2, 1.0).unwrap();
        let f = gallery_make(
            &s,
            GalleryKind::Bump,
            &GalleryParams::new(vec![0.0, 0.0, 1.0], 1.0, 1.0),
        )
        .unwrap();
        assert_eq!(f.len(), s.len());
        assert!(f.grad_norm.is_some());
        assert!(gallery_make(&s, GalleryKind::Sine, &GalleryParams::new(vec![0.0], 1.0, 1.0)).is_err());

        let g = cycle_graph(10, 1.0).unwrap();
        let f = gallery_make(&g, GalleryKind::Tent, &GalleryParams::new(vec![0.0], 3.0, 1.0)).unwrap();
        assert_eq!(f.values[0], 1.0);
        assert_eq!(f.values[5], 0.0);
        assert!(f.grad_norm.is_none());
    }

    #[test]
    fn unknown_kind_is_an_error() {
        assert!(matches!(
            "wavelet".parse::<GalleryKind>(),
            Err(Error::UnknownKind { .. })
        ));
        assert_eq!("sine-bump".parse::<GalleryKind>().unwrap(), GalleryKind::SineBump);
    }

    #[test]
    fn field_file_shape() {
        let f: ScalarField = serde_json::from_str(r#"{"values": [1, 2], "meta": {"k": 1}}"#).unwrap();
        assert_eq!(f.values, vec![1.0, 2.0]);
        assert!(f.grad_norm.is_none());
        let text = serde_json::to_string(&f.affine(2.0, 0.0)).unwrap();
        assert!(text.contains("\"values\":[2.0,4.0]"));
    }
}
