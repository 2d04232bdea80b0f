use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{GalleryKind, LipEstimator};
use crate::functionals::GagliardoVariant;
use crate::weights::WeightSpec;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MMLAB_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    /// Cell-centred grid with `n` cells per axis.
    Grid {
        dim: usize,
        n: usize,
        #[serde(default = "minus_one")]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weight: Option<WeightSpec>,
    },
    /// `n` uniform random points; needs the top-level seed.
    RandomBox {
        dim: usize,
        n: usize,
        #[serde(default = "minus_one")]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    Torus {
        dim: usize,
        n: usize,
        #[serde(default = "one")]
        period: f64,
    },
    Cycle {
        n: usize,
        #[serde(default = "one")]
        edge_length: f64,
    },
    FibonacciSphere {
        n: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    /// `n` is the subdivision level.
    Icosphere {
        #[serde(alias = "level")]
        n: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

impl SpaceSpec {
    /// The refinement parameter swept by [`super::convergence_sweep`].
    pub fn size(&self) -> Option<usize> {
        match *self {
            SpaceSpec::Grid { n, .. }
            | SpaceSpec::RandomBox { n, .. }
            | SpaceSpec::Torus { n, .. }
            | SpaceSpec::Cycle { n, .. }
            | SpaceSpec::FibonacciSphere { n, .. }
            | SpaceSpec::Icosphere { n, .. } => Some(n),
            SpaceSpec::File { .. } => None,
        }
    }

    pub fn with_size(&self, size: usize) -> Result<SpaceSpec> {
        let mut out = self.clone();
        match &mut out {
            SpaceSpec::Grid { n, .. }
            | SpaceSpec::RandomBox { n, .. }
            | SpaceSpec::Torus { n, .. }
            | SpaceSpec::Cycle { n, .. }
            | SpaceSpec::FibonacciSphere { n, .. }
            | SpaceSpec::Icosphere { n, .. } => *n = size,
            SpaceSpec::File { .. } => {
                return Err(Error::Config("a space read from a file has no size to sweep".into()))
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Gallery {
        shape: GalleryKind,
        /// Defaults to the origin (node 0 on graphs, the north pole on spheres).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Bvsy,
    Gagliardo,
    Poincare,
    SobolevWeak,
    Gn,
    Ap,
    CriticalSet,
}

impl Functional {
    pub fn name(self) -> &'static str {
        match self {
            Functional::Bvsy => "bvsy",
            Functional::Gagliardo => "gagliardo",
            Functional::Poincare => "poincare",
            Functional::SobolevWeak => "sobolev_weak",
            Functional::Gn => "gn",
            Functional::Ap => "ap",
            Functional::CriticalSet => "critical_set",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipConfig {
    #[serde(default)]
    pub estimator: LipEstimator,
    /// Radii; the default schedule when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
}

impl Default for LipConfig {
    fn default() -> Self {
        Self {
            estimator: LipEstimator::Ratio,
            schedule: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub p: f64,
    /// Poincaré mean exponent; `p` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub s1: f64,
    pub p1: f64,
    pub theta: f64,
    pub tau: f64,
    pub delta_frac: f64,
    pub variant: GagliardoVariant,
    pub lip: LipConfig,
    /// Coarsest cube generation for `ap`.
    pub g_min: u32,
    /// Sample points per axis in each finest cube for `ap`; the grid size
    /// `n` must be `points_per_cube · 2^g` for some `g ≥ g_min`.
    pub points_per_cube: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: None,
            s1: 0.5,
            p1: 2.0,
            theta: 0.5,
            tau: 1.0,
            delta_frac: 0.05,
            variant: GagliardoVariant::Metric,
            lip: LipConfig::default(),
            g_min: 1,
            points_per_cube: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Falls back to `$MMLAB_OUT_DIR`, then the working directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File stem for the report and its CSV companion; the functional name
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    pub functional: Functional,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub oracle: bool,
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|k| k + 1)
}

fn config_error(source: &str, text: Option<&str>, key: &str, msg: impl std::fmt::Display) -> Error {
    match text.and_then(|t| line_of(t, key)) {
        Some(line) => Error::Config(format!("{source}:{line}: `{key}`: {msg}")),
        None => Error::Config(format!("{source}: `{key}`: {msg}")),
    }
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; errors name `source` and the offending line.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("{source}:{}:{}: {e}", e.line(), e.column())))?;
        cfg.check(source, Some(text))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.check("config", None)
    }

    fn check(&self, source: &str, text: Option<&str>) -> Result<()> {
        let err = |key: &str, msg: String| config_error(source, text, key, msg);
        let p = &self.params;
        let at_least_one = |x: f64| x >= 1.0 && x.is_finite();
        if !at_least_one(p.p) {
            return Err(err("p", format!("must be a finite number ≥ 1, got {}", p.p)));
        }
        if let Some(q) = p.q {
            if !at_least_one(q) {
                return Err(err("q", format!("must be a finite number ≥ 1, got {q}")));
            }
        }
        if !at_least_one(p.tau) {
            return Err(err("tau", format!("must be a finite number ≥ 1, got {}", p.tau)));
        }
        if !(p.s1 > 0.0 && p.s1 < 1.0) {
            return Err(err("s1", format!("must lie in (0, 1), got {}", p.s1)));
        }
        if !(p.p1 > 1.0 && p.p1.is_finite()) {
            return Err(err("p1", format!("must be a finite number > 1, got {}", p.p1)));
        }
        if !(p.theta > 0.0 && p.theta < 1.0) {
            return Err(err("theta", format!("must lie in (0, 1), got {}", p.theta)));
        }
        if !(p.delta_frac > 0.0 && p.delta_frac <= 1.0) {
            return Err(err("delta_frac", format!("must lie in (0, 1], got {}", p.delta_frac)));
        }
        if let Some(s) = &p.lip.schedule {
            if s.is_empty() || s.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return Err(err("schedule", format!("radii must be positive and finite, got {s:?}")));
            }
        }
        if p.points_per_cube == 0 {
            return Err(err("points_per_cube", "must be positive".into()));
        }

        match &self.space {
            SpaceSpec::Grid { dim, n, lo, hi, .. } | SpaceSpec::RandomBox { dim, n, lo, hi } => {
                if *dim == 0 {
                    return Err(err("dim", "must be positive".into()));
                }
                if *n == 0 {
                    return Err(err("n", "must be positive".into()));
                }
                if !(hi > lo) {
                    return Err(err("hi", format!("must exceed lo, got [{lo}, {hi}]")));
                }
            }
            SpaceSpec::Torus { dim, n, period } => {
                if *dim == 0 || *n == 0 || !(*period > 0.0) {
                    return Err(err(
                        "torus",
                        format!("needs dim, n and period positive, got {dim}, {n}, {period}"),
                    ));
                }
            }
            SpaceSpec::Cycle { n, edge_length } => {
                if *n < 3 || !(*edge_length > 0.0) {
                    return Err(err(
                        "cycle",
                        format!("needs n ≥ 3 and a positive edge length, got {n}, {edge_length}"),
                    ));
                }
            }
            SpaceSpec::FibonacciSphere { n, radius } | SpaceSpec::Icosphere { n, radius } => {
                if *n == 0 && matches!(self.space, SpaceSpec::FibonacciSphere { .. }) {
                    return Err(err("n", "must be positive".into()));
                }
                if !(*radius > 0.0) {
                    return Err(err("radius", format!("must be positive, got {radius}")));
                }
            }
            SpaceSpec::File { .. } => {}
        }
        if matches!(self.space, SpaceSpec::RandomBox { .. }) && self.seed.is_none() {
            return Err(err("random_box", "randomized spaces need a top-level `seed`".into()));
        }

        if self.functional == Functional::Ap {
            let SpaceSpec::Grid { n, weight, .. } = &self.space else {
                return Err(err("functional", "`ap` runs on a `grid` space".into()));
            };
            if weight.is_none() {
                return Err(err("grid", "`ap` needs a `weight` on the grid".into()));
            }
            ap_generation(*n, p.points_per_cube, p.g_min).map_err(|m| err("n", m))?;
        } else if self.field.is_none() {
            return Err(err(
                "functional",
                format!("`{}` needs a `field`", self.functional.name()),
            ));
        }
        if let Some(FieldSpec::Gallery { scale, amplitude, .. }) = &self.field {
            if !(*scale > 0.0 && scale.is_finite()) {
                return Err(err("scale", format!("must be positive, got {scale}")));
            }
            if !amplitude.is_finite() {
                return Err(err("amplitude", format!("must be finite, got {amplitude}")));
            }
        }
        Ok(())
    }
}

/// The finest generation `g` with `n = per_cube · 2^g`.
pub(crate) fn ap_generation(n: usize, per_cube: usize, g_min: u32) -> std::result::Result<u32, String> {
    let cells = n / per_cube;
    if !n.is_multiple_of(per_cube) || !cells.is_power_of_two() {
        return Err(format!(
            "grid size {n} is not points_per_cube ({per_cube}) times a power of two"
        ));
    }
    let g = cells.trailing_zeros();
    if g < g_min {
        return Err(format!(
            "grid size {n} gives finest generation {g} below g_min = {g_min}"
        ));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"{
  "space": {"kind": "grid", "dim": 1, "n": 64},
  "field": {"kind": "gallery", "shape": "tent", "center": [0.0]},
  "functional": "bvsy",
  "params": {"p": 1}
}"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::parse(BASIC, "basic.json").unwrap();
        assert_eq!(c.params.tau, 1.0);
        assert!(!c.oracle);
        assert_eq!(c.space.size(), Some(64));
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors_name_the_line() {
        let bad = BASIC.replace("\"p\": 1", "\"p\": 0.5");
        let e = ExperimentConfig::parse(&bad, "c.json").unwrap_err().to_string();
        assert!(e.starts_with("c.json:5: `p`"), "{e}");

        let bad = BASIC.replace("\"n\": 64", "\"n\": 64, \"colour\": 3");
        let e = ExperimentConfig::parse(&bad, "c.json").unwrap_err().to_string();
        assert!(e.starts_with("c.json:2:"), "{e}");

        let bad = BASIC.replace("\"grid\", \"dim\": 1", "\"random_box\", \"dim\": 1");
        let e = ExperimentConfig::parse(&bad, "c.json").unwrap_err().to_string();
        assert!(e.contains(":2: `random_box`") && e.contains("seed"), "{e}");

        let bad = BASIC.replace("\"tent\"", "\"ramp\"");
        assert!(ExperimentConfig::parse(&bad, "c.json")
            .unwrap_err()
            .to_string()
            .starts_with("c.json:3:"));
    }

    #[test]
    fn ap_grid_sizes() {
        assert_eq!(ap_generation(256, 2, 1), Ok(7));
        assert!(ap_generation(96, 2, 1).is_err());
        assert!(ap_generation(4, 2, 2).is_err());
        let text = r#"{
  "space": {"kind": "grid", "dim": 1, "n": 100, "weight": {"kind": "constant"}},
  "functional": "ap"
}"#;
        let e = ExperimentConfig::parse(text, "ap.json").unwrap_err().to_string();
        assert!(e.starts_with("ap.json:2: `n`"), "{e}");
    }
}
