use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{default_schedule, gallery_make, lip_field, GalleryParams, LipField, ScalarField};
use crate::functionals::{bvsy_equivalence_with, critical_set_study, gagliardo, GagliardoVariant};
use crate::inequalities::{gn_check, sobolev_weak_check, InterpolationParams};
use crate::mmspace::{
    cycle_graph, fibonacci_sphere, icosphere, random_box, torus_grid, uniform_grid, GridSpec, Metric,
    MetricMeasureSpace, SpaceFile,
};
use crate::poincare::{default_family, poincare_constant, write_poincare_csv, PoincareReport};
use crate::weaknorm::{write_profile_csv, KernelConfig, ProfilePoint};
use crate::weights::{ap_refinement, weighted_grid, ApRefinement, CubeFamily, WeightSpec};

use super::config::{ap_generation, ExperimentConfig, FieldSpec, Functional, SpaceSpec, OUT_DIR_ENV};
use super::oracle::{self, OracleReport};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub metric: String,
    pub points: usize,
    pub total_mass: f64,
}

/// Everything a run writes to its JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub functional: Functional,
    pub config: ExperimentConfig,
    pub space: SpaceSummary,
    /// Headline numbers; `null` marks an undefined value such as a ratio
    /// with a vanishing denominator.
    pub scalars: BTreeMap<String, Option<f64>>,
    /// The full report of the dispatched operation.
    pub details: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
}

impl Report {
    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).copied().flatten()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let report: Report = serde_json::from_str(&text)?;
        if report.schema != SCHEMA {
            return Err(Error::Config(format!("unsupported report schema {}", report.schema)));
        }
        Ok(report)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Tabular companion of a report.
#[derive(Clone, Debug)]
pub enum Table {
    Profile(Vec<ProfilePoint>),
    Balls(PoincareReport),
    Generations(ApRefinement),
}

impl Table {
    fn suffix(&self) -> &'static str {
        match self {
            Table::Profile(_) => "profile",
            Table::Balls(_) => "balls",
            Table::Generations(_) => "generations",
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        match self {
            Table::Profile(p) => write_profile_csv(p, path),
            Table::Balls(r) => write_poincare_csv(r, path),
            Table::Generations(a) => {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["generation", "cubes", "generation_max", "value"])?;
                for (h, v) in a.history.iter().zip(&a.values) {
                    let last = h.generations.last();
                    w.write_record([
                        last.map_or(0, |g| g.generation).to_string(),
                        h.cube_count.to_string(),
                        last.map_or(0.0, |g| g.max).to_string(),
                        v.to_string(),
                    ])?;
                }
                w.flush()?;
                Ok(())
            }
        }
    }
}

/// Paths written by [`run_experiment`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub report_path: PathBuf,
    pub table_path: Option<PathBuf>,
}

pub fn build_space(spec: &SpaceSpec, seed: Option<u64>) -> Result<MetricMeasureSpace> {
    match spec {
        SpaceSpec::Grid { dim, n, lo, hi, weight } => {
            let grid = GridSpec::cube(*dim, *n, *lo, *hi);
            match weight {
                Some(w) if *w != WeightSpec::constant() => weighted_grid(&grid, w),
                _ => uniform_grid(&grid),
            }
        }
        SpaceSpec::RandomBox { dim, n, lo, hi } => {
            let seed = seed.ok_or_else(|| Error::Config("randomized spaces need a seed".into()))?;
            random_box(*dim, *n, *lo, *hi, seed)
        }
        SpaceSpec::Torus { dim, n, period } => torus_grid(*dim, *n, *period),
        SpaceSpec::Cycle { n, edge_length } => cycle_graph(*n, *edge_length),
        SpaceSpec::FibonacciSphere { n, radius } => fibonacci_sphere(*n, *radius),
        SpaceSpec::Icosphere { n, radius } => {
            let level = u32::try_from(*n).map_err(|_| Error::InvalidParameter(format!("icosphere level {n}")))?;
            icosphere(level, *radius)
        }
        SpaceSpec::File { path } => SpaceFile::read(path)?.into_space(),
    }
}

fn default_center(space: &MetricMeasureSpace) -> Vec<f64> {
    match space.metric() {
        Metric::Sphere { .. } => vec![0.0, 0.0, 1.0],
        Metric::Graph { .. } => vec![0.0],
        _ => vec![0.0; space.coord_dim()],
    }
}

pub fn build_field(space: &MetricMeasureSpace, spec: &FieldSpec) -> Result<ScalarField> {
    match spec {
        FieldSpec::Gallery {
            shape,
            center,
            scale,
            amplitude,
        } => {
            let center = center.clone().unwrap_or_else(|| default_center(space));
            gallery_make(space, *shape, &GalleryParams::new(center, *scale, *amplitude))
        }
        FieldSpec::File { path } => {
            let f = ScalarField::read(path)?;
            f.check_len(space)?;
            Ok(f)
        }
    }
}

fn lip_for(cfg: &ExperimentConfig, space: &MetricMeasureSpace, field: &ScalarField) -> Result<LipField> {
    let schedule = match &cfg.params.lip.schedule {
        Some(s) => s.clone(),
        None => default_schedule(space),
    };
    lip_field(space, field, &schedule, cfg.params.lip.estimator)
}

/// Builds the space and field, dispatches, and (with the oracle flag)
/// cross-checks against the naive references. Writes nothing.
pub fn execute(cfg: &ExperimentConfig) -> Result<(Report, Option<Table>)> {
    cfg.validate()?;
    let kernel = KernelConfig::default();
    let p = cfg.params.p;
    let mut scalars = BTreeMap::new();
    let mut put = |k: &str, v: Option<f64>| {
        scalars.insert(k.to_string(), v);
    };
    let mut oracle = cfg.oracle.then(OracleReport::new);

    if cfg.functional == Functional::Ap {
        let SpaceSpec::Grid {
            dim,
            n,
            lo,
            hi,
            weight: Some(weight),
        } = &cfg.space
        else {
            unreachable!("validated");
        };
        let g_max = ap_generation(*n, cfg.params.points_per_cube, cfg.params.g_min).map_err(Error::Config)?;
        let family = CubeFamily::dyadic(*dim, *lo, *hi, cfg.params.g_min, g_max)?;
        let refinement = ap_refinement(weight, p, &family, cfg.params.points_per_cube)?;
        let last = refinement.history.last().expect("at least one generation");
        put("value", Some(last.value));
        put("last_change", Some(refinement.last_change));
        put("diverging", Some(f64::from(u8::from(refinement.diverging))));
        put("cubes", Some(last.cube_count as f64));
        let report = Report {
            schema: SCHEMA,
            functional: cfg.functional,
            config: cfg.clone(),
            space: SpaceSummary {
                metric: "euclidean".into(),
                points: n.pow(*dim as u32),
                total_mass: (hi - lo).powi(*dim as i32),
            },
            scalars,
            details: serde_json::to_value(&refinement)?,
            oracle,
        };
        return Ok((report, Some(Table::Generations(refinement))));
    }

    let space = build_space(&cfg.space, cfg.seed)?;
    let field = build_field(&space, cfg.field.as_ref().expect("validated"))?;
    if oracle.is_some() {
        oracle::check_size(&space)?;
    }
    let lip = lip_for(cfg, &space, &field)?;
    let mut table = None;

    let details = match cfg.functional {
        Functional::Bvsy => {
            let eq = bvsy_equivalence_with(&space, &field, &lip, p, &kernel)?;
            let r = &eq.report;
            put("bvsy", Some(r.bvsy));
            put("sobolev", Some(r.sobolev));
            put("ratio", r.ratio);
            put("max_quotient", Some(r.max_quotient));
            put("lip_max", Some(r.lip_max));
            put("liminf_min", (r.liminf.points > 0).then_some(r.liminf.min));
            put("liminf_max", (r.liminf.points > 0).then_some(r.liminf.max));
            if let Some(o) = oracle.as_mut() {
                o.push("bvsy", r.bvsy, oracle::weak_value(&space, &field, 1.0, p, p));
                o.push("sobolev", r.sobolev, oracle::sobolev(&space, &lip, p));
            }
            table = Some(Table::Profile(eq.weak.profile.clone()));
            serde_json::to_value(r)?
        }
        Functional::Gagliardo => {
            let (s1, p1) = (cfg.params.s1, cfg.params.p1);
            let value = gagliardo(&space, &field, s1, p1, cfg.params.variant)?;
            put("value", Some(value));
            if let Some(o) = oracle.as_mut() {
                if cfg.params.variant == GagliardoVariant::Metric {
                    o.push(
                        "gagliardo",
                        value,
                        oracle::gagliardo_metric(&space, &field.values, s1, p1),
                    );
                }
            }
            serde_json::json!({ "value": value, "s1": s1, "p1": p1, "variant": cfg.params.variant })
        }
        Functional::Poincare => {
            let family = default_family(&space, cfg.params.tau)?;
            let q = cfg.params.q.unwrap_or(p);
            let r = poincare_constant(&space, &field, &lip, q, p, &family)?;
            put("c2", Some(r.c2));
            put("c2_with_clipped", Some(r.c2_with_clipped));
            put("c1_worst", Some(r.c1.worst));
            put("degenerate_failures", Some(r.degenerate_failures as f64));
            put("balls", Some(r.rows.len() as f64));
            let v = serde_json::to_value(&r)?;
            table = Some(Table::Balls(r));
            v
        }
        Functional::SobolevWeak => {
            let r = sobolev_weak_check(&space, &field, &lip, p, &kernel)?;
            put("lhs", Some(r.lhs));
            put("rhs", Some(r.rhs));
            put("ratio", r.ratio);
            if let Some(o) = oracle.as_mut() {
                let weak = oracle::weak_value(&space, &field, 1.0 / p, p, p);
                o.push("lhs", r.lhs, weak.powf(1.0 / p));
            }
            serde_json::to_value(&r)?
        }
        Functional::Gn => {
            let params = InterpolationParams::new(cfg.params.s1, cfg.params.p1, cfg.params.theta)?;
            let r = gn_check(&space, &field, &lip, &params, &kernel)?;
            let c = r.components.expect("gn reports components");
            put("lhs", Some(r.lhs));
            put("rhs", Some(r.rhs));
            put("ratio", r.ratio);
            put("h", Some(c.h));
            put("g", Some(c.g));
            put("a", c.a);
            put("c", c.c);
            if let Some(o) = oracle.as_mut() {
                let lhs = oracle::weak_value(&space, &field, params.s, params.p, params.p).powf(1.0 / params.p);
                o.push("lhs", r.lhs, lhs);
                o.push("h", c.h, oracle::weak_value(&space, &field, 1.0, 1.0, 1.0));
                let g = oracle::weak_value(&space, &field, params.s1, params.p1, params.p1).powf(1.0 / params.p1);
                o.push("g", c.g, g);
            }
            serde_json::to_value(&r)?
        }
        Functional::CriticalSet => {
            let r = critical_set_study(&space, &field, &lip, cfg.params.delta_frac)?;
            put("min_fraction", Some(r.min_fraction));
            put("r_delta", r.r_delta);
            put("eligible_points", Some(r.eligible_points as f64));
            put("passed", Some(f64::from(u8::from(r.passed))));
            serde_json::to_value(&r)?
        }
        Functional::Ap => unreachable!("handled above"),
    };

    let report = Report {
        schema: SCHEMA,
        functional: cfg.functional,
        config: cfg.clone(),
        space: SpaceSummary {
            metric: space.metric().name().to_string(),
            points: space.len(),
            total_mass: space.total_mass(),
        },
        scalars,
        details,
        oracle,
    };
    Ok((report, table))
}

/// `dir` if given, else the config's output directory, else
/// `$MMLAB_OUT_DIR`, else the working directory.
pub fn output_dir(cfg: &ExperimentConfig, dir: Option<&Path>) -> PathBuf {
    dir.map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// [`execute`], then writes `<stem>.json` and `<stem>_<table>.csv`. An
/// oracle disagreement is reported after the files are written.
pub fn run_experiment(cfg: &ExperimentConfig, dir: Option<&Path>) -> Result<RunOutput> {
    let (report, table) = execute(cfg)?;
    let dir = output_dir(cfg, dir);
    std::fs::create_dir_all(&dir)?;
    let stem = cfg
        .output
        .stem
        .clone()
        .unwrap_or_else(|| cfg.functional.name().to_string());
    let report_path = dir.join(format!("{stem}.json"));
    report.write(&report_path)?;
    let table_path = match &table {
        Some(t) => {
            let path = dir.join(format!("{stem}_{}.csv", t.suffix()));
            t.write(&path)?;
            Some(path)
        }
        None => None,
    };
    if let Some(o) = &report.oracle {
        o.verdict()?;
    }
    Ok(RunOutput {
        report,
        report_path,
        table_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text, "test.json").unwrap()
    }

    #[test]
    fn bvsy_oracle_agrees() {
        let c = cfg(r#"{"space": {"kind": "grid", "dim": 1, "n": 64},
            "field": {"kind": "gallery", "shape": "tent"},
            "functional": "bvsy", "params": {"p": 1}, "oracle": true}"#);
        let (r, table) = execute(&c).unwrap();
        let o = r.oracle.as_ref().unwrap();
        assert_eq!(o.checks.len(), 2);
        assert!(o.max_relative <= 1e-12, "{o:?}");
        o.verdict().unwrap();
        assert!(matches!(table, Some(Table::Profile(_))));
        assert!(r.scalar("ratio").unwrap() > 0.0);
    }

    #[test]
    fn inequality_oracles_agree() {
        for f in ["gn", "sobolev_weak", "gagliardo"] {
            let c = cfg(&format!(
                r#"{{"space": {{"kind": "random_box", "dim": 2, "n": 60}}, "seed": 3,
                "field": {{"kind": "gallery", "shape": "bump", "scale": 0.8}},
                "functional": "{f}", "params": {{"p": 1.5}}, "oracle": true}}"#
            ));
            let (r, _) = execute(&c).unwrap();
            r.oracle.as_ref().unwrap().verdict().unwrap();
        }
    }

    #[test]
    fn ap_of_constant_weight_is_one() {
        let c = cfg(
            r#"{"space": {"kind": "grid", "dim": 1, "n": 64, "weight": {"kind": "constant"}},
            "functional": "ap", "params": {"p": 2}}"#,
        );
        let (r, _) = execute(&c).unwrap();
        assert!((r.scalar("value").unwrap() - 1.0).abs() <= 1e-12);
        assert_eq!(r.scalar("diverging"), Some(0.0));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(r#"{"space": {"kind": "cycle", "n": 40},
            "field": {"kind": "gallery", "shape": "tent", "scale": 8},
            "functional": "poincare", "params": {"p": 2},
            "output": {"stem": "cyc"}}"#);
        let out = run_experiment(&c, Some(dir.path())).unwrap();
        assert_eq!(out.report_path, dir.path().join("cyc.json"));
        assert!(out.table_path.unwrap().ends_with("cyc_balls.csv"));
        let back = Report::read(&out.report_path).unwrap();
        assert_eq!(back, out.report);
    }
}
