use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{BoxDomain, Metric, MetricMeasureSpace};

/// Metric section of a space file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricFile {
    Euclidean,
    Sphere {
        radius: f64,
    },
    FlatTorus {
        period: f64,
    },
    /// Edge list `[i, j, w]`; `points` is ignored for graphs.
    Graph {
        edges: Vec<(usize, usize, f64)>,
    },
}

/// On-disk space: `{"metric": {...}, "points": [[...]], "weights": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub metric: MetricFile,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainFile {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SpaceFile {
    pub fn from_space(space: &MetricMeasureSpace) -> Self {
        let points = match space.metric() {
            Metric::Graph { .. } => Vec::new(),
            _ => (0..space.len()).map(|i| space.coords(i).unwrap().to_vec()).collect(),
        };
        let metric = match space.metric() {
            Metric::Euclidean { .. } => MetricFile::Euclidean,
            Metric::Sphere { radius, .. } => MetricFile::Sphere { radius: *radius },
            Metric::FlatTorus { period, .. } => MetricFile::FlatTorus { period: *period },
            Metric::Graph { edges, .. } => MetricFile::Graph { edges: edges.clone() },
        };
        Self {
            metric,
            points,
            weights: space.weights().to_vec(),
            domain: space.domain().map(|d| DomainFile {
                lo: d.lo.clone(),
                hi: d.hi.clone(),
            }),
        }
    }

    pub fn into_space(self) -> Result<MetricMeasureSpace> {
        let dim = |pts: &[Vec<f64>]| -> Result<usize> {
            let d = pts.first().map_or(0, Vec::len);
            if pts.iter().any(|p| p.len() != d) {
                return Err(Error::InvalidSpace("points have differing dimensions".into()));
            }
            Ok(d)
        };
        let space = match self.metric {
            MetricFile::Euclidean => {
                let d = dim(&self.points)?;
                MetricMeasureSpace::euclidean(d, self.points.concat(), self.weights)?
            }
            MetricFile::Sphere { radius } => {
                if dim(&self.points)? != 3 {
                    return Err(Error::InvalidSpace("sphere points must be 3-vectors".into()));
                }
                let pts = self.points.iter().map(|p| [p[0], p[1], p[2]]).collect();
                MetricMeasureSpace::sphere(radius, pts, self.weights)?
            }
            MetricFile::FlatTorus { period } => {
                let d = dim(&self.points)?;
                MetricMeasureSpace::flat_torus(d, period, self.points.concat(), self.weights)?
            }
            MetricFile::Graph { edges } => {
                let n = self.weights.len();
                MetricMeasureSpace::graph(n, edges, self.weights)?
            }
        };
        match self.domain {
            Some(d) => space.with_domain(BoxDomain { lo: d.lo, hi: d.hi }),
            None => Ok(space),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
