//! Discretized metric measure spaces.
//!
//! Balls are open: `B(x, r) = {y : ρ(x, y) < r}`. Points at exactly distance
//! `r` are excluded, and ties are resolved by exact comparison of the stored
//! (computed) distances. The center always lies in its own ball, so every
//! ball has mass at least the center weight; this is the atomic deviation
//! from a non-atomic continuum measure and vanishes under refinement.

mod generate;
mod index;
mod io;

pub use generate::{cycle_graph, fibonacci_sphere, icosphere, random_box, torus_grid, uniform_grid, GridSpec};
pub use index::{CenterRow, DistanceIndex};
pub use io::{MetricFile, SpaceFile};

use std::collections::HashMap;

use petgraph::graph::{NodeIndex, UnGraph};

use crate::error::{Error, Result};
use crate::par;
use crate::sum::ExactSum;

/// The metric of a [`MetricMeasureSpace`].
#[derive(Clone, Debug)]
pub enum Metric {
    /// Points in `R^dim`, coordinates stored row-major.
    Euclidean { dim: usize, coords: Vec<f64> },
    /// Great-circle distance on the sphere of the given radius; points are
    /// unit vectors.
    Sphere { radius: f64, coords: Vec<[f64; 3]> },
    /// Minimum-image distance on `(R / period Z)^dim`.
    FlatTorus { dim: usize, period: f64, coords: Vec<f64> },
    /// Shortest-path distance; the full matrix is computed at construction.
    Graph {
        edges: Vec<(usize, usize, f64)>,
        dist: Vec<f64>,
    },
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Euclidean { .. } => "euclidean",
            Metric::Sphere { .. } => "sphere",
            Metric::FlatTorus { .. } => "flat-torus",
            Metric::Graph { .. } => "graph",
        }
    }
}

/// Axis-aligned box containing a Euclidean sample; used to flag balls whose
/// dilates are clipped by the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        center
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&c, (&lo, &hi))| c - radius >= lo && c + radius <= hi)
    }
}

/// A finite weighted point set `(X, ρ, μ)` with `μ = Σ w_i δ_{x_i}`.
///
/// Immutable after construction; all queries take `&self`.
#[derive(Clone, Debug)]
pub struct MetricMeasureSpace {
    metric: Metric,
    weights: Vec<f64>,
    total_mass: f64,
    uniform_weight: Option<f64>,
    domain: Option<BoxDomain>,
}

impl MetricMeasureSpace {
    pub fn euclidean(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be positive".into()));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} coordinates do not match {} points of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpace("non-finite coordinate".into()));
        }
        check_duplicates(coords.chunks(dim).map(|c| c.to_vec()))?;
        Self::finish(Metric::Euclidean { dim, coords }, weights)
    }

    /// Points are projected onto the unit sphere; distances are scaled by
    /// `radius`.
    pub fn sphere(radius: f64, points: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSpace(format!("sphere radius {radius}")));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidSpace("points and weights differ in length".into()));
        }
        let mut coords = Vec::with_capacity(points.len());
        for p in points {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::InvalidSpace("sphere point with zero or non-finite norm".into()));
            }
            // Near-unit input is stored as given.
            if (n - 1.0).abs() <= 1e-12 {
                coords.push(p);
            } else {
                coords.push([p[0] / n, p[1] / n, p[2] / n]);
            }
        }
        check_duplicates(coords.iter().map(|c| c.to_vec()))?;
        Self::finish(Metric::Sphere { radius, coords }, weights)
    }

    /// Coordinates are reduced into `[0, period)`.
    pub fn flat_torus(dim: usize, period: f64, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidSpace(format!("torus dim {dim}, period {period}")));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::InvalidSpace("coordinate count mismatch".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpace("non-finite coordinate".into()));
        }
        let coords: Vec<f64> = coords.iter().map(|&c| c.rem_euclid(period)).collect();
        check_duplicates(coords.chunks(dim).map(|c| c.to_vec()))?;
        Self::finish(Metric::FlatTorus { dim, period, coords }, weights)
    }

    /// Shortest-path metric of an undirected graph with nonnegative edge
    /// weights. All-pairs distances are computed once (Dijkstra per source).
    pub fn graph(n: usize, edges: Vec<(usize, usize, f64)>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n {
            return Err(Error::InvalidSpace(format!(
                "graph has {n} nodes but {} weights",
                weights.len()
            )));
        }
        let mut g = UnGraph::<(), f64>::with_capacity(n, edges.len());
        for _ in 0..n {
            g.add_node(());
        }
        for &(a, b, w) in &edges {
            if a >= n || b >= n {
                return Err(Error::InvalidSpace(format!("edge ({a}, {b}) out of range")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidSpace(format!("edge weight {w}")));
            }
            g.add_edge(NodeIndex::new(a), NodeIndex::new(b), w);
        }
        let rows = par::map_range(n, |s| {
            let d = petgraph::algo::dijkstra(&g, NodeIndex::new(s), None, |e| *e.weight());
            let mut row = vec![f64::INFINITY; n];
            for (node, dist) in d {
                row[node.index()] = dist;
            }
            row
        });
        let mut dist = Vec::with_capacity(n * n);
        for row in rows {
            dist.extend(row);
        }
        // Path sums from the two ends can round differently.
        for i in 0..n {
            for j in i + 1..n {
                let d = dist[i * n + j].min(dist[j * n + i]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let d = dist[i * n + j];
                if !d.is_finite() {
                    return Err(Error::InvalidSpace(format!("graph is disconnected ({i} to {j})")));
                }
                if i != j && d <= 0.0 {
                    return Err(Error::DuplicatePoints(i.min(j), i.max(j)));
                }
            }
        }
        Self::finish(Metric::Graph { edges, dist }, weights)
    }

    fn finish(metric: Metric, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("a space needs at least one point".into()));
        }
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::NonPositiveWeight { index: i, value: w });
        }
        let total_mass = crate::sum::exact_sum(&weights);
        if !total_mass.is_finite() {
            return Err(Error::InvalidSpace("total mass overflows".into()));
        }
        let uniform_weight = weights.iter().all(|&w| w == weights[0]).then_some(weights[0]);
        Ok(Self {
            metric,
            weights,
            total_mass,
            uniform_weight,
            domain: None,
        })
    }

    /// Attaches the sampled box (Euclidean spaces only).
    pub fn with_domain(mut self, domain: BoxDomain) -> Result<Self> {
        match &self.metric {
            Metric::Euclidean { dim, .. } if *dim == domain.lo.len() && *dim == domain.hi.len() => {
                self.domain = Some(domain);
                Ok(self)
            }
            _ => Err(Error::InvalidSpace(
                "domain box requires a Euclidean space of matching dimension".into(),
            )),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The common weight when all points carry the same mass.
    pub fn uniform_weight(&self) -> Option<f64> {
        self.uniform_weight
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn domain(&self) -> Option<&BoxDomain> {
        self.domain.as_ref()
    }

    /// Coordinates of point `i` (none for graphs).
    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        match &self.metric {
            Metric::Euclidean { dim, coords } | Metric::FlatTorus { dim, coords, .. } => {
                Some(&coords[i * dim..(i + 1) * dim])
            }
            Metric::Sphere { coords, .. } => Some(&coords[i][..]),
            Metric::Graph { .. } => None,
        }
    }

    /// Ambient coordinate dimension (3 for the sphere, 0 for graphs).
    pub fn coord_dim(&self) -> usize {
        match &self.metric {
            Metric::Euclidean { dim, .. } | Metric::FlatTorus { dim, .. } => *dim,
            Metric::Sphere { .. } => 3,
            Metric::Graph { .. } => 0,
        }
    }

    /// Topological dimension of the underlying space (1 for graphs).
    pub fn intrinsic_dim(&self) -> usize {
        match &self.metric {
            Metric::Euclidean { dim, .. } | Metric::FlatTorus { dim, .. } => *dim,
            Metric::Sphere { .. } => 2,
            Metric::Graph { .. } => 1,
        }
    }

    fn check(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            })
        }
    }

    /// `ρ(i, j)` without bounds checks beyond slice indexing, rounded to
    /// [`DIST_BITS`] significant bits.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        snap(match &self.metric {
            Metric::Euclidean { dim: 1, coords } => (coords[i] - coords[j]).abs(),
            Metric::Euclidean { dim, coords } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                euclid(a, b)
            }
            Metric::Sphere { radius, coords } => radius * great_circle(&coords[i], &coords[j]),
            Metric::FlatTorus { dim, period, coords } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                torus(a, b, *period)
            }
            Metric::Graph { dist, .. } => dist[i * self.weights.len() + j],
        })
    }

    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.dist(i, j))
    }

    /// Distance from sample point `i` to an arbitrary location: a coordinate
    /// vector for coordinate metrics, `[node]` for graphs.
    pub fn distance_to(&self, i: usize, point: &[f64]) -> Result<f64> {
        self.check(i)?;
        let bad = |what: &str| Error::InvalidParameter(format!("{what} for a {} space", self.metric.name()));
        match &self.metric {
            Metric::Euclidean { dim, coords } => {
                if point.len() != *dim {
                    return Err(bad("point dimension mismatch"));
                }
                Ok(euclid(&coords[i * dim..(i + 1) * dim], point))
            }
            Metric::Sphere { radius, coords } => {
                if point.len() != 3 {
                    return Err(bad("sphere locations are 3-vectors"));
                }
                let n = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
                if !(n > 0.0) {
                    return Err(bad("zero location vector"));
                }
                let u = [point[0] / n, point[1] / n, point[2] / n];
                Ok(radius * great_circle(&coords[i], &u))
            }
            Metric::FlatTorus { dim, period, coords } => {
                if point.len() != *dim {
                    return Err(bad("point dimension mismatch"));
                }
                let p: Vec<f64> = point.iter().map(|c| c.rem_euclid(*period)).collect();
                Ok(torus(&coords[i * dim..(i + 1) * dim], &p, *period))
            }
            Metric::Graph { .. } => {
                if point.len() != 1 || point[0] < 0.0 || point[0].fract() != 0.0 {
                    return Err(bad("graph locations are a single node index"));
                }
                self.distance(i, point[0] as usize)
            }
        }
    }

    /// `μ(B(i, r))` by a direct scan; exact (correctly rounded).
    pub fn ball_measure(&self, i: usize, r: f64) -> Result<f64> {
        self.check(i)?;
        if !(r > 0.0) {
            return Err(Error::NonPositiveRadius(r));
        }
        let mut acc = ExactSum::new();
        for j in 0..self.len() {
            if self.dist(i, j) < r {
                acc.add(self.weights[j]);
            }
        }
        Ok(acc.value())
    }

    /// `V(i, j) = μ(B(i, ρ(i, j)))`, centered at the first argument.
    pub fn pair_volume(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(Error::DiagonalPair(i));
        }
        self.ball_measure(i, self.dist(i, j))
    }

    /// Lower estimate of the doubling constant:
    /// `max μ(B(i, 2r)) / μ(B(i, r))` over the sampled centers and radii whose
    /// ball carries at least `mass_floor`. Returns 1 when nothing qualifies.
    pub fn doubling_estimate(&self, centers: &[usize], radii: &[f64], mass_floor: f64) -> Result<f64> {
        for &c in centers {
            self.check(c)?;
        }
        if let Some(&r) = radii.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::NonPositiveRadius(r));
        }
        let best = par::map_range(centers.len(), |k| {
            let c = centers[k];
            let mut best = 1.0f64;
            for &r in radii {
                let small = self.ball_measure(c, r).unwrap_or(0.0);
                if small >= mass_floor && small > 0.0 {
                    let big = self.ball_measure(c, 2.0 * r).unwrap_or(0.0);
                    best = best.max(big / small);
                }
            }
            best
        });
        Ok(best.into_iter().fold(1.0, f64::max))
    }

    /// Median over points of the nearest-neighbour distance.
    pub fn median_nn_spacing(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mut nn = par::map_range(n, |i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| self.dist(i, j))
                .fold(f64::INFINITY, f64::min)
        });
        nn.sort_by(f64::total_cmp);
        nn[n / 2]
    }
}

/// Significant bits kept in every stored distance. Lattice neighbours whose
/// computed distances differ only by rounding noise compare equal.
pub const DIST_BITS: u32 = 33;

#[inline]
fn snap(d: f64) -> f64 {
    const DROP: u32 = 53 - DIST_BITS;
    let half = 1u64 << (DROP - 1);
    f64::from_bits((d.to_bits() + half) & !((1u64 << DROP) - 1))
}

#[inline]
fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[inline]
fn great_circle(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    let cx = u[1] * v[2] - u[2] * v[1];
    let cy = u[2] * v[0] - u[0] * v[2];
    let cz = u[0] * v[1] - u[1] * v[0];
    let cross = (cx * cx + cy * cy + cz * cz).sqrt();
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    cross.atan2(dot)
}

#[inline]
fn torus(a: &[f64], b: &[f64], period: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            let d = d.min(period - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn check_duplicates(points: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for (i, p) in points.enumerate() {
        // +0.0 and -0.0 are the same location.
        let key: Vec<u64> = p.iter().map(|&c| (c + 0.0).to_bits()).collect();
        if let Some(&j) = seen.get(&key) {
            return Err(Error::DuplicatePoints(j, i));
        }
        seen.insert(key, i);
    }
    Ok(())
}
