//! Deterministic space generators.
//!
//! Random generators are counter-based: point `i` depends only on the seed
//! and `i`, never on the total count.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{BoxDomain, MetricMeasureSpace};

/// Cell-centred tensor grid on `[lo, hi]^dim` with `n` cells per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl GridSpec {
    pub fn cube(dim: usize, n: usize, lo: f64, hi: f64) -> Self {
        Self { dim, n, lo, hi }
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinates of the cell centres, row-major with the last axis fastest.
    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        let total = self.n.pow(self.dim as u32);
        let mut coords = Vec::with_capacity(total * self.dim);
        let mut idx = vec![0usize; self.dim];
        for _ in 0..total {
            coords.extend(idx.iter().map(|&k| self.lo + (k as f64 + 0.5) * h));
            for a in (0..self.dim).rev() {
                idx[a] += 1;
                if idx[a] < self.n {
                    break;
                }
                idx[a] = 0;
            }
        }
        coords
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.n == 0 || !(self.hi > self.lo) {
            return Err(Error::InvalidParameter(format!("grid {self:?}")));
        }
        Ok(())
    }
}

/// Uniform grid with Lebesgue cell weights `h^dim` and the box attached.
pub fn uniform_grid(spec: &GridSpec) -> Result<MetricMeasureSpace> {
    spec.validate()?;
    let coords = spec.points();
    let n = coords.len() / spec.dim;
    let w = spec.cell_volume();
    MetricMeasureSpace::euclidean(spec.dim, coords, vec![w; n])?.with_domain(BoxDomain {
        lo: vec![spec.lo; spec.dim],
        hi: vec![spec.hi; spec.dim],
    })
}

/// `n` i.i.d. uniform points in `[lo, hi]^dim`, each of mass `vol / n`.
pub fn random_box(dim: usize, n: usize, lo: f64, hi: f64, seed: u64) -> Result<MetricMeasureSpace> {
    if dim == 0 || n == 0 || !(hi > lo) {
        return Err(Error::InvalidParameter(
            "random box needs dim, n > 0 and hi > lo".into(),
        ));
    }
    let mut coords = Vec::with_capacity(n * dim);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for _ in 0..dim {
            coords.push(rng.random_range(lo..hi));
        }
    }
    let w = (hi - lo).powi(dim as i32) / n as f64;
    MetricMeasureSpace::euclidean(dim, coords, vec![w; n])?.with_domain(BoxDomain {
        lo: vec![lo; dim],
        hi: vec![hi; dim],
    })
}

/// Cell-centred grid on the flat torus `(R / period Z)^dim`.
pub fn torus_grid(dim: usize, n: usize, period: f64) -> Result<MetricMeasureSpace> {
    let spec = GridSpec::cube(dim, n, 0.0, period);
    spec.validate()?;
    let coords = spec.points();
    let count = coords.len() / dim;
    MetricMeasureSpace::flat_torus(dim, period, coords, vec![spec.cell_volume(); count])
}

/// Cycle graph on `n` nodes with equal edge lengths; each node carries the
/// length of one edge, so the total mass is the circumference.
pub fn cycle_graph(n: usize, edge_length: f64) -> Result<MetricMeasureSpace> {
    if n < 3 {
        return Err(Error::InvalidParameter("cycle graph needs n >= 3".into()));
    }
    let edges = (0..n).map(|i| (i, (i + 1) % n, edge_length)).collect();
    MetricMeasureSpace::graph(n, edges, vec![edge_length; n])
}

/// Golden-spiral points on the sphere with equal masses `4πR²/n`.
pub fn fibonacci_sphere(n: usize, radius: f64) -> Result<MetricMeasureSpace> {
    if n == 0 {
        return Err(Error::InvalidParameter("fibonacci sphere needs n > 0".into()));
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    let pts = (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect();
    MetricMeasureSpace::sphere(radius, pts, vec![4.0 * PI * radius * radius / n as f64; n])
}

/// Geodesic icosphere: `10·4^level + 2` vertices (2562 at level 4, 10242 at
/// level 5). Each vertex carries one third of the spherical area of its
/// incident triangles, so the masses sum to `4πR²`.
pub fn icosphere(level: u32, radius: f64) -> Result<MetricMeasureSpace> {
    if level > 8 {
        return Err(Error::InvalidParameter(format!("icosphere level {level} too large")));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| normalize(*v))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let mut weights = vec![0.0; verts.len()];
    for &[a, b, c] in &faces {
        let area = spherical_triangle_area(&verts[a], &verts[b], &verts[c]) * radius * radius;
        for v in [a, b, c] {
            weights[v] += area / 3.0;
        }
    }
    MetricMeasureSpace::sphere(radius, verts, weights)
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Spherical excess of a unit-sphere triangle (Van Oosterom–Strackee).
fn spherical_triangle_area(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let dot = |u: &[f64; 3], v: &[f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let bc = [
        b[1] * c[2] - b[2] * c[1],
        b[2] * c[0] - b[0] * c[2],
        b[0] * c[1] - b[1] * c[0],
    ];
    let triple = dot(a, &bc).abs();
    let denom = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * triple.atan2(denom)
}
