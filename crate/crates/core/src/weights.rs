//! Muckenhoupt weights on boxes `[lo, hi]^n`.
//!
//! Constants are computed over finite dyadic cube families sampled on
//! cell-centred grids, so every value is a lower estimate of the supremum over
//! all cubes. Cube averages are midpoint quadrature: weight values summed over
//! the in-cube sample points, divided by the point count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmspace::{BoxDomain, GridSpec, MetricMeasureSpace};
use crate::par;
use crate::sum::ExactSum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `scale · |x|^alpha` (Euclidean norm).
    Power {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// One value per sample point, in grid order.
    Tabulated { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl WeightSpec {
    pub fn constant() -> Self {
        WeightSpec::Constant { value: 1.0 }
    }

    pub fn power(alpha: f64) -> Self {
        WeightSpec::Power { alpha, scale: 1.0 }
    }

    /// `c·ω`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            WeightSpec::Constant { value } => WeightSpec::Constant { value: c * value },
            WeightSpec::Power { alpha, scale } => WeightSpec::Power {
                alpha: *alpha,
                scale: c * scale,
            },
            WeightSpec::Tabulated { values } => WeightSpec::Tabulated {
                values: values.iter().map(|v| c * v).collect(),
            },
        }
    }

    /// Weight values at `coords` (flattened, `dim` per point).
    pub fn values_at(&self, coords: &[f64], dim: usize) -> Result<Vec<f64>> {
        let n = coords.len() / dim;
        let values = match self {
            WeightSpec::Constant { value } => vec![*value; n],
            WeightSpec::Power { alpha, scale } => coords
                .chunks(dim)
                .map(|x| scale * x.iter().map(|c| c * c).sum::<f64>().sqrt().powf(*alpha))
                .collect(),
            WeightSpec::Tabulated { values } => {
                if values.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: values.len(),
                    });
                }
                values.clone()
            }
        };
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::NonPositiveWeight { index, value });
        }
        Ok(values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub generation: u32,
    pub anchor: Vec<f64>,
    pub side: f64,
}

impl Cube {
    /// The cube with the same centre and `lambda` times the side.
    pub fn dilate(&self, lambda: f64) -> Cube {
        let grow = 0.5 * (lambda - 1.0) * self.side;
        Cube {
            generation: self.generation,
            anchor: self.anchor.iter().map(|a| a - grow).collect(),
            side: lambda * self.side,
        }
    }
}

/// Dyadic cubes of `[lo, hi]^dim` for generations `g_min..=g_max`, each
/// generation repeated at every shift (a fraction of the side, applied on
/// all axes). Shifted cubes that would leave the box are dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeFamily {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub g_min: u32,
    pub g_max: u32,
    pub shifts: Vec<f64>,
    pub cubes: Vec<Cube>,
}

impl CubeFamily {
    /// Shifts `{0, 1/3}`.
    pub fn dyadic(dim: usize, lo: f64, hi: f64, g_min: u32, g_max: u32) -> Result<Self> {
        Self::with_shifts(dim, lo, hi, g_min, g_max, vec![0.0, 1.0 / 3.0])
    }

    pub fn with_shifts(dim: usize, lo: f64, hi: f64, g_min: u32, g_max: u32, shifts: Vec<f64>) -> Result<Self> {
        if dim == 0 || !(hi > lo) || g_min > g_max || g_max > 24 {
            return Err(Error::InvalidParameter(format!(
                "cube family dim {dim} box [{lo}, {hi}] generations {g_min}..={g_max}"
            )));
        }
        if shifts.is_empty() || shifts.iter().any(|s| !(0.0..1.0).contains(s)) {
            return Err(Error::InvalidParameter(format!(
                "cube shifts {shifts:?} must lie in [0, 1)"
            )));
        }
        let mut cubes = Vec::new();
        for g in g_min..=g_max {
            let per_axis = 1usize << g;
            let side = (hi - lo) / per_axis as f64;
            for &shift in &shifts {
                let count = if shift == 0.0 { per_axis } else { per_axis - 1 };
                let mut idx = vec![0usize; dim];
                for _ in 0..count.pow(dim as u32) {
                    let anchor = idx.iter().map(|&k| lo + (k as f64 + shift) * side).collect();
                    cubes.push(Cube {
                        generation: g,
                        anchor,
                        side,
                    });
                    for a in (0..dim).rev() {
                        idx[a] += 1;
                        if idx[a] < count {
                            break;
                        }
                        idx[a] = 0;
                    }
                }
            }
        }
        Ok(Self {
            dim,
            lo,
            hi,
            g_min,
            g_max,
            shifts,
            cubes,
        })
    }

    /// The same family cut at generation `g_max`.
    pub fn truncated(&self, g_max: u32) -> Result<Self> {
        Self::with_shifts(self.dim, self.lo, self.hi, self.g_min, g_max, self.shifts.clone())
    }

    /// A grid of `k` sample points per axis in each finest-generation cube.
    pub fn sample_grid(&self, k: usize) -> GridSpec {
        GridSpec::cube(self.dim, k << self.g_max, self.lo, self.hi)
    }
}

/// Weight values and per-axis coordinates of a sample grid.
struct Sampled<'a> {
    grid: &'a GridSpec,
    axis: Vec<f64>,
    values: Vec<f64>,
}

impl<'a> Sampled<'a> {
    fn new(weight: &WeightSpec, grid: &'a GridSpec) -> Result<Self> {
        let values = weight.values_at(&grid.points(), grid.dim)?;
        let h = grid.spacing();
        let axis = (0..grid.n).map(|k| grid.lo + (k as f64 + 0.5) * h).collect();
        Ok(Self { grid, axis, values })
    }

    /// Index range of sample coordinates in `[a, b)` on one axis.
    fn range(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        self.axis.partition_point(|&x| x < a)..self.axis.partition_point(|&x| x < b)
    }

    fn ranges(&self, cube: &Cube) -> Vec<std::ops::Range<usize>> {
        cube.anchor.iter().map(|&a| self.range(a, a + cube.side)).collect()
    }

    /// Calls `f` with every flat point index inside the cube.
    fn for_each_in(&self, ranges: &[std::ops::Range<usize>], mut f: impl FnMut(usize)) {
        if ranges.iter().any(|r| r.is_empty()) {
            return;
        }
        let n = self.grid.n;
        let dim = ranges.len();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.start).collect();
        loop {
            f(idx.iter().fold(0, |acc, &k| acc * n + k));
            let mut a = dim;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < ranges[a].end {
                    break;
                }
                idx[a] = ranges[a].start;
            }
        }
    }
}

fn count(ranges: &[std::ops::Range<usize>]) -> usize {
    ranges.iter().map(|r| r.len()).product()
}

/// `avg_Q(ω) · avg_Q(ω^{1/(1-p)})^{p-1}`, or `avg_Q(ω) · max_Q(1/ω)` at
/// `p = 1`.
fn cube_constant(s: &Sampled, ranges: &[std::ops::Range<usize>], p: f64) -> f64 {
    let m = count(ranges) as f64;
    let mut a = ExactSum::new();
    if p == 1.0 {
        let mut inv_max = 0.0f64;
        s.for_each_in(ranges, |i| {
            a.add(s.values[i]);
            inv_max = inv_max.max(1.0 / s.values[i]);
        });
        a.value() / m * inv_max
    } else {
        if p == 2.0 {
            let mut b = ExactSum::new();
            s.for_each_in(ranges, |i| {
                a.add(s.values[i]);
                b.add(1.0 / s.values[i]);
            });
            return a.value() / m * (b.value() / m);
        }
        // avg(ω^e)^{p-1} = avg((ω/ω_min)^e)^{p-1} / ω_min with each ratio power in (0, 1].
        let mut w_min = f64::INFINITY;
        s.for_each_in(ranges, |i| {
            a.add(s.values[i]);
            w_min = w_min.min(s.values[i]);
        });
        let e = 1.0 / (1.0 - p);
        let mut b = ExactSum::new();
        s.for_each_in(ranges, |i| b.add((s.values[i] / w_min).powf(e)));
        a.value() / m * (b.value() / m).powf(p - 1.0) / w_min
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStat {
    pub generation: u32,
    pub cubes: usize,
    pub max: f64,
    pub running_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub p: f64,
    pub value: f64,
    pub argmax: Option<Cube>,
    pub generations: Vec<GenerationStat>,
    /// Running max at the last generation at least 4 times the one two
    /// generations earlier.
    pub diverging: bool,
    pub grid_points_per_axis: usize,
    pub cube_count: usize,
    pub shifts: Vec<f64>,
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p = {p} must be at least 1")));
    }
    Ok(())
}

/// `[ω]_{A_p}` over `family`, sampled on `grid`.
pub fn ap_constant(weight: &WeightSpec, p: f64, family: &CubeFamily, grid: &GridSpec) -> Result<ApReport> {
    check_p(p)?;
    if grid.dim != family.dim {
        return Err(Error::InvalidParameter(format!(
            "grid dimension {} differs from cube family dimension {}",
            grid.dim, family.dim
        )));
    }
    let sampled = Sampled::new(weight, grid)?;
    let required = 1usize << family.dim;
    let per_cube = par::map_range(family.cubes.len(), |c| {
        let ranges = sampled.ranges(&family.cubes[c]);
        let m = count(&ranges);
        if m < required {
            Err(Error::SparseCube {
                index: c,
                count: m,
                required,
            })
        } else {
            Ok(cube_constant(&sampled, &ranges, p))
        }
    });
    let per_cube = per_cube.into_iter().collect::<Result<Vec<f64>>>()?;

    let mut generations: Vec<GenerationStat> = Vec::new();
    let mut value = 0.0;
    let mut argmax = None;
    for (cube, &v) in family.cubes.iter().zip(&per_cube) {
        if generations.last().is_none_or(|g| g.generation != cube.generation) {
            generations.push(GenerationStat {
                generation: cube.generation,
                cubes: 0,
                max: 0.0,
                running_max: value,
            });
        }
        let g = generations.last_mut().expect("pushed above");
        g.cubes += 1;
        g.max = g.max.max(v);
        if v > value {
            value = v;
            argmax = Some(cube.clone());
        }
        g.running_max = value;
    }
    let k = generations.len();
    let diverging = k >= 3 && generations[k - 1].running_max >= 4.0 * generations[k - 3].running_max;
    Ok(ApReport {
        p,
        value,
        argmax,
        generations,
        diverging,
        grid_points_per_axis: grid.n,
        cube_count: family.cubes.len(),
        shifts: family.shifts.clone(),
    })
}

/// A refinement study: generation `g` is evaluated with the family cut at
/// `g` and a grid of `k` points per axis in each generation-`g` cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApRefinement {
    pub p: f64,
    pub history: Vec<ApReport>,
    /// `history[g].value`.
    pub values: Vec<f64>,
    /// Refinement keeps adding non-decaying increments (ratio of the last
    /// two increments at least 0.9), or the value quadrupled across the last
    /// two generations.
    pub diverging: bool,
    /// Relative change of the value when the last generation was added.
    pub last_change: f64,
}

/// Ratio of consecutive increments at or above which growth counts as
/// non-decaying.
const STALL_RATIO: f64 = 0.9;

pub fn ap_refinement(weight: &WeightSpec, p: f64, family: &CubeFamily, k: usize) -> Result<ApRefinement> {
    check_p(p)?;
    if k == 0 {
        return Err(Error::InvalidParameter(
            "refinement needs at least one point per cube".into(),
        ));
    }
    let mut history = Vec::new();
    for g in family.g_min..=family.g_max {
        let fam = family.truncated(g)?;
        history.push(ap_constant(weight, p, &fam, &fam.sample_grid(k))?);
    }
    let values: Vec<f64> = history.iter().map(|r| r.value).collect();
    let n = values.len();
    let last_change = if n >= 2 {
        (values[n - 1] - values[n - 2]).abs() / values[n - 2]
    } else {
        0.0
    };
    let diverging = n >= 3 && {
        let (a, b, c) = (values[n - 3], values[n - 2], values[n - 1]);
        let (d1, d2) = (b - a, c - b);
        let resolved = 1e-12 * c;
        (d1 > resolved && d2 >= STALL_RATIO * d1) || c >= 4.0 * a
    };
    Ok(ApRefinement {
        p,
        history,
        values,
        diverging,
        last_change,
    })
}

/// Euclidean space with masses `ω(x_i) · cell_volume_i`.
pub fn weighted_space(
    dim: usize,
    coords: Vec<f64>,
    cell_volumes: &[f64],
    weight: &WeightSpec,
) -> Result<MetricMeasureSpace> {
    let omega = weight.values_at(&coords, dim)?;
    if omega.len() != cell_volumes.len() {
        return Err(Error::LengthMismatch {
            expected: omega.len(),
            got: cell_volumes.len(),
        });
    }
    if let Some((index, &value)) = cell_volumes.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveWeight { index, value });
    }
    let w = omega.iter().zip(cell_volumes).map(|(o, v)| o * v).collect();
    MetricMeasureSpace::euclidean(dim, coords, w)
}

/// [`weighted_space`] on a uniform grid, with the box attached.
pub fn weighted_grid(grid: &GridSpec, weight: &WeightSpec) -> Result<MetricMeasureSpace> {
    let coords = grid.points();
    let vols = vec![grid.cell_volume(); coords.len() / grid.dim];
    weighted_space(grid.dim, coords, &vols, weight)?.with_domain(BoxDomain {
        lo: vec![grid.lo; grid.dim],
        hi: vec![grid.hi; grid.dim],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub lambda: f64,
    /// `ω(λQ)`.
    pub dilate_mass: f64,
    /// `[ω]_{A_p} λ^{np} ω(Q)`.
    pub bound: f64,
    /// `bound / ω(λQ)`.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub ap: f64,
    pub cube_mass: f64,
    pub rows: Vec<GrowthRow>,
    pub worst_slack: f64,
    pub passed: bool,
}

/// Checks `ω(λQ) ≤ [ω]_{A_p} λ^{np} ω(Q)` for each `λ`, with quadrature
/// masses on `grid`.
pub fn growth_check(
    weight: &WeightSpec,
    p: f64,
    ap: f64,
    cube: &Cube,
    lambdas: &[f64],
    grid: &GridSpec,
) -> Result<GrowthReport> {
    check_p(p)?;
    let sampled = Sampled::new(weight, grid)?;
    let cell = grid.cell_volume();
    let mass = |q: &Cube| {
        let ranges = sampled.ranges(q);
        let mut acc = ExactSum::new();
        sampled.for_each_in(&ranges, |i| acc.add(sampled.values[i]));
        acc.value() * cell
    };
    let cube_mass = mass(cube);
    if !(cube_mass > 0.0) {
        return Err(Error::SparseCube {
            index: 0,
            count: 0,
            required: 1,
        });
    }
    let n = grid.dim as f64;
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("dilation {lambda} must be at least 1")));
        }
        let big = cube.dilate(lambda);
        let slop = 1e-12 * (grid.hi - grid.lo);
        if big
            .anchor
            .iter()
            .any(|&a| a < grid.lo - slop || a + big.side > grid.hi + slop)
        {
            return Err(Error::CubeOutsideDomain(lambda));
        }
        let dilate_mass = mass(&big);
        let bound = ap * lambda.powf(n * p) * cube_mass;
        rows.push(GrowthRow {
            lambda,
            dilate_mass,
            bound,
            slack: bound / dilate_mass,
        });
    }
    let worst_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    Ok(GrowthReport {
        ap,
        cube_mass,
        passed: rows.iter().all(|r| r.slack >= 1.0 - 1e-12),
        rows,
        worst_slack,
    })
}
