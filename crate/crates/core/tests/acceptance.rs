//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero when any criterion fails on this host.
//!
//! Run with `cargo test --release -p mmlab --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mmlab::fields::{default_schedule, gallery_make, lip_field};
use mmlab::functionals::{bvsy_equivalence, bvsy_equivalence_with, critical_set_study};
use mmlab::inequalities::{gn_check, sobolev_weak_check, split_membership, InterpolationParams};
use mmlab::mmspace::{icosphere, random_box, uniform_grid, GridSpec};
use mmlab::poincare::{default_family, poincare_constant, BallFamily};
use mmlab::sum::ExactSum;
use mmlab::weaknorm::{pair_quotients, weak_norm};
use mmlab::weights::{ap_constant, ap_refinement, weighted_grid, CubeFamily, WeightSpec};
use mmlab::{harness::oracle, par};
use mmlab::{GalleryKind, GalleryParams, KernelConfig, LipEstimator, LipField, MetricMeasureSpace, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Criterion 1
const ORACLE_INSTANCES: usize = 100;
const ORACLE_MAX_N: usize = 300;
const ORACLE_REL: f64 = 1e-12;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);

// Criterion 2
const STABILITY_REL: f64 = 0.05;
const STABILITY_BUDGET: Duration = Duration::from_secs(600);

// Criterion 3
const PROFILE_BAND: (f64, f64) = (0.7, 1.3);
const BUMP_DERIVATIVE_L1: f64 = 2.0;

// Criterion 4
const CRITICAL_DELTA_FRAC: f64 = 0.05;
const CRITICAL_MIN_FRACTION: f64 = 0.05;

// Criterion 5
const LINEAR_C2: f64 = 0.5;
const LINEAR_C2_REL: f64 = 0.03;
const POINCARE_SPREAD: f64 = 0.10;

// Criterion 6
const WEIGHTED_REL: f64 = 0.10;
const UNIT_WEIGHT_TOL: f64 = 1e-12;

// Criterion 7
const SPHERE_REL: f64 = 0.10;
const SPHERE_LIP_REL: f64 = 0.10;

// Criterion 8
const SPLIT_INSTANCES: usize = 20;
const SPLIT_LAMBDAS: usize = 32;
const SPLIT_A: [f64; 3] = [0.25, 1.0, 4.0];
const SCALE_FACTOR: f64 = 7.0;
const SCALE_REL: f64 = 1e-12;

// Criterion 9
const PERF_N: usize = 2000;
const PERF_BUDGET: Duration = Duration::from_secs(60);
const PERF_WORKERS: usize = 4;
const PERF_SPEEDUP: f64 = 2.0;

const SEED: u64 = 0x006d_6d6c_6162;

struct Verdict {
    pass: bool,
    detail: String,
    /// A failure the host cannot avoid; reported but not fatal.
    host_limited: bool,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            host_limited: false,
        }
    }
}

fn lip(space: &MetricMeasureSpace, field: &ScalarField) -> LipField {
    lip_field(space, field, &default_schedule(space), LipEstimator::Ratio).unwrap()
}

fn grid(dim: usize, n: usize) -> MetricMeasureSpace {
    uniform_grid(&GridSpec::cube(dim, n, -1.0, 1.0)).unwrap()
}

fn gallery(space: &MetricMeasureSpace, kind: GalleryKind, center: Vec<f64>, scale: f64) -> ScalarField {
    gallery_make(space, kind, &GalleryParams::new(center, scale, 1.0)).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> (MetricMeasureSpace, ScalarField) {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let space = if rng.random_bool(0.2) {
        let edges = (0..n)
            .map(|i| (i, (i + 1) % n, rng.random_range(1..4) as f64))
            .collect();
        MetricMeasureSpace::graph(n, edges, weights).unwrap()
    } else {
        let dim = rng.random_range(1..=3);
        let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        MetricMeasureSpace::euclidean(dim, coords, weights).unwrap()
    };
    let values = if rng.random_bool(0.3) {
        (0..n).map(|_| rng.random_range(0..5) as f64).collect()
    } else {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    (space, ScalarField::new(values).unwrap())
}

/// `sup_λ λ^p W(λ)` by enumerating every distinct attained value.
fn enumerate_sup(pairs: &[(f64, f64)], p: f64) -> f64 {
    let mut sorted: Vec<(f64, f64)> = pairs.iter().copied().filter(|e| e.0 > 0.0).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut mass = ExactSum::new();
    let mut best = 0.0f64;
    let mut k = 0;
    while k < sorted.len() {
        let v = sorted[k].0;
        while k < sorted.len() && sorted[k].0 == v {
            mass.add(sorted[k].1);
            k += 1;
        }
        best = best.max(v.powf(p) * mass.value());
    }
    best
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst_sup, mut worst_entry, mut mismatched) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..ORACLE_INSTANCES {
        let n = rng.random_range(2..=ORACLE_MAX_N);
        let p = [1.0, 1.5, 2.0][rng.random_range(0..3)];
        let (space, field) = random_instance(&mut rng, n);
        let naive = oracle::naive_spectrum(&space, &field.values, 1.0, p);
        let spectrum = pair_quotients(&space, &field, 1.0, p).unwrap();
        let engine = weak_norm(&spectrum, p).unwrap().value;
        worst_sup = worst_sup.max(rel(engine, enumerate_sup(&naive, p)));

        let mut expected: Vec<(f64, f64)> = naive.into_iter().filter(|e| e.0 > 0.0).collect();
        expected.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
        let mut got: Vec<(f64, f64)> = spectrum.entries.iter().map(|e| (e.value, e.weight)).collect();
        got.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
        if got.len() != expected.len() || spectrum.zero_count + got.len() != n * (n - 1) {
            mismatched += 1;
            continue;
        }
        for (g, e) in got.iter().zip(&expected) {
            worst_entry = worst_entry.max(rel(g.0, e.0)).max(rel(g.1, e.1));
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_sup <= ORACLE_REL && worst_entry <= ORACLE_REL && mismatched == 0 && elapsed < ORACLE_BUDGET;
    Verdict::new(
        pass,
        format!(
            "{ORACLE_INSTANCES} instances: sup rel {worst_sup:.1e}, entry rel {worst_entry:.1e}, \
             length mismatches {mismatched}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn equivalence_stability() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut all_finite = true;
    let mut lines = Vec::new();
    for (dim, sizes) in [(1usize, [4096usize, 8192]), (2, [64, 96])] {
        let spaces = sizes.map(|n| grid(dim, n));
        for kind in [GalleryKind::Tent, GalleryKind::Bump, GalleryKind::SineBump] {
            let fields = spaces.each_ref().map(|s| gallery(s, kind, vec![0.0; dim], 1.0));
            let lips: Vec<LipField> = spaces.iter().zip(&fields).map(|(s, f)| lip(s, f)).collect();
            for p in [1.0, 2.0] {
                let ratios: Vec<Option<f64>> = (0..2)
                    .map(|k| bvsy_equivalence(&spaces[k], &fields[k], &lips[k], p).unwrap().ratio)
                    .collect();
                match (ratios[0], ratios[1]) {
                    (Some(a), Some(b)) if a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 => {
                        let change = (b / a - 1.0).abs();
                        worst = worst.max(change);
                        lines.push(format!("{dim}D {} p={p} {:.2}%", kind.name(), 100.0 * change));
                    }
                    _ => all_finite = false,
                }
            }
        }
    }
    let elapsed = start.elapsed();
    for line in &lines {
        println!("       {line}");
    }
    Verdict::new(
        all_finite && worst < STABILITY_REL && elapsed < STABILITY_BUDGET,
        format!("worst change {:.2}%, {:.0}s", 100.0 * worst, elapsed.as_secs_f64()),
    )
}

fn limit_profile() -> Verdict {
    let space = grid(1, 8192);
    let field = gallery(&space, GalleryKind::Bump, vec![0.0], 1.0);
    let eq = bvsy_equivalence_with(&space, &field, &lip(&space, &field), 1.0, &KernelConfig::default()).unwrap();
    let w = &eq.report.liminf;
    let (lo, hi) = (PROFILE_BAND.0 * BUMP_DERIVATIVE_L1, PROFILE_BAND.1 * BUMP_DERIVATIVE_L1);
    let pass = w.points > 0 && w.exact && w.min >= lo && w.max <= hi;
    Verdict::new(
        pass,
        format!(
            "λW(λ) over [{:.3e}, {:.3e}] ({} values, exact {}) in [{:.4}, {:.4}], band [{lo}, {hi}]",
            w.window.0, w.window.1, w.points, w.exact, w.min, w.max
        ),
    )
}

fn critical_sets() -> Verdict {
    let mut worst = f64::INFINITY;
    let mut failed = Vec::new();
    for (dim, n) in [(1usize, 8192usize), (2, 96)] {
        let space = grid(dim, n);
        for kind in GalleryKind::ALL {
            let field = gallery(&space, kind, vec![0.0; dim], 1.0);
            let r = critical_set_study(&space, &field, &lip(&space, &field), CRITICAL_DELTA_FRAC).unwrap();
            worst = worst.min(r.min_fraction);
            if !(r.eligible_points > 0 && r.min_fraction >= CRITICAL_MIN_FRACTION) {
                failed.push(format!("{dim}D {}", kind.name()));
            }
        }
    }
    Verdict::new(
        failed.is_empty(),
        format!("smallest fraction {worst:.3} (floor {CRITICAL_MIN_FRACTION}), failing {failed:?}"),
    )
}

fn nearest(space: &MetricMeasureSpace, x: f64) -> usize {
    (0..space.len())
        .min_by(|&a, &b| {
            let da = (space.coords(a).unwrap()[0] - x).abs();
            let db = (space.coords(b).unwrap()[0] - x).abs();
            da.total_cmp(&db)
        })
        .unwrap()
}

fn poincare() -> Verdict {
    let space = grid(1, 4096);
    let linear = ScalarField::from_fn(&space, |x| x[0]).unwrap();
    let ball = BallFamily::from_balls(&space, &[(nearest(&space, 0.5), 0.25)], 1.0).unwrap();
    let report = poincare_constant(&space, &linear, &lip(&space, &linear), 1.0, 1.0, &ball).unwrap();
    let linear_c2 = report.rows[0].ratio.unwrap_or(f64::NAN);
    let mut c1_ok = report.c1.passed;

    let mut spread = 0.0f64;
    for kind in GalleryKind::ALL {
        let mut c2 = Vec::new();
        for n in [512, 1024, 2048] {
            let s = grid(1, n);
            let f = gallery(&s, kind, vec![0.0], 1.0);
            let r = poincare_constant(&s, &f, &lip(&s, &f), 1.0, 1.0, &default_family(&s, 1.0).unwrap()).unwrap();
            c1_ok &= r.c1.passed;
            c2.push(r.c2);
        }
        let (lo, hi) = c2
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
        spread = spread.max(hi / lo - 1.0);
    }
    let linear_ok = (linear_c2 / LINEAR_C2 - 1.0).abs() <= LINEAR_C2_REL;
    Verdict::new(
        c1_ok && linear_ok && spread < POINCARE_SPREAD,
        format!(
            "C1 battery {}, linear C2 {linear_c2:.4}, largest C2 spread {:.2}%",
            if c1_ok { "passed" } else { "failed" },
            100.0 * spread
        ),
    )
}

fn weighted() -> Verdict {
    let root = WeightSpec::power(0.5);
    let ratio = |n| {
        let s = weighted_grid(&GridSpec::cube(1, n, -1.0, 1.0), &root).unwrap();
        let f = gallery(&s, GalleryKind::Bump, vec![0.0], 1.0);
        bvsy_equivalence(&s, &f, &lip(&s, &f), 2.0).unwrap().ratio
    };
    let (a, b) = (ratio(4096), ratio(8192));
    let ratio_change = match (a, b) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => (b / a - 1.0).abs(),
        _ => f64::INFINITY,
    };

    let family = CubeFamily::dyadic(1, -1.0, 1.0, 1, 7).unwrap();
    let a2 = ap_refinement(&root, 2.0, &family, 2).unwrap();
    let linear = ap_refinement(&WeightSpec::power(1.0), 2.0, &family, 2).unwrap();

    let mut unit = 0.0f64;
    let coarse = family.truncated(4).unwrap();
    for p in [1.0, 1.5, 2.0, 3.0] {
        let r = ap_constant(&WeightSpec::constant(), p, &coarse, &coarse.sample_grid(2)).unwrap();
        unit = unit.max((r.value - 1.0).abs());
    }
    Verdict::new(
        ratio_change <= WEIGHTED_REL
            && !a2.diverging
            && a2.last_change <= WEIGHTED_REL
            && unit <= UNIT_WEIGHT_TOL
            && linear.diverging,
        format!(
            "ratio change {:.2}%, A2 change {:.2}%, unit weight |A_p - 1| {unit:.1e}, |x| diverging {}",
            100.0 * ratio_change,
            100.0 * a2.last_change,
            linear.diverging
        ),
    )
}

fn sphere() -> Verdict {
    let mut ratios = Vec::new();
    let mut lip_errors = Vec::new();
    for level in [4, 5] {
        let s = icosphere(level, 1.0).unwrap();
        let f = gallery(&s, GalleryKind::Bump, vec![0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2);
        let l = lip(&s, &f);
        let g = f.grad_norm.as_deref().unwrap();
        let w = s.weights();
        let err: ExactSum = l
            .values
            .iter()
            .zip(g)
            .zip(w)
            .map(|((a, b), w)| (a - b).abs() * w)
            .collect();
        let norm: ExactSum = g.iter().zip(w).map(|(b, w)| b * w).collect();
        lip_errors.push(err.value() / norm.value());
        ratios.push(bvsy_equivalence(&s, &f, &l, 1.0).unwrap().ratio.unwrap_or(f64::NAN));
    }
    let change = (ratios[1] / ratios[0] - 1.0).abs();
    let lip_worst = lip_errors.iter().copied().fold(0.0, f64::max);
    Verdict::new(
        change <= SPHERE_REL && lip_worst <= SPHERE_LIP_REL,
        format!(
            "ratios {:.4} -> {:.4} ({:.2}%), lip relative L1 error {:.2}% / {:.2}%",
            ratios[0],
            ratios[1],
            100.0 * change,
            100.0 * lip_errors[0],
            100.0 * lip_errors[1]
        ),
    )
}

fn inequalities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let (mut checked, mut violations) = (0usize, 0usize);
    for _ in 0..SPLIT_INSTANCES {
        let n = rng.random_range(8..=40);
        let (space, field) = random_instance(&mut rng, n);
        let params = InterpolationParams::new(
            rng.random_range(0.1..0.9),
            rng.random_range(1.2..3.0),
            rng.random_range(0.1..0.9),
        )
        .unwrap();
        let lambdas: Vec<f64> = (0..SPLIT_LAMBDAS)
            .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (SPLIT_LAMBDAS - 1) as f64))
            .collect();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let df = field.values[i] - field.values[j];
                let rho = space.dist(i, j);
                let vol = space.pair_volume(i, j).unwrap();
                for &lambda in &lambdas {
                    for a in SPLIT_A {
                        let (whole, fractional, gradient) = split_membership(df, rho, vol, lambda, a, &params);
                        checked += 1;
                        if whole && !(fractional || gradient) {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }

    let cfg = KernelConfig::default();
    let mut drift = 0.0f64;
    for seed in 0..4u64 {
        let s = random_box(2, 120, -1.0, 1.0, SEED + seed).unwrap();
        let f = gallery(&s, GalleryKind::Bump, vec![0.0, 0.0], 1.0);
        let g = f.affine(SCALE_FACTOR, 0.0);
        let (lf, lg) = (lip(&s, &f), lip(&s, &g));
        for p in [1.0, 1.5, 2.0] {
            let a = sobolev_weak_check(&s, &f, &lf, p, &cfg).unwrap().ratio.unwrap();
            let b = sobolev_weak_check(&s, &g, &lg, p, &cfg).unwrap().ratio.unwrap();
            drift = drift.max(rel(a, b));
        }
        let params = InterpolationParams::new(0.5, 2.0, 0.5).unwrap();
        let a = gn_check(&s, &f, &lf, &params, &cfg).unwrap().ratio.unwrap();
        let b = gn_check(&s, &g, &lg, &params, &cfg).unwrap().ratio.unwrap();
        drift = drift.max(rel(a, b));
    }
    Verdict::new(
        violations == 0 && drift <= SCALE_REL,
        format!("{violations} containment violations in {checked} memberships, scale drift {drift:.1e}"),
    )
}

fn full_equivalence(space: &MetricMeasureSpace, field: &ScalarField) -> String {
    let l = lip(space, field);
    let eq = bvsy_equivalence_with(space, field, &l, 1.0, &KernelConfig::default()).unwrap();
    serde_json::to_string(&(&eq.report, &eq.weak, &l.values)).unwrap()
}

fn performance() -> Verdict {
    let space = random_box(2, PERF_N, -1.0, 1.0, SEED).unwrap();
    let field = gallery(&space, GalleryKind::Bump, vec![0.0, 0.0], 1.0);
    let timed = |workers| {
        par::with_threads(Some(workers), || {
            let start = Instant::now();
            let out = full_equivalence(&space, &field);
            (out, start.elapsed())
        })
    };
    let (single, t1) = timed(1);
    let (multi, t4) = timed(PERF_WORKERS);
    let identical = single == multi;
    let speedup = t1.as_secs_f64() / t4.as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let fast = speedup >= PERF_SPEEDUP;
    let mut v = Verdict::new(
        t1 < PERF_BUDGET && identical && fast,
        format!(
            "N={PERF_N}: 1 worker {:.2}s, {PERF_WORKERS} workers {:.2}s, speedup {speedup:.2}x, \
             bit-identical {identical}, host cores {cores}",
            t1.as_secs_f64(),
            t4.as_secs_f64()
        ),
    );
    if !fast && t1 < PERF_BUDGET && identical && cores < PERF_WORKERS {
        v.host_limited = true;
        v.detail
            .push_str(&format!(" (speedup unattainable with {cores} core(s))"));
    }
    v
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("equivalence stability", equivalence_stability),
        ("1-D limit profile", limit_profile),
        ("critical sets", critical_sets),
        ("Poincaré constants", poincare),
        ("weighted equivalence and A_p", weighted),
        ("sphere refinement", sphere),
        ("set splitting and scaling", inequalities),
        ("performance", performance),
    ];
    let mut fatal = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] C{} {name}: {} [{:.1}s]",
            k + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass && !v.host_limited {
            fatal += 1;
        }
    }
    if fatal == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{fatal} criteria failed");
        ExitCode::FAILURE
    }
}
