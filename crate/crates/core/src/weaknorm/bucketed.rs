//! Two-pass engine for spectra too large to hold in memory.
//!
//! Pass one streams every quotient into 2^18 buckets keyed by the top 18
//! bits of its IEEE representation below the sign (exponent and 7 mantissa
//! bits; buckets are monotone in value and about 1% wide). Each bucket holds
//! an exact weight sum, a count and its value range. With `T_b` the exact weight of all buckets at or above
//! `b`, every bucket satisfies
//!
//! ```text
//! min_b^p T_b  ≤  max over values v in b of v^p W(≥ v)  ≤  max_b^p T_b.
//! ```
//!
//! The left side is itself an exact profile point (`v = min_b`). Pass two
//! re-enumerates only the buckets whose upper bound reaches the best lower
//! bound, plus the tail window, and evaluates them exactly.

use crate::mmspace::MetricMeasureSpace;
use crate::par;
use crate::sum::ExactSum;

use super::{
    best, descending_profile, for_each_quotient, pow_p, EngineMode, KernelConfig, ProfilePoint, RowScratch,
    SpectrumEntry, WeakNormResult,
};
use crate::error::Result;

const SHIFT: u32 = 45;
const BUCKETS: usize = 1 << (63 - SHIFT);

#[inline]
fn bucket_of(q: f64) -> usize {
    (q.to_bits() >> SHIFT) as usize
}

#[derive(Clone, Copy)]
struct Cell {
    count: u64,
    min: f64,
    max: f64,
}

const EMPTY: Cell = Cell {
    count: 0,
    min: f64::INFINITY,
    max: 0.0,
};

/// Per-bucket counts and value ranges, plus exact weights unless every pair
/// carries the same weight.
struct Histogram {
    cells: Vec<Cell>,
    sum: Vec<ExactSum>,
}

impl Histogram {
    fn new(weighted: bool) -> Self {
        Self {
            cells: vec![EMPTY; BUCKETS],
            sum: if weighted {
                vec![ExactSum::new(); BUCKETS]
            } else {
                Vec::new()
            },
        }
    }

    #[inline]
    fn add(&mut self, q: f64, w: f64) {
        let b = bucket_of(q);
        if let Some(s) = self.sum.get_mut(b) {
            s.add(w);
        }
        let c = &mut self.cells[b];
        c.count += 1;
        if q < c.min {
            c.min = q;
        }
        if q > c.max {
            c.max = q;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (b, o) in other.cells.iter().enumerate() {
            if o.count > 0 {
                if let Some(s) = self.sum.get_mut(b) {
                    s.merge(&other.sum[b]);
                }
                let c = &mut self.cells[b];
                c.count += o.count;
                c.min = c.min.min(o.min);
                c.max = c.max.max(o.max);
            }
        }
        self
    }
}

pub(super) fn weak_norm_bucketed(
    space: &MetricMeasureSpace,
    values: &[f64],
    s: f64,
    r: f64,
    p: f64,
    cfg: &KernelConfig,
) -> Result<WeakNormResult> {
    let n = space.len();
    let pair_count = n * (n - 1);
    let pair_weight = space.uniform_weight().map(|w| w * w);

    let hist = par::fold_range(
        n,
        RowScratch::default,
        || Histogram::new(pair_weight.is_none()),
        |scratch, hist, i| {
            for_each_quotient(space, values, s, r, scratch, i, |_, q, w| {
                if q > 0.0 {
                    hist.add(q, w);
                }
            })
        },
        Histogram::merge,
    );

    let occupied: Vec<usize> = (0..BUCKETS).rev().filter(|&b| hist.cells[b].count > 0).collect();
    if occupied.is_empty() {
        return Ok(WeakNormResult::zero(p, pair_count, EngineMode::Bucketed));
    }
    let max_value = hist.cells[occupied[0]].max;

    // above[k]: exact weight of the buckets strictly above occupied[k].
    let mut above = Vec::with_capacity(occupied.len());
    let mut lower = Vec::with_capacity(occupied.len());
    let mut upper = Vec::with_capacity(occupied.len());
    let mut acc = ExactSum::new();
    let mut seen = 0u64;
    for &b in &occupied {
        let t = match pair_weight {
            Some(c) => {
                let mut a = ExactSum::new();
                a.add_product(seen as f64, c);
                above.push(a);
                seen += hist.cells[b].count;
                seen as f64 * c
            }
            None => {
                above.push(acc.clone());
                acc.merge(&hist.sum[b]);
                acc.value()
            }
        };
        lower.push(pow_p(hist.cells[b].min, p) * t);
        upper.push(pow_p(hist.cells[b].max, p) * t);
    }
    let floor = lower.iter().copied().fold(0.0, f64::max);

    let cut = max_value / cfg.tail_span;
    let tail_buckets = occupied.iter().take_while(|&&b| hist.cells[b].max >= cut).count();
    let tail_entries: u64 = occupied[..tail_buckets].iter().map(|&b| hist.cells[b].count).sum();
    let tail_exact = tail_entries <= cfg.tail_cap as u64;

    let mut refine = vec![false; BUCKETS];
    for (k, &b) in occupied.iter().enumerate() {
        if upper[k] >= floor || (tail_exact && k < tail_buckets) {
            refine[b] = true;
        }
    }

    let mut entries = par::fold_range(
        n,
        RowScratch::default,
        Vec::new,
        |scratch, out: &mut Vec<SpectrumEntry>, i| {
            for_each_quotient(space, values, s, r, scratch, i, |_, q, w| {
                if q > 0.0 && refine[bucket_of(q)] {
                    out.push(SpectrumEntry { value: q, weight: w });
                }
            })
        },
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    );
    sort_descending(&mut entries, &hist.cells, &occupied, &refine);

    let mut profile = Vec::new();
    let mut start = 0;
    for (k, &b) in occupied.iter().enumerate() {
        if refine[b] {
            let len = entries[start..].partition_point(|e| bucket_of(e.value) == b);
            let mut acc = above[k].clone();
            profile.extend(descending_profile(&entries[start..start + len], p, &mut acc));
            start += len;
        } else {
            profile.push(ProfilePoint {
                value: hist.cells[b].min,
                lambda_p_w: lower[k],
            });
        }
    }
    let (value, argmax) = best(&profile);
    let tail = if tail_exact {
        profile.iter().take_while(|pt| pt.value >= cut).copied().collect()
    } else {
        let last = hist.cells[occupied[tail_buckets - 1]].min;
        profile.iter().take_while(|pt| pt.value >= last).copied().collect()
    };
    Ok(WeakNormResult {
        p,
        value,
        argmax,
        profile,
        tail,
        tail_exact,
        tail_floor: cut,
        max_value,
        mode: EngineMode::Bucketed,
        pair_count,
    })
}

/// Sorts refined entries by value, descending: a counting scatter by bucket,
/// then a sort inside each bucket.
fn sort_descending(entries: &mut Vec<SpectrumEntry>, cells: &[Cell], occupied: &[usize], refine: &[bool]) {
    let mut start = vec![0usize; BUCKETS];
    let mut ranges = Vec::new();
    let mut at = 0;
    for &b in occupied {
        if refine[b] {
            start[b] = at;
            ranges.push(at..at + cells[b].count as usize);
            at += cells[b].count as usize;
        }
    }
    debug_assert_eq!(at, entries.len());
    let mut out = vec![
        SpectrumEntry {
            value: 0.0,
            weight: 0.0
        };
        entries.len()
    ];
    for e in entries.iter() {
        let b = bucket_of(e.value);
        out[start[b]] = *e;
        start[b] += 1;
    }
    let mut rest: &mut [SpectrumEntry] = &mut out;
    let mut slices = Vec::with_capacity(ranges.len());
    for r in &ranges {
        let (head, tail) = rest.split_at_mut(r.len());
        slices.push(head);
        rest = tail;
    }
    par::for_each_mut(&mut slices, |s| {
        s.sort_unstable_by(|a, b| b.value.total_cmp(&a.value).then(a.weight.total_cmp(&b.weight)))
    });
    *entries = out;
}
