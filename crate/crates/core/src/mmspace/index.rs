use crate::error::{Error, Result};
use crate::par;
use crate::sum::ExactSum;

use super::MetricMeasureSpace;

/// All points sorted by distance from one center, with exact cumulative
/// masses.
///
/// `prefix[k]` is the correctly rounded mass of the `k` nearest points, so
/// `μ(B(center, r)) = prefix[#{j : ρ(center, j) < r}]`. Because the sums are
/// correctly rounded, lookups agree bit-for-bit with a direct scan.
#[derive(Clone, Debug, Default)]
pub struct CenterRow {
    center: usize,
    keys: Vec<(u64, u32)>,
    dist: Vec<f64>,
    order: Vec<u32>,
    prefix: Vec<f64>,
    spare: Vec<(u64, u32)>,
}

impl CenterRow {
    pub fn build(space: &MetricMeasureSpace, center: usize) -> Self {
        let mut row = CenterRow::default();
        row.rebuild(space, center);
        row
    }

    /// Recomputes the row for `center`, reusing the allocations.
    pub fn rebuild(&mut self, space: &MetricMeasureSpace, center: usize) {
        let n = space.len();
        self.center = center;
        self.keys.clear();
        // Distances are finite and nonnegative, so their bit patterns sort
        // like the values; the index breaks ties deterministically.
        self.keys
            .extend((0..n).map(|j| (space.dist(center, j).to_bits(), j as u32)));
        radix_sort(&mut self.keys, &mut self.spare);
        self.dist.clear();
        self.order.clear();
        self.prefix.clear();
        self.prefix.push(0.0);
        self.dist
            .extend(self.keys.iter().map(|&(bits, _)| f64::from_bits(bits)));
        self.order.extend(self.keys.iter().map(|&(_, j)| j));
        if let Some(w) = space.uniform_weight() {
            // k equal terms: one rounding of the exact product is the
            // correctly rounded sum.
            self.prefix.extend((1..=n).map(|k| k as f64 * w));
        } else {
            let w = space.weights();
            let mut acc = ExactSum::new();
            for &j in &self.order {
                acc.add(w[j as usize]);
                self.prefix.push(acc.value());
            }
        }
    }

    /// Calls `visit(j, ρ(center, j), V(center, j))` for every `j ≠ center`,
    /// nearest first.
    #[inline]
    pub fn for_each_volume(&self, mut visit: impl FnMut(usize, f64, f64)) {
        let n = self.dist.len();
        let mut k = 0;
        while k < n {
            let d = self.dist[k];
            let v = self.prefix[k];
            let mut m = k;
            while m < n && self.dist[m] == d {
                let j = self.order[m] as usize;
                if j != self.center {
                    visit(j, d, v);
                }
                m += 1;
            }
            k = m;
        }
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Distances in nondecreasing order (the center comes first, at 0).
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    /// Point indices in the same order as [`Self::distances`].
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Cumulative masses, `prefix.len() == n + 1`.
    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    /// `μ(B(center, r))` for the open ball.
    pub fn ball_measure(&self, r: f64) -> f64 {
        self.prefix[self.dist.partition_point(|&d| d < r)]
    }

    /// Writes `V(center, j)` into `out[j]` for every `j` (and the center's own
    /// weight-free value 0 into `out[center]`).
    pub fn volumes_into(&self, out: &mut [f64]) {
        let n = self.dist.len();
        let mut k = 0;
        while k < n {
            let d = self.dist[k];
            let v = self.prefix[k];
            let mut m = k;
            while m < n && self.dist[m] == d {
                out[self.order[m] as usize] = v;
                m += 1;
            }
            k = m;
        }
    }
}

/// Stable LSD radix sort on the key, 11 bits per pass; passes where every
/// key shares the digit are skipped. The input is in index order, so the
/// result equals sorting by `(key, index)`.
fn radix_sort(keys: &mut Vec<(u64, u32)>, spare: &mut Vec<(u64, u32)>) {
    const BITS: u32 = 11;
    const RADIX: usize = 1 << BITS;
    if keys.len() < 64 {
        keys.sort_unstable();
        return;
    }
    let (mut or, mut and) = (0u64, u64::MAX);
    for &(k, _) in keys.iter() {
        or |= k;
        and &= k;
    }
    let varying = or ^ and;
    spare.clear();
    spare.resize(keys.len(), (0, 0));
    let mut counts = vec![0usize; RADIX];
    let mut shift = 0;
    while shift < 64 {
        let mask = ((RADIX as u64 - 1) << shift) & varying;
        if mask != 0 {
            counts.fill(0);
            for &(k, _) in keys.iter() {
                counts[((k >> shift) as usize) & (RADIX - 1)] += 1;
            }
            let mut total = 0;
            for c in counts.iter_mut() {
                let here = *c;
                *c = total;
                total += here;
            }
            for &item in keys.iter() {
                let d = ((item.0 >> shift) as usize) & (RADIX - 1);
                spare[counts[d]] = item;
                counts[d] += 1;
            }
            std::mem::swap(keys, spare);
        }
        shift += BITS;
    }
}

/// Per-center sorted distances for every point of a space.
///
/// Memory is `O(N²)`; the pair kernels in [`crate::weaknorm`] build rows on
/// the fly instead and only need this for repeated ball queries on small
/// spaces.
#[derive(Clone, Debug)]
pub struct DistanceIndex {
    rows: Vec<CenterRow>,
}

impl DistanceIndex {
    pub fn build(space: &MetricMeasureSpace) -> Self {
        let rows = par::map_range(space.len(), |i| CenterRow::build(space, i));
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> Result<&CenterRow> {
        self.rows.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.rows.len(),
        })
    }

    pub fn ball_measure(&self, i: usize, r: f64) -> Result<f64> {
        let row = self.row(i)?;
        if !(r > 0.0) {
            return Err(Error::NonPositiveRadius(r));
        }
        Ok(row.ball_measure(r))
    }

    pub fn pair_volume(&self, space: &MetricMeasureSpace, i: usize, j: usize) -> Result<f64> {
        let row = self.row(i)?;
        if j >= self.rows.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.rows.len(),
            });
        }
        if i == j {
            return Err(Error::DiagonalPair(i));
        }
        Ok(row.ball_measure(space.dist(i, j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::{random_box, uniform_grid, GridSpec};
    use rand::{Rng, SeedableRng};

    #[test]
    fn row_invariants() {
        let s = random_box(2, 200, 0.0, 1.0, 3).unwrap();
        let row = CenterRow::build(&s, 17);
        assert_eq!(row.order()[0], 17);
        assert_eq!(row.distances()[0], 0.0);
        assert!(row.distances().windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*row.prefix().last().unwrap(), s.total_mass());
    }

    #[test]
    fn indexed_queries_match_direct_scan_exactly() {
        let s = random_box(2, 300, 0.0, 1.0, 5).unwrap();
        let idx = DistanceIndex::build(&s);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let i = rng.random_range(0..s.len());
            let r = rng.random_range(1e-3..1.5);
            assert_eq!(
                idx.ball_measure(i, r).unwrap().to_bits(),
                s.ball_measure(i, r).unwrap().to_bits()
            );
            let j = rng.random_range(0..s.len());
            if i != j {
                assert_eq!(
                    idx.pair_volume(&s, i, j).unwrap().to_bits(),
                    s.pair_volume(i, j).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn radix_sort_matches_comparison_sort() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for len in [0, 10, 63, 64, 1000, 5000] {
            for spread in [4u64, 1 << 20, u64::MAX >> 1] {
                let mut keys: Vec<(u64, u32)> = (0..len).map(|j| (rng.random_range(0..spread), j as u32)).collect();
                let mut expected = keys.clone();
                expected.sort_unstable();
                radix_sort(&mut keys, &mut Vec::new());
                assert_eq!(keys, expected);
            }
        }
    }

    #[test]
    fn visit_order_volumes_match_index_volumes() {
        for s in [
            random_box(2, 300, 0.0, 1.0, 11).unwrap(),
            uniform_grid(&GridSpec::cube(2, 17, 0.0, 1.0)).unwrap(),
        ] {
            let row = CenterRow::build(&s, 40);
            let mut v = vec![0.0; s.len()];
            row.volumes_into(&mut v);
            let mut seen = 0;
            row.for_each_volume(|j, d, vol| {
                assert_eq!(d, s.dist(40, j));
                assert_eq!(vol.to_bits(), v[j].to_bits());
                assert_eq!(vol.to_bits(), s.pair_volume(40, j).unwrap().to_bits());
                seen += 1;
            });
            assert_eq!(seen, s.len() - 1);
        }
    }

    #[test]
    fn volumes_respect_ties() {
        // Grid points at equal distance share the same (exclusive) volume.
        let s = uniform_grid(&GridSpec::cube(1, 5, 0.0, 5.0)).unwrap();
        let row = CenterRow::build(&s, 2);
        let mut v = vec![0.0; 5];
        row.volumes_into(&mut v);
        assert_eq!(v, vec![3.0, 1.0, 0.0, 1.0, 3.0]);
    }
}
