use crate::mmspace::{CenterRow, MetricMeasureSpace};

/// `|Δf| / (ρ^s · V^{1/r})`, the ordered-pair difference quotient.
///
/// Every code path that produces spectrum values goes through this function,
/// so quotients are bit-identical wherever they are computed.
#[inline]
pub fn quotient_value(df: f64, rho: f64, vol: f64, s: f64, r: f64) -> f64 {
    let a = if s == 1.0 { rho } else { rho.powf(s) };
    let b = if r == 1.0 {
        vol
    } else if r == 2.0 {
        vol.sqrt()
    } else {
        vol.powf(1.0 / r)
    };
    df / (a * b)
}

/// `v^p` with exact fast paths for the common exponents.
#[inline]
pub(crate) fn pow_p(v: f64, p: f64) -> f64 {
    if p == 1.0 {
        v
    } else if p == 2.0 {
        v * v
    } else {
        v.powf(p)
    }
}

/// Per-worker buffers for one center row.
#[derive(Default)]
pub(crate) struct RowScratch {
    pub row: CenterRow,
}

/// Enumerates ordered pairs `(i, j)`, `j ≠ i`, of one center with
/// `ρ(i, j)` and `V(i, j)`, nearest `j` first.
pub(crate) fn for_each_pair(
    space: &MetricMeasureSpace,
    scratch: &mut RowScratch,
    i: usize,
    visit: impl FnMut(usize, f64, f64),
) {
    scratch.row.rebuild(space, i);
    scratch.row.for_each_volume(visit);
}

/// Enumerates `(j, q, pair weight)` for center `i`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn for_each_quotient(
    space: &MetricMeasureSpace,
    values: &[f64],
    s: f64,
    r: f64,
    scratch: &mut RowScratch,
    i: usize,
    mut emit: impl FnMut(usize, f64, f64),
) {
    let w = space.weights();
    let (fi, wi) = (values[i], w[i]);
    for_each_pair(space, scratch, i, |j, rho, vol| {
        let df = (fi - values[j]).abs();
        let q = if df == 0.0 {
            0.0
        } else {
            quotient_value(df, rho, vol, s, r)
        };
        emit(j, q, wi * w[j]);
    });
}
