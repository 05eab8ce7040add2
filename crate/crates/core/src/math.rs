//! Float helpers routed through `libm` so results do not depend on whether a
//! platform libm is linked.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divide by n).
pub(crate) fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|v| (v - m) * (v - m)).sum();
    sqrt(ss / xs.len() as f64)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `count` points spaced evenly in log scale from `hi` down to `lo`.
pub(crate) fn log_grid_descending(hi: f64, lo: f64, count: usize) -> alloc::vec::Vec<f64> {
    if count == 1 {
        return alloc::vec![hi];
    }
    let (lh, ll) = (ln(hi), ln(lo));
    (0..count)
        .map(|i| exp(lh + (ll - lh) * i as f64 / (count - 1) as f64))
        .collect()
}
