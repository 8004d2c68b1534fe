//! Sample statistics for comparing simulator output against references.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and its standard error (Bessel-corrected variance).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0);
    (m, (var / n as f64).sqrt())
}

/// Whether the two sample means agree within `sigmas` combined standard
/// errors. Degenerate zero-variance samples must match exactly.
pub fn within_tolerance(a: &[f64], b: &[f64], sigmas: f64) -> bool {
    let (ma, sa) = mean_and_se(a);
    let (mb, sb) = mean_and_se(b);
    let spread = (sa * sa + sb * sb).sqrt();
    if spread == 0.0 {
        return ma == mb;
    }
    (ma - mb).abs() <= sigmas * spread
}
