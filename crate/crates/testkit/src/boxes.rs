//! Brute-force comparisons of matrix preorders on truncated state boxes.
//!
//! Everything here works on plain integer vectors so the helpers can be
//! called from any crate's tests without type-identity headaches.

/// All integer points of `[0, radius]^d`, lexicographically ordered.
pub fn full_box(d: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut point = vec![0i64; d];
    loop {
        out.push(point.clone());
        let mut k = d;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if point[k] < radius {
                point[k] += 1;
                break;
            }
            point[k] = 0;
        }
    }
}

fn leq(m: &[Vec<i64>], x: &[i64], y: &[i64]) -> bool {
    m.iter().all(|row| {
        row.iter()
            .zip(x.iter().zip(y))
            .map(|(&a, (&xv, &yv))| a * (xv - yv))
            .sum::<i64>()
            <= 0
    })
}

fn evaluate(c_rows: &[Vec<i64>], x: &[i64]) -> Vec<i64> {
    c_rows
        .iter()
        .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
        .collect()
}

/// True when two preorder matrices agree on every pair of points of the
/// box `[0, radius]^d` that lie in the same compatibility class, where
/// classes are the level sets of the given conservation rows.
pub fn same_class_pairs_agree(
    m1: &[Vec<i64>],
    m2: &[Vec<i64>],
    c_rows: &[Vec<i64>],
    d: usize,
    radius: i64,
) -> bool {
    let points = full_box(d, radius);
    let keys: Vec<Vec<i64>> = points.iter().map(|p| evaluate(c_rows, p)).collect();
    for (i, x) in points.iter().enumerate() {
        for (j, y) in points.iter().enumerate() {
            if keys[i] != keys[j] {
                continue;
            }
            if leq(m1, x, y) != leq(m2, x, y) {
                return false;
            }
        }
    }
    true
}
