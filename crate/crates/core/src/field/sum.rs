const BLOCK: usize = 8;

/// Sum with a fixed binary split so the result never depends on how callers chunk work.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of elementwise products.
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "pairwise_dot length mismatch");
    if a.len() <= BLOCK {
        return a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y);
    }
    let mid = a.len() / 2;
    pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
}
