/// Index of the `percentile` order statistic among `n` sorted values.
fn rank(percentile: f64, n: usize) -> usize {
    ((percentile / 100.0) * (n - 1) as f64).round() as usize
}

/// Running percentile over a centered window of `window` values.
///
/// Near the ends the window is truncated rather than padded. The result has
/// the same length as `values`.
pub fn running_percentile(values: &[f64], window: usize, percentile: f64) -> Vec<f64> {
    let n = values.len();
    let half = window.max(1) / 2;
    let mut sorted: Vec<f64> = Vec::with_capacity(2 * half + 1);
    let mut out = Vec::with_capacity(n);
    let insert = |sorted: &mut Vec<f64>, v: f64| {
        let at = sorted.partition_point(|x| x.total_cmp(&v).is_lt());
        sorted.insert(at, v);
    };
    for &v in values.iter().take(half.min(n.saturating_sub(1)) + 1) {
        insert(&mut sorted, v);
    }
    for i in 0..n {
        if i > 0 {
            if let Some(&v) = values.get(i + half) {
                insert(&mut sorted, v);
            }
            if i > half {
                let gone = values[i - half - 1];
                let at = sorted.partition_point(|x| x.total_cmp(&gone).is_lt());
                sorted.remove(at);
            }
        }
        out.push(sorted[rank(percentile, sorted.len())]);
    }
    out
}

pub fn running_median(values: &[f64], window: usize) -> Vec<f64> {
    running_percentile(values, window, 50.0)
}
