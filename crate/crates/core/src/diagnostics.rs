//! Shape statistics of sampled profiles: monotonicity, convexity and
//! oscillation counts.

/// Indices `i` where the profile fails to increase strictly, i.e.
/// `v[i + 1] - v[i] <= tol`.
pub fn non_increasing_steps(values: &[f64], tol: f64) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] <= tol)
        .map(|(i, _)| i)
        .collect()
}

/// Indices `i` with `v[i + 1] < v[i] - tol`.
pub fn strict_decreases(values: &[f64], tol: f64) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0] - tol)
        .map(|(i, _)| i)
        .collect()
}

/// Sign flips of a series, ignoring entries with `|x| <= tol`. Each flip is
/// reported as the pair of indices of the two retained entries around it.
pub fn sign_changes(values: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut last: Option<(usize, bool)> = None;
    for (i, x) in values.iter().enumerate() {
        if x.abs() <= tol {
            continue;
        }
        let positive = *x > 0.0;
        if let Some((j, p)) = last {
            if p != positive {
                out.push((j, i));
            }
        }
        last = Some((i, positive));
    }
    out
}

pub fn first_differences(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `v[i] - 2 v[i + 1] + v[i + 2]`; entry `k` is centred on sample `k + 1`.
pub fn second_differences(values: &[f64]) -> Vec<f64> {
    values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect()
}

/// Turning points: sign changes of the first differences. Flat stretches
/// (steps within `tol`) are skipped, so a plateau between a rise and a fall
/// counts once.
pub fn local_extrema(values: &[f64], tol: f64) -> usize {
    sign_changes(&first_differences(values), tol).len()
}
