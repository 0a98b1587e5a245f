//! Reference implementations written straight from the textbook
//! definitions, kept separate from the library code they check.

/// Krippendorff's alpha for nominal data: mean pairwise disagreement within
/// units over mean pairwise disagreement across all pairable values.
/// `None` when there is no disagreement to expect or nothing pairable.
pub fn alpha(rows: &[Vec<Option<usize>>]) -> Option<f64> {
    let mut within = 0.0;
    let mut pool = Vec::new();
    for row in rows {
        let vals: Vec<usize> = row.iter().flatten().copied().collect();
        if vals.len() < 2 {
            continue;
        }
        let mut d = 0usize;
        for i in 0..vals.len() {
            for j in 0..vals.len() {
                if i != j && vals[i] != vals[j] {
                    d += 1;
                }
            }
        }
        within += d as f64 / (vals.len() - 1) as f64;
        pool.extend(vals);
    }
    // ordered pairs of pairable values that disagree, tallied by value
    let mut counts = std::collections::BTreeMap::new();
    for v in &pool {
        *counts.entry(*v).or_insert(0usize) += 1;
    }
    let n = pool.len();
    let mut between = 0usize;
    for (a, na) in &counts {
        for (b, nb) in &counts {
            if a != b {
                between += na * nb;
            }
        }
    }
    if n < 2 || between == 0 {
        return None;
    }
    let n = n as f64;
    Some(1.0 - (within / n) / (between as f64 / (n * (n - 1.0))))
}

/// Benjamini-Hochberg decisions from the step-up definition.
pub fn bh_reject(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len() as f64;
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    match (1..=p.len()).filter(|&k| sorted[k - 1] <= k as f64 * alpha / m).max() {
        Some(k) => p.iter().map(|x| *x <= sorted[k - 1]).collect(),
        None => vec![false; p.len()],
    }
}

/// BH-adjusted p-values: q_i = min over sorted positions k with
/// p_(k) >= p_i of m·p_(k)/k, capped at 1.
pub fn bh_q(p: &[f64]) -> Vec<f64> {
    let m = p.len() as f64;
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    p.iter()
        .map(|&pi| {
            sorted
                .iter()
                .enumerate()
                .filter(|(_, &pk)| pk >= pi)
                .map(|(k, &pk)| m * pk / (k + 1) as f64)
                .fold(1.0f64, f64::min)
        })
        .collect()
}

/// Mean silhouette under Euclidean distance.
pub fn silhouette(coords: &[[f64; 2]], labels: &[usize]) -> f64 {
    let n = coords.len();
    let mut total = 0.0;
    for i in 0..n {
        let (mut own, mut own_n, mut other, mut other_n) = (0.0, 0, 0.0, 0);
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = ((coords[i][0] - coords[j][0]).powi(2) + (coords[i][1] - coords[j][1]).powi(2)).sqrt();
            if labels[i] == labels[j] {
                own += d;
                own_n += 1;
            } else {
                other += d;
                other_n += 1;
            }
        }
        let a = own / own_n as f64;
        let b = other / other_n as f64;
        total += (b - a) / a.max(b);
    }
    total / n as f64
}
