use std::collections::BTreeMap;

use super::StatsError;

fn check_lengths(a: usize, b: usize) -> Result<(), StatsError> {
    if a != b {
        return Err(StatsError::DimensionMismatch(format!("lengths {a} and {b}")));
    }
    if a < 2 {
        return Err(StatsError::DimensionMismatch(format!(
            "need at least 2 observations, got {a}"
        )));
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Sample Pearson correlation; 0 when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_lengths(x.len(), y.len())?;
    if is_constant(x) || is_constant(y) {
        return Ok(0.0);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation ratio η = sqrt(between-group SS / total SS); 0 when `y` is constant.
pub fn correlation_ratio<G: Ord>(groups: &[G], y: &[f64]) -> Result<f64, StatsError> {
    check_lengths(groups.len(), y.len())?;
    if is_constant(y) {
        return Ok(0.0);
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let mut by_group: BTreeMap<&G, (f64, f64)> = BTreeMap::new();
    for (g, v) in groups.iter().zip(y) {
        let e = by_group.entry(g).or_insert((0.0, 0.0));
        e.0 += 1.0;
        e.1 += v;
    }
    let between: f64 = by_group
        .values()
        .map(|(count, sum)| count * (sum / count - mean).powi(2))
        .sum();
    let total: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((between / total).clamp(0.0, 1.0).sqrt())
}
