#![allow(clippy::needless_range_loop)]

use super::StatsError;

/// Relative pivot below which a centered column counts as linearly dependent
/// on the columns before it.
const RANK_TOL: f64 = 1e-10;
/// Ridge applied automatically to rank-deficient systems, relative to the
/// mean diagonal of the centered normal matrix.
const FALLBACK_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub rank_deficient: bool,
    /// Numerical rank of the centered design.
    pub rank: usize,
}

impl OlsFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>()
    }

    pub fn l1(&self) -> f64 {
        self.residuals.iter().map(|r| r.abs()).sum()
    }
}

/// Least squares with intercept over column-major regressors.
///
/// The intercept is absorbed by centering, and the `p × p` normal equations are
/// Jacobi-scaled before a Cholesky solve. `ridge` adds `ridge·‖β‖²` to the
/// objective. Singular systems get a tiny relative ridge and are flagged.
pub fn ols_fit(columns: &[&[f64]], y: &[f64], ridge: f64) -> Result<OlsFit, StatsError> {
    let n = y.len();
    let p = columns.len();
    if n == 0 {
        return Err(StatsError::DimensionMismatch("no observations".into()));
    }
    if let Some((j, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != n) {
        return Err(StatsError::DimensionMismatch(format!(
            "regressor {j} has {} rows, response has {n}",
            c.len()
        )));
    }
    if ridge.is_nan() || ridge < 0.0 {
        return Err(StatsError::DimensionMismatch(format!(
            "ridge must be >= 0, got {ridge}"
        )));
    }

    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let x_means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .zip(&x_means)
        .map(|(c, m)| c.iter().map(|v| v - m).collect())
        .collect();
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for i in 0..p {
        for j in i..p {
            let s = dot(&centered[i], &centered[j]);
            a[i][j] = s;
            a[j][i] = s;
        }
        b[i] = dot(&centered[i], &yc);
    }

    let rank = numeric_rank(&a);
    let rank_deficient = rank < p;
    let mut m = a.clone();
    let mut lambda = ridge;
    if rank_deficient {
        let mean_diag = (0..p).map(|i| a[i][i]).sum::<f64>() / p as f64;
        lambda += FALLBACK_RIDGE * if mean_diag > 0.0 { mean_diag } else { 1.0 };
    }
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += lambda;
    }
    let coefficients = if p == 0 { Vec::new() } else { solve_spd(&m, &b) };

    let intercept = y_mean - x_means.iter().zip(&coefficients).map(|(m, c)| m * c).sum::<f64>();
    let residuals: Vec<f64> = (0..n)
        .map(|i| {
            let fitted: f64 = columns.iter().zip(&coefficients).map(|(c, b)| c[i] * b).sum();
            y[i] - fitted - intercept
        })
        .collect();
    let ss_tot = dot(&yc, &yc);
    let ss_res = dot(&residuals, &residuals);
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= f64::EPSILON * (1.0 + y_mean.abs()) {
        1.0
    } else {
        0.0
    };

    Ok(OlsFit {
        coefficients,
        intercept,
        residuals,
        r_squared,
        rank_deficient,
        rank,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scaling(m: &[Vec<f64>]) -> Vec<f64> {
    (0..m.len())
        .map(|i| if m[i][i] > 0.0 { 1.0 / m[i][i].sqrt() } else { 1.0 })
        .collect()
}

/// Count of columns that survive a Cholesky factorization of the scaled
/// matrix; dependent columns are skipped rather than aborting.
fn numeric_rank(a: &[Vec<f64>]) -> usize {
    let p = a.len();
    let s = scaling(a);
    let mut l = vec![vec![0.0; p]; p];
    let mut rank = 0;
    for j in 0..p {
        if a[j][j] <= 0.0 {
            continue;
        }
        let mut d = a[j][j] * s[j] * s[j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d <= RANK_TOL {
            continue;
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in j + 1..p {
            let mut v = a[i][j] * s[i] * s[j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / djj;
        }
        rank += 1;
    }
    rank
}

/// Solve `m x = b` for symmetric positive definite `m`.
fn solve_spd(m: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let p = m.len();
    let s = scaling(m);
    let mut l = vec![vec![0.0; p]; p];
    for j in 0..p {
        let mut d = m[j][j] * s[j] * s[j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        // the fallback ridge keeps d positive; guard anyway
        let djj = d.max(f64::MIN_POSITIVE).sqrt();
        l[j][j] = djj;
        for i in j + 1..p {
            let mut v = m[i][j] * s[i] * s[j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / djj;
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        let mut v = b[i] * s[i];
        for k in 0..i {
            v -= l[i][k] * z[k];
        }
        z[i] = v / l[i][i];
    }
    for i in (0..p).rev() {
        let mut v = z[i];
        for k in i + 1..p {
            v -= l[k][i] * z[k];
        }
        z[i] = v / l[i][i];
    }
    z.iter().zip(&s).map(|(z, s)| z * s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phd_partition_is_exact() {
        let x = [23000.0, 25000.0, 21000.0];
        let y = [25150.0, 27250.0, 23050.0];
        let fit = ols_fit(&[&x], &y, 0.0).unwrap();
        assert!((fit.coefficients[0] - 1.05).abs() < 1e-12);
        assert!((fit.intercept - 1000.0).abs() < 1e-8);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-8));
        assert!(!fit.rank_deficient);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn identity_regression() {
        let x = [3.0, -1.0, 4.0, 1.5];
        let fit = ols_fit(&[&x], &x, 0.0).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
    }

    #[test]
    fn intercept_only() {
        let fit = ols_fit(&[], &[1.0, 2.0, 6.0], 0.0).unwrap();
        assert!(fit.coefficients.is_empty());
        assert_eq!(fit.intercept, 3.0);
        assert_eq!(fit.rank, 0);
    }

    #[test]
    fn collinear_columns_flagged() {
        let salary = [230000.0, 250000.0, 210000.0];
        let bonus = [23000.0, 25000.0, 21000.0];
        let y = [25150.0, 27250.0, 23050.0];
        let fit = ols_fit(&[&bonus, &salary], &y, 0.0).unwrap();
        assert!(fit.rank_deficient);
        assert_eq!(fit.rank, 1);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-4), "{:?}", fit.residuals);
    }

    #[test]
    fn single_row_is_rank_zero() {
        let fit = ols_fit(&[&[13000.0]], &[13790.0], 0.0).unwrap();
        assert!(fit.rank_deficient);
        assert_eq!(fit.rank, 0);
        assert_eq!(fit.coefficients, [0.0]);
        assert_eq!(fit.intercept, 13790.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            ols_fit(&[&[1.0, 2.0]], &[1.0], 0.0),
            Err(StatsError::DimensionMismatch(_))
        ));
        assert!(ols_fit(&[], &[], 0.0).is_err());
    }

    #[test]
    fn ridge_shrinks() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        let plain = ols_fit(&[&x], &y, 0.0).unwrap();
        let shrunk = ols_fit(&[&x], &y, 5.0).unwrap();
        // centered sxx = 5, sxy = 10: β = 10 / (5 + 5)
        assert!((plain.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((shrunk.coefficients[0] - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn recovers_exact_affine(a in -50.0f64..50.0, b in -1e4f64..1e4, xs in prop::collection::vec(-1e3f64..1e3, 3..30)) {
            let distinct = xs.iter().any(|v| (v - xs[0]).abs() > 1.0);
            prop_assume!(distinct);
            let y: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let fit = ols_fit(&[&xs], &y, 0.0).unwrap();
            prop_assert!((fit.coefficients[0] - a).abs() <= 1e-9 * a.abs().max(1.0));
            prop_assert!((fit.intercept - b).abs() <= 1e-9 * b.abs().max(1.0) + 1e-9 * a.abs() * 1e3);
        }

        #[test]
        fn residuals_orthogonal(rows in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0, -1e3f64..1e3), 5..40)) {
            let x1: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let x2: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let fit = ols_fit(&[&x1, &x2], &y, 0.0).unwrap();
            prop_assume!(!fit.rank_deficient);
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let sum: f64 = fit.residuals.iter().sum();
            prop_assert!(sum.abs() <= 1e-8 * scale);
            for col in [&x1, &x2] {
                let d: f64 = col.iter().zip(&fit.residuals).map(|(a, b)| a * b).sum();
                prop_assert!(d.abs() <= 1e-8 * scale);
            }
        }
    }
}
