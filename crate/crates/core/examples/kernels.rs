//! The numeric building blocks on their own: least squares, optimal 1-D
//! k-means over residuals, and snapping constants to a round grid.

use chardiff::stats::{kmeans_1d, ols_fit, snap, NormalityGrid, Role};

fn main() {
    let old = [
        23000.0, 25000.0, 16000.0, 13000.0, 11000.0, 15000.0, 12000.0, 15000.0, 21000.0,
    ];
    let new = [
        25150.0, 27250.0, 17440.0, 13790.0, 11000.0, 16400.0, 12000.0, 16400.0, 23050.0,
    ];

    let fit = ols_fit(&[&old], &new, 0.0).expect("well-posed");
    println!(
        "global fit: new = {:.6} x old {:+.3} (r2 {:.4}, rank {})",
        fit.coefficients[0], fit.intercept, fit.r_squared, fit.rank
    );

    for k in 1..=4 {
        let c = kmeans_1d(&fit.residuals, k).expect("enough distinct residuals");
        println!("k = {k}: sse {:>12.1}, labels {:?}", c.sse, c.labels);
    }

    let grid = NormalityGrid::default();
    for (v, role) in [
        (1.0497, Role::Rate),
        (1.05, Role::Rate),
        (987.0, Role::Amount),
        (1000.0, Role::Amount),
    ] {
        let s = snap(v, role, &grid);
        println!("{v:>8} as {role:?}: {s:?}");
    }
}
