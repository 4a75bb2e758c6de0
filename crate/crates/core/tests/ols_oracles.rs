#![allow(clippy::needless_range_loop)]

use pla_core::linalg::{Matrix, SymmetricMatrix, Vector};
use pla_core::ols::{approx_coefficients, ols_fit, student_t_sf};
use pla_core::perturbation::{split_known_population, JointMoments};
use proptest::prelude::*;

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| gauss_solve(a.to_vec(), (0..n).map(|i| (i == j) as u8 as f64).collect()))
        .collect();
    (0..n)
        .map(|i| (0..n).map(|j| cols[j][i]).collect())
        .collect()
}

fn centred(rows: usize, cols: usize, v: &[f64]) -> Matrix<f64> {
    let means: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| v[i * cols + j]).sum::<f64>() / rows as f64)
        .collect();
    Matrix::from_fn(rows, cols, |i, j| v[i * cols + j] - means[j])
}

fn instance() -> impl Strategy<Value = (Matrix<f64>, Vector<f64>)> {
    (1usize..=6).prop_flat_map(|m| {
        ((m + 2)..=50).prop_flat_map(move |n| {
            (
                prop::collection::vec(-3.0f64..3.0, n * m),
                prop::collection::vec(-3.0f64..3.0, n),
            )
                .prop_map(move |(x, y)| {
                    let y = centred(n, 1, &y);
                    (centred(n, m, &x), y.column(0))
                })
        })
    })
}

proptest! {
    #[test]
    fn coefficients_match_normal_equations((x, y) in instance()) {
        let Ok(fit) = ols_fit(&x, &y) else { return Ok(()) };
        let (n, m) = (x.rows(), x.cols());
        let gram: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| (0..n).map(|k| x.get(k, i) * x.get(k, j)).sum()).collect())
            .collect();
        let xty: Vec<f64> = (0..m).map(|j| (0..n).map(|k| x.get(k, j) * y[k]).sum()).collect();
        let oracle = gauss_solve(gram, xty.clone());
        for j in 0..m {
            prop_assert!((fit.coefficients[j] - oracle[j]).abs() <= 1e-10);
        }
        let scale = xty.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..m {
            let xr: f64 = (0..n).map(|k| x.get(k, j) * fit.residuals[k]).sum();
            prop_assert!(xr.abs() <= 1e-8 * scale.max(1.0));
        }
        prop_assert_eq!(fit.df, n - m);
        prop_assert!(fit.p_values.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn exact_fit_recovers_coefficients((x, _) in instance(), beta in prop::collection::vec(-2.0f64..2.0, 6)) {
        let m = x.cols();
        let y = x.mul_vec(&Vector::from_slice(&beta[..m]).unwrap()).unwrap();
        let Ok(fit) = ols_fit(&x, &y) else { return Ok(()) };
        for j in 0..m {
            prop_assert!((fit.coefficients[j] - beta[j]).abs() <= 1e-9);
        }
    }

    #[test]
    fn tail_decreases_in_magnitude(t in 0.0f64..20.0, dt in 0.001f64..5.0, df in 1u32..200) {
        let df = df as f64;
        let a = student_t_sf(t, df).unwrap();
        let b = student_t_sf(t + dt, df).unwrap();
        prop_assert!(b <= a);
        prop_assert_eq!(student_t_sf(-t, df).unwrap(), a);
    }
}

/// `∫₀¹ f` by composite Simpson with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Two-sided t tail by quadrature of the unnormalized density, with
/// `x = u / (1 - u)` mapping `[0, 1)` onto `[0, ∞)`.
fn t_tail_oracle(t: f64, df: f64) -> f64 {
    let g = |x: f64| (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let mapped = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let x = u / (1.0 - u);
        g(x) / ((1.0 - u) * (1.0 - u))
    };
    let total = simpson(mapped, 0.0, 1.0, 400_000);
    let head = simpson(g, 0.0, t, 400_000);
    1.0 - head / total
}

fn normal_tail_oracle(t: f64) -> f64 {
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    1.0 - 2.0 * simpson(phi, 0.0, t, 200_000)
}

#[test]
fn t_tail_matches_quadrature() {
    let p = student_t_sf(2.228, 10.0).unwrap();
    let oracle = t_tail_oracle(2.228, 10.0);
    assert!((p - oracle).abs() < 1e-8, "{p} vs {oracle}");
    assert!((p - 0.050).abs() <= 0.001);
    for (t, df) in [(0.7, 3.0), (1.5, 1000.0), (3.1, 25.0)] {
        let oracle = t_tail_oracle(t, df);
        let got = student_t_sf(t, df).unwrap();
        assert!(
            (got - oracle).abs() < 1e-8,
            "t = {t}, df = {df}: {got} vs {oracle}"
        );
    }
}

#[test]
fn t_tail_approaches_normal() {
    let mut prev_gap = f64::INFINITY;
    for df in [1e2, 1e3, 1e4] {
        let gap = (0..=60)
            .map(|i| i as f64 * 0.1)
            .map(|t| (student_t_sf(t, df).unwrap() - normal_tail_oracle(t)).abs())
            .fold(0.0f64, f64::max);
        assert!(gap < prev_gap / 5.0, "df = {df}: gap {gap}");
        prev_gap = gap;
    }
    assert!(prev_gap < 1e-4);
}

#[test]
fn approximation_is_the_first_order_expansion() {
    // D = {0}; Σ block-diagonal, Cov supported on D^c.
    let pop = JointMoments::new(
        SymmetricMatrix::from_rows(&[[1.5, 0.0, 0.0], [0.0, 2.0, 0.6], [0.0, 0.6, 1.2]]).unwrap(),
        Vector::from_slice(&[0.0, 0.7, -0.4]).unwrap(),
        2.0,
    )
    .unwrap();
    let h_sigma = [
        [0.03, -0.02, 0.05],
        [-0.02, 0.01, 0.04],
        [0.05, 0.04, -0.03],
    ];
    let h_cov = [0.02, -0.01, 0.03];
    let oracle = |scale: f64| {
        let sigma: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| pop.sigma.get(i, j)).collect())
            .collect();
        let inv = inverse(&sigma);
        let h: Vec<Vec<f64>> = h_sigma
            .iter()
            .map(|r| r.iter().map(|v| v * scale).collect())
            .collect();
        let hc: Vec<f64> = h_cov.iter().map(|v| v * scale).collect();
        let cov = pop.cov.as_slice();
        let inv_cov: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|k| inv[i][k] * cov[k]).sum())
            .collect();
        let h_inv_cov: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|k| h[i][k] * inv_cov[k]).sum())
            .collect();
        // First order: Σ⁻¹h − Σ⁻¹HΣ⁻¹Cov, component 0.
        let first = (0..3)
            .map(|k| inv[0][k] * (hc[k] - h_inv_cov[k]))
            .sum::<f64>();
        // Exact sample coefficient (Σ + H)⁻¹(Cov + h), component 0.
        let hat: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| sigma[i][j] + h[i][j]).collect())
            .collect();
        let rhs: Vec<f64> = (0..3).map(|k| cov[k] + hc[k]).collect();
        (first, gauss_solve(hat, rhs)[0], h, hc)
    };
    let mut errors = Vec::new();
    for scale in [1.0, 0.1, 0.01] {
        let (first, exact, h, hc) = oracle(scale);
        let sample = JointMoments::new(
            pop.sigma
                .add(&SymmetricMatrix::from_rows(&h).unwrap())
                .unwrap(),
            pop.cov.add(&Vector::from_slice(&hc).unwrap()).unwrap(),
            pop.var_y,
        )
        .unwrap();
        let split =
            split_known_population(&pop, &JointMoments::zeros(3), &sample, &sample, &[0]).unwrap();
        let approx = approx_coefficients(&split).unwrap();
        assert!((approx.noise[0] - first).abs() < 1e-12 * scale.max(1e-3) * 10.0);
        assert_eq!(approx.noise, approx.perturbed);
        errors.push((exact - approx.noise[0]).abs());
    }
    // Second-order remainder: a tenfold smaller noise cuts it about a hundredfold.
    assert!(
        errors[1] < errors[0] / 50.0 && errors[2] < errors[1] / 50.0,
        "{errors:?}"
    );

    let quiet = split_known_population(&pop, &JointMoments::zeros(3), &pop, &pop, &[0]).unwrap();
    assert_eq!(approx_coefficients(&quiet).unwrap().noise, vec![0.0]);
}
