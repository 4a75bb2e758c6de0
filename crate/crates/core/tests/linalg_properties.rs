#![allow(clippy::needless_range_loop)]

use pla_core::linalg::{
    correlation_from_covariance, eigh, mean_center, sample_covariance, solve_spd, Matrix,
    SymmetricMatrix, Vector,
};
use proptest::prelude::*;

fn symmetric(max_dim: usize) -> impl Strategy<Value = SymmetricMatrix<f64>> {
    (1..=max_dim).prop_flat_map(|n| {
        prop::collection::vec(-10.0f64..10.0, n * n)
            .prop_map(move |v| SymmetricMatrix::from_lower_fn(n, |i, j| v[i * n + j]))
    })
}

fn spd(max_dim: usize) -> impl Strategy<Value = SymmetricMatrix<f64>> {
    (1..=max_dim).prop_flat_map(|n| {
        prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |b| {
            SymmetricMatrix::from_lower_fn(n, |i, j| {
                let dot: f64 = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum();
                dot + if i == j { 0.5 } else { 0.0 }
            })
        })
    })
}

fn data(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Matrix<f64>> {
    (2..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-5.0f64..5.0, r * c).prop_map(move |v| Matrix::new(r, c, v).unwrap())
    })
}

proptest! {
    #[test]
    fn eigen_invariants(a in symmetric(12)) {
        let e = eigh(&a).unwrap();
        let n = a.dim();
        let lam = e.eigenvalues();
        for k in 1..n {
            prop_assert!(lam[k - 1] >= lam[k]);
        }
        let v = e.eigenvectors();
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| v.get(k, i) * v.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - target).abs() <= 1e-10);
            }
        }
        for k in 0..n {
            let col = e.eigenvector(k);
            let av = a.mul_vec(&col).unwrap();
            let res: f64 = (0..n).map(|i| (av[i] - lam[k] * col[i]).powi(2)).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-9 * lam[k].abs().max(1.0));
            let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let dom = col.iter().position(|x| x.abs() >= max * (1.0 - 1e-10)).unwrap();
            prop_assert!(col[dom] >= 0.0);
        }
        let recon = e.reconstruct();
        prop_assert!(recon.sub(&a).unwrap().max_abs() <= 1e-9 * a.max_abs().max(1.0));
        let sum: f64 = lam.iter().sum();
        prop_assert!((sum - a.trace()).abs() <= 1e-9 * a.trace().abs().max(1.0));
    }

    #[test]
    fn spd_solve_round_trip(a in spd(8), seed in 0u64..1000) {
        let n = a.dim();
        let b = Vector::new((0..n).map(|i| ((seed + i as u64) % 7) as f64 - 3.0).collect()).unwrap();
        let x = solve_spd(&a, &b).unwrap();
        let back = a.mul_vec(&x).unwrap();
        prop_assert!(back.sub(&b).unwrap().norm() <= 1e-9 * b.norm().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn covariance_matches_double_loop(raw in data(10, 6)) {
        let c = mean_center(&raw).unwrap();
        let got = sample_covariance(&c).unwrap();
        let (n, m) = (c.rows(), c.cols());
        for i in 0..m {
            for j in 0..m {
                let mut s = 0.0;
                for k in 0..n {
                    s += c.get(k, i.max(j)) * c.get(k, i.min(j));
                }
                prop_assert_eq!(got.get(i, j), s / (n - 1) as f64);
            }
        }
    }

    #[test]
    fn centring_sums_vanish(raw in data(20, 5)) {
        let c = mean_center(&raw).unwrap();
        for j in 0..c.cols() {
            let s: f64 = (0..c.rows()).map(|i| c.get(i, j)).sum();
            prop_assert!(s.abs() <= 1e-12 * c.rows() as f64 * c.max_abs().max(1.0));
        }
    }

    #[test]
    fn correlation_is_bounded_and_idempotent(a in spd(8)) {
        let r = correlation_from_covariance(&a).unwrap();
        prop_assert!(r.diag().iter().all(|&d| d == 1.0));
        prop_assert!(r.max_abs() <= 1.0 + 1e-12);
        let again = correlation_from_covariance(&r).unwrap();
        prop_assert!(again.sub(&r).unwrap().max_abs() <= 1e-15);
    }
}

#[test]
fn single_precision_eigen() {
    let a =
        SymmetricMatrix::<f32>::from_rows(&[[4.0f32, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]])
            .unwrap();
    let e = eigh(&a).unwrap();
    let recon = e.reconstruct();
    assert!(recon.sub(&a).unwrap().max_abs() < 1e-5);
}
