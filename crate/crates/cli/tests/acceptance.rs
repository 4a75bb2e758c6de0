//! Acceptance gate: one pass/fail line per criterion, non-zero exit if any
//! criterion fails or exceeds its time budget.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use pla_core::linalg::{eigh, mean_center, Matrix, SymmetricMatrix};
use pla_core::ols::{ols_fit, student_t_sf};
use pla_core::perturbation::{
    check_angle_condition, check_corr_angle_condition, split_correlation, split_known_population,
    tau_bounds, BoundConstant, CorrelationOperands, JointMoments,
};
use pla_core::pla::{match_eigen_to_block, run_pla_on_matrix, Basis};
use pla_core::simulation::{
    make_population, run_study, sample_gaussian, sample_moments, PopulationParams, SeededRng,
    Structure, TauChoice, TrialConfig,
};
use rand::seq::SliceRandom;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Variable blocks of the bipartite loading graph, found by depth-first
/// search. Returns blocks with as many variables as eigenvectors that are
/// neither empty nor everything.
fn dfs_blocks(vectors: &Matrix<f64>, tau: f64) -> Vec<Vec<usize>> {
    let m = vectors.rows();
    let mut seen = vec![false; 2 * m];
    let mut blocks = Vec::new();
    for start in 0..2 * m {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let (mut vars, mut pairs) = (Vec::new(), 0);
        while let Some(node) = stack.pop() {
            let neighbours: Vec<usize> = if node < m {
                vars.push(node);
                (0..m)
                    .filter(|&k| vectors.get(node, k).abs() > tau)
                    .map(|k| m + k)
                    .collect()
            } else {
                pairs += 1;
                (0..m)
                    .filter(|&i| vectors.get(i, node - m).abs() > tau)
                    .collect()
            };
            for nb in neighbours {
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        if !vars.is_empty() && vars.len() == pairs && vars.len() < m {
            vars.sort_unstable();
            blocks.push(vars);
        }
    }
    blocks.sort();
    blocks
}

fn permute(a: &SymmetricMatrix<f64>, perm: &[usize]) -> SymmetricMatrix<f64> {
    SymmetricMatrix::from_lower_fn(a.dim(), |i, j| a.get(perm[i], perm[j]))
}

fn criterion_1() -> Outcome {
    let rng = SeededRng::new(1);
    let mut failures = 0;
    for case in 0..50u64 {
        let mut r = rng.stream(&[case]);
        let m = r.random_range(2..=7);
        let params = PopulationParams {
            m,
            d_size: r.random_range(1..m),
            signal: r.random_range(0.5..3.0),
            perturb_eps: 0.0,
            ..PopulationParams::default()
        };
        let spec = make_population(&params, case).expect("population");
        // Shuffle every joint variable so blocks are not contiguous.
        let mut perm: Vec<usize> = (0..=m).collect();
        perm.shuffle(&mut r);
        let joint = permute(&spec.joint(), &perm);
        let position = |v: usize| perm.iter().position(|&p| p == v).unwrap();
        let mut expected: Vec<usize> = spec.d_set.iter().map(|&d| position(d)).collect();
        expected.sort_unstable();
        let response = position(m);

        let report = run_pla_on_matrix(&joint, Basis::Covariance, 0.0).expect("pla");
        let mut found: Vec<Vec<usize>> = report
            .candidates
            .iter()
            .map(|c| c.discard_set.clone())
            .collect();
        found.sort();
        let oracle = dfs_blocks(report.eigensystem.eigenvectors(), 0.0);
        let discarded: Vec<usize> = {
            let mut v: Vec<usize> = found
                .iter()
                .filter(|b| !b.contains(&response))
                .flatten()
                .copied()
                .collect();
            v.sort_unstable();
            v
        };
        if found != oracle || discarded != expected {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("{failures}/50 block structures disagree with D or the component oracle"),
    )
}

fn criterion_2() -> Outcome {
    let rng = SeededRng::new(2);
    let (mut worst_rec, mut worst_res, mut worst_orth) = (0.0f64, 0.0f64, 0.0f64);
    let mut ordered = true;
    for case in 0..500u64 {
        let mut r = rng.stream(&[case]);
        let n = r.random_range(1..=12);
        let scale = 10f64.powf(r.random_range(-3.0..3.0));
        let a = SymmetricMatrix::from_lower_fn(n, |_, _| scale * r.random_range(-1.0..1.0));
        let eig = eigh(&a).expect("eigh");
        let lam = eig.eigenvalues();
        ordered &= lam.windows(2).all(|w| w[0] >= w[1]);
        let bound = a.max_abs().max(1.0);
        let rec = eig.reconstruct().sub(&a).unwrap().max_abs() / bound;
        worst_rec = worst_rec.max(rec);
        for (i, &l) in lam.iter().enumerate() {
            let v = eig.eigenvector(i);
            let res = a.mul_vec(&v).unwrap().sub(&v.scale(l)).unwrap().norm() / l.abs().max(1.0);
            worst_res = worst_res.max(res);
        }
        let v = eig.eigenvectors();
        let gram = v.transpose().matmul(v).unwrap();
        worst_orth = worst_orth.max(gram.sub(&Matrix::identity(n)).unwrap().max_abs());
    }
    let pass = ordered && worst_rec <= 1e-9 && worst_res <= 1e-9 && worst_orth <= 1e-9;
    outcome(
        pass,
        format!(
            "500 matrices: worst scaled reconstruction {worst_rec:.1e}, residual {worst_res:.1e}, \
             orthonormality {worst_orth:.1e} (limit 1e-9), descending = {ordered}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let config = TrialConfig::default();
    let (mut trials, mut violations) = (0, 0);
    let (mut angle, mut ratio, mut corr_angle) = (0, 0, 0);
    for pop in 0..10u64 {
        let params = PopulationParams {
            perturb_cov: pop % 2 == 1,
            ..PopulationParams::default()
        };
        let spec = make_population(&params, 300 + pop).expect("population");
        let study = run_study(&spec, &[500], 100, &config, &SeededRng::new(pop), 0).expect("study");
        for t in &study.trials {
            trials += 1;
            violations += usize::from(t.violations.any());
            angle += usize::from(t.angle_holds);
            ratio += usize::from(t.ratio_holds);
            corr_angle += usize::from(t.corr_angle_holds);
        }
    }
    outcome(
        trials == 1000 && violations == 0,
        format!(
            "{violations} violations in {trials} trials (angle held {angle}, ratio held {ratio}, \
             correlation angle held {corr_angle})"
        ),
    )
}

fn default_study(n_list: &[usize], reps: usize) -> pla_core::simulation::StudySummary {
    let spec = make_population(&PopulationParams::default(), 42).expect("population");
    let config = TrialConfig {
        tau: TauChoice::Fixed(0.1),
        ..TrialConfig::default()
    };
    run_study(&spec, n_list, reps, &config, &SeededRng::new(42), 0)
        .expect("study")
        .summary
}

fn criterion_4() -> Outcome {
    let s = default_study(&[100, 400, 1600, 6400], 200);
    let (h, hr) = (
        s.h_norm_slope.unwrap_or(f64::NAN),
        s.h_rho_norm_slope.unwrap_or(f64::NAN),
    );
    let inside = |v: f64| (-0.6..=-0.4).contains(&v);
    outcome(
        inside(h) && inside(hr),
        format!("slope of mean ||H||_F {h:.4}, of mean ||H_rho||_F {hr:.4} (target [-0.6, -0.4])"),
    )
}

fn criterion_5() -> Outcome {
    let rng = SeededRng::new(5);
    let (mut feasible, mut violations, mut skipped) = (0, 0, 0);
    for case in 0..500u64 {
        let mut r = rng.stream(&[case]);
        let params = PopulationParams {
            perturb_eps: 0.05 * r.random_range(0.0..1.0),
            perturb_cov: r.random_bool(0.5),
            ..PopulationParams::default()
        };
        let spec = make_population(&params, case % 25).expect("population");
        let n = [200, 500, 2000][(case % 3) as usize];
        let mut trial = SeededRng::new(case).trial(0, 0);
        let base =
            sample_moments(&sample_gaussian(&spec, n, false, &mut trial.base).unwrap()).unwrap();
        let tilde = sample_moments(&sample_gaussian(&spec, n, true, &mut trial.perturbed).unwrap())
            .unwrap();
        // Pull the perturbed sample towards its population so that the
        // feasible region is reached on part of the instances.
        let shrink = r.random_range(0.0..1.0);
        let target = spec.perturbed();
        let closer = JointMoments::new(
            target
                .sigma
                .add(&tilde.sigma.sub(&target.sigma).unwrap().scale(shrink))
                .unwrap(),
            target
                .cov
                .add(&tilde.cov.sub(&target.cov).unwrap().scale(shrink))
                .unwrap(),
            target.var_y + (tilde.var_y - target.var_y) * shrink,
        )
        .unwrap();
        let Ok(split) = split_known_population(
            &spec.population(),
            &spec.perturbation(),
            &base,
            &closer,
            &spec.d_set,
        ) else {
            skipped += 1;
            continue;
        };
        let eig = eigh(&spec.joint()).unwrap();
        let delta = match_eigen_to_block(&eig, &spec.d_set, 0.0).unwrap();
        let b = tau_bounds(&split, eig.eigenvalues(), &delta, BoundConstant::TwoThirds).unwrap();
        let c: f64 = BoundConstant::TwoThirds.value();
        let h_frob = split.h.joint_frobenius();
        let mut bad = !(b.aggregate_upper <= b.aggregate_upper_necessary);
        for t in &b.tuples {
            bad |= !(t.upper_tight <= t.upper_necessary);
            bad |= !(c * h_frob / t.gap >= t.upper_necessary);
        }
        if b.feasible {
            feasible += 1;
            bad |= !(b.aggregate_lower <= b.aggregate_upper);
            let mid = 0.5 * (b.aggregate_lower + b.aggregate_upper);
            for tau in [b.aggregate_lower, mid, b.aggregate_upper] {
                bad |= !b
                    .tuples
                    .iter()
                    .all(|t| t.lower <= tau && tau <= t.upper_tight);
            }
        }
        violations += usize::from(bad);
    }
    outcome(
        violations == 0 && feasible > 0 && skipped == 0,
        format!("{violations} violations over 500 instances ({feasible} feasible, {skipped} unsplittable)"),
    )
}

fn criterion_6() -> Outcome {
    let s = default_study(&[200, 800, 3200], 200);
    let slope = s.approx_error_slope.unwrap_or(f64::NAN);
    outcome(
        (-1.25..=-0.75).contains(&slope),
        format!("slope of mean |beta_full - beta_approx| over D {slope:.4} (target -1 +/- 0.25)"),
    )
}

/// Normal equations solved by Gaussian elimination with partial pivoting.
fn normal_equations(x: &Matrix<f64>, y: &[f64]) -> Vec<f64> {
    let (n, m) = (x.rows(), x.cols());
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = (0..n).map(|k| x.get(k, i) * x.get(k, j)).sum();
        }
        a[i][m] = (0..n).map(|k| x.get(k, i) * y[k]).sum();
    }
    for col in 0..m {
        let p = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..=m {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut b = vec![0.0; m];
    for i in (0..m).rev() {
        b[i] = (a[i][m] - (i + 1..m).map(|k| a[i][k] * b[k]).sum::<f64>()) / a[i][i];
    }
    b
}

fn t_density(x: f64, df: f64) -> f64 {
    let ln_c = pla_core::ols::ln_gamma((df + 1.0) / 2.0)
        - pla_core::ols::ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

fn criterion_7() -> Outcome {
    let rng = SeededRng::new(7);
    let mut worst = 0.0f64;
    for case in 0..200u64 {
        let mut r = rng.stream(&[case]);
        let m = r.random_range(1..=6);
        let n = r.random_range(m + 2..=50);
        let raw = Matrix::from_fn(n, m + 1, |_, _| r.random_range(-2.0..2.0));
        let data = mean_center(&raw).unwrap();
        let x = data.select(&(0..n).collect::<Vec<_>>(), &(0..m).collect::<Vec<_>>());
        let y = data.column(m);
        let fit = ols_fit(&x, &y).expect("fit");
        let oracle = normal_equations(&x, y.as_slice());
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    // Composite Simpson over [0, 2.228] for the central mass.
    let (t, df, steps) = (2.228, 10.0, 20_000);
    let h = t / steps as f64;
    let mut s = t_density(0.0, df) + t_density(t, df);
    for k in 1..steps {
        s += t_density(k as f64 * h, df) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let numeric = 1.0 - 2.0 * s * h / 3.0;
    let p = student_t_sf(t, df).unwrap();
    let pass = worst <= 1e-10
        && (p - 0.05).abs() <= 1e-3
        && (numeric - 0.05).abs() <= 1e-3
        && (p - numeric).abs() <= 1e-8;
    outcome(
        pass,
        format!(
            "worst |beta - oracle| {worst:.1e} over 200 fits; student_t_sf(2.228, 10) = {p:.6}, \
             Simpson oracle {numeric:.6}"
        ),
    )
}

fn simulate(dir: &std::path::Path, tag: &str, parallel: usize) -> (Vec<u8>, Vec<u8>) {
    let json = dir.join(format!("{tag}.json"));
    let csv = dir.join(format!("{tag}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_pla"))
        .args([
            "simulate", "--seed", "42", "--n", "100", "--n", "400", "--n", "1600",
        ])
        .args(["--reps", "30", "--parallel", &parallel.to_string()])
        .arg("--out")
        .arg(&json)
        .arg("--trials-out")
        .arg(&csv)
        .env_remove("PLA_SEED")
        .status()
        .expect("run pla");
    assert!(status.success(), "simulate exited with {status}");
    (std::fs::read(json).unwrap(), std::fs::read(csv).unwrap())
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let first = simulate(dir.path(), "a", 4);
    let second = simulate(dir.path(), "b", 4);
    let serial = simulate(dir.path(), "c", 1);
    outcome(
        first == second && first == serial,
        format!(
            "repeat run identical: {}, --parallel 1 vs 4 identical: {} ({} + {} bytes)",
            first == second,
            first == serial,
            first.0.len(),
            first.1.len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0f64;
    let mut compared = 0;
    for case in 0..100u64 {
        let params = PopulationParams {
            unit_variance: true,
            signal: 0.6,
            perturb_cov: case % 2 == 0,
            structure: Structure::Random,
            ..PopulationParams::default()
        };
        let spec = make_population(&params, 900 + case).expect("population");
        let mut trial = SeededRng::new(case).trial(0, 0);
        // Unit-diagonal samples: the correlation scale then coincides with
        // the covariance scale.
        let base = sample_moments(&sample_gaussian(&spec, 400, false, &mut trial.base).unwrap())
            .unwrap()
            .to_correlation()
            .unwrap();
        let tilde =
            sample_moments(&sample_gaussian(&spec, 400, true, &mut trial.perturbed).unwrap())
                .unwrap()
                .to_correlation()
                .unwrap();
        let (pop, e) = (spec.population(), spec.perturbation());
        let cov = split_known_population(&pop, &e, &base, &tilde, &spec.d_set).unwrap();
        let corr = split_correlation(&pop, &e, &base, &tilde, &spec.d_set).unwrap();
        let a = check_angle_condition(&cov);
        let b = check_corr_angle_condition(&corr, CorrelationOperands::ProofConsistent);
        for (k, row) in a.lhs.iter().enumerate() {
            for j in 0..row.len() {
                let margin_cov = a.rhs[k][j] - a.lhs[k][j];
                let margin_corr = b.rhs[k][j] - b.lhs[k][j];
                worst = worst.max((margin_cov - margin_corr).abs());
                compared += 1;
            }
        }
    }
    outcome(
        worst <= 1e-9 && compared >= 100,
        format!(
            "worst covariance/correlation angle-margin gap {worst:.1e} over {compared} margins"
        ),
    )
}

/// Id, name, time budget in seconds, check.
type Criterion = (u32, &'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "exact-block recovery", 5, criterion_1),
        (2, "eigen correctness", 10, criterion_2),
        (3, "implication chain", 60, criterion_3),
        (4, "convergence rate", 120, criterion_4),
        (5, "tau-bound coherence", 30, criterion_5),
        (6, "approximation-error rate", 120, criterion_6),
        (7, "OLS oracle equivalence", 10, criterion_7),
        (8, "determinism", 60, criterion_8),
        (9, "correlation/covariance consistency", 10, criterion_9),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let in_time = elapsed <= Duration::from_secs(limit);
        let ok = pass && in_time;
        failed += usize::from(!ok);
        println!(
            "criterion {id} {}: {name}: {detail}; {:.2}s of {limit}s{}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { " (over budget)" }
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
