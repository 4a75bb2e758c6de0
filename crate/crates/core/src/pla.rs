//! Principal loading analysis.
//!
//! A block of variables `D` is discardable at cut-off `τ` when a set `Δ` of
//! `|D|` eigenvectors carries loadings of at most `τ` (inclusive) on every
//! variable outside `D`. Blocks are found as connected components of the
//! bipartite graph linking eigenpair `δ` and variable `i` whenever
//! `|v_δ^(i)| > τ`; a component with as many eigenpairs as variables, and
//! fewer variables than the whole set, is a candidate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index_set;
use crate::linalg::{
    correlation_from_covariance, eigh, mean_center, sample_covariance, EigenSystem, Matrix,
    SymmetricMatrix,
};
use crate::scalar::Scalar;

/// Matrix PLA is run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Covariance,
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExplainedVariance<T> {
    /// Two-sum formula over all eigenpairs.
    pub exact: T,
    /// `Σ_{δ∈Δ} λ_δ / Σ_i λ_i`.
    pub approx: T,
}

/// A discardable block `D` with its matched eigenpairs `Δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscardCandidate<T> {
    pub discard_set: Vec<usize>,
    pub eigen_set: Vec<usize>,
    /// `max |v_δ^(d^c)|` over `d^c ∉ D`, `δ ∈ Δ`.
    pub max_offblock_loading: T,
    pub explained_variance_exact: T,
    pub explained_variance_approx: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaReport<T> {
    pub basis: Basis,
    pub tau: T,
    pub candidates: Vec<DiscardCandidate<T>>,
    pub eigensystem: EigenSystem<T>,
    /// Columns with zero sample variance (covariance basis only; the
    /// correlation basis rejects them).
    pub zero_variance_columns: Vec<usize>,
}

impl<T: Scalar> PlaReport<T> {
    /// Union of all candidate discard sets, ascending.
    pub fn discarded_variables(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .candidates
            .iter()
            .flat_map(|c| c.discard_set.iter().copied())
            .collect();
        all.sort_unstable();
        all
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so representatives are stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn max_offblock<T: Scalar>(eig: &EigenSystem<T>, d_set: &[usize], delta_set: &[usize]) -> T {
    let outside = index_set::complement(d_set, eig.dim());
    let mut max = T::zero();
    for &dc in &outside {
        for &delta in delta_set {
            max = max.max(eig.loading(dc, delta).abs());
        }
    }
    max
}

/// All minimal discardable blocks at cut-off `tau`, ordered by smallest member
/// of `D`.
///
/// Explained variances are NaN when the spectrum sums to zero.
pub fn find_discardable_blocks<T: Scalar>(
    eigensystem: &EigenSystem<T>,
    tau: T,
) -> Vec<DiscardCandidate<T>> {
    let m = eigensystem.dim();
    // Nodes 0..m are variables, m..2m eigenpairs.
    let mut sets = DisjointSets::new(2 * m);
    for var in 0..m {
        for pair in 0..m {
            if eigensystem.loading(var, pair).abs() > tau {
                sets.union(var, m + pair);
            }
        }
    }
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = vec![(Vec::new(), Vec::new()); 2 * m];
    for node in 0..2 * m {
        let root = sets.find(node);
        if node < m {
            groups[root].0.push(node);
        } else {
            groups[root].1.push(node - m);
        }
    }
    let mut candidates: Vec<DiscardCandidate<T>> = groups
        .into_iter()
        .filter(|(vars, pairs)| !vars.is_empty() && vars.len() == pairs.len() && vars.len() < m)
        .map(|(vars, pairs)| {
            let ev = explained_variance(eigensystem, &vars, &pairs).unwrap_or(ExplainedVariance {
                exact: T::nan(),
                approx: T::nan(),
            });
            DiscardCandidate {
                max_offblock_loading: max_offblock(eigensystem, &vars, &pairs),
                discard_set: vars,
                eigen_set: pairs,
                explained_variance_exact: ev.exact,
                explained_variance_approx: ev.approx,
            }
        })
        .collect();
    candidates.sort_by_key(|c| c.discard_set[0]);
    candidates
}

/// Eigenpairs whose loadings outside `d_set` are all within `tau`.
///
/// Fails with [`Error::BlockMismatch`] unless exactly `|d_set|` pairs qualify.
pub fn match_eigen_to_block<T: Scalar>(
    eigensystem: &EigenSystem<T>,
    d_set: &[usize],
    tau: T,
) -> Result<Vec<usize>> {
    let m = eigensystem.dim();
    let d_set = index_set::proper_subset(d_set, m)?;
    let outside = index_set::complement(&d_set, m);
    let found: Vec<usize> = (0..m)
        .filter(|&pair| {
            outside
                .iter()
                .all(|&dc| eigensystem.loading(dc, pair).abs() <= tau)
        })
        .collect();
    if found.len() != d_set.len() {
        return Err(Error::BlockMismatch {
            expected: d_set.len(),
            found,
        });
    }
    Ok(found)
}

/// Share of total variance attributed to the variables in `d_set`.
pub fn explained_variance<T: Scalar>(
    eigensystem: &EigenSystem<T>,
    d_set: &[usize],
    delta_set: &[usize],
) -> Result<ExplainedVariance<T>> {
    let m = eigensystem.dim();
    let d_set = index_set::normalize(d_set, m)?;
    let delta_set = index_set::normalize(delta_set, m)?;
    let lambda = eigensystem.eigenvalues();
    let total: T = lambda.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::DegenerateInput(
            "total variance is not positive".into(),
        ));
    }
    let mass_on_d = |pair: usize| -> T {
        d_set
            .iter()
            .map(|&d| {
                let v = eigensystem.loading(d, pair);
                v * v
            })
            .sum()
    };
    let matched: T = delta_set.iter().map(|&k| lambda[k] * mass_on_d(k)).sum();
    let unmatched: T = index_set::complement(&delta_set, m)
        .into_iter()
        .map(|k| lambda[k] * mass_on_d(k))
        .sum();
    let approx: T = delta_set.iter().map(|&k| lambda[k]).sum();
    Ok(ExplainedVariance {
        exact: (matched + unmatched) / total,
        approx: approx / total,
    })
}

/// Columns whose centred values are all negligible relative to the raw scale.
fn zero_variance_columns<T: Scalar>(raw: &Matrix<T>, cov: &SymmetricMatrix<T>) -> Vec<usize> {
    (0..raw.cols())
        .filter(|&j| {
            let scale = raw.column(j).max_abs().max(T::one());
            let floor = T::tol(1e-12, 10.0) * scale;
            cov.get(j, j) <= floor * floor
        })
        .collect()
}

/// Centres `data`, estimates the covariance (or correlation) matrix and runs
/// block detection at `tau`.
pub fn run_pla<T: Scalar>(data: &Matrix<T>, basis: Basis, tau: T) -> Result<PlaReport<T>> {
    let (n, m) = (data.rows(), data.cols());
    if m < 2 {
        return Err(Error::DegenerateInput(format!(
            "PLA needs at least 2 variables, got {m}"
        )));
    }
    if n <= m {
        return Err(Error::InsufficientData { rows: n, cols: m });
    }
    if !(tau >= T::zero() && tau < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "cut-off must lie in [0, 1), got {tau}"
        )));
    }
    let centred = mean_center(data)?;
    let cov = sample_covariance(&centred)?;
    let zero_var = zero_variance_columns(data, &cov);

    let (matrix, zero_variance_columns) = match basis {
        Basis::Covariance => (cov, zero_var),
        Basis::Correlation => {
            if let Some(&index) = zero_var.first() {
                return Err(Error::DegenerateVariance {
                    index,
                    variance: cov.get(index, index).to_f64_lossy(),
                });
            }
            (correlation_from_covariance(&cov)?, Vec::new())
        }
    };
    let eigensystem = eigh(&matrix)?;
    if basis == Basis::Correlation {
        let smallest = *eigensystem.eigenvalues().last().expect("m >= 2");
        let floor = T::tol(1e-10, 100.0);
        if smallest <= floor {
            let largest = eigensystem.eigenvalues()[0];
            return Err(Error::Singular {
                condition: (largest / smallest.max(T::min_positive_value())).to_f64_lossy(),
            });
        }
    }
    let candidates = find_discardable_blocks(&eigensystem, tau);
    Ok(PlaReport {
        basis,
        tau,
        candidates,
        eigensystem,
        zero_variance_columns,
    })
}

/// Block detection on a known covariance or correlation matrix.
pub fn run_pla_on_matrix<T: Scalar>(
    matrix: &SymmetricMatrix<T>,
    basis: Basis,
    tau: T,
) -> Result<PlaReport<T>> {
    if matrix.dim() < 2 {
        return Err(Error::DegenerateInput(format!(
            "PLA needs at least 2 variables, got {}",
            matrix.dim()
        )));
    }
    if !(tau >= T::zero() && tau < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "cut-off must lie in [0, 1), got {tau}"
        )));
    }
    let eigensystem = eigh(matrix)?;
    Ok(PlaReport {
        basis,
        tau,
        candidates: find_discardable_blocks(&eigensystem, tau),
        eigensystem,
        zero_variance_columns: Vec::new(),
    })
}
