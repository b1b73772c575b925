//! Sparse SPD linear algebra and the bound-constrained convex QP solver.
//!
//! The direct solver is an envelope (profile) Cholesky factorization,
//! which suits the banded matrices that structured and fixture meshes
//! produce. A Jacobi-preconditioned conjugate gradient route exists for
//! systems whose profile would not fit comfortably in memory.
//!
//! `solve_nonneg_qp` minimizes `1/2 <c, Kc> - <c, f>` subject to
//! `c >= 0` with a primal active-set method: warm start from the clamped
//! unconstrained solution, refactorize per working-set change, and use
//! lowest-index tie-breaking so runs are reproducible.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::{fabs, sqrt};

#[derive(Clone, Debug, PartialEq)]
pub enum SolverError {
    /// Factorization hit a non-positive pivot.
    NotPositiveDefinite { pivot: usize, value: f64 },
    /// Conjugate gradient failed to reach the residual target.
    NoConvergence { iterations: usize, residual: f64 },
    /// Active-set working-set change cap exceeded; indicates numerical
    /// breakdown since the QP is strictly convex.
    IterationCapExceeded { cap: usize },
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotPositiveDefinite { pivot, value } => {
                write!(f, "matrix not positive definite: pivot {pivot} = {value:e}")
            }
            Self::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "iterative solver stalled after {iterations} iterations (residual {residual:e})"
            ),
            Self::IterationCapExceeded { cap } => {
                write!(f, "active-set iteration cap of {cap} exceeded")
            }
            Self::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
        }
    }
}

/// Symmetric sparse matrix, upper triangle (including diagonal) stored
/// row-wise. Explicit zeros are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct SymSparseMatrix {
    n: usize,
    rows: Vec<BTreeMap<usize, f64>>,
}

impl SymSparseMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "dimension must be positive");
        Self {
            n,
            rows: vec![BTreeMap::new(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Accumulate `v` at `(i, j)`; the entry is stored in the upper
    /// triangle regardless of argument order.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        *self.rows[r].entry(c).or_insert(0.0) += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.rows[r].get(&c).copied().unwrap_or(0.0)
    }

    /// Entries of the stored upper triangle, `(row, col, value)` with
    /// `col >= row`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |(&j, &v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for (&j, &v) in row {
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// Symmetric submatrix on the given (strictly increasing) index set.
    pub fn submatrix(&self, keep: &[usize]) -> SymSparseMatrix {
        debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
        let mut pos = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            pos[old] = new;
        }
        let mut sub = SymSparseMatrix::zeros(keep.len().max(1));
        sub.n = keep.len();
        sub.rows.truncate(keep.len().max(1));
        sub.rows.resize(keep.len(), BTreeMap::new());
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (&old_j, &v) in &self.rows[old_i] {
                let new_j = pos[old_j];
                if new_j != usize::MAX {
                    // old_j >= old_i implies new_j >= new_i.
                    sub.rows[new_i].insert(new_j, v);
                }
            }
        }
        sub
    }
}

/// Envelope (profile) Cholesky factorization `K = L L^T`.
pub struct CholeskyFactor {
    first: Vec<usize>,
    // rows[i] holds L[i][first[i]..=i] densely.
    rows: Vec<Vec<f64>>,
}

impl CholeskyFactor {
    pub fn new(k: &SymSparseMatrix) -> Result<Self, SolverError> {
        let n = k.dim();
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in k.upper_entries() {
            if i < first[j] {
                first[j] = i;
            }
        }
        let mut rows: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; i - first[i] + 1]).collect();
        for (i, j, v) in k.upper_entries() {
            rows[j][i - first[j]] = v;
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let lo = fi.max(first[j]);
                let mut sum = rows[i][j - fi];
                for t in lo..j {
                    sum -= rows[i][t - fi] * rows[j][t - first[j]];
                }
                if j < i {
                    rows[i][j - fi] = sum / rows[j][j - first[j]];
                } else {
                    if !(sum > 0.0) {
                        return Err(SolverError::NotPositiveDefinite {
                            pivot: i,
                            value: sum,
                        });
                    }
                    rows[i][j - fi] = sqrt(sum);
                }
            }
        }
        Ok(Self { first, rows })
    }

    pub fn solve(&self, f: &[f64]) -> Vec<f64> {
        let n = self.rows.len();
        assert_eq!(f.len(), n);
        let mut x = f.to_vec();
        // Forward substitution L y = f.
        for i in 0..n {
            let fi = self.first[i];
            let mut sum = x[i];
            for t in fi..i {
                sum -= self.rows[i][t - fi] * x[t];
            }
            x[i] = sum / self.rows[i][i - fi];
        }
        // Backward substitution L^T x = y.
        for i in (0..n).rev() {
            let fi = self.first[i];
            x[i] /= self.rows[i][i - fi];
            let xi = x[i];
            for t in fi..i {
                x[t] -= self.rows[i][t - fi] * xi;
            }
        }
        x
    }

    fn profile_len(k: &SymSparseMatrix) -> usize {
        let n = k.dim();
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in k.upper_entries() {
            if i < first[j] {
                first[j] = i;
            }
        }
        (0..n).map(|i| i - first[i] + 1).sum()
    }
}

fn norm2(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(fabs(x)))
}

/// Profile sizes beyond this fall back to conjugate gradient.
const DIRECT_PROFILE_LIMIT: usize = 40_000_000;

const RESIDUAL_TOL: f64 = 1e-10;

/// Solve `K x = f` for SPD `K` to a relative residual of `1e-10`.
///
/// Direct route: envelope Cholesky with iterative refinement. Systems
/// whose profile would be too large go through preconditioned CG with
/// the same residual target.
pub fn solve_spd(k: &SymSparseMatrix, f: &[f64]) -> Result<Vec<f64>, SolverError> {
    if f.len() != k.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: k.dim(),
            got: f.len(),
        });
    }
    if CholeskyFactor::profile_len(k) > DIRECT_PROFILE_LIMIT {
        return solve_spd_cg(k, f, RESIDUAL_TOL, 20 * k.dim());
    }
    let factor = CholeskyFactor::new(k)?;
    let fnorm = norm2(f);
    let mut x = factor.solve(f);
    if fnorm > 0.0 {
        // Iterative refinement to push the residual to the target.
        for _ in 0..10 {
            let kx = k.mul_vec(&x);
            let r: Vec<f64> = f.iter().zip(&kx).map(|(fi, ki)| fi - ki).collect();
            if norm2(&r) <= RESIDUAL_TOL * fnorm {
                break;
            }
            let dx = factor.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
    }
    Ok(x)
}

/// Jacobi-preconditioned conjugate gradient.
pub fn solve_spd_cg(
    k: &SymSparseMatrix,
    f: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, SolverError> {
    let n = k.dim();
    if f.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let fnorm = norm2(f);
    if fnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut diag = vec![0.0; n];
    for i in 0..n {
        let d = k.get(i, i);
        if !(d > 0.0) {
            return Err(SolverError::NotPositiveDefinite { pivot: i, value: d });
        }
        diag[i] = d;
    }
    let mut x = vec![0.0; n];
    let mut r = f.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 0..max_iter {
        let kp = k.mul_vec(&p);
        let pkp: f64 = p.iter().zip(&kp).map(|(a, b)| a * b).sum();
        if !(pkp > 0.0) {
            return Err(SolverError::NotPositiveDefinite {
                pivot: it,
                value: pkp,
            });
        }
        let alpha = rz / pkp;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        if norm2(&r) <= rel_tol * fnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::NoConvergence {
        iterations: max_iter,
        residual: norm2(&r) / fnorm,
    })
}

/// Result of the non-negative QP solve.
#[derive(Clone, Debug)]
pub struct QpResult {
    /// Minimizer, componentwise non-negative.
    pub c: Vec<f64>,
    /// Indices pinned at the lower bound in the final working set.
    pub active: Vec<usize>,
    /// KKT multipliers on the active set, aligned with `active`.
    pub multipliers: Vec<f64>,
    /// Number of equality-constrained subproblem solves.
    pub iterations: usize,
    /// Max of the free-gradient infinity norm and the worst multiplier
    /// violation.
    pub kkt_residual: f64,
}

/// Minimize `1/2 <c, Kc> - <c, f>` subject to `c >= 0` for SPD `K`.
///
/// Primal active-set method. Starts from the componentwise-clamped
/// unconstrained solution; every working-set change refactorizes the
/// free block. Ties in both the blocking and release steps break to the
/// lowest index.
pub fn solve_nonneg_qp(k: &SymSparseMatrix, f: &[f64]) -> Result<QpResult, SolverError> {
    let n = k.dim();
    if f.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let cap = 10 * n + 10;
    let release_tol = 1e-12 * norm_inf(f).max(1.0);

    let unconstrained = solve_spd(k, f)?;
    let mut working: Vec<bool> = unconstrained.iter().map(|&v| v < 0.0).collect();
    let mut c: Vec<f64> = unconstrained.iter().map(|&v| v.max(0.0)).collect();
    let mut iterations = 0usize;

    #[cfg(debug_assertions)]
    let mut visited: alloc::collections::BTreeSet<Vec<usize>> = alloc::collections::BTreeSet::new();

    for _change in 0..cap {
        iterations += 1;
        let free: Vec<usize> = (0..n).filter(|&i| !working[i]).collect();

        #[cfg(debug_assertions)]
        {
            let key: Vec<usize> = (0..n).filter(|&i| working[i]).collect();
            debug_assert!(visited.insert(key), "active-set working set repeated");
        }

        // Equality-constrained subproblem: pinned variables stay at 0.
        let mut target = vec![0.0; n];
        if !free.is_empty() {
            let sub = k.submatrix(&free);
            let rhs: Vec<f64> = free.iter().map(|&i| f[i]).collect();
            let sol = solve_spd(&sub, &rhs)?;
            for (&i, &v) in free.iter().zip(&sol) {
                target[i] = v;
            }
        }

        // Longest feasible step toward the subproblem solution.
        let mut alpha = 1.0;
        let mut blocking = None;
        for &i in &free {
            let p = target[i] - c[i];
            if p < 0.0 {
                let limit = c[i] / -p;
                if limit < alpha {
                    alpha = limit;
                    blocking = Some(i);
                }
            }
        }

        if let Some(b) = blocking {
            for &i in &free {
                c[i] += alpha * (target[i] - c[i]);
                if c[i] < 0.0 {
                    c[i] = 0.0;
                }
            }
            c[b] = 0.0;
            working[b] = true;
            continue;
        }

        // Full step accepted; check multipliers of the working set.
        c = target;
        let grad: Vec<f64> = {
            let kc = k.mul_vec(&c);
            kc.iter().zip(f).map(|(a, b)| a - b).collect()
        };
        let mut release = None;
        let mut most_negative = -release_tol;
        for i in 0..n {
            if working[i] && grad[i] < most_negative {
                most_negative = grad[i];
                release = Some(i);
            }
        }
        match release {
            Some(i) => {
                working[i] = false;
            }
            None => {
                let active: Vec<usize> = (0..n).filter(|&i| working[i]).collect();
                let multipliers: Vec<f64> = active.iter().map(|&i| grad[i]).collect();
                let free_grad = (0..n)
                    .filter(|&i| !working[i])
                    .fold(0.0f64, |m, i| m.max(fabs(grad[i])));
                let mult_violation = multipliers.iter().fold(0.0f64, |m, &l| m.max(-l));
                return Ok(QpResult {
                    c,
                    active,
                    multipliers,
                    iterations,
                    kkt_residual: free_grad.max(mult_violation),
                });
            }
        }
    }
    Err(SolverError::IterationCapExceeded { cap })
}
