//! Exact solver for the small slack-augmented projection QP
//!
//! ```text
//!     minimize    1/2 ||v - v_nom||^2 + k_eps * eps
//!     subject to  p_i . (v, eps) <= q_i      for every row
//!                 eps >= 0
//! ```
//!
//! Problems here have at most three decision variables plus the slack and a
//! handful of rows, so the solver enumerates candidate active sets, solves
//! each equality-constrained KKT system directly and returns the first point
//! that is primal and dual feasible. The problem is convex, so any such point
//! is optimal.

use serde::{Deserialize, Serialize};

use super::constraint::AffineConstraint;
use crate::error::QpError;

const PIVOT_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub v: Vec<f64>,
    pub slack: f64,
    /// Indices of rows active at the solution.
    pub active: Vec<usize>,
    /// One multiplier per input row.
    pub multipliers: Vec<f64>,
    /// Multiplier of `eps >= 0`.
    pub slack_multiplier: f64,
    pub objective: f64,
}

/// Objective value of the slack-augmented projection.
pub fn objective(v: &[f64], nominal: &[f64], slack: f64, k_eps: f64) -> f64 {
    0.5 * v
        .iter()
        .zip(nominal)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        + k_eps * slack
}

pub fn solve_qp(
    nominal: &[f64],
    constraints: &[AffineConstraint],
    k_eps: f64,
) -> Result<QpSolution, QpError> {
    let n = nominal.len();
    for (index, c) in constraints.iter().enumerate() {
        if c.p.len() != n + 1 {
            return Err(QpError::Dimension {
                index,
                got: c.p.len(),
                expected: n + 1,
            });
        }
    }
    let m = constraints.len();

    if constraints.iter().all(|c| c.residual(nominal, 0.0) <= 0.0) {
        return Ok(QpSolution {
            v: nominal.to_vec(),
            slack: 0.0,
            active: Vec::new(),
            multipliers: vec![0.0; m],
            slack_multiplier: k_eps,
            objective: 0.0,
        });
    }

    // rows 0..m are the caller's, row m is eps >= 0 written as -eps <= 0
    let dim = n + 1;
    let mut slack_row = vec![0.0; dim];
    slack_row[n] = -1.0;
    let row = |i: usize| -> (&[f64], f64) {
        if i < m {
            (&constraints[i].p, constraints[i].q)
        } else {
            (slack_row.as_slice(), 0.0)
        }
    };

    let mut subset: Vec<usize> = Vec::with_capacity(dim);
    for size in 0..=dim.min(m + 1) {
        subset.clear();
        subset.extend(0..size);
        loop {
            if let Some(sol) = try_active_set(nominal, k_eps, &subset, &row, m) {
                return Ok(sol);
            }
            if !next_combination(&mut subset, m + 1) {
                break;
            }
        }
    }
    Err(QpError::Infeasible)
}

fn try_active_set<'a>(
    nominal: &[f64],
    k_eps: f64,
    subset: &[usize],
    row: &impl Fn(usize) -> (&'a [f64], f64),
    m: usize,
) -> Option<QpSolution> {
    let n = nominal.len();
    let dim = n + 1;
    let s = subset.len();
    let size = dim + s;

    // [ H  P^T ] [z]   [ c     ]
    // [ P  0   ] [l] = [ q_S   ]   with H = diag(1..1, 0), c = (v_nom, -k_eps)
    let mut a = vec![0.0; size * size];
    let mut rhs = vec![0.0; size];
    for i in 0..n {
        a[i * size + i] = 1.0;
        rhs[i] = nominal[i];
    }
    rhs[n] = -k_eps;
    for (k, &ri) in subset.iter().enumerate() {
        let (p, q) = row(ri);
        for j in 0..dim {
            a[j * size + dim + k] = p[j];
            a[(dim + k) * size + j] = p[j];
        }
        rhs[dim + k] = q;
    }
    let x = solve_dense(&mut a, &mut rhs, size)?;

    let v = &x[..n];
    let slack = x[n];
    let lambdas = &x[dim..];
    let scale = 1.0 + k_eps.abs();
    if lambdas.iter().any(|l| *l < -DUAL_TOL * scale) {
        return None;
    }
    for i in 0..=m {
        let (p, q) = row(i);
        let lhs: f64 = p[..n].iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + p[n] * slack;
        if lhs - q > FEAS_TOL * (1.0 + q.abs()) {
            return None;
        }
    }

    let mut multipliers = vec![0.0; m];
    let mut slack_multiplier = 0.0;
    let mut active = Vec::new();
    for (k, &ri) in subset.iter().enumerate() {
        let l = lambdas[k].max(0.0);
        if ri < m {
            multipliers[ri] = l;
            active.push(ri);
        } else {
            slack_multiplier = l;
        }
    }
    let slack = if slack.abs() < FEAS_TOL { 0.0 } else { slack };
    let v = v.to_vec();
    let objective = objective(&v, nominal, slack, k_eps);
    Some(QpSolution {
        v,
        slack,
        active,
        multipliers,
        slack_multiplier,
        objective,
    })
}

/// Advances `c` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    let norm = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= PIVOT_TOL * norm {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            if f != 0.0 {
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i * n + j] * x[j];
        }
        x[i] = s / a[i * n + i];
    }
    Some(x)
}

/// Worst violation of the KKT conditions at `sol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

pub fn kkt_residual(
    nominal: &[f64],
    constraints: &[AffineConstraint],
    k_eps: f64,
    sol: &QpSolution,
) -> KktResidual {
    let n = nominal.len();
    let mut grad: Vec<f64> = (0..n).map(|i| sol.v[i] - nominal[i]).collect();
    let mut grad_eps = k_eps - sol.slack_multiplier;
    let mut primal = (-sol.slack).max(0.0);
    let mut dual = (-sol.slack_multiplier).max(0.0);
    let mut complementarity = (sol.slack_multiplier * sol.slack).abs();
    for (c, &l) in constraints.iter().zip(&sol.multipliers) {
        for (g, p) in grad.iter_mut().zip(&c.p[..n]) {
            *g += l * p;
        }
        grad_eps += l * c.p[n];
        let r = c.residual(&sol.v, sol.slack);
        primal = primal.max(r);
        dual = dual.max(-l);
        complementarity = complementarity.max((l * r).abs());
    }
    let stationarity = grad.iter().fold(grad_eps.abs(), |m, g| m.max(g.abs()));
    KktResidual {
        stationarity,
        primal,
        dual,
        complementarity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shield::constraint::ConstraintId;

    fn hard(a: &[f64], q: f64) -> AffineConstraint {
        AffineConstraint::hard(ConstraintId::Row(0), a, q, 0.0)
    }

    fn soft(a: &[f64], q: f64) -> AffineConstraint {
        AffineConstraint::soft(ConstraintId::Row(0), a, q, 0.0)
    }

    #[test]
    fn unconstrained_returns_nominal() {
        let s = solve_qp(&[25.0], &[], 1e6).unwrap();
        assert_eq!(s.v, vec![25.0]);
        assert_eq!(s.slack, 0.0);
        assert!(s.active.is_empty());
    }

    #[test]
    fn projects_onto_halfspace() {
        let c = [hard(&[1.0], 20.0)];
        let s = solve_qp(&[25.0], &c, 1e6).unwrap();
        assert!((s.v[0] - 20.0).abs() < 1e-12);
        assert_eq!(s.active, vec![0]);
        assert!((s.multipliers[0] - 5.0).abs() < 1e-9);
        assert!(kkt_residual(&[25.0], &c, 1e6, &s).max() < 1e-8);
    }

    #[test]
    fn slack_absorbs_conflicting_soft_row() {
        // hard v <= 10, soft v >= 12  (=> -v <= -12 + eps)
        let c = [hard(&[1.0], 10.0), soft(&[-1.0], -12.0)];
        let s = solve_qp(&[15.0], &c, 1e6).unwrap();
        assert!((s.v[0] - 10.0).abs() < 1e-9);
        assert!((s.slack - 2.0).abs() < 1e-9);
        assert!(kkt_residual(&[15.0], &c, 1e6, &s).max() < 1e-8);
    }

    #[test]
    fn soft_row_without_conflict_uses_no_slack() {
        let c = [soft(&[1.0], 20.0)];
        let s = solve_qp(&[25.0], &c, 1e6).unwrap();
        assert!((s.v[0] - 20.0).abs() < 1e-9);
        assert_eq!(s.slack, 0.0);
    }

    #[test]
    fn infeasible_hard_rows_are_reported() {
        let c = [hard(&[1.0], 10.0), hard(&[-1.0], -12.0)];
        assert_eq!(solve_qp(&[15.0], &c, 1e6), Err(QpError::Infeasible));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let c = [hard(&[1.0, 1.0], 10.0)];
        assert!(matches!(
            solve_qp(&[15.0], &c, 1e6),
            Err(QpError::Dimension { .. })
        ));
    }

    #[test]
    fn two_dimensional_corner() {
        // v1 <= 1, v2 <= 1 from (3, 3): corner (1, 1)
        let c = [hard(&[1.0, 0.0], 1.0), hard(&[0.0, 1.0], 1.0)];
        let s = solve_qp(&[3.0, 3.0], &c, 1e6).unwrap();
        assert!((s.v[0] - 1.0).abs() < 1e-12 && (s.v[1] - 1.0).abs() < 1e-12);
        assert!(kkt_residual(&[3.0, 3.0], &c, 1e6, &s).max() < 1e-8);
    }

    #[test]
    fn combinations_are_enumerated() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen.last().unwrap(), &vec![2, 3]);
    }
}
