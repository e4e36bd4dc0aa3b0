//! Independent reference implementations used by the acceptance checks.

use std::collections::{BTreeMap, BTreeSet};

use mergeshield_core::shield::AffineConstraint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use mergeshield_core::world::LaneChangePhase;
use mergeshield_core::{Lane, Vehicle, VehicleId, World};

/// Objective of the slack-augmented projection at `v`, with the slack set to
/// the smallest value the soft rows allow; `None` if a hard row fails.
fn penalised(v: &[f64], nominal: &[f64], rows: &[AffineConstraint], k_eps: f64) -> Option<f64> {
    let n = v.len();
    let mut slack: f64 = 0.0;
    for r in rows {
        let lhs: f64 = (0..n).map(|i| r.p[i] * v[i]).sum();
        if r.p[n] == 0.0 {
            if lhs > r.q {
                return None;
            }
        } else {
            slack = slack.max((lhs - r.q) / -r.p[n]);
        }
    }
    let d: f64 = v.iter().zip(nominal).map(|(a, b)| (a - b) * (a - b)).sum();
    Some(0.5 * d + k_eps * slack)
}

/// Smallest objective over the feasible points of a grid with the given
/// spacing, `reach` points either side of `center` along every axis, with
/// the grid anchored at integer multiples of `spacing`. Infinite if no grid
/// point is feasible.
pub fn qp_grid_minimum(
    nominal: &[f64],
    rows: &[AffineConstraint],
    k_eps: f64,
    center: &[f64],
    spacing: f64,
    reach: i64,
) -> f64 {
    let n = nominal.len();
    let base: Vec<i64> = center.iter().map(|c| (c / spacing).round() as i64).collect();
    let side = (2 * reach + 1) as usize;
    let mut v = vec![0.0; n];
    let mut best = f64::INFINITY;
    for flat in 0..side.pow(n as u32) {
        let mut k = flat;
        for (vi, b) in v.iter_mut().zip(&base) {
            *vi = (b - reach + (k % side) as i64) as f64 * spacing;
            k /= side;
        }
        if let Some(f) = penalised(&v, nominal, rows, k_eps) {
            best = best.min(f);
        }
    }
    best
}

/// Floating-point solve of `a x = b` with partial pivoting, used only to
/// discard hopeless candidates before the exact solve.
#[allow(clippy::needless_range_loop)]
fn solve_float(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let size = b.len();
    for col in 0..size {
        let pivot = (col..size).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..size {
            let f = a[r][col] / a[col][col];
            for c in col..size {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; size];
    for i in (0..size).rev() {
        let tail: f64 = (i + 1..size).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - tail) / a[i][i];
    }
    Some(x)
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// Solves `a x = b` exactly; `None` if `a` is singular.
#[allow(clippy::needless_range_loop)]
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let size = b.len();
    for col in 0..size {
        let pivot = (col..size).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..size {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            for c in col..size {
                let d = &f * &a[col][c];
                a[r][c] -= d;
            }
            let d = &f * &b[col];
            b[r] -= d;
        }
    }
    Some((0..size).map(|i| &b[i] / &a[i][i]).collect())
}

/// Exact optimal value of the slack-augmented projection
///
/// ```text
///     minimize    1/2 ||v - nominal||^2 + k_eps * eps
///     subject to  p_i . (v, eps) <= q_i,   eps >= 0
/// ```
///
/// in rational arithmetic. The optimum minimises the objective over the affine
/// hull of the face it lies on, so it is enough to minimise over the hull of
/// every set of at most `n + 1` constraints held at equality and keep the best
/// candidate that satisfies all constraints. `None` if nothing is feasible.
///
/// A floating-point pass first skips candidates that are clearly infeasible;
/// a wrong skip can only raise the returned value, never lower it.
#[allow(clippy::needless_range_loop)]
pub fn qp_exact_value(nominal: &[f64], rows: &[AffineConstraint], k_eps: f64) -> Option<f64> {
    let n = nominal.len();
    let dim = n + 1;
    let zero = BigRational::zero();
    let one = BigRational::one();
    let mut cons: Vec<(Vec<BigRational>, BigRational)> =
        rows.iter().map(|r| (r.p.iter().map(|&x| exact(x)).collect(), exact(r.q))).collect();
    let mut slack_row = vec![zero.clone(); dim];
    slack_row[n] = -one.clone();
    cons.push((slack_row, zero.clone()));
    let rows_f64: Vec<(Vec<f64>, f64)> = cons
        .iter()
        .map(|(p, q)| (p.iter().map(|x| x.to_f64().unwrap()).collect(), q.to_f64().unwrap()))
        .collect();
    let nom: Vec<BigRational> = nominal.iter().map(|&x| exact(x)).collect();
    let k = exact(k_eps);
    let half = BigRational::new(1.into(), 2.into());

    let mut best: Option<BigRational> = None;
    let total = cons.len();
    for mask in 0u32..(1 << total) {
        let set: Vec<usize> = (0..total).filter(|i| mask & (1 << i) != 0).collect();
        if set.len() > dim {
            continue;
        }
        // stationarity of the Lagrangian restricted to the hull, plus the equalities
        let size = dim + set.len();
        let mut a = vec![vec![zero.clone(); size]; size];
        let mut b = vec![zero.clone(); size];
        for i in 0..n {
            a[i][i] = one.clone();
            b[i] = nom[i].clone();
        }
        b[n] = -k.clone();
        for (j, &c) in set.iter().enumerate() {
            for i in 0..dim {
                a[i][dim + j] = cons[c].0[i].clone();
                a[dim + j][i] = cons[c].0[i].clone();
            }
            b[dim + j] = cons[c].1.clone();
        }
        let af: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| x.to_f64().unwrap()).collect()).collect();
        let bf: Vec<f64> = b.iter().map(|x| x.to_f64().unwrap()).collect();
        if let Some(zf) = solve_float(af, bf) {
            let violation = rows_f64.iter().map(|(p, q)| {
                p.iter().zip(&zf).map(|(x, y)| x * y).sum::<f64>() - q
            });
            if violation.fold(f64::NEG_INFINITY, f64::max) > 1e-6 {
                continue;
            }
        }
        let Some(z) = solve_exact(a, b) else { continue };
        let feasible = cons.iter().all(|(p, q)| {
            let lhs: BigRational = p.iter().zip(&z).map(|(x, y)| x * y).sum();
            lhs <= *q
        });
        if !feasible {
            continue;
        }
        let dist: BigRational = (0..n).map(|i| (&z[i] - &nom[i]) * (&z[i] - &nom[i])).sum();
        let value = &half * dist + &k * &z[n];
        if best.as_ref().is_none_or(|b| value < *b) {
            best = Some(value);
        }
    }
    best.map(|b| b.to_f64().expect("representable"))
}

fn ahead(a: &Vehicle, b: &Vehicle) -> bool {
    a.state.x > b.state.x || (a.state.x == b.state.x && a.id < b.id)
}

fn nearest_ahead<'a>(w: &'a World, ego: &Vehicle, lane: Lane) -> Option<&'a Vehicle> {
    let mut best: Option<&Vehicle> = None;
    for v in &w.vehicles {
        if v.id == ego.id || v.failed_merge || v.lane != lane {
            continue;
        }
        let d = ((v.state.x - ego.state.x).powi(2) + (v.state.y - ego.state.y).powi(2)).sqrt();
        if d > w.scenario.comm_range || !ahead(v, ego) {
            continue;
        }
        match best {
            Some(b) if !ahead(b, v) => {}
            _ => best = Some(v),
        }
    }
    best
}

/// Straight-line transcription of the parent-set algorithm.
pub fn naive_topology(w: &World) -> BTreeMap<VehicleId, BTreeSet<VehicleId>> {
    let mut g = BTreeMap::new();
    for ego in &w.vehicles {
        if ego.failed_merge {
            continue;
        }
        let ego_changing = ego.lc_phase == LaneChangePhase::Changing;
        let adjacent = if ego_changing { ego.target_lane } else { ego.lane.neighbor() };
        let ol = nearest_ahead(w, ego, ego.lane);
        let oal = nearest_ahead(w, ego, adjacent);
        let mut p = BTreeSet::new();
        if let Some(ol) = ol {
            p.insert(ol.id);
        }
        if let Some(oal) = oal {
            let behind_ol = match ol {
                Some(ol) => ahead(ol, oal),
                None => true,
            };
            if oal.lc_phase == LaneChangePhase::Changing && oal.target_lane == ego.lane && behind_ol {
                p = BTreeSet::new();
                p.insert(oal.id);
            }
            if ego_changing {
                p.insert(oal.id);
            }
        }
        g.insert(ego.id, p);
    }
    g
}
