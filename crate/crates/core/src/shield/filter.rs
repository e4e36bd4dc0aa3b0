use super::constraint::{AffineConstraint, ConstraintId};
use super::envelope::{envelope_margin, max_safe_speed, min_leader_speed};
use super::qp::solve_qp;
use super::{gap, Kin, Leader, ShieldConfig, ShieldOutcome};

// keeps the ego coefficient of the headway rows away from zero when the
// vehicle travels almost sideways
const SHARE_FLOOR: f64 = 1e-3;

/// Vehicles an ego must respect, before any assumption about their next speed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservedNeighbors {
    /// Vehicles whose rear the ego must stay behind.
    pub leaders: Vec<Kin>,
    /// Present while the ego is changing lanes: (adjacent leader, adjacent rear).
    pub lateral: Option<(Option<Kin>, Option<Kin>)>,
}

/// Time-headway barrier `h = dx - tau * v_e` toward `leader`, propagated one
/// step with the decay rate `eta`:
///
/// ```text
///     dx + g_o v_o dt - (g_e dt + tau) v_e  >=  (1 - eta) h
/// ```
///
/// where `v_o` is the leader's assumed next speed and `v_e` the ego's
/// decision.
pub fn longitudinal_cbf(ego: &Kin, leader: &Leader, cfg: &ShieldConfig, dt: f64) -> AffineConstraint {
    headway_row(
        ConstraintId::Headway(leader.kin.id),
        ego,
        leader,
        cfg.tau,
        cfg.eta,
        dt,
        false,
    )
}

fn headway_row(
    id: ConstraintId,
    ego: &Kin,
    leader: &Leader,
    tau: f64,
    eta: f64,
    dt: f64,
    soft: bool,
) -> AffineConstraint {
    let dx = gap(ego, &leader.kin);
    let h = dx - tau * ego.speed;
    let a = ego.share.max(SHARE_FLOOR) * dt + tau;
    let q = dx + leader.kin.share * leader.next_speed * dt - (1.0 - eta) * h;
    if soft {
        AffineConstraint::soft(id, &[a], q, h)
    } else {
        AffineConstraint::hard(id, &[a], q, h)
    }
}

/// Upper bound on the ego's next speed from the braking envelope toward `leader`.
pub fn braking_envelope(ego: &Kin, leader: &Leader, cfg: &ShieldConfig, dt: f64) -> AffineConstraint {
    let (bound, margin) = lead_envelope(ego, leader, cfg, dt);
    AffineConstraint::hard(ConstraintId::BrakingEnvelope(leader.kin.id), &[1.0], bound, margin)
}

fn lead_envelope(ego: &Kin, leader: &Leader, cfg: &ShieldConfig, dt: f64) -> (f64, f64) {
    let gap_next = gap(ego, &leader.kin) + (leader.kin.speed_x() - ego.speed_x()) * dt;
    let p = cfg.envelope(ego, dt);
    let bound = max_safe_speed(gap_next, leader.next_speed, leader.kin.share, ego.v_cap, &p)
        .unwrap_or(-1.0);
    let margin = envelope_margin(gap_next, ego.speed, leader.next_speed, leader.kin.share, &p);
    (bound, margin)
}

/// Soft rows protecting a lane change: headway and braking envelope toward
/// the adjacent leader, and toward the adjacent rear vehicle under its
/// worst-case acceleration.
pub fn lateral_cbfs(
    ego: &Kin,
    adjacent_leader: Option<&Leader>,
    adjacent_rear: Option<&Kin>,
    cfg: &ShieldConfig,
    dt: f64,
) -> Vec<AffineConstraint> {
    let mut rows = Vec::with_capacity(4);
    if let Some(lead) = adjacent_leader {
        rows.push(headway_row(
            ConstraintId::LateralLead(lead.kin.id),
            ego,
            lead,
            cfg.tau_lat,
            cfg.eta,
            dt,
            true,
        ));
        let (bound, margin) = lead_envelope(ego, lead, cfg, dt);
        rows.push(AffineConstraint::soft(
            ConstraintId::LateralLeadEnvelope(lead.kin.id),
            &[1.0],
            bound,
            margin,
        ));
    }
    if let Some(rear) = adjacent_rear {
        let v_wc = (rear.speed + cfg.wc_accel * dt).min(rear.v_cap);
        let dx = gap(rear, ego);
        let h = dx - cfg.tau_lat * v_wc;
        // dx + (g_e v_e - g_r v_wc) dt - tau_lat v_wc >= (1 - eta) h
        let q = dx - rear.share * v_wc * dt - cfg.tau_lat * v_wc - (1.0 - cfg.eta) * h;
        rows.push(AffineConstraint::soft(
            ConstraintId::LateralRear(rear.id),
            &[-ego.share.max(SHARE_FLOOR) * dt],
            q,
            h,
        ));

        let gap_next = dx + (ego.speed_x() - rear.speed_x()) * dt;
        let p = cfg.envelope(rear, dt);
        let ego_worst = (ego.speed + ego.a_min * dt).max(0.0);
        let margin = envelope_margin(gap_next, v_wc, ego_worst, ego.share, &p);
        let needed = min_leader_speed(gap_next, v_wc, ego.share, ego.v_cap, &p)
            .unwrap_or(ego.v_cap + 1.0);
        rows.push(AffineConstraint::soft(
            ConstraintId::LateralRearEnvelope(rear.id),
            &[-1.0],
            -needed,
            margin,
        ));
    }
    rows
}

/// A lane change may start only when every lateral barrier is non-negative
/// at the current state.
pub fn allow_lane_change(
    ego: &Kin,
    adjacent_leader: Option<&Leader>,
    adjacent_rear: Option<&Kin>,
    cfg: &ShieldConfig,
    dt: f64,
) -> bool {
    lateral_cbfs(ego, adjacent_leader, adjacent_rear, cfg, dt)
        .iter()
        .all(|c| c.barrier >= 0.0)
}

/// Worst-case filter: every observed vehicle is assumed to take its most
/// adverse admissible control.
pub fn filter_hss(
    ego: &Kin,
    neighbors: &ObservedNeighbors,
    v_nominal: f64,
    cfg: &ShieldConfig,
    dt: f64,
) -> ShieldOutcome {
    let leaders: Vec<Leader> = neighbors
        .leaders
        .iter()
        .map(|k| Leader::worst_case(*k, cfg, dt))
        .collect();
    let lateral = neighbors
        .lateral
        .map(|(lead, rear)| (lead.map(|k| Leader::worst_case(k, cfg, dt)), rear));
    solve_scene(ego, &leaders, lateral, v_nominal, cfg, dt)
}

/// Collaborative filter: parents share their already-filtered speed, every
/// other observed vehicle is treated as in [`filter_hss`].
pub fn filter_mass(
    ego: &Kin,
    parents: &[(Kin, &ShieldOutcome)],
    others: &ObservedNeighbors,
    v_nominal: f64,
    cfg: &ShieldConfig,
    dt: f64,
) -> ShieldOutcome {
    let resolve = |k: Kin| -> Leader {
        match parents.iter().find(|(p, _)| p.id == k.id) {
            Some((p, outcome)) => Leader::known(*p, outcome.v_safe, dt),
            None => Leader::worst_case(k, cfg, dt),
        }
    };
    let mut leaders: Vec<Leader> = parents
        .iter()
        .map(|(k, outcome)| Leader::known(*k, outcome.v_safe, dt))
        .collect();
    leaders.extend(
        others
            .leaders
            .iter()
            .filter(|k| parents.iter().all(|(p, _)| p.id != k.id))
            .map(|k| Leader::worst_case(*k, cfg, dt)),
    );
    let lateral = others.lateral.map(|(lead, rear)| (lead.map(resolve), rear));
    solve_scene(ego, &leaders, lateral, v_nominal, cfg, dt)
}

fn solve_scene(
    ego: &Kin,
    leaders: &[Leader],
    lateral: Option<(Option<Leader>, Option<Kin>)>,
    v_nominal: f64,
    cfg: &ShieldConfig,
    dt: f64,
) -> ShieldOutcome {
    let mut rows = Vec::with_capacity(2 + 2 * leaders.len() + 4);
    rows.push(AffineConstraint::hard(ConstraintId::SpeedFloor, &[-1.0], 0.0, ego.speed));
    rows.push(AffineConstraint::hard(
        ConstraintId::SpeedCap,
        &[1.0],
        ego.v_cap,
        ego.v_cap - ego.speed,
    ));
    for leader in leaders {
        rows.push(longitudinal_cbf(ego, leader, cfg, dt));
        rows.push(braking_envelope(ego, leader, cfg, dt));
    }
    if let Some((lead, rear)) = lateral {
        rows.extend(lateral_cbfs(ego, lead.as_ref(), rear.as_ref(), cfg, dt));
    }

    match solve_qp(&[v_nominal], &rows, cfg.k_eps) {
        Ok(sol) => {
            let v_safe = sol.v[0];
            ShieldOutcome {
                v_nominal,
                v_safe,
                v_cbf: v_safe - v_nominal,
                lane_change_requested: false,
                lane_change_allowed: false,
                slack_used: sol.slack,
                active_constraints: sol.active.iter().map(|&i| rows[i].id).collect(),
                fault: false,
            }
        }
        Err(_) => fault_outcome(ego, v_nominal, dt),
    }
}

/// Full braking while holding the lane.
pub(crate) fn fault_outcome(ego: &Kin, v_nominal: f64, dt: f64) -> ShieldOutcome {
    let v_safe = (ego.speed + ego.a_min * dt).max(0.0);
    ShieldOutcome {
        v_nominal,
        v_safe,
        v_cbf: v_safe - v_nominal,
        lane_change_requested: false,
        lane_change_allowed: false,
        slack_used: 0.0,
        active_constraints: Vec::new(),
        fault: true,
    }
}
