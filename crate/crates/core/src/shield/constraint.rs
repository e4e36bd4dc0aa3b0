use std::fmt;

use serde::{Deserialize, Serialize};

use crate::world::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Hard,
    Soft,
}

/// What a constraint row protects, used for audit trails in episode records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", content = "vehicle", rename_all = "snake_case")]
pub enum ConstraintId {
    SpeedFloor,
    SpeedCap,
    /// Time-headway barrier toward a leading vehicle.
    Headway(VehicleId),
    /// Braking envelope toward a leading vehicle.
    BrakingEnvelope(VehicleId),
    LateralLead(VehicleId),
    LateralRear(VehicleId),
    LateralLeadEnvelope(VehicleId),
    LateralRearEnvelope(VehicleId),
    /// Anonymous row, used by stand-alone QP instances.
    Row(u32),
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintId::SpeedFloor => write!(f, "speed_floor"),
            ConstraintId::SpeedCap => write!(f, "speed_cap"),
            ConstraintId::Headway(v) => write!(f, "headway:{v}"),
            ConstraintId::BrakingEnvelope(v) => write!(f, "envelope:{v}"),
            ConstraintId::LateralLead(v) => write!(f, "lateral_lead:{v}"),
            ConstraintId::LateralRear(v) => write!(f, "lateral_rear:{v}"),
            ConstraintId::LateralLeadEnvelope(v) => write!(f, "lateral_lead_envelope:{v}"),
            ConstraintId::LateralRearEnvelope(v) => write!(f, "lateral_rear_envelope:{v}"),
            ConstraintId::Row(i) => write!(f, "row:{i}"),
        }
    }
}

/// Halfspace `p · z <= q` over the stacked decision vector `z = (v_1..v_n, eps)`.
///
/// The last entry of `p` is the slack coefficient: `-1` for soft rows, `0` for
/// hard rows. `barrier` keeps the value of the underlying barrier function at
/// the current state (`h(s_t)`); it is what lane-change gating inspects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineConstraint {
    pub id: ConstraintId,
    pub p: Vec<f64>,
    pub q: f64,
    pub kind: ConstraintKind,
    pub barrier: f64,
}

impl AffineConstraint {
    /// Builds a row over decision coefficients `a`; the slack column is appended.
    pub fn new(id: ConstraintId, a: &[f64], q: f64, kind: ConstraintKind, barrier: f64) -> Self {
        let mut p = Vec::with_capacity(a.len() + 1);
        p.extend_from_slice(a);
        p.push(match kind {
            ConstraintKind::Hard => 0.0,
            ConstraintKind::Soft => -1.0,
        });
        Self {
            id,
            p,
            q,
            kind,
            barrier,
        }
    }

    pub fn hard(id: ConstraintId, a: &[f64], q: f64, barrier: f64) -> Self {
        Self::new(id, a, q, ConstraintKind::Hard, barrier)
    }

    pub fn soft(id: ConstraintId, a: &[f64], q: f64, barrier: f64) -> Self {
        Self::new(id, a, q, ConstraintKind::Soft, barrier)
    }

    /// Number of decision variables, excluding the slack column.
    pub fn decision_dim(&self) -> usize {
        self.p.len().saturating_sub(1)
    }

    /// `p · z - q`; non-positive when satisfied.
    pub fn residual(&self, v: &[f64], slack: f64) -> f64 {
        let n = self.decision_dim();
        let mut s = 0.0;
        for (pi, vi) in self.p[..n].iter().zip(v) {
            s += pi * vi;
        }
        s + self.p[n] * slack - self.q
    }

    pub fn is_well_formed(&self) -> bool {
        let n = self.decision_dim();
        !self.p.is_empty()
            && self.p.iter().all(|x| x.is_finite())
            && self.q.is_finite()
            && self.p[..n].iter().any(|x| *x != 0.0)
            && match self.kind {
                ConstraintKind::Hard => self.p[n] == 0.0,
                ConstraintKind::Soft => self.p[n] < 0.0,
            }
    }
}
