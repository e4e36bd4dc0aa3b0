use serde::{Deserialize, Serialize};

use super::road::Lane;
use super::vehicle::{ahead_key, Vehicle};
use super::World;

/// The three neighbours the safety layer and the interaction topology reason about.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neighbors<'a> {
    /// Nearest vehicle ahead in the ego's lane (`C_ol`).
    pub leader: Option<&'a Vehicle>,
    /// Nearest vehicle ahead in the relevant adjacent lane (`C_oal`).
    pub adjacent_leader: Option<&'a Vehicle>,
    /// Nearest vehicle behind in the relevant adjacent lane (`C_oar`).
    pub adjacent_rear: Option<&'a Vehicle>,
}

/// The target lane while changing, the other lane otherwise.
pub fn relevant_adjacent_lane(v: &Vehicle) -> Lane {
    if v.is_changing() {
        v.target_lane
    } else {
        v.lane.neighbor()
    }
}

impl World {
    pub(crate) fn in_range(&self, a: &Vehicle, b: &Vehicle) -> bool {
        let dx = a.state.x - b.state.x;
        let dy = a.state.y - b.state.y;
        dx.hypot(dy) <= self.scenario.comm_range
    }

    /// Other on-road vehicles within communication range of `ego`.
    pub fn visible<'a>(&'a self, ego: &'a Vehicle) -> impl Iterator<Item = &'a Vehicle> + 'a {
        self.vehicles
            .iter()
            .filter(move |v| v.id != ego.id && v.on_road() && self.in_range(ego, v))
    }

    fn nearest_ahead<'a>(
        &'a self,
        ego: &'a Vehicle,
        pred: impl Fn(&Vehicle) -> bool,
    ) -> Option<&'a Vehicle> {
        self.visible(ego)
            .filter(|v| v.is_ahead_of(ego) && pred(v))
            .max_by_key(|v| ahead_key(v))
    }

    fn nearest_behind<'a>(
        &'a self,
        ego: &'a Vehicle,
        pred: impl Fn(&Vehicle) -> bool,
    ) -> Option<&'a Vehicle> {
        self.visible(ego)
            .filter(|v| ego.is_ahead_of(v) && pred(v))
            .min_by_key(|v| ahead_key(v))
    }

    pub fn neighbors<'a>(&'a self, ego: &'a Vehicle) -> Neighbors<'a> {
        let adjacent = relevant_adjacent_lane(ego);
        Neighbors {
            leader: self.nearest_ahead(ego, |v| v.lane == ego.lane),
            adjacent_leader: self.nearest_ahead(ego, |v| v.lane == adjacent),
            adjacent_rear: self.nearest_behind(ego, |v| v.lane == adjacent),
        }
    }

    /// Nearest vehicle ahead that is changing into the ego's lane.
    pub fn merging_into<'a>(&'a self, ego: &'a Vehicle) -> Option<&'a Vehicle> {
        self.nearest_ahead(ego, |v| v.is_changing() && v.target_lane == ego.lane)
    }

    /// Ego row in absolute coordinates followed by up to `perception_n`
    /// visible vehicles, nearest first, with positions relative to the ego.
    pub fn observe(&self, ego: &Vehicle) -> Observation {
        let mut others: Vec<(f64, &Vehicle)> = self
            .visible(ego)
            .map(|v| {
                let d = (v.state.x - ego.state.x).hypot(v.state.y - ego.state.y);
                (d, v)
            })
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));

        let s = &ego.state;
        let mut rows = Vec::with_capacity(self.scenario.perception_n + 1);
        rows.push([s.x, s.y, s.v_x, s.v_y, s.psi]);
        for (_, v) in others.iter().take(self.scenario.perception_n) {
            let o = &v.state;
            rows.push([o.x - s.x, o.y - s.y, o.v_x, o.v_y, o.psi]);
        }
        rows.resize(self.scenario.perception_n + 1, [0.0; 5]);
        Observation { rows }
    }
}

/// Fixed-width observation matrix, one `[x, y, v_x, v_y, psi]` row per vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub rows: Vec<[f64; 5]>,
}

impl Observation {
    pub fn flatten(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }
}
