use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Lane labels of the merging layout: one through lane plus the on-ramp
/// acceleration lane on its right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lane {
    Highway,
    Ramp,
}

impl Lane {
    /// The other lane of the two-lane layout.
    pub fn neighbor(self) -> Lane {
        match self {
            Lane::Highway => Lane::Ramp,
            Lane::Ramp => Lane::Highway,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoadNetwork {
    pub highway_lanes: u32,
    pub lane_width: f64,
    /// Ramp centreline as (x, y) vertices, running parallel to the highway.
    pub ramp_geometry: Vec<(f64, f64)>,
    pub merge_start: f64,
    pub merge_length: f64,
}

impl Default for RoadNetwork {
    fn default() -> Self {
        Self::new(4.0, 20.0, 200.0, 100.0)
    }
}

impl RoadNetwork {
    pub fn new(lane_width: f64, ramp_start: f64, merge_start: f64, merge_length: f64) -> Self {
        let y = -lane_width;
        Self {
            highway_lanes: 1,
            lane_width,
            ramp_geometry: vec![(ramp_start, y), (merge_start + merge_length, y)],
            merge_start,
            merge_length,
        }
    }

    pub fn merge_end(&self) -> f64 {
        self.merge_start + self.merge_length
    }

    pub fn ramp_start(&self) -> f64 {
        self.ramp_geometry.first().map(|p| p.0).unwrap_or(self.merge_start)
    }

    pub fn centerline(&self, lane: Lane) -> f64 {
        match lane {
            Lane::Highway => 0.0,
            Lane::Ramp => -self.lane_width,
        }
    }

    /// Lane whose centreline is closest to the lateral position `y`.
    pub fn dominant_lane(&self, y: f64) -> Lane {
        if y >= -0.5 * self.lane_width {
            Lane::Highway
        } else {
            Lane::Ramp
        }
    }

    /// Lane a vehicle in `lane` at arc position `x` may change into toward `left`.
    ///
    /// The acceleration lane is entry-only: ramp vehicles may move left onto
    /// the highway inside the merge section, nothing may move right.
    pub fn lane_change_target(&self, lane: Lane, x: f64, left: bool) -> Option<Lane> {
        match (lane, left) {
            (Lane::Ramp, true) if self.in_merge_section(x) => Some(Lane::Highway),
            _ => None,
        }
    }

    pub fn in_merge_section(&self, x: f64) -> bool {
        x >= self.merge_start && x <= self.merge_end()
    }

    /// Distance travelled on the merging lane, clamped to `[0, L]`.
    pub fn merge_progress(&self, x: f64) -> f64 {
        (x - self.merge_start).clamp(0.0, self.merge_length)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.highway_lanes != 1 {
            return Err(ConfigError::invalid(
                "road.highway_lanes",
                "only the single through-lane merge layout is supported",
            ));
        }
        if !(self.lane_width > 0.0) {
            return Err(ConfigError::invalid("road.lane_width", "must be > 0"));
        }
        if !(self.merge_length > 0.0) {
            return Err(ConfigError::invalid("road.merge_length", "must be > 0"));
        }
        if self.ramp_geometry.len() < 2 {
            return Err(ConfigError::invalid(
                "road.ramp_geometry",
                "needs at least two vertices",
            ));
        }
        if self.ramp_geometry.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ConfigError::invalid(
                "road.ramp_geometry",
                "arc position must increase strictly along the ramp",
            ));
        }
        if self.ramp_start() > self.merge_start {
            return Err(ConfigError::invalid(
                "road.ramp_geometry",
                "ramp must begin before the merge section",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_ramp_to_highway_inside_merge_section() {
        let road = RoadNetwork::default();
        assert_eq!(road.merge_end(), 300.0);
        assert_eq!(road.lane_change_target(Lane::Ramp, 250.0, true), Some(Lane::Highway));
        assert_eq!(road.lane_change_target(Lane::Ramp, 150.0, true), None);
        assert_eq!(road.lane_change_target(Lane::Ramp, 250.0, false), None);
        assert_eq!(road.lane_change_target(Lane::Highway, 250.0, false), None);
        assert_eq!(road.lane_change_target(Lane::Highway, 250.0, true), None);
    }

    #[test]
    fn dominant_lane_splits_at_half_width() {
        let road = RoadNetwork::default();
        assert_eq!(road.dominant_lane(0.3), Lane::Highway);
        assert_eq!(road.dominant_lane(-1.9), Lane::Highway);
        assert_eq!(road.dominant_lane(-2.1), Lane::Ramp);
        assert_eq!(road.merge_progress(100.0), 0.0);
        assert_eq!(road.merge_progress(260.0), 60.0);
        assert_eq!(road.merge_progress(400.0), 100.0);
    }

    #[test]
    fn rejects_non_monotone_ramp() {
        let mut road = RoadNetwork {
            ramp_geometry: vec![(50.0, -4.0), (40.0, -4.0)],
            ..RoadNetwork::default()
        };
        assert!(road.validate().is_err());
        road = RoadNetwork::default();
        road.highway_lanes = 2;
        assert!(road.validate().is_err());
    }
}
