//! Braking envelope: checks that a follower can keep its time headway while a
//! leader brakes as hard as it is able to, from the state reached after the
//! current step until both vehicles stop.
//!
//! The check replays the same explicit Euler update the simulator uses, so the
//! guarantee is exact for straight-line motion. It is what keeps the one-step
//! headway barrier recursively feasible under actuator limits.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    pub tau: f64,
    pub dt: f64,
    /// Follower braking magnitude (positive).
    pub follower_brake: f64,
    /// Leader braking magnitude assumed from the next step on (positive).
    pub leader_brake: f64,
    /// Bumper gap kept at standstill.
    pub min_gap: f64,
}

/// Smallest `gap - tau * v_follower - min_gap` along the joint braking
/// trajectory that starts with bumper gap `gap` and speeds
/// `follower_speed` / `leader_speed`. `leader_share` scales the leader speed
/// into road-aligned progress.
pub fn envelope_margin(
    gap: f64,
    follower_speed: f64,
    leader_speed: f64,
    leader_share: f64,
    p: &EnvelopeParams,
) -> f64 {
    let mut gap = gap;
    let mut ve = follower_speed.max(0.0);
    let mut vo = leader_speed.max(0.0);
    let share = leader_share.clamp(0.0, 1.0);
    let fb = p.follower_brake * p.dt;
    let lb = p.leader_brake * p.dt;
    let settles = p.follower_brake >= share * p.leader_brake;
    let mut worst = f64::INFINITY;
    loop {
        worst = worst.min(gap - p.tau * ve - p.min_gap);
        if ve <= 0.0 {
            break;
        }
        // once the follower is no faster than the leader it stays that way
        // (it brakes at least as hard), so the margin can only grow
        if settles && ve <= share * vo {
            break;
        }
        gap += (share * vo - ve) * p.dt;
        ve = (ve - fb).max(0.0);
        vo = (vo - lb).max(0.0);
    }
    worst
}

/// Largest follower speed in `[0, v_hi]` whose envelope margin is
/// non-negative, or `None` if even standing still violates it.
pub fn max_safe_speed(
    gap: f64,
    leader_speed: f64,
    leader_share: f64,
    v_hi: f64,
    p: &EnvelopeParams,
) -> Option<f64> {
    let ok = |v: f64| envelope_margin(gap, v, leader_speed, leader_share, p) >= 0.0;
    if ok(v_hi) {
        return Some(v_hi);
    }
    if !ok(0.0) {
        return None;
    }
    Some(bisect(0.0, v_hi, ok))
}

/// Smallest leader speed in `[0, v_hi]` that keeps the follower's margin
/// non-negative, or `None` if no such speed exists.
pub fn min_leader_speed(
    gap: f64,
    follower_speed: f64,
    leader_share: f64,
    v_hi: f64,
    p: &EnvelopeParams,
) -> Option<f64> {
    let ok = |v: f64| envelope_margin(gap, follower_speed, v, leader_share, p) >= 0.0;
    if ok(0.0) {
        return Some(0.0);
    }
    if !ok(v_hi) {
        return None;
    }
    // invert so the search keeps the feasible side in `lo`
    let hi = bisect(0.0, v_hi, |v| !ok(v));
    Some(next_up(hi, v_hi, ok))
}

/// Bumper gap needed for the margin to be exactly zero.
pub fn required_gap(follower_speed: f64, leader_speed: f64, leader_share: f64, p: &EnvelopeParams) -> f64 {
    -envelope_margin(0.0, follower_speed, leader_speed, leader_share, p)
}

// `ok(lo)` holds and `ok(hi)` fails; returns the last passing point
fn bisect(mut lo: f64, mut hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn next_up(x: f64, cap: f64, ok: impl Fn(f64) -> bool) -> f64 {
    let mut v = x;
    for _ in 0..64 {
        if ok(v) || v >= cap {
            return v.min(cap);
        }
        v = f64::from_bits(v.to_bits() + 1).max(v + 1e-12);
    }
    v.min(cap)
}
