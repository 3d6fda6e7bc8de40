//! Planar geometry: positions, disc-range checks, and waypoint mobility paths.
//!
//! The radio model is an ideal disc. A node hears another iff the Euclidean
//! distance between them is less than or equal to the radio range; the
//! boundary is inclusive, which makes the positioning-error bound exactly
//! equal to the reader range.

use std::fmt;

use thiserror::Error;

/// A point in the scenario plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3},{:.3})", self.x, self.y)
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Position, b: Position) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Disc-range membership test; the boundary is inclusive.
pub fn in_range(range_m: f64, a: Position, b: Position) -> bool {
    debug_assert!(range_m > 0.0);
    distance(a, b) <= range_m
}

/// A timestamped waypoint on a mobility path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    /// Seconds since scenario start.
    pub t: f64,
    pub pos: Position,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("a mobility path needs at least one waypoint")]
    Empty,
    #[error("waypoint times must be strictly increasing (waypoint {index})")]
    NonIncreasingTimes { index: usize },
    #[error("waypoint {index} has a non-finite time or coordinate")]
    NonFinite { index: usize },
}

/// Piecewise-linear mobility: the node sits at the first waypoint before the
/// path starts, moves linearly between waypoints, and stays at the last
/// waypoint afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityPath {
    waypoints: Vec<Waypoint>,
}

impl MobilityPath {
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self, PathError> {
        if waypoints.is_empty() {
            return Err(PathError::Empty);
        }
        for (i, w) in waypoints.iter().enumerate() {
            if !(w.t.is_finite() && w.pos.x.is_finite() && w.pos.y.is_finite()) {
                return Err(PathError::NonFinite { index: i });
            }
            if i > 0 && w.t <= waypoints[i - 1].t {
                return Err(PathError::NonIncreasingTimes { index: i });
            }
        }
        Ok(MobilityPath { waypoints })
    }

    /// A path that never moves.
    pub fn stationary(pos: Position) -> Self {
        MobilityPath {
            waypoints: vec![Waypoint { t: 0.0, pos }],
        }
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    /// Position at time `t`, clamped to the waypoint span.
    pub fn position_at(&self, t: f64) -> Position {
        let first = self.waypoints[0];
        let last = self.waypoints[self.waypoints.len() - 1];
        if t <= first.t {
            return first.pos;
        }
        if t >= last.t {
            return last.pos;
        }
        // t is strictly inside the span, so a bracketing segment exists.
        let idx = self.waypoints.partition_point(|w| w.t <= t);
        let a = self.waypoints[idx - 1];
        let b = self.waypoints[idx];
        let frac = (t - a.t) / (b.t - a.t);
        Position {
            x: a.pos.x + (b.pos.x - a.pos.x) * frac,
            y: a.pos.y + (b.pos.y - a.pos.y) * frac,
        }
    }
}
