//! Seeded random scenario and topology generators for tests and benchmarks.
//!
//! The engine itself never consumes randomness; everything random happens
//! here, up front, and the result is an ordinary deterministic scenario.
//! Generated values are snapped to the scenario grammar's precision (three
//! decimals for meters, microseconds for times) so a generated scenario
//! survives render/parse unchanged.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::addr::BtAddress;
use crate::geom::{MobilityPath, Position, Waypoint};
use crate::model::{MobileSpec, NodeId, NodeKind, Placement, RangeModel};
use crate::scenario::{ReaderSpec, RequestSpec, Scenario};

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_readers: usize,
    pub max_gateways: usize,
    pub max_mobiles: usize,
    /// Simulated seconds the mobility paths span.
    pub horizon_s: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_readers: 15,
            max_gateways: 3,
            max_mobiles: 5,
            horizon_s: 120.0,
        }
    }
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn snapped_position(rng: &mut ChaCha8Rng, center: Position, min_r: f64, max_r: f64) -> Position {
    let r = rng.gen_range(min_r..=max_r);
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    Position::new(
        round3(center.x + r * theta.cos()),
        round3(center.y + r * theta.sin()),
    )
}

/// Seconds on the microsecond grid.
fn snapped_seconds(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let lo_us = (lo * 1e6) as u64;
    let hi_us = (hi * 1e6) as u64;
    rng.gen_range(lo_us..=hi_us) as f64 / 1e6
}

/// A valid random scenario: a connected reader mesh hanging off the
/// gateways, mobiles roaming between reader cells, and a request load.
pub fn random_scenario(seed: u64, cfg: &GenConfig) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranges = RangeModel::default();

    let n_wifi = rng.gen_range(1..=2usize);
    let n_gateways = rng.gen_range(1..=cfg.max_gateways.max(1));
    let n_readers = rng.gen_range(2..=cfg.max_readers.max(2));
    let n_mobiles = rng.gen_range(1..=cfg.max_mobiles.max(1));

    let mut wifi_aps = BTreeMap::new();
    for i in 0..n_wifi {
        let pos = Position::new(
            round3(rng.gen_range(0.0..100.0)),
            round3(rng.gen_range(0.0..100.0)),
        );
        wifi_aps.insert(NodeId::new(format!("W{}", i + 1)), pos);
    }
    let wifi_positions: Vec<Position> = wifi_aps.values().copied().collect();

    // Gateways sit well inside some AP's wifi disc.
    let mut gateways = BTreeMap::new();
    for i in 0..n_gateways {
        let anchor = wifi_positions[rng.gen_range(0..wifi_positions.len())];
        let pos = snapped_position(&mut rng, anchor, 1.0, 0.8 * ranges.wifi_range_m);
        gateways.insert(NodeId::new(format!("G{}", i + 1)), pos);
    }

    // Readers grow as a chain of short links off the gateways, so every
    // reader has a mesh path to a gateway.
    let mut anchors: Vec<Position> = gateways.values().copied().collect();
    let mut readers = BTreeMap::new();
    for i in 0..n_readers {
        let anchor = anchors[rng.gen_range(0..anchors.len())];
        let pos = snapped_position(&mut rng, anchor, 2.0, 0.85 * ranges.bt_range_m);
        anchors.push(pos);
        let ap_address = BtAddress::from_u64(0x001A_0000_0000 + i as u64).unwrap();
        readers.insert(
            NodeId::new(format!("R{:02}", i + 1)),
            ReaderSpec {
                ap_address,
                pos,
                location_label: format!("Zone {:02}", i + 1),
            },
        );
    }
    let reader_positions: Vec<Position> = readers.values().map(|r| r.pos).collect();

    let mut mobiles = BTreeMap::new();
    for i in 0..n_mobiles {
        let n_waypoints = rng.gen_range(2..=4usize);
        let mut times = BTreeSet::new();
        while times.len() < n_waypoints {
            times.insert((snapped_seconds(&mut rng, 0.0, cfg.horizon_s) * 1e6) as u64);
        }
        let waypoints = times
            .into_iter()
            .map(|us| {
                let cell = reader_positions[rng.gen_range(0..reader_positions.len())];
                Waypoint {
                    t: us as f64 / 1e6,
                    pos: snapped_position(&mut rng, cell, 0.0, 0.8 * ranges.bt_range_m),
                }
            })
            .collect();
        mobiles.insert(
            NodeId::new(format!("M{}", i + 1)),
            MobileSpec {
                address: BtAddress::from_u64(0xAA00_0000_0000 | (i as u64 + 1)).unwrap(),
                name: format!("P{}", i + 1),
                another_info: format!("asset-{}", i + 1),
                path: MobilityPath::new(waypoints).expect("strictly increasing times"),
            },
        );
    }

    let mobile_ids: Vec<NodeId> = mobiles.keys().cloned().collect();
    let mut requests = Vec::new();
    for from in &mobile_ids {
        for _ in 0..rng.gen_range(1..=2usize) {
            let target_id = &mobile_ids[rng.gen_range(0..mobile_ids.len())];
            let spec = &mobiles[target_id];
            let target = if rng.gen_bool(0.5) {
                spec.name.clone()
            } else {
                spec.address.to_string()
            };
            requests.push(RequestSpec {
                at: snapped_seconds(&mut rng, 0.5, cfg.horizon_s * 0.5),
                from: from.clone(),
                target,
            });
        }
    }

    let scenario = Scenario {
        ranges,
        latencies: Default::default(),
        server: NodeId::new("S1"),
        wifi_aps,
        gateways,
        readers,
        mobiles,
        requests,
    };
    debug_assert!(scenario.validate().is_ok());
    scenario
}

/// A random Bluetooth infrastructure layout for routing tests: up to
/// `max_nodes` readers/gateways scattered over a sparse area, connected or
/// not. Returns placements and the gateway set.
pub fn random_topology(
    seed: u64,
    max_nodes: usize,
) -> (BTreeMap<NodeId, Placement>, BTreeSet<NodeId>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=max_nodes.max(3));
    let n_gateways = rng.gen_range(1..=3.min(n - 1));
    let mut placements = BTreeMap::new();
    let mut gateways = BTreeSet::new();
    for i in 0..n {
        let pos = Position::new(
            round3(rng.gen_range(0.0..60.0)),
            round3(rng.gen_range(0.0..60.0)),
        );
        let (label, kind) = if i < n_gateways {
            (format!("G{:02}", i + 1), NodeKind::Gateway)
        } else {
            (format!("R{:02}", i + 1), NodeKind::Reader)
        };
        let id = NodeId::new(label);
        if kind == NodeKind::Gateway {
            gateways.insert(id.clone());
        }
        placements.insert(id, Placement { kind, pos });
    }
    (placements, gateways)
}
