//! Discrete-event simulation engine.
//!
//! The engine owns every node state, a single event queue, and the radio
//! environment (positions, ranges, piconet membership). Events are processed
//! strictly in (timestamp, sequence) order; every message delivery invokes
//! the destination's step function, and each emitted message is scheduled at
//! the current time plus the latency of the link it crosses.
//!
//! The clock is integer microseconds, so timestamps serialize exactly and a
//! rerun of the same scenario produces a byte-identical trace. The `seed`
//! argument is recorded in the trace but never consulted: given a fixed
//! scenario the engine is fully deterministic.

mod queue;

pub use queue::{EventQueue, SchedulingInPast, SimEvent};

use std::collections::{BTreeMap, BTreeSet};

use crate::addr::BtAddress;
use crate::geom::{distance, in_range, Position};
use crate::model::{NodeId, NodeKind};
use crate::proto::{
    gateway_step, mobile_step, reader_step, server_step, wifi_ap_step, GatewayState, Message,
    MessageKind, MobileState, NodeEvent, OriginatorId, ReaderState, RejectReason, ServerState,
    StepOutput, WifiApState,
};
use crate::routing::{build_adjacency, compute_next_hops};
use crate::scenario::{Scenario, ScenarioError};
use crate::time::SimTime;
use crate::trace::{parse_detail, parse_timestamp, Trace, TraceRecord};

/// Link and protocol timing, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyConfig {
    /// One reader/gateway mesh relay hop.
    pub bt_hop_latency: f64,
    /// Paging a device until the connection completes.
    pub bt_connect_latency: f64,
    /// Gateway to Wi-Fi AP.
    pub wifi_latency: f64,
    /// Wi-Fi AP to server over the wired LAN.
    pub ethernet_latency: f64,
    /// Locate-round refresh period for active tracks.
    pub refresh_interval: f64,
    /// How long the server waits for a connection report.
    pub locate_timeout: f64,
    /// How long an answered request keeps being refreshed.
    pub track_ttl: f64,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        LatencyConfig {
            bt_hop_latency: 0.010,
            bt_connect_latency: 1.0,
            wifi_latency: 0.005,
            ethernet_latency: 0.001,
            refresh_interval: 5.0,
            locate_timeout: 3.0,
            track_ttl: 60.0,
        }
    }
}

impl LatencyConfig {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("bt_hop_latency", self.bt_hop_latency),
            ("bt_connect_latency", self.bt_connect_latency),
            ("wifi_latency", self.wifi_latency),
            ("ethernet_latency", self.ethernet_latency),
            ("refresh_interval", self.refresh_interval),
            ("locate_timeout", self.locate_timeout),
            ("track_ttl", self.track_ttl),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("{name} must be strictly positive"));
            }
        }
        Ok(())
    }
}

/// Latencies on the microsecond grid.
#[derive(Debug, Clone, Copy)]
struct LatencyMicros {
    bt_hop: SimTime,
    bt_connect: SimTime,
    wifi: SimTime,
    ethernet: SimTime,
    refresh: SimTime,
    locate: SimTime,
}

impl From<&LatencyConfig> for LatencyMicros {
    fn from(c: &LatencyConfig) -> Self {
        LatencyMicros {
            bt_hop: SimTime::from_secs_f64(c.bt_hop_latency),
            bt_connect: SimTime::from_secs_f64(c.bt_connect_latency),
            wifi: SimTime::from_secs_f64(c.wifi_latency),
            ethernet: SimTime::from_secs_f64(c.ethernet_latency),
            refresh: SimTime::from_secs_f64(c.refresh_interval),
            locate: SimTime::from_secs_f64(c.locate_timeout),
        }
    }
}

/// Engine-level accounting, used by conservation and flooding checks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    /// `Deliver` events pushed onto the queue.
    pub messages_scheduled: u64,
    /// `Deliver` events processed.
    pub messages_delivered: u64,
    /// `Deliver` events still queued when the run cut off.
    pub messages_queued_at_cutoff: u64,
    /// Per broadcast sequence number: how many mesh nodes processed it for
    /// the first time (i.e. accepted it as fresh).
    pub broadcast_first_counts: BTreeMap<u64, usize>,
}

enum Payload {
    Deliver(Message),
    /// A scheduled tracking request at a mobile.
    TrackTimer {
        mobile: NodeId,
        query: String,
    },
    /// A page reaching its completion moment; the message is the original
    /// `ConnectAttempt`.
    AttemptComplete(Message),
    /// Locate deadline for a request the server may still be holding.
    Deadline {
        originator: OriginatorId,
    },
    /// Periodic check that established connections are still in range.
    RangeSweep,
}

enum RoleState {
    Mobile(MobileState),
    Reader(ReaderState),
    Gateway(GatewayState),
    WifiAp(WifiApState),
    Server(ServerState),
}

/// Runs a scenario until `until` seconds of simulated time.
pub fn run(scenario: &Scenario, until: f64, seed: u64) -> Result<Trace, ScenarioError> {
    run_with_stats(scenario, until, seed).map(|(trace, _)| trace)
}

/// Like [`run`], also returning engine accounting.
pub fn run_with_stats(
    scenario: &Scenario,
    until: f64,
    seed: u64,
) -> Result<(Trace, RunStats), ScenarioError> {
    if !(until.is_finite() && until > 0.0) {
        return Err(ScenarioError::Invalid {
            message: "until must be strictly positive".into(),
        });
    }
    scenario.validate()?;
    let mut engine = Engine::new(scenario, seed);
    engine.run(SimTime::from_secs_f64(until));
    Ok((engine.trace, engine.stats))
}

struct Engine<'a> {
    scenario: &'a Scenario,
    lat: LatencyMicros,
    queue: EventQueue<Payload>,
    nodes: BTreeMap<NodeId, RoleState>,
    addr_to_mobile: BTreeMap<BtAddress, NodeId>,
    /// Ground truth of piconet membership per reader, updated synchronously
    /// at page completion; enforces the seven-slave bound even while accepts
    /// are in flight.
    connections: BTreeMap<NodeId, BTreeSet<BtAddress>>,
    trace: Trace,
    stats: RunStats,
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario, seed: u64) -> Self {
        let placements = scenario.placements();
        let graph = build_adjacency(&placements, &scenario.ranges);
        let gateways: BTreeSet<NodeId> = scenario.gateways.keys().cloned().collect();
        let routes = compute_next_hops(&graph, &gateways);

        let mut nodes = BTreeMap::new();
        let mut addr_to_mobile = BTreeMap::new();

        let wifi_ap_ids: Vec<NodeId> = scenario.wifi_aps.keys().cloned().collect();
        let reader_aps: BTreeMap<NodeId, BtAddress> = scenario
            .readers
            .iter()
            .map(|(id, spec)| (id.clone(), spec.ap_address))
            .collect();

        nodes.insert(
            scenario.server.clone(),
            RoleState::Server(ServerState {
                id: scenario.server.clone(),
                registry: scenario.asset_registry(),
                lookup: scenario.lookup_table(),
                reader_aps,
                wifi_aps: wifi_ap_ids.clone(),
                pending: BTreeMap::new(),
                active_tracks: BTreeMap::new(),
                next_broadcast_seq: 0,
                locate_timeout: SimTime::from_secs_f64(scenario.latencies.locate_timeout),
                track_ttl: SimTime::from_secs_f64(scenario.latencies.track_ttl),
            }),
        );

        for (id, pos) in &scenario.wifi_aps {
            let served: Vec<NodeId> = scenario
                .gateways
                .iter()
                .filter(|(_, gpos)| in_range(scenario.ranges.wifi_range_m, **gpos, *pos))
                .map(|(gid, _)| gid.clone())
                .collect();
            nodes.insert(
                id.clone(),
                RoleState::WifiAp(WifiApState {
                    id: id.clone(),
                    server: scenario.server.clone(),
                    served_gateways: served,
                }),
            );
        }

        for (id, gpos) in &scenario.gateways {
            let serving = scenario
                .wifi_aps
                .iter()
                .filter(|(_, wpos)| in_range(scenario.ranges.wifi_range_m, *gpos, **wpos))
                .min_by(|(ia, pa), (ib, pb)| {
                    distance(*gpos, **pa)
                        .total_cmp(&distance(*gpos, **pb))
                        .then_with(|| ia.cmp(ib))
                })
                .map(|(wid, _)| wid.clone())
                .expect("validated: every gateway has a wifi ap in range");
            let mut state = GatewayState::new(id.clone(), serving);
            state.neighbors = graph.neighbors(id).to_vec();
            nodes.insert(id.clone(), RoleState::Gateway(state));
        }

        for (id, spec) in &scenario.readers {
            let mut state = ReaderState::new(id.clone(), spec.ap_address);
            state.next_hop = routes.next_hop.get(id).cloned();
            state.neighbors = graph.neighbors(id).to_vec();
            nodes.insert(id.clone(), RoleState::Reader(state));
        }

        for (id, spec) in &scenario.mobiles {
            addr_to_mobile.insert(spec.address, id.clone());
            nodes.insert(
                id.clone(),
                RoleState::Mobile(MobileState {
                    id: id.clone(),
                    address: spec.address,
                    path: spec.path.clone(),
                }),
            );
        }

        let mut engine = Engine {
            scenario,
            lat: LatencyMicros::from(&scenario.latencies),
            queue: EventQueue::new(),
            nodes,
            addr_to_mobile,
            connections: BTreeMap::new(),
            trace: Trace::default(),
            stats: RunStats::default(),
        };
        engine.record_load(seed, &routes);
        engine.seed_events();
        engine
    }

    /// Scenario-load records: one summary line, then one `NodeUp` per node.
    fn record_load(&mut self, seed: u64, routes: &crate::routing::RouteTable) {
        let s = self.scenario;
        self.trace.push(TraceRecord {
            at: SimTime::ZERO,
            kind: "ScenarioLoad".into(),
            src: s.server.clone(),
            dst: s.server.clone(),
            detail: format!(
                "nodes={} readers={} gateways={} wifiaps={} mobiles={} requests={} seed={}",
                1 + s.wifi_aps.len() + s.gateways.len() + s.readers.len() + s.mobiles.len(),
                s.readers.len(),
                s.gateways.len(),
                s.wifi_aps.len(),
                s.mobiles.len(),
                s.requests.len(),
                seed,
            ),
        });
        let mut up = |id: &NodeId, detail: String| {
            self.trace.push(TraceRecord {
                at: SimTime::ZERO,
                kind: "NodeUp".into(),
                src: id.clone(),
                dst: id.clone(),
                detail,
            });
        };
        up(&s.server, "kind=server".into());
        for (id, pos) in &s.wifi_aps {
            up(id, format!("kind=wifiap pos={pos}"));
        }
        for (id, pos) in &s.gateways {
            up(id, format!("kind=gateway pos={pos}"));
        }
        for (id, spec) in &s.readers {
            let (next_hop, hops) = match (routes.next_hop.get(id), routes.hop_count.get(id)) {
                (Some(nh), Some(h)) => (nh.as_str().to_string(), h.to_string()),
                _ => ("-".into(), "-".into()),
            };
            up(
                id,
                format!(
                    "kind=reader pos={} ap={} label=\"{}\" next_hop={} hops={}",
                    spec.pos, spec.ap_address, spec.location_label, next_hop, hops
                ),
            );
        }
        for (id, spec) in &s.mobiles {
            up(
                id,
                format!(
                    "kind=mobile addr={} name=\"{}\" pos={}",
                    spec.address,
                    spec.name,
                    spec.path.position_at(0.0)
                ),
            );
        }
    }

    fn seed_events(&mut self) {
        for request in &self.scenario.requests {
            self.queue
                .schedule(
                    SimTime::from_secs_f64(request.at),
                    Payload::TrackTimer {
                        mobile: request.from.clone(),
                        query: request.target.clone(),
                    },
                )
                .expect("request times are non-negative");
        }
        let first_sweep = self.lat.refresh;
        self.queue
            .schedule(first_sweep, Payload::RangeSweep)
            .expect("refresh interval is positive");
    }

    fn run(&mut self, until: SimTime) {
        while let Some(at) = self.queue.peek_time() {
            if at > until {
                break;
            }
            let event = self.queue.pop().expect("peeked event exists");
            self.dispatch(event.payload);
        }
        let queue = std::mem::take(&mut self.queue);
        self.stats.messages_queued_at_cutoff = queue
            .drain()
            .filter(|e| matches!(e.payload, Payload::Deliver(_)))
            .count() as u64;
    }

    fn dispatch(&mut self, payload: Payload) {
        match payload {
            Payload::Deliver(msg) => self.deliver(msg),
            Payload::TrackTimer { mobile, query } => self.fire_track_timer(mobile, query),
            Payload::AttemptComplete(msg) => self.complete_attempt(msg),
            Payload::Deadline { originator } => {
                let server_id = self.scenario.server.clone();
                self.step_node(&server_id, NodeEvent::LocateDeadline { originator });
            }
            Payload::RangeSweep => self.sweep_connections(),
        }
    }

    fn deliver(&mut self, msg: Message) {
        let now = self.queue.now();
        self.stats.messages_delivered += 1;

        // Flood accounting: a broadcast delivery counts as "processed" when
        // the mesh node has not seen its sequence number yet.
        if let MessageKind::LocateBroadcast { seq, .. } = &msg.kind {
            let fresh = match self.nodes.get(&msg.dst) {
                Some(RoleState::Reader(r)) => Some(!r.seen.contains(*seq)),
                Some(RoleState::Gateway(g)) => Some(!g.seen.contains(*seq)),
                _ => None,
            };
            if fresh == Some(true) {
                *self.stats.broadcast_first_counts.entry(*seq).or_insert(0) += 1;
            }
        }

        self.trace.push(TraceRecord {
            at: now,
            kind: msg.kind.name().into(),
            src: msg.src.clone(),
            dst: msg.dst.clone(),
            detail: msg.kind.detail(),
        });

        // The server's locate deadline is armed when the request arrives.
        if let MessageKind::RelayedRequest(mmi) = &msg.kind {
            if msg.dst == self.scenario.server {
                self.queue
                    .schedule(
                        now + self.lat.locate,
                        Payload::Deadline {
                            originator: mmi.originator.clone(),
                        },
                    )
                    .expect("deadline is in the future");
            }
        }

        let target_in_range = self.broadcast_range_hint(&msg, now);
        let dst = msg.dst.clone();
        self.step_node(
            &dst,
            NodeEvent::Deliver {
                msg,
                target_in_range,
            },
        );
    }

    /// For a locate broadcast arriving at a reader: the target's node, if it
    /// is currently within Bluetooth range of that reader.
    fn broadcast_range_hint(&self, msg: &Message, now: SimTime) -> Option<NodeId> {
        let MessageKind::LocateBroadcast { target, .. } = &msg.kind else {
            return None;
        };
        let reader = self.scenario.readers.get(&msg.dst)?;
        let mobile_id = self.addr_to_mobile.get(target)?;
        let mobile_pos = self.mobile_position(mobile_id, now);
        in_range(self.scenario.ranges.bt_range_m, reader.pos, mobile_pos).then(|| mobile_id.clone())
    }

    fn mobile_position(&self, id: &NodeId, at: SimTime) -> Position {
        self.scenario.mobiles[id].path.position_at(at.as_secs_f64())
    }

    fn fire_track_timer(&mut self, mobile: NodeId, query: String) {
        let now = self.queue.now();
        let pos = self.mobile_position(&mobile, now);
        let nearest_reader = self
            .scenario
            .readers
            .iter()
            .filter(|(_, spec)| in_range(self.scenario.ranges.bt_range_m, spec.pos, pos))
            .min_by(|(ia, sa), (ib, sb)| {
                distance(sa.pos, pos)
                    .total_cmp(&distance(sb.pos, pos))
                    .then_with(|| ia.cmp(ib))
            })
            .map(|(id, _)| id.clone());
        self.step_node(
            &mobile,
            NodeEvent::TrackTimer {
                query,
                nearest_reader,
            },
        );
    }

    /// A page completes: re-check range and piconet capacity against the
    /// world as it is *now*, not as it was when the page started.
    fn complete_attempt(&mut self, msg: Message) {
        let now = self.queue.now();
        let MessageKind::ConnectAttempt { target, .. } = &msg.kind else {
            unreachable!("attempt payload always carries a ConnectAttempt");
        };
        let target = *target;
        let reader_id = msg.src.clone();
        let mobile_id = msg.dst.clone();
        let reader_pos = self.scenario.readers[&reader_id].pos;
        let mobile_pos = self.mobile_position(&mobile_id, now);

        let slots = self.connections.entry(reader_id.clone()).or_default();
        let reject = |reason| {
            Payload::Deliver(Message {
                src: mobile_id.clone(),
                dst: reader_id.clone(),
                kind: MessageKind::ConnectReject { target, reason },
            })
        };
        if !in_range(self.scenario.ranges.bt_range_m, reader_pos, mobile_pos) {
            // A connected slave that drifted out mid-page drops too.
            slots.remove(&target);
            let event = reject(RejectReason::OutOfRange);
            self.schedule_payload_now(event);
        } else if slots.contains(&target) || slots.len() < crate::proto::PICONET_MAX_SLAVES {
            slots.insert(target);
            self.stats.messages_scheduled += 1;
            self.queue
                .schedule(now, Payload::Deliver(msg))
                .expect("now is not in the past");
        } else {
            let event = reject(RejectReason::PiconetFull);
            self.schedule_payload_now(event);
        }
    }

    fn schedule_payload_now(&mut self, payload: Payload) {
        if matches!(payload, Payload::Deliver(_)) {
            self.stats.messages_scheduled += 1;
        }
        let now = self.queue.now();
        self.queue
            .schedule(now, payload)
            .expect("now is not in the past");
    }

    /// Drops established connections whose target has left the cell, then
    /// re-arms itself one refresh interval later.
    fn sweep_connections(&mut self) {
        let now = self.queue.now();
        let mut drops: Vec<(NodeId, BtAddress)> = Vec::new();
        for (reader_id, targets) in &self.connections {
            let reader_pos = self.scenario.readers[reader_id].pos;
            for target in targets {
                let mobile_id = &self.addr_to_mobile[target];
                let mobile_pos = self.mobile_position(mobile_id, now);
                if !in_range(self.scenario.ranges.bt_range_m, reader_pos, mobile_pos) {
                    drops.push((reader_id.clone(), *target));
                }
            }
        }
        for (reader_id, target) in drops {
            self.connections
                .get_mut(&reader_id)
                .unwrap()
                .remove(&target);
            let mobile_id = self.addr_to_mobile[&target].clone();
            self.schedule_payload_now(Payload::Deliver(Message {
                src: mobile_id,
                dst: reader_id,
                kind: MessageKind::ConnectReject {
                    target,
                    reason: RejectReason::RangeExit,
                },
            }));
        }
        self.queue
            .schedule(now + self.lat.refresh, Payload::RangeSweep)
            .expect("refresh interval is positive");
    }

    fn step_node(&mut self, id: &NodeId, event: NodeEvent) {
        let now = self.queue.now();
        let Some(state) = self.nodes.remove(id) else {
            debug_assert!(false, "event addressed to unknown node {id}");
            return;
        };
        let (state, output) = match state {
            RoleState::Mobile(s) => {
                let (s, out) = mobile_step(s, event, now);
                (RoleState::Mobile(s), out)
            }
            RoleState::Reader(s) => {
                let (s, out) = reader_step(s, event, now);
                (RoleState::Reader(s), out)
            }
            RoleState::Gateway(s) => {
                let (s, out) = gateway_step(s, event, now);
                (RoleState::Gateway(s), out)
            }
            RoleState::WifiAp(s) => {
                let (s, out) = wifi_ap_step(s, event, now);
                (RoleState::WifiAp(s), out)
            }
            RoleState::Server(s) => {
                let (s, out) = server_step(s, event, now);
                (RoleState::Server(s), out)
            }
        };
        self.nodes.insert(id.clone(), state);
        self.process_output(id, output);
    }

    fn process_output(&mut self, node: &NodeId, output: StepOutput) {
        let now = self.queue.now();
        for note in output.notes {
            self.trace.push(TraceRecord {
                at: now,
                kind: note.name().into(),
                src: node.clone(),
                dst: node.clone(),
                detail: note.detail(),
            });
        }
        for msg in output.messages {
            self.route_message(msg);
        }
    }

    /// Assigns link latency by the kinds of the endpoints and the message.
    fn route_message(&mut self, msg: Message) {
        let now = self.queue.now();
        let src_kind = self.scenario.node_kind(&msg.src);
        let dst_kind = self.scenario.node_kind(&msg.dst);
        let (Some(src_kind), Some(dst_kind)) = (src_kind, dst_kind) else {
            debug_assert!(
                false,
                "message between unknown nodes {} -> {}",
                msg.src, msg.dst
            );
            return;
        };

        // Paging is a radio procedure, not a plain delivery: it completes
        // after the connect latency and is re-validated at that moment.
        if matches!(msg.kind, MessageKind::ConnectAttempt { .. })
            && src_kind == NodeKind::Reader
            && dst_kind == NodeKind::Mobile
        {
            self.queue
                .schedule(now + self.lat.bt_connect, Payload::AttemptComplete(msg))
                .expect("connect latency is positive");
            return;
        }

        let latency = match (src_kind, dst_kind) {
            // The server talking to itself is the refresh timer.
            (NodeKind::Server, NodeKind::Server) => self.lat.refresh,
            // Local link between a mobile and the reader it stands next to:
            // capture and hand-over are immediate.
            (NodeKind::Mobile, NodeKind::Reader) | (NodeKind::Reader, NodeKind::Mobile) => {
                SimTime::ZERO
            }
            (NodeKind::Reader | NodeKind::Gateway, NodeKind::Reader | NodeKind::Gateway) => {
                self.lat.bt_hop
            }
            (NodeKind::Gateway, NodeKind::WifiAp) | (NodeKind::WifiAp, NodeKind::Gateway) => {
                self.lat.wifi
            }
            (NodeKind::WifiAp, NodeKind::Server) | (NodeKind::Server, NodeKind::WifiAp) => {
                self.lat.ethernet
            }
            (src, dst) => {
                debug_assert!(false, "no link between {src:?} and {dst:?}");
                return;
            }
        };
        self.stats.messages_scheduled += 1;
        self.queue
            .schedule(now + latency, Payload::Deliver(msg))
            .expect("latencies are non-negative");
    }
}

/// One answered location, with its positioning error recomputed from the
/// trace: the distance between the reporting reader and the target's true
/// position at the moment the connection completed.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionFix {
    pub record_index: usize,
    /// `LocationResponse` or `LocationUpdate`.
    pub kind: String,
    pub reader: NodeId,
    pub target: BtAddress,
    /// Connection completion time.
    pub at: SimTime,
    pub error_m: f64,
}

/// Recomputes the positioning error of every location answer delivered to a
/// mobile. Works purely from the serialized trace fields plus the scenario,
/// independent of the engine's internal checks.
pub fn positioning_error(trace: &Trace, scenario: &Scenario) -> Vec<PositionFix> {
    let mut fixes = Vec::new();
    for (index, record) in trace.records.iter().enumerate() {
        if record.kind != "LocationResponse" && record.kind != "LocationUpdate" {
            continue;
        }
        if scenario.node_kind(&record.dst) != Some(NodeKind::Mobile) {
            continue; // relay hop, not the final handover
        }
        let fields = parse_detail(&record.detail);
        let (Some(reader), Some(target), Some(at)) =
            (fields.get("reader"), fields.get("target"), fields.get("at"))
        else {
            debug_assert!(false, "malformed location detail: {}", record.detail);
            continue;
        };
        let reader = NodeId::new(reader.clone());
        let Ok(target) = BtAddress::parse(target) else {
            continue;
        };
        let Some(at) = parse_timestamp(at) else {
            continue;
        };
        let Some(reader_spec) = scenario.readers.get(&reader) else {
            continue;
        };
        let Some(mobile) = scenario.mobiles.values().find(|m| m.address == target) else {
            continue;
        };
        let target_pos = mobile.path.position_at(at.as_secs_f64());
        fixes.push(PositionFix {
            record_index: index,
            kind: record.kind.clone(),
            reader,
            target,
            at,
            error_m: distance(reader_spec.pos, target_pos),
        });
    }
    fixes
}
