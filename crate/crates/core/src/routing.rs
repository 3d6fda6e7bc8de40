//! Static topology analysis for the Bluetooth relay mesh.
//!
//! Readers and gateways form an undirected disc graph. Routes toward the
//! nearest gateway are precomputed with a multi-source BFS; locate broadcasts
//! flood the mesh with per-node sequence-number dedup.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::geom::in_range;
use crate::model::{NodeId, Placement, RangeModel};

/// Undirected radio adjacency over the BT infrastructure nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopologyGraph {
    nodes: BTreeSet<NodeId>,
    /// Normalized so that edge.0 < edge.1.
    edges: BTreeSet<(NodeId, NodeId)>,
    adjacency: BTreeMap<NodeId, Vec<NodeId>>,
}

impl TopologyGraph {
    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: &NodeId, b: &NodeId) -> bool {
        if a == b {
            return false;
        }
        let key = if a < b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.edges.contains(&key)
    }

    /// Neighbors in ascending label order.
    pub fn neighbors(&self, n: &NodeId) -> &[NodeId] {
        self.adjacency.get(n).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Builds the BT mesh graph from node placements. Mobiles, Wi-Fi APs, and
/// the server never appear in it.
pub fn build_adjacency(
    placements: &BTreeMap<NodeId, Placement>,
    ranges: &RangeModel,
) -> TopologyGraph {
    let mut graph = TopologyGraph::default();
    let infra: Vec<(&NodeId, &Placement)> = placements
        .iter()
        .filter(|(_, p)| p.kind.is_bt_infrastructure())
        .collect();
    for (id, _) in &infra {
        graph.nodes.insert((*id).clone());
        graph.adjacency.insert((*id).clone(), Vec::new());
    }
    for (i, (a, pa)) in infra.iter().enumerate() {
        for (b, pb) in infra.iter().skip(i + 1) {
            if in_range(ranges.bt_range_m, pa.pos, pb.pos) {
                graph.edges.insert(((*a).clone(), (*b).clone()));
                graph.adjacency.get_mut(*a).unwrap().push((*b).clone());
                graph.adjacency.get_mut(*b).unwrap().push((*a).clone());
            }
        }
    }
    for neighbors in graph.adjacency.values_mut() {
        neighbors.sort();
    }
    graph
}

/// Next hops toward the nearest gateway, plus hop counts.
///
/// Readers with no path to any gateway are absent from `next_hop`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RouteTable {
    pub next_hop: BTreeMap<NodeId, NodeId>,
    pub hop_count: BTreeMap<NodeId, u32>,
}

/// Multi-source BFS from the gateway set.
///
/// Equal-length routes tie-break on the lexicographically smallest neighbor
/// label, which in the one-hop case is also the smallest gateway label.
pub fn compute_next_hops(graph: &TopologyGraph, gateways: &BTreeSet<NodeId>) -> RouteTable {
    debug_assert!(gateways.iter().all(|g| graph.nodes.contains(g)));
    let mut table = RouteTable::default();
    let mut queue = VecDeque::new();
    for g in gateways {
        table.hop_count.insert(g.clone(), 0);
        queue.push_back(g.clone());
    }
    // BTreeSet seeding keeps expansion order deterministic.
    while let Some(node) = queue.pop_front() {
        let dist = table.hop_count[&node];
        for neighbor in graph.neighbors(&node) {
            if !table.hop_count.contains_key(neighbor) {
                table.hop_count.insert(neighbor.clone(), dist + 1);
                queue.push_back(neighbor.clone());
            }
        }
    }
    let mut next_hop = BTreeMap::new();
    for (node, dist) in &table.hop_count {
        if *dist == 0 {
            continue;
        }
        let parent = graph
            .neighbors(node)
            .iter()
            .find(|n| table.hop_count.get(*n) == Some(&(dist - 1)));
        if let Some(parent) = parent {
            next_hop.insert(node.clone(), parent.clone());
        }
    }
    table.next_hop = next_hop;
    table
}

/// Per-node record of already-processed broadcast sequence numbers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BroadcastSeen {
    seen: BTreeSet<u64>,
}

impl BroadcastSeen {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, seq: u64) -> bool {
        self.seen.contains(&seq)
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

/// Marks `seq` as seen; `first_time` is true iff it was not already.
pub fn record_broadcast(mut state: BroadcastSeen, seq: u64) -> (BroadcastSeen, bool) {
    let first_time = state.seen.insert(seq);
    (state, first_time)
}
