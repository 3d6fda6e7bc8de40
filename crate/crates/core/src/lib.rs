//! Deterministic simulator for a cell-of-origin indoor tracking system:
//! Bluetooth reader nodes form a relay mesh, gateway nodes bridge it to the
//! Wi-Fi access points, and a server resolves tracked devices to the
//! physical location of whichever reader holds their connection.
//!
//! The crate is organized around five layers:
//!
//! - [`addr`], [`geom`], [`model`]: domain types — device addresses, planar
//!   geometry with disc radio ranges, waypoint mobility, the AP lookup
//!   table, and the asset registry.
//! - [`routing`]: static mesh topology, BFS next hops toward the nearest
//!   gateway, and broadcast dedup state.
//! - [`proto`]: pure state machines for the five node roles; one step
//!   function per role, no I/O, no clock access.
//! - [`engine`]: the discrete-event loop that owns node states, link
//!   latencies, paging completion, and the piconet capacity ground truth.
//!   Runs on an integer-microsecond clock, so traces are byte-stable.
//! - [`scenario`], [`trace`], [`metrics`]: the plain-text scenario format,
//!   the TSV trace format, and aggregate reporting. [`gen`] produces seeded
//!   random scenarios for tests and benchmarks.

pub mod addr;
pub mod engine;
pub mod gen;
pub mod geom;
pub mod metrics;
pub mod model;
pub mod proto;
pub mod routing;
pub mod scenario;
pub mod time;
pub mod trace;

pub use addr::{AddressError, BtAddress};
pub use engine::{
    positioning_error, run, run_with_stats, EventQueue, LatencyConfig, PositionFix, RunStats,
    SchedulingInPast,
};
pub use geom::{distance, in_range, MobilityPath, Position, Waypoint};
pub use metrics::{compute_metrics, MetricsReport};
pub use model::{
    AssetInfo, AssetRegistry, LookupTable, MobileSpec, NodeId, NodeKind, Placement, RangeModel,
    UnknownAccessPoint, UnknownAsset,
};
pub use proto::{
    MessageKind, MobInfo, ModifiedMobInfo, OriginatorId, ReplyRoute, PICONET_MAX_SLAVES,
};
pub use routing::{
    build_adjacency, compute_next_hops, record_broadcast, BroadcastSeen, RouteTable, TopologyGraph,
};
pub use scenario::{parse_scenario, ReaderSpec, RequestSpec, Scenario, ScenarioError};
pub use time::SimTime;
pub use trace::{parse_trace, write_trace, Trace, TraceRecord};
