//! Protocol state machines for the five node roles.
//!
//! Each role is a pure step function: it consumes one input event and the
//! current state, and returns the next state plus any output messages and
//! protocol notes. Nothing here performs I/O or reads a clock; the engine
//! owns time, delivery, and the radio environment.

use std::fmt;

use crate::addr::BtAddress;
use crate::model::NodeId;
use crate::time::SimTime;

mod gateway;
mod mobile;
mod reader;
mod server;
mod wifi_ap;

pub use gateway::{gateway_step, GatewayState};
pub use mobile::{mobile_step, MobileState};
pub use reader::{reader_step, PendingAttempt, ReaderState, PICONET_MAX_SLAVES};
pub use server::{server_step, ActiveTrack, PendingLocate, ServerState};
pub use wifi_ap::{wifi_ap_step, WifiApState};

/// Tracking-request payload: the asset to be located.
///
/// Either field alone identifies the target; when both are present the
/// server cross-checks that they denote the same registered asset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobInfo {
    pub bsid: Option<BtAddress>,
    pub name: String,
    /// Opaque supporting text, forwarded verbatim.
    pub another_info: String,
}

impl MobInfo {
    /// Builds the payload a requester derives from a target query: an
    /// address-form query fills `bsid`, anything else is a name.
    pub fn from_query(query: &str) -> Self {
        match BtAddress::parse(query) {
            Ok(addr) => MobInfo {
                bsid: Some(addr),
                name: String::new(),
                another_info: String::new(),
            },
            Err(_) => MobInfo {
                bsid: None,
                name: query.to_string(),
                another_info: String::new(),
            },
        }
    }

    /// The text the server would report for an unresolvable request.
    pub fn query_text(&self) -> String {
        if !self.name.is_empty() {
            self.name.clone()
        } else {
            self.bsid.map(|a| a.to_string()).unwrap_or_default()
        }
    }
}

/// Identifies and locates the node that issued a tracking request: the
/// requesting device, the reader that captured the request, and a per-reader
/// sequence number. Replies are delivered back through the ingress reader.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OriginatorId {
    pub mobile: BtAddress,
    pub ingress_reader: NodeId,
    pub request_seq: u64,
}

impl fmt::Display for OriginatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}@{}#{}",
            self.mobile, self.ingress_reader, self.request_seq
        )
    }
}

/// A tracking request as it travels the relay mesh: the base payload plus
/// originator identity and the accumulated hop path.
///
/// The hop path starts at the ingress reader and grows by one per Bluetooth
/// relay hop; the gateway that bridges to Wi-Fi appends itself last, so the
/// reversed path routes a reply from the Wi-Fi side back to the ingress
/// reader.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifiedMobInfo {
    pub base: MobInfo,
    pub originator: OriginatorId,
    pub hop_path: Vec<NodeId>,
}

/// Source route for a reply, traversed front to back.
///
/// On delivery the head is the node currently holding the message; mesh
/// nodes pop themselves and forward to the new head. An empty path means
/// the ingress reader hands the reply to the originator's device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplyRoute {
    pub path: Vec<NodeId>,
    pub originator: OriginatorId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// Target outside Bluetooth range when the paging attempt completed.
    OutOfRange,
    /// The reader already holds seven active slaves.
    PiconetFull,
    /// An established connection lapsed because the target left the cell.
    RangeExit,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::OutOfRange => "out_of_range",
            RejectReason::PiconetFull => "piconet_full",
            RejectReason::RangeExit => "range_exit",
        }
    }
}

/// Everything that travels a link, plus the server's self-addressed refresh
/// tick.
#[derive(Debug, Clone, PartialEq)]
pub enum MessageKind {
    /// Mobile-to-reader tracking request over the local Bluetooth link.
    TrackRequest { requester: BtAddress, info: MobInfo },
    /// The request relayed hop by hop toward the server.
    RelayedRequest(ModifiedMobInfo),
    /// Server-initiated fan-out asking every reader to page the target.
    LocateBroadcast {
        seq: u64,
        target: BtAddress,
        originator: OriginatorId,
    },
    /// A reader paging the target device; completes after the configured
    /// connect latency.
    ConnectAttempt {
        target: BtAddress,
        originator: OriginatorId,
        round: u64,
    },
    /// The target device accepting a page addressed to it.
    ConnectAccept { target: BtAddress },
    /// A failed or lapsed connection.
    ConnectReject {
        target: BtAddress,
        reason: RejectReason,
    },
    /// The connecting reader announcing itself to the server.
    ConnectionReport {
        reader: NodeId,
        target: BtAddress,
        at: SimTime,
        originator: OriginatorId,
        round: u64,
        /// Reader's active-slave count after this connection; makes the
        /// piconet bound visible in traces.
        slaves: usize,
    },
    /// The resolved location, source-routed back to the originator.
    LocationResponse {
        target: BtAddress,
        location_label: String,
        reader: NodeId,
        at: SimTime,
        route: ReplyRoute,
    },
    /// A later locate round found the target at a different reader.
    LocationUpdate {
        target: BtAddress,
        location_label: String,
        reader: NodeId,
        at: SimTime,
        route: ReplyRoute,
    },
    /// No reader reached the target (or the target is not registered).
    TargetNotFound { query: String, route: ReplyRoute },
    /// Server self-message that re-runs the locate round for an active
    /// track; the engine delivers it one refresh interval later.
    RefreshTick { originator: OriginatorId },
}

/// A message in flight between two scenario nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: MessageKind,
}

fn quote(s: &str) -> String {
    format!("\"{s}\"")
}

fn fmt_path(path: &[NodeId]) -> String {
    if path.is_empty() {
        "-".to_string()
    } else {
        path.iter()
            .map(NodeId::as_str)
            .collect::<Vec<_>>()
            .join(">")
    }
}

fn fmt_opt_addr(a: Option<BtAddress>) -> String {
    a.map(|a| a.to_string()).unwrap_or_else(|| "-".to_string())
}

impl MessageKind {
    /// Kind label used verbatim in trace records.
    pub fn name(&self) -> &'static str {
        match self {
            MessageKind::TrackRequest { .. } => "TrackRequest",
            MessageKind::RelayedRequest(_) => "RelayedRequest",
            MessageKind::LocateBroadcast { .. } => "LocateBroadcast",
            MessageKind::ConnectAttempt { .. } => "ConnectAttempt",
            MessageKind::ConnectAccept { .. } => "ConnectAccept",
            MessageKind::ConnectReject { .. } => "ConnectReject",
            MessageKind::ConnectionReport { .. } => "ConnectionReport",
            MessageKind::LocationResponse { .. } => "LocationResponse",
            MessageKind::LocationUpdate { .. } => "LocationUpdate",
            MessageKind::TargetNotFound { .. } => "TargetNotFound",
            MessageKind::RefreshTick { .. } => "RefreshTick",
        }
    }

    /// Stable `key=value` rendering of the kind-specific fields, used as the
    /// trace detail column.
    pub fn detail(&self) -> String {
        match self {
            MessageKind::TrackRequest { requester, info } => format!(
                "requester={} bsid={} name={} info={}",
                requester,
                fmt_opt_addr(info.bsid),
                quote(&info.name),
                quote(&info.another_info),
            ),
            MessageKind::RelayedRequest(mmi) => format!(
                "origin={} bsid={} name={} info={} path={}",
                mmi.originator,
                fmt_opt_addr(mmi.base.bsid),
                quote(&mmi.base.name),
                quote(&mmi.base.another_info),
                fmt_path(&mmi.hop_path),
            ),
            MessageKind::LocateBroadcast {
                seq,
                target,
                originator,
            } => format!("seq={seq} target={target} origin={originator}"),
            MessageKind::ConnectAttempt {
                target,
                originator,
                round,
            } => format!("target={target} origin={originator} round={round}"),
            MessageKind::ConnectAccept { target } => format!("target={target}"),
            MessageKind::ConnectReject { target, reason } => {
                format!("target={target} reason={}", reason.as_str())
            }
            MessageKind::ConnectionReport {
                reader,
                target,
                at,
                originator,
                round,
                slaves,
            } => format!(
                "reader={reader} target={target} at={at} origin={originator} round={round} slaves={slaves}"
            ),
            MessageKind::LocationResponse {
                target,
                location_label,
                reader,
                at,
                route,
            }
            | MessageKind::LocationUpdate {
                target,
                location_label,
                reader,
                at,
                route,
            } => format!(
                "target={} label={} reader={} at={} origin={} path={}",
                target,
                quote(location_label),
                reader,
                at,
                route.originator,
                fmt_path(&route.path),
            ),
            MessageKind::TargetNotFound { query, route } => format!(
                "query={} origin={} path={}",
                quote(query),
                route.originator,
                fmt_path(&route.path),
            ),
            MessageKind::RefreshTick { originator } => format!("origin={originator}"),
        }
    }
}

/// An input consumed by a step function.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeEvent {
    /// A message arriving over a link. For a `LocateBroadcast` arriving at
    /// a reader, the engine attaches the target's node id when the target
    /// is currently within Bluetooth range of that reader.
    Deliver {
        msg: Message,
        target_in_range: Option<NodeId>,
    },
    /// A mobile's scheduled track request; the engine resolves the nearest
    /// reader currently in Bluetooth range.
    TrackTimer {
        query: String,
        nearest_reader: Option<NodeId>,
    },
    /// The locate deadline for a request the server may still be holding.
    LocateDeadline { originator: OriginatorId },
}

impl NodeEvent {
    pub fn deliver(msg: Message) -> Self {
        NodeEvent::Deliver {
            msg,
            target_in_range: None,
        }
    }
}

/// Protocol-level trace events that are not messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Note {
    /// A track-request timer fired with no reader in Bluetooth range.
    NoReaderInRange { query: String },
    /// A relay step had no route toward a gateway.
    NoRouteToGateway { originator: OriginatorId },
    /// An eighth concurrent connection was not attempted.
    PiconetFull { target: BtAddress },
    /// A request named a (name, bsid) pair that denotes different assets.
    MismatchedIdentity { name: String, bsid: BtAddress },
    /// A connection report named a reader missing from the lookup table.
    UnknownAccessPoint { reader: NodeId },
    /// A message that could not be handled; carries a short reason.
    Dropped { why: &'static str },
}

impl Note {
    pub fn name(&self) -> &'static str {
        match self {
            Note::NoReaderInRange { .. } => "NoReaderInRange",
            Note::NoRouteToGateway { .. } => "NoRouteToGateway",
            Note::PiconetFull { .. } => "PiconetFull",
            Note::MismatchedIdentity { .. } => "MismatchedIdentity",
            Note::UnknownAccessPoint { .. } => "UnknownAccessPoint",
            Note::Dropped { .. } => "Dropped",
        }
    }

    pub fn detail(&self) -> String {
        match self {
            Note::NoReaderInRange { query } => format!("query={}", quote(query)),
            Note::NoRouteToGateway { originator } => format!("origin={originator}"),
            Note::PiconetFull { target } => format!("target={target}"),
            Note::MismatchedIdentity { name, bsid } => {
                format!("name={} bsid={}", quote(name), bsid)
            }
            Note::UnknownAccessPoint { reader } => format!("reader={reader}"),
            Note::Dropped { why } => format!("why={}", quote(why)),
        }
    }
}

/// What one step produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutput {
    pub messages: Vec<Message>,
    pub notes: Vec<Note>,
}

impl StepOutput {
    pub fn none() -> Self {
        StepOutput::default()
    }

    pub fn send(msg: Message) -> Self {
        StepOutput {
            messages: vec![msg],
            notes: Vec::new(),
        }
    }

    pub fn note(note: Note) -> Self {
        StepOutput {
            messages: Vec::new(),
            notes: vec![note],
        }
    }
}
