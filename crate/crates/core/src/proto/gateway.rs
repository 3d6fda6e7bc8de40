//! Gateway node: an ordinary member of the Bluetooth mesh that also bridges
//! it to a Wi-Fi access point.

use crate::model::NodeId;
use crate::routing::{record_broadcast, BroadcastSeen};
use crate::time::SimTime;

use super::{Message, MessageKind, NodeEvent, Note, ReplyRoute, StepOutput};

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayState {
    pub id: NodeId,
    pub seen: BroadcastSeen,
    /// Fixed at scenario load: the nearest Wi-Fi AP in range.
    pub serving_wifi_ap: NodeId,
    /// Bluetooth mesh neighbors, ascending label order.
    pub neighbors: Vec<NodeId>,
}

impl GatewayState {
    pub fn new(id: NodeId, serving_wifi_ap: NodeId) -> Self {
        GatewayState {
            id,
            seen: BroadcastSeen::new(),
            serving_wifi_ap,
            neighbors: Vec::new(),
        }
    }
}

pub fn gateway_step(
    mut state: GatewayState,
    event: NodeEvent,
    _now: SimTime,
) -> (GatewayState, StepOutput) {
    let NodeEvent::Deliver { msg, .. } = event else {
        return (state, StepOutput::none());
    };
    let from = msg.src;

    let out = match msg.kind {
        // Upstream: close the Bluetooth leg and hand over to Wi-Fi. The
        // gateway appends itself to the hop path so the reversed path leads
        // replies back into the mesh through this gateway.
        MessageKind::RelayedRequest(mut mmi) => {
            mmi.hop_path.push(state.id.clone());
            StepOutput::send(Message {
                src: state.id.clone(),
                dst: state.serving_wifi_ap.clone(),
                kind: MessageKind::RelayedRequest(mmi),
            })
        }

        report @ MessageKind::ConnectionReport { .. } => StepOutput::send(Message {
            src: state.id.clone(),
            dst: state.serving_wifi_ap.clone(),
            kind: report,
        }),

        // Downstream: inject the locate broadcast into the mesh, once per
        // sequence number no matter how many Wi-Fi APs or mesh neighbors
        // deliver it.
        MessageKind::LocateBroadcast {
            seq,
            target,
            originator,
        } => {
            let (seen, first_time) = record_broadcast(std::mem::take(&mut state.seen), seq);
            state.seen = seen;
            if !first_time {
                StepOutput::none()
            } else {
                let mut out = StepOutput::none();
                for neighbor in &state.neighbors {
                    if *neighbor != from {
                        out.messages.push(Message {
                            src: state.id.clone(),
                            dst: neighbor.clone(),
                            kind: MessageKind::LocateBroadcast {
                                seq,
                                target,
                                originator: originator.clone(),
                            },
                        });
                    }
                }
                out
            }
        }

        MessageKind::LocationResponse {
            target,
            location_label,
            reader,
            at,
            route,
        } => forward_reply(&state, route, |route| MessageKind::LocationResponse {
            target,
            location_label,
            reader,
            at,
            route,
        }),

        MessageKind::LocationUpdate {
            target,
            location_label,
            reader,
            at,
            route,
        } => forward_reply(&state, route, |route| MessageKind::LocationUpdate {
            target,
            location_label,
            reader,
            at,
            route,
        }),

        MessageKind::TargetNotFound { query, route } => forward_reply(&state, route, |route| {
            MessageKind::TargetNotFound { query, route }
        }),

        _ => StepOutput::none(),
    };
    (state, out)
}

/// Pops this gateway off the reply route and forwards to the next mesh hop.
fn forward_reply(
    state: &GatewayState,
    mut route: ReplyRoute,
    rebuild: impl FnOnce(ReplyRoute) -> MessageKind,
) -> StepOutput {
    if route.path.first() != Some(&state.id) {
        return StepOutput::note(Note::Dropped {
            why: "reply route does not pass through this node",
        });
    }
    route.path.remove(0);
    let Some(next) = route.path.first().cloned() else {
        // The ingress point of a request is always a reader, so a reply
        // route can never end at a gateway.
        return StepOutput::note(Note::Dropped {
            why: "reply route ends at a gateway",
        });
    };
    StepOutput::send(Message {
        src: state.id.clone(),
        dst: next,
        kind: rebuild(route),
    })
}
