//! Wi-Fi access point: wired to the server, radio-linked to the gateways it
//! covers. Forwards tracking traffic in both directions.

use crate::model::NodeId;
use crate::time::SimTime;

use super::{Message, MessageKind, NodeEvent, Note, StepOutput};

#[derive(Debug, Clone, PartialEq)]
pub struct WifiApState {
    pub id: NodeId,
    pub server: NodeId,
    /// Gateways within Wi-Fi range, ascending label order.
    pub served_gateways: Vec<NodeId>,
}

pub fn wifi_ap_step(
    state: WifiApState,
    event: NodeEvent,
    _now: SimTime,
) -> (WifiApState, StepOutput) {
    let NodeEvent::Deliver { msg, .. } = event else {
        return (state, StepOutput::none());
    };

    let out = match msg.kind {
        // Upstream traffic goes to the server over the wired link.
        kind @ (MessageKind::RelayedRequest(_) | MessageKind::ConnectionReport { .. }) => {
            StepOutput::send(Message {
                src: state.id.clone(),
                dst: state.server.clone(),
                kind,
            })
        }

        // Server broadcasts fan out to every covered gateway.
        MessageKind::LocateBroadcast {
            seq,
            target,
            originator,
        } => {
            let mut out = StepOutput::none();
            for gateway in &state.served_gateways {
                out.messages.push(Message {
                    src: state.id.clone(),
                    dst: gateway.clone(),
                    kind: MessageKind::LocateBroadcast {
                        seq,
                        target,
                        originator: originator.clone(),
                    },
                });
            }
            out
        }

        // Replies go to the gateway at the head of the recorded path; the
        // AP itself is not part of the path.
        kind @ (MessageKind::LocationResponse { .. }
        | MessageKind::LocationUpdate { .. }
        | MessageKind::TargetNotFound { .. }) => {
            let path_head = match &kind {
                MessageKind::LocationResponse { route, .. }
                | MessageKind::LocationUpdate { route, .. }
                | MessageKind::TargetNotFound { route, .. } => route.path.first().cloned(),
                _ => unreachable!(),
            };
            match path_head {
                Some(gateway) => StepOutput::send(Message {
                    src: state.id.clone(),
                    dst: gateway,
                    kind,
                }),
                None => StepOutput::note(Note::Dropped {
                    why: "reply route is empty at the wifi ap",
                }),
            }
        }

        _ => StepOutput::none(),
    };
    (state, out)
}
