//! The tracked/tracking handset: issues track requests and accepts pages
//! addressed to its own device address.

use crate::addr::BtAddress;
use crate::geom::MobilityPath;
use crate::model::NodeId;
use crate::time::SimTime;

use super::{Message, MessageKind, MobInfo, NodeEvent, Note, StepOutput};

#[derive(Debug, Clone, PartialEq)]
pub struct MobileState {
    pub id: NodeId,
    pub address: BtAddress,
    pub path: MobilityPath,
}

pub fn mobile_step(
    state: MobileState,
    event: NodeEvent,
    _now: SimTime,
) -> (MobileState, StepOutput) {
    let out = match event {
        NodeEvent::TrackTimer {
            query,
            nearest_reader,
        } => match nearest_reader {
            Some(reader) => StepOutput::send(Message {
                src: state.id.clone(),
                dst: reader,
                kind: MessageKind::TrackRequest {
                    requester: state.address,
                    info: MobInfo::from_query(&query),
                },
            }),
            None => StepOutput::note(Note::NoReaderInRange { query }),
        },
        NodeEvent::Deliver { msg, .. } => match msg.kind {
            MessageKind::ConnectAttempt { target, .. } => {
                // Always discoverable: accept pages for our own address,
                // ignore everything else.
                if target == state.address {
                    StepOutput::send(Message {
                        src: state.id.clone(),
                        dst: msg.src,
                        kind: MessageKind::ConnectAccept {
                            target: state.address,
                        },
                    })
                } else {
                    StepOutput::none()
                }
            }
            // Replies terminate here.
            MessageKind::LocationResponse { .. }
            | MessageKind::LocationUpdate { .. }
            | MessageKind::TargetNotFound { .. } => StepOutput::none(),
            _ => StepOutput::none(),
        },
        NodeEvent::LocateDeadline { .. } => StepOutput::none(),
    };
    (state, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Position;

    fn mobile() -> MobileState {
        MobileState {
            id: "M1".into(),
            address: BtAddress::parse("AA:00:00:00:00:01").unwrap(),
            path: MobilityPath::stationary(Position::new(0.0, 0.0)),
        }
    }

    #[test]
    fn timer_with_reader_emits_track_request() {
        let (_, out) = mobile_step(
            mobile(),
            NodeEvent::TrackTimer {
                query: "Alice".into(),
                nearest_reader: Some("R1".into()),
            },
            SimTime::from_secs_f64(1.0),
        );
        assert_eq!(out.messages.len(), 1);
        let msg = &out.messages[0];
        assert_eq!(msg.dst, "R1".into());
        match &msg.kind {
            MessageKind::TrackRequest { requester, info } => {
                assert_eq!(*requester, mobile().address);
                assert_eq!(info.name, "Alice");
                assert_eq!(info.bsid, None);
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn address_query_fills_bsid() {
        let (_, out) = mobile_step(
            mobile(),
            NodeEvent::TrackTimer {
                query: "AA:00:00:00:00:02".into(),
                nearest_reader: Some("R1".into()),
            },
            SimTime::ZERO,
        );
        match &out.messages[0].kind {
            MessageKind::TrackRequest { info, .. } => {
                assert_eq!(
                    info.bsid,
                    Some(BtAddress::parse("AA:00:00:00:00:02").unwrap())
                );
                assert!(info.name.is_empty());
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn timer_without_reader_notes_error() {
        let (_, out) = mobile_step(
            mobile(),
            NodeEvent::TrackTimer {
                query: "Alice".into(),
                nearest_reader: None,
            },
            SimTime::ZERO,
        );
        assert!(out.messages.is_empty());
        assert_eq!(
            out.notes,
            vec![Note::NoReaderInRange {
                query: "Alice".into()
            }]
        );
    }

    #[test]
    fn accepts_page_for_own_address_only() {
        let m = mobile();
        let own_address = m.address;
        let page = move |target: &str| {
            NodeEvent::deliver(Message {
                src: "R1".into(),
                dst: "M1".into(),
                kind: MessageKind::ConnectAttempt {
                    target: BtAddress::parse(target).unwrap(),
                    originator: crate::proto::OriginatorId {
                        mobile: own_address,
                        ingress_reader: "R1".into(),
                        request_seq: 0,
                    },
                    round: 0,
                },
            })
        };

        let (_, out) = mobile_step(m.clone(), page("AA:00:00:00:00:01"), SimTime::ZERO);
        assert!(matches!(
            out.messages[0].kind,
            MessageKind::ConnectAccept { .. }
        ));

        let (_, out) = mobile_step(m, page("AA:00:00:00:00:99"), SimTime::ZERO);
        assert!(out.messages.is_empty());
        assert!(out.notes.is_empty());
    }
}
