//! Reader node (fixed Bluetooth access point): captures track requests,
//! relays mesh traffic, pages broadcast targets, and reports connections.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::addr::BtAddress;
use crate::model::NodeId;
use crate::routing::{record_broadcast, BroadcastSeen};
use crate::time::SimTime;

use super::{
    Message, MessageKind, ModifiedMobInfo, NodeEvent, Note, OriginatorId, ReplyRoute, StepOutput,
};

/// One Bluetooth master serves at most seven active slaves.
pub const PICONET_MAX_SLAVES: usize = 7;

/// A page in flight, waiting for the target's accept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingAttempt {
    pub target: BtAddress,
    pub originator: OriginatorId,
    pub round: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReaderState {
    pub id: NodeId,
    pub ap_address: BtAddress,
    pub active_slaves: BTreeSet<BtAddress>,
    pub seen: BroadcastSeen,
    pub next_hop: Option<NodeId>,
    /// Bluetooth mesh neighbors, ascending label order.
    pub neighbors: Vec<NodeId>,
    pub next_request_seq: u64,
    /// Outstanding pages keyed by the paged mobile's node, matched FIFO.
    pub pending_attempts: BTreeMap<NodeId, VecDeque<PendingAttempt>>,
    /// Device addresses of mobiles that issued requests here; replies to
    /// those originators are handed over on this reader's local link.
    pub learned_mobiles: BTreeMap<BtAddress, NodeId>,
}

impl ReaderState {
    pub fn new(id: NodeId, ap_address: BtAddress) -> Self {
        ReaderState {
            id,
            ap_address,
            active_slaves: BTreeSet::new(),
            seen: BroadcastSeen::new(),
            next_hop: None,
            neighbors: Vec::new(),
            next_request_seq: 0,
            pending_attempts: BTreeMap::new(),
            learned_mobiles: BTreeMap::new(),
        }
    }

    fn toward_gateway(&self, kind: MessageKind, originator: &OriginatorId) -> StepOutput {
        match &self.next_hop {
            Some(next) => StepOutput::send(Message {
                src: self.id.clone(),
                dst: next.clone(),
                kind,
            }),
            None => StepOutput::note(Note::NoRouteToGateway {
                originator: originator.clone(),
            }),
        }
    }
}

pub fn reader_step(
    mut state: ReaderState,
    event: NodeEvent,
    now: SimTime,
) -> (ReaderState, StepOutput) {
    let NodeEvent::Deliver {
        msg,
        target_in_range,
    } = event
    else {
        return (state, StepOutput::none());
    };
    let from = msg.src;

    let out = match msg.kind {
        MessageKind::TrackRequest { requester, info } => {
            state.learned_mobiles.insert(requester, from);
            let seq = state.next_request_seq;
            state.next_request_seq += 1;
            let originator = OriginatorId {
                mobile: requester,
                ingress_reader: state.id.clone(),
                request_seq: seq,
            };
            let relayed = MessageKind::RelayedRequest(ModifiedMobInfo {
                base: info,
                originator: originator.clone(),
                hop_path: vec![state.id.clone()],
            });
            state.toward_gateway(relayed, &originator)
        }

        MessageKind::RelayedRequest(mut mmi) => {
            mmi.hop_path.push(state.id.clone());
            let originator = mmi.originator.clone();
            state.toward_gateway(MessageKind::RelayedRequest(mmi), &originator)
        }

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
                if let Some(mobile_node) = target_in_range {
                    // A slave we already hold can be re-paged without a new
                    // slot; anyone else needs free capacity.
                    let has_capacity = state.active_slaves.contains(&target)
                        || state.active_slaves.len() < PICONET_MAX_SLAVES;
                    if has_capacity {
                        state
                            .pending_attempts
                            .entry(mobile_node.clone())
                            .or_default()
                            .push_back(PendingAttempt {
                                target,
                                originator: originator.clone(),
                                round: seq,
                            });
                        out.messages.push(Message {
                            src: state.id.clone(),
                            dst: mobile_node,
                            kind: MessageKind::ConnectAttempt {
                                target,
                                originator,
                                round: seq,
                            },
                        });
                    } else {
                        out.notes.push(Note::PiconetFull { target });
                    }
                }
                out
            }
        }

        MessageKind::ConnectAccept { target } => {
            let attempt = state
                .pending_attempts
                .get_mut(&from)
                .and_then(VecDeque::pop_front);
            if state
                .pending_attempts
                .get(&from)
                .is_some_and(VecDeque::is_empty)
            {
                state.pending_attempts.remove(&from);
            }
            match attempt {
                Some(attempt) => {
                    debug_assert_eq!(attempt.target, target);
                    state.active_slaves.insert(target);
                    let report = MessageKind::ConnectionReport {
                        reader: state.id.clone(),
                        target,
                        at: now,
                        originator: attempt.originator.clone(),
                        round: attempt.round,
                        slaves: state.active_slaves.len(),
                    };
                    state.toward_gateway(report, &attempt.originator)
                }
                None => StepOutput::note(Note::Dropped {
                    why: "accept without pending attempt",
                }),
            }
        }

        MessageKind::ConnectReject { target, .. } => {
            state.active_slaves.remove(&target);
            if let Some(queue) = state.pending_attempts.get_mut(&from) {
                if let Some(pos) = queue.iter().position(|a| a.target == target) {
                    queue.remove(pos);
                }
                if queue.is_empty() {
                    state.pending_attempts.remove(&from);
                }
            }
            StepOutput::none()
        }

        report @ MessageKind::ConnectionReport { .. } => {
            let originator = match &report {
                MessageKind::ConnectionReport { originator, .. } => originator.clone(),
                _ => unreachable!(),
            };
            state.toward_gateway(report, &originator)
        }

        MessageKind::LocationResponse {
            target,
            location_label,
            reader,
            at,
            route,
        } => forward_reply(&mut state, route, |route| MessageKind::LocationResponse {
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
        } => forward_reply(&mut state, route, |route| MessageKind::LocationUpdate {
            target,
            location_label,
            reader,
            at,
            route,
        }),

        MessageKind::TargetNotFound { query, route } => forward_reply(&mut state, route, |route| {
            MessageKind::TargetNotFound { query, route }
        }),

        _ => StepOutput::none(),
    };
    (state, out)
}

/// Pops this reader off the reply route and forwards: to the next mesh hop,
/// or — when the path is exhausted — to the originator's device over the
/// local link.
fn forward_reply(
    state: &mut ReaderState,
    mut route: ReplyRoute,
    rebuild: impl FnOnce(ReplyRoute) -> MessageKind,
) -> StepOutput {
    if route.path.first() != Some(&state.id) {
        return StepOutput::note(Note::Dropped {
            why: "reply route does not pass through this node",
        });
    }
    route.path.remove(0);
    let dst = if let Some(next) = route.path.first() {
        next.clone()
    } else {
        match state.learned_mobiles.get(&route.originator.mobile) {
            Some(mobile) => mobile.clone(),
            None => {
                return StepOutput::note(Note::Dropped {
                    why: "originator unknown at ingress reader",
                })
            }
        }
    };
    StepOutput::send(Message {
        src: state.id.clone(),
        dst,
        kind: rebuild(route),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proto::MobInfo;

    fn addr(last: u8) -> BtAddress {
        BtAddress::from_u64(0xAA00_0000_0000 | u64::from(last)).unwrap()
    }

    fn reader() -> ReaderState {
        let mut r = ReaderState::new("R1".into(), BtAddress::parse("00:0C:25:14:67:1E").unwrap());
        r.next_hop = Some("R2".into());
        r.neighbors = vec!["R2".into()];
        r
    }

    fn originator() -> OriginatorId {
        OriginatorId {
            mobile: addr(1),
            ingress_reader: "R1".into(),
            request_seq: 0,
        }
    }

    fn deliver(state: ReaderState, msg: Message) -> (ReaderState, StepOutput) {
        reader_step(state, NodeEvent::deliver(msg), SimTime::from_secs_f64(1.0))
    }

    #[test]
    fn track_request_becomes_relayed_request() {
        let (state, out) = deliver(
            reader(),
            Message {
                src: "M1".into(),
                dst: "R1".into(),
                kind: MessageKind::TrackRequest {
                    requester: addr(1),
                    info: MobInfo::from_query("Alice"),
                },
            },
        );
        assert_eq!(out.messages.len(), 1);
        assert_eq!(out.messages[0].dst, "R2".into());
        match &out.messages[0].kind {
            MessageKind::RelayedRequest(mmi) => {
                assert_eq!(mmi.hop_path, vec![NodeId::from("R1")]);
                assert_eq!(mmi.originator.ingress_reader, "R1".into());
                assert_eq!(mmi.originator.mobile, addr(1));
                assert_eq!(mmi.originator.request_seq, 0);
            }
            other => panic!("unexpected kind {other:?}"),
        }
        assert_eq!(state.next_request_seq, 1);
        assert_eq!(state.learned_mobiles[&addr(1)], "M1".into());
    }

    #[test]
    fn relayed_request_appends_hop() {
        let mut r = reader();
        r.id = "R2".into();
        r.next_hop = Some("G1".into());
        let (_, out) = deliver(
            r,
            Message {
                src: "R1".into(),
                dst: "R2".into(),
                kind: MessageKind::RelayedRequest(ModifiedMobInfo {
                    base: MobInfo::from_query("Alice"),
                    originator: originator(),
                    hop_path: vec!["R1".into()],
                }),
            },
        );
        match &out.messages[0].kind {
            MessageKind::RelayedRequest(mmi) => {
                assert_eq!(mmi.hop_path, vec![NodeId::from("R1"), NodeId::from("R2")]);
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn no_route_notes_error() {
        let mut r = reader();
        r.next_hop = None;
        let (_, out) = deliver(
            r,
            Message {
                src: "M1".into(),
                dst: "R1".into(),
                kind: MessageKind::TrackRequest {
                    requester: addr(1),
                    info: MobInfo::from_query("Alice"),
                },
            },
        );
        assert!(out.messages.is_empty());
        assert!(matches!(out.notes[0], Note::NoRouteToGateway { .. }));
    }

    fn broadcast(seq: u64) -> Message {
        Message {
            src: "R2".into(),
            dst: "R1".into(),
            kind: MessageKind::LocateBroadcast {
                seq,
                target: addr(1),
                originator: originator(),
            },
        }
    }

    #[test]
    fn duplicate_broadcast_is_silent() {
        let (state, out) = reader_step(
            reader(),
            NodeEvent::Deliver {
                msg: broadcast(7),
                target_in_range: None,
            },
            SimTime::ZERO,
        );
        // First delivery came from the only neighbor, so no re-flood copies.
        assert!(out.messages.is_empty());

        let snapshot = state.clone();
        let (state, out) = reader_step(
            state,
            NodeEvent::Deliver {
                msg: broadcast(7),
                target_in_range: None,
            },
            SimTime::ZERO,
        );
        assert!(out.messages.is_empty());
        assert!(out.notes.is_empty());
        assert_eq!(state, snapshot);
    }

    #[test]
    fn first_broadcast_refloods_and_pages_target() {
        let mut r = reader();
        r.neighbors = vec!["R2".into(), "R3".into()];
        let (state, out) = reader_step(
            r,
            NodeEvent::Deliver {
                msg: broadcast(7),
                target_in_range: Some("M1".into()),
            },
            SimTime::ZERO,
        );
        // Re-flood excludes the sender R2; page goes to the target.
        let dsts: Vec<&str> = out.messages.iter().map(|m| m.dst.as_str()).collect();
        assert_eq!(dsts, vec!["R3", "M1"]);
        assert!(matches!(
            out.messages[1].kind,
            MessageKind::ConnectAttempt { round: 7, .. }
        ));
        assert_eq!(state.pending_attempts[&NodeId::from("M1")].len(), 1);
    }

    #[test]
    fn full_piconet_blocks_new_page() {
        let mut r = reader();
        for i in 10..17 {
            r.active_slaves.insert(addr(i));
        }
        let (state, out) = reader_step(
            r,
            NodeEvent::Deliver {
                msg: broadcast(7),
                target_in_range: Some("M1".into()),
            },
            SimTime::ZERO,
        );
        assert!(out
            .messages
            .iter()
            .all(|m| !matches!(m.kind, MessageKind::ConnectAttempt { .. })));
        assert!(matches!(out.notes[0], Note::PiconetFull { .. }));
        assert_eq!(state.active_slaves.len(), PICONET_MAX_SLAVES);
    }

    #[test]
    fn accept_reports_connection_with_own_id() {
        let mut r = reader();
        r.pending_attempts
            .entry("M1".into())
            .or_default()
            .push_back(PendingAttempt {
                target: addr(1),
                originator: originator(),
                round: 7,
            });
        let (state, out) = deliver(
            r,
            Message {
                src: "M1".into(),
                dst: "R1".into(),
                kind: MessageKind::ConnectAccept { target: addr(1) },
            },
        );
        assert!(state.active_slaves.contains(&addr(1)));
        match &out.messages[0].kind {
            MessageKind::ConnectionReport {
                reader,
                target,
                round,
                slaves,
                ..
            } => {
                assert_eq!(*reader, NodeId::from("R1"));
                assert_eq!(*target, addr(1));
                assert_eq!(*round, 7);
                assert_eq!(*slaves, 1);
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn reject_clears_slave_and_pending() {
        let mut r = reader();
        r.active_slaves.insert(addr(1));
        r.pending_attempts
            .entry("M1".into())
            .or_default()
            .push_back(PendingAttempt {
                target: addr(1),
                originator: originator(),
                round: 9,
            });
        let (state, out) = deliver(
            r,
            Message {
                src: "M1".into(),
                dst: "R1".into(),
                kind: MessageKind::ConnectReject {
                    target: addr(1),
                    reason: super::super::RejectReason::RangeExit,
                },
            },
        );
        assert!(out.messages.is_empty());
        assert!(state.active_slaves.is_empty());
        assert!(state.pending_attempts.is_empty());
    }

    #[test]
    fn reply_route_pops_and_hands_over_to_originator() {
        let mut r = reader();
        r.learned_mobiles.insert(addr(1), "M1".into());
        let route = ReplyRoute {
            path: vec!["R1".into()],
            originator: originator(),
        };
        let (_, out) = deliver(
            r,
            Message {
                src: "R2".into(),
                dst: "R1".into(),
                kind: MessageKind::LocationResponse {
                    target: addr(1),
                    location_label: "Canteen".into(),
                    reader: "R5".into(),
                    at: SimTime::from_secs_f64(2.0),
                    route,
                },
            },
        );
        assert_eq!(out.messages[0].dst, "M1".into());
        match &out.messages[0].kind {
            MessageKind::LocationResponse { route, .. } => assert!(route.path.is_empty()),
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn purity_same_input_same_output() {
        let mut r = reader();
        r.neighbors = vec!["R2".into(), "R3".into()];
        let event = NodeEvent::Deliver {
            msg: broadcast(3),
            target_in_range: Some("M1".into()),
        };
        let now = SimTime::from_secs_f64(4.5);
        let (s1, o1) = reader_step(r.clone(), event.clone(), now);
        let (s2, o2) = reader_step(r, event, now);
        assert_eq!(s1, s2);
        assert_eq!(o1, o2);
    }
}
