//! The tracking server: extracts tracking requests, resolves targets against
//! the asset registry, runs locate rounds, answers originators from the
//! AP-to-location lookup table, and keeps active tracks fresh.

use std::collections::BTreeMap;

use crate::addr::BtAddress;
use crate::model::{AssetRegistry, LookupTable, NodeId};
use crate::time::SimTime;

use super::{Message, MessageKind, NodeEvent, Note, OriginatorId, ReplyRoute, StepOutput};

/// An unanswered locate round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingLocate {
    pub target: BtAddress,
    pub deadline: SimTime,
    /// Broadcast sequence number of this round.
    pub round: u64,
    /// Wi-Fi AP that delivered the request; replies leave through it.
    pub reply_via: NodeId,
    /// Reversed hop path of the request, gateway first.
    pub reply_path: Vec<NodeId>,
}

/// An answered request being kept fresh by periodic locate rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveTrack {
    pub target: BtAddress,
    pub last_reader: NodeId,
    pub started_at: SimTime,
    pub current_round: u64,
    /// Whether the current round has already been answered; at most one
    /// report counts per round.
    pub round_reported: bool,
    pub reply_via: NodeId,
    pub reply_path: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub id: NodeId,
    pub registry: AssetRegistry,
    pub lookup: LookupTable,
    /// Reader node to AP address, for lookup-table resolution of reports.
    pub reader_aps: BTreeMap<NodeId, BtAddress>,
    /// All Wi-Fi APs, broadcast fan-out order.
    pub wifi_aps: Vec<NodeId>,
    pub pending: BTreeMap<OriginatorId, PendingLocate>,
    pub active_tracks: BTreeMap<OriginatorId, ActiveTrack>,
    pub next_broadcast_seq: u64,
    pub locate_timeout: SimTime,
    pub track_ttl: SimTime,
}

enum Resolution {
    Target(BtAddress),
    Unknown(String),
    Mismatched { name: String, bsid: BtAddress },
}

impl ServerState {
    /// Resolves a request payload to a registered target address,
    /// cross-checking name against address when both are present.
    fn resolve(&self, info: &super::MobInfo) -> Resolution {
        match (info.bsid, info.name.as_str()) {
            (Some(bsid), "") => match self.registry.resolve_target(&bsid.to_string()) {
                Ok(addr) => Resolution::Target(addr),
                Err(e) => Resolution::Unknown(e.query),
            },
            (None, name) => match self.registry.resolve_target(name) {
                Ok(addr) => Resolution::Target(addr),
                Err(e) => Resolution::Unknown(e.query),
            },
            (Some(bsid), name) => {
                let by_name = self.registry.resolve_target(name);
                let bsid_known = self.registry.contains(bsid);
                match by_name {
                    Ok(addr) if addr == bsid => Resolution::Target(bsid),
                    Ok(_) => Resolution::Mismatched {
                        name: name.to_string(),
                        bsid,
                    },
                    Err(_) if bsid_known => Resolution::Mismatched {
                        name: name.to_string(),
                        bsid,
                    },
                    Err(_) => Resolution::Unknown(info.query_text()),
                }
            }
        }
    }

    fn broadcast_round(
        &mut self,
        target: BtAddress,
        originator: &OriginatorId,
    ) -> (u64, Vec<Message>) {
        let seq = self.next_broadcast_seq;
        self.next_broadcast_seq += 1;
        let messages = self
            .wifi_aps
            .iter()
            .map(|w| Message {
                src: self.id.clone(),
                dst: w.clone(),
                kind: MessageKind::LocateBroadcast {
                    seq,
                    target,
                    originator: originator.clone(),
                },
            })
            .collect();
        (seq, messages)
    }

    fn location_of(&self, reader: &NodeId) -> Result<String, Note> {
        let ap = self
            .reader_aps
            .get(reader)
            .ok_or(Note::UnknownAccessPoint {
                reader: reader.clone(),
            })?;
        self.lookup
            .lookup_location(*ap)
            .map(str::to_string)
            .map_err(|_| Note::UnknownAccessPoint {
                reader: reader.clone(),
            })
    }

    fn refresh_tick(&self, originator: OriginatorId) -> Message {
        Message {
            src: self.id.clone(),
            dst: self.id.clone(),
            kind: MessageKind::RefreshTick { originator },
        }
    }
}

pub fn server_step(
    mut state: ServerState,
    event: NodeEvent,
    now: SimTime,
) -> (ServerState, StepOutput) {
    let out = match event {
        NodeEvent::Deliver { msg, .. } => {
            let from = msg.src;
            match msg.kind {
                MessageKind::RelayedRequest(mmi) => {
                    let reply_path: Vec<NodeId> = mmi.hop_path.iter().rev().cloned().collect();
                    let originator = mmi.originator;
                    match state.resolve(&mmi.base) {
                        Resolution::Target(target) => {
                            let (round, messages) = state.broadcast_round(target, &originator);
                            state.pending.insert(
                                originator,
                                PendingLocate {
                                    target,
                                    deadline: now + state.locate_timeout,
                                    round,
                                    reply_via: from,
                                    reply_path,
                                },
                            );
                            StepOutput {
                                messages,
                                notes: Vec::new(),
                            }
                        }
                        Resolution::Unknown(query) => StepOutput::send(Message {
                            src: state.id.clone(),
                            dst: from,
                            kind: MessageKind::TargetNotFound {
                                query,
                                route: ReplyRoute {
                                    path: reply_path,
                                    originator,
                                },
                            },
                        }),
                        Resolution::Mismatched { name, bsid } => {
                            StepOutput::note(Note::MismatchedIdentity { name, bsid })
                        }
                    }
                }

                MessageKind::ConnectionReport {
                    reader,
                    target,
                    at,
                    originator,
                    round,
                    ..
                } => {
                    if let Some(pending) = state.pending.get(&originator) {
                        if round != pending.round {
                            StepOutput::none()
                        } else {
                            match state.location_of(&reader) {
                                Err(note) => StepOutput::note(note),
                                Ok(label) => {
                                    let pending = state.pending.remove(&originator).unwrap();
                                    let response = Message {
                                        src: state.id.clone(),
                                        dst: pending.reply_via.clone(),
                                        kind: MessageKind::LocationResponse {
                                            target,
                                            location_label: label,
                                            reader: reader.clone(),
                                            at,
                                            route: ReplyRoute {
                                                path: pending.reply_path.clone(),
                                                originator: originator.clone(),
                                            },
                                        },
                                    };
                                    let tick = state.refresh_tick(originator.clone());
                                    state.active_tracks.insert(
                                        originator,
                                        ActiveTrack {
                                            target: pending.target,
                                            last_reader: reader,
                                            started_at: now,
                                            current_round: round,
                                            round_reported: true,
                                            reply_via: pending.reply_via,
                                            reply_path: pending.reply_path,
                                        },
                                    );
                                    StepOutput {
                                        messages: vec![response, tick],
                                        notes: Vec::new(),
                                    }
                                }
                            }
                        }
                    } else if let Some(track) = state.active_tracks.get(&originator) {
                        if round != track.current_round || track.round_reported {
                            StepOutput::none()
                        } else if reader == track.last_reader {
                            // Same cell: the round is answered silently.
                            let track = state.active_tracks.get_mut(&originator).unwrap();
                            track.round_reported = true;
                            StepOutput::none()
                        } else {
                            match state.location_of(&reader) {
                                Err(note) => StepOutput::note(note),
                                Ok(label) => {
                                    let track = state.active_tracks.get_mut(&originator).unwrap();
                                    track.round_reported = true;
                                    track.last_reader = reader.clone();
                                    StepOutput::send(Message {
                                        src: state.id.clone(),
                                        dst: track.reply_via.clone(),
                                        kind: MessageKind::LocationUpdate {
                                            target,
                                            location_label: label,
                                            reader,
                                            at,
                                            route: ReplyRoute {
                                                path: track.reply_path.clone(),
                                                originator,
                                            },
                                        },
                                    })
                                }
                            }
                        }
                    } else {
                        // Report for a request that timed out or expired.
                        StepOutput::none()
                    }
                }

                MessageKind::RefreshTick { originator } => {
                    match state.active_tracks.get(&originator) {
                        None => StepOutput::none(),
                        Some(track) => {
                            if now.saturating_sub(track.started_at) >= state.track_ttl {
                                state.active_tracks.remove(&originator);
                                StepOutput::none()
                            } else {
                                let target = track.target;
                                let (round, mut messages) =
                                    state.broadcast_round(target, &originator);
                                let track = state.active_tracks.get_mut(&originator).unwrap();
                                track.current_round = round;
                                track.round_reported = false;
                                messages.push(state.refresh_tick(originator));
                                StepOutput {
                                    messages,
                                    notes: Vec::new(),
                                }
                            }
                        }
                    }
                }

                // The packet extractor ignores non-tracking traffic.
                _ => StepOutput::none(),
            }
        }

        NodeEvent::LocateDeadline { originator } => {
            match state.pending.remove(&originator) {
                // Still pending at the deadline means no reader reported.
                Some(pending) => StepOutput::send(Message {
                    src: state.id.clone(),
                    dst: pending.reply_via,
                    kind: MessageKind::TargetNotFound {
                        query: pending.target.to_string(),
                        route: ReplyRoute {
                            path: pending.reply_path,
                            originator,
                        },
                    },
                }),
                None => StepOutput::none(),
            }
        }

        NodeEvent::TrackTimer { .. } => StepOutput::none(),
    };
    (state, out)
}
