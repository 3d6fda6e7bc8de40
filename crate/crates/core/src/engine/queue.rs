//! Deterministic event queue: events are totally ordered by timestamp, with
//! a global sequence number breaking ties in scheduling order (FIFO).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent<T> {
    pub at: SimTime,
    pub seq: u64,
    pub payload: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot schedule at {at} when the clock is already at {now}")]
pub struct SchedulingInPast {
    pub at: SimTime,
    pub now: SimTime,
}

/// Min-heap wrapper: the binary heap is a max-heap, so the ordering is
/// reversed on (at, seq). The sequence number is unique, which makes the
/// order total and pop order fully deterministic.
struct Entry<T>(SimEvent<T>);

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0.at == other.0.at && self.0.seq == other.0.seq
    }
}

impl<T> Eq for Entry<T> {}

impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.at, other.0.seq).cmp(&(self.0.at, self.0.seq))
    }
}

pub struct EventQueue<T> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Entry<T>>,
}

impl<T> Default for EventQueue<T> {
    fn default() -> Self {
        EventQueue {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
        }
    }
}

impl<T> EventQueue<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Schedules a payload; returns its sequence number.
    pub fn schedule(&mut self, at: SimTime, payload: T) -> Result<u64, SchedulingInPast> {
        if at < self.now {
            return Err(SchedulingInPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(SimEvent { at, seq, payload }));
        Ok(seq)
    }

    /// Next event's timestamp without removing it.
    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.0.at)
    }

    /// Removes the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<SimEvent<T>> {
        let event = self.heap.pop()?.0;
        debug_assert!(event.at >= self.now);
        self.now = event.at;
        Some(event)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Consumes the queue, yielding the remaining events in order.
    pub fn drain(self) -> impl Iterator<Item = SimEvent<T>> {
        self.heap.into_sorted_vec().into_iter().rev().map(|e| e.0)
    }
}
