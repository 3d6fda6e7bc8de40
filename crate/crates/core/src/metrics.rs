//! Aggregate statistics over a finished run: answer counts, positioning
//! error, request-to-answer latency, and handovers.

use std::fmt;

use crate::engine::positioning_error;
use crate::model::{NodeId, NodeKind};
use crate::scenario::Scenario;
use crate::time::SimTime;
use crate::trace::{parse_detail, Trace};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    /// Location responses delivered to requesters.
    pub responses: usize,
    /// Not-found answers delivered to requesters.
    pub not_found: usize,
    /// Location updates delivered while a track moved between readers.
    pub handovers: usize,
    pub mean_error_m: f64,
    pub max_error_m: f64,
    /// Mean request-to-response latency over answered requests.
    pub mean_latency_s: f64,
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "responses      {}", self.responses)?;
        writeln!(f, "not_found      {}", self.not_found)?;
        writeln!(f, "handovers      {}", self.handovers)?;
        writeln!(f, "mean_error_m   {:.3}", self.mean_error_m)?;
        writeln!(f, "max_error_m    {:.3}", self.max_error_m)?;
        write!(f, "mean_latency_s {:.6}", self.mean_latency_s)
    }
}

/// An `origin=` field: `<mobile address>@<ingress reader>#<seq>`.
fn parse_origin(text: &str) -> Option<(NodeId, u64)> {
    let (_, rest) = text.split_once('@')?;
    let (reader, seq) = rest.split_once('#')?;
    Some((NodeId::new(reader), seq.parse().ok()?))
}

pub fn compute_metrics(trace: &Trace, scenario: &Scenario) -> MetricsReport {
    let mut report = MetricsReport::default();

    let is_final = |dst: &NodeId| scenario.node_kind(dst) == Some(NodeKind::Mobile);

    // Ingress times: the n-th TrackRequest a reader captures gets request
    // sequence n, so delivery order reconstructs the numbering.
    let mut ingress_times: std::collections::BTreeMap<(NodeId, u64), SimTime> =
        std::collections::BTreeMap::new();
    let mut per_reader: std::collections::BTreeMap<NodeId, u64> = std::collections::BTreeMap::new();
    for record in trace.of_kind("TrackRequest") {
        let seq = per_reader.entry(record.dst.clone()).or_insert(0);
        ingress_times.insert((record.dst.clone(), *seq), record.at);
        *seq += 1;
    }

    let mut latencies: Vec<f64> = Vec::new();
    for record in &trace.records {
        if !is_final(&record.dst) {
            continue;
        }
        match record.kind.as_str() {
            "LocationResponse" => {
                report.responses += 1;
                let origin = parse_detail(&record.detail)
                    .get("origin")
                    .and_then(|o| parse_origin(o));
                if let Some(key) = origin {
                    if let Some(issued) = ingress_times.get(&key) {
                        latencies.push((record.at - *issued).as_secs_f64());
                    }
                }
            }
            "LocationUpdate" => report.handovers += 1,
            "TargetNotFound" => report.not_found += 1,
            _ => {}
        }
    }

    let fixes = positioning_error(trace, scenario);
    if !fixes.is_empty() {
        report.max_error_m = fixes.iter().map(|f| f.error_m).fold(0.0, f64::max);
        report.mean_error_m = fixes.iter().map(|f| f.error_m).sum::<f64>() / fixes.len() as f64;
    }
    if !latencies.is_empty() {
        report.mean_latency_s = latencies.iter().sum::<f64>() / latencies.len() as f64;
    }
    report
}
