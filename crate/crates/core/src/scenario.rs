//! Scenario files: a line-oriented plain-text description of node placements,
//! radio/latency configuration, and tracking requests.
//!
//! Grammar, one directive per line, `#` starts a comment, quoted strings may
//! contain spaces (but not quotes or tabs):
//!
//! ```text
//! config <key> <value>
//! server <label>
//! wifiap <label> <x> <y>
//! gateway <label> <x> <y>
//! reader <label> <bt_address> <x> <y> "<location label>"
//! mobile <label> <bt_address> "<name>" "<another_info>" path (<t> <x> <y>) [(<t> <x> <y>) ...]
//! request at=<t> from=<mobile label> target="<name or bt address>"
//! ```
//!
//! Times are seconds with up to six decimals; positions are meters with up
//! to three decimals. Reader declarations double as lookup-table rows, and
//! mobile declarations populate the asset registry.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::addr::BtAddress;
use crate::engine::LatencyConfig;
use crate::geom::{MobilityPath, Position, Waypoint};
use crate::model::{
    AssetInfo, AssetRegistry, LookupTable, MobileSpec, NodeId, NodeKind, Placement, RangeModel,
};

/// A fixed Bluetooth access point: its address keys the lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReaderSpec {
    pub ap_address: BtAddress,
    pub pos: Position,
    pub location_label: String,
}

/// One scheduled tracking request.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestSpec {
    /// Seconds after scenario start.
    pub at: f64,
    pub from: NodeId,
    /// Target name or device address.
    pub target: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ranges: RangeModel,
    pub latencies: LatencyConfig,
    pub server: NodeId,
    pub wifi_aps: BTreeMap<NodeId, Position>,
    pub gateways: BTreeMap<NodeId, Position>,
    pub readers: BTreeMap<NodeId, ReaderSpec>,
    pub mobiles: BTreeMap<NodeId, MobileSpec>,
    pub requests: Vec<RequestSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate label {label:?}")]
    DuplicateLabel { line: usize, label: String },
    #[error("line {line}: a server is already declared")]
    DuplicateServer { line: usize },
    #[error("scenario declares no server")]
    MissingServer,
    #[error("line {line}: gateway {label:?} has no wifi ap within range")]
    OrphanGateway { line: usize, label: String },
    #[error("line {line}: unknown or wrong-kind label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("invalid scenario: {message}")]
    Invalid { message: String },
}

/// Parses and fully validates a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    Parser::default().parse(text)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        parse_scenario(text)
    }

    /// The lookup table declared by the reader lines.
    pub fn lookup_table(&self) -> LookupTable {
        let mut table = LookupTable::new();
        for spec in self.readers.values() {
            table.insert(spec.ap_address, spec.location_label.clone());
        }
        table
    }

    /// The asset registry declared by the mobile lines.
    pub fn asset_registry(&self) -> AssetRegistry {
        let mut registry = AssetRegistry::new();
        for spec in self.mobiles.values() {
            registry.insert(
                spec.address,
                AssetInfo {
                    name: spec.name.clone(),
                    another_info: spec.another_info.clone(),
                },
            );
        }
        registry
    }

    /// Node placements at scenario start (mobiles at their initial waypoint).
    pub fn placements(&self) -> BTreeMap<NodeId, Placement> {
        let mut map = BTreeMap::new();
        map.insert(
            self.server.clone(),
            Placement {
                kind: NodeKind::Server,
                pos: Position::new(0.0, 0.0),
            },
        );
        for (id, pos) in &self.wifi_aps {
            map.insert(
                id.clone(),
                Placement {
                    kind: NodeKind::WifiAp,
                    pos: *pos,
                },
            );
        }
        for (id, pos) in &self.gateways {
            map.insert(
                id.clone(),
                Placement {
                    kind: NodeKind::Gateway,
                    pos: *pos,
                },
            );
        }
        for (id, spec) in &self.readers {
            map.insert(
                id.clone(),
                Placement {
                    kind: NodeKind::Reader,
                    pos: spec.pos,
                },
            );
        }
        for (id, spec) in &self.mobiles {
            map.insert(
                id.clone(),
                Placement {
                    kind: NodeKind::Mobile,
                    pos: spec.path.position_at(0.0),
                },
            );
        }
        map
    }

    pub fn node_kind(&self, id: &NodeId) -> Option<NodeKind> {
        if *id == self.server {
            Some(NodeKind::Server)
        } else if self.wifi_aps.contains_key(id) {
            Some(NodeKind::WifiAp)
        } else if self.gateways.contains_key(id) {
            Some(NodeKind::Gateway)
        } else if self.readers.contains_key(id) {
            Some(NodeKind::Reader)
        } else if self.mobiles.contains_key(id) {
            Some(NodeKind::Mobile)
        } else {
            None
        }
    }

    /// Semantic validation for scenarios built in code; parsing validates
    /// with line information instead.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.check(&BTreeMap::new())
    }

    fn check(&self, lines: &BTreeMap<String, usize>) -> Result<(), ScenarioError> {
        let line_of = |label: &str| lines.get(label).copied().unwrap_or(0);

        self.ranges.validate().map_err(|e| ScenarioError::Invalid {
            message: e.to_string(),
        })?;
        self.latencies
            .validate()
            .map_err(|message| ScenarioError::Invalid { message })?;

        // One namespace across all node kinds.
        let mut labels: BTreeMap<&NodeId, usize> = BTreeMap::new();
        let all_labels = std::iter::once(&self.server)
            .chain(self.wifi_aps.keys())
            .chain(self.gateways.keys())
            .chain(self.readers.keys())
            .chain(self.mobiles.keys());
        for label in all_labels {
            *labels.entry(label).or_insert(0) += 1;
            if labels[label] > 1 {
                return Err(ScenarioError::DuplicateLabel {
                    line: line_of(label.as_str()),
                    label: label.as_str().to_string(),
                });
            }
        }

        let mut ap_addresses = BTreeMap::new();
        for (id, spec) in &self.readers {
            if spec.location_label.is_empty() {
                return Err(ScenarioError::Invalid {
                    message: format!("reader {id} has an empty location label"),
                });
            }
            if let Some(prev) = ap_addresses.insert(spec.ap_address, id) {
                return Err(ScenarioError::DuplicateLabel {
                    line: line_of(id.as_str()),
                    label: format!("{} (ap address also on {prev})", spec.ap_address),
                });
            }
        }

        let mut mobile_addresses = BTreeMap::new();
        let mut mobile_names: BTreeMap<&str, &NodeId> = BTreeMap::new();
        for (id, spec) in &self.mobiles {
            if let Some(prev) = mobile_addresses.insert(spec.address, id) {
                return Err(ScenarioError::DuplicateLabel {
                    line: line_of(id.as_str()),
                    label: format!("{} (address also on {prev})", spec.address),
                });
            }
            if !spec.name.is_empty() {
                if let Some(prev) = mobile_names.insert(spec.name.as_str(), id) {
                    return Err(ScenarioError::DuplicateLabel {
                        line: line_of(id.as_str()),
                        label: format!("{} (name also on {prev})", spec.name),
                    });
                }
            }
        }

        for (id, pos) in &self.gateways {
            let covered = self
                .wifi_aps
                .values()
                .any(|w| crate::geom::in_range(self.ranges.wifi_range_m, *pos, *w));
            if !covered {
                return Err(ScenarioError::OrphanGateway {
                    line: line_of(id.as_str()),
                    label: id.as_str().to_string(),
                });
            }
        }

        for (idx, request) in self.requests.iter().enumerate() {
            if !self.mobiles.contains_key(&request.from) {
                return Err(ScenarioError::UnknownLabel {
                    line: line_of(&format!("request#{idx}")),
                    label: request.from.as_str().to_string(),
                });
            }
            if !(request.at.is_finite() && request.at >= 0.0) {
                return Err(ScenarioError::Invalid {
                    message: format!("request {idx} has a negative or non-finite time"),
                });
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse(render(s)) == s` for any valid scenario
    /// whose numbers fit the grammar precision.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let r = &self.ranges;
        let l = &self.latencies;
        writeln!(out, "config bt_range {}", meters(r.bt_range_m)).unwrap();
        writeln!(out, "config wifi_range {}", meters(r.wifi_range_m)).unwrap();
        writeln!(out, "config bt_hop_latency {}", seconds(l.bt_hop_latency)).unwrap();
        writeln!(
            out,
            "config bt_connect_latency {}",
            seconds(l.bt_connect_latency)
        )
        .unwrap();
        writeln!(out, "config wifi_latency {}", seconds(l.wifi_latency)).unwrap();
        writeln!(
            out,
            "config ethernet_latency {}",
            seconds(l.ethernet_latency)
        )
        .unwrap();
        writeln!(
            out,
            "config refresh_interval {}",
            seconds(l.refresh_interval)
        )
        .unwrap();
        writeln!(out, "config locate_timeout {}", seconds(l.locate_timeout)).unwrap();
        writeln!(out, "config track_ttl {}", seconds(l.track_ttl)).unwrap();
        writeln!(out, "server {}", self.server).unwrap();
        for (id, pos) in &self.wifi_aps {
            writeln!(out, "wifiap {id} {} {}", meters(pos.x), meters(pos.y)).unwrap();
        }
        for (id, pos) in &self.gateways {
            writeln!(out, "gateway {id} {} {}", meters(pos.x), meters(pos.y)).unwrap();
        }
        for (id, spec) in &self.readers {
            writeln!(
                out,
                "reader {id} {} {} {} \"{}\"",
                spec.ap_address,
                meters(spec.pos.x),
                meters(spec.pos.y),
                spec.location_label
            )
            .unwrap();
        }
        for (id, spec) in &self.mobiles {
            write!(
                out,
                "mobile {id} {} \"{}\" \"{}\" path",
                spec.address, spec.name, spec.another_info
            )
            .unwrap();
            for w in spec.path.waypoints() {
                write!(
                    out,
                    " ({} {} {})",
                    seconds(w.t),
                    meters(w.pos.x),
                    meters(w.pos.y)
                )
                .unwrap();
            }
            out.push('\n');
        }
        for req in &self.requests {
            writeln!(
                out,
                "request at={} from={} target=\"{}\"",
                seconds(req.at),
                req.from,
                req.target
            )
            .unwrap();
        }
        out
    }
}

fn meters(v: f64) -> String {
    format!("{v:.3}")
}

fn seconds(v: f64) -> String {
    format!("{v:.6}")
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Atom(String),
    /// Whitespace-separated numbers inside parentheses.
    Group(Vec<String>),
}

/// Splits one line into tokens. A `"` opens a quoted section that may
/// contain spaces; `#` outside quotes starts a comment.
fn tokenize(line: &str) -> Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while matches!(chars.peek(), Some(' ') | Some('\t')) {
            chars.next();
        }
        let Some(&c) = chars.peek() else { break };
        match c {
            '#' => break,
            ')' => return Err("unexpected ')'".to_string()),
            '(' => {
                chars.next();
                let mut interior = String::new();
                loop {
                    match chars.next() {
                        Some(')') => break,
                        Some('"') | Some('#') => {
                            return Err("quotes and comments cannot appear inside '(...)'".into())
                        }
                        Some(c) => interior.push(c),
                        None => return Err("unterminated '('".to_string()),
                    }
                }
                tokens.push(Token::Group(
                    interior.split_whitespace().map(str::to_string).collect(),
                ));
            }
            _ => {
                let mut atom = String::new();
                loop {
                    match chars.peek() {
                        Some('"') => {
                            chars.next();
                            loop {
                                match chars.next() {
                                    Some('"') => break,
                                    Some('\t') => {
                                        return Err("tab inside quoted string".to_string())
                                    }
                                    Some(c) => atom.push(c),
                                    None => return Err("unterminated quote".to_string()),
                                }
                            }
                        }
                        Some(' ') | Some('\t') | Some('(') | Some(')') | Some('#') | None => break,
                        Some(_) => atom.push(chars.next().unwrap()),
                    }
                }
                tokens.push(Token::Atom(atom));
            }
        }
    }
    Ok(tokens)
}

/// A decimal literal with a bounded number of fraction digits. Times get
/// six (microsecond grid), positions three (millimeter grid).
fn parse_decimal(text: &str, max_decimals: usize, allow_negative: bool) -> Option<f64> {
    let unsigned = match text.strip_prefix('-') {
        Some(rest) if allow_negative => rest,
        Some(_) => return None,
        None => text,
    };
    let (int_part, frac_part) = match unsigned.split_once('.') {
        Some((i, f)) => (i, f),
        None => (unsigned, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if frac_part.len() > max_decimals || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

#[derive(Default)]
struct Parser {
    ranges: RangeModel,
    latencies: LatencyConfig,
    server: Option<NodeId>,
    wifi_aps: BTreeMap<NodeId, Position>,
    gateways: BTreeMap<NodeId, Position>,
    readers: BTreeMap<NodeId, ReaderSpec>,
    mobiles: BTreeMap<NodeId, MobileSpec>,
    requests: Vec<RequestSpec>,
    /// Label (or request#N) to declaring line, for diagnostics.
    lines: BTreeMap<String, usize>,
}

impl Parser {
    fn parse(mut self, text: &str) -> Result<Scenario, ScenarioError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let syntax = |message: String| ScenarioError::Syntax { line, message };
            let tokens = tokenize(raw).map_err(syntax)?;
            let Some(Token::Atom(directive)) = tokens.first() else {
                continue; // blank or comment-only line
            };
            match directive.as_str() {
                "config" => self.parse_config(&tokens, line)?,
                "server" => {
                    let [label] = atoms::<1>(&tokens, line, "server <label>")?;
                    if self.server.is_some() {
                        return Err(ScenarioError::DuplicateServer { line });
                    }
                    let id = self.declare(label, line)?;
                    self.server = Some(id);
                }
                "wifiap" => {
                    let [label, x, y] = atoms::<3>(&tokens, line, "wifiap <label> <x> <y>")?;
                    let pos = position(&x, &y, line)?;
                    let id = self.declare(label, line)?;
                    self.wifi_aps.insert(id, pos);
                }
                "gateway" => {
                    let [label, x, y] = atoms::<3>(&tokens, line, "gateway <label> <x> <y>")?;
                    let pos = position(&x, &y, line)?;
                    let id = self.declare(label, line)?;
                    self.gateways.insert(id, pos);
                }
                "reader" => {
                    let [label, addr, x, y, loc] = atoms::<5>(
                        &tokens,
                        line,
                        "reader <label> <bt_address> <x> <y> \"<location label>\"",
                    )?;
                    let ap_address = BtAddress::parse(&addr).map_err(|e| syntax(e.to_string()))?;
                    let pos = position(&x, &y, line)?;
                    if loc.is_empty() {
                        return Err(syntax("location label must not be empty".into()));
                    }
                    let id = self.declare(label, line)?;
                    self.readers.insert(
                        id,
                        ReaderSpec {
                            ap_address,
                            pos,
                            location_label: loc,
                        },
                    );
                }
                "mobile" => self.parse_mobile(&tokens, line)?,
                "request" => self.parse_request(&tokens, line)?,
                other => {
                    return Err(syntax(format!("unknown directive {other:?}")));
                }
            }
        }

        let server = self.server.ok_or(ScenarioError::MissingServer)?;
        let scenario = Scenario {
            ranges: self.ranges,
            latencies: self.latencies,
            server,
            wifi_aps: self.wifi_aps,
            gateways: self.gateways,
            readers: self.readers,
            mobiles: self.mobiles,
            requests: self.requests,
        };
        scenario.check(&self.lines)?;
        Ok(scenario)
    }

    fn declare(&mut self, label: String, line: usize) -> Result<NodeId, ScenarioError> {
        if label.is_empty() {
            return Err(ScenarioError::Syntax {
                line,
                message: "node label must not be empty".into(),
            });
        }
        if self.lines.contains_key(&label) {
            return Err(ScenarioError::DuplicateLabel { line, label });
        }
        self.lines.insert(label.clone(), line);
        Ok(NodeId::new(label))
    }

    fn parse_config(&mut self, tokens: &[Token], line: usize) -> Result<(), ScenarioError> {
        let [key, value] = atoms::<2>(tokens, line, "config <key> <value>")?;
        let syntax = |message: String| ScenarioError::Syntax { line, message };
        let as_meters = || {
            parse_decimal(&value, 3, false)
                .ok_or_else(|| syntax(format!("bad meters value {value:?} (up to 3 decimals)")))
        };
        let as_seconds = || {
            parse_decimal(&value, 6, false)
                .ok_or_else(|| syntax(format!("bad seconds value {value:?} (up to 6 decimals)")))
        };
        match key.as_str() {
            "bt_range" => self.ranges.bt_range_m = as_meters()?,
            "wifi_range" => self.ranges.wifi_range_m = as_meters()?,
            "bt_hop_latency" => self.latencies.bt_hop_latency = as_seconds()?,
            "bt_connect_latency" => self.latencies.bt_connect_latency = as_seconds()?,
            "wifi_latency" => self.latencies.wifi_latency = as_seconds()?,
            "ethernet_latency" => self.latencies.ethernet_latency = as_seconds()?,
            "refresh_interval" => self.latencies.refresh_interval = as_seconds()?,
            "locate_timeout" => self.latencies.locate_timeout = as_seconds()?,
            "track_ttl" => self.latencies.track_ttl = as_seconds()?,
            other => return Err(syntax(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    fn parse_mobile(&mut self, tokens: &[Token], line: usize) -> Result<(), ScenarioError> {
        let syntax = |message: String| ScenarioError::Syntax { line, message };
        let usage =
            "mobile <label> <bt_address> \"<name>\" \"<another_info>\" path (<t> <x> <y>) ...";
        let mut atoms_iter = tokens.iter();
        let mut next_atom = |what: &str| match atoms_iter.next() {
            Some(Token::Atom(a)) => Ok(a.clone()),
            _ => Err(ScenarioError::Syntax {
                line,
                message: format!("expected {what}; usage: {usage}"),
            }),
        };
        next_atom("'mobile'")?;
        let label = next_atom("label")?;
        let addr = next_atom("bt address")?;
        let address = BtAddress::parse(&addr).map_err(|e| syntax(e.to_string()))?;
        let name = next_atom("quoted name")?;
        let another_info = next_atom("quoted another_info")?;
        let path_kw = next_atom("'path'")?;
        if path_kw != "path" {
            return Err(syntax(format!("expected 'path', found {path_kw:?}")));
        }
        let mut waypoints = Vec::new();
        for token in atoms_iter {
            let Token::Group(parts) = token else {
                return Err(syntax("waypoints must be written as (<t> <x> <y>)".into()));
            };
            if parts.len() != 3 {
                return Err(syntax("a waypoint is (<t> <x> <y>)".into()));
            }
            let t = parse_decimal(&parts[0], 6, false)
                .ok_or_else(|| syntax(format!("bad waypoint time {:?}", parts[0])))?;
            let pos = position(&parts[1], &parts[2], line)?;
            waypoints.push(Waypoint { t, pos });
        }
        let path = MobilityPath::new(waypoints).map_err(|e| syntax(e.to_string()))?;
        let id = self.declare(label, line)?;
        self.mobiles.insert(
            id,
            MobileSpec {
                address,
                name,
                another_info,
                path,
            },
        );
        Ok(())
    }

    fn parse_request(&mut self, tokens: &[Token], line: usize) -> Result<(), ScenarioError> {
        let syntax = |message: String| ScenarioError::Syntax { line, message };
        let usage = "request at=<t> from=<mobile label> target=\"<name or bt address>\"";
        let [at, from, target] = atoms::<3>(tokens, line, usage)?;
        let at = at
            .strip_prefix("at=")
            .and_then(|v| parse_decimal(v, 6, false))
            .ok_or_else(|| syntax(format!("bad at= field; usage: {usage}")))?;
        let from = from
            .strip_prefix("from=")
            .filter(|v| !v.is_empty())
            .ok_or_else(|| syntax(format!("bad from= field; usage: {usage}")))?;
        let target = target
            .strip_prefix("target=")
            .filter(|v| !v.is_empty())
            .ok_or_else(|| syntax(format!("bad target= field; usage: {usage}")))?;
        self.lines
            .insert(format!("request#{}", self.requests.len()), line);
        self.requests.push(RequestSpec {
            at,
            from: NodeId::new(from),
            target: target.to_string(),
        });
        Ok(())
    }
}

/// Exactly `N` argument atoms after the directive.
fn atoms<const N: usize>(
    tokens: &[Token],
    line: usize,
    usage: &str,
) -> Result<[String; N], ScenarioError> {
    let args: Vec<String> = tokens[1..]
        .iter()
        .map(|t| match t {
            Token::Atom(a) => Ok(a.clone()),
            Token::Group(_) => Err(()),
        })
        .collect::<Result<_, _>>()
        .map_err(|_| ScenarioError::Syntax {
            line,
            message: format!("usage: {usage}"),
        })?;
    args.try_into().map_err(|_| ScenarioError::Syntax {
        line,
        message: format!("usage: {usage}"),
    })
}

fn position(x: &str, y: &str, line: usize) -> Result<Position, ScenarioError> {
    let parse = |text: &str| {
        parse_decimal(text, 3, true).ok_or_else(|| ScenarioError::Syntax {
            line,
            message: format!("bad meters value {text:?} (up to 3 decimals)"),
        })
    };
    Ok(Position::new(parse(x)?, parse(y)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = r#"
# the five access points
server S1
wifiap W1 20.0 25.0
gateway G1 20.0 0.0
reader R1 00:0C:25:14:67:1E 0.0 0.0 "C Block-Indoor Court"
reader R2 00:4A:12:81:1A:BD 8.0 0.0 "Digital Library"
reader R3 00:82:44:A6:BB:10 16.0 0.0 "Amphitheatre"
reader R4 00:86:31:EA:89:22 24.0 0.0 "Canteen"
reader R5 00:75:C2:78:56:E1 32.0 0.0 "Student Council Center"
"#;

    #[test]
    fn parses_table1_readers_into_lookup() {
        let scenario = parse_scenario(TABLE1).unwrap();
        let table = scenario.lookup_table();
        assert_eq!(table.len(), 5);
        let expect = [
            ("00:0C:25:14:67:1E", "C Block-Indoor Court"),
            ("00:4A:12:81:1A:BD", "Digital Library"),
            ("00:82:44:A6:BB:10", "Amphitheatre"),
            ("00:86:31:EA:89:22", "Canteen"),
            ("00:75:C2:78:56:E1", "Student Council Center"),
        ];
        for (addr, label) in expect {
            let ap = BtAddress::parse(addr).unwrap();
            assert_eq!(table.lookup_location(ap).unwrap(), label);
        }
    }

    #[test]
    fn two_server_lines_fail() {
        let text = "server S1\nserver S2\n";
        assert_eq!(
            parse_scenario(text),
            Err(ScenarioError::DuplicateServer { line: 2 })
        );
    }

    #[test]
    fn missing_server_fails() {
        assert_eq!(parse_scenario(""), Err(ScenarioError::MissingServer));
    }

    #[test]
    fn malformed_reader_address_cites_line() {
        let text = "server S1\nreader R1 00:0C:25 0.0 0.0 \"X\"\n";
        assert!(matches!(
            parse_scenario(text),
            Err(ScenarioError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn duplicate_label_cites_line() {
        let text = "server S1\nwifiap W1 0.0 0.0\ngateway W1 1.0 0.0\n";
        assert_eq!(
            parse_scenario(text),
            Err(ScenarioError::DuplicateLabel {
                line: 3,
                label: "W1".into()
            })
        );
    }

    #[test]
    fn orphan_gateway_detected() {
        let text = "server S1\nwifiap W1 0.0 0.0\ngateway G1 100.0 0.0\n";
        assert_eq!(
            parse_scenario(text),
            Err(ScenarioError::OrphanGateway {
                line: 3,
                label: "G1".into()
            })
        );
    }

    #[test]
    fn gateway_without_any_wifiap_is_orphan() {
        let text = "server S1\ngateway G1 0.0 0.0\n";
        assert!(matches!(
            parse_scenario(text),
            Err(ScenarioError::OrphanGateway { line: 2, .. })
        ));
    }

    #[test]
    fn duplicate_reader_ap_address_fails() {
        let text = concat!(
            "server S1\nwifiap W1 20.0 25.0\ngateway G1 20.0 0.0\n",
            "reader R1 00:0C:25:14:67:1E 4.0 0.0 \"A\"\n",
            "reader R2 00:0C:25:14:67:1E 12.0 0.0 \"B\"\n",
        );
        assert!(matches!(
            parse_scenario(text),
            Err(ScenarioError::DuplicateLabel { line: 5, .. })
        ));
    }

    #[test]
    fn duplicate_mobile_name_or_address_fails() {
        let head = "server S1\n";
        let dup_name = format!(
            "{head}mobile M1 AA:00:00:00:00:01 \"Alice\" \"\" path (0 0.0 0.0)\n\
             mobile M2 AA:00:00:00:00:02 \"Alice\" \"\" path (0 1.0 0.0)\n"
        );
        assert!(matches!(
            parse_scenario(&dup_name),
            Err(ScenarioError::DuplicateLabel { line: 3, .. })
        ));
        let dup_addr = format!(
            "{head}mobile M1 AA:00:00:00:00:01 \"Alice\" \"\" path (0 0.0 0.0)\n\
             mobile M2 AA:00:00:00:00:01 \"Bob\" \"\" path (0 1.0 0.0)\n"
        );
        assert!(matches!(
            parse_scenario(&dup_addr),
            Err(ScenarioError::DuplicateLabel { line: 3, .. })
        ));
    }

    #[test]
    fn request_from_unknown_mobile_fails() {
        let text = "server S1\nrequest at=1.0 from=M9 target=\"Alice\"\n";
        assert_eq!(
            parse_scenario(text),
            Err(ScenarioError::UnknownLabel {
                line: 2,
                label: "M9".into()
            })
        );
    }

    #[test]
    fn decimal_precision_is_enforced() {
        let too_precise = "server S1\nwifiap W1 0.1234 0.0\n";
        assert!(matches!(
            parse_scenario(too_precise),
            Err(ScenarioError::Syntax { line: 2, .. })
        ));
        let too_precise = "server S1\nconfig locate_timeout 0.1234567\n";
        assert!(matches!(
            parse_scenario(too_precise),
            Err(ScenarioError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn mobile_and_request_parse() {
        let text = concat!(
            "server S1\n",
            "wifiap W1 20.0 25.0\n",
            "gateway G1 20.0 0.0\n",
            "reader R1 00:0C:25:14:67:1E 4.0 0.0 \"C Block-Indoor Court\"\n",
            "mobile M1 AA:00:00:00:00:01 \"Alice A\" \"dept=EE\" path (0 0.0 0.0) (10 5.5 0.0)\n",
            "request at=1.0 from=M1 target=\"Alice A\"\n",
        );
        let scenario = parse_scenario(text).unwrap();
        let mobile = &scenario.mobiles[&NodeId::from("M1")];
        assert_eq!(mobile.name, "Alice A");
        assert_eq!(mobile.another_info, "dept=EE");
        assert_eq!(mobile.path.waypoints().len(), 2);
        assert_eq!(scenario.requests.len(), 1);
        assert_eq!(scenario.requests[0].target, "Alice A");
        assert_eq!(scenario.requests[0].at, 1.0);
    }

    #[test]
    fn config_overrides_defaults() {
        let text = "config bt_range 5.0\nconfig locate_timeout 2.5\nserver S1\n";
        let scenario = parse_scenario(text).unwrap();
        assert_eq!(scenario.ranges.bt_range_m, 5.0);
        assert_eq!(scenario.latencies.locate_timeout, 2.5);
        assert_eq!(scenario.ranges.wifi_range_m, 30.0);
    }

    #[test]
    fn render_then_parse_is_identity() {
        let text = concat!(
            "config bt_range 12.5\n",
            "server S1\n",
            "wifiap W1 20.0 25.0\n",
            "gateway G1 20.0 0.0\n",
            "reader R1 00:0C:25:14:67:1E 4.0 0.0 \"C Block-Indoor Court\"\n",
            "mobile M1 AA:00:00:00:00:01 \"Alice\" \"\" path (0 0.0 0.0) (10.5 5.125 -3.0)\n",
            "request at=1.25 from=M1 target=\"Alice\"\n",
        );
        let scenario = parse_scenario(text).unwrap();
        let rendered = scenario.render();
        let reparsed = parse_scenario(&rendered).unwrap();
        assert_eq!(reparsed, scenario);
        // And rendering is a fixed point.
        assert_eq!(reparsed.render(), rendered);
    }

    #[test]
    fn unterminated_quote_and_unknown_directive_fail() {
        assert!(matches!(
            parse_scenario("server S1\nreader R1 00:0C:25:14:67:1E 0.0 0.0 \"oops\n"),
            Err(ScenarioError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_scenario("flyingcarpet X\n"),
            Err(ScenarioError::Syntax { line: 1, .. })
        ));
    }
}
