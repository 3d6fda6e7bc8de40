//! Shared domain model: node identities and kinds, radio ranges, the
//! AP-to-location lookup table, and the tracked-asset registry.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::addr::BtAddress;
use crate::geom::{MobilityPath, Position};

/// Scenario-unique node label, e.g. `R1`, `G1`, `W1`, `S1`, `M1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(label: impl Into<String>) -> Self {
        let label = label.into();
        debug_assert!(!label.is_empty());
        NodeId(label)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId::new(s)
    }
}

/// The five node roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Mobile,
    Reader,
    Gateway,
    WifiAp,
    Server,
}

impl NodeKind {
    /// Nodes that participate in the Bluetooth relay mesh.
    pub fn is_bt_infrastructure(self) -> bool {
        matches!(self, NodeKind::Reader | NodeKind::Gateway)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Mobile => "mobile",
            NodeKind::Reader => "reader",
            NodeKind::Gateway => "gateway",
            NodeKind::WifiAp => "wifiap",
            NodeKind::Server => "server",
        }
    }
}

/// Radio disc ranges in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeModel {
    pub bt_range_m: f64,
    pub wifi_range_m: f64,
}

impl Default for RangeModel {
    fn default() -> Self {
        RangeModel {
            bt_range_m: 10.0,
            wifi_range_m: 30.0,
        }
    }
}

impl RangeModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.bt_range_m > 0.0 && self.bt_range_m.is_finite()) {
            return Err(ModelError::NonPositiveRange("bt_range"));
        }
        if !(self.wifi_range_m > 0.0 && self.wifi_range_m.is_finite()) {
            return Err(ModelError::NonPositiveRange("wifi_range"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{0} must be strictly positive")]
    NonPositiveRange(&'static str),
}

/// Maps reader AP addresses to physical-location labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LookupTable {
    entries: BTreeMap<BtAddress, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown access point {0}")]
pub struct UnknownAccessPoint(pub BtAddress);

impl LookupTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the previous label when the AP was already present.
    pub fn insert(&mut self, ap: BtAddress, location_label: impl Into<String>) -> Option<String> {
        let label = location_label.into();
        debug_assert!(!label.is_empty());
        self.entries.insert(ap, label)
    }

    pub fn lookup_location(&self, ap: BtAddress) -> Result<&str, UnknownAccessPoint> {
        self.entries
            .get(&ap)
            .map(String::as_str)
            .ok_or(UnknownAccessPoint(ap))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BtAddress, &str)> {
        self.entries.iter().map(|(a, l)| (*a, l.as_str()))
    }
}

/// One tracked asset: display name plus opaque supporting info.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssetInfo {
    pub name: String,
    /// Carried verbatim, never interpreted.
    pub another_info: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown asset {query:?}")]
pub struct UnknownAsset {
    pub query: String,
}

/// Server-side registry of the network's assets, keyed by device address.
/// Non-empty names are unique so name queries resolve unambiguously.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssetRegistry {
    assets: BTreeMap<BtAddress, AssetInfo>,
}

impl AssetRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, address: BtAddress, info: AssetInfo) {
        debug_assert!(
            info.name.is_empty() || !self.assets.values().any(|a| a.name == info.name),
            "duplicate asset name {:?}",
            info.name
        );
        self.assets.insert(address, info);
    }

    pub fn get(&self, address: BtAddress) -> Option<&AssetInfo> {
        self.assets.get(&address)
    }

    pub fn contains(&self, address: BtAddress) -> bool {
        self.assets.contains_key(&address)
    }

    /// Resolves a target query to a registered device address.
    ///
    /// An address-form query must itself be registered: the server only
    /// tracks known assets. Otherwise the query is matched as an exact
    /// asset name.
    pub fn resolve_target(&self, query: &str) -> Result<BtAddress, UnknownAsset> {
        if let Ok(addr) = BtAddress::parse(query) {
            if self.assets.contains_key(&addr) {
                return Ok(addr);
            }
            return Err(UnknownAsset {
                query: query.to_string(),
            });
        }
        if !query.is_empty() {
            for (addr, info) in &self.assets {
                if info.name == query {
                    return Ok(*addr);
                }
            }
        }
        Err(UnknownAsset {
            query: query.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BtAddress, &AssetInfo)> {
        self.assets.iter().map(|(a, i)| (*a, i))
    }
}

/// A node's static placement, used to build the radio topology.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub kind: NodeKind,
    pub pos: Position,
}

/// A mobile's scenario-level description.
#[derive(Debug, Clone, PartialEq)]
pub struct MobileSpec {
    pub address: BtAddress,
    pub name: String,
    pub another_info: String,
    pub path: MobilityPath,
}
