//! Snapshot of a trusted-relay QKD network for one time window.
//!
//! Nodes are ground stations, GEO satellites or LEO satellites. Each
//! undirected link generates secret key at a fixed rate into a single pool
//! shared by both endpoints; relaying one bit across a link consumes one bit
//! of its pool regardless of direction.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("link {a}-{b} connects a node to itself")]
    SelfLoop { a: String, b: String },
    #[error("ground stations {a} and {b} cannot share a direct link")]
    GroundToGround { a: String, b: String },
    #[error("duplicate link {a}-{b}")]
    DuplicateLink { a: String, b: String },
    #[error("no link between {a} and {b}")]
    NoSuchLink { a: String, b: String },
    #[error("invalid rate {rate} on link {a}-{b}")]
    InvalidRate { a: String, b: String, rate: f64 },
    #[error("invalid duration {0} s")]
    InvalidDuration(f64),
    #[error("insufficient keys on link {a}-{b}: requested {requested} bits, pool holds {available}")]
    InsufficientKeys {
        a: String,
        b: String,
        requested: u64,
        available: u64,
    },
    #[error("bit string length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("path with {hops} hops needs {hops} link keys, got {keys}")]
    HopMismatch { hops: usize, keys: usize },
    #[error("invalid bit string `{0}`")]
    InvalidBits(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    #[serde(alias = "ground_station", alias = "GroundStation")]
    Gs,
    #[serde(alias = "geo_satellite", alias = "GeoSatellite")]
    Geo,
    #[serde(alias = "leo_satellite", alias = "LeoSatellite")]
    Leo,
}

impl NodeKind {
    pub fn is_ground(self) -> bool {
        self == NodeKind::Gs
    }

    pub fn is_satellite(self) -> bool {
        !self.is_ground()
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Gs => "GS",
            NodeKind::Geo => "GEO",
            NodeKind::Leo => "LEO",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Self { id: id.into(), kind }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    /// Node index of the first endpoint.
    pub a: usize,
    /// Node index of the second endpoint.
    pub b: usize,
    /// Secret-key generation rate (bits/s).
    pub rate_bps: f64,
    /// Bits currently stored in the link's key pool.
    pub pool_bits: u64,
}

impl Link {
    pub fn other(&self, node: usize) -> Option<usize> {
        if node == self.a {
            Some(self.b)
        } else if node == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

/// Link description used when building a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    pub rate_bps: f64,
    pub pool_bits: u64,
}

impl LinkSpec {
    pub fn new(a: impl Into<String>, b: impl Into<String>, rate_bps: f64) -> Self {
        Self {
            a: a.into(),
            b: b.into(),
            rate_bps,
            pool_bits: 0,
        }
    }

    pub fn with_pool(a: impl Into<String>, b: impl Into<String>, pool_bits: u64) -> Self {
        Self {
            a: a.into(),
            b: b.into(),
            rate_bps: 0.0,
            pool_bits,
        }
    }
}

/// Soft topology limits of the transceiver layout; reported, not enforced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DegreeWarning {
    GsGeoLinks { node: String, count: usize },
    GsLeoLinks { node: String, count: usize },
    LeoInterSatelliteLinks { node: String, count: usize },
    LeoGroundLinks { node: String, count: usize },
}

impl fmt::Display for DegreeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeWarning::GsGeoLinks { node, count } => {
                write!(f, "ground station {node} has {count} GEO links (at most 1 expected)")
            }
            DegreeWarning::GsLeoLinks { node, count } => {
                write!(f, "ground station {node} has {count} LEO links (at most 2 expected)")
            }
            DegreeWarning::LeoInterSatelliteLinks { node, count } => write!(
                f,
                "LEO {node} has {count} inter-satellite links (at most 2 expected)"
            ),
            DegreeWarning::LeoGroundLinks { node, count } => {
                write!(f, "LEO {node} has {count} ground links (at most 2 expected)")
            }
        }
    }
}

/// Immutable network snapshot. Operations return updated copies.
#[derive(Debug, Clone, PartialEq)]
pub struct QkdGraph {
    nodes: Vec<Node>,
    links: Vec<Link>,
    index: HashMap<String, usize>,
    link_index: HashMap<(usize, usize), usize>,
    /// Seconds of key generation accumulated into the pools.
    pub elapsed_seconds: f64,
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl QkdGraph {
    pub fn new(nodes: Vec<Node>, links: Vec<LinkSpec>) -> Result<Self, NetError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(NetError::DuplicateNode(node.id.clone()));
            }
        }
        let mut graph = Self {
            nodes,
            links: Vec::with_capacity(links.len()),
            index,
            link_index: HashMap::new(),
            elapsed_seconds: 0.0,
        };
        for spec in links {
            graph.push_link(spec)?;
        }
        Ok(graph)
    }

    fn push_link(&mut self, spec: LinkSpec) -> Result<(), NetError> {
        let a = self.node_index(&spec.a)?;
        let b = self.node_index(&spec.b)?;
        if a == b {
            return Err(NetError::SelfLoop {
                a: spec.a,
                b: spec.b,
            });
        }
        if self.nodes[a].kind.is_ground() && self.nodes[b].kind.is_ground() {
            return Err(NetError::GroundToGround {
                a: spec.a,
                b: spec.b,
            });
        }
        if !(spec.rate_bps >= 0.0 && spec.rate_bps.is_finite()) {
            return Err(NetError::InvalidRate {
                a: spec.a,
                b: spec.b,
                rate: spec.rate_bps,
            });
        }
        let key = ordered(a, b);
        if self.link_index.contains_key(&key) {
            return Err(NetError::DuplicateLink {
                a: spec.a,
                b: spec.b,
            });
        }
        self.link_index.insert(key, self.links.len());
        self.links.push(Link {
            a,
            b,
            rate_bps: spec.rate_bps,
            pool_bits: spec.pool_bits,
        });
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, index: usize) -> &Node {
        &self.nodes[index]
    }

    pub fn node_index(&self, id: &str) -> Result<usize, NetError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| NetError::UnknownNode(id.to_owned()))
    }

    pub fn find_link(&self, a: usize, b: usize) -> Option<usize> {
        self.link_index.get(&ordered(a, b)).copied()
    }

    pub fn link_between(&self, a: &str, b: &str) -> Result<usize, NetError> {
        let (ia, ib) = (self.node_index(a)?, self.node_index(b)?);
        self.find_link(ia, ib).ok_or_else(|| NetError::NoSuchLink {
            a: a.to_owned(),
            b: b.to_owned(),
        })
    }

    /// `(neighbor, link index)` pairs of a node, in link order.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links
            .iter()
            .enumerate()
            .filter_map(move |(i, l)| l.other(node).map(|n| (n, i)))
    }

    pub fn ground_stations(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind.is_ground())
            .map(|(i, _)| i)
    }

    pub fn pools(&self) -> Vec<u64> {
        self.links.iter().map(|l| l.pool_bits).collect()
    }

    pub fn link_label(&self, link: usize) -> (String, String) {
        let l = &self.links[link];
        (self.nodes[l.a].id.clone(), self.nodes[l.b].id.clone())
    }

    /// Transceiver-count limits per node; violations are returned, not fatal.
    pub fn degree_warnings(&self) -> Vec<DegreeWarning> {
        let mut out = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let count = |kind: NodeKind| {
                self.neighbors(i)
                    .filter(|&(n, _)| self.nodes[n].kind == kind)
                    .count()
            };
            match node.kind {
                NodeKind::Gs => {
                    let geo = count(NodeKind::Geo);
                    if geo > 1 {
                        out.push(DegreeWarning::GsGeoLinks {
                            node: node.id.clone(),
                            count: geo,
                        });
                    }
                    let leo = count(NodeKind::Leo);
                    if leo > 2 {
                        out.push(DegreeWarning::GsLeoLinks {
                            node: node.id.clone(),
                            count: leo,
                        });
                    }
                }
                NodeKind::Leo => {
                    let isl = count(NodeKind::Leo) + count(NodeKind::Geo);
                    if isl > 2 {
                        out.push(DegreeWarning::LeoInterSatelliteLinks {
                            node: node.id.clone(),
                            count: isl,
                        });
                    }
                    let ground = count(NodeKind::Gs);
                    if ground > 2 {
                        out.push(DegreeWarning::LeoGroundLinks {
                            node: node.id.clone(),
                            count: ground,
                        });
                    }
                }
                NodeKind::Geo => {}
            }
        }
        out
    }

    /// Adds `floor(rate * duration)` bits to every pool.
    pub fn accumulate_pools(&self, duration: f64) -> Result<Self, NetError> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(NetError::InvalidDuration(duration));
        }
        let mut next = self.clone();
        for link in &mut next.links {
            link.pool_bits += (link.rate_bps * duration).floor() as u64;
        }
        next.elapsed_seconds += duration;
        Ok(next)
    }

    /// Removes `bits` from the pool of the link between `a` and `b`.
    pub fn consume(&self, a: &str, b: &str, bits: u64) -> Result<Self, NetError> {
        let link = self.link_between(a, b)?;
        let available = self.links[link].pool_bits;
        if bits > available {
            return Err(NetError::InsufficientKeys {
                a: a.to_owned(),
                b: b.to_owned(),
                requested: bits,
                available,
            });
        }
        let mut next = self.clone();
        next.links[link].pool_bits -= bits;
        Ok(next)
    }

    /// Replaces all pools at once (same order as [`QkdGraph::links`]).
    pub fn with_pools(&self, pools: &[u64]) -> Self {
        assert_eq!(pools.len(), self.links.len(), "pool count must match link count");
        let mut next = self.clone();
        for (link, &p) in next.links.iter_mut().zip(pools) {
            link.pool_bits = p;
        }
        next
    }
}

/// A key as a sequence of bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, NetError> {
        if self.len() != other.len() {
            return Err(NetError::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(BitString(
            self.0.iter().zip(&other.0).map(|(x, y)| x ^ y).collect(),
        ))
    }
}

impl FromStr for BitString {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(NetError::InvalidBits(s.to_owned())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &bit in &self.0 {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayTrace {
    /// Ciphertext sent over each hop.
    pub transmitted: Vec<BitString>,
    /// Key as decrypted at the final node.
    pub recovered: BitString,
    /// Link-key bits spent along the path.
    pub consumed_bits: usize,
}

/// Forwards `key` hop by hop along `path`, one-time-padding it with each
/// hop's link key and decrypting at the next node.
pub fn relay_chain_demo<S: AsRef<str>>(
    key: &BitString,
    path: &[S],
    link_keys: &[BitString],
) -> Result<RelayTrace, NetError> {
    let hops = path.len().saturating_sub(1);
    if hops != link_keys.len() {
        return Err(NetError::HopMismatch {
            hops,
            keys: link_keys.len(),
        });
    }
    let mut transmitted = Vec::with_capacity(hops);
    let mut carried = key.clone();
    for link_key in link_keys {
        if link_key.len() != key.len() {
            return Err(NetError::LengthMismatch {
                expected: key.len(),
                actual: link_key.len(),
            });
        }
        let cipher = carried.xor(link_key)?;
        carried = cipher.xor(link_key)?;
        transmitted.push(cipher);
    }
    Ok(RelayTrace {
        transmitted,
        recovered: carried,
        consumed_bits: key.len() * hops,
    })
}
