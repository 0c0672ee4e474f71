//! Time-dependent road network: nodes, directed edges with a functional road
//! class, free-flow speeds and optional 5-minute speed profiles.

mod io;
mod stats;
mod synth;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use io::{load_network, write_network, NetworkFiles};
pub use stats::{network_stats, NetworkStats};
pub use synth::{
    generate_synthetic, write_synthetic, DatasetFiles, PeakSpec, SyntheticDataset, SyntheticSpec,
};

pub const BIN_COUNT: usize = 288;
pub const BIN_SECONDS: f64 = 300.0;
pub const BIN_MINUTES: f64 = 5.0;
pub const DAY_SECONDS: f64 = 86_400.0;
pub const DAY_MINUTES: f64 = 1_440.0;
/// Profile fractions above this are treated as unit errors on ingest.
pub const MAX_PROFILE_FRACTION: f64 = 1.5;
/// Highest functional road class kept in the network.
pub const MAX_FRC: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weekday {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Weekday::Mon => "Mon",
            Weekday::Tue => "Tue",
            Weekday::Wed => "Wed",
            Weekday::Thu => "Thu",
            Weekday::Fri => "Fri",
            Weekday::Sat => "Sat",
            Weekday::Sun => "Sun",
        }
    }
}

impl fmt::Display for Weekday {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weekday {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Weekday::ALL
            .into_iter()
            .find(|d| d.as_str().to_ascii_lowercase() == lower || full_name(*d) == lower)
            .ok_or_else(|| Error::invalid("weekday", format!("unrecognised weekday {s:?}")))
    }
}

fn full_name(d: Weekday) -> &'static str {
    match d {
        Weekday::Mon => "monday",
        Weekday::Tue => "tuesday",
        Weekday::Wed => "wednesday",
        Weekday::Thu => "thursday",
        Weekday::Fri => "friday",
        Weekday::Sat => "saturday",
        Weekday::Sun => "sunday",
    }
}

/// A time of day, stored as seconds since midnight in `[0, 86400)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Instant(f64);

impl Instant {
    pub fn from_seconds(seconds: f64) -> Self {
        let s = seconds.rem_euclid(DAY_SECONDS);
        // rem_euclid can round up to the modulus for tiny negative inputs
        Instant(if s >= DAY_SECONDS { 0.0 } else { s })
    }

    pub fn from_minutes(minutes: f64) -> Self {
        Self::from_seconds(minutes * 60.0)
    }

    pub fn from_hm(hours: u32, minutes: u32) -> Self {
        Self::from_seconds(f64::from(hours * 3600 + minutes * 60))
    }

    pub fn seconds(self) -> f64 {
        self.0
    }

    pub fn minutes(self) -> f64 {
        self.0 / 60.0
    }

    /// Index of the 5-minute profile bin containing this instant.
    pub fn bin(self) -> usize {
        ((self.0 / BIN_SECONDS).floor() as usize).min(BIN_COUNT - 1)
    }

    /// `HH:MM` label, truncating seconds.
    pub fn label(self) -> String {
        let total = self.0 as u64 / 60;
        format!("{:02}:{:02}", total / 60, total % 60)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: u64,
    pub from_node: u64,
    pub to_node: u64,
    pub length_m: f64,
    pub frc: u8,
    pub freeflow_kmh: f64,
    pub profile_id: Option<String>,
}

/// Speed as a fraction of free-flow speed, one value per 5-minute bin of a
/// weekday.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    id: String,
    weekday: Weekday,
    bins: Vec<f64>,
}

impl SpeedProfile {
    pub fn new(id: impl Into<String>, weekday: Weekday, bins: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if bins.len() != BIN_COUNT {
            return Err(Error::invalid(
                format!("profile {id}"),
                format!("profile bin count ≠ {BIN_COUNT} (got {})", bins.len()),
            ));
        }
        if let Some((k, v)) = bins
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0 && **v <= MAX_PROFILE_FRACTION))
        {
            return Err(Error::invalid(
                format!("profile {id}"),
                format!("bin {k} value {v} outside (0, {MAX_PROFILE_FRACTION}]"),
            ));
        }
        Ok(SpeedProfile { id, weekday, bins })
    }

    pub fn flat(id: impl Into<String>, weekday: Weekday, value: f64) -> Result<Self> {
        Self::new(id, weekday, vec![value; BIN_COUNT])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn weekday(&self) -> Weekday {
        self.weekday
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    fn is_constant(&self) -> bool {
        self.bins.iter().all(|b| *b == self.bins[0])
    }
}

/// Directed road graph for a single weekday. Immutable once built.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    weekday: Weekday,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    profiles: Vec<SpeedProfile>,
    node_index: HashMap<u64, usize>,
    edge_index: HashMap<u64, usize>,
    edge_from: Vec<u32>,
    edge_to: Vec<u32>,
    edge_profile: Vec<Option<u32>>,
    out_offsets: Vec<u32>,
    out_edges: Vec<u32>,
    /// Per edge, once FIFO-ized: the earliest arrival (minutes from the start
    /// of the entry day) reachable by waiting for any later bin start.
    /// `None` where waiting can never help.
    later_arrival: Vec<Option<Arc<[f64]>>>,
    fifo: bool,
}

impl PartialEq for RoadNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.weekday == other.weekday
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.profiles == other.profiles
    }
}

impl RoadNetwork {
    /// Validates and indexes a network. Profiles whose weekday differs from
    /// `weekday` are ignored.
    pub fn new(
        weekday: Weekday,
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        profiles: Vec<SpeedProfile>,
    ) -> Result<Self> {
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(Error::invalid(format!("node {}", n.id), "non-finite coordinates"));
            }
            if node_index.insert(n.id, i).is_some() {
                return Err(Error::invalid(format!("node {}", n.id), "duplicate node id"));
            }
        }

        let profiles: Vec<SpeedProfile> =
            profiles.into_iter().filter(|p| p.weekday == weekday).collect();
        let mut profile_index = HashMap::with_capacity(profiles.len());
        for (i, p) in profiles.iter().enumerate() {
            if profile_index.insert(p.id.clone(), i as u32).is_some() {
                return Err(Error::invalid(
                    format!("profile {}", p.id),
                    format!("duplicate profile id for {weekday}"),
                ));
            }
        }

        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut edge_from = Vec::with_capacity(edges.len());
        let mut edge_to = Vec::with_capacity(edges.len());
        let mut edge_profile = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            let what = || format!("edge {}", e.id);
            if edge_index.insert(e.id, i).is_some() {
                return Err(Error::invalid(what(), "duplicate edge id"));
            }
            let from = *node_index
                .get(&e.from_node)
                .ok_or_else(|| Error::invalid(what(), format!("unknown node {}", e.from_node)))?;
            let to = *node_index
                .get(&e.to_node)
                .ok_or_else(|| Error::invalid(what(), format!("unknown node {}", e.to_node)))?;
            if !(e.length_m.is_finite() && e.length_m > 0.0) {
                return Err(Error::invalid(what(), format!("non-positive length {}", e.length_m)));
            }
            if !(e.freeflow_kmh.is_finite() && e.freeflow_kmh > 0.0) {
                return Err(Error::invalid(
                    what(),
                    format!("non-positive free-flow speed {}", e.freeflow_kmh),
                ));
            }
            if e.frc > MAX_FRC {
                return Err(Error::invalid(what(), format!("frc {} outside 0..={MAX_FRC}", e.frc)));
            }
            let profile = match &e.profile_id {
                None => None,
                Some(pid) => Some(*profile_index.get(pid).ok_or_else(|| {
                    Error::invalid(what(), format!("unknown profile {pid} for {weekday}"))
                })?),
            };
            edge_from.push(from as u32);
            edge_to.push(to as u32);
            edge_profile.push(profile);
        }

        // CSR adjacency; edges keep their file order within a node
        let mut out_offsets = vec![0u32; nodes.len() + 1];
        for &f in &edge_from {
            out_offsets[f as usize + 1] += 1;
        }
        for i in 0..nodes.len() {
            out_offsets[i + 1] += out_offsets[i];
        }
        let mut cursor = out_offsets.clone();
        let mut out_edges = vec![0u32; edges.len()];
        for (e, &f) in edge_from.iter().enumerate() {
            out_edges[cursor[f as usize] as usize] = e as u32;
            cursor[f as usize] += 1;
        }

        let later_arrival = vec![None; edges.len()];
        Ok(RoadNetwork {
            weekday,
            nodes,
            edges,
            profiles,
            node_index,
            edge_index,
            edge_from,
            edge_to,
            edge_profile,
            out_offsets,
            out_edges,
            later_arrival,
            fifo: false,
        })
    }

    pub fn weekday(&self) -> Weekday {
        self.weekday
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn profiles(&self) -> &[SpeedProfile] {
        &self.profiles
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_idx(&self, id: u64) -> Option<usize> {
        self.node_index.get(&id).copied()
    }

    pub fn edge_idx(&self, id: u64) -> Option<usize> {
        self.edge_index.get(&id).copied()
    }

    pub fn is_fifo(&self) -> bool {
        self.fifo
    }

    /// Profile attached to edge `edge` (by index), if any.
    pub fn edge_profile(&self, edge: usize) -> Option<&SpeedProfile> {
        self.edge_profile[edge].map(|p| &self.profiles[p as usize])
    }

    /// Edge indices leaving node index `node`.
    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let lo = self.out_offsets[node] as usize;
        let hi = self.out_offsets[node + 1] as usize;
        self.out_edges[lo..hi].iter().map(|&e| e as usize)
    }

    pub fn edge_head(&self, edge: usize) -> usize {
        self.edge_to[edge] as usize
    }

    pub fn edge_tail(&self, edge: usize) -> usize {
        self.edge_from[edge] as usize
    }

    fn bin_fraction(&self, edge: usize, bin: usize) -> f64 {
        match self.edge_profile[edge] {
            Some(p) => self.profiles[p as usize].bins[bin],
            None => 1.0,
        }
    }

    /// Minutes to traverse `edge` when entering during `bin`, with no waiting.
    fn raw_minutes(&self, edge: usize, bin: usize) -> f64 {
        let e = &self.edges[edge];
        let speed = e.freeflow_kmh * self.bin_fraction(edge, bin);
        e.length_m / 1000.0 / speed * 60.0
    }

    /// Effective speed on `edge` (index) for a vehicle entering at `entry`.
    pub fn edge_speed_at(&self, edge: usize, entry: Instant) -> f64 {
        self.edges[edge].freeflow_kmh * self.bin_fraction(edge, entry.bin())
    }

    /// Minutes to traverse `edge` (index) when entering at `entry`. The whole
    /// link is driven at the entry bin's speed; after [`fifoize`] the value
    /// also accounts for waiting at the tail when that arrives earlier.
    pub fn edge_traversal_time(&self, edge: usize, entry: Instant) -> f64 {
        self.traversal_from_local(edge, entry.minutes())
    }

    /// Traversal minutes for an entry at `clock` minutes since midnight of the
    /// departure day; any non-negative value, wrapped onto the weekday cycle.
    pub(crate) fn traversal_at(&self, edge: usize, clock: f64) -> f64 {
        let local = clock.rem_euclid(DAY_MINUTES);
        let local = if local >= DAY_MINUTES { 0.0 } else { local };
        self.traversal_from_local(edge, local)
    }

    fn traversal_from_local(&self, edge: usize, local: f64) -> f64 {
        if self.edge_profile[edge].is_none() {
            return self.raw_minutes(edge, 0);
        }
        let bin = ((local / BIN_MINUTES).floor() as usize).min(BIN_COUNT - 1);
        let direct = self.raw_minutes(edge, bin);
        match &self.later_arrival[edge] {
            Some(later) => direct.min(later[bin] - local),
            None => direct,
        }
    }

    /// A copy with every profile detached, i.e. free-flow speed at all times.
    pub fn without_profiles(&self) -> RoadNetwork {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                profile_id: None,
                ..e.clone()
            })
            .collect();
        RoadNetwork::new(self.weekday, self.nodes.clone(), edges, Vec::new())
            .expect("profile-free copy of a valid network is valid")
    }

    /// A copy whose profile bins are rescaled by `f(profile_index, bin, value)`.
    /// Edges without a profile are untouched.
    pub fn map_profiles(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<RoadNetwork> {
        let profiles = self
            .profiles
            .iter()
            .enumerate()
            .map(|(pi, p)| {
                let bins = p.bins.iter().enumerate().map(|(k, v)| f(pi, k, *v)).collect();
                SpeedProfile::new(p.id.clone(), p.weekday, bins)
            })
            .collect::<Result<Vec<_>>>()?;
        RoadNetwork::new(self.weekday, self.nodes.clone(), self.edges.clone(), profiles)
    }
}

/// Rewrites per-edge traversal times so that arrival time is non-decreasing
/// in entry time: a vehicle may wait at the tail of an edge whenever a later
/// entry arrives sooner. Required before time-dependent routing.
pub fn fifoize(mut network: RoadNetwork) -> FifoNetwork {
    for edge in 0..network.edges.len() {
        network.later_arrival[edge] = match network.edge_profile(edge) {
            Some(p) if !p.is_constant() => later_arrival_table(&network, edge),
            _ => None,
        };
    }
    network.fifo = true;
    FifoNetwork(network)
}

fn later_arrival_table(network: &RoadNetwork, edge: usize) -> Option<Arc<[f64]>> {
    let arrival: Vec<f64> = (0..BIN_COUNT)
        .map(|k| k as f64 * BIN_MINUTES + network.raw_minutes(edge, k))
        .collect();
    let mut later = vec![f64::INFINITY; BIN_COUNT];
    // Two backward sweeps anchor the cycle: the second pass sees the best
    // arrival from the following day's bins.
    let mut best = f64::INFINITY;
    for _ in 0..2 {
        for k in (0..BIN_COUNT).rev() {
            later[k] = best;
            best = best.min(arrival[k]);
        }
        best += DAY_MINUTES;
    }
    // Waiting helps somewhere only if entering at the very end of some bin
    // arrives after the best later option.
    let needed = (0..BIN_COUNT).any(|k| arrival[k] + BIN_MINUTES > later[k]);
    needed.then(|| later.into())
}

/// A network whose edges satisfy the FIFO (non-overtaking) property.
#[derive(Debug, Clone, PartialEq)]
pub struct FifoNetwork(RoadNetwork);

impl FifoNetwork {
    pub fn into_inner(self) -> RoadNetwork {
        self.0
    }
}

impl std::ops::Deref for FifoNetwork {
    type Target = RoadNetwork;

    fn deref(&self) -> &RoadNetwork {
        &self.0
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;

    pub fn node(id: u64, x: f64, y: f64) -> Node {
        Node { id, x, y }
    }

    pub fn edge(id: u64, from: u64, to: u64, length_m: f64, kmh: f64, profile: Option<&str>) -> Edge {
        Edge {
            id,
            from_node: from,
            to_node: to,
            length_m,
            frc: 3,
            freeflow_kmh: kmh,
            profile_id: profile.map(str::to_owned),
        }
    }

    /// Profile taking `before` up to bin `switch` (exclusive) and `after` from it.
    pub fn two_level(id: &str, switch: usize, before: f64, after: f64) -> SpeedProfile {
        let bins = (0..BIN_COUNT).map(|k| if k < switch { before } else { after }).collect();
        SpeedProfile::new(id, Weekday::Wed, bins).unwrap()
    }
}
