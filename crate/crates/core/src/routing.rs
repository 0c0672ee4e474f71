//! Time-dependent earliest-arrival search and the origin × destination ×
//! departure-slot cost cube.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::csvio::{create, finish};
use crate::network::{FifoNetwork, Instant, RoadNetwork};
use crate::zoning::ZoneGrid;

pub const CUBE_MAGIC: &[u8; 4] = b"TDC1";

/// Evenly spaced departure instants covering one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSchedule {
    count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepartureSlot {
    pub index: usize,
    pub instant: Instant,
}

impl Default for SlotSchedule {
    /// A departure every 15 minutes.
    fn default() -> Self {
        SlotSchedule { count: 96 }
    }
}

impl SlotSchedule {
    /// `count` slots per day; the interval must be a whole number of seconds.
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 || 86_400 % count != 0 {
            return Err(Error::invalid(
                "slot count",
                format!("{count} does not divide the day into whole seconds"),
            ));
        }
        Ok(SlotSchedule { count })
    }

    pub fn from_interval_minutes(interval: f64) -> Result<Self> {
        let secs = interval * 60.0;
        if !(secs >= 1.0) || secs.fract() != 0.0 || 86_400 % (secs as usize) != 0 {
            return Err(Error::invalid(
                "slot interval",
                format!("{interval} min does not divide 24 h"),
            ));
        }
        Self::new(86_400 / secs as usize)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn interval_seconds(&self) -> u32 {
        (86_400 / self.count) as u32
    }

    pub fn slot(&self, index: usize) -> DepartureSlot {
        assert!(index < self.count, "slot {index} out of range");
        DepartureSlot {
            index,
            instant: Instant::from_seconds(f64::from(self.interval_seconds()) * index as f64),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = DepartureSlot> + '_ {
        (0..self.count).map(|i| self.slot(i))
    }
}

/// Result of a one-to-all search, indexed by node index.
#[derive(Debug, Clone)]
pub struct SearchLabels {
    depart: Instant,
    elapsed: Vec<f64>,
    pred: Vec<Option<u32>>,
}

impl SearchLabels {
    pub fn depart(&self) -> Instant {
        self.depart
    }

    /// Minutes from departure until arrival at `node`; `+inf` if unreachable.
    pub fn elapsed(&self, node: usize) -> f64 {
        self.elapsed[node]
    }

    /// Arrival as minutes since midnight of the departure day (may exceed
    /// one day).
    pub fn arrival(&self, node: usize) -> f64 {
        self.depart.minutes() + self.elapsed[node]
    }

    pub fn predecessor(&self, node: usize) -> Option<usize> {
        self.pred[node].map(|e| e as usize)
    }

    /// Edge indices of the route from the source to `node`, in travel order.
    pub fn path_edges(&self, network: &RoadNetwork, node: usize) -> Option<Vec<usize>> {
        if !self.elapsed[node].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut v = node;
        while let Some(e) = self.predecessor(v) {
            path.push(e);
            v = network.edge_tail(e);
        }
        path.reverse();
        Some(path)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Queued {
    cost: f64,
    node: u32,
}

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Earliest-arrival search from node index `source`, departing at `depart`.
/// Labels hold elapsed minutes; an edge leaving a node reached after `t`
/// minutes is entered at clock time `depart + t`, wrapped onto the weekday.
pub fn one_to_all_td(network: &FifoNetwork, source: usize, depart: Instant) -> SearchLabels {
    let n = network.node_count();
    let mut elapsed = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    let start = depart.minutes();

    elapsed[source] = 0.0;
    heap.push(Queued { cost: 0.0, node: source as u32 });
    while let Some(Queued { cost, node }) = heap.pop() {
        let v = node as usize;
        if settled[v] {
            continue;
        }
        settled[v] = true;
        let clock = start + cost;
        for e in network.out_edges(v) {
            let w = network.edge_head(e);
            if settled[w] {
                continue;
            }
            let next = cost + network.traversal_at(e, clock);
            if next < elapsed[w] {
                elapsed[w] = next;
                pred[w] = Some(e as u32);
                heap.push(Queued { cost: next, node: w as u32 });
            }
        }
    }
    SearchLabels { depart, elapsed, pred }
}

/// Static multi-source Dijkstra with per-edge costs from `cost`. Returns
/// distances by node index.
pub fn static_distances(
    network: &RoadNetwork,
    sources: &[usize],
    cost: impl Fn(usize) -> f64,
) -> Vec<f64> {
    let n = network.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Queued { cost: 0.0, node: s as u32 });
    }
    while let Some(Queued { cost: d, node }) = heap.pop() {
        let v = node as usize;
        if settled[v] {
            continue;
        }
        settled[v] = true;
        for e in network.out_edges(v) {
            let w = network.edge_head(e);
            let next = d + cost(e);
            if next < dist[w] {
                dist[w] = next;
                heap.push(Queued { cost: next, node: w as u32 });
            }
        }
    }
    dist
}

/// Travel-time minutes by (slot, origin, destination). Origins are the
/// internal zones and destinations all retained zones, both in ascending
/// zone id order.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCube {
    slots: SlotSchedule,
    origins: Vec<u32>,
    destinations: Vec<u32>,
    values: Vec<f64>,
}

impl CostCube {
    pub fn new(
        slots: SlotSchedule,
        origins: Vec<u32>,
        destinations: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let want = slots.count() * origins.len() * destinations.len();
        if values.len() != want {
            return Err(Error::Dimension(format!(
                "cube holds {} values, expected {want}",
                values.len()
            )));
        }
        Ok(CostCube {
            slots,
            origins,
            destinations,
            values,
        })
    }

    pub fn slots(&self) -> &SlotSchedule {
        &self.slots
    }

    pub fn origins(&self) -> &[u32] {
        &self.origins
    }

    pub fn destinations(&self) -> &[u32] {
        &self.destinations
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, slot: usize, origin: usize, dest: usize) -> f64 {
        self.values[(slot * self.origins.len() + origin) * self.destinations.len() + dest]
    }

    /// All destination costs for one (slot, origin).
    pub fn row(&self, slot: usize, origin: usize) -> &[f64] {
        let d = self.destinations.len();
        let start = (slot * self.origins.len() + origin) * d;
        &self.values[start..start + d]
    }

    pub fn origin_pos(&self, zone_id: u32) -> Option<usize> {
        self.origins.binary_search(&zone_id).ok()
    }

    pub fn dest_pos(&self, zone_id: u32) -> Option<usize> {
        self.destinations.binary_search(&zone_id).ok()
    }

    pub fn unreachable_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_infinite()).count()
    }

    /// Binary layout: magic, u32 S, O, D, then f32 minutes slot-major.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        w.write_all(CUBE_MAGIC).map_err(io)?;
        for n in [self.slots.count(), self.origins.len(), self.destinations.len()] {
            w.write_all(&(n as u32).to_le_bytes()).map_err(io)?;
        }
        for v in &self.values {
            w.write_all(&(*v as f32).to_le_bytes()).map_err(io)?;
        }
        finish(path, w)
    }

    /// Reads a cube file, taking axis zone ids from `grid`. Fails with a
    /// dimension error when the header disagrees with the grid.
    pub fn read_binary(path: &Path, grid: &ZoneGrid) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        if bytes.len() < 16 || &bytes[..4] != CUBE_MAGIC {
            return Err(Error::invalid(path.display().to_string(), "not a TDC1 cube file"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
        let (s, o, d) = (word(0), word(1), word(2));
        let origins = grid.origin_ids();
        let destinations = grid.destination_ids();
        if o != origins.len() || d != destinations.len() {
            return Err(Error::Dimension(format!(
                "{}: cube is {o}×{d} but zones give {}×{}",
                path.display(),
                origins.len(),
                destinations.len()
            )));
        }
        let body = &bytes[16..];
        if body.len() != s * o * d * 4 {
            return Err(Error::Dimension(format!(
                "{}: expected {} bytes of values, found {}",
                path.display(),
                s * o * d * 4,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        CostCube::new(SlotSchedule::new(s)?, origins, destinations, values)
    }

    /// Inspection export: `slot,origin,destination,minutes` with zone ids.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "slot,origin,destination,minutes").map_err(io)?;
        for s in 0..self.slots.count() {
            for (oi, o) in self.origins.iter().enumerate() {
                for (di, d) in self.destinations.iter().enumerate() {
                    writeln!(w, "{s},{o},{d},{}", self.get(s, oi, di)).map_err(io)?;
                }
            }
        }
        finish(path, w)
    }
}

/// Runs one search per (internal origin, slot) and reads costs off at the
/// destination snap nodes. The intra-zone cost is zero. Parallel over rows
/// on the current rayon pool; the result does not depend on scheduling.
pub fn build_cost_cube(
    network: &FifoNetwork,
    grid: &ZoneGrid,
    slots: &SlotSchedule,
) -> Result<CostCube> {
    let origins = grid.origin_ids();
    let destinations = grid.destination_ids();
    let snap = |id: u32| -> Result<usize> {
        let zone = grid.zone(id).expect("axis ids come from the grid");
        let node = zone
            .snap_node
            .ok_or_else(|| Error::invalid(format!("zone {id}"), "zone has no snap node"))?;
        network
            .node_idx(node)
            .ok_or_else(|| Error::invalid(format!("zone {id}"), format!("snap node {node} not in network")))
    };
    let origin_nodes = origins.iter().map(|&id| snap(id)).collect::<Result<Vec<_>>>()?;
    let dest_nodes = destinations.iter().map(|&id| snap(id)).collect::<Result<Vec<_>>>()?;
    let self_dest: Vec<Option<usize>> = origins
        .iter()
        .map(|id| destinations.binary_search(id).ok())
        .collect();

    let d = destinations.len();
    let o = origins.len();
    let mut values = vec![f64::INFINITY; slots.count() * o * d];
    if d > 0 {
        values.par_chunks_mut(d).enumerate().for_each(|(row, out)| {
            let (s, oi) = (row / o, row % o);
            let labels = one_to_all_td(network, origin_nodes[oi], slots.slot(s).instant);
            for (cell, &node) in out.iter_mut().zip(&dest_nodes) {
                *cell = labels.elapsed(node);
            }
            if let Some(di) = self_dest[oi] {
                out[di] = 0.0;
            }
        });
    }
    CostCube::new(*slots, origins, destinations, values)
}

/// Center-zone travel times extracted from a forward cube.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterTimes {
    /// `[slot][origin]`: departing each internal origin for the center.
    pub to_center: Vec<Vec<f64>>,
    /// `[slot][destination]`: departing the center for each destination.
    pub from_center: Vec<Vec<f64>>,
}

pub fn to_center_column(cube: &CostCube, center_zone: u32) -> Result<CenterTimes> {
    let missing = || Error::invalid("center zone", format!("zone {center_zone} not in cost cube"));
    let co = cube.origin_pos(center_zone).ok_or_else(missing)?;
    let cd = cube.dest_pos(center_zone).ok_or_else(missing)?;
    let slots = cube.slots().count();
    let to_center = (0..slots)
        .map(|s| (0..cube.origins().len()).map(|o| cube.get(s, o, cd)).collect())
        .collect();
    let from_center = (0..slots).map(|s| cube.row(s, co).to_vec()).collect();
    Ok(CenterTimes {
        to_center,
        from_center,
    })
}

/// Minutes since midnight of slot `index` as a clock label.
pub fn slot_label(slots: &SlotSchedule, index: usize) -> String {
    slots.slot(index).instant.label()
}
