//! Test-only oracles written from the definitions, sharing no code with the
//! library's search or FIFO tables.

#![allow(dead_code)]

use rand::Rng;
use tdaccess::network::{Edge, Node, RoadNetwork, SpeedProfile, Weekday};
use tdaccess::routing::SlotSchedule;
use tdaccess::zoning::{Zone, ZoneGrid};

pub const DAY: f64 = 1440.0;
pub const BIN: f64 = 5.0;

/// exp(x) by Taylor series on a range-reduced argument.
pub fn taylor_exp(x: f64) -> f64 {
    let mut halvings = 0;
    let mut r = x;
    while r.abs() > 0.01 {
        r /= 2.0;
        halvings += 1;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        term *= r / k as f64;
        sum += term;
    }
    for _ in 0..halvings {
        sum *= sum;
    }
    sum
}

fn bin_value(net: &RoadNetwork, edge: usize, bin: usize) -> f64 {
    let e = &net.edges()[edge];
    match &e.profile_id {
        Some(id) => net.profiles().iter().find(|p| p.id() == id).unwrap().bins()[bin],
        None => 1.0,
    }
}

/// Frozen-entry minutes for entering during `bin`.
pub fn frozen_minutes(net: &RoadNetwork, edge: usize, bin: usize) -> f64 {
    let e = &net.edges()[edge];
    e.length_m / 1000.0 / (e.freeflow_kmh * bin_value(net, edge, bin)) * 60.0
}

/// Earliest absolute arrival (minutes) when reaching the tail of `edge` at
/// absolute time `t`: enter now, or wait for any later bin start within
/// the next day and enter then.
pub fn earliest_arrival(net: &RoadNetwork, edge: usize, t: f64) -> f64 {
    let day_start = (t / DAY).floor() * DAY;
    let local = t - day_start;
    let k = ((local / BIN).floor() as usize).min(287);
    let mut best = t + frozen_minutes(net, edge, k);
    for j in 1..=288 {
        let start = day_start + (k + j) as f64 * BIN;
        let arrive = start + frozen_minutes(net, edge, (k + j) % 288);
        best = best.min(arrive);
    }
    best
}

/// Minimum elapsed minutes over every simple path from `from` to each node
/// (indices), departing at `depart` minutes.
pub fn enumerate_paths(net: &RoadNetwork, from: usize, depart: f64) -> Vec<f64> {
    let n = net.node_count();
    let mut best = vec![f64::INFINITY; n];
    let mut on_path = vec![false; n];
    fn walk(net: &RoadNetwork, v: usize, t: f64, depart: f64, on_path: &mut [bool], best: &mut [f64]) {
        best[v] = best[v].min(t - depart);
        on_path[v] = true;
        for e in net.out_edges(v) {
            let w = net.edge_head(e);
            if !on_path[w] {
                walk(net, w, earliest_arrival(net, e, t), depart, on_path, best);
            }
        }
        on_path[v] = false;
    }
    walk(net, from, depart, depart, &mut on_path, &mut best);
    best
}

/// One internal zone per node, at the node, snapped to it.
pub fn zone_per_node(net: &RoadNetwork, opportunities: impl Fn(usize) -> f64) -> ZoneGrid {
    let zones = net
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| Zone {
            zone_id: i as u32,
            row: 0,
            col: i as u32,
            centroid_x: n.x,
            centroid_y: n.y,
            snap_node: Some(n.id),
            opportunities: opportunities(i),
            is_external: false,
        })
        .collect();
    ZoneGrid::from_zones(10.0, zones).unwrap()
}

/// Oracle cube for [`zone_per_node`] grids, slot-major like the library's.
pub fn oracle_cube(net: &RoadNetwork, slots: &SlotSchedule) -> Vec<f64> {
    let n = net.node_count();
    let mut out = Vec::with_capacity(slots.count() * n * n);
    for s in 0..slots.count() {
        let depart = (s as f64) * DAY / slots.count() as f64;
        for o in 0..n {
            let mut row = enumerate_paths(net, o, depart);
            row[o] = 0.0;
            out.extend(row);
        }
    }
    out
}

/// Random digraph with at most `max_nodes` nodes and `max_edges` edges and
/// two-level profiles whose switch lands shortly after a slot start.
pub fn random_network(rng: &mut impl Rng, max_nodes: usize, max_edges: usize, slot_count: usize) -> RoadNetwork {
    let n = rng.gen_range(2..=max_nodes);
    let nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            id: i as u64 + 1,
            x: rng.gen_range(0.0..5000.0),
            y: rng.gen_range(0.0..5000.0),
        })
        .collect();
    let slot_bins = 288 / slot_count;
    let profile_count = rng.gen_range(1..=4);
    let profiles: Vec<SpeedProfile> = (0..profile_count)
        .map(|p| {
            let switch = slot_bins * rng.gen_range(0..slot_count) + rng.gen_range(0..4);
            let (a, b) = (rng.gen_range(0.1..1.5), rng.gen_range(0.1..1.5));
            let bins = (0..288).map(|k| if k < switch { a } else { b }).collect();
            SpeedProfile::new(format!("p{p}"), Weekday::Wed, bins).unwrap()
        })
        .collect();
    let m = rng.gen_range(1..=max_edges);
    let edges: Vec<Edge> = (0..m)
        .map(|i| {
            let from = rng.gen_range(0..n);
            let mut to = rng.gen_range(0..n - 1);
            if to >= from {
                to += 1;
            }
            Edge {
                id: i as u64 + 1,
                from_node: from as u64 + 1,
                to_node: to as u64 + 1,
                length_m: rng.gen_range(200.0..8000.0),
                frc: rng.gen_range(0..=6),
                freeflow_kmh: rng.gen_range(20.0..110.0),
                profile_id: if rng.gen_bool(0.8) {
                    Some(format!("p{}", rng.gen_range(0..profile_count)))
                } else {
                    None
                },
            }
        })
        .collect();
    RoadNetwork::new(Weekday::Wed, nodes, edges, profiles).unwrap()
}
