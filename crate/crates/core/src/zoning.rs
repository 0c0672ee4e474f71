//! Square origin/destination zones, centroid snapping and the external
//! border buffer.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use crate::csvio::{create, finish, open_csv};
use crate::error::{Error, Result};
use crate::geometry::{contains, mean_point, Point};
use crate::network::{Instant, RoadNetwork};
use crate::routing::static_distances;

pub const DEFAULT_CELL_SIZE_M: f64 = 2000.0;
pub const DEFAULT_BUFFER_MINUTES: f64 = 15.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub zone_id: u32,
    pub row: u32,
    pub col: u32,
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub snap_node: Option<u64>,
    pub opportunities: f64,
    /// Outside the study area: a destination only.
    pub is_external: bool,
}

impl Zone {
    pub fn centroid(&self) -> Point {
        Point::new(self.centroid_x, self.centroid_y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        BBox {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> Point {
        Point::new((self.min_x + self.max_x) / 2.0, (self.min_y + self.max_y) / 2.0)
    }
}

/// Where zone opportunity mass comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum OpportunitySource {
    Constant(f64),
    /// Keyed by (row, col); cells without an entry get zero.
    ByCell(BTreeMap<(u32, u32), f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneGrid {
    cell_size_m: f64,
    zones: Vec<Zone>,
    center_zone_id: Option<u32>,
}

impl ZoneGrid {
    pub fn from_zones(cell_size_m: f64, mut zones: Vec<Zone>) -> Result<Self> {
        if !(cell_size_m.is_finite() && cell_size_m > 0.0) {
            return Err(Error::invalid("cell size", format!("{cell_size_m} must be > 0")));
        }
        zones.sort_by_key(|z| z.zone_id);
        for w in zones.windows(2) {
            if w[0].zone_id == w[1].zone_id {
                return Err(Error::invalid(format!("zone {}", w[0].zone_id), "duplicate zone id"));
            }
        }
        for z in &zones {
            if !(z.opportunities.is_finite() && z.opportunities >= 0.0) {
                return Err(Error::invalid(
                    format!("zone {}", z.zone_id),
                    format!("opportunities {} must be a non-negative number", z.opportunities),
                ));
            }
            if !z.centroid().is_finite() {
                return Err(Error::invalid(format!("zone {}", z.zone_id), "non-finite centroid"));
            }
        }
        Ok(ZoneGrid {
            cell_size_m,
            zones,
            center_zone_id: None,
        })
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn zone(&self, id: u32) -> Option<&Zone> {
        self.zones
            .binary_search_by_key(&id, |z| z.zone_id)
            .ok()
            .map(|i| &self.zones[i])
    }

    pub fn internal(&self) -> impl Iterator<Item = &Zone> {
        self.zones.iter().filter(|z| !z.is_external)
    }

    pub fn internal_count(&self) -> usize {
        self.internal().count()
    }

    /// Cost-cube origin axis: internal zone ids, ascending.
    pub fn origin_ids(&self) -> Vec<u32> {
        self.internal().map(|z| z.zone_id).collect()
    }

    /// Cost-cube destination axis: every zone id, ascending.
    pub fn destination_ids(&self) -> Vec<u32> {
        self.zones.iter().map(|z| z.zone_id).collect()
    }

    /// Opportunities aligned with [`destination_ids`](Self::destination_ids).
    pub fn destination_opportunities(&self) -> Vec<f64> {
        self.zones.iter().map(|z| z.opportunities).collect()
    }

    pub fn center_zone_id(&self) -> Option<u32> {
        self.center_zone_id
    }

    pub fn center_zone(&self) -> Result<&Zone> {
        let id = self
            .center_zone_id
            .ok_or_else(|| Error::invalid("center zone", "no center zone set"))?;
        self.zone(id)
            .ok_or_else(|| Error::invalid("center zone", format!("zone {id} not in grid")))
    }

    pub fn with_center(mut self, id: u32) -> Result<Self> {
        match self.zone(id) {
            None => Err(Error::invalid("center zone", format!("zone {id} not in grid"))),
            Some(z) if z.is_external => Err(Error::invalid(
                "center zone",
                format!("zone {id} is external"),
            )),
            Some(_) => {
                self.center_zone_id = Some(id);
                Ok(self)
            }
        }
    }

    /// Centers on the internal zone closest to the mean internal centroid,
    /// lowest id on ties.
    pub fn with_auto_center(self) -> Result<Self> {
        let centroids: Vec<Point> = self.internal().map(Zone::centroid).collect();
        let mean = mean_point(&centroids)
            .ok_or_else(|| Error::invalid("center zone", "grid has no internal zones"))?;
        let id = self
            .internal()
            .min_by(|a, b| {
                a.centroid()
                    .dist(mean)
                    .total_cmp(&b.centroid().dist(mean))
                    .then(a.zone_id.cmp(&b.zone_id))
            })
            .map(|z| z.zone_id)
            .expect("non-empty");
        self.with_center(id)
    }

    /// Corners of the zone's cell, counter-clockwise from the lower left.
    pub fn cell_corners(&self, zone: &Zone) -> [Point; 4] {
        let h = self.cell_size_m / 2.0;
        let (x, y) = (zone.centroid_x, zone.centroid_y);
        [
            Point::new(x - h, y - h),
            Point::new(x + h, y - h),
            Point::new(x + h, y + h),
            Point::new(x - h, y + h),
        ]
    }

    fn retain(mut self, keep: impl Fn(&Zone) -> bool) -> Self {
        self.zones.retain(|z| keep(z));
        if let Some(c) = self.center_zone_id {
            if self.zone(c).is_none() {
                self.center_zone_id = None;
            }
        }
        self
    }

    /// Writes `zones.csv`. With `with_snap`, a trailing `snap_node` column is
    /// added.
    pub fn write_csv(&self, path: &Path, with_snap: bool) -> Result<()> {
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        write!(w, "zone_id,row,col,centroid_x,centroid_y,opportunities,is_external").map_err(io)?;
        writeln!(w, "{}", if with_snap { ",snap_node" } else { "" }).map_err(io)?;
        for z in &self.zones {
            write!(
                w,
                "{},{},{},{},{},{},{}",
                z.zone_id,
                z.row,
                z.col,
                z.centroid_x,
                z.centroid_y,
                z.opportunities,
                z.is_external
            )
            .map_err(io)?;
            if with_snap {
                let snap = z.snap_node.map(|n| n.to_string()).unwrap_or_default();
                write!(w, ",{snap}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        finish(path, w)
    }

    pub fn read_csv(path: &Path, cell_size_m: f64) -> Result<Self> {
        let mut csv = open_csv(
            path,
            &["zone_id", "row", "col", "centroid_x", "centroid_y", "opportunities", "is_external"],
        )?;
        let path = csv.path().to_owned();
        let mut zones = Vec::new();
        for row in csv.rows() {
            let row = row?;
            if row.record.len() != 7 && row.record.len() != 8 {
                row.expect_len(&path, 7)?;
            }
            let external = row.str(&path, 6, "is_external")?;
            let is_external = match external {
                "true" | "1" => true,
                "false" | "0" => false,
                other => {
                    return Err(Error::parse(&path, row.line, format!("is_external {other:?}")));
                }
            };
            let snap_node = match row.record.get(7) {
                Some(s) if !s.is_empty() => Some(row.parse(&path, 7, "snap_node")?),
                _ => None,
            };
            zones.push(Zone {
                zone_id: row.parse(&path, 0, "zone_id")?,
                row: row.parse(&path, 1, "row")?,
                col: row.parse(&path, 2, "col")?,
                centroid_x: row.parse(&path, 3, "centroid_x")?,
                centroid_y: row.parse(&path, 4, "centroid_y")?,
                snap_node,
                opportunities: row.parse(&path, 5, "opportunities")?,
                is_external,
            });
        }
        ZoneGrid::from_zones(cell_size_m, zones)
    }
}

/// Tiles `bbox` with square cells whose origin is aligned to multiples of
/// the cell size. Zone ids are row-major from the lower-left cell. All zones
/// start internal; see [`apply_mask`].
pub fn build_grid(
    bbox: BBox,
    cell_size_m: Option<f64>,
    opportunities: &OpportunitySource,
) -> Result<ZoneGrid> {
    let cell = cell_size_m.unwrap_or(DEFAULT_CELL_SIZE_M);
    if !(cell.is_finite() && cell > 0.0) {
        return Err(Error::invalid("cell size", format!("{cell} must be > 0")));
    }
    if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
        return Err(Error::invalid("bbox", "empty bounding box"));
    }
    let x0 = (bbox.min_x / cell).floor() * cell;
    let y0 = (bbox.min_y / cell).floor() * cell;
    let cols = ((bbox.max_x - x0) / cell).ceil() as u32;
    let rows = ((bbox.max_y - y0) / cell).ceil() as u32;
    let mut zones = Vec::with_capacity((rows * cols) as usize);
    for row in 0..rows {
        for col in 0..cols {
            let opportunities = match opportunities {
                OpportunitySource::Constant(v) => *v,
                OpportunitySource::ByCell(map) => map.get(&(row, col)).copied().unwrap_or(0.0),
            };
            zones.push(Zone {
                zone_id: row * cols + col,
                row,
                col,
                centroid_x: x0 + (f64::from(col) + 0.5) * cell,
                centroid_y: y0 + (f64::from(row) + 0.5) * cell,
                snap_node: None,
                opportunities,
                is_external: false,
            });
        }
    }
    let grid = ZoneGrid::from_zones(cell, zones)?;
    let center = bbox.center();
    let id = grid
        .zones
        .iter()
        .min_by(|a, b| {
            a.centroid()
                .dist(center)
                .total_cmp(&b.centroid().dist(center))
                .then(a.zone_id.cmp(&b.zone_id))
        })
        .map(|z| z.zone_id)
        .expect("grid is non-empty");
    grid.with_center(id)
}

/// Flags zones whose centroid lies outside the study-area polygon as
/// external. The center is re-chosen if it falls outside.
pub fn apply_mask(mut grid: ZoneGrid, mask: &[Point]) -> Result<ZoneGrid> {
    for z in &mut grid.zones {
        z.is_external = !contains(mask, z.centroid());
    }
    if grid.internal_count() == 0 {
        return Err(Error::invalid("mask", "no zone centroid falls inside the study area"));
    }
    match grid.center_zone_id {
        Some(c) if !grid.zone(c).is_some_and(|z| z.is_external) => Ok(grid),
        _ => grid.with_auto_center(),
    }
}

pub fn read_mask(path: &Path) -> Result<Vec<Point>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut ring = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (Some(xs), Some(ys), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, i as u64 + 1, "expected x,y"));
        };
        match (xs.parse::<f64>(), ys.parse::<f64>()) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => ring.push(Point::new(x, y)),
            _ if i == 0 => {} // header
            _ => return Err(Error::parse(path, i as u64 + 1, format!("bad vertex {line:?}"))),
        }
    }
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(Error::invalid(path.display().to_string(), "mask polygon needs ≥ 3 vertices"));
    }
    Ok(ring)
}

/// Writes the ring closed (first vertex repeated).
pub fn write_mask(ring: &[Point], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "x,y").map_err(io)?;
    for p in ring.iter().chain(ring.first()) {
        writeln!(w, "{},{}", p.x, p.y).map_err(io)?;
    }
    finish(path, w)
}

#[derive(Debug, Clone)]
pub struct SnapOutcome {
    pub grid: ZoneGrid,
    /// Zones without a node within the snap radius.
    pub dropped: Vec<u32>,
}

/// Attaches each zone to its nearest network node (lowest node id on ties).
/// Zones farther than `max_radius_m` (default twice the cell size) from
/// every node are dropped.
pub fn snap_centroids(
    grid: ZoneGrid,
    network: &RoadNetwork,
    max_radius_m: Option<f64>,
) -> Result<SnapOutcome> {
    if network.node_count() == 0 {
        return Err(Error::invalid("network", "cannot snap zones to an empty network"));
    }
    let radius = max_radius_m.unwrap_or(2.0 * grid.cell_size_m);
    let nodes = network.nodes();
    let nearest: Vec<(u64, f64)> = grid
        .zones
        .par_iter()
        .map(|z| {
            let c = z.centroid();
            nodes
                .iter()
                .map(|n| (n.id, c.dist(Point::new(n.x, n.y))))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .expect("network is non-empty")
        })
        .collect();

    let mut grid = grid;
    let mut dropped = Vec::new();
    for (z, (node, d)) in grid.zones.iter_mut().zip(nearest) {
        if d <= radius {
            z.snap_node = Some(node);
        } else {
            z.snap_node = None;
            dropped.push(z.zone_id);
        }
    }
    if !dropped.is_empty() {
        warn!(
            "dropped {} zone(s) with no node within {radius} m: {:?}",
            dropped.len(),
            dropped
        );
    }
    let grid = grid.retain(|z| z.snap_node.is_some());
    if grid.zones.is_empty() {
        return Err(Error::invalid("zones", "every zone is beyond the snap radius"));
    }
    Ok(SnapOutcome { grid, dropped })
}

/// Keeps an external zone only if some internal zone reaches it within
/// `threshold_min` minutes (default 15) at the speeds in force at midnight.
pub fn mark_external_buffer(
    grid: ZoneGrid,
    network: &RoadNetwork,
    threshold_min: Option<f64>,
) -> ZoneGrid {
    let threshold = threshold_min.unwrap_or(DEFAULT_BUFFER_MINUTES);
    let node_of = |z: &Zone| z.snap_node.and_then(|n| network.node_idx(n));
    let sources: Vec<usize> = grid.internal().filter_map(node_of).collect();
    let midnight = Instant::from_seconds(0.0);
    let dist = static_distances(network, &sources, |e| network.edge_traversal_time(e, midnight));
    let kept: HashSet<u32> = grid
        .zones
        .iter()
        .filter(|z| !z.is_external || node_of(z).is_some_and(|n| dist[n] <= threshold))
        .map(|z| z.zone_id)
        .collect();
    grid.retain(|z| kept.contains(&z.zone_id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::test_util::*;
    use crate::network::Weekday;
    use proptest::prelude::*;

    fn constant() -> OpportunitySource {
        OpportunitySource::Constant(1.0)
    }

    #[test]
    fn grid_counts() {
        let g = build_grid(BBox::new(0.0, 0.0, 4000.0, 4000.0), Some(2000.0), &constant()).unwrap();
        assert_eq!(g.zones().len(), 4);
        let g = build_grid(BBox::new(0.0, 0.0, 4100.0, 4000.0), Some(2000.0), &constant()).unwrap();
        assert_eq!(g.zones().len(), 6);
        let g = build_grid(BBox::new(0.0, 0.0, 4000.0, 4000.0), None, &constant()).unwrap();
        assert_eq!(g.cell_size_m(), 2000.0);
        assert!(build_grid(BBox::new(0.0, 0.0, 0.0, 4000.0), None, &constant()).is_err());
        assert!(build_grid(BBox::new(0.0, 0.0, 1.0, 1.0), Some(0.0), &constant()).is_err());
    }

    #[test]
    fn grid_origin_is_aligned() {
        let g = build_grid(BBox::new(2500.0, 100.0, 5000.0, 1900.0), Some(2000.0), &constant()).unwrap();
        // x from 2000 to 6000, y from 0 to 2000
        assert_eq!(g.zones().len(), 2);
        assert_eq!(g.zones()[0].centroid(), Point::new(3000.0, 1000.0));
    }

    #[test]
    fn opportunities_by_cell() {
        let mut m = BTreeMap::new();
        m.insert((0, 1), 7.5);
        let g = build_grid(BBox::new(0.0, 0.0, 4000.0, 2000.0), None, &OpportunitySource::ByCell(m)).unwrap();
        assert_eq!(g.destination_opportunities(), vec![0.0, 7.5]);
    }

    fn grid_of(points: &[(u32, f64, f64, bool)]) -> ZoneGrid {
        ZoneGrid::from_zones(
            2000.0,
            points
                .iter()
                .map(|&(id, x, y, ext)| Zone {
                    zone_id: id,
                    row: 0,
                    col: id,
                    centroid_x: x,
                    centroid_y: y,
                    snap_node: None,
                    opportunities: 1.0,
                    is_external: ext,
                })
                .collect(),
        )
        .unwrap()
    }

    fn net(nodes: Vec<crate::network::Node>, edges: Vec<crate::network::Edge>) -> RoadNetwork {
        RoadNetwork::new(Weekday::Wed, nodes, edges, vec![]).unwrap()
    }

    #[test]
    fn snap_rules() {
        let n = net(vec![node(5, 0.0, 0.0), node(3, 10.0, 0.0), node(4, -10.0, 0.0)], vec![]);
        let g = grid_of(&[(0, 0.0, 0.0, false), (1, 0.0, 50.0, false)]);
        let out = snap_centroids(g, &n, None).unwrap();
        assert_eq!(out.grid.zone(0).unwrap().snap_node, Some(5));
        // equidistant from 3 and 4
        let g = grid_of(&[(0, 0.0, 1.0, false)]);
        let n = net(vec![node(4, -1.0, 0.0), node(3, 1.0, 0.0)], vec![]);
        assert_eq!(snap_centroids(g, &n, None).unwrap().grid.zone(0).unwrap().snap_node, Some(3));
    }

    #[test]
    fn snap_drops_far_zones() {
        let n = net(vec![node(1, 0.0, 0.0)], vec![]);
        let g = grid_of(&[(0, 0.0, 0.0, false), (1, 5000.0, 0.0, false)]);
        let out = snap_centroids(g, &n, None).unwrap();
        assert_eq!(out.dropped, vec![1]);
        assert_eq!(out.grid.zones().len(), 1);
        let g = grid_of(&[(1, 5000.0, 0.0, false)]);
        assert!(snap_centroids(g, &n, None).is_err());
        let g = grid_of(&[(1, 5000.0, 0.0, false)]);
        assert!(snap_centroids(g, &n, Some(6000.0)).is_ok());
    }

    fn buffer_fixture() -> (ZoneGrid, RoadNetwork) {
        // internal at node 1; external zones at nodes 2 (2 min) and 3 (30 min)
        let n = net(
            vec![node(1, 0.0, 0.0), node(2, 2000.0, 0.0), node(3, 4000.0, 0.0)],
            vec![
                edge(1, 1, 2, 2000.0, 60.0, None),
                edge(2, 2, 3, 28_000.0, 60.0, None),
            ],
        );
        let g = grid_of(&[(0, 0.0, 0.0, false), (1, 2000.0, 0.0, true), (2, 4000.0, 0.0, true)]);
        let g = snap_centroids(g, &n, None).unwrap().grid;
        (g, n)
    }

    #[test]
    fn buffer_keeps_near_and_drops_far() {
        let (g, n) = buffer_fixture();
        let kept = mark_external_buffer(g.clone(), &n, None);
        assert_eq!(kept.destination_ids(), vec![0, 1]);
        assert_eq!(kept.internal_count(), 1);
        let all = mark_external_buffer(g, &n, Some(31.0));
        assert_eq!(all.destination_ids(), vec![0, 1, 2]);
    }

    #[test]
    fn center_validation() {
        let g = grid_of(&[(0, 0.0, 0.0, false), (1, 10.0, 0.0, true)]);
        assert!(g.clone().with_center(1).is_err());
        assert!(g.clone().with_center(9).is_err());
        assert_eq!(g.with_auto_center().unwrap().center_zone_id(), Some(0));
    }

    #[test]
    fn mask_marks_external() {
        let g = build_grid(BBox::new(0.0, 0.0, 6000.0, 2000.0), None, &constant()).unwrap();
        let mask = [
            Point::new(0.0, 0.0),
            Point::new(4000.0, 0.0),
            Point::new(4000.0, 2000.0),
            Point::new(0.0, 2000.0),
        ];
        let g = apply_mask(g, &mask).unwrap();
        assert_eq!(g.origin_ids(), vec![0, 1]);
        assert!(g.zone(2).unwrap().is_external);
        assert!(!g.center_zone().unwrap().is_external);
    }

    #[test]
    fn zones_and_mask_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (g, _) = buffer_fixture();
        let p = dir.path().join("zones.csv");
        g.write_csv(&p, true).unwrap();
        let mut back = ZoneGrid::read_csv(&p, 2000.0).unwrap();
        back.center_zone_id = g.center_zone_id;
        assert_eq!(back, g);
        g.write_csv(&p, false).unwrap();
        assert!(ZoneGrid::read_csv(&p, 2000.0).unwrap().zones().iter().all(|z| z.snap_node.is_none()));

        let ring = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 2.0)];
        let mp = dir.path().join("mask.csv");
        write_mask(&ring, &mp).unwrap();
        assert_eq!(read_mask(&mp).unwrap(), ring);
    }

    proptest! {
        #[test]
        fn buffer_is_monotone_in_threshold(a in 0.0f64..60.0, b in 0.0f64..60.0, l1 in 100.0f64..40_000.0, l2 in 100.0f64..40_000.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let n = net(
                vec![node(1, 0.0, 0.0), node(2, 2000.0, 0.0), node(3, 4000.0, 0.0)],
                vec![edge(1, 1, 2, l1, 60.0, None), edge(2, 2, 3, l2, 60.0, None)],
            );
            let g = grid_of(&[(0, 0.0, 0.0, false), (1, 2000.0, 0.0, true), (2, 4000.0, 0.0, true)]);
            let g = snap_centroids(g, &n, None).unwrap().grid;
            let small: HashSet<u32> = mark_external_buffer(g.clone(), &n, Some(lo)).destination_ids().into_iter().collect();
            let large: HashSet<u32> = mark_external_buffer(g, &n, Some(hi)).destination_ids().into_iter().collect();
            prop_assert!(small.is_subset(&large));
            prop_assert!(small.contains(&0));
        }
    }
}
