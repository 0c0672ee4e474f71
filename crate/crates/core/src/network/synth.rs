//! Deterministic synthetic city: a jittered lattice road network with
//! arterial corridors, peaked congestion profiles, a zone grid with
//! opportunity mass, a circular study area and reference layers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{write_network, Edge, NetworkFiles, Node, RoadNetwork, SpeedProfile, Weekday, BIN_COUNT, BIN_MINUTES};
use crate::cartogram::{write_layers, LayerPart, PartKind, ReferenceLayer};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::zoning::{apply_mask, build_grid, write_mask, BBox, OpportunitySource, ZoneGrid};

/// One congestion wave. The slowdown is a raised cosine reaching `depth`
/// (fraction of free-flow speed lost) exactly at `center_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSpec {
    pub center_min: f64,
    pub half_width_min: f64,
    pub depth: f64,
}

impl PeakSpec {
    fn shape(&self, minute: f64) -> f64 {
        let d = (minute - self.center_min).abs();
        if d >= self.half_width_min {
            0.0
        } else {
            0.5 * (1.0 + (PI * d / self.half_width_min).cos())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub node_spacing_m: f64,
    /// Node position noise as a fraction of the spacing.
    pub jitter: f64,
    /// Every n-th lattice row/column is an arterial corridor.
    pub arterial_every: usize,
    /// Probability of keeping a local link that is not needed for
    /// connectivity.
    pub local_keep: f64,
    /// Probability that a local directed edge carries a profile.
    pub profiled_share: f64,
    pub profile_variants: usize,
    pub morning: PeakSpec,
    pub evening: PeakSpec,
    pub cell_size_m: f64,
    pub study_radius_m: f64,
    /// Opportunities in the densest cell, before noise.
    pub opportunity_scale: f64,
    pub weekday: Weekday,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            width_m: 22_000.0,
            height_m: 22_000.0,
            node_spacing_m: 500.0,
            jitter: 0.2,
            arterial_every: 6,
            local_keep: 0.35,
            profiled_share: 0.8,
            profile_variants: 8,
            morning: PeakSpec {
                center_min: 480.0,
                half_width_min: 90.0,
                depth: 0.45,
            },
            evening: PeakSpec {
                center_min: 1050.0,
                half_width_min: 120.0,
                depth: 0.4,
            },
            cell_size_m: 2000.0,
            study_radius_m: 8000.0,
            opportunity_scale: 10_000.0,
            weekday: Weekday::Wed,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(field, msg));
        if !(self.width_m > 0.0 && self.height_m > 0.0) {
            return bad("synth_width_m", "extent must be positive".into());
        }
        if !(self.node_spacing_m > 0.0)
            || self.width_m / self.node_spacing_m < 1.0
            || self.height_m / self.node_spacing_m < 1.0
        {
            return bad("synth_node_spacing_m", "spacing leaves fewer than 2×2 nodes".into());
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return bad("synth_jitter", format!("{} not in [0, 0.5)", self.jitter));
        }
        if self.arterial_every == 0 {
            return bad("synth_arterial_every", "must be ≥ 1".into());
        }
        for (f, v) in [("synth_local_keep", self.local_keep), ("synth_profiled_share", self.profiled_share)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(f, format!("{v} not in [0, 1]"));
            }
        }
        if self.profile_variants == 0 {
            return bad("synth_profile_variants", "must be ≥ 1".into());
        }
        for (f, p) in [("synth_morning", self.morning), ("synth_evening", self.evening)] {
            if !(0.0..=0.95).contains(&p.depth) {
                return bad(&format!("{f}_depth"), format!("{} not in [0, 0.95]", p.depth));
            }
            if !(p.half_width_min > 0.0) {
                return bad(&format!("{f}_half_width_min"), "must be > 0".into());
            }
        }
        if !(self.study_radius_m > 0.0) {
            return bad("synth_study_radius_m", "no zones inside a zero-radius study area".into());
        }
        if !(self.opportunity_scale >= 0.0) {
            return bad("synth_opportunity_scale", "must be ≥ 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub network: RoadNetwork,
    pub grid: ZoneGrid,
    pub layers: Vec<ReferenceLayer>,
    pub mask: Vec<Point>,
}

/// Output locations for [`write_synthetic`].
#[derive(Debug, Clone)]
pub struct DatasetFiles {
    pub network: NetworkFiles,
    pub zones: PathBuf,
    pub layers: PathBuf,
    pub mask: PathBuf,
}

struct Link {
    a: usize,
    b: usize,
    frc: u8,
    kmh: f64,
    corridor: bool,
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = (spec.width_m / spec.node_spacing_m).floor() as usize + 1;
    let rows = (spec.height_m / spec.node_spacing_m).floor() as usize + 1;
    let center = Point::new(spec.width_m / 2.0, spec.height_m / 2.0);

    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let edge_node = r == 0 || c == 0 || r == rows - 1 || c == cols - 1;
            let (jx, jy) = if edge_node || spec.jitter == 0.0 {
                (0.0, 0.0)
            } else {
                let j = spec.jitter * spec.node_spacing_m;
                (rng.gen_range(-j..=j), rng.gen_range(-j..=j))
            };
            nodes.push(Node {
                id: (r * cols + c + 1) as u64,
                x: c as f64 * spec.node_spacing_m + jx,
                y: r as f64 * spec.node_spacing_m + jy,
            });
        }
    }

    let (mid_r, mid_c) = (rows / 2, cols / 2);
    let mut links = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            // horizontal link along row r, vertical along column c
            let mut push = |w: usize, line: usize, mid: usize| {
                let (frc, kmh, corridor) = if line == mid {
                    (1, 90.0, true)
                } else if line % spec.arterial_every == 0 {
                    (3, 60.0, true)
                } else {
                    (0, 0.0, false)
                };
                links.push(Link {
                    a: v,
                    b: w,
                    frc,
                    kmh,
                    corridor,
                });
            };
            if c + 1 < cols {
                push(v + 1, r, mid_r);
            }
            if r + 1 < rows {
                push(v + cols, c, mid_c);
            }
        }
    }

    // corridors always, then a random spanning forest over local links,
    // then extra local links
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    let mut keep = vec![false; links.len()];
    for (i, l) in links.iter().enumerate().filter(|(_, l)| l.corridor) {
        keep[i] = true;
        let (ra, rb) = (find(&mut parent, l.a), find(&mut parent, l.b));
        parent[ra] = rb;
    }
    let mut local: Vec<usize> = (0..links.len()).filter(|&i| !links[i].corridor).collect();
    local.shuffle(&mut rng);
    for &i in &local {
        let (ra, rb) = (find(&mut parent, links[i].a), find(&mut parent, links[i].b));
        if ra != rb {
            parent[ra] = rb;
            keep[i] = true;
        } else if rng.gen_bool(spec.local_keep) {
            keep[i] = true;
        }
    }

    let variants = spec.profile_variants;
    let profiles = build_profiles(spec);
    let mut edges = Vec::new();
    for (i, l) in links.iter_mut().enumerate() {
        if !keep[i] {
            continue;
        }
        if !l.corridor {
            let (frc, kmh) = if rng.gen_bool(0.5) { (5, 40.0) } else { (6, 30.0) };
            l.frc = frc;
            l.kmh = kmh;
        }
        let (na, nb) = (&nodes[l.a], &nodes[l.b]);
        let straight = Point::new(na.x, na.y).dist(Point::new(nb.x, nb.y));
        let length = (straight * rng.gen_range(1.0..1.15) * 10.0).round() / 10.0;
        for (from, to) in [(na.id, nb.id), (nb.id, na.id)] {
            let profile = if l.corridor {
                Some(rng.gen_range(0..variants.min(2)))
            } else if rng.gen_bool(spec.profiled_share) {
                Some(rng.gen_range(0..variants))
            } else {
                None
            };
            edges.push(Edge {
                id: edges.len() as u64 + 1,
                from_node: from,
                to_node: to,
                length_m: length.max(1.0),
                frc: l.frc,
                freeflow_kmh: l.kmh,
                profile_id: profile.map(profile_name),
            });
        }
    }
    let network = RoadNetwork::new(spec.weekday, nodes, edges, profiles)?;

    let mask = circle(center, spec.study_radius_m, 32);
    let bbox = BBox::new(0.0, 0.0, spec.width_m, spec.height_m);
    let opportunities = cell_opportunities(spec, bbox, center, &mut rng)?;
    let grid = build_grid(bbox, Some(spec.cell_size_m), &opportunities)?;
    let grid = apply_mask(grid, &mask)?;
    let grid = grid.with_auto_center()?;
    let downtown = grid.center_zone()?.centroid();
    let layers = reference_layers(spec, &mask, center, downtown);
    Ok(SyntheticDataset {
        network,
        grid,
        layers,
        mask,
    })
}

fn profile_name(v: usize) -> String {
    format!("hsp{v:02}")
}

/// Variant 0 carries the full peak depth at the nominal peak times; later
/// variants are shallower and shifted by whole bins.
fn build_profiles(spec: &SyntheticSpec) -> Vec<SpeedProfile> {
    (0..spec.profile_variants)
        .map(|v| {
            let intensity = 1.0 - 0.6 * v as f64 / spec.profile_variants as f64;
            let shift = if v == 0 { 0.0 } else { BIN_MINUTES * ((v % 5) as f64 - 2.0) };
            let morning = PeakSpec {
                center_min: spec.morning.center_min + shift,
                ..spec.morning
            };
            let evening = PeakSpec {
                center_min: spec.evening.center_min - shift,
                ..spec.evening
            };
            let bins = (0..BIN_COUNT)
                .map(|k| {
                    let t = k as f64 * BIN_MINUTES;
                    let slow = intensity
                        * (morning.depth * morning.shape(t) + evening.depth * evening.shape(t));
                    (1.0 - slow).max(0.05)
                })
                .collect();
            SpeedProfile::new(profile_name(v), spec.weekday, bins).expect("bins within (0, 1]")
        })
        .collect()
}

fn cell_opportunities(
    spec: &SyntheticSpec,
    bbox: BBox,
    center: Point,
    rng: &mut ChaCha8Rng,
) -> Result<OpportunitySource> {
    let template = build_grid(bbox, Some(spec.cell_size_m), &OpportunitySource::Constant(0.0))?;
    let decay = spec.study_radius_m.max(1.0);
    let map: BTreeMap<(u32, u32), f64> = template
        .zones()
        .iter()
        .map(|z| {
            let d = z.centroid().dist(center);
            let v = spec.opportunity_scale * (-d / decay).exp() * rng.gen_range(0.5..1.5);
            ((z.row, z.col), v.round())
        })
        .collect();
    Ok(OpportunitySource::ByCell(map))
}

fn circle(center: Point, radius: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            Point::new(center.x + radius * a.cos(), center.y + radius * a.sin())
        })
        .collect()
}

fn reference_layers(spec: &SyntheticSpec, mask: &[Point], center: Point, downtown: Point) -> Vec<ReferenceLayer> {
    let r = spec.study_radius_m;
    let quarter = mask.len() / 4;
    let sectors = (0..4)
        .map(|q| {
            let mut ring = vec![center];
            ring.extend((0..=quarter).map(|i| mask[(q * quarter + i) % mask.len()]));
            LayerPart {
                name: format!("sector{}", q + 1),
                kind: PartKind::Polygon,
                points: ring,
            }
        })
        .collect();
    let river = (0..=44)
        .map(|i| {
            let x = spec.width_m * i as f64 / 44.0;
            let y = center.y - 0.25 * r + 0.12 * r * (2.0 * PI * x / (spec.width_m / 1.5)).sin();
            Point::new(x, y)
        })
        .collect();
    let airport = |name: &str, fx: f64, fy: f64| LayerPart {
        name: name.to_owned(),
        kind: PartKind::Point,
        points: vec![Point::new(center.x + fx * r, center.y + fy * r)],
    };
    vec![
        ReferenceLayer {
            name: "study_area".into(),
            parts: vec![LayerPart {
                name: "study_area".into(),
                kind: PartKind::Polygon,
                points: mask.to_vec(),
            }],
        },
        ReferenceLayer {
            name: "boundaries".into(),
            parts: sectors,
        },
        ReferenceLayer {
            name: "river".into(),
            parts: vec![LayerPart {
                name: "river".into(),
                kind: PartKind::Line,
                points: river,
            }],
        },
        ReferenceLayer {
            name: "airports".into(),
            parts: vec![
                airport("LHR", -0.85, -0.1),
                airport("LGW", -0.1, -0.95),
                airport("LCY", 0.35, 0.0),
                airport("LTN", -0.25, 0.9),
                airport("SEN", 0.95, 0.2),
            ],
        },
        ReferenceLayer {
            name: "center".into(),
            parts: vec![LayerPart {
                name: "Downtown".into(),
                kind: PartKind::Point,
                points: vec![downtown],
            }],
        },
    ]
}

pub fn write_synthetic(dataset: &SyntheticDataset, files: &DatasetFiles) -> Result<()> {
    write_network(&dataset.network, &files.network)?;
    dataset.grid.write_csv(&files.zones, false)?;
    write_layers(&dataset.layers, &files.layers)?;
    write_mask(&dataset.mask, &files.mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{load_network, network_stats};

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            width_m: 10_000.0,
            height_m: 10_000.0,
            study_radius_m: 4000.0,
            ..SyntheticSpec::default()
        }
    }

    fn files(dir: &std::path::Path) -> DatasetFiles {
        DatasetFiles {
            network: NetworkFiles::in_dir(dir),
            zones: dir.join("zones.csv"),
            layers: dir.join("layers.csv"),
            mask: dir.join("mask.csv"),
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for d in [&a, &b] {
            write_synthetic(&generate_synthetic(&small(), 42).unwrap(), &files(d.path())).unwrap();
        }
        for name in ["nodes.csv", "edges.csv", "profiles.csv", "zones.csv", "layers.csv", "mask.csv"] {
            let x = std::fs::read(a.path().join(name)).unwrap();
            let y = std::fs::read(b.path().join(name)).unwrap();
            assert!(x == y, "{name} differs");
        }
        let other = generate_synthetic(&small(), 43).unwrap();
        assert_ne!(other.network, generate_synthetic(&small(), 42).unwrap().network);
    }

    #[test]
    fn written_files_load_back() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_synthetic(&small(), 1).unwrap();
        write_synthetic(&ds, &files(dir.path())).unwrap();
        let net = load_network(&NetworkFiles::in_dir(dir.path()), Weekday::Wed).unwrap();
        assert_eq!(net, ds.network);
    }

    #[test]
    fn core_is_strongly_connected() {
        let ds = generate_synthetic(&small(), 5).unwrap();
        let s = network_stats(&ds.network);
        assert!(s.strongly_connected);
        assert!(s.profiled_pct > 50.0 && s.profiled_pct < 100.0);
    }

    #[test]
    fn zero_depth_gives_flat_profiles() {
        let mut spec = small();
        spec.morning.depth = 0.0;
        spec.evening.depth = 0.0;
        let ds = generate_synthetic(&spec, 3).unwrap();
        assert!(ds.network.profiles().iter().all(|p| p.bins().iter().all(|b| *b == 1.0)));
    }

    #[test]
    fn morning_depth_is_reached_in_window() {
        let mut spec = small();
        spec.morning.depth = 0.5;
        let ds = generate_synthetic(&spec, 3).unwrap();
        // 07:00-10:00 is bins 84..120
        let min = ds
            .network
            .profiles()
            .iter()
            .flat_map(|p| p.bins()[84..120].iter().copied())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min, 0.5);
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let mut spec = small();
        spec.node_spacing_m = 0.0;
        assert!(generate_synthetic(&spec, 0).is_err());
        let mut spec = small();
        spec.study_radius_m = 0.0;
        assert!(generate_synthetic(&spec, 0).is_err());
        let mut spec = small();
        spec.width_m = 100.0;
        assert!(generate_synthetic(&spec, 0).is_err());
    }

    #[test]
    fn center_zone_is_internal_and_central() {
        let ds = generate_synthetic(&SyntheticSpec::default(), 9).unwrap();
        let c = ds.grid.center_zone().unwrap();
        assert!(!c.is_external);
        assert_eq!(c.centroid(), Point::new(11_000.0, 11_000.0));
    }
}
