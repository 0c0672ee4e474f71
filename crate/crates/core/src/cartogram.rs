//! Radial single-focus time cartograms.
//!
//! Reference line-work is densified once and every point gets a unit vector
//! from the focal point. Per scenario, a travel-time surface interpolated
//! from zone samples gives each point a radius, and the point moves to
//! `center + minutes · scale · unit`. Points may overlap or overtake each
//! other; nothing is repaired.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::csvio::{create, finish, open_csv};
use crate::error::{Error, Result};
use crate::geometry::{polygon_area, Point};

pub const DEFAULT_MAX_SPACING_M: f64 = 250.0;
pub const DEFAULT_IDW_POWER: f64 = 2.0;
/// Queries closer than this to a sample return the sample value.
pub const IDW_SNAP_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartKind {
    Line,
    Polygon,
    Point,
}

impl PartKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PartKind::Line => "line",
            PartKind::Polygon => "polygon",
            PartKind::Point => "point",
        }
    }
}

impl fmt::Display for PartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(PartKind::Line),
            "polygon" => Ok(PartKind::Polygon),
            "point" => Ok(PartKind::Point),
            other => Err(Error::invalid("geometry kind", format!("{other:?}"))),
        }
    }
}

/// One polyline, polygon ring (stored open, closure implied) or point set.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPart {
    pub name: String,
    pub kind: PartKind,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLayer {
    pub name: String,
    pub parts: Vec<LayerPart>,
}

impl ReferenceLayer {
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.parts.iter().flat_map(|p| p.points.iter().copied())
    }
}

fn check_layers(layers: &[ReferenceLayer]) -> Result<()> {
    for l in layers {
        for p in &l.parts {
            let what = || format!("layer {} part {}", l.name, p.name);
            if p.points.iter().any(|q| !q.is_finite()) {
                return Err(Error::invalid(what(), "non-finite vertex"));
            }
            let min = match p.kind {
                PartKind::Point => 1,
                PartKind::Line => 2,
                PartKind::Polygon => 3,
            };
            if p.points.len() < min {
                return Err(Error::invalid(what(), format!("needs at least {min} vertices")));
            }
        }
    }
    Ok(())
}

/// Reads `layer,part,seq,x,y,kind` rows. Parts keep their first-seen
/// order; vertices are ordered by `seq`. A polygon ring that repeats its
/// first vertex is stored open.
pub fn read_layers(path: &Path) -> Result<Vec<ReferenceLayer>> {
    Ok(read_layer_rows(path, false)?.remove("").unwrap_or_default())
}

/// Reads a distorted-layers file, grouping by its trailing scenario column.
pub fn read_distorted(path: &Path) -> Result<BTreeMap<String, Vec<ReferenceLayer>>> {
    read_layer_rows(path, true)
}

fn read_layer_rows(path: &Path, with_scenario: bool) -> Result<BTreeMap<String, Vec<ReferenceLayer>>> {
    let mut cols = vec!["layer", "part", "seq", "x", "y", "kind"];
    if with_scenario {
        cols.push("scenario");
    }
    let mut csv = open_csv(path, &cols)?;
    let path = csv.path().to_owned();
    let mut groups: BTreeMap<String, Vec<(String, String, PartKind, Vec<(u64, Point)>)>> = BTreeMap::new();
    for row in csv.rows() {
        let row = row?;
        row.expect_len(&path, cols.len())?;
        let scenario = if with_scenario {
            row.str(&path, 6, "scenario")?.to_owned()
        } else {
            String::new()
        };
        let layer = row.str(&path, 0, "layer")?.to_owned();
        let part = row.str(&path, 1, "part")?.to_owned();
        let seq: u64 = row.parse(&path, 2, "seq")?;
        let p = Point::new(row.parse(&path, 3, "x")?, row.parse(&path, 4, "y")?);
        let kind: PartKind = row.parse(&path, 5, "kind")?;
        let parts = groups.entry(scenario).or_default();
        match parts.iter_mut().find(|(l, n, _, _)| *l == layer && *n == part) {
            Some((_, _, k, pts)) => {
                if *k != kind {
                    return Err(Error::parse(&path, row.line, format!("part {part} changes kind")));
                }
                pts.push((seq, p));
            }
            None => parts.push((layer, part, kind, vec![(seq, p)])),
        }
    }
    let mut out = BTreeMap::new();
    for (scenario, parts) in groups {
        let mut layers: Vec<ReferenceLayer> = Vec::new();
        for (layer, name, kind, mut pts) in parts {
            pts.sort_by_key(|(s, _)| *s);
            let mut points: Vec<Point> = pts.into_iter().map(|(_, p)| p).collect();
            if kind == PartKind::Polygon && points.len() > 3 && points.first() == points.last() {
                points.pop();
            }
            let part = LayerPart { name, kind, points };
            match layers.iter_mut().find(|l| l.name == layer) {
                Some(l) => l.parts.push(part),
                None => layers.push(ReferenceLayer {
                    name: layer,
                    parts: vec![part],
                }),
            }
        }
        check_layers(&layers)?;
        out.insert(scenario, layers);
    }
    Ok(out)
}

pub fn write_layers(layers: &[ReferenceLayer], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "layer,part,seq,x,y,kind").map_err(io)?;
    write_layer_rows(&mut w, layers, None).map_err(io)?;
    finish(path, w)
}

/// Writes every scenario's layers with a trailing `scenario` column.
pub fn write_distorted<'a>(
    scenarios: impl IntoIterator<Item = (&'a str, &'a [ReferenceLayer])>,
    path: &Path,
) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "layer,part,seq,x,y,kind,scenario").map_err(io)?;
    for (name, layers) in scenarios {
        write_layer_rows(&mut w, layers, Some(name)).map_err(io)?;
    }
    finish(path, w)
}

fn write_layer_rows(w: &mut impl Write, layers: &[ReferenceLayer], scenario: Option<&str>) -> std::io::Result<()> {
    for l in layers {
        for p in &l.parts {
            for (seq, q) in p.points.iter().enumerate() {
                write!(w, "{},{},{seq},{},{},{}", l.name, p.name, q.x, q.y, p.kind)?;
                match scenario {
                    Some(s) => writeln!(w, ",{s}")?,
                    None => writeln!(w)?,
                }
            }
        }
    }
    Ok(())
}

fn split_segment(a: Point, b: Point, max_spacing: f64, out: &mut Vec<Point>) {
    let len = a.dist(b);
    let pieces = ((len / max_spacing).ceil() as usize).max(1);
    for k in 1..pieces {
        let t = k as f64 / pieces as f64;
        out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
    }
}

fn check_spacing(max_spacing_m: f64) -> Result<()> {
    if !(max_spacing_m.is_finite() && max_spacing_m > 0.0) {
        return Err(Error::invalid("densify spacing", format!("{max_spacing_m} must be > 0")));
    }
    Ok(())
}

/// Inserts equally spaced points so no segment exceeds `max_spacing_m`.
/// Original vertices are kept in order.
pub fn densify(polyline: &[Point], max_spacing_m: f64) -> Result<Vec<Point>> {
    check_spacing(max_spacing_m)?;
    if polyline.len() < 2 {
        return Err(Error::invalid("polyline", "needs at least 2 vertices"));
    }
    if polyline.iter().all(|p| *p == polyline[0]) {
        return Err(Error::invalid("polyline", "zero length"));
    }
    let mut out = vec![polyline[0]];
    for w in polyline.windows(2) {
        split_segment(w[0], w[1], max_spacing_m, &mut out);
        out.push(w[1]);
    }
    Ok(out)
}

/// Like [`densify`] for a ring, including the closing segment. The result
/// stays open.
pub fn densify_ring(ring: &[Point], max_spacing_m: f64) -> Result<Vec<Point>> {
    let mut closed = ring.to_vec();
    closed.push(ring[0]);
    let mut out = densify(&closed, max_spacing_m)?;
    out.pop();
    Ok(out)
}

pub fn densify_layers(layers: &[ReferenceLayer], max_spacing_m: f64) -> Result<Vec<ReferenceLayer>> {
    check_spacing(max_spacing_m)?;
    check_layers(layers)?;
    layers
        .iter()
        .map(|l| {
            let parts = l
                .parts
                .iter()
                .map(|p| {
                    let points = match p.kind {
                        PartKind::Point => p.points.clone(),
                        PartKind::Line => densify(&p.points, max_spacing_m)?,
                        PartKind::Polygon => densify_ring(&p.points, max_spacing_m)?,
                    };
                    Ok(LayerPart {
                        name: p.name.clone(),
                        kind: p.kind,
                        points,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ReferenceLayer {
                name: l.name.clone(),
                parts,
            })
        })
        .collect()
}

/// A point of the (densified) reference geometry with its direction from
/// the focal point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensePoint {
    pub layer: usize,
    pub part: usize,
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub ux: f64,
    pub uy: f64,
}

impl DensePoint {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Unit vector from `center` to `p`, or zero when they coincide.
pub fn unit_vector(p: Point, center: Point) -> (f64, f64) {
    let (dx, dy) = (p.x - center.x, p.y - center.y);
    let len = dx.hypot(dy);
    if len == 0.0 {
        (0.0, 0.0)
    } else {
        (dx / len, dy / len)
    }
}

/// Flattens `layers` into points carrying unit vectors from `center`.
pub fn unit_vectors(layers: &[ReferenceLayer], center: Point) -> Vec<DensePoint> {
    let mut out = Vec::new();
    for (li, l) in layers.iter().enumerate() {
        for (pi, part) in l.parts.iter().enumerate() {
            for (k, p) in part.points.iter().enumerate() {
                let (ux, uy) = unit_vector(*p, center);
                out.push(DensePoint {
                    layer: li,
                    part: pi,
                    index: k,
                    x: p.x,
                    y: p.y,
                    ux,
                    uy,
                });
            }
        }
    }
    out
}

/// Scattered travel-time samples for one scenario and direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceSurface {
    samples: Vec<(Point, f64)>,
    power: f64,
}

impl ImpedanceSurface {
    /// Non-finite samples (unreachable zones) are left out.
    pub fn new(samples: impl IntoIterator<Item = (Point, f64)>, power: f64) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::invalid("idw power", format!("{power} must be > 0")));
        }
        let samples: Vec<(Point, f64)> = samples
            .into_iter()
            .filter(|(p, v)| v.is_finite() && p.is_finite())
            .collect();
        if let Some((_, v)) = samples.iter().find(|(_, v)| *v < 0.0) {
            return Err(Error::invalid("impedance sample", format!("negative minutes {v}")));
        }
        if samples.is_empty() {
            return Err(Error::invalid("impedance surface", "no finite samples"));
        }
        Ok(ImpedanceSurface { samples, power })
    }

    pub fn samples(&self) -> &[(Point, f64)] {
        &self.samples
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Same sample positions with every value multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        ImpedanceSurface {
            samples: self.samples.iter().map(|(p, v)| (*p, v * k)).collect(),
            power: self.power,
        }
    }
}

/// Inverse-distance-weighted minutes at `(x, y)`.
pub fn idw_at(surface: &ImpedanceSurface, x: f64, y: f64) -> f64 {
    let q = Point::new(x, y);
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, v) in &surface.samples {
        let d = p.dist(q);
        if d < IDW_SNAP_M {
            return *v;
        }
        let w = if surface.power == 2.0 { 1.0 / (d * d) } else { d.powf(-surface.power) };
        num += w * v;
        den += w;
    }
    num / den
}

/// Moves every point to `center + idw · scale_km_per_min · 1000 · unit`.
pub fn distort(
    points: &[DensePoint],
    surface: &ImpedanceSurface,
    center: Point,
    scale_km_per_min: f64,
) -> Vec<Point> {
    points
        .iter()
        .map(|p| {
            let r = idw_at(surface, p.x, p.y) * scale_km_per_min * 1000.0;
            Point::new(center.x + r * p.ux, center.y + r * p.uy)
        })
        .collect()
}

/// Reassembles distorted points into the structure of `template`, which
/// must be the layer set the points were flattened from.
pub fn rebuild(template: &[ReferenceLayer], points: &[DensePoint], distorted: &[Point]) -> Vec<ReferenceLayer> {
    let mut out: Vec<ReferenceLayer> = template
        .iter()
        .map(|l| ReferenceLayer {
            name: l.name.clone(),
            parts: l
                .parts
                .iter()
                .map(|p| LayerPart {
                    name: p.name.clone(),
                    kind: p.kind,
                    points: vec![Point::default(); p.points.len()],
                })
                .collect(),
        })
        .collect();
    for (dp, q) in points.iter().zip(distorted) {
        out[dp.layer].parts[dp.part].points[dp.index] = *q;
    }
    out
}

/// Kilometres per minute that make the free-flow cartogram roughly the size
/// of the geographic map: mean distance of `points` from the center divided
/// by their mean interpolated minutes.
pub fn auto_scale(points: &[DensePoint], surface: &ImpedanceSurface, center: Point) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::invalid("cartogram scale", "no boundary points"));
    }
    let n = points.len() as f64;
    let km = points.iter().map(|p| p.position().dist(center)).sum::<f64>() / n / 1000.0;
    let minutes = points.iter().map(|p| idw_at(surface, p.x, p.y)).sum::<f64>() / n;
    let scale = km / minutes;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid(
            "cartogram scale",
            format!("cannot derive a scale from {km} km over {minutes} min"),
        ));
    }
    Ok(scale)
}

/// Area of a distorted ring as a percentage of the reference ring's area.
pub fn area_pct(ring: &[Point], reference: &[Point]) -> Result<f64> {
    let base = polygon_area(reference);
    if !(base > 0.0) {
        return Err(Error::invalid("reference area", "distorted reference boundary has zero area"));
    }
    Ok(100.0 * (polygon_area(ring) / base))
}

/// Distorted area of `boundary` (a densified ring with unit vectors) under
/// each scenario surface, as a percentage of its area under `reference`.
pub fn relative_area(
    boundary: &[DensePoint],
    scenarios: &[ImpedanceSurface],
    reference: &ImpedanceSurface,
    center: Point,
    scale_km_per_min: f64,
) -> Result<Vec<f64>> {
    let base = distort(boundary, reference, center, scale_km_per_min);
    scenarios
        .iter()
        .map(|s| area_pct(&distort(boundary, s, center, scale_km_per_min), &base))
        .collect()
}

/// Radii in metres of travel-time circles every `interval_min` minutes, up
/// to `max_radius_m`.
pub fn isoline_radii(interval_min: f64, scale_km_per_min: f64, max_radius_m: f64) -> Vec<f64> {
    if !(interval_min > 0.0 && scale_km_per_min > 0.0) {
        return Vec::new();
    }
    (1..)
        .map(|k| k as f64 * interval_min * scale_km_per_min * 1000.0)
        .take_while(|r| *r <= max_radius_m)
        .take(1000)
        .collect()
}
