//! SVG frames: choropleths, oblique extrusions and cartogram line-work,
//! plus the plain-text animation manifest.
//!
//! Every document is built by string formatting with fixed two-decimal
//! coordinates, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::cartogram::{PartKind, ReferenceLayer};
use crate::csvio::{create, finish};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::zoning::{BBox, ZoneGrid};

pub const DEFAULT_FPS: f64 = 4.0;
pub const DEFAULT_ISOLINE_MINUTES: f64 = 15.0;
pub const MANIFEST_FILE: &str = "manifest.tsv";

/// Red (poor) to green (full free-flow accessibility).
pub const DEFAULT_COLORS: [&str; 6] = ["#d73027", "#fc8d59", "#fee08b", "#d9ef8b", "#91cf60", "#1a9850"];

/// Class breaks and one color per class. A value on a break belongs to the
/// class above it.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorRamp {
    breaks: Vec<f64>,
    colors: Vec<String>,
}

fn is_hex_color(s: &str) -> bool {
    s.len() == 7 && s.starts_with('#') && s[1..].chars().all(|c| c.is_ascii_hexdigit())
}

impl ColorRamp {
    /// `breaks` are the interior class boundaries.
    pub fn new(breaks: Vec<f64>, colors: Vec<String>) -> Result<Self> {
        if colors.len() != breaks.len() + 1 {
            return Err(Error::config(
                "ramp_colors",
                format!("{} colors for {} breaks, need one more color than breaks", colors.len(), breaks.len()),
            ));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("ramp_breaks", "breaks must be finite and strictly increasing"));
        }
        if let Some(c) = colors.iter().find(|c| !is_hex_color(c)) {
            return Err(Error::config("ramp_colors", format!("{c:?} is not a #rrggbb color")));
        }
        Ok(ColorRamp { breaks, colors })
    }

    /// Equal-width classes over `[lo, hi]`, one per color.
    pub fn equal_interval(lo: f64, hi: f64, colors: &[&str]) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::config("ramp_breaks", format!("range [{lo}, {hi}] is empty")));
        }
        if colors.is_empty() {
            return Err(Error::config("ramp_colors", "no colors"));
        }
        let n = colors.len();
        let breaks = (1..n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        ColorRamp::new(breaks, colors.iter().map(|c| c.to_string()).collect())
    }

    /// Six classes from `floor_pct` to 100.
    pub fn default_for_floor(floor_pct: f64) -> Result<Self> {
        ColorRamp::equal_interval(floor_pct, 100.0, &DEFAULT_COLORS)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn colors(&self) -> &[String] {
        &self.colors
    }

    pub fn class_of(&self, value: f64) -> usize {
        self.breaks.partition_point(|b| *b <= value)
    }

    pub fn color_of(&self, value: f64) -> &str {
        &self.colors[self.class_of(value)]
    }
}

/// Canvas, map extent and the metres-to-pixels mapping shared by every frame
/// of an animation.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub width_px: u32,
    pub height_px: u32,
    pub extent: BBox,
    pub margin_px: f64,
    pub index: usize,
    pub label: String,
    scale: f64,
    offset_x: f64,
    offset_y: f64,
}

impl FrameSpec {
    pub fn new(width_px: u32, height_px: u32, extent: BBox, margin_px: f64) -> Result<Self> {
        if !(extent.width() > 0.0 && extent.height() > 0.0) || !extent.width().is_finite() || !extent.height().is_finite() {
            return Err(Error::invalid("frame extent", format!("{extent:?} is degenerate")));
        }
        let (w, h) = (width_px as f64 - 2.0 * margin_px, height_px as f64 - 2.0 * margin_px);
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::invalid("frame size", format!("{width_px}x{height_px} leaves no room inside the margin")));
        }
        let scale = (w / extent.width()).min(h / extent.height());
        Ok(FrameSpec {
            width_px,
            height_px,
            extent,
            margin_px,
            index: 0,
            label: String::new(),
            scale,
            offset_x: margin_px + (w - extent.width() * scale) / 2.0,
            offset_y: margin_px + (h - extent.height() * scale) / 2.0,
        })
    }

    /// Same projection for another scenario.
    pub fn for_scenario(&self, index: usize, label: impl Into<String>) -> Self {
        FrameSpec {
            index,
            label: label.into(),
            ..self.clone()
        }
    }

    pub fn px_per_m(&self) -> f64 {
        self.scale
    }

    pub fn to_px(&self, p: Point) -> (f64, f64) {
        (
            self.offset_x + (p.x - self.extent.min_x) * self.scale,
            self.offset_y + (self.extent.max_y - p.y) * self.scale,
        )
    }
}

/// Smallest box holding every vertex, grown by `pad` on each side.
pub fn extent_of(points: impl IntoIterator<Item = Point>, pad: f64) -> Option<BBox> {
    let mut it = points.into_iter().filter(|p| p.is_finite());
    let first = it.next()?;
    let mut b = BBox::new(first.x, first.y, first.x, first.y);
    for p in it {
        b.min_x = b.min_x.min(p.x);
        b.min_y = b.min_y.min(p.y);
        b.max_x = b.max_x.max(p.x);
        b.max_y = b.max_y.max(p.y);
    }
    Some(BBox::new(b.min_x - pad, b.min_y - pad, b.max_x + pad, b.max_y + pad))
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Two decimals, with negative zero printed as zero.
fn n(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn points_attr(pts: &[(f64, f64)]) -> String {
    pts.iter().map(|(x, y)| format!("{},{}", n(*x), n(*y))).collect::<Vec<_>>().join(" ")
}

fn open_svg(out: &mut String, width: u32, height: u32) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>");
}

fn timestamp(out: &mut String, frame: &FrameSpec) {
    if !frame.label.is_empty() {
        let _ = writeln!(
            out,
            "<text class=\"timestamp\" x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"20\" fill=\"#222222\">{}</text>",
            n(frame.margin_px.max(4.0)),
            n(frame.margin_px.max(4.0) + 16.0),
            esc(&frame.label)
        );
    }
}

fn layers_group(out: &mut String, frame: &FrameSpec, layers: &[ReferenceLayer]) {
    out.push_str("<g class=\"layers\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\">\n");
    for l in layers {
        for part in &l.parts {
            let pts: Vec<(f64, f64)> = part.points.iter().map(|p| frame.to_px(*p)).collect();
            match part.kind {
                PartKind::Polygon => {
                    let _ = writeln!(out, "<polygon data-layer=\"{}\" points=\"{}\"/>", esc(&l.name), points_attr(&pts));
                }
                PartKind::Line => {
                    let _ = writeln!(out, "<polyline data-layer=\"{}\" points=\"{}\"/>", esc(&l.name), points_attr(&pts));
                }
                PartKind::Point => {
                    for (x, y) in pts {
                        let _ = writeln!(
                            out,
                            "<circle data-layer=\"{}\" cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"#000000\"/>",
                            esc(&l.name),
                            n(x),
                            n(y)
                        );
                        let _ = writeln!(
                            out,
                            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#000000\" stroke=\"none\">{}</text>",
                            n(x + 6.0),
                            n(y - 6.0),
                            esc(&part.name)
                        );
                    }
                }
            }
        }
    }
    out.push_str("</g>\n");
}

fn legend(out: &mut String, frame: &FrameSpec, ramp: &ColorRamp) {
    let x = frame.width_px as f64 - 110.0;
    let mut y = frame.height_px as f64 - 20.0 * ramp.colors.len() as f64 - 10.0;
    out.push_str("<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n");
    for (k, color) in ramp.colors.iter().enumerate().rev() {
        let text = match k {
            0 => format!("< {}", n(ramp.breaks.first().copied().unwrap_or(f64::INFINITY))),
            k if k == ramp.breaks.len() => format!(">= {}", n(ramp.breaks[k - 1])),
            k => format!("{} - {}", n(ramp.breaks[k - 1]), n(ramp.breaks[k])),
        };
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" fill=\"{color}\"/><text x=\"{}\" y=\"{}\">{}</text>",
            n(x),
            n(y),
            n(x + 20.0),
            n(y + 11.0),
            esc(&text)
        );
        y += 20.0;
    }
    out.push_str("</g>\n");
}

fn check_len(grid: &ZoneGrid, pct: &[Option<f64>]) -> Result<()> {
    if pct.len() != grid.internal_count() {
        return Err(Error::Dimension(format!(
            "{} pct values for {} internal zones",
            pct.len(),
            grid.internal_count()
        )));
    }
    Ok(())
}

/// One filled square per internal zone with a value (gaps are left out),
/// in ascending zone order. `pct` is aligned with the grid's internal zones.
pub fn render_choropleth(
    frame: &FrameSpec,
    grid: &ZoneGrid,
    pct: &[Option<f64>],
    ramp: &ColorRamp,
    layers: &[ReferenceLayer],
) -> Result<String> {
    check_len(grid, pct)?;
    let mut out = String::new();
    open_svg(&mut out, frame.width_px, frame.height_px);
    out.push_str("<g class=\"zones\" stroke=\"none\">\n");
    for (zone, v) in grid.internal().zip(pct) {
        let Some(v) = v else { continue };
        let c = grid.cell_corners(zone);
        let (x0, y1) = frame.to_px(c[0]);
        let (x1, y0) = frame.to_px(c[2]);
        let _ = writeln!(
            out,
            "<rect data-zone=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
            zone.zone_id,
            n(x0),
            n(y0),
            n(x1 - x0),
            n(y1 - y0),
            ramp.color_of(*v)
        );
    }
    out.push_str("</g>\n");
    layers_group(&mut out, frame, layers);
    legend(&mut out, frame, ramp);
    timestamp(&mut out, frame);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Oblique (cabinet) view settings for extruded columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrusionView {
    /// Pixels of column height per percentage point above the floor.
    pub height_scale: f64,
    pub floor_pct: f64,
    /// Receding-axis foreshortening; 0.5 is the cabinet projection.
    pub depth_factor: f64,
    pub angle_deg: f64,
}

impl Default for ExtrusionView {
    fn default() -> Self {
        ExtrusionView {
            height_scale: 1.0,
            floor_pct: crate::accessibility::DEFAULT_FLOOR_PCT,
            depth_factor: 0.5,
            angle_deg: 45.0,
        }
    }
}

impl ExtrusionView {
    /// Column height in pixels.
    pub fn height_px(&self, pct: f64) -> f64 {
        ((pct - self.floor_pct) * self.height_scale).max(0.0)
    }

    /// Pixel displacement of a column's top face relative to its base.
    pub fn top_offset(&self, pct: f64) -> (f64, f64) {
        let h = self.height_px(pct);
        let a = self.angle_deg.to_radians();
        (self.depth_factor * h * a.cos(), -self.depth_factor * h * a.sin())
    }
}

fn shade(hex: &str, k: f64) -> String {
    let c = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).unwrap_or(0) as f64;
    let s = |v: f64| (v * k).round().clamp(0.0, 255.0) as u8;
    format!("#{:02x}{:02x}{:02x}", s(c(1)), s(c(3)), s(c(5)))
}

/// Columns whose height encodes `pct` above the floor, painted back to
/// front so nearer columns cover farther ones.
pub fn render_extrusion(
    frame: &FrameSpec,
    grid: &ZoneGrid,
    pct: &[Option<f64>],
    ramp: &ColorRamp,
    view: &ExtrusionView,
) -> Result<String> {
    check_len(grid, pct)?;
    struct Column {
        zone_id: u32,
        depth: f64,
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        pct: f64,
    }
    let mut cols: Vec<Column> = grid
        .internal()
        .zip(pct)
        .filter_map(|(zone, v)| {
            let v = (*v)?;
            let c = grid.cell_corners(zone);
            let (x0, y1) = frame.to_px(c[0]);
            let (x1, y0) = frame.to_px(c[2]);
            let (cx, cy) = frame.to_px(zone.centroid());
            Some(Column {
                zone_id: zone.zone_id,
                depth: cy - cx,
                x0,
                y0,
                x1,
                y1,
                pct: v,
            })
        })
        .collect();
    cols.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.zone_id.cmp(&b.zone_id)));

    let mut out = String::new();
    open_svg(&mut out, frame.width_px, frame.height_px);
    out.push_str("<g class=\"columns\" stroke=\"#222222\" stroke-width=\"0.5\" stroke-linejoin=\"round\">\n");
    for c in &cols {
        let color = ramp.color_of(c.pct);
        let (dx, dy) = view.top_offset(c.pct);
        let _ = writeln!(out, "<g data-zone=\"{}\">", c.zone_id);
        if dx != 0.0 || dy != 0.0 {
            let left = [(c.x0, c.y0), (c.x0, c.y1), (c.x0 + dx, c.y1 + dy), (c.x0 + dx, c.y0 + dy)];
            let bottom = [(c.x0, c.y1), (c.x1, c.y1), (c.x1 + dx, c.y1 + dy), (c.x0 + dx, c.y1 + dy)];
            let _ = writeln!(out, "<polygon class=\"side\" points=\"{}\" fill=\"{}\"/>", points_attr(&left), shade(color, 0.7));
            let _ = writeln!(out, "<polygon class=\"side\" points=\"{}\" fill=\"{}\"/>", points_attr(&bottom), shade(color, 0.85));
            let _ = writeln!(
                out,
                "<line class=\"edge\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                n(c.x0),
                n(c.y1),
                n(c.x0 + dx),
                n(c.y1 + dy)
            );
        }
        let top = [
            (c.x0 + dx, c.y0 + dy),
            (c.x1 + dx, c.y0 + dy),
            (c.x1 + dx, c.y1 + dy),
            (c.x0 + dx, c.y1 + dy),
        ];
        let _ = writeln!(out, "<polygon class=\"top\" points=\"{}\" fill=\"{color}\"/>", points_attr(&top));
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n");
    legend(&mut out, frame, ramp);
    timestamp(&mut out, frame);
    out.push_str("</svg>\n");
    Ok(out)
}

fn cartogram_panel(out: &mut String, frame: &FrameSpec, layers: &[ReferenceLayer], center: Point, radii: &[f64]) {
    let (cx, cy) = frame.to_px(center);
    out.push_str("<g class=\"isolines\" fill=\"none\" stroke=\"#9e9e9e\" stroke-dasharray=\"4 3\">\n");
    for r in radii {
        let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>", n(cx), n(cy), n(r * frame.px_per_m()));
    }
    out.push_str("</g>\n");
    layers_group(out, frame, layers);
    let _ = writeln!(
        out,
        "<circle class=\"center\" cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"#c62828\"/>",
        n(cx),
        n(cy)
    );
}

/// Distorted line-work with concentric travel-time circles of the given
/// radii (metres) around `center`. With `geographic`, the undistorted
/// layers are drawn in a left panel under the same projection and the
/// cartogram moves to the right.
pub fn render_cartogram(
    frame: &FrameSpec,
    distorted: &[ReferenceLayer],
    center: Point,
    radii: &[f64],
    geographic: Option<&[ReferenceLayer]>,
) -> String {
    let panels = if geographic.is_some() { 2 } else { 1 };
    let mut out = String::new();
    open_svg(&mut out, frame.width_px * panels, frame.height_px);
    if let Some(geo) = geographic {
        out.push_str("<g class=\"panel geographic\">\n");
        cartogram_panel(&mut out, frame, geo, center, &[]);
        out.push_str("</g>\n");
        let _ = writeln!(out, "<g class=\"panel cartogram\" transform=\"translate({},0)\">", frame.width_px);
    } else {
        out.push_str("<g class=\"panel cartogram\">\n");
    }
    cartogram_panel(&mut out, frame, distorted, center, radii);
    out.push_str("</g>\n");
    timestamp(&mut out, frame);
    out.push_str("</svg>\n");
    out
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:04}.svg")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub index: usize,
    pub file: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnimationManifest {
    pub entries: Vec<ManifestEntry>,
}

impl AnimationManifest {
    pub fn total_seconds(&self) -> f64 {
        self.entries.iter().map(|e| e.duration_s).sum()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        for e in &self.entries {
            writeln!(w, "{}\t{}\t{}", e.index, e.file, e.duration_s).map_err(|err| Error::io(path, err))?;
        }
        finish(path, w)
    }
}

/// Checks that `frame_0000.svg` .. one per slot exist in `frames_dir` and
/// writes the manifest next to them, each frame lasting `1 / fps` seconds.
pub fn emit_animation(frames_dir: &Path, slot_count: usize, fps: f64) -> Result<AnimationManifest> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::config("fps", format!("{fps} must be > 0")));
    }
    let mut entries = Vec::with_capacity(slot_count);
    for index in 0..slot_count {
        let file = frame_file_name(index);
        let path: PathBuf = frames_dir.join(&file);
        if !path.is_file() {
            return Err(Error::MissingFrame(path.display().to_string()));
        }
        entries.push(ManifestEntry {
            index,
            file,
            duration_s: 1.0 / fps,
        });
    }
    let manifest = AnimationManifest { entries };
    manifest.write(&frames_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
