//! `key = value` run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::accessibility::{DecayParams, DEFAULT_BETA, DEFAULT_FLOOR_PCT};
use crate::cartogram::{DEFAULT_IDW_POWER, DEFAULT_MAX_SPACING_M};
use crate::error::{Error, Result};
use crate::network::{NetworkFiles, SyntheticSpec, Weekday};
use crate::render::{ColorRamp, ExtrusionView, DEFAULT_FPS, DEFAULT_ISOLINE_MINUTES};
use crate::routing::SlotSchedule;
use crate::zoning::{DEFAULT_BUFFER_MINUTES, DEFAULT_CELL_SIZE_M};

/// Environment variable that replaces `out_dir`.
pub const OUT_DIR_ENV: &str = "TDACCESS_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    From,
    To,
    Both,
}

impl Direction {
    /// The single directions this selection covers.
    pub fn each(self) -> &'static [Direction] {
        match self {
            Direction::From => &[Direction::From],
            Direction::To => &[Direction::To],
            Direction::Both => &[Direction::From, Direction::To],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::From => "from",
            Direction::To => "to",
            Direction::Both => "both",
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "from" => Ok(Direction::From),
            "to" => Ok(Direction::To),
            "both" => Ok(Direction::Both),
            _ => Err(format!("{s:?} is not one of from, to, both")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    Choropleth,
    Extrusion,
    Cartogram,
}

impl RenderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RenderMode::Choropleth => "choropleth",
            RenderMode::Extrusion => "extrusion",
            RenderMode::Cartogram => "cartogram",
        }
    }
}

impl FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "choropleth" => Ok(RenderMode::Choropleth),
            "extrusion" => Ok(RenderMode::Extrusion),
            "cartogram" => Ok(RenderMode::Cartogram),
            _ => Err(format!("{s:?} is not one of choropleth, extrusion, cartogram")),
        }
    }
}

/// Which scenarios the cartogram stage distorts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioSet {
    All,
    FreeFlow,
}

impl FromStr for ScenarioSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(ScenarioSet::All),
            "freeflow" => Ok(ScenarioSet::FreeFlow),
            _ => Err(format!("{s:?} is not one of all, freeflow")),
        }
    }
}

/// Resolved input file locations.
#[derive(Debug, Clone, PartialEq)]
pub struct InputFiles {
    pub network: NetworkFiles,
    pub zones: PathBuf,
    pub layers: PathBuf,
    pub mask: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    /// Default home of every input file; `<out_dir>/data` when unset.
    pub data_dir: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub zones: Option<PathBuf>,
    pub layers: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    /// Whether `all` starts by generating the synthetic dataset.
    pub synthetic: bool,
    pub seed: u64,
    pub weekday: Weekday,
    pub beta: f64,
    pub slot_interval_min: f64,
    pub slot_count: Option<usize>,
    pub floor_pct: f64,
    pub cell_size_m: f64,
    pub buffer_min: f64,
    pub snap_radius_m: Option<f64>,
    pub center_zone: Option<u32>,
    pub idw_power: f64,
    pub densify_m: f64,
    pub cartogram_scale: Option<f64>,
    pub cartogram_scenarios: ScenarioSet,
    pub isoline_min: f64,
    pub direction: Direction,
    pub mode: RenderMode,
    pub side_by_side: bool,
    pub ramp_breaks: Option<Vec<f64>>,
    pub ramp_colors: Option<Vec<String>>,
    pub fps: f64,
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub height_scale: f64,
    pub depth_factor: f64,
    /// 0 uses every available core.
    pub workers: usize,
    pub synth: SyntheticSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: PathBuf::from("out"),
            data_dir: None,
            nodes: None,
            edges: None,
            profiles: None,
            zones: None,
            layers: None,
            mask: None,
            synthetic: true,
            seed: 1,
            weekday: Weekday::Wed,
            beta: DEFAULT_BETA,
            slot_interval_min: 15.0,
            slot_count: None,
            floor_pct: DEFAULT_FLOOR_PCT,
            cell_size_m: DEFAULT_CELL_SIZE_M,
            buffer_min: DEFAULT_BUFFER_MINUTES,
            snap_radius_m: None,
            center_zone: None,
            idw_power: DEFAULT_IDW_POWER,
            densify_m: DEFAULT_MAX_SPACING_M,
            cartogram_scale: None,
            cartogram_scenarios: ScenarioSet::All,
            isoline_min: DEFAULT_ISOLINE_MINUTES,
            direction: Direction::Both,
            mode: RenderMode::Extrusion,
            side_by_side: true,
            ramp_breaks: None,
            ramp_colors: None,
            fps: DEFAULT_FPS,
            canvas_width: 1000,
            canvas_height: 800,
            height_scale: ExtrusionView::default().height_scale,
            depth_factor: ExtrusionView::default().depth_factor,
            workers: 0,
            synth: SyntheticSpec::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse {value:?}: {e}")))
}

/// `auto` (or empty) means "derive it".
fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if value == "auto" || value.is_empty() {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("{value:?} is not true or false"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text, path)
    }

    /// Parses config text on top of the defaults. `origin` only labels
    /// error messages.
    pub fn parse_text(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            // full-line comments, or trailing ones after " # "; a bare '#'
            // inside a value (colors) is data
            let line = line.find(" # ").map_or(line, |i| &line[..i]).trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let line_no = i as u64 + 1;
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(origin, line_no, format!("expected key = value, got {line:?}")));
            };
            let key = key.trim();
            if !seen.insert(key.to_owned()) {
                return Err(Error::parse(origin, line_no, format!("key `{key}` given twice")));
            }
            cfg.set(key, value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` setting; also used for command-line
    /// overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = || Some(PathBuf::from(value));
        match key {
            "out_dir" => self.out_dir = PathBuf::from(value),
            "data_dir" => self.data_dir = path(),
            "nodes" => self.nodes = path(),
            "edges" => self.edges = path(),
            "profiles" => self.profiles = path(),
            "zones" => self.zones = path(),
            "layers" => self.layers = path(),
            "mask" => self.mask = path(),
            "synthetic" => self.synthetic = parse_bool(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "weekday" => self.weekday = value.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "beta" => self.beta = parse(key, value)?,
            "slot_interval_min" => self.slot_interval_min = parse(key, value)?,
            "slot_count" => self.slot_count = parse_auto(key, value)?,
            "floor_pct" => self.floor_pct = parse(key, value)?,
            "cell_size_m" => self.cell_size_m = parse(key, value)?,
            "buffer_min" => self.buffer_min = parse(key, value)?,
            "snap_radius_m" => self.snap_radius_m = parse_auto(key, value)?,
            "center_zone" => self.center_zone = parse_auto(key, value)?,
            "idw_power" => self.idw_power = parse(key, value)?,
            "densify_m" => self.densify_m = parse(key, value)?,
            "cartogram_scale" => self.cartogram_scale = parse_auto(key, value)?,
            "cartogram_scenarios" => self.cartogram_scenarios = parse(key, value)?,
            "isoline_min" => self.isoline_min = parse(key, value)?,
            "direction" => self.direction = parse(key, value)?,
            "mode" => self.mode = parse(key, value)?,
            "side_by_side" => self.side_by_side = parse_bool(key, value)?,
            "ramp_breaks" => self.ramp_breaks = Some(parse_list(key, value)?),
            "ramp_colors" => self.ramp_colors = Some(parse_list(key, value)?),
            "fps" => self.fps = parse(key, value)?,
            "canvas_width" => self.canvas_width = parse(key, value)?,
            "canvas_height" => self.canvas_height = parse(key, value)?,
            "height_scale" => self.height_scale = parse(key, value)?,
            "depth_factor" => self.depth_factor = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "synth_width_m" => self.synth.width_m = parse(key, value)?,
            "synth_height_m" => self.synth.height_m = parse(key, value)?,
            "synth_node_spacing_m" => self.synth.node_spacing_m = parse(key, value)?,
            "synth_jitter" => self.synth.jitter = parse(key, value)?,
            "synth_arterial_every" => self.synth.arterial_every = parse(key, value)?,
            "synth_local_keep" => self.synth.local_keep = parse(key, value)?,
            "synth_profiled_share" => self.synth.profiled_share = parse(key, value)?,
            "synth_profile_variants" => self.synth.profile_variants = parse(key, value)?,
            "synth_morning_center_min" => self.synth.morning.center_min = parse(key, value)?,
            "synth_morning_half_width_min" => self.synth.morning.half_width_min = parse(key, value)?,
            "synth_morning_depth" => self.synth.morning.depth = parse(key, value)?,
            "synth_evening_center_min" => self.synth.evening.center_min = parse(key, value)?,
            "synth_evening_half_width_min" => self.synth.evening.half_width_min = parse(key, value)?,
            "synth_evening_depth" => self.synth.evening.depth = parse(key, value)?,
            "synth_study_radius_m" => self.synth.study_radius_m = parse(key, value)?,
            "synth_opportunity_scale" => self.synth.opportunity_scale = parse(key, value)?,
            _ => return Err(Error::config(key, "unknown configuration key")),
        }
        Ok(())
    }

    /// Range checks on every parameter. File existence is checked per
    /// stage, before the stage does any work.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(field, msg));
        DecayParams::new(self.beta)?;
        self.slots()?;
        if !(0.0..100.0).contains(&self.floor_pct) {
            return bad("floor_pct", format!("{} not in [0, 100)", self.floor_pct));
        }
        let positive = [
            ("cell_size_m", self.cell_size_m),
            ("idw_power", self.idw_power),
            ("densify_m", self.densify_m),
            ("isoline_min", self.isoline_min),
            ("fps", self.fps),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(field, format!("{v} must be > 0"));
            }
        }
        for (field, v) in [
            ("snap_radius_m", self.snap_radius_m),
            ("cartogram_scale", self.cartogram_scale),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(field, format!("{v} must be > 0"));
                }
            }
        }
        for (field, v) in [
            ("buffer_min", self.buffer_min),
            ("height_scale", self.height_scale),
            ("depth_factor", self.depth_factor),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(field, format!("{v} must be ≥ 0"));
            }
        }
        for (field, v) in [("canvas_width", self.canvas_width), ("canvas_height", self.canvas_height)] {
            if !(100..=20_000).contains(&v) {
                return bad(field, format!("{v} not in [100, 20000] px"));
            }
        }
        self.ramp()?;
        let mut spec = self.synth.clone();
        spec.cell_size_m = self.cell_size_m;
        spec.validate()
    }

    pub fn slots(&self) -> Result<SlotSchedule> {
        let interval = self.slot_interval_min;
        let seconds = interval * 60.0;
        if !(seconds >= 1.0 && seconds.fract() == 0.0 && 86_400 % (seconds as u32) == 0) {
            return Err(Error::config(
                "slot_interval_min",
                format!("{interval} min does not divide the day into whole-second slots"),
            ));
        }
        let count = (86_400 / seconds as u32) as usize;
        if let Some(n) = self.slot_count {
            if n != count {
                return Err(Error::config(
                    "slot_count",
                    format!("{n} slots of {interval} min do not cover 24 h ({count} needed)"),
                ));
            }
        }
        SlotSchedule::new(count).map_err(|e| Error::config("slot_interval_min", e.to_string()))
    }

    pub fn decay(&self) -> Result<DecayParams> {
        DecayParams::new(self.beta)
    }

    pub fn ramp(&self) -> Result<ColorRamp> {
        match (&self.ramp_breaks, &self.ramp_colors) {
            (None, None) => ColorRamp::default_for_floor(self.floor_pct),
            (Some(b), Some(c)) => ColorRamp::new(b.clone(), c.clone()),
            (None, Some(c)) => {
                let colors: Vec<&str> = c.iter().map(String::as_str).collect();
                ColorRamp::equal_interval(self.floor_pct, 100.0, &colors)
            }
            (Some(_), None) => Err(Error::config("ramp_colors", "ramp_breaks needs ramp_colors")),
        }
    }

    pub fn extrusion_view(&self) -> ExtrusionView {
        ExtrusionView {
            height_scale: self.height_scale,
            floor_pct: self.floor_pct,
            depth_factor: self.depth_factor,
            ..ExtrusionView::default()
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            cell_size_m: self.cell_size_m,
            weekday: self.weekday,
            ..self.synth.clone()
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| self.out_dir.join("data"))
    }

    pub fn inputs(&self) -> InputFiles {
        let dir = self.data_dir();
        let pick = |p: &Option<PathBuf>, name: &str| p.clone().unwrap_or_else(|| dir.join(name));
        InputFiles {
            network: NetworkFiles {
                nodes: pick(&self.nodes, "nodes.csv"),
                edges: pick(&self.edges, "edges.csv"),
                profiles: pick(&self.profiles, "profiles.csv"),
            },
            zones: pick(&self.zones, "zones.csv"),
            layers: pick(&self.layers, "layers.csv"),
            mask: pick(&self.mask, "mask.csv"),
        }
    }
}
