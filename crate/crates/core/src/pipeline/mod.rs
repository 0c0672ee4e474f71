//! Config-driven batch stages with resumable, hash-checked outputs.
//!
//! Layout under `out_dir`:
//! `data/` (inputs when synthetic), `matrix/`, `access/`, `cartogram/`,
//! `frames/<set>/`, `stats.txt` and `run_manifest.json`.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant as Clock;

use log::info;
use rayon::prelude::*;

pub use config::{Direction, InputFiles, RenderMode, RunConfig, ScenarioSet, OUT_DIR_ENV};
pub use manifest::{hash_bytes, hash_file, RunManifest, StageRecord, StageStatus, MANIFEST_FILE};

use crate::accessibility::{free_flow_cube, AccessibilityField};
use crate::cartogram::{
    auto_scale, densify_layers, densify_ring, distort, isoline_radii, read_distorted, read_layers, rebuild,
    relative_area, unit_vectors, write_distorted, DensePoint, ImpedanceSurface, LayerPart, PartKind,
    ReferenceLayer,
};
use crate::csvio::{create, finish};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::network::{fifoize, generate_synthetic, load_network, network_stats, write_synthetic, DatasetFiles};
use crate::render::{
    emit_animation, extent_of, frame_file_name, render_cartogram, render_choropleth, render_extrusion, FrameSpec,
};
use crate::routing::{build_cost_cube, slot_label, to_center_column, CenterTimes, CostCube};
use crate::zoning::{apply_mask, mark_external_buffer, read_mask, snap_centroids, ZoneGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Matrix,
    Access,
    Cartogram,
    Render,
    Stats,
    All,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Matrix => "matrix",
            Command::Access => "access",
            Command::Cartogram => "cartogram",
            Command::Render => "render",
            Command::Stats => "stats",
            Command::All => "all",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Command::Synth,
            Command::Matrix,
            Command::Access,
            Command::Cartogram,
            Command::Render,
            Command::Stats,
            Command::All,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| Error::invalid("command", format!("unknown command {s:?}")))
    }
}

/// Where each stage writes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub cube: PathBuf,
    pub cube_free_flow: PathBuf,
    pub zones_used: PathBuf,
    pub matrix_summary: PathBuf,
    pub access: PathBuf,
    pub baseline: PathBuf,
    pub area_report: PathBuf,
    pub scale: PathBuf,
    pub stats: PathBuf,
    pub manifest: PathBuf,
    cartogram_dir: PathBuf,
    frames_dir: PathBuf,
}

impl OutputPaths {
    pub fn new(out_dir: &Path) -> Self {
        let matrix = out_dir.join("matrix");
        let access = out_dir.join("access");
        let cartogram = out_dir.join("cartogram");
        OutputPaths {
            cube: matrix.join("cube.tdc"),
            cube_free_flow: matrix.join("cube_freeflow.tdc"),
            zones_used: matrix.join("zones_used.csv"),
            matrix_summary: matrix.join("summary.txt"),
            access: access.join("access.csv"),
            baseline: access.join("baseline.csv"),
            area_report: cartogram.join("area.csv"),
            scale: cartogram.join("scale.txt"),
            stats: out_dir.join("stats.txt"),
            manifest: out_dir.join(MANIFEST_FILE),
            cartogram_dir: cartogram,
            frames_dir: out_dir.join("frames"),
        }
    }

    pub fn distorted(&self, direction: Direction) -> PathBuf {
        self.cartogram_dir.join(format!("distorted_{}.csv", direction.as_str()))
    }

    /// Frame directory for a render mode (and direction, for cartograms).
    pub fn frame_set(&self, mode: RenderMode, direction: Option<Direction>) -> PathBuf {
        match direction {
            Some(d) => self.frames_dir.join(format!("{}_{}", mode.as_str(), d.as_str())),
            None => self.frames_dir.join(mode.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: &'static str,
    pub status: StageStatus,
    pub outputs: Vec<PathBuf>,
}

/// Validates `cfg` and runs `command` on a worker pool of `cfg.workers`
/// threads (all cores when 0).
pub fn run(cfg: &RunConfig, command: Command) -> Result<Vec<StageReport>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    pool.install(|| Runner::new(cfg).run(command))
}

/// Label of the scenario that stands for free flow in cartogram outputs.
pub const FREE_FLOW_SCENARIO: &str = "freeflow";

struct Runner<'a> {
    cfg: &'a RunConfig,
    out: OutputPaths,
    manifest: RunManifest,
    reports: Vec<StageReport>,
}

type Inputs = Vec<(&'static str, PathBuf)>;

impl<'a> Runner<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        let out = OutputPaths::new(&cfg.out_dir);
        let manifest = RunManifest::load(&out.manifest);
        Runner {
            cfg,
            out,
            manifest,
            reports: Vec::new(),
        }
    }

    fn run(mut self, command: Command) -> Result<Vec<StageReport>> {
        match command {
            Command::Synth => self.synth()?,
            Command::Matrix => self.matrix()?,
            Command::Access => self.access()?,
            Command::Cartogram => self.cartogram()?,
            Command::Render => self.render()?,
            Command::Stats => self.stats()?,
            Command::All => {
                if self.cfg.synthetic {
                    self.synth()?;
                }
                self.stats()?;
                self.matrix()?;
                self.access()?;
                self.cartogram()?;
                self.render()?;
            }
        }
        Ok(self.reports)
    }

    /// Runs `body` unless the manifest shows the same parameters, inputs
    /// and untouched outputs from an earlier run.
    fn stage(
        &mut self,
        name: &'static str,
        inputs: Inputs,
        params: String,
        body: impl FnOnce(&RunConfig, &OutputPaths) -> Result<Vec<PathBuf>>,
    ) -> Result<()> {
        for (field, path) in &inputs {
            if !path.is_file() {
                return Err(Error::config(
                    *field,
                    format!("input file {} does not exist", path.display()),
                ));
            }
        }
        let paths: Vec<PathBuf> = inputs.into_iter().map(|(_, p)| p).collect();
        let input_hashes = manifest::hash_files(&paths)?;
        let params = hash_bytes(params.as_bytes());
        if self.manifest.is_fresh(name, &params, &input_hashes) {
            info!("{name}: inputs unchanged, skipping");
            let rec = self.manifest.stages.get_mut(name).expect("fresh stage has a record");
            rec.status = StageStatus::Skipped;
            let outputs = rec.outputs.keys().map(PathBuf::from).collect();
            self.manifest.save(&self.out.manifest)?;
            self.reports.push(StageReport {
                stage: name,
                status: StageStatus::Skipped,
                outputs,
            });
            return Ok(());
        }
        info!("{name}: running");
        let started = Clock::now();
        let outputs = body(self.cfg, &self.out)?;
        let seconds = started.elapsed().as_secs_f64();
        info!("{name}: done in {seconds:.2} s");
        self.manifest.stages.insert(
            name.to_owned(),
            StageRecord {
                status: StageStatus::Ran,
                params,
                inputs: input_hashes,
                outputs: manifest::hash_files(&outputs)?,
                seconds,
            },
        );
        self.manifest.save(&self.out.manifest)?;
        self.reports.push(StageReport {
            stage: name,
            status: StageStatus::Ran,
            outputs,
        });
        Ok(())
    }

    fn synth(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let params = format!("{:?} {}", cfg.synthetic_spec(), cfg.seed);
        self.stage("synth", Vec::new(), params, |cfg, _| {
            let inputs = cfg.inputs();
            let files = DatasetFiles {
                network: inputs.network.clone(),
                zones: inputs.zones.clone(),
                layers: inputs.layers.clone(),
                mask: inputs.mask.clone(),
            };
            let data = generate_synthetic(&cfg.synthetic_spec(), cfg.seed)?;
            write_synthetic(&data, &files)?;
            Ok(vec![
                files.network.nodes,
                files.network.edges,
                files.network.profiles,
                files.zones,
                files.layers,
                files.mask,
            ])
        })
    }

    fn network_inputs(&self) -> Inputs {
        let i = self.cfg.inputs();
        vec![
            ("nodes", i.network.nodes),
            ("edges", i.network.edges),
            ("profiles", i.network.profiles),
        ]
    }

    fn stats(&mut self) -> Result<()> {
        let params = format!("{}", self.cfg.weekday);
        self.stage("stats", self.network_inputs(), params, |cfg, out| {
            let net = load_network(&cfg.inputs().network, cfg.weekday)?;
            let report = network_stats(&net).to_string();
            write_text(&out.stats, &report)?;
            Ok(vec![out.stats.clone()])
        })
    }

    fn matrix(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let mut inputs = self.network_inputs();
        inputs.push(("zones", cfg.inputs().zones));
        inputs.push(("mask", cfg.inputs().mask));
        let params = format!(
            "{} {} {} {} {:?}",
            cfg.weekday,
            cfg.slots()?.count(),
            cfg.cell_size_m,
            cfg.buffer_min,
            cfg.snap_radius_m
        );
        self.stage("matrix", inputs, params, |cfg, out| {
            let files = cfg.inputs();
            let net = load_network(&files.network, cfg.weekday)?;
            let grid = ZoneGrid::read_csv(&files.zones, cfg.cell_size_m)?;
            let grid = apply_mask(grid, &read_mask(&files.mask)?)?;
            let snapped = snap_centroids(grid, &net, cfg.snap_radius_m)?;
            let grid = mark_external_buffer(snapped.grid, &net, Some(cfg.buffer_min));
            let free = free_flow_cube(&net, &grid)?;
            let cube = build_cost_cube(&fifoize(net), &grid, &cfg.slots()?)?;

            grid.write_csv(&out.zones_used, true)?;
            cube.write_binary(&out.cube)?;
            free.write_binary(&out.cube_free_flow)?;
            let summary = format!(
                "slots\t{}\ninternal_zones\t{}\ndestination_zones\t{}\ndropped_zones\t{}\nunreachable_pairs\t{}\n",
                cube.slots().count(),
                cube.origins().len(),
                cube.destinations().len(),
                snapped.dropped.len(),
                cube.unreachable_count()
            );
            info!("matrix: {} unreachable (slot, origin, destination) entries", cube.unreachable_count());
            write_text(&out.matrix_summary, &summary)?;
            Ok(vec![
                out.cube.clone(),
                out.cube_free_flow.clone(),
                out.zones_used.clone(),
                out.matrix_summary.clone(),
            ])
        })
    }

    fn matrix_outputs(&self) -> Inputs {
        vec![
            ("zones_used", self.out.zones_used.clone()),
            ("cube", self.out.cube.clone()),
            ("cube_freeflow", self.out.cube_free_flow.clone()),
        ]
    }

    fn access(&mut self) -> Result<()> {
        let params = format!("{} {}", self.cfg.beta, self.cfg.floor_pct);
        self.stage("access", self.matrix_outputs(), params, |cfg, out| {
            let (grid, cube, free) = load_matrix(cfg, out)?;
            let field = AccessibilityField::from_cubes(
                &cube,
                &free,
                &grid.destination_opportunities(),
                &cfg.decay()?,
                cfg.floor_pct,
            )?;
            field.write_access_csv(&out.access)?;
            field.write_baseline_csv(&out.baseline)?;
            Ok(vec![out.access.clone(), out.baseline.clone()])
        })
    }

    fn cartogram(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let mut inputs = self.matrix_outputs();
        inputs.push(("layers", cfg.inputs().layers));
        inputs.push(("mask", cfg.inputs().mask));
        let params = format!(
            "{:?} {} {} {:?} {:?} {:?}",
            cfg.center_zone, cfg.idw_power, cfg.densify_m, cfg.cartogram_scale, cfg.cartogram_scenarios, cfg.direction
        );
        self.stage("cartogram", inputs, params, |cfg, out| {
            let files = cfg.inputs();
            let (grid, cube, free) = load_matrix(cfg, out)?;
            let grid = with_center(grid, cfg)?;
            let center_id = grid.center_zone()?.zone_id;
            let center = grid.center_zone()?.centroid();
            let layers = densify_layers(&read_layers(&files.layers)?, cfg.densify_m)?;
            let points = unit_vectors(&layers, center);
            let boundary = boundary_points(&read_mask(&files.mask)?, cfg.densify_m, center)?;

            let times = to_center_column(&cube, center_id)?;
            let free_times = to_center_column(&free, center_id)?;
            let free_from = surface(&grid, &cube, &free_times, 0, Direction::From, cfg.idw_power)?;
            let scale = match cfg.cartogram_scale {
                Some(s) => s,
                None => auto_scale(&boundary, &free_from, center)?,
            };
            info!("cartogram: {scale:.6} km per minute");

            let slots = cube.slots().count();
            let mut report = String::from("scenario,direction,relative_area_pct\n");
            let mut outputs = Vec::new();
            for &dir in cfg.direction.each() {
                let reference = surface(&grid, &cube, &free_times, 0, dir, cfg.idw_power)?;
                let mut scenarios = vec![(FREE_FLOW_SCENARIO.to_owned(), reference.clone())];
                if cfg.cartogram_scenarios == ScenarioSet::All {
                    for s in 0..slots {
                        let surf = surface(&grid, &cube, &times, s, dir, cfg.idw_power)?;
                        scenarios.push((slot_label(cube.slots(), s), surf));
                    }
                }
                let surfaces: Vec<ImpedanceSurface> = scenarios.iter().map(|(_, s)| s.clone()).collect();
                let areas = relative_area(&boundary, &surfaces, &reference, center, scale)?;
                for ((name, _), pct) in scenarios.iter().zip(&areas) {
                    report.push_str(&format!("{name},{},{pct:.2}\n", dir.as_str()));
                }
                let distorted: Vec<Vec<ReferenceLayer>> = scenarios
                    .par_iter()
                    .map(|(_, s)| rebuild(&layers, &points, &distort(&points, s, center, scale)))
                    .collect();
                let path = out.distorted(dir);
                write_distorted(
                    scenarios.iter().map(|(n, _)| n.as_str()).zip(distorted.iter().map(Vec::as_slice)),
                    &path,
                )?;
                outputs.push(path);
            }
            write_text(&out.area_report, &report)?;
            write_text(&out.scale, &format!("{scale}\n"))?;
            outputs.push(out.area_report.clone());
            outputs.push(out.scale.clone());
            Ok(outputs)
        })
    }

    fn render(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let mut inputs: Inputs = vec![("zones_used", self.out.zones_used.clone())];
        match cfg.mode {
            RenderMode::Choropleth | RenderMode::Extrusion => {
                inputs.push(("access", self.out.access.clone()));
                inputs.push(("baseline", self.out.baseline.clone()));
                if cfg.mode == RenderMode::Choropleth {
                    inputs.push(("layers", cfg.inputs().layers));
                }
            }
            RenderMode::Cartogram => {
                if cfg.cartogram_scenarios != ScenarioSet::All {
                    return Err(Error::config(
                        "cartogram_scenarios",
                        "cartogram frames need every slot distorted (all)",
                    ));
                }
                for &d in cfg.direction.each() {
                    inputs.push(("cartogram", self.out.distorted(d)));
                }
                inputs.push(("cartogram", self.out.scale.clone()));
                inputs.push(("layers", cfg.inputs().layers));
            }
        }
        let params = format!(
            "{:?} {:?} {:?} {} {} {} {} {} {} {} {} {} {:?} {}",
            cfg.mode,
            cfg.direction,
            cfg.ramp()?,
            cfg.fps,
            cfg.canvas_width,
            cfg.canvas_height,
            cfg.height_scale,
            cfg.depth_factor,
            cfg.floor_pct,
            cfg.isoline_min,
            cfg.side_by_side,
            cfg.weekday,
            cfg.center_zone,
            cfg.slots()?.count()
        );
        // one record per mode so switching modes does not invalidate the others
        let name = match cfg.mode {
            RenderMode::Choropleth => "render:choropleth",
            RenderMode::Extrusion => "render:extrusion",
            RenderMode::Cartogram => "render:cartogram",
        };
        self.stage(name, inputs, params, |cfg, out| match cfg.mode {
            RenderMode::Cartogram => render_cartogram_frames(cfg, out),
            _ => render_zone_frames(cfg, out),
        })
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

fn load_matrix(cfg: &RunConfig, out: &OutputPaths) -> Result<(ZoneGrid, CostCube, CostCube)> {
    let grid = ZoneGrid::read_csv(&out.zones_used, cfg.cell_size_m)?;
    let cube = CostCube::read_binary(&out.cube, &grid)?;
    let free = CostCube::read_binary(&out.cube_free_flow, &grid)?;
    if free.slots().count() != 1 {
        return Err(Error::Dimension(format!(
            "{}: free-flow cube has {} slots, expected 1",
            out.cube_free_flow.display(),
            free.slots().count()
        )));
    }
    Ok((grid, cube, free))
}

fn with_center(grid: ZoneGrid, cfg: &RunConfig) -> Result<ZoneGrid> {
    match cfg.center_zone {
        Some(id) => grid.with_center(id).map_err(|e| Error::config("center_zone", e.to_string())),
        None => grid.with_auto_center(),
    }
}

/// The study-area boundary, densified, with unit vectors from `center`.
pub fn boundary_points(mask: &[Point], densify_m: f64, center: Point) -> Result<Vec<DensePoint>> {
    let ring = densify_ring(mask, densify_m)?;
    Ok(unit_vectors(
        &[ReferenceLayer {
            name: "boundary".into(),
            parts: vec![LayerPart {
                name: "study_area".into(),
                kind: PartKind::Polygon,
                points: ring,
            }],
        }],
        center,
    ))
}

/// Travel times between the center and every internal zone, sampled at the
/// zone centroids.
pub fn surface(
    grid: &ZoneGrid,
    cube: &CostCube,
    times: &CenterTimes,
    slot: usize,
    direction: Direction,
    power: f64,
) -> Result<ImpedanceSurface> {
    let samples = grid.internal().map(|z| {
        let v = match direction {
            Direction::To => cube.origin_pos(z.zone_id).map(|o| times.to_center[slot][o]),
            _ => cube.dest_pos(z.zone_id).map(|d| times.from_center[slot][d]),
        };
        (z.centroid(), v.unwrap_or(f64::INFINITY))
    });
    ImpedanceSurface::new(samples.collect::<Vec<_>>(), power)
}

fn fresh_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_frames(
    dir: &Path,
    count: usize,
    fps: f64,
    render: impl Fn(usize) -> Result<String> + Sync,
) -> Result<Vec<PathBuf>> {
    fresh_dir(dir)?;
    let mut files: Vec<PathBuf> = (0..count)
        .into_par_iter()
        .map(|i| {
            let path = dir.join(frame_file_name(i));
            std::fs::write(&path, render(i)?).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect::<Result<_>>()?;
    emit_animation(dir, count, fps)?;
    files.push(dir.join(crate::render::MANIFEST_FILE));
    Ok(files)
}

fn frame_label(cfg: &RunConfig, slots: &crate::routing::SlotSchedule, i: usize) -> String {
    format!("{} {}", cfg.weekday, slot_label(slots, i))
}

fn render_zone_frames(cfg: &RunConfig, out: &OutputPaths) -> Result<Vec<PathBuf>> {
    let grid = ZoneGrid::read_csv(&out.zones_used, cfg.cell_size_m)?;
    let field = AccessibilityField::read_csv(&out.access, &out.baseline, cfg.floor_pct)?;
    if field.zone_ids() != grid.origin_ids().as_slice() {
        return Err(Error::Dimension(format!(
            "{} covers {} zones but {} has {} internal zones",
            out.access.display(),
            field.zone_ids().len(),
            out.zones_used.display(),
            grid.internal_count()
        )));
    }
    let slots = crate::routing::SlotSchedule::new(field.slot_count())?;
    let ramp = cfg.ramp()?;
    let layers = match cfg.mode {
        RenderMode::Choropleth => read_layers(&cfg.inputs().layers)?,
        _ => Vec::new(),
    };
    let corners = grid.internal().flat_map(|z| grid.cell_corners(z));
    let extent = extent_of(corners, cfg.cell_size_m).expect("grid has internal zones");
    let base = FrameSpec::new(cfg.canvas_width, cfg.canvas_height, extent, 40.0)?;
    let view = cfg.extrusion_view();
    let dir = out.frame_set(cfg.mode, None);
    write_frames(&dir, field.slot_count(), cfg.fps, |i| {
        let frame = base.for_scenario(i, frame_label(cfg, &slots, i));
        match cfg.mode {
            RenderMode::Choropleth => render_choropleth(&frame, &grid, field.pct_slot(i), &ramp, &layers),
            _ => render_extrusion(&frame, &grid, field.pct_slot(i), &ramp, &view),
        }
    })
}

fn render_cartogram_frames(cfg: &RunConfig, out: &OutputPaths) -> Result<Vec<PathBuf>> {
    let grid = with_center(ZoneGrid::read_csv(&out.zones_used, cfg.cell_size_m)?, cfg)?;
    let center = grid.center_zone()?.centroid();
    let scale: f64 = std::fs::read_to_string(&out.scale)
        .map_err(|e| Error::io(&out.scale, e))?
        .trim()
        .parse()
        .map_err(|_| Error::parse(&out.scale, 1, "not a number"))?;
    let geographic = densify_layers(&read_layers(&cfg.inputs().layers)?, cfg.densify_m)?;
    let slots = cfg.slots()?;
    let mut files = Vec::new();
    for &dir in cfg.direction.each() {
        let path = out.distorted(dir);
        let scenarios = read_distorted(&path)?;
        let frames: Vec<&Vec<ReferenceLayer>> = (0..slots.count())
            .map(|i| {
                scenarios.get(&slot_label(&slots, i)).ok_or_else(|| {
                    Error::Dimension(format!("{}: no scenario {}", path.display(), slot_label(&slots, i)))
                })
            })
            .collect::<Result<_>>()?;
        let all_points = frames
            .iter()
            .flat_map(|ls| ls.iter().flat_map(|l| l.points()))
            .chain(geographic.iter().flat_map(|l| l.points()))
            .chain(std::iter::once(center));
        let raw = extent_of(all_points, 0.0).expect("center is always present");
        let pad = 0.05 * raw.width().max(raw.height()).max(1.0);
        let extent = extent_of([Point::new(raw.min_x, raw.min_y), Point::new(raw.max_x, raw.max_y)], pad)
            .expect("two points");
        let reach = [
            Point::new(extent.min_x, extent.min_y),
            Point::new(extent.max_x, extent.max_y),
            Point::new(extent.min_x, extent.max_y),
            Point::new(extent.max_x, extent.min_y),
        ]
        .iter()
        .map(|c| c.dist(center))
        .fold(0.0, f64::max);
        let radii = isoline_radii(cfg.isoline_min, scale, reach);
        let base = FrameSpec::new(cfg.canvas_width, cfg.canvas_height, extent, 20.0)?;
        let geo = cfg.side_by_side.then_some(geographic.as_slice());
        let set = out.frame_set(RenderMode::Cartogram, Some(dir));
        files.extend(write_frames(&set, slots.count(), cfg.fps, |i| {
            let frame = base.for_scenario(i, format!("{} ({} center)", frame_label(cfg, &slots, i), dir.as_str()));
            Ok(render_cartogram(&frame, frames[i], center, &radii, geo))
        })?);
    }
    Ok(files)
}

/// Per-scenario relative areas read back from an area report, keyed by
/// `(scenario, direction)`.
pub fn read_area_report(path: &Path) -> Result<BTreeMap<(String, String), f64>> {
    let mut csv = crate::csvio::open_csv(path, &["scenario", "direction", "relative_area_pct"])?;
    let path = csv.path().to_owned();
    let mut out = BTreeMap::new();
    for row in csv.rows() {
        let row = row?;
        row.expect_len(&path, 3)?;
        out.insert(
            (row.str(&path, 0, "scenario")?.to_owned(), row.str(&path, 1, "direction")?.to_owned()),
            row.parse(&path, 2, "relative_area_pct")?,
        );
    }
    Ok(out)
}
