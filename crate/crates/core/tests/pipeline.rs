use std::path::Path;

use tdaccess::accessibility::AccessibilityField;
use tdaccess::pipeline::{self, Command, OutputPaths, RenderMode, RunConfig, StageStatus};
use tdaccess::routing::CostCube;
use tdaccess::zoning::ZoneGrid;
use tdaccess::Error;

fn small(out: &Path, extra: &[(&str, &str)]) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.out_dir = out.to_path_buf();
    let base = [
        ("synth_width_m", "8000"),
        ("synth_height_m", "8000"),
        ("synth_study_radius_m", "3000"),
        ("slot_interval_min", "240"),
    ];
    for (k, v) in base.iter().chain(extra) {
        cfg.set(k, v).unwrap();
    }
    cfg
}

fn statuses(reports: &[pipeline::StageReport]) -> Vec<(&str, StageStatus)> {
    reports.iter().map(|r| (r.stage, r.status)).collect()
}

#[test]
fn synth_is_reproducible_and_loads() {
    let dir = tempfile::tempdir().unwrap();
    let a = small(&dir.path().join("a"), &[("seed", "9")]);
    let b = small(&dir.path().join("b"), &[("seed", "9")]);
    pipeline::run(&a, Command::Synth).unwrap();
    pipeline::run(&b, Command::Synth).unwrap();
    for name in ["nodes.csv", "edges.csv", "profiles.csv", "zones.csv", "layers.csv", "mask.csv"] {
        let x = std::fs::read(a.data_dir().join(name)).unwrap();
        let y = std::fs::read(b.data_dir().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    tdaccess::network::load_network(&a.inputs().network, a.weekday).unwrap();
}

#[test]
fn synth_without_zones_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &[("synth_study_radius_m", "0")]);
    let err = pipeline::run(&cfg, Command::Synth).unwrap_err();
    assert!(err.is_validation(), "{err}");
}

#[test]
fn matrix_writes_tdc1_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &[("slot_interval_min", "360")]);
    pipeline::run(&cfg, Command::Synth).unwrap();
    pipeline::run(&cfg, Command::Matrix).unwrap();
    let bytes = std::fs::read(OutputPaths::new(dir.path()).cube).unwrap();
    assert_eq!(&bytes[..4], b"TDC1");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 4);
    let summary = std::fs::read_to_string(OutputPaths::new(dir.path()).matrix_summary).unwrap();
    assert!(summary.contains("unreachable"), "{summary}");
}

#[test]
fn missing_profile_file_fails_before_routing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &[]);
    pipeline::run(&cfg, Command::Synth).unwrap();
    std::fs::remove_file(cfg.inputs().network.profiles).unwrap();
    let err = pipeline::run(&cfg, Command::Matrix).unwrap_err();
    assert!(err.is_validation(), "{err}");
    assert!(err.to_string().contains("profiles"), "{err}");
    assert!(!OutputPaths::new(dir.path()).cube.exists());
}

#[test]
fn flat_profiles_give_pct_100() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &[("synth_morning_depth", "0"), ("synth_evening_depth", "0")]);
    pipeline::run(&cfg, Command::Synth).unwrap();
    pipeline::run(&cfg, Command::Matrix).unwrap();
    pipeline::run(&cfg, Command::Access).unwrap();
    let text = std::fs::read_to_string(OutputPaths::new(dir.path()).access).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        assert_eq!(line.rsplit(',').next(), Some("100"), "{line}");
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn beta_override_changes_accessibility() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), &[]);
    pipeline::run(&cfg, Command::All).unwrap();
    let out = OutputPaths::new(dir.path());
    let before = AccessibilityField::read_csv(&out.access, &out.baseline, cfg.floor_pct).unwrap();
    cfg.set("beta", "-0.2").unwrap();
    let reports = pipeline::run(&cfg, Command::Access).unwrap();
    assert_eq!(statuses(&reports), vec![("access", StageStatus::Ran)]);
    let after = AccessibilityField::read_csv(&out.access, &out.baseline, cfg.floor_pct).unwrap();
    for s in 0..after.slot_count() {
        for z in 0..after.zone_ids().len() {
            let (a, b) = (after.absolute(s, z), before.absolute(s, z));
            assert!(a < b, "steeper decay must lower accessibility: {a} vs {b}");
        }
    }
}

#[test]
fn cube_from_other_zones_is_a_dimension_error() {
    let dir = tempfile::tempdir().unwrap();
    let big = small(&dir.path().join("big"), &[("synth_width_m", "14000"), ("synth_height_m", "14000"), ("synth_study_radius_m", "5000")]);
    pipeline::run(&big, Command::Synth).unwrap();
    pipeline::run(&big, Command::Matrix).unwrap();
    let cfg = small(&dir.path().join("small"), &[]);
    pipeline::run(&cfg, Command::Synth).unwrap();
    pipeline::run(&cfg, Command::Matrix).unwrap();
    let out = OutputPaths::new(&cfg.out_dir);
    std::fs::copy(OutputPaths::new(&big.out_dir).cube, &out.cube).unwrap();
    let err = pipeline::run(&cfg, Command::Access).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)), "{err}");
    assert!(!err.is_validation());
}

#[test]
fn free_flow_only_report_is_one_row_at_100() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &[("cartogram_scenarios", "freeflow"), ("direction", "from")]);
    pipeline::run(&cfg, Command::Synth).unwrap();
    pipeline::run(&cfg, Command::Matrix).unwrap();
    pipeline::run(&cfg, Command::Cartogram).unwrap();
    let path = OutputPaths::new(dir.path()).area_report;
    let report = pipeline::read_area_report(&path).unwrap();
    assert_eq!(report.len(), 1);
    assert_eq!(report[&("freeflow".to_string(), "from".to_string())], 100.0);
    assert!(std::fs::read_to_string(&path).unwrap().contains("100.00"));
}

#[test]
fn direction_selects_row_or_column() {
    let dir = tempfile::tempdir().unwrap();
    let both = small(dir.path(), &[]);
    pipeline::run(&both, Command::Synth).unwrap();
    pipeline::run(&both, Command::Matrix).unwrap();
    pipeline::run(&both, Command::Cartogram).unwrap();
    let out = OutputPaths::new(dir.path());
    let report = pipeline::read_area_report(&out.area_report).unwrap();
    let slots = both.slots().unwrap().count() + 1;
    for d in ["from", "to"] {
        assert_eq!(report.keys().filter(|(_, dir)| dir == d).count(), slots);
    }
    assert!(out.distorted(pipeline::Direction::From).exists());
    assert!(out.distorted(pipeline::Direction::To).exists());
    // asymmetric peaks make the two sections differ somewhere
    assert!(report.iter().any(|((s, d), v)| d == "from" && report[&(s.clone(), "to".into())] != *v));

    let only_to = small(&dir.path().join("to"), &[("direction", "to"), ("data_dir", both.data_dir().to_str().unwrap())]);
    pipeline::run(&only_to, Command::Matrix).unwrap();
    pipeline::run(&only_to, Command::Cartogram).unwrap();
    let to = pipeline::read_area_report(&OutputPaths::new(&only_to.out_dir).area_report).unwrap();
    assert!(to.keys().all(|(_, d)| d == "to"));
    for (k, v) in &to {
        assert_eq!(report[k], *v, "{k:?}");
    }
}

#[test]
fn modes_write_their_own_frames() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), &[("direction", "from")]);
    pipeline::run(&cfg, Command::All).unwrap();
    let out = OutputPaths::new(dir.path());
    let slots = cfg.slots().unwrap().count();
    for mode in [RenderMode::Choropleth, RenderMode::Extrusion, RenderMode::Cartogram] {
        cfg.mode = mode;
        pipeline::run(&cfg, Command::Render).unwrap();
        let set = match mode {
            RenderMode::Cartogram => out.frame_set(mode, Some(pipeline::Direction::From)),
            _ => out.frame_set(mode, None),
        };
        let svgs = std::fs::read_dir(&set)
            .unwrap()
            .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
            .count();
        assert_eq!(svgs, slots, "{}", set.display());
        let first = std::fs::read_to_string(set.join("frame_0000.svg")).unwrap();
        let marker = match mode {
            RenderMode::Choropleth => "data-zone",
            RenderMode::Extrusion => "<polygon",
            RenderMode::Cartogram => "<circle",
        };
        assert!(first.contains(marker), "{}", mode.as_str());
    }
}

#[test]
fn rerun_skips_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &[]);
    let first = pipeline::run(&cfg, Command::All).unwrap();
    assert!(first.iter().all(|r| r.status == StageStatus::Ran));
    let second = pipeline::run(&cfg, Command::All).unwrap();
    assert!(second.iter().all(|r| r.status == StageStatus::Skipped), "{:?}", statuses(&second));

    // touching an input reruns its consumers only
    let mut cfg = cfg;
    cfg.set("floor_pct", "40").unwrap();
    let third = pipeline::run(&cfg, Command::All).unwrap();
    let ran: Vec<&str> = third.iter().filter(|r| r.status == StageStatus::Ran).map(|r| r.stage).collect();
    assert!(ran.contains(&"access"), "{ran:?}");
    assert!(!ran.contains(&"matrix"), "{ran:?}");
}

#[test]
fn matrix_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &[]);
    pipeline::run(&cfg, Command::Synth).unwrap();
    pipeline::run(&cfg, Command::Matrix).unwrap();
    let out = OutputPaths::new(dir.path());
    let grid = ZoneGrid::read_csv(&out.zones_used, cfg.cell_size_m).unwrap();
    let cube = CostCube::read_binary(&out.cube, &grid).unwrap();
    assert_eq!(cube.slots().count(), 6);
    assert_eq!(cube.origins(), grid.origin_ids().as_slice());
}
