//! Potential accessibility with negative-exponential travel-time decay, its
//! free-flow baseline and the percent-of-baseline field.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::csvio::{create, finish, open_csv};
use crate::error::{Error, Result};
use crate::network::{fifoize, RoadNetwork};
use crate::routing::{build_cost_cube, CostCube, SlotSchedule};
use crate::zoning::ZoneGrid;

pub const DEFAULT_BETA: f64 = -0.065;
pub const DEFAULT_FLOOR_PCT: f64 = 50.0;

/// Decay parameter in 1/minutes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    beta: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams { beta: DEFAULT_BETA }
    }
}

impl DecayParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta < 0.0) {
            return Err(Error::config("beta", format!("{beta} must be a negative number")));
        }
        Ok(DecayParams { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `exp(beta · cost)`; unreachable (`+inf`) destinations weigh zero.
pub fn decay_weight(cost_min: f64, params: &DecayParams) -> Result<f64> {
    if cost_min.is_nan() || cost_min < 0.0 {
        return Err(Error::invalid("cost", format!("{cost_min} is negative")));
    }
    if cost_min.is_infinite() {
        return Ok(0.0);
    }
    Ok((params.beta * cost_min).exp())
}

/// Sum of destination opportunities weighted by travel-time decay, in
/// destination order.
pub fn potential_accessibility(cost_row: &[f64], opportunities: &[f64], params: &DecayParams) -> Result<f64> {
    if cost_row.len() != opportunities.len() {
        return Err(Error::Dimension(format!(
            "{} costs vs {} opportunities",
            cost_row.len(),
            opportunities.len()
        )));
    }
    let mut sum = 0.0;
    for (c, d) in cost_row.iter().zip(opportunities) {
        sum += d * decay_weight(*c, params)?;
    }
    Ok(sum)
}

/// Accessibility of every cube origin at every slot, `[slot][origin]`
/// flattened slot-major.
pub fn absolute_from_cube(cube: &CostCube, opportunities: &[f64], params: &DecayParams) -> Result<Vec<f64>> {
    if opportunities.len() != cube.destinations().len() {
        return Err(Error::Dimension(format!(
            "cube has {} destinations but {} opportunity values were given",
            cube.destinations().len(),
            opportunities.len()
        )));
    }
    let o = cube.origins().len();
    (0..cube.slots().count() * o)
        .into_par_iter()
        .map(|row| potential_accessibility(cube.row(row / o, row % o), opportunities, params))
        .collect()
}

/// Accessibility per internal zone with every edge at free-flow speed.
pub fn free_flow_baseline(network: &RoadNetwork, grid: &ZoneGrid, params: &DecayParams) -> Result<Vec<f64>> {
    let cube = free_flow_cube(network, grid)?;
    absolute_from_cube(&cube, &grid.destination_opportunities(), params)
}

/// The single-scenario cube with all profiles ignored.
pub fn free_flow_cube(network: &RoadNetwork, grid: &ZoneGrid) -> Result<CostCube> {
    let free = fifoize(network.without_profiles());
    build_cost_cube(&free, grid, &SlotSchedule::new(1)?)
}

/// `max(floor, 100 · absolute / baseline)`; `None` when the baseline is not
/// positive.
pub fn relative_pct(absolute: f64, baseline: f64, floor_pct: f64) -> Option<f64> {
    (baseline > 0.0).then(|| (100.0 * (absolute / baseline)).max(floor_pct))
}

/// Percent-of-baseline for a slot-major `[slot][zone]` field.
pub fn relative_field(absolute: &[f64], baseline: &[f64], floor_pct: f64) -> Result<Vec<Option<f64>>> {
    if baseline.is_empty() || absolute.len() % baseline.len() != 0 {
        return Err(Error::Dimension(format!(
            "{} absolute values do not tile {} zones",
            absolute.len(),
            baseline.len()
        )));
    }
    Ok(absolute
        .iter()
        .enumerate()
        .map(|(i, a)| relative_pct(*a, baseline[i % baseline.len()], floor_pct))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessibilityField {
    zone_ids: Vec<u32>,
    slots: usize,
    absolute: Vec<f64>,
    baseline: Vec<f64>,
    pct: Vec<Option<f64>>,
    floor_pct: f64,
}

impl AccessibilityField {
    pub fn new(
        zone_ids: Vec<u32>,
        slots: usize,
        absolute: Vec<f64>,
        baseline: Vec<f64>,
        floor_pct: f64,
    ) -> Result<Self> {
        if baseline.len() != zone_ids.len() || absolute.len() != slots * zone_ids.len() {
            return Err(Error::Dimension(format!(
                "{} zones, {} baseline values, {} absolute values for {slots} slots",
                zone_ids.len(),
                baseline.len(),
                absolute.len()
            )));
        }
        let pct = relative_field(&absolute, &baseline, floor_pct)?;
        Ok(AccessibilityField {
            zone_ids,
            slots,
            absolute,
            baseline,
            pct,
            floor_pct,
        })
    }

    /// Evaluates the cube against the free-flow cube's baseline.
    pub fn from_cubes(
        cube: &CostCube,
        free_flow: &CostCube,
        opportunities: &[f64],
        params: &DecayParams,
        floor_pct: f64,
    ) -> Result<Self> {
        if free_flow.origins() != cube.origins() || free_flow.destinations() != cube.destinations() {
            return Err(Error::Dimension("free-flow cube axes differ from the cost cube".into()));
        }
        let absolute = absolute_from_cube(cube, opportunities, params)?;
        let baseline = absolute_from_cube(free_flow, opportunities, params)?;
        Self::new(cube.origins().to_vec(), cube.slots().count(), absolute, baseline[..cube.origins().len()].to_vec(), floor_pct)
    }

    pub fn zone_ids(&self) -> &[u32] {
        &self.zone_ids
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    pub fn floor_pct(&self) -> f64 {
        self.floor_pct
    }

    pub fn absolute(&self, slot: usize, zone: usize) -> f64 {
        self.absolute[slot * self.zone_ids.len() + zone]
    }

    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }

    pub fn pct(&self, slot: usize, zone: usize) -> Option<f64> {
        self.pct[slot * self.zone_ids.len() + zone]
    }

    /// Percent values for one slot, aligned with [`zone_ids`](Self::zone_ids).
    pub fn pct_slot(&self, slot: usize) -> &[Option<f64>] {
        let n = self.zone_ids.len();
        &self.pct[slot * n..(slot + 1) * n]
    }

    /// Zones whose baseline is zero; they carry no percentage.
    pub fn gap_zones(&self) -> Vec<u32> {
        self.zone_ids
            .iter()
            .zip(&self.baseline)
            .filter(|(_, b)| !(**b > 0.0))
            .map(|(z, _)| *z)
            .collect()
    }

    /// `access.csv`: `zone_id,slot,abs_value,pct` (empty pct for gaps).
    pub fn write_access_csv(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "zone_id,slot,abs_value,pct").map_err(io)?;
        for (zi, z) in self.zone_ids.iter().enumerate() {
            for s in 0..self.slots {
                let pct = self.pct(s, zi).map(|p| p.to_string()).unwrap_or_default();
                writeln!(w, "{z},{s},{},{pct}", self.absolute(s, zi)).map_err(io)?;
            }
        }
        finish(path, w)
    }

    /// `baseline.csv`: `zone_id,baseline_value`.
    pub fn write_baseline_csv(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "zone_id,baseline_value").map_err(io)?;
        for (z, b) in self.zone_ids.iter().zip(&self.baseline) {
            writeln!(w, "{z},{b}").map_err(io)?;
        }
        finish(path, w)
    }

    /// Reads back `access.csv` and `baseline.csv`.
    pub fn read_csv(access: &Path, baseline: &Path, floor_pct: f64) -> Result<Self> {
        let mut csv = open_csv(baseline, &["zone_id", "baseline_value"])?;
        let path = csv.path().to_owned();
        let mut zone_ids = Vec::new();
        let mut base = Vec::new();
        for row in csv.rows() {
            let row = row?;
            row.expect_len(&path, 2)?;
            zone_ids.push(row.parse::<u32>(&path, 0, "zone_id")?);
            base.push(row.parse::<f64>(&path, 1, "baseline_value")?);
        }

        let mut csv = open_csv(access, &["zone_id", "slot", "abs_value", "pct"])?;
        let path = csv.path().to_owned();
        let mut rows = Vec::new();
        for row in csv.rows() {
            let row = row?;
            row.expect_len(&path, 4)?;
            let zone: u32 = row.parse(&path, 0, "zone_id")?;
            let slot: usize = row.parse(&path, 1, "slot")?;
            let value: f64 = row.parse(&path, 2, "abs_value")?;
            let zi = zone_ids
                .iter()
                .position(|z| *z == zone)
                .ok_or_else(|| Error::parse(&path, row.line, format!("zone {zone} not in baseline file")))?;
            rows.push((slot, zi, value));
        }
        let slots = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
        if rows.len() != slots * zone_ids.len() {
            return Err(Error::Dimension(format!(
                "{}: {} rows for {slots} slots × {} zones",
                path.display(),
                rows.len(),
                zone_ids.len()
            )));
        }
        let mut absolute = vec![f64::NAN; rows.len()];
        for (s, zi, v) in rows {
            absolute[s * zone_ids.len() + zi] = v;
        }
        if absolute.iter().any(|v| v.is_nan()) {
            return Err(Error::Dimension(format!("{}: duplicate (zone, slot) rows", path.display())));
        }
        Self::new(zone_ids, slots, absolute, base, floor_pct)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn weights() {
        let p = DecayParams::default();
        assert_eq!(decay_weight(0.0, &p).unwrap(), 1.0);
        assert_eq!(decay_weight(f64::INFINITY, &p).unwrap(), 0.0);
        // e^-0.65 = 0.52204577676101604...
        assert_relative_eq!(decay_weight(10.0, &p).unwrap(), 0.522046, epsilon = 1e-6);
        assert!(decay_weight(-1.0, &p).is_err());
        assert!(decay_weight(f64::NAN, &p).is_err());
    }

    #[test]
    fn beta_must_be_negative() {
        assert!(DecayParams::new(0.0).is_err());
        assert!(DecayParams::new(0.1).is_err());
        assert!(DecayParams::new(f64::NAN).is_err());
        assert_eq!(DecayParams::new(-0.1).unwrap().beta(), -0.1);
    }

    #[test]
    fn accessibility_sums() {
        let p = DecayParams::default();
        assert_eq!(potential_accessibility(&[0.0], &[100.0], &p).unwrap(), 100.0);
        assert_relative_eq!(
            potential_accessibility(&[0.0, 10.0], &[100.0, 100.0], &p).unwrap(),
            152.2046,
            epsilon = 1e-4
        );
        assert_eq!(potential_accessibility(&[0.0, 3.0, 9.0], &[0.0; 3], &p).unwrap(), 0.0);
        assert_eq!(
            potential_accessibility(&[0.0, f64::INFINITY], &[5.0, 1e9], &p).unwrap(),
            5.0
        );
        assert!(matches!(
            potential_accessibility(&[0.0], &[1.0, 2.0], &p),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn relative_values() {
        assert_eq!(relative_pct(7.0, 7.0, 50.0), Some(100.0));
        assert_eq!(relative_pct(0.3, 1.0, 50.0), Some(50.0));
        assert_relative_eq!(relative_pct(0.8, 1.0, 50.0).unwrap(), 80.0, epsilon = 1e-12);
        assert_eq!(relative_pct(0.0, 0.0, 50.0), None);
    }

    #[test]
    fn field_flags_gap_zones_and_round_trips() {
        let f = AccessibilityField::new(vec![3, 8], 2, vec![10.0, 0.0, 5.0, 0.0], vec![10.0, 0.0], 50.0).unwrap();
        assert_eq!(f.gap_zones(), vec![8]);
        assert_eq!(f.pct(0, 0), Some(100.0));
        assert_eq!(f.pct(1, 0), Some(50.0));
        assert_eq!(f.pct(1, 1), None);

        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("access.csv"), dir.path().join("baseline.csv"));
        f.write_access_csv(&a).unwrap();
        f.write_baseline_csv(&b).unwrap();
        assert_eq!(AccessibilityField::read_csv(&a, &b, 50.0).unwrap(), f);
    }

    proptest! {
        #[test]
        fn weight_is_decreasing(a in 0.0f64..500.0, b in 0.0f64..500.0) {
            let p = DecayParams::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(decay_weight(lo, &p).unwrap() >= decay_weight(hi, &p).unwrap());
            if lo < hi - 1e-9 {
                prop_assert!(decay_weight(lo, &p).unwrap() > decay_weight(hi, &p).unwrap());
            }
        }

        #[test]
        fn scaling_opportunities_scales_accessibility(
            costs in proptest::collection::vec(0.0f64..120.0, 1..12),
            k in 0.01f64..100.0,
        ) {
            let p = DecayParams::default();
            let d: Vec<f64> = (0..costs.len()).map(|i| 10.0 + i as f64).collect();
            let dk: Vec<f64> = d.iter().map(|v| v * k).collect();
            let a = potential_accessibility(&costs, &d, &p).unwrap();
            let ak = potential_accessibility(&costs, &dk, &p).unwrap();
            prop_assert!((ak - k * a).abs() <= 1e-12 * ak.abs().max(1.0));
        }
    }
}
