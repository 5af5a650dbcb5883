//! Base-station energy model and cost-versus-load curve tabulation.
//!
//! A cell's consumption splits into a load-proportional amplifier part and a
//! constant platform part: e_tot = (P_PA + P_c - P_idle) * rho + P_idle, with
//! rho the M/G/1-PS server activity. rho solves a fixed point because every
//! cell's rate depends on how busy its interferers are; wrap-around symmetry
//! collapses the network to one representative cell whose 18 interferers all
//! share its activity.

use crate::geometry::{self, HexLayout, CELL_COUNT};
use crate::radio::{
    aggregate_from_received_powers, path_gain, rate_at_outage, RadioError, RadioParams,
};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("invalid power parameter: {0}")]
    InvalidParams(String),
    #[error("PA output power must be positive, got {0} W")]
    NonPositivePaPower(f64),
    #[error("PA output {p_w} W exceeds the average-power limit {limit_w} W")]
    PaPowerAboveLimit { p_w: f64, limit_w: f64 },
    #[error("offered load must be a finite non-negative rate, got {0} bps")]
    InvalidLoad(f64),
    #[error("offered load {0} bps has no stable activity below one")]
    InfeasibleLoad(f64),
    #[error("activity fixed point still moving after {iterations} iterations (last rho {last_rho})")]
    NoConvergence { last_rho: f64, iterations: usize },
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
}

/// Static power draws and the travelling-wave amplifier law.
#[derive(Debug, Clone, Copy)]
pub struct PowerParams {
    /// PA efficiency at maximum output, in (0, 1].
    pub eta_max: f64,
    /// Maximum PA output power in watts.
    pub p_max_pa_w: f64,
    /// Cap on average transmit power in watts, at most `p_max_pa_w`.
    pub p_max_avg_w: f64,
    /// Non-PA circuit power while serving, watts.
    pub p_c_w: f64,
    /// Total draw of an awake but empty cell, watts.
    pub p_idle_w: f64,
    /// Draw of a sleeping cell, watts.
    pub p_sleep_w: f64,
}

impl PowerParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let fail = |msg: String| Err(EnergyError::InvalidParams(msg));
        if !(self.eta_max > 0.0 && self.eta_max <= 1.0) {
            return fail(format!("eta_max must lie in (0, 1], got {}", self.eta_max));
        }
        if !(self.p_max_pa_w > 0.0) {
            return fail(format!("p_max_pa_w must be positive, got {}", self.p_max_pa_w));
        }
        if !(self.p_max_avg_w > 0.0 && self.p_max_avg_w <= self.p_max_pa_w) {
            return fail(format!(
                "p_max_avg_w must lie in (0, p_max_pa_w], got {}",
                self.p_max_avg_w
            ));
        }
        if !(self.p_c_w >= 0.0) {
            return fail(format!("p_c_w must be non-negative, got {}", self.p_c_w));
        }
        if !(self.p_idle_w >= 0.0) {
            return fail(format!("p_idle_w must be non-negative, got {}", self.p_idle_w));
        }
        if !(self.p_sleep_w >= 0.0 && self.p_sleep_w <= self.p_idle_w) {
            return fail(format!(
                "p_sleep_w must lie in [0, p_idle_w], got {}",
                self.p_sleep_w
            ));
        }
        Ok(())
    }
}

/// DC input power of a travelling-wave PA emitting average power `p_w`:
/// sqrt(p * p_max) / eta_max. Efficiency degrades as sqrt(p / p_max) backed
/// off from peak.
pub fn pa_input_power(p_w: f64, params: &PowerParams) -> Result<f64, EnergyError> {
    if !(p_w > 0.0) {
        return Err(EnergyError::NonPositivePaPower(p_w));
    }
    if p_w > params.p_max_avg_w {
        return Err(EnergyError::PaPowerAboveLimit {
            p_w,
            limit_w: params.p_max_avg_w,
        });
    }
    Ok((p_w * params.p_max_pa_w).sqrt() / params.eta_max)
}

/// Uniform traffic offered by one cell: identical flows at each grid location.
#[derive(Debug, Clone, Copy)]
pub struct TrafficModel {
    /// Flow arrival rate at each user location, per second.
    pub arrival_rate_per_location_hz: f64,
    /// Mean flow size in bits.
    pub flow_size_bits: f64,
}

impl TrafficModel {
    /// Total offered load of a cell with `locations` user positions, bps.
    pub fn offered_load_bps(&self, locations: usize) -> f64 {
        self.arrival_rate_per_location_hz * self.flow_size_bits * locations as f64
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions {
    /// Stop once successive activities differ by at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 100,
        }
    }
}

/// Tight options used when tabulating curves, where downstream convexity
/// checks at 1e-9 W would otherwise drown in fixed-point noise.
const CURVE_OPTIONS: FixedPointOptions = FixedPointOptions {
    tol: 1e-12,
    max_iter: 200_000,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivitySolution {
    /// Converged activity in [0, 1), or 1.0 when infeasible.
    pub rho: f64,
    pub iterations: usize,
    pub feasible: bool,
}

struct CellLink {
    serving_km: f64,
    /// Median received power from each of the other 18 cells, watts.
    interferer_rx_w: Vec<f64>,
}

/// Representative-cell model with link geometry resolved once up front.
pub struct NetworkModel {
    pub radio: RadioParams,
    pub power: PowerParams,
    /// DC draw of the PA at the configured transmit power, watts.
    pub pa_power_w: f64,
    links: Vec<CellLink>,
}

impl NetworkModel {
    pub fn new(
        layout: &HexLayout,
        radio: RadioParams,
        power: PowerParams,
    ) -> Result<Self, EnergyError> {
        radio.validate()?;
        power.validate()?;
        let pa_power_w = pa_input_power(radio.tx_power_w, &power)?;
        let grid = geometry::user_grid(layout, 0)?;
        let links = grid
            .points
            .iter()
            .map(|&p| {
                let serving_km = geometry::wrapped_distance(layout, p, layout.cell_centers[0]);
                let interferer_rx_w = (1..CELL_COUNT)
                    .map(|c| {
                        let d = geometry::wrapped_distance(layout, p, layout.cell_centers[c]);
                        Ok(radio.tx_power_w
                            * radio.gain_at_1km
                            * path_gain(d, radio.pathloss_exponent)?)
                    })
                    .collect::<Result<Vec<f64>, RadioError>>()?;
                Ok(CellLink {
                    serving_km,
                    interferer_rx_w,
                })
            })
            .collect::<Result<Vec<CellLink>, EnergyError>>()?;
        Ok(Self {
            radio,
            power,
            pa_power_w,
            links,
        })
    }

    pub fn user_locations(&self) -> usize {
        self.links.len()
    }

    /// One application of the activity map: the utilization the cell would
    /// need to carry `load_bps` if every interferer were busy a fraction
    /// `rho` of the time. Fixed points of this map are self-consistent.
    pub fn activity_map(&self, load_bps: f64, rho: f64) -> Result<f64, EnergyError> {
        let per_location = load_bps / self.links.len() as f64;
        let mut total = 0.0;
        let mut terms = [(0.0f64, 0.0f64); CELL_COUNT - 1];
        for link in &self.links {
            for (slot, &p) in terms.iter_mut().zip(&link.interferer_rx_w) {
                *slot = (p, rho);
            }
            let agg = aggregate_from_received_powers(&terms, self.radio.shadow_sigma_db)?;
            let rate = rate_at_outage(link.serving_km, agg.as_ref(), &self.radio)?;
            total += per_location / rate;
        }
        Ok(total)
    }

    /// Successive substitution from rho = 1. The map is increasing in rho, so
    /// iterates from the top are non-increasing and converge to the largest
    /// fixed point in [0, 1); a first step that stays at or above one proves
    /// the load infeasible.
    pub fn activity_fixed_point(
        &self,
        load_bps: f64,
        opts: &FixedPointOptions,
    ) -> Result<ActivitySolution, EnergyError> {
        if !load_bps.is_finite() || load_bps < 0.0 {
            return Err(EnergyError::InvalidLoad(load_bps));
        }
        let mut rho = 1.0f64;
        for iterations in 1..=opts.max_iter {
            let next = self.activity_map(load_bps, rho)?;
            if next >= 1.0 {
                return Ok(ActivitySolution {
                    rho: 1.0,
                    iterations,
                    feasible: false,
                });
            }
            if (next - rho).abs() <= opts.tol {
                return Ok(ActivitySolution {
                    rho: next,
                    iterations,
                    feasible: true,
                });
            }
            rho = next;
        }
        Err(EnergyError::NoConvergence {
            last_rho: rho,
            iterations: opts.max_iter,
        })
    }

    /// Largest offered load whose activity settles at or below 0.999,
    /// located by doubling then bisecting to 1e-9 relative width. Loads are
    /// meaningful as fractions of this capacity.
    pub fn feasible_load_bps(&self) -> Result<f64, EnergyError> {
        let feasible = |load: f64| -> bool {
            matches!(
                self.activity_fixed_point(load, &CURVE_OPTIONS),
                Ok(ActivitySolution { rho, feasible: true, .. }) if rho <= 0.999
            )
        };
        let mut lo = 0.0f64;
        let mut hi = 1e6f64;
        let mut doublings = 0;
        while feasible(hi) {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 80 {
                return Err(EnergyError::InvalidParams(
                    "cell capacity did not saturate under load doubling".into(),
                ));
            }
        }
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Consumption at an offered load; `None` means the cell sleeps. An awake
    /// empty cell draws exactly `p_idle_w`.
    pub fn total_energy(&self, load_bps: Option<f64>) -> Result<f64, EnergyError> {
        let Some(load) = load_bps else {
            return Ok(self.power.p_sleep_w);
        };
        let sol = self.activity_fixed_point(load, &CURVE_OPTIONS)?;
        if !sol.feasible {
            return Err(EnergyError::InfeasibleLoad(load));
        }
        Ok((self.pa_power_w + self.power.p_c_w - self.power.p_idle_w) * sol.rho
            + self.power.p_idle_w)
    }
}

/// Energy at each multiple of `delta_l` of the cell's feasible load.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCurve {
    /// Normalized loads 0, delta_l, ..., 1.
    pub load_grid: Vec<f64>,
    /// Awake consumption at each grid load, watts.
    pub energy_w: Vec<f64>,
    pub delta_l: f64,
    pub sleep_power_w: f64,
}

impl CostCurve {
    pub fn from_energies(
        energy_w: Vec<f64>,
        delta_l: f64,
        sleep_power_w: f64,
    ) -> Result<Self, EnergyError> {
        let units = energy_w.len().saturating_sub(1);
        if units == 0 {
            return Err(EnergyError::InvalidParams(
                "a cost curve needs at least two energy samples".into(),
            ));
        }
        let load_grid = (0..=units).map(|k| k as f64 / units as f64).collect();
        let curve = Self {
            load_grid,
            energy_w,
            delta_l,
            sleep_power_w,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Number of tradeable load units (grid intervals).
    pub fn units(&self) -> usize {
        self.energy_w.len() - 1
    }

    /// Energy at `units_loaded` grid steps of load.
    pub fn energy_at(&self, units_loaded: usize) -> f64 {
        self.energy_w[units_loaded]
    }

    pub fn idle_power_w(&self) -> f64 {
        self.energy_w[0]
    }

    /// Cost of the m-th load unit, m in 1..=units().
    pub fn marginal(&self, m: usize) -> f64 {
        self.energy_w[m] - self.energy_w[m - 1]
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        let fail = |msg: String| Err(EnergyError::InvalidParams(msg));
        let n = self.energy_w.len();
        if self.load_grid.len() != n {
            return fail("load grid and energy samples disagree in length".into());
        }
        let units = n - 1;
        if !(self.delta_l > 0.0) || ((units as f64 * self.delta_l) - 1.0).abs() > 1e-6 {
            return fail(format!(
                "delta_l {} times {} units must span the unit interval",
                self.delta_l, units
            ));
        }
        if self.load_grid[0] != 0.0 || (self.load_grid[units] - 1.0).abs() > 1e-12 {
            return fail("load grid must run from 0 to 1".into());
        }
        if !(self.sleep_power_w >= 0.0 && self.sleep_power_w <= self.energy_w[0]) {
            return fail(format!(
                "sleep power {} must lie in [0, idle power {}]",
                self.sleep_power_w, self.energy_w[0]
            ));
        }
        for w in self.energy_w.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return fail(format!(
                    "energy must rise strictly with load, got {} then {}",
                    w[0], w[1]
                ));
            }
        }
        for w in self.energy_w.windows(3) {
            if (w[2] - w[1]) - (w[1] - w[0]) < -1e-9 {
                return fail(format!(
                    "marginal energy must be non-decreasing, got {} then {}",
                    w[1] - w[0],
                    w[2] - w[1]
                ));
            }
        }
        Ok(())
    }
}

/// Tabulates a cell's cost curve on the `delta_l` load grid. `delta_l` must
/// divide 1 into a whole number of units.
pub fn build_cost_curve(model: &NetworkModel, delta_l: f64) -> Result<CostCurve, EnergyError> {
    let units_f = (1.0 / delta_l).round();
    if !(delta_l > 0.0 && delta_l <= 1.0)
        || !units_f.is_finite()
        || units_f < 1.0
        || (units_f * delta_l - 1.0).abs() > 1e-6
    {
        return Err(EnergyError::InvalidParams(format!(
            "delta_l {} must divide the unit load range evenly",
            delta_l
        )));
    }
    let units = units_f as usize;
    let l_max = model.feasible_load_bps()?;
    let energy_w = (0..=units)
        .into_par_iter()
        .map(|k| model.total_energy(Some(k as f64 / units as f64 * l_max)))
        .collect::<Result<Vec<f64>, EnergyError>>()?;
    CostCurve::from_energies(energy_w, 1.0 / units as f64, model.power.p_sleep_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layout;
    use crate::radio::dbm_to_watts;
    use std::sync::OnceLock;

    fn table_power() -> PowerParams {
        PowerParams {
            eta_max: 0.8,
            p_max_pa_w: dbm_to_watts(53.0),
            p_max_avg_w: dbm_to_watts(53.0),
            p_c_w: 58.6,
            p_idle_w: 58.6,
            p_sleep_w: 0.0,
        }
    }

    fn table_radio() -> RadioParams {
        RadioParams {
            pathloss_exponent: 3.6,
            shadow_sigma_db: 5.5,
            bandwidth_hz: 20e6,
            noise_w: dbm_to_watts(-106.0),
            tx_power_w: dbm_to_watts(46.0),
            outage_target: 0.1,
            gain_at_1km: 1.0,
        }
    }

    fn model_and_capacity() -> &'static (NetworkModel, f64) {
        static CELL: OnceLock<(NetworkModel, f64)> = OnceLock::new();
        CELL.get_or_init(|| {
            let layout = build_layout(1.0);
            let model = NetworkModel::new(&layout, table_radio(), table_power()).unwrap();
            let l_max = model.feasible_load_bps().unwrap();
            (model, l_max)
        })
    }

    #[test]
    fn pa_draw_at_table_point() {
        let p = table_power();
        let pa = pa_input_power(dbm_to_watts(46.0), &p).unwrap();
        assert!((pa - 111.4).abs() < 0.1, "pa = {pa}");
        // Inverting the law recovers the output power.
        let back = (pa * p.eta_max).powi(2) / p.p_max_pa_w;
        assert!((back - dbm_to_watts(46.0)).abs() < 1e-12 * back);
    }

    #[test]
    fn pa_rejects_out_of_range_power() {
        let p = table_power();
        assert!(matches!(
            pa_input_power(0.0, &p),
            Err(EnergyError::NonPositivePaPower(_))
        ));
        assert!(matches!(
            pa_input_power(p.p_max_avg_w * 1.01, &p),
            Err(EnergyError::PaPowerAboveLimit { .. })
        ));
    }

    #[test]
    fn power_params_validation() {
        let mut p = table_power();
        p.eta_max = 1.3;
        assert!(p.validate().is_err());
        let mut p = table_power();
        p.p_sleep_w = p.p_idle_w + 1.0;
        assert!(p.validate().is_err());
        assert!(table_power().validate().is_ok());
    }

    #[test]
    fn sleep_and_idle_consumption_are_exact() {
        let (model, _) = model_and_capacity();
        assert_eq!(model.total_energy(None).unwrap(), 0.0);
        assert_eq!(model.total_energy(Some(0.0)).unwrap(), 58.6);
    }

    #[test]
    fn zero_load_fixed_point_is_zero_activity() {
        let (model, _) = model_and_capacity();
        let sol = model
            .activity_fixed_point(0.0, &FixedPointOptions::default())
            .unwrap();
        assert_eq!(sol.rho, 0.0);
        assert!(sol.feasible);
        assert!(sol.iterations <= 2);
    }

    #[test]
    fn iterates_descend_monotonically_from_one() {
        let (model, l_max) = model_and_capacity();
        let load = 0.5 * l_max;
        let mut rho = 1.0f64;
        for _ in 0..50 {
            let next = model.activity_map(load, rho).unwrap();
            assert!(next <= rho + 1e-15, "map rose: {rho} -> {next}");
            rho = next;
        }
        assert!(rho > 0.0 && rho < 1.0);
    }

    #[test]
    fn absurd_load_is_flagged_infeasible() {
        let (model, _) = model_and_capacity();
        let sol = model
            .activity_fixed_point(1e13, &FixedPointOptions::default())
            .unwrap();
        assert!(!sol.feasible);
        assert!(matches!(
            model.total_energy(Some(1e13)),
            Err(EnergyError::InfeasibleLoad(_))
        ));
    }

    #[test]
    fn capacity_brackets_the_activity_cap() {
        let (model, l_max) = model_and_capacity();
        assert!(*l_max > 1e6, "capacity {l_max} suspiciously small");
        let opts = FixedPointOptions {
            tol: 1e-10,
            max_iter: 200_000,
        };
        let at = model.activity_fixed_point(*l_max, &opts).unwrap();
        assert!(at.feasible && at.rho <= 0.999 + 1e-6, "rho {}", at.rho);
        let above = model.activity_fixed_point(1.02 * l_max, &opts);
        let still_ok =
            matches!(above, Ok(ActivitySolution { rho, feasible: true, .. }) if rho <= 0.999);
        assert!(!still_ok, "2% above capacity should break the cap");
    }

    #[test]
    fn coarse_curve_is_well_formed() {
        let (model, _) = model_and_capacity();
        let curve = build_cost_curve(model, 0.25).unwrap();
        assert_eq!(curve.units(), 4);
        assert_eq!(curve.energy_at(0), 58.6);
        assert_eq!(curve.idle_power_w(), 58.6);
        assert!(curve.validate().is_ok());
        for m in 1..=4 {
            assert!(curve.marginal(m) > 0.0);
        }
        assert_eq!(curve.sleep_power_w, 0.0);
    }

    #[test]
    fn synthetic_curve_validation_catches_breaks() {
        assert!(CostCurve::from_energies(vec![50.0, 60.0, 75.0], 0.5, 0.0).is_ok());
        // Non-monotone.
        assert!(CostCurve::from_energies(vec![50.0, 60.0, 55.0], 0.5, 0.0).is_err());
        // Concave kink.
        assert!(CostCurve::from_energies(vec![50.0, 70.0, 75.0], 0.5, 0.0).is_err());
        // Spacing mismatch.
        assert!(CostCurve::from_energies(vec![50.0, 60.0, 75.0], 0.4, 0.0).is_err());
        // Sleep above idle.
        assert!(CostCurve::from_energies(vec![50.0, 60.0, 75.0], 0.5, 51.0).is_err());
    }
}
