//! Link-level model: power-law path gain, log-normal shadowing, aggregate
//! interference via Fenton-Wilkinson moment matching, and Shannon rate at an
//! outage quantile.
//!
//! All powers are linear watts internally. Shadowing is specified in dB; a
//! log-normal variable with dB-domain parameters (mu, sigma) has linear
//! moments E[X] = exp(b*mu + (b*sigma)^2/2) and E[X^2] = exp(2*b*mu +
//! 2*(b*sigma)^2) with b = ln(10)/10.

use thiserror::Error;

/// Conversion factor between dB and natural log: ln(10)/10.
pub const DB_TO_NAT: f64 = core::f64::consts::LN_10 / 10.0;

/// Rates are floored here so service times stay finite in deep-shadow corners.
pub const MIN_RATE_BPS: f64 = 1e3;

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("path gain needs a positive distance, got {0} km")]
    NonPositiveDistance(f64),
    #[error("interferer activity {0} outside [0, 1]")]
    ActivityOutOfRange(f64),
    #[error("cannot fit a log-normal to mean {mean}, second moment {second_moment}")]
    DegenerateMoments { mean: f64, second_moment: f64 },
    #[error("invalid radio parameter: {0}")]
    InvalidParams(String),
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

#[derive(Debug, Clone, Copy)]
pub struct RadioParams {
    /// Path loss exponent, alpha > 2.
    pub pathloss_exponent: f64,
    /// Shadowing standard deviation in dB.
    pub shadow_sigma_db: f64,
    /// System bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Receiver noise power in watts.
    pub noise_w: f64,
    /// Average BS transmit power in watts.
    pub tx_power_w: f64,
    /// Outage probability the rate is guaranteed at (0, 1).
    pub outage_target: f64,
    /// Linear path gain at the 1 km reference distance. The network is
    /// interference limited at the default powers, so this nearly cancels in
    /// SIR; it exists for sensitivity checks.
    pub gain_at_1km: f64,
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), RadioError> {
        let fail = |msg: String| Err(RadioError::InvalidParams(msg));
        if !(self.pathloss_exponent > 2.0) {
            return fail(format!(
                "pathloss_exponent must exceed 2, got {}",
                self.pathloss_exponent
            ));
        }
        if !(self.shadow_sigma_db >= 0.0) {
            return fail(format!(
                "shadow_sigma_db must be non-negative, got {}",
                self.shadow_sigma_db
            ));
        }
        if !(self.bandwidth_hz > 0.0) {
            return fail(format!(
                "bandwidth_hz must be positive, got {}",
                self.bandwidth_hz
            ));
        }
        if !(self.noise_w > 0.0) {
            return fail(format!("noise power must be positive watts, got {}", self.noise_w));
        }
        if !(self.tx_power_w > 0.0) {
            return fail(format!("tx power must be positive watts, got {}", self.tx_power_w));
        }
        if !(self.outage_target > 0.0 && self.outage_target < 1.0) {
            return fail(format!(
                "outage_target must lie in (0, 1), got {}",
                self.outage_target
            ));
        }
        if !(self.gain_at_1km > 0.0) {
            return fail(format!(
                "gain_at_1km must be positive, got {}",
                self.gain_at_1km
            ));
        }
        Ok(())
    }
}

/// Log-normal distribution with dB-domain normal parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalDist {
    pub mu_db: f64,
    pub sigma_db: f64,
}

impl LognormalDist {
    /// Linear-domain mean and second moment.
    pub fn moments(&self) -> (f64, f64) {
        let mu = DB_TO_NAT * self.mu_db;
        let s2 = (DB_TO_NAT * self.sigma_db).powi(2);
        ((mu + 0.5 * s2).exp(), (2.0 * mu + 2.0 * s2).exp())
    }

    /// Fits dB-domain parameters from linear mean and second moment.
    pub fn from_moments(mean: f64, second_moment: f64) -> Result<Self, RadioError> {
        if !(mean > 0.0) || !(second_moment > 0.0) {
            return Err(RadioError::DegenerateMoments {
                mean,
                second_moment,
            });
        }
        // (b*sigma)^2 = ln m2 - 2 ln m; tiny negatives from rounding clamp to 0.
        let s2 = (second_moment.ln() - 2.0 * mean.ln()).max(0.0);
        let mu = mean.ln() - 0.5 * s2;
        Ok(Self {
            mu_db: mu / DB_TO_NAT,
            sigma_db: s2.sqrt() / DB_TO_NAT,
        })
    }
}

/// Linear path gain (d / 1 km)^(-alpha), scaled by the caller's reference gain.
pub fn path_gain(d_km: f64, alpha: f64) -> Result<f64, RadioError> {
    if !(d_km > 0.0) {
        return Err(RadioError::NonPositiveDistance(d_km));
    }
    Ok(d_km.powf(-alpha))
}

/// Fenton-Wilkinson fit of the activity-weighted aggregate interference.
///
/// Each interferer k at distance d_k transmits at full power when busy
/// (probability rho_k) through an independent log-normal shadow with median 1.
/// The Bernoulli-thinned term has mean rho_k * E[X] and second moment
/// rho_k * E[X^2]; the sum over independent interferers is matched by a single
/// log-normal. Returns `None` when nothing interferes (all activities zero).
pub fn aggregate_interference(
    interferers: &[(f64, f64)],
    params: &RadioParams,
) -> Result<Option<LognormalDist>, RadioError> {
    let mut terms = Vec::with_capacity(interferers.len());
    for &(d_km, rho) in interferers {
        let g = params.gain_at_1km * path_gain(d_km, params.pathloss_exponent)?;
        terms.push((params.tx_power_w * g, rho));
    }
    aggregate_from_received_powers(&terms, params.shadow_sigma_db)
}

/// Same fit as [`aggregate_interference`], but over median received powers a
/// caller has already resolved from geometry. Hot loops precompute the powers
/// once and only vary the activities.
pub fn aggregate_from_received_powers(
    terms: &[(f64, f64)],
    shadow_sigma_db: f64,
) -> Result<Option<LognormalDist>, RadioError> {
    let s2 = (DB_TO_NAT * shadow_sigma_db).powi(2);
    let m1x = (0.5 * s2).exp();
    let m2x = (2.0 * s2).exp();
    let mut mean = 0.0;
    let mut raw_sq = 0.0; // sum of per-term second moments
    let mut mean_sq_parts = 0.0; // sum of squared per-term means
    for &(p, rho) in terms {
        if !(0.0..=1.0).contains(&rho) {
            return Err(RadioError::ActivityOutOfRange(rho));
        }
        mean += rho * p * m1x;
        raw_sq += rho * p * p * m2x;
        mean_sq_parts += (rho * p * m1x).powi(2);
    }
    if mean == 0.0 {
        return Ok(None);
    }
    // E[(sum I_k)^2] = sum E[I_k^2] + sum_{k != l} E[I_k] E[I_l].
    let second_moment = raw_sq + mean * mean - mean_sq_parts;
    LognormalDist::from_moments(mean, second_moment).map(Some)
}

/// Shannon rate at the outage quantile of the SINR.
///
/// Signal and interference-plus-noise are both treated as log-normal; their
/// dB-domain difference is normal, so the outage quantile is the mean
/// difference shifted by z * combined sigma. Noise enters the interference fit
/// as an additive constant on both linear moments before refitting.
pub fn rate_at_outage(
    serving_km: f64,
    interference: Option<&LognormalDist>,
    params: &RadioParams,
) -> Result<f64, RadioError> {
    let g = params.gain_at_1km * path_gain(serving_km, params.pathloss_exponent)?;
    let signal_median_db = watts_to_dbm(params.tx_power_w * g);
    let n = params.noise_w;
    let (int_mean, int_m2) = match interference {
        Some(dist) => dist.moments(),
        None => (0.0, 0.0),
    };
    let disturb = LognormalDist::from_moments(int_mean + n, int_m2 + 2.0 * n * int_mean + n * n)?;
    let z = inverse_normal_cdf(params.outage_target);
    let sigma = (params.shadow_sigma_db.powi(2) + disturb.sigma_db.powi(2)).sqrt();
    let sinr_db = signal_median_db - watts_to_dbm(1.0) - disturb.mu_db + z * sigma;
    let sinr = 10f64.powf(sinr_db / 10.0);
    let rate = params.bandwidth_hz * (1.0 + sinr).log2();
    Ok(rate.max(MIN_RATE_BPS))
}

/// Inverse standard normal CDF (Acklam's rational approximation, about 1e-9
/// relative error). Good far beyond the tolerances used in this model.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must lie in (0, 1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> RadioParams {
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

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watts(46.0) - 39.810717055349734).abs() < 1e-9);
        assert!((dbm_to_watts(53.0) - 199.5262314968883).abs() < 1e-9);
        assert!((watts_to_dbm(dbm_to_watts(-106.0)) + 106.0).abs() < 1e-9);
    }

    #[test]
    fn path_gain_reference_points() {
        assert_eq!(path_gain(1.0, 3.6).unwrap(), 1.0);
        assert!((path_gain(0.5, 3.6).unwrap() - 2f64.powf(3.6)).abs() < 1e-9);
        assert!((path_gain(0.5, 3.6).unwrap() - 12.1257).abs() < 1e-4);
        assert!((path_gain(2.0, 3.6).unwrap() - 0.08247).abs() < 1e-5);
        assert!(path_gain(0.0, 3.6).is_err());
    }

    #[test]
    fn lognormal_moment_examples() {
        let unit = LognormalDist {
            mu_db: 0.0,
            sigma_db: 0.0,
        };
        assert_eq!(unit.moments(), (1.0, 1.0));
        let shadow = LognormalDist {
            mu_db: 0.0,
            sigma_db: 5.5,
        };
        let (mean, _) = shadow.moments();
        assert!((mean - 2.2298).abs() < 1e-4);
        let shifted = LognormalDist {
            mu_db: 10.0,
            sigma_db: 5.5,
        };
        assert!((shifted.moments().0 - 10.0 * mean).abs() < 1e-9);
    }

    #[test]
    fn moment_fit_round_trips() {
        for &(mu, sigma) in &[(0.0, 5.5), (-37.0, 5.5), (12.3, 0.0), (4.0, 11.0)] {
            let d = LognormalDist {
                mu_db: mu,
                sigma_db: sigma,
            };
            let (m, m2) = d.moments();
            let back = LognormalDist::from_moments(m, m2).unwrap();
            assert!((back.mu_db - mu).abs() < 1e-9 * (1.0 + mu.abs()));
            assert!((back.sigma_db - sigma).abs() < 1e-9 * (1.0 + sigma));
        }
    }

    #[test]
    fn single_full_activity_interferer_is_exact() {
        let p = params();
        let d = 1.7;
        let got = aggregate_interference(&[(d, 1.0)], &p).unwrap().unwrap();
        let expected_mu = watts_to_dbm(p.tx_power_w * path_gain(d, p.pathloss_exponent).unwrap())
            - watts_to_dbm(1.0);
        assert!((got.mu_db - expected_mu).abs() < 1e-9);
        assert!((got.sigma_db - p.shadow_sigma_db).abs() < 1e-9);
    }

    #[test]
    fn no_interference_cases() {
        let p = params();
        assert_eq!(aggregate_interference(&[], &p).unwrap(), None);
        assert_eq!(
            aggregate_interference(&[(1.0, 0.0), (2.0, 0.0)], &p).unwrap(),
            None
        );
        assert!(aggregate_interference(&[(1.0, 1.5)], &p).is_err());
    }

    #[test]
    fn fw_mean_is_exact_sum_of_component_means() {
        let p = params();
        let ints = [(1.7, 0.3), (2.0, 0.9), (3.1, 0.05), (4.2, 1.0)];
        let fit = aggregate_interference(&ints, &p).unwrap().unwrap();
        let m1x = ((DB_TO_NAT * p.shadow_sigma_db).powi(2) * 0.5).exp();
        let exact: f64 = ints
            .iter()
            .map(|&(d, rho)| rho * p.tx_power_w * path_gain(d, 3.6).unwrap() * m1x)
            .sum();
        assert!((fit.moments().0 - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn deterministic_snr_rate() {
        // No interference, no shadowing, SNR = 15 gives W * log2(16) = 4W.
        let mut p = params();
        p.shadow_sigma_db = 0.0;
        // Pick distance so that tx * d^-alpha / noise = 15.
        let d = (p.tx_power_w / (15.0 * p.noise_w)).powf(1.0 / p.pathloss_exponent);
        let r = rate_at_outage(d, None, &p).unwrap();
        assert!((r - 4.0 * p.bandwidth_hz).abs() < 1e-6 * p.bandwidth_hz);
    }

    #[test]
    fn shadow_only_rate_shifts_by_quantile() {
        let p = params();
        let d = 0.7;
        let r = rate_at_outage(d, None, &p).unwrap();
        let snr_median_db = watts_to_dbm(p.tx_power_w * path_gain(d, 3.6).unwrap())
            - watts_to_dbm(p.noise_w);
        let gamma_db = snr_median_db - 1.2815515655446004 * 5.5;
        let expect = p.bandwidth_hz * (1.0 + 10f64.powf(gamma_db / 10.0)).log2();
        assert!((r - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn rate_monotone_in_activity_and_distance() {
        let p = params();
        let base = [(1.7, 0.4), (2.5, 0.4), (3.0, 0.4)];
        let r0 = rate_at_outage(0.6, aggregate_interference(&base, &p).unwrap().as_ref(), &p)
            .unwrap();
        for k in 0..base.len() {
            let mut bumped = base;
            bumped[k].1 += 0.3;
            let r1 = rate_at_outage(
                0.6,
                aggregate_interference(&bumped, &p).unwrap().as_ref(),
                &p,
            )
            .unwrap();
            assert!(r1 < r0);
        }
        let rfar = rate_at_outage(0.9, aggregate_interference(&base, &p).unwrap().as_ref(), &p)
            .unwrap();
        assert!(rfar < r0);
    }

    #[test]
    fn normal_quantile_reference_values() {
        assert!((inverse_normal_cdf(0.1) + 1.2815515655446004).abs() < 1e-8);
        assert!(inverse_normal_cdf(0.5).abs() < 1e-12);
        assert!((inverse_normal_cdf(0.9) - 1.2815515655446004).abs() < 1e-8);
        assert!((inverse_normal_cdf(0.975) - 1.959963984540054).abs() < 1e-8);
        // Symmetry holds across the central and tail branches.
        for &q in &[0.001, 0.01, 0.2, 0.4] {
            assert!((inverse_normal_cdf(q) + inverse_normal_cdf(1.0 - q)).abs() < 1e-9);
        }
    }
}
