//! Surveillance capability as a function of scan time.
//!
//! The radar equation gives the maximum range at which a single beam of length
//! `τ_beam` still reaches the SNR needed for the requested `(P_d, P_f)`. The scanning
//! metric Γ is the detectable area relative to a reference disc of radius `r0`.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::{measure, Measurement, TargetTruth};

pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Minimum single-pulse SNR (dB) for a non-fluctuating target, Albersheim's
/// approximation.
pub fn snr_min_db(pd: f64, pf: f64) -> Result<f64> {
    if !((1e-7..=1e-3).contains(&pf) && (0.1..=0.9999).contains(&pd)) {
        return Err(Error::OutOfValidityRange { pd, pf });
    }
    let a = (0.62 / pf).ln();
    let b = (pd / (1.0 - pd)).ln();
    let pulses = 1.0f64;
    let z = a + 0.12 * a * b + 1.7 * b;
    Ok(-5.0 * pulses.log10() + (6.2 + 4.54 / (pulses + 0.44).sqrt()) * z.log10())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionSpec {
    pub pd: f64,
    pub pf: f64,
    /// Linear-scale SNR threshold derived from `(pd, pf)`.
    pub snr_min: f64,
}

impl DetectionSpec {
    pub fn new(pd: f64, pf: f64) -> Result<Self> {
        if !(0.0 < pf && pf < pd && pd < 1.0) {
            return Err(invalid(
                "detection",
                format!("need 0 < pf < pd < 1, got pd={pd}, pf={pf}"),
            ));
        }
        Ok(Self {
            pd,
            pf,
            snr_min: db_to_linear(snr_min_db(pd, pf)?),
        })
    }
}

impl Default for DetectionSpec {
    fn default() -> Self {
        Self::new(0.9, 1e-3).expect("table values are valid")
    }
}

/// Radar-equation constants. `reference_range` is `r0` in the scanning metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarParams {
    pub transmit_power: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub wavelength: f64,
    pub cross_section: f64,
    pub loss: f64,
    pub system_temperature: f64,
    /// Angular step between adjacent beams, degrees.
    pub beam_step_deg: f64,
    pub reference_range: f64,
}

impl RadarParams {
    /// X-band defaults with the transmit power solved so that a scan of
    /// `reference_scan_time` seconds reaches exactly `reference_range`.
    pub fn calibrated(reference_range: f64, reference_scan_time: f64, spec: &DetectionSpec) -> Result<Self> {
        let mut p = Self {
            transmit_power: 1.0,
            tx_gain: 1_000.0,
            rx_gain: 1_000.0,
            wavelength: 0.03,
            cross_section: 1.0,
            loss: 2.0,
            system_temperature: 500.0,
            beam_step_deg: 3.6,
            reference_range,
        };
        p.validate()?;
        if !(reference_scan_time > 0.0) {
            return Err(invalid("radar.reference_scan_time", "must be > 0"));
        }
        let beam = beam_duration(reference_scan_time, p.beam_step_deg);
        let reach_at_unit_power = max_range(&p, spec, beam);
        p.transmit_power = (reference_range / reach_at_unit_power).powi(4);
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("radar.transmit_power", self.transmit_power),
            ("radar.tx_gain", self.tx_gain),
            ("radar.rx_gain", self.rx_gain),
            ("radar.wavelength", self.wavelength),
            ("radar.cross_section", self.cross_section),
            ("radar.loss", self.loss),
            ("radar.system_temperature", self.system_temperature),
            ("radar.beam_step_deg", self.beam_step_deg),
            ("radar.reference_range", self.reference_range),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        let beams = 360.0 / self.beam_step_deg;
        if (beams - beams.round()).abs() > 1e-9 {
            return Err(invalid("radar.beam_step_deg", "must divide 360 evenly"));
        }
        Ok(())
    }

    /// `P_t·G_t·G_r·λ²·σ / ((4π)³·L·k·T_s)`, the part of the radar equation that does
    /// not depend on beam time or range.
    fn budget(&self) -> f64 {
        self.transmit_power * self.tx_gain * self.rx_gain * self.wavelength.powi(2) * self.cross_section
            / ((4.0 * PI).powi(3) * self.loss * BOLTZMANN * self.system_temperature)
    }
}

/// Time spent on each beam when `scan_time` covers the full circle in steps of
/// `beam_step_deg`.
pub fn beam_duration(scan_time: f64, beam_step_deg: f64) -> f64 {
    scan_time * beam_step_deg / 360.0
}

/// Scan SNR (linear) of a target at `range` for one beam of `beam_time` seconds.
pub fn scan_snr(params: &RadarParams, beam_time: f64, range: f64) -> f64 {
    params.budget() * beam_time / range.powi(4)
}

pub fn max_range(params: &RadarParams, spec: &DetectionSpec, beam_time: f64) -> f64 {
    if beam_time <= 0.0 {
        return 0.0;
    }
    (params.budget() * beam_time / spec.snr_min).powf(0.25)
}

/// Γ = (r_max / r0)² for a scan of `scan_time` seconds.
pub fn gamma(params: &RadarParams, spec: &DetectionSpec, scan_time: f64) -> f64 {
    let r = max_range(params, spec, beam_duration(scan_time.max(0.0), params.beam_step_deg));
    (r / params.reference_range).powi(2)
}

/// Scan detections of untracked targets.
///
/// Every active target not in `tracked_ids` and within `r_max(scan_time)` is detected
/// with probability `P_d`; targets beyond `r_max` are never detected.
#[allow(clippy::too_many_arguments)]
pub fn detect_new_targets<R: Rng + ?Sized>(
    truth: &[TargetTruth],
    tracked_ids: &[u32],
    params: &RadarParams,
    spec: &DetectionSpec,
    scan_time: f64,
    baseline_cov: &Matrix2<f64>,
    slot: usize,
    rng: &mut R,
) -> Vec<Measurement> {
    let reach = max_range(params, spec, beam_duration(scan_time.max(0.0), params.beam_step_deg));
    if reach <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for target in truth {
        if tracked_ids.contains(&target.id) || target.range() > reach {
            continue;
        }
        if rng.random_bool(spec.pd) {
            if let Ok(m) = measure(&target.state, baseline_cov, Some(target.id), slot, rng) {
                out.push(m);
            }
        }
    }
    out
}
