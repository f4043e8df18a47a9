//! Phase-EOM calibration with reference pulses: synthesize a voltage sweep
//! corrupted by phase drift, de-rotate each modulated sample with the phase
//! of its paired unmodulated reference pulse, and fit a voltage -> phase
//! polynomial.
//!
//! Each sweep sample pairs a reference pulse and a modulated pulse taken
//! close enough in time to share one drift phase, so the reference phase is
//! the zero-modulation baseline and the difference isolates the EOM
//! response.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::solve;
use crate::phase::{wrap_phase, PhaseProcess, PhaseWalk};
use crate::rng::{stream, Role};

/// In-phase / quadrature pair of a measured pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iq {
    pub i: f64,
    pub q: f64,
}

impl Iq {
    pub fn phase(&self) -> f64 {
        self.q.atan2(self.i)
    }

    pub fn is_zero(&self) -> bool {
        self.i == 0.0 && self.q == 0.0
    }
}

/// One point of the calibration sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSample {
    pub voltage: f64,
    /// Unmodulated reference pulse.
    pub reference: Iq,
    /// Phase-modulated pulse at `voltage`.
    pub modulated: Iq,
}

/// Evaluates a polynomial with ascending coefficients at `x`.
pub fn eval_polynomial(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Synthesizes a voltage sweep with ground truth `true_curve` (ascending
/// polynomial coefficients, rad/V^k), drift following `drift`, pulse
/// amplitude `amplitude` and additive per-component Gaussian noise of
/// standard deviation `noise_sd`. The voltage grid is uniform over
/// `v_range` with `n` points. Deterministic per seed.
pub fn synthesize_sweep(
    true_curve: &[f64],
    drift: &PhaseProcess,
    amplitude: f64,
    noise_sd: f64,
    v_range: (f64, f64),
    n: usize,
    seed: u64,
) -> Result<Vec<SweepSample>> {
    if n < 2 {
        return Err(Error::ParameterDomain {
            name: "n",
            value: n as f64,
            constraint: "sweep needs at least two samples",
        });
    }
    let range_ok = v_range.0.is_finite() && v_range.1.is_finite() && v_range.0 < v_range.1;
    if !range_ok {
        return Err(Error::InvalidInput(format!(
            "voltage range must be increasing, got {:?}",
            v_range
        )));
    }
    if amplitude.is_nan() || amplitude <= 0.0 {
        return Err(Error::ParameterDomain {
            name: "amplitude",
            value: amplitude,
            constraint: "must be positive",
        });
    }
    if noise_sd.is_nan() || noise_sd < 0.0 {
        return Err(Error::ParameterDomain {
            name: "noise_sd",
            value: noise_sd,
            constraint: "must be non-negative",
        });
    }

    let mut rng = stream(seed, Role::Calibration);
    let mut walk = PhaseWalk::new(drift);
    let dv = (v_range.1 - v_range.0) / (n - 1) as f64;
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let voltage = v_range.0 + k as f64 * dv;
        let theta = walk.advance(&mut rng);
        let phase = eval_polynomial(true_curve, voltage);
        let mut noisy = |angle: f64| -> Iq {
            let ni: f64 = rng.sample(StandardNormal);
            let nq: f64 = rng.sample(StandardNormal);
            Iq {
                i: amplitude * angle.cos() + noise_sd * ni,
                q: amplitude * angle.sin() + noise_sd * nq,
            }
        };
        let reference = noisy(theta);
        let modulated = noisy(theta + phase);
        samples.push(SweepSample {
            voltage,
            reference,
            modulated,
        });
    }
    Ok(samples)
}

/// Drift-compensated, unwrapped modulation phases along the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredPhases {
    pub voltages: Vec<f64>,
    /// Unwrapped phase (rad), one per kept sample.
    pub phases: Vec<f64>,
    /// Samples dropped because the reference vector was zero.
    pub discarded: usize,
}

/// Removes the drift from each sample via the reference-pulse phase and
/// unwraps the result along the voltage sweep (nearest-branch continuation).
///
/// The overall 2*pi branch is fixed by placing the first sample's phase in
/// (-pi, pi]; a curve whose value at the sweep start lies outside that
/// interval is recovered shifted by a multiple of 2*pi.
pub fn recover_phase(samples: &[SweepSample]) -> Result<RecoveredPhases> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut voltages = Vec::with_capacity(samples.len());
    let mut phases = Vec::with_capacity(samples.len());
    let mut discarded = 0usize;
    let mut previous: Option<f64> = None;
    for sample in samples {
        if sample.reference.is_zero() {
            discarded += 1;
            continue;
        }
        let raw = wrap_phase(sample.modulated.phase() - sample.reference.phase());
        let unwrapped = match previous {
            None => raw,
            // Keep the branch closest to the previous point.
            Some(prev) => prev + wrap_phase(raw - prev),
        };
        previous = Some(unwrapped);
        voltages.push(sample.voltage);
        phases.push(unwrapped);
    }
    if phases.is_empty() {
        return Err(Error::EstimationFailure);
    }
    Ok(RecoveredPhases {
        voltages,
        phases,
        discarded,
    })
}

/// Polynomial voltage -> phase calibration map.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCurve {
    /// Ascending coefficients, rad/V^k.
    pub coefficients: Vec<f64>,
    pub degree: usize,
    pub residual_rms: f64,
    /// Voltage span the fit is valid over.
    pub domain: (f64, f64),
    pub n_samples: usize,
}

impl CalibrationCurve {
    pub fn eval(&self, voltage: f64) -> f64 {
        eval_polynomial(&self.coefficients, voltage)
    }
}

/// Least-squares polynomial fit of unwrapped phases against voltages.
pub fn fit_curve(voltages: &[f64], phases: &[f64], degree: usize) -> Result<CalibrationCurve> {
    if voltages.len() != phases.len() {
        return Err(Error::InvalidInput(format!(
            "voltage/phase length mismatch: {} vs {}",
            voltages.len(),
            phases.len()
        )));
    }
    let needed = degree + 2;
    if voltages.len() < needed {
        return Err(Error::InsufficientSamples {
            needed,
            got: voltages.len(),
        });
    }

    // Normal equations for the monomial basis; fine for the low degrees and
    // volt-scale domains used here.
    let m = degree + 1;
    let mut ata = vec![vec![0.0_f64; m]; m];
    let mut atb = vec![0.0_f64; m];
    for (&v, &ph) in voltages.iter().zip(phases.iter()) {
        let mut pow = vec![1.0_f64; m];
        for k in 1..m {
            pow[k] = pow[k - 1] * v;
        }
        for r in 0..m {
            for c in 0..m {
                ata[r][c] += pow[r] * pow[c];
            }
            atb[r] += pow[r] * ph;
        }
    }
    let coefficients = solve(ata, atb, 1e-12).ok_or_else(|| {
        Error::FitFailure(format!(
            "rank-deficient normal equations for degree {degree} over {} samples",
            voltages.len()
        ))
    })?;

    let ss: f64 = voltages
        .iter()
        .zip(phases.iter())
        .map(|(&v, &ph)| (ph - eval_polynomial(&coefficients, v)).powi(2))
        .sum();
    let residual_rms = (ss / voltages.len() as f64).sqrt();
    let domain = voltages
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    Ok(CalibrationCurve {
        coefficients,
        degree,
        residual_rms,
        domain,
        n_samples: voltages.len(),
    })
}
