//! Phase-drift process model, reference-pulse measurement model, phase
//! estimation and the compensation rotation.
//!
//! The drifting phase difference theta between Alice's and Bob's frames is
//! modeled as a wrapped Gaussian random walk whose stationary law is uniform
//! on (-pi, pi]. Angles everywhere are wrapped back into (-pi, pi] after
//! arithmetic.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gaussian::{ChannelParams, PhaseStats, ReferenceMode};

/// Wraps an angle into (-pi, pi].
pub fn wrap_phase(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Regime bound on f_theta * dt_round; above this the constant-phase-within-
/// a-round assumption is considered violated.
pub const REGIME_LIMIT: f64 = 0.05;

/// Temporal model of the frame phase difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseProcess {
    /// Phase-noise bandwidth f_theta (Hz).
    pub bandwidth: f64,
    /// Time per round (s).
    pub dt_round: f64,
}

impl PhaseProcess {
    pub fn new(bandwidth: f64, dt_round: f64) -> Result<Self> {
        if !(bandwidth >= 0.0 && bandwidth.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "bandwidth",
                value: bandwidth,
                constraint: "must be non-negative and finite",
            });
        }
        if !(dt_round > 0.0 && dt_round.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "dt_round",
                value: dt_round,
                constraint: "must be positive and finite",
            });
        }
        Ok(Self {
            bandwidth,
            dt_round,
        })
    }

    /// Standard deviation of one random-walk step: 2*pi*f_theta*dt_round.
    pub fn step_sigma(&self) -> f64 {
        2.0 * PI * self.bandwidth * self.dt_round
    }

    /// Whether the drift is slow enough that theta is constant within a
    /// round. Violating configurations still run but results are flagged.
    pub fn regime_ok(&self) -> bool {
        self.bandwidth * self.dt_round < REGIME_LIMIT
    }
}

/// Stateful wrapped random walk over rounds. The first call draws the
/// stationary (uniform) initial angle; each later call adds a Gaussian step.
#[derive(Debug, Clone)]
pub struct PhaseWalk {
    step_sigma: f64,
    current: Option<f64>,
}

impl PhaseWalk {
    pub fn new(process: &PhaseProcess) -> Self {
        Self {
            step_sigma: process.step_sigma(),
            current: None,
        }
    }

    /// Advances the walk by one round and returns the new angle in (-pi, pi].
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let theta = match self.current {
            None => {
                // theta_0 = pi - 2*pi*u maps u in [0,1) onto (-pi, pi].
                let u: f64 = rng.random();
                PI - 2.0 * PI * u
            }
            Some(prev) => {
                // The step is drawn even for sigma = 0 so that RNG stream
                // consumption does not depend on the bandwidth.
                let z: f64 = rng.sample(StandardNormal);
                wrap_phase(prev + self.step_sigma * z)
            }
        };
        self.current = Some(theta);
        theta
    }
}

/// Samples `n` successive angles of the drift process.
pub fn sample_phase_path<R: Rng + ?Sized>(
    process: &PhaseProcess,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::ParameterDomain {
            name: "n",
            value: 0.0,
            constraint: "path length must be >= 1",
        });
    }
    let mut walk = PhaseWalk::new(process);
    Ok((0..n).map(|_| walk.advance(rng)).collect())
}

/// Outcome of the reference-pulse measurement in Bob's frame, sqrt(N0) units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMeasurement {
    pub q: f64,
    pub p: f64,
    pub mode: ReferenceMode,
}

/// Noise-free mean of the reference measurement at frame angle `theta`:
/// sqrt(T*eta*V_R) * (cos theta, sin theta).
pub fn reference_mean(theta: f64, ch: &ChannelParams, v_r: f64) -> (f64, f64) {
    let amp = (ch.effective_transmittance() * v_r).sqrt();
    (amp * theta.cos(), amp * theta.sin())
}

/// Simulates the measurement of the reference pulse(s) at frame angle
/// `theta`. Each quadrature carries the channel-referred noise variance
/// T*eta*(chi+1) plus one vacuum unit in single-pulse (heterodyne) mode.
pub fn measure_reference<R: Rng + ?Sized>(
    theta: f64,
    ch: &ChannelParams,
    v_r: f64,
    mode: ReferenceMode,
    rng: &mut R,
) -> Result<ReferenceMeasurement> {
    ch.validate()?;
    if !(v_r > 0.0 && v_r.is_finite()) {
        return Err(Error::ParameterDomain {
            name: "reference_variance",
            value: v_r,
            constraint: "must be positive and finite",
        });
    }
    let (mq, mp) = reference_mean(theta, ch, v_r);
    let var = ch.effective_transmittance() * (ch.total_noise() + 1.0) + mode.vacuum_penalty();
    let sd = var.sqrt();
    let zq: f64 = rng.sample(StandardNormal);
    let zp: f64 = rng.sample(StandardNormal);
    Ok(ReferenceMeasurement {
        q: mq + sd * zq,
        p: mp + sd * zp,
        mode,
    })
}

/// Phase-difference estimate, wrapped into (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    pub angle: f64,
}

/// Full-quadrant phase estimate theta_hat = atan2(p, q).
///
/// A zero-vector measurement cannot be resolved and yields an
/// estimation-failure error; the round is discarded upstream.
pub fn estimate_phase(rm: &ReferenceMeasurement) -> Result<PhaseEstimate> {
    if rm.q == 0.0 && rm.p == 0.0 {
        return Err(Error::EstimationFailure);
    }
    let mut angle = rm.p.atan2(rm.q);
    if angle <= -PI {
        angle = PI;
    }
    Ok(PhaseEstimate { angle })
}

/// Alice's compensation: (q_hat, p_hat) = sqrt(T_eff) * R(theta_hat) * (q, p)
/// with R the standard 2x2 rotation.
pub fn compensate(q: f64, p: f64, theta_hat: f64, t_eff: f64) -> Result<(f64, f64)> {
    if !(t_eff > 0.0 && t_eff <= 1.0) {
        return Err(Error::ParameterDomain {
            name: "t_eff",
            value: t_eff,
            constraint: "effective transmittance must lie in (0, 1]",
        });
    }
    let s = t_eff.sqrt();
    let (sin, cos) = theta_hat.sin_cos();
    Ok((s * (cos * q - sin * p), s * (sin * q + cos * p)))
}

/// Minimum sample count for reliable phase statistics.
pub const MIN_PHASE_SAMPLES: usize = 1000;

/// Empirical phase-error statistics from samples of phi = theta_hat - theta.
///
/// cos_mean and sin_mean are plain sample means; the estimator variance is
/// computed about the circular mean so that branch wrapping cannot inflate
/// it.
pub fn empirical_phase_stats(phi: &[f64]) -> Result<PhaseStats> {
    if phi.len() < MIN_PHASE_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_PHASE_SAMPLES,
            got: phi.len(),
        });
    }
    let n = phi.len() as f64;
    let (mut sum_cos, mut sum_sin) = (0.0, 0.0);
    for &x in phi {
        let (s, c) = x.sin_cos();
        sum_cos += c;
        sum_sin += s;
    }
    let cos_mean = sum_cos / n;
    let sin_mean = sum_sin / n;
    let circular_mean = sum_sin.atan2(sum_cos);
    let ss: f64 = phi
        .iter()
        .map(|&x| {
            let d = wrap_phase(x - circular_mean);
            d * d
        })
        .sum();
    Ok(PhaseStats {
        cos_mean,
        sin_mean,
        xi: 1.0 - cos_mean * cos_mean,
        estimator_variance: ss / (n - 1.0),
    })
}
