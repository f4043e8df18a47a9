//! Demonstration modes: constant-signal recovery under phase drift and
//! constellation reconstruction with per-tile noise mapping.
//!
//! In both demos Bob compensates his own measured quadratures with the
//! reference-pulse phase estimate (rather than sending it to Alice), and
//! twin signal pulses give him both quadratures per round. The reconstructed
//! per-quadrature variance is T_eff*(1+chi) up to the small wobble from the
//! residual phase error, which scales with the squared signal amplitude.

use rand_distr::StandardNormal;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{ChannelParams, ReferenceMode};
use crate::keyrate::sweep::Grid;
use crate::phase::{self, PhaseProcess, PhaseWalk};
use crate::rng::{stream, Role};

/// Shared setup for the demo modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoConfig {
    pub channel: ChannelParams,
    pub reference_variance: f64,
    pub reference_mode: ReferenceMode,
    pub drift: PhaseProcess,
    pub seed: u64,
}

impl DemoConfig {
    fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if !(self.reference_variance > 0.0 && self.reference_variance.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "reference_variance",
                value: self.reference_variance,
                constraint: "must be positive and finite",
            });
        }
        Ok(())
    }
}

/// Reconstruction of a constant coherent signal under phase drift.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSignalReport {
    pub signal: (f64, f64),
    pub n_rounds: usize,
    pub discards: usize,
    /// Bob's phase-compensated outcomes, one (q, p) pair per kept round.
    pub reconstructed: Vec<(f64, f64)>,
    pub mean: (f64, f64),
    pub variance_q: f64,
    pub variance_p: f64,
    /// Mean of the two per-quadrature variances.
    pub variance: f64,
    /// T_eff * (1 + chi).
    pub expected_variance: f64,
    pub regime_violation: bool,
}

struct DemoEngine {
    channel: ChannelParams,
    reference_variance: f64,
    reference_mode: ReferenceMode,
    walk: PhaseWalk,
    walk_rng: rand_chacha::ChaCha12Rng,
    signal_rng: rand_chacha::ChaCha12Rng,
    reference_rng: rand_chacha::ChaCha12Rng,
    signal_gain: f64,
    noise_sd: f64,
}

impl DemoEngine {
    fn new(cfg: &DemoConfig) -> Result<Self> {
        cfg.validate()?;
        let t_eff = cfg.channel.effective_transmittance();
        Ok(Self {
            channel: cfg.channel,
            reference_variance: cfg.reference_variance,
            reference_mode: cfg.reference_mode,
            walk: PhaseWalk::new(&cfg.drift),
            walk_rng: stream(cfg.seed, Role::PhaseWalk),
            signal_rng: stream(cfg.seed, Role::SignalNoise),
            reference_rng: stream(cfg.seed, Role::ReferenceNoise),
            signal_gain: t_eff.sqrt(),
            noise_sd: (t_eff * (cfg.channel.total_noise() + 1.0)).sqrt(),
        })
    }

    /// One demo round: send the constant `signal`, measure both quadratures,
    /// estimate the frame phase and undo it. `None` when the reference
    /// measurement is unusable.
    fn reconstruct(&mut self, signal: (f64, f64)) -> Result<Option<(f64, f64)>> {
        let theta = self.walk.advance(&mut self.walk_rng);
        let (sin_t, cos_t) = theta.sin_cos();
        let mean_q = self.signal_gain * (cos_t * signal.0 - sin_t * signal.1);
        let mean_p = self.signal_gain * (sin_t * signal.0 + cos_t * signal.1);
        let nq: f64 = self.signal_rng.sample(StandardNormal);
        let np: f64 = self.signal_rng.sample(StandardNormal);
        let y_q = mean_q + self.noise_sd * nq;
        let y_p = mean_p + self.noise_sd * np;

        let reference = phase::measure_reference(
            theta,
            &self.channel,
            self.reference_variance,
            self.reference_mode,
            &mut self.reference_rng,
        )?;
        match phase::estimate_phase(&reference) {
            Ok(est) => {
                // Undo the frame rotation on Bob's side.
                let (sin_h, cos_h) = est.angle.sin_cos();
                Ok(Some((
                    cos_h * y_q + sin_h * y_p,
                    -sin_h * y_q + cos_h * y_p,
                )))
            }
            Err(Error::EstimationFailure) => Ok(None),
            Err(other) => Err(other),
        }
    }
}

fn mean_and_variance(points: &[(f64, f64)]) -> ((f64, f64), f64, f64) {
    let n = points.len() as f64;
    let mean_q = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_p = points.iter().map(|p| p.1).sum::<f64>() / n;
    let var_q = points.iter().map(|p| (p.0 - mean_q).powi(2)).sum::<f64>() / (n - 1.0);
    let var_p = points.iter().map(|p| (p.1 - mean_p).powi(2)).sum::<f64>() / (n - 1.0);
    ((mean_q, mean_p), var_q, var_p)
}

/// Sends `n_rounds` copies of one constant coherent state and reconstructs
/// them through reference-pulse phase compensation.
pub fn constant_signal_demo(
    signal: (f64, f64),
    n_rounds: usize,
    cfg: &DemoConfig,
) -> Result<ConstantSignalReport> {
    if n_rounds < 2 {
        return Err(Error::ParameterDomain {
            name: "n_rounds",
            value: n_rounds as f64,
            constraint: "need at least two rounds for a variance",
        });
    }
    let mut engine = DemoEngine::new(cfg)?;
    let mut reconstructed = Vec::with_capacity(n_rounds);
    for _ in 0..n_rounds {
        if let Some(point) = engine.reconstruct(signal)? {
            reconstructed.push(point);
        }
    }
    let discards = n_rounds - reconstructed.len();
    if reconstructed.len() < 2 {
        return Err(Error::AllRoundsDiscarded(discards));
    }
    let (mean, variance_q, variance_p) = mean_and_variance(&reconstructed);
    let expected_variance =
        cfg.channel.effective_transmittance() * (1.0 + cfg.channel.total_noise());
    Ok(ConstantSignalReport {
        signal,
        n_rounds,
        discards,
        reconstructed,
        mean,
        variance_q,
        variance_p,
        variance: 0.5 * (variance_q + variance_p),
        expected_variance,
        regime_violation: !cfg.drift.regime_ok(),
    })
}

/// Square grid of tiles in Alice's phase plane; the same centers are used
/// on both quadrature axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationSpec {
    pub grid: Grid,
    /// Physical signal pulses per tile; two pulses make one reconstructed
    /// (q, p) point.
    pub pulses_per_tile: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileStats {
    pub center: (f64, f64),
    pub mean: (f64, f64),
    pub variance_q: f64,
    pub variance_p: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationReport {
    pub tiles: Vec<TileStats>,
    /// Average over tiles of the per-tile pooled variance.
    pub mean_variance: f64,
    pub expected_variance: f64,
    pub discards: usize,
    pub regime_violation: bool,
}

/// Reconstructs a full constellation tile by tile. The drift walk runs
/// continuously across the whole constellation.
pub fn constellation_demo(
    spec: &ConstellationSpec,
    cfg: &DemoConfig,
) -> Result<ConstellationReport> {
    let pairs = spec.pulses_per_tile / 2;
    if pairs < 2 {
        return Err(Error::ParameterDomain {
            name: "pulses_per_tile",
            value: spec.pulses_per_tile as f64,
            constraint: "need at least 4 pulses (2 reconstructed points) per tile",
        });
    }
    let centers = spec.grid.points()?;
    let mut engine = DemoEngine::new(cfg)?;
    let mut tiles = Vec::with_capacity(centers.len() * centers.len());
    let mut discards = 0usize;
    for &cp in &centers {
        for &cq in &centers {
            let mut points = Vec::with_capacity(pairs);
            for _ in 0..pairs {
                match engine.reconstruct((cq, cp))? {
                    Some(point) => points.push(point),
                    None => discards += 1,
                }
            }
            if points.len() < 2 {
                return Err(Error::AllRoundsDiscarded(discards));
            }
            let (mean, variance_q, variance_p) = mean_and_variance(&points);
            tiles.push(TileStats {
                center: (cq, cp),
                mean,
                variance_q,
                variance_p,
                n_points: points.len(),
            });
        }
    }
    let mean_variance = tiles
        .iter()
        .map(|t| 0.5 * (t.variance_q + t.variance_p))
        .sum::<f64>()
        / tiles.len() as f64;
    let expected_variance =
        cfg.channel.effective_transmittance() * (1.0 + cfg.channel.total_noise());
    Ok(ConstellationReport {
        tiles,
        mean_variance,
        expected_variance,
        discards,
        regime_violation: !cfg.drift.regime_ok(),
    })
}
