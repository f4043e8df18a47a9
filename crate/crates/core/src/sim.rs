//! Monte-Carlo prepare-and-measure engine for self-referenced CV-QKD
//! sessions: per-round records with a drifting frame phase, reference-pulse
//! phase estimation, Alice-side compensation, and empirical covariance
//! estimation from tomography rounds.
//!
//! All channel and detector noise is injected as a single Gaussian of
//! variance T_eff*(chi+1) at Bob's measurement, the conservative model in
//! which Eve is credited with the detector imperfections. No separate
//! eavesdropper is simulated.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gaussian::{ChannelParams, CovMat4, PhaseStats, ProtocolParams};
use crate::phase::{self, PhaseProcess, PhaseWalk, MIN_PHASE_SAMPLES};
use crate::rng::{stream, Role};

pub mod demo;
pub mod record;

/// Minimum tomography rounds for a covariance estimate.
pub const MIN_COV_ROUNDS: usize = 500;

/// Full configuration of one simulated session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub protocol: ProtocolParams,
    pub channel: ChannelParams,
    pub n_rounds: usize,
    /// Rounds sacrificed for covariance estimation, selected uniformly at
    /// random from the block.
    pub n_param_est: usize,
    /// When set, parameter-estimation rounds use twin signal pulses so both
    /// quadratures are physically measured; otherwise they behave like key
    /// rounds (one random basis) and no covariance can be estimated.
    pub tomography: bool,
    pub seed: u64,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        self.channel.validate()?;
        if self.n_rounds == 0 {
            return Err(Error::ParameterDomain {
                name: "n_rounds",
                value: 0.0,
                constraint: "session must have at least one round",
            });
        }
        if self.n_param_est > self.n_rounds {
            return Err(Error::ParameterDomain {
                name: "n_param_est",
                value: self.n_param_est as f64,
                constraint: "cannot exceed n_rounds",
            });
        }
        Ok(())
    }

    pub fn phase_process(&self) -> Result<PhaseProcess> {
        PhaseProcess::new(
            self.protocol.phase_noise_bandwidth,
            self.protocol.dt_round(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundKind {
    Key,
    ParamEst,
}

/// Bob's homodyne basis choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Q,
    P,
}

/// Reverse-reconciliation bookkeeping for one round: Bob's phase estimate
/// and Alice's rotated-and-scaled estimate of his outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensation {
    pub theta_hat: f64,
    /// sqrt(T_eff) * R(theta_hat) applied to Alice's draw.
    pub q: f64,
    pub p: f64,
}

/// One protocol round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round {
    pub kind: RoundKind,
    /// Measured basis of a single-quadrature round; `None` in tomography
    /// rounds, where twin signal pulses give both quadratures.
    pub basis: Option<Basis>,
    /// Alice's Gaussian draws (her own frame).
    pub q_a: f64,
    pub p_a: f64,
    /// True frame phase for this round.
    pub theta: f64,
    /// Bob's outcomes for both quadratures. In a single-basis round only the
    /// one selected by `basis` is physically observable; the other is kept
    /// for simulation cross-checks and flagged as such in the record format.
    pub y_q: f64,
    pub y_p: f64,
    /// `None` when the reference measurement could not be resolved and the
    /// round was discarded.
    pub compensation: Option<Compensation>,
}

impl Round {
    /// Bob's observable outcome for single-basis rounds.
    pub fn observable_outcome(&self) -> Option<(Basis, f64)> {
        self.basis.map(|b| match b {
            Basis::Q => (Basis::Q, self.y_q),
            Basis::P => (Basis::P, self.y_p),
        })
    }
}

/// Empirical 4x4 covariance of (Alice rotated values, Bob outcomes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovEstimate {
    pub matrix: CovMat4,
    pub n_used: usize,
    /// Set when the sample covariance is singular to working precision,
    /// e.g. for duplicated rounds or an unmodulated session.
    pub rank_deficient: bool,
}

/// Session-level aggregates, all recomputable from the rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionSummary {
    /// Phase-error statistics over all compensated rounds; `None` when the
    /// session is too short for reliable statistics.
    pub phase_stats: Option<PhaseStats>,
    /// Covariance estimate from the tomography rounds, when available.
    pub covariance: Option<CovEstimate>,
    pub discards: usize,
    /// True when f_theta * dt_round violates the slow-drift regime.
    pub regime_violation: bool,
}

/// Complete outcome of a simulated session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub config: SessionConfig,
    pub rounds: Vec<Round>,
    pub summary: SessionSummary,
}

/// Marks `n_est` of `n_rounds` rounds for parameter estimation, drawn
/// uniformly without replacement from a dedicated RNG stream.
fn select_param_est_rounds(n_rounds: usize, n_est: usize, seed: u64) -> Vec<bool> {
    let mut indices: Vec<usize> = (0..n_rounds).collect();
    let mut rng = stream(seed, Role::RoundSelection);
    for i in 0..n_est {
        let j = i + rng.random_range(0..n_rounds - i);
        indices.swap(i, j);
    }
    let mut flags = vec![false; n_rounds];
    for &i in &indices[..n_est] {
        flags[i] = true;
    }
    flags
}

/// Runs one session. Deterministic for a fixed config (the seed feeds one
/// named RNG stream per role, so the Alice, channel, reference and basis
/// draws are mutually independent and individually stable).
pub fn run_session(cfg: &SessionConfig) -> Result<SessionRecord> {
    cfg.validate()?;
    let protocol = &cfg.protocol;
    let channel = &cfg.channel;
    let t_eff = channel.effective_transmittance();
    let chi = channel.total_noise();
    let process = cfg.phase_process()?;

    let mut walk_rng = stream(cfg.seed, Role::PhaseWalk);
    let mut alice_rng = stream(cfg.seed, Role::AliceDraws);
    let mut signal_rng = stream(cfg.seed, Role::SignalNoise);
    let mut reference_rng = stream(cfg.seed, Role::ReferenceNoise);
    let mut basis_rng = stream(cfg.seed, Role::BobBasis);

    let est_flags = select_param_est_rounds(cfg.n_rounds, cfg.n_param_est, cfg.seed);
    let mut walk = PhaseWalk::new(&process);

    let signal_gain = t_eff.sqrt();
    let noise_sd = (t_eff * (chi + 1.0)).sqrt();
    let modulation_sd = protocol.modulation_variance.sqrt();

    let mut rounds = Vec::with_capacity(cfg.n_rounds);
    for &is_param_est in &est_flags {
        let theta = walk.advance(&mut walk_rng);

        let zq: f64 = alice_rng.sample(StandardNormal);
        let zp: f64 = alice_rng.sample(StandardNormal);
        let (q_a, p_a) = (modulation_sd * zq, modulation_sd * zp);

        // Bob sees Alice's mean vector rotated by theta and attenuated.
        let (sin_t, cos_t) = theta.sin_cos();
        let mean_q = signal_gain * (cos_t * q_a - sin_t * p_a);
        let mean_p = signal_gain * (sin_t * q_a + cos_t * p_a);
        let nq: f64 = signal_rng.sample(StandardNormal);
        let np: f64 = signal_rng.sample(StandardNormal);
        let y_q = mean_q + noise_sd * nq;
        let y_p = mean_p + noise_sd * np;

        // Drawn every round so the stream does not depend on the round kind.
        let basis_draw = if basis_rng.random::<bool>() {
            Basis::Q
        } else {
            Basis::P
        };

        let reference = phase::measure_reference(
            theta,
            channel,
            protocol.reference_variance,
            protocol.reference_mode,
            &mut reference_rng,
        )?;
        let compensation = match phase::estimate_phase(&reference) {
            Ok(estimate) => {
                let (cq, cp) = phase::compensate(q_a, p_a, estimate.angle, t_eff)?;
                Some(Compensation {
                    theta_hat: estimate.angle,
                    q: cq,
                    p: cp,
                })
            }
            Err(Error::EstimationFailure) => None,
            Err(other) => return Err(other),
        };

        let kind = if is_param_est {
            RoundKind::ParamEst
        } else {
            RoundKind::Key
        };
        let basis = match kind {
            RoundKind::ParamEst if cfg.tomography => None,
            _ => Some(basis_draw),
        };
        rounds.push(Round {
            kind,
            basis,
            q_a,
            p_a,
            theta,
            y_q,
            y_p,
            compensation,
        });
    }

    let discards = rounds.iter().filter(|r| r.compensation.is_none()).count();
    if discards == cfg.n_rounds {
        return Err(Error::AllRoundsDiscarded(discards));
    }
    let summary = summarize(cfg, &rounds)?;
    Ok(SessionRecord {
        config: *cfg,
        rounds,
        summary,
    })
}

/// Recomputes the summary block from the rounds; the loader uses this too,
/// which is what makes the summary a derived (round-trippable) quantity.
pub fn summarize(cfg: &SessionConfig, rounds: &[Round]) -> Result<SessionSummary> {
    let discards = rounds.iter().filter(|r| r.compensation.is_none()).count();
    let phi: Vec<f64> = rounds
        .iter()
        .filter_map(|r| {
            r.compensation
                .map(|c| phase::wrap_phase(c.theta_hat - r.theta))
        })
        .collect();
    let phase_stats = if phi.len() >= MIN_PHASE_SAMPLES {
        Some(phase::empirical_phase_stats(&phi)?)
    } else {
        None
    };
    let covariance =
        match estimate_covariance_of_rounds(rounds, cfg.channel.effective_transmittance()) {
            Ok(est) => Some(est),
            Err(Error::InsufficientSamples { .. }) => None,
            Err(other) => return Err(other),
        };
    let regime_violation = !cfg.phase_process()?.regime_ok();
    Ok(SessionSummary {
        phase_stats,
        covariance,
        discards,
        regime_violation,
    })
}

/// Empirical covariance matrix from the session's tomography rounds,
/// arranged like the theoretical prepare-and-measure matrix: Alice's
/// variables are her theta_hat-rotated draws with the channel scaling
/// removed (the compensation carries sqrt(T_eff), which belongs to the
/// channel, not to Alice's data), Bob's are his two outcomes.
pub fn estimate_covariance(record: &SessionRecord) -> Result<CovEstimate> {
    estimate_covariance_of_rounds(
        &record.rounds,
        record.config.channel.effective_transmittance(),
    )
}

fn estimate_covariance_of_rounds(rounds: &[Round], t_eff: f64) -> Result<CovEstimate> {
    let samples: Vec<[f64; 4]> = rounds
        .iter()
        .filter(|r| r.kind == RoundKind::ParamEst && r.basis.is_none())
        .filter_map(|r| {
            r.compensation
                .map(|c| [c.q / t_eff.sqrt(), c.p / t_eff.sqrt(), r.y_q, r.y_p])
        })
        .collect();
    if samples.len() < MIN_COV_ROUNDS {
        return Err(Error::InsufficientSamples {
            needed: MIN_COV_ROUNDS,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mut mean = [0.0_f64; 4];
    for s in &samples {
        for (m, &x) in mean.iter_mut().zip(s.iter()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = [[0.0_f64; 4]; 4];
    for s in &samples {
        for i in 0..4 {
            for j in i..4 {
                cov[i][j] += (s[i] - mean[i]) * (s[j] - mean[j]);
            }
        }
    }
    for i in 0..4 {
        for j in i..4 {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    let matrix = CovMat4::new(cov)?;
    let scale = (0..4).fold(1.0_f64, |acc, i| acc.max(matrix.entry(i, i).abs()));
    let rank_deficient = matrix.min_eigenvalue() <= 1e-9 * scale;
    Ok(CovEstimate {
        matrix,
        n_used: samples.len(),
        rank_deficient,
    })
}
