//! Closed-form Gaussian phase-space machinery for the self-referenced
//! CV-QKD protocol: the channel noise model, two-mode covariance matrices,
//! rotation averaging, the phase-estimator variance, and the heterodyne
//! split moments.
//!
//! Conventions used throughout the crate:
//! - all variances and correlations are in shot-noise units (vacuum = 1);
//! - quadrature mean values and amplitudes are in units of sqrt(N0);
//! - two-mode matrices use the basis order {Q_A, P_A, Q_B, P_B}.

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;

/// Symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Positivity / bona-fide eigenvalue tolerance.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Lossy, noisy Gaussian channel plus detector, in the conservative model
/// where detector imperfections are attributed to the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Channel transmittance T, in (0, 1].
    pub transmittance: f64,
    /// Detector/homodyne efficiency eta, in (0, 1].
    pub detector_efficiency: f64,
    /// Channel excess noise epsilon (shot-noise units), >= 0.
    pub excess_noise: f64,
    /// Detector electronic noise variance V_el (shot-noise units), >= 0.
    pub electronic_noise: f64,
}

impl ChannelParams {
    pub fn new(
        transmittance: f64,
        detector_efficiency: f64,
        excess_noise: f64,
        electronic_noise: f64,
    ) -> Result<Self> {
        let ch = Self {
            transmittance,
            detector_efficiency,
            excess_noise,
            electronic_noise,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("transmittance", self.transmittance, 0.0, 1.0, false)?;
        check_range(
            "detector_efficiency",
            self.detector_efficiency,
            0.0,
            1.0,
            false,
        )?;
        check_nonneg("excess_noise", self.excess_noise)?;
        check_nonneg("electronic_noise", self.electronic_noise)?;
        let t_eff = self.transmittance * self.detector_efficiency;
        if !(t_eff > 0.0 && t_eff <= 1.0) {
            return Err(Error::ParameterDomain {
                name: "t_eff",
                value: t_eff,
                constraint: "effective transmittance T*eta must lie in (0, 1]",
            });
        }
        Ok(())
    }

    /// Effective transmittance T_eff = T * eta.
    pub fn effective_transmittance(&self) -> f64 {
        self.transmittance * self.detector_efficiency
    }

    /// Total channel-referred noise chi (shot-noise units):
    /// loss-induced vacuum noise plus electronic and excess contributions,
    ///
    /// chi = (1 - T*eta)/(T*eta) + V_el/(T*eta) + epsilon.
    pub fn total_noise(&self) -> f64 {
        let t_eff = self.effective_transmittance();
        (1.0 - t_eff) / t_eff + self.electronic_noise / t_eff + self.excess_noise
    }
}

/// How reference pulses are generated and measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    /// One reference pulse per round, measured with a heterodyne detector
    /// (adds one vacuum unit per quadrature).
    SinglePulse,
    /// A pair of twin reference pulses per round; orthogonal homodyne
    /// measurements, no heterodyne vacuum penalty.
    TwinPulse,
}

impl ReferenceMode {
    /// The heterodyne vacuum penalty delta_R: 1 for single-pulse mode,
    /// 0 for twin-pulse mode.
    pub fn vacuum_penalty(self) -> f64 {
        match self {
            ReferenceMode::SinglePulse => 1.0,
            ReferenceMode::TwinPulse => 0.0,
        }
    }

    /// Physical pulses consumed by one key round: signal plus reference(s).
    pub fn pulses_per_round(self) -> u32 {
        match self {
            ReferenceMode::SinglePulse => 2,
            ReferenceMode::TwinPulse => 3,
        }
    }

    pub fn from_delta(delta: u8) -> Result<Self> {
        match delta {
            1 => Ok(ReferenceMode::SinglePulse),
            0 => Ok(ReferenceMode::TwinPulse),
            other => Err(Error::ParameterDomain {
                name: "delta_r",
                value: other as f64,
                constraint: "reference mode flag must be 0 (twin) or 1 (single)",
            }),
        }
    }
}

/// Alice-side protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Alice's Gaussian modulation variance V_A (shot-noise units).
    /// Zero is allowed for constant-signal diagnostic sessions.
    pub modulation_variance: f64,
    /// Squared reference-pulse amplitude V_R (shot-noise units), > 0.
    pub reference_variance: f64,
    pub reference_mode: ReferenceMode,
    /// Reconciliation efficiency beta, in [0, 1]; the degenerate endpoint 0
    /// yields zero-clamped key rates.
    pub reconciliation_efficiency: f64,
    /// Pulse generation rate (pulses per second), > 0.
    pub pulse_rate: f64,
    /// Phase-noise bandwidth f_theta (Hz), >= 0.
    pub phase_noise_bandwidth: f64,
}

impl ProtocolParams {
    pub fn new(
        modulation_variance: f64,
        reference_variance: f64,
        reference_mode: ReferenceMode,
        reconciliation_efficiency: f64,
        pulse_rate: f64,
        phase_noise_bandwidth: f64,
    ) -> Result<Self> {
        let p = Self {
            modulation_variance,
            reference_variance,
            reference_mode,
            reconciliation_efficiency,
            pulse_rate,
            phase_noise_bandwidth,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_nonneg("modulation_variance", self.modulation_variance)?;
        check_positive("reference_variance", self.reference_variance)?;
        let beta = self.reconciliation_efficiency;
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::ParameterDomain {
                name: "reconciliation_efficiency",
                value: beta,
                constraint: "must lie in [0, 1]",
            });
        }
        check_positive("pulse_rate", self.pulse_rate)?;
        check_nonneg("phase_noise_bandwidth", self.phase_noise_bandwidth)?;
        Ok(())
    }

    /// Variance V of Alice's output state: V = V_A + 1.
    pub fn output_variance(&self) -> f64 {
        self.modulation_variance + 1.0
    }

    /// Time consumed by one key round at the nominal pulse rate.
    pub fn dt_round(&self) -> f64 {
        f64::from(self.reference_mode.pulses_per_round()) / self.pulse_rate
    }

    /// Key rounds per second at the nominal pulse rate.
    pub fn rounds_per_second(&self) -> f64 {
        self.pulse_rate / f64::from(self.reference_mode.pulses_per_round())
    }
}

/// Statistics of the phase-estimation error phi = theta_hat - theta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseStats {
    /// E[cos phi], in [-1, 1].
    pub cos_mean: f64,
    /// E[sin phi]; zero for a symmetric error distribution.
    pub sin_mean: f64,
    /// Correlation-rescaling penalty xi = 1 - (E[cos phi])^2, in [0, 1].
    pub xi: f64,
    /// Variance of the phase estimate (rad^2).
    pub estimator_variance: f64,
}

impl PhaseStats {
    /// Error-free estimation: xi = 0, correlations untouched.
    pub fn perfect() -> Self {
        Self {
            cos_mean: 1.0,
            sin_mean: 0.0,
            xi: 0.0,
            estimator_variance: 0.0,
        }
    }

    /// Analytic stats from the estimator variance, taking the bound
    /// xi = V_thetahat exactly (so cos_mean = sqrt(1 - V_thetahat)).
    /// Variances of 1 rad^2 or more map to a fully randomized phase.
    pub fn from_estimator_variance(v_thetahat: f64) -> Result<Self> {
        check_nonneg("estimator_variance", v_thetahat)?;
        let xi = v_thetahat.min(1.0);
        Ok(Self {
            cos_mean: (1.0 - xi).sqrt(),
            sin_mean: 0.0,
            xi,
            estimator_variance: v_thetahat,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.cos_mean) {
            return Err(Error::ParameterDomain {
                name: "cos_mean",
                value: self.cos_mean,
                constraint: "must lie in [-1, 1]",
            });
        }
        if !(-1.0..=1.0).contains(&self.sin_mean) {
            return Err(Error::ParameterDomain {
                name: "sin_mean",
                value: self.sin_mean,
                constraint: "must lie in [-1, 1]",
            });
        }
        if !(-1e-12..=1.0 + 1e-12).contains(&self.xi) {
            return Err(Error::ParameterDomain {
                name: "xi",
                value: self.xi,
                constraint: "must lie in [0, 1]",
            });
        }
        let xi_from_cos = 1.0 - self.cos_mean * self.cos_mean;
        if (self.xi - xi_from_cos).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "xi = {} inconsistent with cos_mean = {} (expected {})",
                self.xi, self.cos_mean, xi_from_cos
            )));
        }
        check_nonneg("estimator_variance", self.estimator_variance)?;
        Ok(())
    }
}

/// 4x4 real symmetric covariance matrix of a bipartite state in the basis
/// {Q_A, P_A, Q_B, P_B}, shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovMat4 {
    m: [[f64; 4]; 4],
}

impl CovMat4 {
    /// Builds a matrix, rejecting asymmetry beyond `SYMMETRY_TOL`.
    pub fn new(m: [[f64; 4]; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (m[i][j] - m[j][i]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidInput(format!(
                        "covariance matrix not symmetric: m[{i}][{j}] = {} vs m[{j}][{i}] = {}",
                        m[i][j], m[j][i]
                    )));
                }
            }
        }
        Ok(Self { m })
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn as_array(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    /// Smallest eigenvalue of the matrix itself.
    pub fn min_eigenvalue(&self) -> f64 {
        symmetric_eigenvalues(self.m)[0]
    }

    pub fn is_positive_definite(&self, tol: f64) -> bool {
        self.min_eigenvalue() > tol
    }

    /// Smallest eigenvalue of m + i*Omega for the standard two-mode
    /// symplectic form, computed through the real 8x8 embedding
    /// [[m, -Omega], [Omega, m]] of the Hermitian matrix.
    pub fn min_bona_fide_eigenvalue(&self) -> f64 {
        let o = omega();
        let mut e = [[0.0_f64; 8]; 8];
        for i in 0..4 {
            for j in 0..4 {
                e[i][j] = self.m[i][j];
                e[i + 4][j + 4] = self.m[i][j];
                e[i][j + 4] = -o[i][j];
                e[i + 4][j] = o[i][j];
            }
        }
        symmetric_eigenvalues(e)[0]
    }

    /// Bona-fide-state test: m + i*Omega >= 0 up to `tol`.
    pub fn is_bona_fide(&self, tol: f64) -> bool {
        self.min_bona_fide_eigenvalue() >= -tol
    }
}

/// Standard two-mode symplectic form in the {Q_A, P_A, Q_B, P_B} basis.
pub fn omega() -> [[f64; 4]; 4] {
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
}

/// Covariance matrix of the entanglement-based state after the channel:
/// diagonal blocks V*I and T*eta*(V+chi)*I, off-diagonal C*sigma_z with
/// C = sqrt(T*eta*(V^2-1)).
pub fn epr_covariance(v: f64, ch: &ChannelParams) -> Result<CovMat4> {
    ch.validate()?;
    if v.is_nan() || v < 1.0 {
        return Err(Error::ParameterDomain {
            name: "v",
            value: v,
            constraint: "output variance V must be >= 1",
        });
    }
    let t_eff = ch.effective_transmittance();
    let chi = ch.total_noise();
    let b = t_eff * (v + chi);
    let c = (t_eff * (v * v - 1.0)).sqrt();
    CovMat4::new([
        [v, 0.0, c, 0.0],
        [0.0, v, 0.0, -c],
        [c, 0.0, b, 0.0],
        [0.0, -c, 0.0, b],
    ])
}

/// Rotation-averaged covariance matrix: the off-diagonal block C*sigma_z of
/// an `epr_covariance` output is replaced by C*Phi_bar with
/// Phi_bar = [[cos_mean, sin_mean], [sin_mean, -cos_mean]].
///
/// For a symmetric error distribution (sin_mean = 0) this rescales the
/// Q_A Q_B and P_A P_B correlations by cos_mean.
pub fn averaged_covariance(g: &CovMat4, ps: &PhaseStats) -> Result<CovMat4> {
    ps.validate()?;
    // The input must carry the epr_covariance structure: scalar diagonal
    // blocks and a sigma_z off-diagonal block.
    let m = g.as_array();
    let structure_ok = (m[0][0] - m[1][1]).abs() <= 1e-9
        && (m[2][2] - m[3][3]).abs() <= 1e-9
        && m[0][1].abs() <= 1e-9
        && m[2][3].abs() <= 1e-9
        && (m[0][2] + m[1][3]).abs() <= 1e-9
        && m[0][3].abs() <= 1e-9
        && m[1][2].abs() <= 1e-9;
    if !structure_ok {
        return Err(Error::InvalidInput(
            "averaged_covariance expects an epr_covariance-shaped input".into(),
        ));
    }
    let c = m[0][2];
    let (v, b) = (m[0][0], m[2][2]);
    let (cb, sb) = (ps.cos_mean, ps.sin_mean);
    CovMat4::new([
        [v, 0.0, c * cb, c * sb],
        [0.0, v, c * sb, -c * cb],
        [c * cb, c * sb, b, 0.0],
        [c * sb, -c * cb, 0.0, b],
    ])
}

/// Theoretical covariance matrix of the prepare-and-measure data:
/// Alice block V_A*I, Bob block T*eta*(V_A+1+chi)*I, off-diagonal
/// sqrt(T*eta)*V_A*cos_mean*I.
pub fn pm_covariance(p: &ProtocolParams, ch: &ChannelParams, cos_mean: f64) -> Result<CovMat4> {
    p.validate()?;
    ch.validate()?;
    if !(-1.0..=1.0).contains(&cos_mean) {
        return Err(Error::ParameterDomain {
            name: "cos_mean",
            value: cos_mean,
            constraint: "must lie in [-1, 1]",
        });
    }
    let va = p.modulation_variance;
    let t_eff = ch.effective_transmittance();
    let b = t_eff * (va + 1.0 + ch.total_noise());
    let c = t_eff.sqrt() * va * cos_mean;
    CovMat4::new([
        [va, 0.0, c, 0.0],
        [0.0, va, 0.0, c],
        [c, 0.0, b, 0.0],
        [0.0, c, 0.0, b],
    ])
}

/// Second moments of Alice's heterodyne output mode A' (vacuum mixed in on
/// a balanced beam splitter): (<Q_A'^2>, <Q_A' Q_B>) = ((V+1)/2, C_qq/sqrt(2))
/// where V and C_qq are read from the averaged covariance matrix.
pub fn heterodyne_split_moments(g: &CovMat4) -> (f64, f64) {
    let v = g.entry(0, 0);
    let c_qq = g.entry(0, 2);
    ((v + 1.0) / 2.0, c_qq / std::f64::consts::SQRT_2)
}

/// Variance of the reference-pulse phase estimate:
///
/// V_thetahat = (chi + 1)/V_R + delta_R/(T*eta*V_R).
pub fn phase_estimator_variance(ch: &ChannelParams, v_r: f64, mode: ReferenceMode) -> Result<f64> {
    ch.validate()?;
    check_positive("reference_variance", v_r)?;
    let t_eff = ch.effective_transmittance();
    let chi = ch.total_noise();
    Ok((chi + 1.0) / v_r + mode.vacuum_penalty() / (t_eff * v_r))
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name,
            value,
            constraint: "must be positive and finite",
        })
    }
}

fn check_nonneg(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name,
            value,
            constraint: "must be non-negative and finite",
        })
    }
}

fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    lo_inclusive: bool,
) -> Result<()> {
    let lo_ok = if lo_inclusive { value >= lo } else { value > lo };
    if lo_ok && value <= hi {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name,
            value,
            constraint: "must lie in (0, 1]",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sec4c_channel() -> ChannelParams {
        ChannelParams::new(1.0, 0.8, 0.01, 0.01).unwrap()
    }

    fn sec4c_protocol() -> ProtocolParams {
        ProtocolParams::new(34.0, 900.0, ReferenceMode::TwinPulse, 0.95, 250e3, 1000.0).unwrap()
    }

    #[test]
    fn chi_lossless_noiseless_is_zero() {
        let ch = ChannelParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(ch.total_noise().abs() < 1e-15);
    }

    #[test]
    fn chi_half_efficiency() {
        let ch = ChannelParams::new(1.0, 0.5, 0.0, 0.0).unwrap();
        assert!((ch.total_noise() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi_benchtop_point() {
        assert!((sec4c_channel().total_noise() - 0.2725).abs() < 1e-12);
    }

    #[test]
    fn channel_rejects_zero_transmittance() {
        assert!(ChannelParams::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(ChannelParams::new(1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn epr_vacuum_modulation_limit() {
        let ch = sec4c_channel();
        let g = epr_covariance(1.0, &ch).unwrap();
        let b = 0.8 * (1.0 + ch.total_noise());
        assert_eq!(g.entry(0, 2), 0.0);
        assert!((g.entry(2, 2) - b).abs() < 1e-12);
        assert!((g.entry(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn epr_identity_channel() {
        let ch = ChannelParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let g = epr_covariance(2.0, &ch).unwrap();
        assert!((g.entry(0, 2) - 3.0_f64.sqrt()).abs() < 1e-12);
        assert!((g.entry(2, 2) - 2.0).abs() < 1e-12);
        assert!((g.entry(3, 3) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn epr_benchtop_point() {
        let g = epr_covariance(35.0, &sec4c_channel()).unwrap();
        let c = (0.8_f64 * (35.0 * 35.0 - 1.0)).sqrt();
        assert!((c - 31.2922).abs() < 1e-4);
        assert!((g.entry(0, 2) - c).abs() < 1e-12);
        assert!((g.entry(1, 3) + c).abs() < 1e-12);
        assert!((g.entry(2, 2) - 28.218).abs() < 1e-12);
        assert!(g.is_bona_fide(POSITIVITY_TOL));
    }

    #[test]
    fn averaged_is_identity_for_perfect_stats() {
        let g = epr_covariance(35.0, &sec4c_channel()).unwrap();
        let avg = averaged_covariance(&g, &PhaseStats::perfect()).unwrap();
        assert_eq!(g.as_array(), avg.as_array());
    }

    #[test]
    fn averaged_kills_correlations_at_cos_zero() {
        let g = epr_covariance(35.0, &sec4c_channel()).unwrap();
        let ps = PhaseStats {
            cos_mean: 0.0,
            sin_mean: 0.0,
            xi: 1.0,
            estimator_variance: 2.0,
        };
        let avg = averaged_covariance(&g, &ps).unwrap();
        assert_eq!(avg.entry(0, 2), 0.0);
        assert_eq!(avg.entry(1, 3), 0.0);
    }

    #[test]
    fn averaged_benchtop_point() {
        let ch = sec4c_channel();
        let g = epr_covariance(35.0, &ch).unwrap();
        let v_th = phase_estimator_variance(&ch, 900.0, ReferenceMode::TwinPulse).unwrap();
        let ps = PhaseStats::from_estimator_variance(v_th).unwrap();
        let avg = averaged_covariance(&g, &ps).unwrap();
        assert!((avg.entry(0, 2) - 31.270).abs() < 1e-3);
        assert!(avg.is_bona_fide(POSITIVITY_TOL));
    }

    #[test]
    fn averaged_rejects_bad_stats() {
        let g = epr_covariance(35.0, &sec4c_channel()).unwrap();
        let bad = PhaseStats {
            cos_mean: 0.9,
            sin_mean: 0.0,
            xi: 0.5, // inconsistent with cos_mean
            estimator_variance: 0.1,
        };
        assert!(averaged_covariance(&g, &bad).is_err());
    }

    #[test]
    fn pm_benchtop_matrix() {
        let ch = sec4c_channel();
        let p = sec4c_protocol();
        let v_th = phase_estimator_variance(&ch, 900.0, ReferenceMode::TwinPulse).unwrap();
        let cos_mean = (1.0 - v_th).sqrt();
        let g = pm_covariance(&p, &ch, cos_mean).unwrap();
        assert!((g.entry(0, 0) - 34.000).abs() < 1e-3);
        assert!((g.entry(2, 2) - 28.218).abs() < 1e-3);
        assert!((g.entry(0, 2) - 30.389).abs() < 1e-3);
        // The P-side off-diagonal carries the same sign for pm data.
        assert!((g.entry(1, 3) - g.entry(0, 2)).abs() < 1e-12);
    }

    #[test]
    fn pm_identity_channel_perfect_estimation() {
        let ch = ChannelParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let p = ProtocolParams::new(34.0, 900.0, ReferenceMode::TwinPulse, 0.95, 250e3, 0.0)
            .unwrap();
        let g = pm_covariance(&p, &ch, 1.0).unwrap();
        assert!((g.entry(0, 2) - 34.0).abs() < 1e-12);
    }

    #[test]
    fn heterodyne_split_vacuum() {
        let ch = ChannelParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let g = epr_covariance(1.0, &ch).unwrap();
        let (var_a, cross) = heterodyne_split_moments(&g);
        assert!((var_a - 1.0).abs() < 1e-15);
        assert_eq!(cross, 0.0);
    }

    #[test]
    fn heterodyne_split_benchtop_point() {
        let ch = sec4c_channel();
        let g = epr_covariance(35.0, &ch).unwrap();
        let v_th = phase_estimator_variance(&ch, 900.0, ReferenceMode::TwinPulse).unwrap();
        let ps = PhaseStats::from_estimator_variance(v_th).unwrap();
        let avg = averaged_covariance(&g, &ps).unwrap();
        let (var_a, cross) = heterodyne_split_moments(&avg);
        assert!((var_a - 18.0).abs() < 1e-12);
        assert!((cross - 22.1113).abs() < 5e-4);
        // Quadrature symmetry: the P-labelled moments match the Q-labelled ones.
        let var_a_p = (avg.entry(1, 1) + 1.0) / 2.0;
        let cross_p = avg.entry(1, 3) / std::f64::consts::SQRT_2;
        assert!((var_a_p - var_a).abs() < 1e-12);
        assert!((cross_p.abs() - cross.abs()).abs() < 1e-12);
    }

    #[test]
    fn estimator_variance_classical_limit() {
        let v = phase_estimator_variance(&sec4c_channel(), 1e9, ReferenceMode::SinglePulse)
            .unwrap();
        assert!(v < 1e-6);
    }

    #[test]
    fn estimator_variance_benchtop_point() {
        let ch = sec4c_channel();
        let twin = phase_estimator_variance(&ch, 900.0, ReferenceMode::TwinPulse).unwrap();
        assert!((twin - 1.41389e-3).abs() < 1e-8);
        let single = phase_estimator_variance(&ch, 900.0, ReferenceMode::SinglePulse).unwrap();
        assert!((single - twin - 1.0 / (0.8 * 900.0)).abs() < 1e-15);
    }

    #[test]
    fn covmat_rejects_asymmetry() {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        m[0][2] = 0.5;
        m[2][0] = 0.5 + 1e-9;
        assert!(CovMat4::new(m).is_err());
    }

    #[test]
    fn phase_stats_from_large_variance_saturates() {
        let ps = PhaseStats::from_estimator_variance(4.0).unwrap();
        assert_eq!(ps.cos_mean, 0.0);
        assert_eq!(ps.xi, 1.0);
        ps.validate().unwrap();
    }
}
