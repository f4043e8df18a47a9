//! Closed-form secret-key-rate bounds for the self-referenced protocol
//! under individual and collective Gaussian attacks, plus the parameter
//! sweeps built on them.
//!
//! Two evaluation variants are exposed everywhere. `XiMode::Bound` derives
//! the correlation penalty xi from the analytic phase-estimator variance
//! (chi+1)/V_R + delta_R/(T_eff V_R), which upper-bounds Eve and lower-bounds
//! the mutual information; `XiMode::Exact` uses a caller-supplied xi, e.g. a
//! measured one. All informations are in bits per round unless stated.

use crate::error::{Error, Result};
use crate::gaussian::ReferenceMode;

pub mod sweep;

/// Everything the closed-form bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateInputs {
    /// Variance of Alice's output state, V = V_A + 1, >= 1.
    pub v: f64,
    /// Channel-referred noise chi (shot-noise units).
    pub chi: f64,
    /// Effective transmittance T_eff = T*eta, in (0, 1].
    pub t_eff: f64,
    /// Correlation penalty xi used in `XiMode::Exact`, in [0, 1].
    pub xi: f64,
    /// Squared reference-pulse amplitude V_R, > 0.
    pub v_r: f64,
    pub reference_mode: ReferenceMode,
    /// Reconciliation efficiency beta, in (0, 1].
    pub beta: f64,
    /// Key rounds per second, used for the per-second rate figures.
    pub rounds_per_second: f64,
}

/// Which xi enters the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiMode {
    /// xi = V_thetahat from the reference-pulse parameters (the
    /// experimental-parameter bound).
    Bound,
    /// xi as supplied in `KeyRateInputs::xi`.
    Exact,
}

impl std::fmt::Display for XiMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            XiMode::Bound => write!(f, "bound"),
            XiMode::Exact => write!(f, "exact"),
        }
    }
}

impl KeyRateInputs {
    /// Inputs at a protocol/channel operating point. `xi` is what the
    /// `Exact` variant will use; the `Bound` variant derives its own.
    pub fn from_params(
        protocol: &crate::gaussian::ProtocolParams,
        channel: &crate::gaussian::ChannelParams,
        xi: f64,
    ) -> Result<Self> {
        protocol.validate()?;
        channel.validate()?;
        let inputs = Self {
            v: protocol.output_variance(),
            chi: channel.total_noise(),
            t_eff: channel.effective_transmittance(),
            xi,
            v_r: protocol.reference_variance,
            reference_mode: protocol.reference_mode,
            beta: protocol.reconciliation_efficiency,
            rounds_per_second: protocol.rounds_per_second(),
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value, ok) in [
            ("v", self.v, self.v >= 1.0 && self.v.is_finite()),
            ("chi", self.chi, self.chi >= 0.0 && self.chi.is_finite()),
            (
                "t_eff",
                self.t_eff,
                self.t_eff > 0.0 && self.t_eff <= 1.0,
            ),
            ("xi", self.xi, (0.0..=1.0).contains(&self.xi)),
            ("v_r", self.v_r, self.v_r > 0.0 && self.v_r.is_finite()),
            (
                "beta",
                self.beta,
                self.beta >= 0.0 && self.beta <= 1.0,
            ),
            (
                "rounds_per_second",
                self.rounds_per_second,
                self.rounds_per_second > 0.0 && self.rounds_per_second.is_finite(),
            ),
        ] {
            if !ok {
                return Err(Error::ParameterDomain {
                    name,
                    value,
                    constraint: "key-rate input out of domain",
                });
            }
        }
        Ok(())
    }

    /// Analytic phase-estimator variance for these inputs.
    pub fn estimator_variance(&self) -> f64 {
        (self.chi + 1.0) / self.v_r
            + self.reference_mode.vacuum_penalty() / (self.t_eff * self.v_r)
    }

    /// The xi actually used under `mode` (capped at full randomization).
    pub fn xi_used(&self, mode: XiMode) -> f64 {
        match mode {
            XiMode::Bound => self.estimator_variance().min(1.0),
            XiMode::Exact => self.xi,
        }
    }
}

fn log2_capped(x: f64) -> f64 {
    // Non-positive arguments signal zero capacity, never a crash.
    if x <= 0.0 {
        0.0
    } else {
        x.log2()
    }
}

/// Lower bound on the Alice-Bob mutual information, bits/round.
///
/// In `Bound` mode this is
/// (1/2) log2[(V+chi) / ((chi+1)(1+(V-1)/V_R) + (V-1) delta_R / (T_eff V_R))];
/// in `Exact` mode (1/2) log2[(V+chi) / (chi+1+(V-1) xi)].
pub fn mutual_info_ab(inputs: &KeyRateInputs, mode: XiMode) -> f64 {
    let v = inputs.v;
    let chi = inputs.chi;
    let denom = match mode {
        XiMode::Bound => {
            let delta = inputs.reference_mode.vacuum_penalty();
            (chi + 1.0) * (1.0 + (v - 1.0) / inputs.v_r)
                + (v - 1.0) * delta / (inputs.t_eff * inputs.v_r)
        }
        XiMode::Exact => chi + 1.0 + (v - 1.0) * inputs.xi,
    };
    0.5 * log2_capped((v + chi) / denom)
}

/// Upper bound on the Eve-Bob mutual information under individual attacks,
/// bits/round:
///
/// (1/2) log2{ T_eff^2 (V+chi)/V * [V chi + 1 + (V^2-1) xi] }.
pub fn eve_info_individual(inputs: &KeyRateInputs, mode: XiMode) -> f64 {
    let v = inputs.v;
    let chi = inputs.chi;
    let xi = inputs.xi_used(mode);
    let arg = inputs.t_eff * inputs.t_eff * (v + chi) / v
        * (v * chi + 1.0 + (v * v - 1.0) * xi);
    0.5 * log2_capped(arg)
}

/// The three symplectic eigenvalues entering the Holevo bound:
///
/// lambda_{1,2}^2 = (Delta +- sqrt(Delta^2 - 4 D^2)) / 2 with
/// Delta = V^2 (1 - 2 T_eff) + T_eff^2 (V+chi)^2 + 2 T_eff [1 + (V^2-1) xi],
/// D = T_eff [V chi + 1 + (V^2-1) xi], and
/// lambda_3^2 = V [V chi + 1 + (V^2-1) xi] / (V + chi).
pub fn symplectic_eigenvalues(v: f64, t_eff: f64, chi: f64, xi: f64) -> Result<(f64, f64, f64)> {
    let big_delta = v * v * (1.0 - 2.0 * t_eff)
        + t_eff * t_eff * (v + chi) * (v + chi)
        + 2.0 * t_eff * (1.0 + (v * v - 1.0) * xi);
    let d = t_eff * (v * chi + 1.0 + (v * v - 1.0) * xi);
    let mut disc = big_delta * big_delta - 4.0 * d * d;
    if disc < 0.0 {
        if disc < -1e-9 {
            return Err(Error::Numerical(format!(
                "symplectic discriminant {disc} is negative beyond tolerance"
            )));
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    let l1 = clamp_eigenvalue(((big_delta + root) / 2.0).max(0.0).sqrt())?;
    let l2 = clamp_eigenvalue(((big_delta - root) / 2.0).max(0.0).sqrt())?;
    let l3 = clamp_eigenvalue((v * (v * chi + 1.0 + (v * v - 1.0) * xi) / (v + chi)).sqrt())?;
    Ok((l1, l2, l3))
}

fn clamp_eigenvalue(lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::Numerical(format!(
            "symplectic eigenvalue {lambda} is not finite"
        )));
    }
    if lambda < 1.0 - 1e-9 {
        return Err(Error::Numerical(format!(
            "symplectic eigenvalue {lambda} below the vacuum limit"
        )));
    }
    Ok(lambda.max(1.0))
}

/// Von Neumann entropy kernel G(x) = (x+1) log2(x+1) - x log2(x), with
/// G(0) = 0 by continuity.
pub fn entropy_g(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (x + 1.0) * (x + 1.0).log2() - x * x.log2()
    }
}

/// Holevo bound on Eve's information under collective attacks, bits/round:
/// chi_BE = G((l1-1)/2) + G((l2-1)/2) - G((l3-1)/2).
pub fn holevo_bound(inputs: &KeyRateInputs, mode: XiMode) -> Result<f64> {
    let xi = inputs.xi_used(mode);
    let (l1, l2, l3) = symplectic_eigenvalues(inputs.v, inputs.t_eff, inputs.chi, xi)?;
    Ok(holevo_from_eigenvalues(l1, l2, l3))
}

pub fn holevo_from_eigenvalues(l1: f64, l2: f64, l3: f64) -> f64 {
    entropy_g((l1 - 1.0) / 2.0) + entropy_g((l2 - 1.0) / 2.0) - entropy_g((l3 - 1.0) / 2.0)
}

/// One key-rate figure in the three unit systems used by the reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFigures {
    pub bits_per_round: f64,
    pub bits_per_pulse: f64,
    pub bits_per_second: f64,
    /// Set when the underlying bound went negative and was clamped to zero.
    pub no_secure_key: bool,
}

impl RateFigures {
    fn from_per_round(raw: f64, inputs: &KeyRateInputs) -> Self {
        let clamped = raw.max(0.0);
        let pulses = f64::from(inputs.reference_mode.pulses_per_round());
        Self {
            bits_per_round: clamped,
            bits_per_pulse: clamped / pulses,
            bits_per_second: clamped * inputs.rounds_per_second,
            no_secure_key: raw <= 0.0,
        }
    }
}

/// Complete key-rate evaluation at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport {
    pub xi_mode: XiMode,
    /// The xi value the bounds were evaluated with.
    pub xi_used: f64,
    /// Lower bound on I_{A'B}, bits/round.
    pub i_ab: f64,
    /// Upper bound on I_{EB}, bits/round.
    pub i_eb: f64,
    /// Holevo bound chi_BE, bits/round.
    pub chi_be: f64,
    pub lambdas: (f64, f64, f64),
    /// K_ind = beta * I_AB - I_EB, clamped at zero.
    pub k_ind: RateFigures,
    /// K_col = beta * I_AB - chi_BE, clamped at zero.
    pub k_col: RateFigures,
}

/// Evaluates every bound at one parameter point. The report carries both the
/// individual- and collective-attack rates; `key_rate_individual` and
/// `key_rate_collective` are the corresponding accessors.
pub fn key_rate_report(inputs: &KeyRateInputs, mode: XiMode) -> Result<KeyRateReport> {
    inputs.validate()?;
    let xi_used = inputs.xi_used(mode);
    let i_ab = mutual_info_ab(inputs, mode);
    let i_eb = eve_info_individual(inputs, mode);
    let lambdas = symplectic_eigenvalues(inputs.v, inputs.t_eff, inputs.chi, xi_used)?;
    let chi_be = holevo_from_eigenvalues(lambdas.0, lambdas.1, lambdas.2);
    let k_ind = RateFigures::from_per_round(inputs.beta * i_ab - i_eb, inputs);
    let k_col = RateFigures::from_per_round(inputs.beta * i_ab - chi_be, inputs);
    Ok(KeyRateReport {
        xi_mode: mode,
        xi_used,
        i_ab,
        i_eb,
        chi_be,
        lambdas,
        k_ind,
        k_col,
    })
}

/// Minimum key rate secure against individual attacks.
pub fn key_rate_individual(inputs: &KeyRateInputs, mode: XiMode) -> Result<RateFigures> {
    Ok(key_rate_report(inputs, mode)?.k_ind)
}

/// Minimum key rate secure against collective attacks.
pub fn key_rate_collective(inputs: &KeyRateInputs, mode: XiMode) -> Result<RateFigures> {
    Ok(key_rate_report(inputs, mode)?.k_col)
}
