//! Parameter sweeps over the closed-form key-rate bounds: rate versus
//! effective transmittance for a family of reference-pulse amplitudes, and
//! rate versus fiber distance for a family of reconciliation efficiencies.

use crate::error::{Error, Result};
use crate::gaussian::{ChannelParams, ReferenceMode};
use crate::keyrate::{key_rate_report, KeyRateInputs, XiMode};

/// Which attack bound a sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Individual,
    Collective,
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttackKind::Individual => write!(f, "ind"),
            AttackKind::Collective => write!(f, "col"),
        }
    }
}

/// A uniformly spaced inclusive grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.min <= self.max) {
            return Err(Error::InvalidInput(format!(
                "empty or inverted grid: min {}, max {}, step {}",
                self.min, self.max, self.step
            )));
        }
        let n = ((self.max - self.min) / self.step + 1.5).floor() as usize;
        Ok((0..n)
            .map(|k| self.min + k as f64 * self.step)
            .filter(|&x| x <= self.max + 1e-12)
            .collect())
    }
}

/// One key-rate curve over effective transmittance: fixed modulation and
/// noise parameters, with the reference-pulse penalty either active
/// (`v_r = Some(..)`, bound mode) or switched off (`v_r = None`, xi = 0,
/// the conventional-protocol reference curve).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSpec {
    pub v_a: f64,
    pub epsilon: f64,
    pub v_el: f64,
    pub beta: f64,
    pub reference_mode: ReferenceMode,
    pub v_r: Option<f64>,
}

impl CurveSpec {
    fn inputs_at(&self, t_eff: f64) -> KeyRateInputs {
        let chi = (1.0 - t_eff) / t_eff + self.v_el / t_eff + self.epsilon;
        KeyRateInputs {
            v: self.v_a + 1.0,
            chi,
            t_eff,
            xi: 0.0,
            // Placeholder in xi = 0 mode; the exact variant never reads it.
            v_r: self.v_r.unwrap_or(1.0),
            reference_mode: self.reference_mode,
            beta: self.beta,
            rounds_per_second: 1.0,
        }
    }

    fn xi_mode(&self) -> XiMode {
        match self.v_r {
            Some(_) => XiMode::Bound,
            None => XiMode::Exact,
        }
    }

    /// Clamped key rate in bits per round at one transmittance point.
    pub fn rate_at(&self, t_eff: f64, kind: AttackKind) -> Result<f64> {
        let report = key_rate_report(&self.inputs_at(t_eff), self.xi_mode())?;
        Ok(match kind {
            AttackKind::Individual => report.k_ind.bits_per_round,
            AttackKind::Collective => report.k_col.bits_per_round,
        })
    }

    /// Unclamped rate, used to locate the zero crossing.
    fn raw_rate_at(&self, t_eff: f64, kind: AttackKind) -> Result<f64> {
        let inputs = self.inputs_at(t_eff);
        let report = key_rate_report(&inputs, self.xi_mode())?;
        Ok(match kind {
            AttackKind::Individual => inputs.beta * report.i_ab - report.i_eb,
            AttackKind::Collective => inputs.beta * report.i_ab - report.chi_be,
        })
    }

    /// Transmittance below which the expected key rate is zero, located by
    /// bisection to `tol`. Returns `None` when the rate is non-positive over
    /// the whole (0, 1] range.
    pub fn termination_transmittance(&self, kind: AttackKind, tol: f64) -> Result<Option<f64>> {
        let mut lo = 1e-4;
        let mut hi = 1.0;
        if self.raw_rate_at(hi, kind)? <= 0.0 {
            return Ok(None);
        }
        if self.raw_rate_at(lo, kind)? > 0.0 {
            // Positive all the way down to the bracket edge.
            return Ok(Some(lo));
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.raw_rate_at(mid, kind)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }
}

/// Plot-ready sweep output: an x column plus one labelled column per curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub x_label: String,
    pub x: Vec<f64>,
    pub columns: Vec<SweepColumn>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepColumn {
    pub label: String,
    pub values: Vec<f64>,
}

impl SweepTable {
    pub fn column(&self, label: &str) -> Option<&SweepColumn> {
        self.columns.iter().find(|c| c.label == label)
    }
}

/// Key rate versus effective transmittance for a family of reference-pulse
/// amplitudes (V_R = ratio * V_A) plus the xi = 0 reference curve. Emits
/// both attack bounds per setting, in bits per round.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmittanceSweepSpec {
    pub v_a: f64,
    pub epsilon: f64,
    pub v_el: f64,
    pub beta: f64,
    pub reference_mode: ReferenceMode,
    /// V_R / V_A ratios for the curve family.
    pub vr_ratios: Vec<f64>,
    pub grid: Grid,
}

impl TransmittanceSweepSpec {
    pub fn curve(&self, v_r: Option<f64>) -> CurveSpec {
        CurveSpec {
            v_a: self.v_a,
            epsilon: self.epsilon,
            v_el: self.v_el,
            beta: self.beta,
            reference_mode: self.reference_mode,
            v_r,
        }
    }
}

pub fn sweep_transmittance(spec: &TransmittanceSweepSpec) -> Result<SweepTable> {
    let x = spec.grid.points()?;
    if x.is_empty() {
        return Err(Error::InvalidInput("transmittance grid is empty".into()));
    }
    let mut settings: Vec<(String, Option<f64>)> = spec
        .vr_ratios
        .iter()
        .map(|&r| (format!("vr_{r}x"), Some(r * spec.v_a)))
        .collect();
    settings.push(("xi0".to_string(), None));

    let mut columns = Vec::new();
    for kind in [AttackKind::Individual, AttackKind::Collective] {
        for (name, v_r) in &settings {
            let curve = spec.curve(*v_r);
            let values = x
                .iter()
                .map(|&t| curve.rate_at(t, kind))
                .collect::<Result<Vec<f64>>>()?;
            columns.push(SweepColumn {
                label: format!("k_{kind}_{name}"),
                values,
            });
        }
    }
    Ok(SweepTable {
        x_label: "t_eff".to_string(),
        x,
        columns,
    })
}

/// Key rate versus fiber distance for a family of reconciliation
/// efficiencies, in bits per second at the configured pulse rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSweepSpec {
    pub v_a: f64,
    pub v_r: f64,
    pub reference_mode: ReferenceMode,
    pub epsilon: f64,
    pub v_el: f64,
    /// Detector efficiency; the channel transmittance follows from distance.
    pub eta: f64,
    pub pulse_rate: f64,
    /// Fiber loss in dB/km.
    pub loss_db_per_km: f64,
    pub betas: Vec<f64>,
    pub km_grid: Grid,
    pub attack: AttackKind,
}

impl DistanceSweepSpec {
    /// Channel transmittance at `km`: T = 10^(-loss * km / 10).
    pub fn transmittance_at(&self, km: f64) -> f64 {
        10f64.powf(-self.loss_db_per_km * km / 10.0)
    }

    pub fn rate_at(&self, km: f64, beta: f64) -> Result<f64> {
        let t = self.transmittance_at(km);
        let ch = ChannelParams::new(t, self.eta, self.epsilon, self.v_el)?;
        let rounds_per_second =
            self.pulse_rate / f64::from(self.reference_mode.pulses_per_round());
        let inputs = KeyRateInputs {
            v: self.v_a + 1.0,
            chi: ch.total_noise(),
            t_eff: ch.effective_transmittance(),
            xi: 0.0,
            v_r: self.v_r,
            reference_mode: self.reference_mode,
            beta,
            rounds_per_second,
        };
        let report = key_rate_report(&inputs, XiMode::Bound)?;
        Ok(match self.attack {
            AttackKind::Individual => report.k_ind.bits_per_second,
            AttackKind::Collective => report.k_col.bits_per_second,
        })
    }
}

pub fn distance_sweep(spec: &DistanceSweepSpec) -> Result<SweepTable> {
    let x = spec.km_grid.points()?;
    if x.is_empty() {
        return Err(Error::InvalidInput("distance grid is empty".into()));
    }
    let mut columns = Vec::new();
    for &beta in &spec.betas {
        let values = x
            .iter()
            .map(|&km| spec.rate_at(km, beta))
            .collect::<Result<Vec<f64>>>()?;
        columns.push(SweepColumn {
            label: format!("k_{}_beta_{beta}", spec.attack),
            values,
        });
    }
    Ok(SweepTable {
        x_label: "distance_km".to_string(),
        x,
        columns,
    })
}
