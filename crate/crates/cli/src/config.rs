//! Flat key-value run configuration with dotted section prefixes.
//!
//! Lines are `key = value`; `#` starts a comment. Keys are validated against
//! the full schema (unknown keys are rejected with their line number) and
//! every physical invariant is re-checked when the typed sections are built.

use std::collections::BTreeMap;

use srcvqkd::gaussian::{ChannelParams, ProtocolParams, ReferenceMode};
use srcvqkd::keyrate::sweep::{AttackKind, DistanceSweepSpec, Grid, TransmittanceSweepSpec};
use srcvqkd::keyrate::XiMode;
use srcvqkd::phase::PhaseProcess;
use srcvqkd::sim::demo::{ConstellationSpec, DemoConfig};
use srcvqkd::sim::SessionConfig;

use crate::CliError;

/// Every key the configuration format accepts.
pub const SCHEMA: &[&str] = &[
    "channel.t",
    "channel.eta",
    "channel.epsilon",
    "channel.v_el",
    "protocol.v_a",
    "protocol.v_r",
    "protocol.delta_r",
    "protocol.beta",
    "protocol.pulse_rate",
    "protocol.f_theta",
    "session.n_rounds",
    "session.n_param_est",
    "session.tomography",
    "session.seed",
    "keyrate.xi_mode",
    "keyrate.xi",
    "sweep.kind",
    "sweep.vr_ratios",
    "sweep.t_min",
    "sweep.t_max",
    "sweep.t_step",
    "sweep.betas",
    "sweep.km_min",
    "sweep.km_max",
    "sweep.km_step",
    "sweep.loss_db_per_km",
    "sweep.attack",
    "demo.mode",
    "demo.signal_q",
    "demo.signal_p",
    "demo.n_rounds",
    "demo.f_theta_dt",
    "demo.grid_min",
    "demo.grid_max",
    "demo.grid_step",
    "demo.pulses_per_tile",
    "demo.seed",
    "calib.coeffs",
    "calib.v_min",
    "calib.v_max",
    "calib.n",
    "calib.amplitude",
    "calib.noise_sd",
    "calib.f_theta_dt",
    "calib.degree",
    "calib.seed",
];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {line_no}: expected `key = value`"))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !SCHEMA.contains(&key) {
                return Err(CliError::Config(format!(
                    "config line {line_no}: unknown key `{key}`"
                )));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Config(format!(
                    "config line {line_no}: duplicate key `{key}`"
                )));
            }
        }
        Ok(Self { values })
    }

    /// Flag overrides; only schema keys are accepted.
    pub fn set(&mut self, key: &str, value: String) {
        assert!(SCHEMA.contains(&key), "non-schema override key `{key}`");
        self.values.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    /// `key=value` lines of the resolved configuration, sorted by key.
    pub fn echo_lines(&self) -> impl Iterator<Item = String> + '_ {
        self.values.iter().map(|(k, v)| format!("{k}={v}"))
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing config key `{key}`")))
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        parse_f64(key, self.require(key)?)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            Some(text) => parse_f64(key, text),
            None => Ok(default),
        }
    }

    fn usize(&self, key: &str) -> Result<usize, CliError> {
        let text = self.require(key)?;
        text.parse()
            .map_err(|_| bad_value(key, text, "an unsigned integer"))
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.get(key) {
            Some(text) => text
                .parse()
                .map_err(|_| bad_value(key, text, "an unsigned integer")),
            None => Ok(default),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(text) => Err(bad_value(key, text, "true or false")),
            None => Ok(default),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let text = self.require(key)?;
        let list = text
            .split(',')
            .map(|part| parse_f64(key, part.trim()))
            .collect::<Result<Vec<f64>, CliError>>()?;
        if list.is_empty() {
            return Err(bad_value(key, text, "a non-empty comma-separated list"));
        }
        Ok(list)
    }

    pub fn reference_mode(&self) -> Result<ReferenceMode, CliError> {
        match self.require("protocol.delta_r")? {
            "0" => Ok(ReferenceMode::TwinPulse),
            "1" => Ok(ReferenceMode::SinglePulse),
            text => Err(bad_value("protocol.delta_r", text, "0 (twin) or 1 (single)")),
        }
    }

    pub fn channel(&self) -> Result<ChannelParams, CliError> {
        ChannelParams::new(
            self.f64("channel.t")?,
            self.f64("channel.eta")?,
            self.f64("channel.epsilon")?,
            self.f64("channel.v_el")?,
        )
        .map_err(CliError::from)
    }

    pub fn protocol(&self) -> Result<ProtocolParams, CliError> {
        ProtocolParams::new(
            self.f64("protocol.v_a")?,
            self.f64("protocol.v_r")?,
            self.reference_mode()?,
            self.f64_or("protocol.beta", 0.95)?,
            self.f64_or("protocol.pulse_rate", 250e3)?,
            self.f64_or("protocol.f_theta", 0.0)?,
        )
        .map_err(CliError::from)
    }

    pub fn session(&self) -> Result<SessionConfig, CliError> {
        let cfg = SessionConfig {
            protocol: self.protocol()?,
            channel: self.channel()?,
            n_rounds: self.usize("session.n_rounds")?,
            n_param_est: self.usize("session.n_param_est")?,
            tomography: self.bool_or("session.tomography", true)?,
            seed: self.u64_or("session.seed", 0)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn xi_mode(&self) -> Result<(XiMode, f64), CliError> {
        match self.get("keyrate.xi_mode").unwrap_or("bound") {
            "bound" => Ok((XiMode::Bound, self.f64_or("keyrate.xi", 0.0)?)),
            "exact" => Ok((XiMode::Exact, self.f64("keyrate.xi")?)),
            text => Err(bad_value("keyrate.xi_mode", text, "bound or exact")),
        }
    }

    pub fn sweep_kind(&self) -> Result<&str, CliError> {
        match self.require("sweep.kind")? {
            kind @ ("transmittance" | "distance") => Ok(kind),
            text => Err(bad_value("sweep.kind", text, "transmittance or distance")),
        }
    }

    pub fn transmittance_sweep(&self) -> Result<TransmittanceSweepSpec, CliError> {
        Ok(TransmittanceSweepSpec {
            v_a: self.f64("protocol.v_a")?,
            epsilon: self.f64("channel.epsilon")?,
            v_el: self.f64("channel.v_el")?,
            beta: self.f64_or("protocol.beta", 0.95)?,
            reference_mode: self.reference_mode()?,
            vr_ratios: self.f64_list("sweep.vr_ratios")?,
            grid: Grid {
                min: self.f64("sweep.t_min")?,
                max: self.f64("sweep.t_max")?,
                step: self.f64("sweep.t_step")?,
            },
        })
    }

    pub fn attack_kind(&self) -> Result<AttackKind, CliError> {
        match self.get("sweep.attack").unwrap_or("col") {
            "ind" => Ok(AttackKind::Individual),
            "col" => Ok(AttackKind::Collective),
            text => Err(bad_value("sweep.attack", text, "ind or col")),
        }
    }

    pub fn distance_sweep(&self) -> Result<DistanceSweepSpec, CliError> {
        Ok(DistanceSweepSpec {
            v_a: self.f64("protocol.v_a")?,
            v_r: self.f64("protocol.v_r")?,
            reference_mode: self.reference_mode()?,
            epsilon: self.f64("channel.epsilon")?,
            v_el: self.f64("channel.v_el")?,
            eta: self.f64("channel.eta")?,
            pulse_rate: self.f64_or("protocol.pulse_rate", 250e3)?,
            loss_db_per_km: self.f64_or("sweep.loss_db_per_km", 0.2)?,
            betas: self.f64_list("sweep.betas")?,
            km_grid: Grid {
                min: self.f64("sweep.km_min")?,
                max: self.f64("sweep.km_max")?,
                step: self.f64("sweep.km_step")?,
            },
            attack: self.attack_kind()?,
        })
    }

    pub fn demo(&self) -> Result<DemoConfig, CliError> {
        let f_theta_dt = self.f64_or("demo.f_theta_dt", 0.01)?;
        Ok(DemoConfig {
            channel: self.channel()?,
            reference_variance: self.f64("protocol.v_r")?,
            reference_mode: self.reference_mode()?,
            drift: PhaseProcess::new(f_theta_dt, 1.0)?,
            seed: self.u64_or("demo.seed", 0)?,
        })
    }

    pub fn demo_mode(&self) -> Result<&str, CliError> {
        match self.require("demo.mode")? {
            mode @ ("constant" | "constellation") => Ok(mode),
            text => Err(bad_value("demo.mode", text, "constant or constellation")),
        }
    }

    pub fn demo_signal(&self) -> Result<(f64, f64), CliError> {
        Ok((self.f64("demo.signal_q")?, self.f64("demo.signal_p")?))
    }

    pub fn constellation(&self) -> Result<ConstellationSpec, CliError> {
        Ok(ConstellationSpec {
            grid: Grid {
                min: self.f64("demo.grid_min")?,
                max: self.f64("demo.grid_max")?,
                step: self.f64("demo.grid_step")?,
            },
            pulses_per_tile: self.usize("demo.pulses_per_tile")?,
        })
    }

    pub fn demo_rounds(&self) -> Result<usize, CliError> {
        self.usize("demo.n_rounds")
    }

    pub fn calib_truth(&self) -> Result<Vec<f64>, CliError> {
        self.f64_list("calib.coeffs")
    }

    pub fn calib_sweep_shape(&self) -> Result<((f64, f64), usize, f64, f64), CliError> {
        Ok((
            (self.f64("calib.v_min")?, self.f64("calib.v_max")?),
            self.usize("calib.n")?,
            self.f64("calib.amplitude")?,
            self.f64_or("calib.noise_sd", 0.0)?,
        ))
    }

    pub fn calib_drift(&self) -> Result<PhaseProcess, CliError> {
        Ok(PhaseProcess::new(
            self.f64_or("calib.f_theta_dt", 0.0)?,
            1.0,
        )?)
    }

    pub fn calib_degree(&self) -> Result<usize, CliError> {
        match self.get("calib.degree") {
            Some(text) => text
                .parse()
                .map_err(|_| bad_value("calib.degree", text, "an unsigned integer")),
            None => Ok(3),
        }
    }

    pub fn calib_seed(&self) -> Result<u64, CliError> {
        self.u64_or("calib.seed", 0)
    }
}

fn parse_f64(key: &str, text: &str) -> Result<f64, CliError> {
    text.parse().map_err(|_| bad_value(key, text, "a number"))
}

fn bad_value(key: &str, text: &str, expected: &str) -> CliError {
    CliError::Config(format!(
        "config key `{key}`: cannot parse `{text}`, expected {expected}"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_comments_and_blanks() {
        let cfg = RunConfig::parse(
            "# comment\nchannel.t = 1.0\nchannel.eta = 0.8 # trailing\n\nchannel.epsilon=0.01\nchannel.v_el = 0.01\n",
        )
        .unwrap();
        let ch = cfg.channel().unwrap();
        assert_eq!(ch.detector_efficiency, 0.8);
    }

    #[test]
    fn rejects_unknown_keys_with_line_number() {
        let err = RunConfig::parse("channel.t = 1.0\nchannel.bogus = 2\n").unwrap_err();
        match err {
            CliError::Config(msg) => {
                assert!(msg.contains("line 2"), "{msg}");
                assert!(msg.contains("channel.bogus"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_malformed_lines() {
        assert!(RunConfig::parse("channel.t = 1\nchannel.t = 0.5\n").is_err());
        assert!(RunConfig::parse("channel.t 1.0\n").is_err());
    }

    #[test]
    fn physical_invariants_are_rechecked() {
        let cfg = RunConfig::parse(
            "channel.t = 0.0\nchannel.eta = 1\nchannel.epsilon = 0\nchannel.v_el = 0\n",
        )
        .unwrap();
        assert!(cfg.channel().is_err());
    }
}
