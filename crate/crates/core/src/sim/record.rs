//! Line-delimited text serialization of session records.
//!
//! Layout: a header block of `#`-prefixed lines (format tag, units note,
//! one `#config key=value` line per configuration field, a `#columns` line),
//! then one round per line. Floats are written in Rust's shortest
//! round-trippable form, so write -> read -> write is byte-identical.
//! The summary block is not stored; it is recomputed from the rounds on
//! load.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gaussian::{ChannelParams, ProtocolParams, ReferenceMode};
use crate::sim::{summarize, Basis, Compensation, Round, RoundKind, SessionConfig, SessionRecord};

pub const FORMAT_TAG: &str = "#srcvqkd-session v1";

const COLUMNS: &str = "kind basis q_a p_a theta theta_hat y_q y_p acomp_q acomp_p";

pub fn write_session<W: Write>(record: &SessionRecord, w: &mut W) -> Result<()> {
    let cfg = &record.config;
    writeln!(w, "{FORMAT_TAG}")?;
    writeln!(
        w,
        "#units quadrature values in sqrt(N0); angles in rad; variances in shot-noise units (vacuum = 1)"
    )?;
    writeln!(
        w,
        "#note y_q and y_p are both simulated each round; in a single-basis round only the `basis` one is physically observable"
    )?;
    for (key, value) in config_fields(cfg) {
        writeln!(w, "#config {key}={value}")?;
    }
    writeln!(w, "#columns {COLUMNS}")?;
    for round in &record.rounds {
        let kind = match round.kind {
            RoundKind::Key => "key",
            RoundKind::ParamEst => "est",
        };
        let basis = match round.basis {
            Some(Basis::Q) => "Q",
            Some(Basis::P) => "P",
            None => "QP",
        };
        let (theta_hat, aq, ap) = match round.compensation {
            Some(c) => (c.theta_hat.to_string(), c.q.to_string(), c.p.to_string()),
            None => ("-".to_string(), "-".to_string(), "-".to_string()),
        };
        writeln!(
            w,
            "{kind} {basis} {} {} {} {theta_hat} {} {} {aq} {ap}",
            round.q_a, round.p_a, round.theta, round.y_q, round.y_p
        )?;
    }
    Ok(())
}

pub fn session_to_string(record: &SessionRecord) -> String {
    let mut buf = Vec::new();
    write_session(record, &mut buf).expect("in-memory write cannot fail");
    String::from_utf8(buf).expect("record text is ASCII")
}

pub fn save_session(record: &SessionRecord, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_session(record, &mut w)?;
    w.flush()?;
    Ok(())
}

fn config_fields(cfg: &SessionConfig) -> Vec<(&'static str, String)> {
    let ch = &cfg.channel;
    let p = &cfg.protocol;
    vec![
        ("channel.t", ch.transmittance.to_string()),
        ("channel.eta", ch.detector_efficiency.to_string()),
        ("channel.epsilon", ch.excess_noise.to_string()),
        ("channel.v_el", ch.electronic_noise.to_string()),
        ("protocol.v_a", p.modulation_variance.to_string()),
        ("protocol.v_r", p.reference_variance.to_string()),
        (
            "protocol.delta_r",
            (p.reference_mode.vacuum_penalty() as u8).to_string(),
        ),
        ("protocol.beta", p.reconciliation_efficiency.to_string()),
        ("protocol.pulse_rate", p.pulse_rate.to_string()),
        ("protocol.f_theta", p.phase_noise_bandwidth.to_string()),
        ("session.n_rounds", cfg.n_rounds.to_string()),
        ("session.n_param_est", cfg.n_param_est.to_string()),
        ("session.tomography", cfg.tomography.to_string()),
        ("session.seed", cfg.seed.to_string()),
    ]
}

pub fn read_session<R: BufRead>(reader: R) -> Result<SessionRecord> {
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| Error::RecordFormat {
        line: 1,
        message: "empty file".into(),
    })?;
    if first? != FORMAT_TAG {
        return Err(Error::RecordFormat {
            line: 1,
            message: format!("expected format tag `{FORMAT_TAG}`"),
        });
    }

    let mut config_map: BTreeMap<String, String> = BTreeMap::new();
    let mut rounds = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if let Some(rest) = line.strip_prefix("#config ") {
            let (key, value) = rest.split_once('=').ok_or_else(|| Error::RecordFormat {
                line: line_no,
                message: "malformed #config line, expected key=value".into(),
            })?;
            config_map.insert(key.trim().to_string(), value.trim().to_string());
        } else if line.starts_with('#') || line.is_empty() {
            continue;
        } else {
            rounds.push(parse_round(&line, line_no)?);
        }
    }

    let config = config_from_map(config_map)?;
    if rounds.len() != config.n_rounds {
        return Err(Error::RecordFormat {
            line: 1,
            message: format!(
                "round count {} does not match session.n_rounds {}",
                rounds.len(),
                config.n_rounds
            ),
        });
    }
    let summary = summarize(&config, &rounds)?;
    Ok(SessionRecord {
        config,
        rounds,
        summary,
    })
}

pub fn session_from_str(text: &str) -> Result<SessionRecord> {
    read_session(io::Cursor::new(text))
}

pub fn load_session(path: &Path) -> Result<SessionRecord> {
    read_session(BufReader::new(File::open(path)?))
}

fn parse_round(line: &str, line_no: usize) -> Result<Round> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 10 {
        return Err(Error::RecordFormat {
            line: line_no,
            message: format!("expected 10 columns, found {}", fields.len()),
        });
    }
    let kind = match fields[0] {
        "key" => RoundKind::Key,
        "est" => RoundKind::ParamEst,
        other => {
            return Err(Error::RecordFormat {
                line: line_no,
                message: format!("unknown round kind `{other}`"),
            })
        }
    };
    let basis = match fields[1] {
        "Q" => Some(Basis::Q),
        "P" => Some(Basis::P),
        "QP" => None,
        other => {
            return Err(Error::RecordFormat {
                line: line_no,
                message: format!("unknown basis `{other}`"),
            })
        }
    };
    let num = |text: &str, what: &str| -> Result<f64> {
        text.parse::<f64>().map_err(|_| Error::RecordFormat {
            line: line_no,
            message: format!("cannot parse {what} from `{text}`"),
        })
    };
    let q_a = num(fields[2], "q_a")?;
    let p_a = num(fields[3], "p_a")?;
    let theta = num(fields[4], "theta")?;
    let y_q = num(fields[6], "y_q")?;
    let y_p = num(fields[7], "y_p")?;
    let compensation = if fields[5] == "-" {
        if fields[8] != "-" || fields[9] != "-" {
            return Err(Error::RecordFormat {
                line: line_no,
                message: "discarded round must have `-` in all compensation columns".into(),
            });
        }
        None
    } else {
        Some(Compensation {
            theta_hat: num(fields[5], "theta_hat")?,
            q: num(fields[8], "acomp_q")?,
            p: num(fields[9], "acomp_p")?,
        })
    };
    Ok(Round {
        kind,
        basis,
        q_a,
        p_a,
        theta,
        y_q,
        y_p,
        compensation,
    })
}

fn config_from_map(mut map: BTreeMap<String, String>) -> Result<SessionConfig> {
    let mut take = |key: &str| -> Result<String> {
        map.remove(key).ok_or_else(|| Error::RecordFormat {
            line: 1,
            message: format!("missing config key `{key}`"),
        })
    };
    let parse_f64 = |key: &str, text: String| -> Result<f64> {
        text.parse().map_err(|_| Error::RecordFormat {
            line: 1,
            message: format!("cannot parse config `{key}` from `{text}`"),
        })
    };
    let parse_usize = |key: &str, text: String| -> Result<usize> {
        text.parse().map_err(|_| Error::RecordFormat {
            line: 1,
            message: format!("cannot parse config `{key}` from `{text}`"),
        })
    };

    let channel = ChannelParams::new(
        parse_f64("channel.t", take("channel.t")?)?,
        parse_f64("channel.eta", take("channel.eta")?)?,
        parse_f64("channel.epsilon", take("channel.epsilon")?)?,
        parse_f64("channel.v_el", take("channel.v_el")?)?,
    )?;
    let delta_text = take("protocol.delta_r")?;
    let reference_mode = match delta_text.as_str() {
        "0" => ReferenceMode::TwinPulse,
        "1" => ReferenceMode::SinglePulse,
        other => {
            return Err(Error::RecordFormat {
                line: 1,
                message: format!("config protocol.delta_r must be 0 or 1, found `{other}`"),
            })
        }
    };
    let protocol = ProtocolParams::new(
        parse_f64("protocol.v_a", take("protocol.v_a")?)?,
        parse_f64("protocol.v_r", take("protocol.v_r")?)?,
        reference_mode,
        parse_f64("protocol.beta", take("protocol.beta")?)?,
        parse_f64("protocol.pulse_rate", take("protocol.pulse_rate")?)?,
        parse_f64("protocol.f_theta", take("protocol.f_theta")?)?,
    )?;
    let n_rounds = parse_usize("session.n_rounds", take("session.n_rounds")?)?;
    let n_param_est = parse_usize("session.n_param_est", take("session.n_param_est")?)?;
    let tomography_text = take("session.tomography")?;
    let tomography = match tomography_text.as_str() {
        "true" => true,
        "false" => false,
        other => {
            return Err(Error::RecordFormat {
                line: 1,
                message: format!("config session.tomography must be true/false, found `{other}`"),
            })
        }
    };
    let seed_text = take("session.seed")?;
    let seed: u64 = seed_text.parse().map_err(|_| Error::RecordFormat {
        line: 1,
        message: format!("cannot parse config `session.seed` from `{seed_text}`"),
    })?;

    if let Some(unknown) = map.keys().next() {
        return Err(Error::RecordFormat {
            line: 1,
            message: format!("unknown config key `{unknown}`"),
        });
    }

    let config = SessionConfig {
        protocol,
        channel,
        n_rounds,
        n_param_est,
        tomography,
        seed,
    };
    config.validate()?;
    Ok(config)
}
