//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use srcvqkd::calibration::{
    fit_curve, recover_phase, synthesize_sweep, CalibrationCurve, Iq, SweepSample,
};
use srcvqkd::gaussian::{phase_estimator_variance, pm_covariance};
use srcvqkd::keyrate::sweep::{distance_sweep, sweep_transmittance};
use srcvqkd::keyrate::{key_rate_report, KeyRateInputs};
use srcvqkd::sim::demo::{constant_signal_demo, constellation_demo};
use srcvqkd::sim::record::save_session;
use srcvqkd::sim::run_session;

use crate::config::RunConfig;
use crate::output;
use crate::load_config;
use crate::{CalibrateArgs, CliError, DemoArgs, KeyrateArgs, SimulateArgs, SweepArgs};

/// Writes `text` to `out` (printing the `#` summary lines to stdout), or
/// prints the whole text when no output path is given.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| {
                CliError::Config(format!("cannot write {}: {e}", path.display()))
            })?;
            for line in text.lines().filter(|l| l.starts_with("# ")) {
                println!("{line}");
            }
            println!("# written to {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn keyrate(args: &KeyrateArgs) -> Result<(), CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(beta) = args.beta {
        config.set("protocol.beta", beta.to_string());
    }
    if let Some(va) = args.va {
        config.set("protocol.v_a", va.to_string());
    }
    if let Some(mode) = &args.xi_mode {
        config.set("keyrate.xi_mode", mode.clone());
    }
    if let Some(xi) = args.xi {
        config.set("keyrate.xi", xi.to_string());
    }

    let protocol = config.protocol()?;
    let channel = config.channel()?;
    let (mode, xi) = config.xi_mode()?;
    let inputs = KeyRateInputs::from_params(&protocol, &channel, xi)?;
    let report = key_rate_report(&inputs, mode)?;

    let mut text = output::keyrate_report(&report, &config);
    if report.k_ind.no_secure_key || report.k_col.no_secure_key {
        let _ = writeln!(text, "# no secure key at this operating point");
    }
    let _ = writeln!(
        text,
        "# k_ind = {} bits/round, k_col = {} bits/round",
        report.k_ind.bits_per_round, report.k_col.bits_per_round
    );
    emit(&args.out, &text)
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let table = match config.sweep_kind()? {
        "transmittance" => sweep_transmittance(&config.transmittance_sweep()?)?,
        "distance" => distance_sweep(&config.distance_sweep()?)?,
        _ => unreachable!("sweep_kind validates"),
    };
    let text = output::sweep_csv(&table, &config);
    emit(&args.out, &text)
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.set("session.seed", seed.to_string());
    }
    if let Some(va) = args.va {
        config.set("protocol.v_a", va.to_string());
    }
    if let Some(rounds) = args.rounds {
        config.set("session.n_rounds", rounds.to_string());
    }

    let session = config.session()?;
    let record = run_session(&session)?;
    if record.summary.regime_violation {
        eprintln!(
            "warning: f_theta * dt_round = {} violates the slow-drift regime; results are flagged",
            session.protocol.phase_noise_bandwidth * session.protocol.dt_round()
        );
    }

    let mut text = output::header("session-summary", &config);
    let _ = writeln!(
        text,
        "# rounds = {}, param_est = {}, discards = {}, regime_violation = {}",
        record.rounds.len(),
        session.n_param_est,
        record.summary.discards,
        record.summary.regime_violation
    );
    if let Some(stats) = record.summary.phase_stats {
        let _ = writeln!(
            text,
            "# phase stats: cos_mean = {:.6}, xi = {:.3e}, var_thetahat = {:.3e}",
            stats.cos_mean, stats.xi, stats.estimator_variance
        );
    }

    if let Some(estimate) = record.summary.covariance {
        let v_th = phase_estimator_variance(
            &session.channel,
            session.protocol.reference_variance,
            session.protocol.reference_mode,
        )?;
        let theory = pm_covariance(&session.protocol, &session.channel, (1.0 - v_th).sqrt())?;
        text.push_str(&output::matrix_block(
            &format!("empirical covariance ({} tomography rounds)", estimate.n_used),
            &estimate.matrix,
        ));
        if estimate.rank_deficient {
            let _ = writeln!(text, "# warning: empirical covariance is rank deficient");
        }
        text.push_str(&output::matrix_block(
            "theoretical pm covariance (analytic cos_mean)",
            &theory,
        ));
        let (z_text, _) = output::z_score_block(&estimate.matrix, &theory, estimate.n_used);
        text.push_str(&z_text);
    }

    if let Some(path) = &args.out {
        save_session(&record, path)?;
        let _ = writeln!(text, "# record written to {}", path.display());
    }
    print!("{text}");
    Ok(())
}

pub fn phase_demo(args: &DemoArgs) -> Result<(), CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.set("demo.seed", seed.to_string());
    }
    let demo_cfg = config.demo()?;
    if !demo_cfg.drift.regime_ok() {
        eprintln!("warning: demo drift violates the slow-drift regime; results are flagged");
    }

    let text = match config.demo_mode()? {
        "constant" => {
            let report =
                constant_signal_demo(config.demo_signal()?, config.demo_rounds()?, &demo_cfg)?;
            let mut text = output::header("phase-demo", &config);
            let _ = writeln!(
                text,
                "# recovered mean = ({}, {}), sent signal scaled by sqrt(T_eff) = ({}, {})",
                report.mean.0,
                report.mean.1,
                demo_cfg.channel.effective_transmittance().sqrt() * report.signal.0,
                demo_cfg.channel.effective_transmittance().sqrt() * report.signal.1
            );
            let _ = writeln!(
                text,
                "# variance = {} (per-quadrature: {} / {}), expected = {}",
                report.variance, report.variance_q, report.variance_p, report.expected_variance
            );
            let _ = writeln!(
                text,
                "# rounds = {}, discards = {}, regime_violation = {}",
                report.n_rounds, report.discards, report.regime_violation
            );
            let _ = writeln!(text, "recon_q,recon_p");
            for (q, p) in &report.reconstructed {
                let _ = writeln!(text, "{q},{p}");
            }
            text
        }
        "constellation" => {
            let report = constellation_demo(&config.constellation()?, &demo_cfg)?;
            let mut text = output::header("phase-demo", &config);
            let _ = writeln!(
                text,
                "# tiles = {}, mean reconstructed variance = {}, expected = {}",
                report.tiles.len(),
                report.mean_variance,
                report.expected_variance
            );
            let _ = writeln!(
                text,
                "# discards = {}, regime_violation = {}",
                report.discards, report.regime_violation
            );
            let _ = writeln!(
                text,
                "center_q,center_p,mean_q,mean_p,var_q,var_p,n_points"
            );
            for tile in &report.tiles {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{},{}",
                    tile.center.0,
                    tile.center.1,
                    tile.mean.0,
                    tile.mean.1,
                    tile.variance_q,
                    tile.variance_p,
                    tile.n_points
                );
            }
            text
        }
        _ => unreachable!("demo_mode validates"),
    };
    emit(&args.out, &text)
}

const SWEEP_CSV_HEADER: &str = "voltage,ref_i,ref_q,mod_i,mod_q";

fn sweep_samples_csv(samples: &[SweepSample], config: &RunConfig) -> String {
    let mut text = output::header("calibration-sweep", config);
    let _ = writeln!(text, "{SWEEP_CSV_HEADER}");
    for s in samples {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            s.voltage, s.reference.i, s.reference.q, s.modulated.i, s.modulated.q
        );
    }
    text
}

fn load_sweep_csv(path: &Path) -> Result<Vec<SweepSample>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut samples = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != SWEEP_CSV_HEADER {
                return Err(CliError::Config(format!(
                    "{}:{line_no}: expected header `{SWEEP_CSV_HEADER}`, found `{line}`",
                    path.display()
                )));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::Config(format!(
                "{}:{line_no}: expected 5 columns, found {}",
                path.display(),
                fields.len()
            )));
        }
        let parse = |what: &str, text: &str| -> Result<f64, CliError> {
            text.trim().parse().map_err(|_| {
                CliError::Config(format!(
                    "{}:{line_no}: cannot parse {what} from `{text}`",
                    path.display()
                ))
            })
        };
        samples.push(SweepSample {
            voltage: parse("voltage", fields[0])?,
            reference: Iq {
                i: parse("ref_i", fields[1])?,
                q: parse("ref_q", fields[2])?,
            },
            modulated: Iq {
                i: parse("mod_i", fields[3])?,
                q: parse("mod_q", fields[4])?,
            },
        });
    }
    if !saw_header {
        return Err(CliError::Config(format!(
            "{}: empty file, expected header `{SWEEP_CSV_HEADER}`",
            path.display()
        )));
    }
    Ok(samples)
}

fn curve_text(
    curve: &CalibrationCurve,
    discarded: usize,
    truth: Option<&[f64]>,
    config: &RunConfig,
) -> String {
    let mut text = output::header("calibration", config);
    let _ = writeln!(text, "degree = {}", curve.degree);
    for (k, c) in curve.coefficients.iter().enumerate() {
        let _ = writeln!(text, "coeff_{k} = {c}");
    }
    let _ = writeln!(text, "residual_rms_rad = {}", curve.residual_rms);
    let _ = writeln!(text, "domain_v_min = {}", curve.domain.0);
    let _ = writeln!(text, "domain_v_max = {}", curve.domain.1);
    let _ = writeln!(text, "n_samples = {}", curve.n_samples);
    let _ = writeln!(text, "discarded = {discarded}");
    if let Some(truth) = truth {
        for (k, c) in truth.iter().enumerate() {
            let _ = writeln!(text, "true_coeff_{k} = {c}");
        }
        let worst = curve
            .coefficients
            .iter()
            .zip(truth.iter())
            .map(|(got, want)| (got - want).abs() / want.abs().max(1e-12))
            .fold(0.0_f64, f64::max);
        let _ = writeln!(text, "# max coefficient relative error vs truth = {worst:.5}");
    }
    let _ = writeln!(
        text,
        "# fit residual rms = {} rad over {} samples",
        curve.residual_rms, curve.n_samples
    );
    text
}

pub fn calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let (samples, truth, config) = match (&args.input, &args.config) {
        (Some(path), maybe_config) => {
            let config = match maybe_config {
                Some(spec) => load_config(spec)?,
                None => RunConfig::default(),
            };
            (load_sweep_csv(path)?, None, config)
        }
        (None, Some(spec)) => {
            let mut config = load_config(spec)?;
            if let Some(seed) = args.seed {
                config.set("calib.seed", seed.to_string());
            }
            let truth = config.calib_truth()?;
            let (v_range, n, amplitude, noise_sd) = config.calib_sweep_shape()?;
            let drift = config.calib_drift()?;
            let samples = synthesize_sweep(
                &truth,
                &drift,
                amplitude,
                noise_sd,
                v_range,
                n,
                config.calib_seed()?,
            )?;
            (samples, Some(truth), config)
        }
        (None, None) => {
            return Err(CliError::Config(
                "calibrate needs either --config (synthetic sweep) or --input <csv>".into(),
            ))
        }
    };

    if let Some(path) = &args.sweep_out {
        std::fs::write(path, sweep_samples_csv(&samples, &config))
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    }

    let recovered = recover_phase(&samples)?;
    let degree = match args.degree {
        Some(d) => d,
        None => config.calib_degree()?,
    };
    let curve = fit_curve(&recovered.voltages, &recovered.phases, degree)?;
    let text = curve_text(&curve, recovered.discarded, truth.as_deref(), &config);
    emit(&args.out, &text)
}
