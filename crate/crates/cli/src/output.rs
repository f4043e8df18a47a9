//! Output formatting: header blocks, key-rate reports, sweep CSV tables,
//! covariance displays and calibration curves. Floats are written in Rust's
//! shortest round-trippable form, so identical runs produce identical bytes.

use std::fmt::Write as _;

use srcvqkd::gaussian::CovMat4;
use srcvqkd::keyrate::sweep::SweepTable;
use srcvqkd::keyrate::KeyRateReport;

use crate::config::RunConfig;

const UNITS_NOTE: &str =
    "#units variances in shot-noise units (vacuum = 1); quadrature values in sqrt(N0); informations in bits";

/// Standard header: format tag, tool version, units note and the full
/// resolved configuration.
pub fn header(tag: &str, config: &RunConfig) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "#srcvqkd-{tag} v1");
    let _ = writeln!(text, "#tool srcvqkd {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "{UNITS_NOTE}");
    for line in config.echo_lines() {
        let _ = writeln!(text, "#config {line}");
    }
    text
}

pub fn keyrate_report(report: &KeyRateReport, config: &RunConfig) -> String {
    let mut text = header("keyrate", config);
    let _ = writeln!(text, "xi_mode = {}", report.xi_mode);
    let _ = writeln!(text, "xi_used = {}", report.xi_used);
    let _ = writeln!(text, "i_ab_bits_per_round = {}", report.i_ab);
    let _ = writeln!(text, "i_eb_bits_per_round = {}", report.i_eb);
    let _ = writeln!(text, "chi_be_bits_per_round = {}", report.chi_be);
    let _ = writeln!(text, "lambda_1 = {}", report.lambdas.0);
    let _ = writeln!(text, "lambda_2 = {}", report.lambdas.1);
    let _ = writeln!(text, "lambda_3 = {}", report.lambdas.2);
    for (label, figures) in [("k_ind", &report.k_ind), ("k_col", &report.k_col)] {
        let _ = writeln!(text, "{label}_bits_per_round = {}", figures.bits_per_round);
        let _ = writeln!(text, "{label}_bits_per_pulse = {}", figures.bits_per_pulse);
        let _ = writeln!(
            text,
            "{label}_bits_per_second = {}",
            figures.bits_per_second
        );
        let _ = writeln!(text, "{label}_no_secure_key = {}", figures.no_secure_key);
    }
    text
}

pub fn sweep_csv(table: &SweepTable, config: &RunConfig) -> String {
    let mut text = header("sweep-csv", config);
    let _ = write!(text, "{}", table.x_label);
    for column in &table.columns {
        let _ = write!(text, ",{}", column.label);
    }
    let _ = writeln!(text);
    for (row, &x) in table.x.iter().enumerate() {
        let _ = write!(text, "{x}");
        for column in &table.columns {
            let _ = write!(text, ",{}", column.values[row]);
        }
        let _ = writeln!(text);
    }
    text
}

/// Four matrix rows prefixed with a label, aligned for reading side by side.
pub fn matrix_block(label: &str, matrix: &CovMat4) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "# {label}");
    for i in 0..4 {
        let _ = write!(text, "#   ");
        for j in 0..4 {
            let _ = write!(text, "{:>12.6}", matrix.entry(i, j));
        }
        let _ = writeln!(text);
    }
    text
}

pub fn z_score_block(empirical: &CovMat4, theory: &CovMat4, n: usize) -> (String, f64) {
    let mut text = String::new();
    let _ = writeln!(text, "# per-entry z-scores (empirical vs theory, N = {n})");
    let mut z_max = 0.0_f64;
    for i in 0..4 {
        let _ = write!(text, "#   ");
        for j in 0..4 {
            let t = theory.entry(i, j);
            let se = if i == j {
                t * (2.0 / n as f64).sqrt()
            } else {
                ((theory.entry(i, i) * theory.entry(j, j) + t * t) / n as f64).sqrt()
            };
            let diff = empirical.entry(i, j) - t;
            // Degenerate blocks (e.g. an unmodulated session) have zero
            // standard error; an exact match there scores zero.
            let z = if se > 0.0 {
                diff / se
            } else if diff.abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            z_max = z_max.max(z.abs());
            let _ = write!(text, "{z:>9.2}");
        }
        let _ = writeln!(text);
    }
    let _ = writeln!(text, "# z_max = {z_max:.3}");
    (text, z_max)
}
