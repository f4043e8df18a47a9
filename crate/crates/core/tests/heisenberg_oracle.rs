//! Independent oracle for the rotation-averaged covariance matrix: apply
//! the frame rotations to the quadrature operators, evaluate the second
//! moments on the unrotated state, and average numerically over a uniform
//! theta and a discrete phase-error distribution. The closed-form
//! `averaged_covariance` must reproduce the integral to 1e-6 relative.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use srcvqkd::gaussian::{
    averaged_covariance, epr_covariance, heterodyne_split_moments, ChannelParams, PhaseStats,
};

/// Symplectic rotation of the Heisenberg-picture operators: Alice's mode by
/// theta_hat, Bob's by -theta (his quadratures counter-rotate).
fn heisenberg_rotation(theta_hat: f64, theta: f64) -> Matrix4<f64> {
    let (sh, ch) = theta_hat.sin_cos();
    let (st, ct) = theta.sin_cos();
    Matrix4::new(
        ch, -sh, 0.0, 0.0, //
        sh, ch, 0.0, 0.0, //
        0.0, 0.0, ct, st, //
        0.0, 0.0, -st, ct,
    )
}

/// Numerically averaged covariance: trapezoid-free midpoint rule over theta
/// (exact for the trigonometric integrands) and a weighted sum over the
/// discrete phase-error distribution.
fn numeric_average(gamma: &Matrix4<f64>, phi_dist: &[(f64, f64)], n_theta: usize) -> Matrix4<f64> {
    let mut acc = Matrix4::zeros();
    let total_weight: f64 = phi_dist.iter().map(|&(_, w)| w).sum();
    for &(phi, w) in phi_dist {
        for k in 0..n_theta {
            let theta = -PI + (k as f64 + 0.5) * 2.0 * PI / n_theta as f64;
            let u = heisenberg_rotation(theta + phi, theta);
            acc += (w / total_weight / n_theta as f64) * u * gamma * u.transpose();
        }
    }
    acc
}

fn to_matrix4(m: &srcvqkd::gaussian::CovMat4) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m.entry(i, j))
}

fn stats_of(phi_dist: &[(f64, f64)]) -> PhaseStats {
    let total: f64 = phi_dist.iter().map(|&(_, w)| w).sum();
    let cos_mean = phi_dist.iter().map(|&(p, w)| w * p.cos()).sum::<f64>() / total;
    let sin_mean = phi_dist.iter().map(|&(p, w)| w * p.sin()).sum::<f64>() / total;
    let mean = phi_dist.iter().map(|&(p, w)| w * p).sum::<f64>() / total;
    let var = phi_dist
        .iter()
        .map(|&(p, w)| w * (p - mean) * (p - mean))
        .sum::<f64>()
        / total;
    PhaseStats {
        cos_mean,
        sin_mean,
        xi: 1.0 - cos_mean * cos_mean,
        estimator_variance: var,
    }
}

fn assert_close(analytic: &Matrix4<f64>, numeric: &Matrix4<f64>, label: &str) {
    for i in 0..4 {
        for j in 0..4 {
            let a = analytic[(i, j)];
            let b = numeric[(i, j)];
            let tol = 1e-6 * a.abs().max(1.0);
            assert!(
                (a - b).abs() <= tol,
                "{label}: entry ({i},{j}) analytic {a} vs numeric {b}"
            );
        }
    }
}

fn check_distribution(phi_dist: &[(f64, f64)], label: &str) {
    let ch = ChannelParams::new(0.9, 0.75, 0.02, 0.01).unwrap();
    let gamma = epr_covariance(20.0, &ch).unwrap();
    let stats = stats_of(phi_dist);
    let analytic = averaged_covariance(&gamma, &stats).unwrap();
    let numeric = numeric_average(&to_matrix4(&gamma), phi_dist, 720);
    assert_close(&to_matrix4(&analytic), &numeric, label);
}

#[test]
fn symmetric_three_point_distribution() {
    check_distribution(
        &[(-0.4, 0.25), (0.0, 0.5), (0.4, 0.25)],
        "three-point symmetric",
    );
}

#[test]
fn asymmetric_single_point_distribution() {
    // A one-sided error exercises the sin_mean entries of the averaged block.
    check_distribution(&[(0.3, 1.0)], "single point");
}

#[test]
fn wide_discrete_distribution() {
    let dist: Vec<(f64, f64)> = (-6..=6)
        .map(|k| {
            let phi = k as f64 * 0.15;
            (phi, (-0.5 * (phi / 0.3) * (phi / 0.3)).exp())
        })
        .collect();
    check_distribution(&dist, "discrete bell");
}

#[test]
fn theta_average_leaves_diagonal_blocks_unchanged() {
    let ch = ChannelParams::new(1.0, 0.8, 0.01, 0.01).unwrap();
    let gamma = epr_covariance(35.0, &ch).unwrap();
    let numeric = numeric_average(&to_matrix4(&gamma), &[(0.1, 1.0)], 720);
    assert!((numeric[(0, 0)] - 35.0).abs() < 1e-9);
    assert!((numeric[(1, 1)] - 35.0).abs() < 1e-9);
    assert!((numeric[(2, 2)] - gamma.entry(2, 2)).abs() < 1e-9);
    assert!((numeric[(3, 3)] - gamma.entry(3, 3)).abs() < 1e-9);
}

#[test]
fn heterodyne_moments_match_the_integrated_matrix() {
    let ch = ChannelParams::new(1.0, 0.8, 0.01, 0.01).unwrap();
    let gamma = epr_covariance(35.0, &ch).unwrap();
    let dist = [(-0.05, 0.3), (0.0, 0.4), (0.05, 0.3)];
    let stats = stats_of(&dist);
    let averaged = averaged_covariance(&gamma, &stats).unwrap();
    let numeric = numeric_average(&to_matrix4(&gamma), &dist, 720);
    let (var_a, cross) = heterodyne_split_moments(&averaged);
    assert!((var_a - (numeric[(0, 0)] + 1.0) / 2.0).abs() < 1e-9);
    assert!((cross - numeric[(0, 2)] / 2.0_f64.sqrt()).abs() < 1e-9);
}
