//! Closed-form duration formulas, the sequence-duration comparison table,
//! and the three comparison curves as a CSV sweep over `kappa = theta/2pi`.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::{Error, Result};

/// Minimum duration for the trilinear propagator at angle `theta`:
/// `sqrt(kappa (4 - kappa)) / (2 |J|)` seconds, `kappa = theta/2pi`.
///
/// Evaluated through two algebraically identical forms that are
/// cross-checked at 1e-12 relative.
pub fn t_star(theta: f64, j: f64) -> Result<f64> {
    if j == 0.0 {
        return Err(Error::NonPositiveCoupling { j });
    }
    if !(0.0..=2.0 * TAU).contains(&theta) {
        return Err(Error::AngleOutOfRange { theta });
    }
    let kappa = (theta / TAU).abs();
    let via_kappa = (kappa * (4.0 - kappa)).sqrt() / (2.0 * j.abs());
    let via_theta = (TAU * theta - (theta / 2.0).powi(2)).sqrt() / (TAU * j.abs());
    let scale = via_kappa.abs().max(f64::MIN_POSITIVE);
    assert!(
        (via_kappa - via_theta).abs() <= 1e-12 * scale,
        "t* forms disagree: {via_kappa} vs {via_theta}"
    );
    Ok(via_kappa)
}

/// Duration of the decoupling-based route: `(2 + kappa)/(2J)`.
pub fn conventional_time(kappa: f64, j: f64) -> f64 {
    (2.0 + kappa) / (2.0 * j)
}

/// Duration of the improved (non-decoupled) route: `(1 + kappa)/(2J)`.
pub fn improved_time(kappa: f64, j: f64) -> f64 {
    (1.0 + kappa) / (2.0 * j)
}

/// Duration of the geodesic route: `sqrt(kappa (4 - kappa))/(2J)`.
pub fn optimal_time(kappa: f64, j: f64) -> f64 {
    (kappa.abs() * (4.0 - kappa.abs())).sqrt() / (2.0 * j.abs())
}

/// One comparison row: state-of-the-art duration versus geodesic duration.
#[derive(Debug, Clone, Serialize)]
pub struct DurationRow {
    pub label: String,
    pub tau_conventional_s: f64,
    pub tau_geodesic_s: f64,
    pub ratio: f64,
}

impl DurationRow {
    fn new(label: &str, conventional: f64, geodesic: f64) -> Self {
        DurationRow {
            label: label.to_string(),
            tau_conventional_s: conventional,
            tau_geodesic_s: geodesic,
            ratio: geodesic / conventional,
        }
    }
}

/// The four comparison rows: the generic trilinear propagator at the
/// supplied `kappa`, the `theta = 2 pi` trilinear case, the indirect swap
/// (against three direct swaps at 9/(2J)), and in-phase coherence transfer
/// (against two isotropic steps at 3/J).
pub fn duration_table(j: f64, kappa: f64) -> Result<Vec<DurationRow>> {
    if j == 0.0 {
        return Err(Error::NonPositiveCoupling { j });
    }
    if !(0.0..=2.0).contains(&kappa) {
        return Err(Error::AngleOutOfRange { theta: kappa * TAU });
    }
    let sqrt3 = 3.0_f64.sqrt();
    let j_abs = j.abs();
    Ok(vec![
        DurationRow::new(
            &format!("trilinear kappa={kappa}"),
            conventional_time(kappa, j_abs),
            optimal_time(kappa, j_abs),
        ),
        DurationRow::new(
            "trilinear theta=2pi",
            3.0 / (2.0 * j_abs),
            sqrt3 / (2.0 * j_abs),
        ),
        DurationRow::new(
            "swap(1,3)",
            9.0 / (2.0 * j_abs),
            3.0 * sqrt3 / (2.0 * j_abs),
        ),
        DurationRow::new(
            "transfer I1- to I3-",
            3.0 / j_abs,
            3.0 * sqrt3 / (2.0 * j_abs),
        ),
    ])
}

/// One sweep sample of the three comparison curves.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub t_conventional: f64,
    pub t_improved: f64,
    pub t_optimal: f64,
}

/// Samples the three duration curves on a uniform `kappa` grid.
pub fn sweep(kappa_min: f64, kappa_max: f64, n_points: usize, j: f64) -> Result<Vec<SweepRow>> {
    if j == 0.0 {
        return Err(Error::NonPositiveCoupling { j });
    }
    if !(0.0..=2.0).contains(&kappa_min)
        || !(0.0..=2.0).contains(&kappa_max)
        || kappa_min >= kappa_max
    {
        return Err(Error::InvalidRange(format!(
            "kappa range [{kappa_min}, {kappa_max}] must satisfy 0 <= min < max <= 2"
        )));
    }
    if n_points < 2 {
        return Err(Error::InvalidRange(format!(
            "n_points = {n_points} must be at least 2"
        )));
    }
    let step = (kappa_max - kappa_min) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|k| {
            let kappa = kappa_min + k as f64 * step;
            SweepRow {
                kappa,
                t_conventional: conventional_time(kappa, j),
                t_improved: improved_time(kappa, j),
                t_optimal: optimal_time(kappa, j),
            }
        })
        .collect())
}

/// CSV with full double precision (17 significant digits) so golden files
/// stay bit-stable. Locale-independent.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("kappa,t_conventional,t_improved,t_optimal\n");
    for row in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            row.kappa, row.t_conventional, row.t_improved, row.t_optimal
        ));
    }
    out
}
