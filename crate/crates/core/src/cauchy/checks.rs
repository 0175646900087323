//! Empirical checks of the Cauchy-transform estimates: the Pompeiu formula,
//! the three-regime bound on I(mu, nu) and Hoelder continuity of T f.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::CauchyPlan;
use crate::error::CauchyError;
use crate::field::ScalarField;
use crate::geometry::{QuadratureGrid, Region, C64};
use crate::report::{CheckRecord, VerificationReport};
use crate::spaces::{holder_norm_estimate_with, lp_norm_bounded, HolderEstimate, HolderOptions};

/// Checks phi(k) = Phi(k) + (dbar phi) T(k) on a disk, where Phi is the
/// boundary Cauchy integral evaluated by the trapezoid rule on `m` points.
#[allow(clippy::too_many_arguments)]
pub fn verify_pompeiu(
    name: &str,
    phi: impl Fn(C64) -> C64 + Sync,
    dbar_phi: impl Fn(C64) -> C64 + Sync,
    center: C64,
    radius: f64,
    k_samples: &[C64],
    nr: usize,
    ntheta: usize,
    m: usize,
    tol: f64,
) -> Result<VerificationReport, CauchyError> {
    let grid = Arc::new(QuadratureGrid::disk(center, radius, nr, ntheta)?);
    let density = ScalarField::from_fn(grid.clone(), &dbar_phi)?;
    let plan = CauchyPlan::new(&grid, k_samples.to_vec());
    let vals: Vec<[C64; 1]> = density.values.iter().map(|&v| [v]).collect();
    let area_term = plan.apply(&grid, &vals);
    let dtheta = TAU / m as f64;
    let mut worst = 0.0f64;
    for (t, &k) in k_samples.iter().enumerate() {
        let mut boundary = C64::new(0.0, 0.0);
        for j in 0..m {
            let e = C64::from_polar(1.0, j as f64 * dtheta);
            let z = center + e * radius;
            boundary += phi(z) * e * radius / (z - k);
        }
        boundary *= dtheta / TAU;
        let r = (phi(k) - boundary - area_term[t][0]).norm();
        worst = worst.max(r);
    }
    let mut report = VerificationReport::default();
    report.push(CheckRecord::upper(name, worst, 0.0, tol));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sub,
    Log,
    Super,
}

impl Regime {
    pub fn of(mu: f64, nu: f64) -> Self {
        let s = mu + nu;
        if (s - 2.0).abs() <= 1e-12 {
            Regime::Log
        } else if s < 2.0 {
            Regime::Sub
        } else {
            Regime::Super
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Result {
    /// I(mu, nu) at the given pair of points.
    pub integral: f64,
    pub regime: Regime,
    /// Slope of log I against log|k1 - k2| over the shrink sequence.
    pub exponent_fit: f64,
    /// Minus the slope of I against log|k1 - k2|: the growth coefficient c in
    /// I ~ c |ln|k1 - k2||.
    pub log_coefficient: f64,
    /// (|k1 - k2|, I) along the shrink sequence.
    pub shrink: Vec<(f64, f64)>,
}

const DMIN_FACTOR: f64 = 1.0;
const TWO_POINT_FINEST: f64 = 1.0 / 243.0;
const TWO_POINT_GRADING: f64 = 0.2;
const TWO_POINT_BOUNDARY_CELLS: f64 = 256.0;

/// Oracle for I(mu, nu) = integral over the disk of |z-k1|^{-mu} |z-k2|^{-nu}.
///
/// Midpoint rule on a ternary quadtree centred at k1 whose cells near the two
/// singular points have size proportional to their distance, down to
/// |k1 - k2|/243; the cells containing k1 or k2 are dropped. The mesh near the
/// singular points scales with |k1 - k2|, so the dropped share of the integral
/// is the same at every separation along a fixed direction.
pub fn two_point_integral(
    mu: f64,
    nu: f64,
    k1: C64,
    k2: C64,
    center: C64,
    radius: f64,
) -> Result<f64, CauchyError> {
    if !(mu > 0.0 && mu < 2.0 && nu > 0.0 && nu < 2.0) {
        return Err(CauchyError::ExponentOutOfRange { mu, nu });
    }
    let sep = (k2 - k1).norm();
    if sep == 0.0 {
        return Err(CauchyError::CoincidentPoints);
    }
    let s_min = sep * TWO_POINT_FINEST;
    let reach = (k1 - center).norm() + radius;
    let mut s_root = s_min;
    while s_root < reach {
        s_root *= 3.0;
    }
    let boundary_size = radius / TWO_POINT_BOUNDARY_CELLS;
    let diag = std::f64::consts::SQRT_2;
    let mut total = 0.0;
    let mut stack = vec![(k1, s_root)];
    while let Some((cc, s)) = stack.pop() {
        let dc = (cc - center).norm();
        if dc - s * diag > radius {
            continue;
        }
        let d = (cc - k1).norm().min((cc - k2).norm());
        let interior = dc + s * diag <= radius;
        let too_coarse = 2.0 * s * diag > TWO_POINT_GRADING * (d - s * diag).max(0.0);
        let refine = s > s_min * 1.5 && (too_coarse || (!interior && 2.0 * s > boundary_size));
        if refine {
            let t = 2.0 * s / 3.0;
            for a in [-t, 0.0, t] {
                for b in [-t, 0.0, t] {
                    stack.push((cc + C64::new(a, b), s / 3.0));
                }
            }
            continue;
        }
        let holds = |k: C64| (k.re - cc.re).abs() <= s && (k.im - cc.im).abs() <= s;
        if holds(k1) || holds(k2) || dc > radius {
            continue;
        }
        total += 4.0 * s * s * (cc - k1).norm().powf(-mu) * (cc - k2).norm().powf(-nu);
    }
    Ok(total)
}

/// Evaluates I(mu, nu) over the disk and fits its behaviour along the
/// five-point sequence k2_j = k1 + (k2 - k1) 2^{-j}.
pub fn lemma1_check(
    mu: f64,
    nu: f64,
    k1: C64,
    k2: C64,
    center: C64,
    radius: f64,
) -> Result<Lemma1Result, CauchyError> {
    let integral = two_point_integral(mu, nu, k1, k2, center, radius)?;
    let mut shrink = vec![((k2 - k1).norm(), integral)];
    for j in 1..5 {
        let kj = k1 + (k2 - k1) * 0.5f64.powi(j);
        shrink.push((
            (kj - k1).norm(),
            two_point_integral(mu, nu, k1, kj, center, radius)?,
        ));
    }
    let logs: Vec<(f64, f64)> = shrink.iter().map(|&(d, v)| (d.ln(), v.ln())).collect();
    let lin: Vec<(f64, f64)> = shrink.iter().map(|&(d, v)| (d.ln(), v)).collect();
    Ok(Lemma1Result {
        integral,
        regime: Regime::of(mu, nu),
        exponent_fit: crate::spaces::least_squares_slope(&logs),
        log_coefficient: -crate::spaces::least_squares_slope(&lin),
        shrink,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Result {
    /// sup |T f| over sampled points divided by ||f||_{L^p}.
    pub bound_ratio: f64,
    /// Empirical Hoelder exponent of T f; `None` when T f is constant on the samples.
    pub empirical_exponent: Option<f64>,
    pub gamma: f64,
    pub holder: HolderEstimate,
}

/// Samples g = T f on `region` (the disk of 1.5 times the grid radius when
/// `None`) and reports sup|g|/||f||_p and the empirical Hoelder exponent of g.
/// Increments are sampled at scales from 0.3R down to the grid spacing;
/// below the grid spacing the discrete transform carries O(h) structure from
/// the individual nodes and says nothing about T f.
pub fn theorem3_check(
    f: &ScalarField,
    p: f64,
    pair_budget: usize,
    seed: u64,
    region: Option<Region>,
) -> Result<Theorem3Result, CauchyError> {
    let mut opts = HolderOptions::new(pair_budget, seed);
    opts.delta_max = 0.3 * f.grid.radius;
    opts.delta_min = (DMIN_FACTOR * f.grid.h).min(0.5 * opts.delta_max);
    opts.levels = 8;
    theorem3_check_with(f, p, &opts, region)
}

/// [`theorem3_check`] with an explicit pair-sampling schedule.
pub fn theorem3_check_with(
    f: &ScalarField,
    p: f64,
    opts: &HolderOptions,
    region: Option<Region>,
) -> Result<Theorem3Result, CauchyError> {
    let grid = f.grid.clone();
    let gamma = (p - 2.0) / p;
    let lp = lp_norm_bounded(f, p)?;
    let region = region.unwrap_or(Region::Disk {
        center: grid.center,
        radius: 1.5 * grid.radius,
    });
    let vals: Vec<[C64; 1]> = f.values.iter().map(|&v| [v]).collect();
    let g = |k: C64| super::transform_at(&grid, &vals, k)[0];
    let holder = holder_norm_estimate_with(g, gamma, region, opts)?;
    let bound_ratio = if lp > 0.0 { holder.sup_norm / lp } else { 0.0 };
    Ok(Theorem3Result {
        bound_ratio,
        empirical_exponent: holder.empirical_exponent,
        gamma,
        holder,
    })
}
