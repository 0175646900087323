//! Solid Cauchy transform T f(k) = -(1/pi) * area integral of f(z)/(z - k)
//! over a bounded grid, plus a brute-force Cartesian oracle.
//!
//! The production scheme subtracts an interpolated value c of f at the target
//! and integrates that constant against the kernel exactly:
//!
//!   T f(k) ~ -(1/pi) [ sum_s w_s (f_s - c) / (z_s - k) + c * A(k) ],
//!
//! where A(k) is the exact area integral of 1/(z - k) and c comes from
//! bilinear interpolation in polar index space, so the result is continuous in
//! k. A node that coincides with the target contributes nothing, since
//! f_s - c vanishes there.

pub mod checks;
pub mod lattice;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CauchyError;
use crate::field::ScalarField;
use crate::geometry::{QuadratureGrid, Region, Stencil, C64};

pub use checks::{
    lemma1_check, theorem3_check, theorem3_check_with, two_point_integral, verify_pompeiu,
    Lemma1Result, Regime, Theorem3Result,
};

/// Distance below which a node counts as coinciding with a target.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CauchyScheme {
    Corrected,
    Oracle,
}

impl CauchyScheme {
    pub fn name(&self) -> &'static str {
        match self {
            CauchyScheme::Corrected => "corrected",
            CauchyScheme::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyEvaluation {
    pub targets: Vec<C64>,
    pub values: Vec<C64>,
    pub scheme: CauchyScheme,
    pub h: f64,
}

/// Target-dependent data of the corrected scheme that does not depend on the
/// density: the interpolation stencil and A(k) - sum_s w_s/(z_s - k).
#[derive(Debug, Clone)]
pub struct CauchyPlan {
    pub targets: Vec<C64>,
    stencils: Vec<Stencil>,
    correction: Vec<C64>,
}

impl CauchyPlan {
    pub fn new(grid: &QuadratureGrid, targets: Vec<C64>) -> Self {
        let (stencils, correction): (Vec<Stencil>, Vec<C64>) = targets
            .par_iter()
            .map(|&k| {
                let mut s0 = C64::new(0.0, 0.0);
                for (&z, &w) in grid.nodes.iter().zip(&grid.weights) {
                    let d = z - k;
                    if d.norm_sqr() > COINCIDENCE_TOL * COINCIDENCE_TOL {
                        s0 += w / d;
                    }
                }
                (
                    grid.interpolation_stencil(k),
                    grid.kernel_area_integral(k) - s0,
                )
            })
            .unzip();
        Self {
            targets,
            stencils,
            correction,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Transforms N densities at once. `values[s]` holds the densities at node s.
    pub fn apply<const N: usize>(
        &self,
        grid: &QuadratureGrid,
        values: &[[C64; N]],
    ) -> Vec<[C64; N]> {
        assert_eq!(values.len(), grid.len());
        let weighted: Vec<[C64; N]> = values
            .iter()
            .zip(&grid.weights)
            .map(|(v, &w)| v.map(|x| x * w))
            .collect();
        let tol2 = COINCIDENCE_TOL * COINCIDENCE_TOL;
        let ring_mean = ring_mean(grid, values);
        (0..self.targets.len())
            .into_par_iter()
            .map(|t| {
                let k = self.targets[t];
                let mut s1 = [C64::new(0.0, 0.0); N];
                for (&z, wv) in grid.nodes.iter().zip(&weighted) {
                    let d = z - k;
                    let d2 = d.norm_sqr();
                    if d2 > tol2 {
                        let inv = d.conj() / d2;
                        for (acc, x) in s1.iter_mut().zip(wv) {
                            *acc += x * inv;
                        }
                    }
                }
                let c = self.stencils[t].apply(values, &ring_mean);
                let mut out = [C64::new(0.0, 0.0); N];
                for n in 0..N {
                    out[n] = -(s1[n] + c[n] * self.correction[t]) / PI;
                }
                out
            })
            .collect()
    }
}

/// Corrected-scheme transform of N densities at a single point, in one pass
/// over the nodes.
pub fn transform_at<const N: usize>(
    grid: &QuadratureGrid,
    values: &[[C64; N]],
    k: C64,
) -> [C64; N] {
    let tol2 = COINCIDENCE_TOL * COINCIDENCE_TOL;
    let mut s0 = C64::new(0.0, 0.0);
    let mut s1 = [C64::new(0.0, 0.0); N];
    for ((&z, &w), v) in grid.nodes.iter().zip(&grid.weights).zip(values) {
        let d = z - k;
        let d2 = d.norm_sqr();
        if d2 > tol2 {
            let inv = d.conj() * (w / d2);
            s0 += inv;
            for (acc, x) in s1.iter_mut().zip(v) {
                *acc += x * inv;
            }
        }
    }
    let ring_mean = ring_mean(grid, values);
    let c = grid.interpolation_stencil(k).apply(values, &ring_mean);
    let corr = grid.kernel_area_integral(k) - s0;
    let mut out = [C64::new(0.0, 0.0); N];
    for n in 0..N {
        out[n] = -(s1[n] + c[n] * corr) / PI;
    }
    out
}

pub(crate) fn ring_mean<const N: usize>(grid: &QuadratureGrid, values: &[[C64; N]]) -> [C64; N] {
    let ring = grid.ntheta;
    let mut mean = [C64::new(0.0, 0.0); N];
    for v in &values[..ring] {
        for n in 0..N {
            mean[n] += v[n] / ring as f64;
        }
    }
    mean
}

fn check_targets(grid: &QuadratureGrid, targets: &[C64]) -> Result<(), CauchyError> {
    for &k in targets {
        if grid.nodes.iter().any(|&z| (z - k).norm() < 1e-14) {
            return Err(CauchyError::TargetOnNode { re: k.re, im: k.im });
        }
    }
    Ok(())
}

/// Corrected-scheme Cauchy transform of a sampled density at off-node targets.
pub fn cauchy_transform(f: &ScalarField, targets: &[C64]) -> Result<CauchyEvaluation, CauchyError> {
    check_targets(&f.grid, targets)?;
    let plan = CauchyPlan::new(&f.grid, targets.to_vec());
    let vals: Vec<[C64; 1]> = f.values.iter().map(|&v| [v]).collect();
    let values = plan
        .apply(&f.grid, &vals)
        .into_iter()
        .map(|v| v[0])
        .collect();
    Ok(CauchyEvaluation {
        targets: targets.to_vec(),
        values,
        scheme: CauchyScheme::Corrected,
        h: f.grid.h,
    })
}

/// Corrected-scheme transform at the grid's own nodes.
pub fn cauchy_transform_at_nodes(f: &ScalarField) -> Vec<C64> {
    let plan = CauchyPlan::new(&f.grid, f.grid.nodes.clone());
    let vals: Vec<[C64; 1]> = f.values.iter().map(|&v| [v]).collect();
    plan.apply(&f.grid, &vals)
        .into_iter()
        .map(|v| v[0])
        .collect()
}

/// Midpoint rule on an n-cells-wide Cartesian mesh over the region's bounding
/// box, keeping cells whose centre lies in the region and dropping the cell
/// that contains k. First-order accurate.
pub fn cauchy_oracle(
    f: impl Fn(C64) -> C64 + Sync,
    region: Region,
    k: C64,
    n: usize,
) -> Result<C64, CauchyError> {
    if n < 64 {
        return Err(CauchyError::OracleTooCoarse(n));
    }
    let (x0, x1, y0, y1) = region.bounding_box().map_err(CauchyError::from)?;
    let h = (x1 - x0) / n as f64;
    let ny = ((y1 - y0) / h).round().max(1.0) as usize;
    let sum: C64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = C64::new(0.0, 0.0);
            let re = x0 + (i as f64 + 0.5) * h;
            if (re - k.re).abs() <= 0.5 * h {
                // the cell containing k may be in this column
                for j in 0..ny {
                    let z = C64::new(re, y0 + (j as f64 + 0.5) * h);
                    if (z.im - k.im).abs() <= 0.5 * h || !region.contains(z) {
                        continue;
                    }
                    acc += f(z) / (z - k);
                }
            } else {
                for j in 0..ny {
                    let z = C64::new(re, y0 + (j as f64 + 0.5) * h);
                    if region.contains(z) {
                        acc += f(z) / (z - k);
                    }
                }
            }
            acc
        })
        .sum();
    Ok(-sum * h * h / PI)
}

/// Closed form of the transform of the indicator of the unit disk.
pub fn unit_disk_indicator_transform(k: C64) -> C64 {
    if k.norm() <= 1.0 {
        k.conj()
    } else {
        k.inv()
    }
}
