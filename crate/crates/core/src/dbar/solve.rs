//! Neumann iteration for psi = I + psi R T_C and the pointwise Dbar residual.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::operator::{Component, DbarOperator};
use crate::cauchy::lattice::TargetRing;
use crate::error::DbarError;
use crate::field::{identity, FieldValue, Mat2};
use crate::geometry::C64;

/// Consecutive growing updates that count as divergence.
pub const DIVERGENCE_STREAK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), DbarError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(DbarError::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(DbarError::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// psi at every node of the component grids.
    pub psi: Vec<Mat2>,
    pub iterations: usize,
    /// sup over nodes of |psi - I - psi R T_C|.
    pub residual: f64,
    /// Sup-norm change of each update.
    pub changes: Vec<f64>,
}

impl Solution {
    /// Per-iteration contraction ratio read off the tail of the update sizes.
    ///
    /// The operator swaps the roles of the two columns, so updates can
    /// alternate in size; the ratio is taken over an even number of steps.
    /// `None` when fewer than three informative updates exist.
    pub fn contraction_ratio(&self) -> Option<f64> {
        let c: Vec<f64> = self
            .changes
            .iter()
            .copied()
            .filter(|&v| v > 1e-14)
            .collect();
        if c.len() < 3 {
            return None;
        }
        let last = c.len() - 1;
        let span = ((last - 1) / 2 * 2).min(6);
        if span == 0 {
            return None;
        }
        Some((c[last] / c[last - span]).powf(1.0 / span as f64))
    }
}

/// Successive substitution psi_{n+1} = I + psi_n R T_C from psi_0 = I.
pub fn solve_psi(op: &DbarOperator, config: SolverConfig) -> Result<Solution, DbarError> {
    config.validate()?;
    let n = op.grids.len();
    let mut psi = vec![identity(); n];
    let mut changes: Vec<f64> = Vec::new();
    let mut streak = 0;
    loop {
        let next: Vec<Mat2> = op.apply(&psi).into_iter().map(|m| m + identity()).collect();
        let change = psi
            .iter()
            .zip(&next)
            .map(|(a, b)| a.distance(b))
            .fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) });
        let iterations = changes.len() + 1;
        if !change.is_finite() {
            return Err(DbarError::Divergence {
                iterations,
                streak,
                last_change: change,
            });
        }
        if let Some(&prev) = changes.last() {
            streak = if change > prev { streak + 1 } else { 0 };
        }
        changes.push(change);
        psi = next;
        if change < config.tol {
            break;
        }
        if streak >= DIVERGENCE_STREAK {
            return Err(DbarError::Divergence {
                iterations,
                streak,
                last_change: change,
            });
        }
        if iterations >= config.max_iter {
            return Err(DbarError::NonConvergence {
                iterations,
                last_change: change,
            });
        }
    }
    let residual = fixed_point_residual(op, &psi);
    Ok(Solution {
        iterations: changes.len(),
        psi,
        residual,
        changes,
    })
}

/// sup over nodes of |psi - I - psi R T_C|.
pub fn fixed_point_residual(op: &DbarOperator, psi: &[Mat2]) -> f64 {
    op.apply(psi)
        .iter()
        .zip(psi)
        .map(|(t, p)| (p - identity() - t).pointwise_norm())
        .fold(0.0, f64::max)
}

/// Nodes of the two half disks at least `margin` away from the unit circle
/// and the real axis.
pub fn interior_nodes(op: &DbarOperator, margin: f64) -> Vec<usize> {
    let g = &op.grids;
    [Component::E1Plus, Component::E1Minus]
        .into_iter()
        .flat_map(|c| g.range(c))
        .filter(|&t| {
            let k = g.nodes[t];
            1.0 - k.norm() >= margin && k.im.abs() >= margin
        })
        .collect()
}

/// sup |dbar psi - psi R| over half-disk nodes at least 3h from the unit
/// circle and the real axis.
///
/// psi is extended off the nodes by its own integral equation and
/// differentiated with centred differences of a quarter node spacing in r
/// and in theta, using dbar = e^{i theta} (d_r + (i/r) d_theta) / 2. R is the
/// part of R kept by the decomposition.
pub fn dbar_residual(op: &DbarOperator, psi: &[Mat2]) -> f64 {
    if op.data.is_zero() {
        return 0.0;
    }
    let g = &op.grids;
    let nodes = interior_nodes(op, 3.0 * g.h());
    if nodes.is_empty() {
        return 0.0;
    }
    let (dr, dtheta) = (g.plus.dr, g.plus.dtheta);
    let (hr, shift) = (0.25 * dr, 0.25);
    let ring_ids: BTreeSet<usize> = nodes.iter().map(|&t| g.lattice_position(t).0).collect();
    let slot: BTreeMap<usize, usize> = ring_ids.iter().enumerate().map(|(s, &i)| (i, s)).collect();
    let mut rings = Vec::with_capacity(4 * ring_ids.len());
    for &i in &ring_ids {
        let r = (i as f64 + 0.5) * dr;
        rings.extend([
            TargetRing::new(r + hr, 0.0),
            TargetRing::new(r - hr, 0.0),
            TargetRing::new(r, shift),
            TargetRing::new(r, -shift),
        ]);
    }
    let ext = op.extend_rings(psi, &rings);
    let len = g.ring_len();
    let i = C64::new(0.0, 1.0);
    nodes
        .iter()
        .map(|&t| {
            let (ring, l) = g.lattice_position(t);
            let base = 4 * slot[&ring];
            let at = |q: usize| ext[(base + q) * len + l];
            let k = g.nodes[t];
            let d_r = (at(0) - at(1)) / C64::new(2.0 * hr, 0.0);
            let d_theta = (at(2) - at(3)) / C64::new(2.0 * shift * dtheta, 0.0);
            let e = C64::from_polar(0.5, k.arg());
            let dbar = (d_r + d_theta * (i / k.norm())) * e;
            (dbar - psi[t] * op.r_active(t)).pointwise_norm()
        })
        .fold(0.0, f64::max)
}
