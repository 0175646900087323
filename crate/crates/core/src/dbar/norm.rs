//! Randomized lower bound for the norm of psi -> psi R T_C from L^{p,0} to
//! H^alpha, and the Hoelder check of psi R T_C itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::data::SpectralData;
use super::operator::{Component, ComponentGrids, DbarOperator};
use crate::error::DbarError;
use crate::field::{FieldValue, Mat2};
use crate::geometry::{Region, C64};
use crate::spaces::{holder_norm_estimate_with, HolderEstimate, HolderOptions, NormParams};

/// Power steps applied to the best random test field.
const POWER_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorEstimate {
    /// Largest observed ratio |phi R T_C|_{H^alpha} / |phi|_{L^{p,0}}; a lower
    /// bound for the operator norm.
    pub norm_lower_bound: f64,
    /// 1 - norm_lower_bound; negative when the small-norm predicate fails.
    pub small_norm_margin: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub trials: usize,
    pub x_samples: Vec<f64>,
}

impl OperatorEstimate {
    pub fn small_norm(&self) -> bool {
        self.norm_lower_bound < 1.0
    }
}

/// Options for the sampled H^alpha norm of psi R T_C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderSampling {
    pub pairs: usize,
    pub seed: u64,
    /// Radius of the disk about the origin that is sampled.
    pub radius: f64,
}

impl Default for HolderSampling {
    fn default() -> Self {
        Self {
            pairs: 1000,
            seed: 7,
            radius: 2.0,
        }
    }
}

impl HolderSampling {
    /// Scales from 0.3 down to the node spacing: below it the discrete
    /// transform carries structure from individual nodes.
    fn options(&self, h: f64) -> HolderOptions {
        let mut o = HolderOptions::new(self.pairs, self.seed);
        o.delta_max = 0.3;
        o.delta_min = h.min(0.15);
        o.levels = 8;
        o
    }
}

/// L^{p,0} norm of node values: L^p over the half disks plus L^p of
/// phi(1/k) over the half disks, the latter read off the exterior nodes.
pub fn lp0_norm(grids: &ComponentGrids, phi: &[Mat2], p: f64) -> f64 {
    let mut inner = 0.0;
    let mut outer = 0.0;
    for (t, value) in phi.iter().enumerate().take(grids.len()) {
        let v = value.pointwise_norm().powf(p);
        match grids.component_of(t) {
            Component::E1Plus | Component::E1Minus => inner += grids.weights[t] * v,
            _ => outer += grids.weights[grids.reciprocal(t)] * v,
        }
    }
    inner.powf(1.0 / p) + outer.powf(1.0 / p)
}

/// Sampled H^alpha norm of the extension of phi R T_C on a disk.
pub fn holder_of_extension(
    op: &DbarOperator,
    phi: &[Mat2],
    alpha: f64,
    sampling: &HolderSampling,
) -> Result<HolderEstimate, DbarError> {
    let region = Region::Disk {
        center: C64::new(0.0, 0.0),
        radius: sampling.radius,
    };
    let opts = sampling.options(op.grids.h());
    let f = |k: C64| op.extend(phi, &[k])[0];
    let mut est = holder_norm_estimate_with(f, alpha, region, &opts)?;
    // node values are part of the function too
    let at_nodes = op.apply(phi);
    let node_sup = at_nodes
        .iter()
        .map(|m| m.pointwise_norm())
        .fold(0.0, f64::max);
    est.sup_norm = est.sup_norm.max(node_sup);
    Ok(est)
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<Mat2> {
    (0..n)
        .map(|_| Mat2::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect()
}

fn normalized(grids: &ComponentGrids, phi: Vec<Mat2>, p: f64) -> Option<Vec<Mat2>> {
    let n = lp0_norm(grids, &phi, p);
    (n > 0.0 && n.is_finite()).then(|| phi.into_iter().map(|m| m / C64::new(n, 0.0)).collect())
}

/// Randomized estimate of the L^{p,0} -> H^alpha norm of psi -> psi R T_C.
///
/// For each x, `trials` random node fields of unit L^{p,0} norm are mapped
/// and their H^alpha norms sampled; the best of them is then pushed through
/// a few power steps. The maximum ratio over everything tried is reported,
/// which can only underestimate the true norm.
pub fn estimate_operator_norm(
    grids: &Arc<ComponentGrids>,
    data: &SpectralData,
    params: &NormParams,
    x_samples: &[f64],
    trials: usize,
    seed: u64,
    sampling: &HolderSampling,
) -> Result<OperatorEstimate, DbarError> {
    if trials < 10 {
        return Err(DbarError::InvalidParameter(format!(
            "trials must be at least 10, got {trials}"
        )));
    }
    let mut best = 0.0f64;
    if !data.is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for &x in x_samples {
            let op = DbarOperator::new(grids.clone(), data, x)?;
            let mut top: Option<(f64, Vec<Mat2>)> = None;
            for _ in 0..trials {
                let Some(phi) = normalized(grids, random_field(&mut rng, grids.len()), params.p)
                else {
                    continue;
                };
                let ratio = holder_of_extension(&op, &phi, params.alpha, sampling)?.norm();
                if top.as_ref().is_none_or(|(r, _)| ratio > *r) {
                    top = Some((ratio, phi));
                }
            }
            let Some((mut ratio, mut phi)) = top else {
                continue;
            };
            best = best.max(ratio);
            for _ in 0..POWER_STEPS {
                let Some(next) = normalized(grids, op.apply(&phi), params.p) else {
                    break;
                };
                phi = next;
                ratio = holder_of_extension(&op, &phi, params.alpha, sampling)?.norm();
                best = best.max(ratio);
            }
        }
    }
    Ok(OperatorEstimate {
        norm_lower_bound: best,
        small_norm_margin: 1.0 - best,
        p: params.p,
        q: params.q,
        alpha: params.alpha,
        trials,
        x_samples: x_samples.to_vec(),
    })
}
