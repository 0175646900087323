//! Norms of the function spaces used by the Dbar estimates: L^p on bounded
//! grids, the weighted spaces L^{p,nu} on the plane and half-planes, and a
//! sampled Hoelder norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GridError, NormError};
use crate::field::{Field, FieldValue};
use crate::geometry::{HalfPlane, QuadratureGrid, Region, C64};

/// Exponents tying the estimates together: 1/mu = 1/p + 1/q,
/// alpha = 1 - 2(1/p + 1/q), gamma = (p - 2)/p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub p: f64,
    pub q: f64,
    pub mu: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub nu: f64,
}

impl NormParams {
    pub fn new(p: f64, q: f64) -> Result<Self, NormError> {
        if !(p.is_finite() && p > 2.0) {
            return Err(NormError::InvalidExponent(p));
        }
        if !(q.is_finite() && q > 2.0) {
            return Err(NormError::InvalidExponent(q));
        }
        let s = 1.0 / p + 1.0 / q;
        if s >= 0.5 {
            return Err(NormError::InvalidExponent(1.0 / s));
        }
        Ok(Self {
            p,
            q,
            mu: 1.0 / s,
            alpha: 1.0 - 2.0 * s,
            gamma: (p - 2.0) / p,
            nu: 2.0,
        })
    }
}

impl Default for NormParams {
    fn default() -> Self {
        Self::new(8.0, 8.0).expect("p = q = 8 is admissible")
    }
}

fn check_p(p: f64) -> Result<(), NormError> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(NormError::InvalidExponent(p))
    }
}

/// (sum_i w_i |f_i|^p)^{1/p} over a bounded grid; matrices use the Frobenius norm.
pub fn lp_norm_bounded<T: FieldValue>(f: &Field<T>, p: f64) -> Result<f64, NormError> {
    check_p(p)?;
    Ok(lp_power_sum(&f.grid, |i| f.values[i].pointwise_norm(), p).powf(1.0 / p))
}

fn lp_power_sum(grid: &QuadratureGrid, norm_at: impl Fn(usize) -> f64, p: f64) -> f64 {
    grid.weights
        .iter()
        .enumerate()
        .map(|(i, w)| w * norm_at(i).powf(p))
        .sum()
}

/// Resolution of the half-disk grids used to evaluate L^{p,nu} norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nr: usize,
    pub ntheta: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            nr: 64,
            ntheta: 128,
        }
    }
}

/// Sampled L^p norm of an evaluator over the given half unit disks, optionally
/// composed with the weighted inversion f_(nu)(k) = |k|^{-nu} f(1/k).
fn evaluator_lp<T: FieldValue>(
    f: &(impl Fn(C64) -> T + Sync),
    p: f64,
    weighted_inverse: Option<f64>,
    sides: &[HalfPlane],
    res: Resolution,
) -> Result<f64, NormError> {
    let mut total = 0.0;
    for &side in sides {
        let grid = QuadratureGrid::half_disk(side, res.nr, res.ntheta)?;
        let values: Vec<f64> = grid
            .nodes
            .par_iter()
            .map(|&k| match weighted_inverse {
                None => f(k).pointwise_norm(),
                Some(nu) => k.norm().powf(-nu) * f(k.inv()).pointwise_norm(),
            })
            .collect();
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            let k = grid.nodes[node];
            let modulus = if weighted_inverse.is_some() {
                k.inv().norm()
            } else {
                k.norm()
            };
            return Err(NormError::NonFinite { node, modulus });
        }
        total += lp_power_sum(&grid, |i| values[i], p);
    }
    Ok(total.powf(1.0 / p))
}

/// L^{p,nu} norm: the L^p norm of f on the unit disk plus the L^p norm of
/// f_(nu) on the unit disk. With `half = Some(s)` the half-plane variant
/// ||f||_{L^p(E1^s)} + ||f_(nu)||_{L^p(E1^{-s})} is returned.
pub fn lpnu_norm<T: FieldValue>(
    f: impl Fn(C64) -> T + Sync,
    p: f64,
    nu: f64,
    half: Option<HalfPlane>,
    res: Resolution,
) -> Result<f64, NormError> {
    check_p(p)?;
    let (inner, outer): (Vec<HalfPlane>, Vec<HalfPlane>) = match half {
        None => (
            vec![HalfPlane::Plus, HalfPlane::Minus],
            vec![HalfPlane::Plus, HalfPlane::Minus],
        ),
        Some(s) => (vec![s], vec![s.opposite()]),
    };
    let a = evaluator_lp(&f, p, None, &inner, res)?;
    let b = evaluator_lp(&f, p, Some(nu), &outer, res)?;
    Ok(a + b)
}

/// Sampled sup norm, Hoelder seminorm and empirical Hoelder exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub sup_norm: f64,
    pub seminorm: f64,
    /// Least-squares slope of log(max |f(k1) - f(k2)|) against log(delta) over
    /// the sampling scales; `None` when every sampled increment vanishes.
    pub empirical_exponent: Option<f64>,
    pub pairs: usize,
    pub seed: u64,
}

impl HolderEstimate {
    pub fn norm(&self) -> f64 {
        self.sup_norm + self.seminorm
    }
}

/// Pair sampling schedule for [`holder_norm_estimate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderOptions {
    pub n_pairs: usize,
    pub seed: u64,
    pub delta_max: f64,
    pub delta_min: f64,
    pub levels: usize,
    /// Share of pairs whose points are both uniform in the region.
    pub global_fraction: f64,
    /// Number of worst pairs per level around which the next level zooms in.
    pub anchors: usize,
}

impl HolderOptions {
    pub fn new(n_pairs: usize, seed: u64) -> Self {
        Self {
            n_pairs,
            seed,
            delta_max: 0.1,
            delta_min: 1e-4,
            levels: 12,
            global_fraction: 0.2,
            anchors: 8,
        }
    }
}

/// Largest ratio |f(k1) - f(k2)| / |k1 - k2|^alpha over an explicit pair list.
pub fn holder_seminorm_over_pairs<T: FieldValue>(
    f: impl Fn(C64) -> T + Sync,
    alpha: f64,
    pairs: &[(C64, C64)],
) -> f64 {
    pairs
        .par_iter()
        .map(|&(a, b)| {
            let d = (a - b).norm();
            if d == 0.0 {
                0.0
            } else {
                f(a).distance(&f(b)) / d.powf(alpha)
            }
        })
        .reduce(|| 0.0, f64::max)
}

fn uniform_point(rng: &mut ChaCha8Rng, region: &Region, bbox: (f64, f64, f64, f64)) -> C64 {
    loop {
        let z = C64::new(rng.gen_range(bbox.0..bbox.1), rng.gen_range(bbox.2..bbox.3));
        if region.contains(z) && on_open_side(region, z) {
            return z;
        }
    }
}

// keep samples off the real axis for half-disks so both points see the same piece
fn on_open_side(region: &Region, z: C64) -> bool {
    match region {
        Region::E1Plus => z.im > 0.0,
        Region::E1Minus => z.im < 0.0,
        _ => true,
    }
}

fn partner(rng: &mut ChaCha8Rng, region: &Region, k1: C64, delta: f64) -> Option<C64> {
    for _ in 0..32 {
        let rho = rng.gen_range(0.5 * delta..=delta);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let k2 = k1 + C64::from_polar(rho, phi);
        if region.contains(k2) && on_open_side(region, k2) {
            return Some(k2);
        }
    }
    None
}

/// Hoelder estimate with the default scale schedule (0.1 down to 1e-4).
pub fn holder_norm_estimate<T: FieldValue>(
    f: impl Fn(C64) -> T + Sync,
    alpha: f64,
    region: Region,
    n_pairs: usize,
    seed: u64,
) -> Result<HolderEstimate, NormError> {
    holder_norm_estimate_with(f, alpha, region, &HolderOptions::new(n_pairs, seed))
}

/// Multiscale pair sampler. Scales delta_l run geometrically from `delta_max`
/// to `delta_min`; at each scale half of the pairs start uniformly in the
/// region and half start near the worst pairs of the previous scale.
pub fn holder_norm_estimate_with<T: FieldValue>(
    f: impl Fn(C64) -> T + Sync,
    alpha: f64,
    region: Region,
    opts: &HolderOptions,
) -> Result<HolderEstimate, NormError> {
    if opts.n_pairs < 100 {
        return Err(NormError::TooFewPairs {
            min: 100,
            got: opts.n_pairs,
        });
    }
    if !region.is_bounded() {
        return Err(GridError::Unbounded(region.name()).into());
    }
    let bbox = region.bounding_box()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let levels = opts.levels.max(2);
    let n_global = ((opts.n_pairs as f64) * opts.global_fraction).round() as usize;
    let per_level = ((opts.n_pairs - n_global) / levels).max(1);
    let ratio = (opts.delta_min / opts.delta_max).powf(1.0 / (levels - 1) as f64);

    let mut sup_norm = 0.0f64;
    let mut seminorm = 0.0f64;
    let mut total_pairs = 0usize;
    let mut scale_points = Vec::with_capacity(levels);
    let mut anchors: Vec<C64> = Vec::new();
    let mut prev_delta = opts.delta_max;

    for level in 0..levels {
        let delta = opts.delta_max * ratio.powi(level as i32);
        let mut pairs = Vec::with_capacity(per_level);
        while pairs.len() < per_level {
            let from_anchor = !anchors.is_empty() && pairs.len() % 2 == 1;
            let k1 = if from_anchor {
                let a = anchors[rng.gen_range(0..anchors.len())];
                match partner(&mut rng, &region, a, prev_delta) {
                    Some(z) => z,
                    None => a,
                }
            } else {
                uniform_point(&mut rng, &region, bbox)
            };
            if let Some(k2) = partner(&mut rng, &region, k1, delta) {
                pairs.push((k1, k2));
            }
        }
        let evals: Vec<(f64, f64, f64)> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let fa = f(a);
                let fb = f(b);
                (
                    fa.distance(&fb),
                    fa.pointwise_norm().max(fb.pointwise_norm()),
                    (a - b).norm(),
                )
            })
            .collect();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by(|&i, &j| evals[j].0.total_cmp(&evals[i].0));
        let mut level_max = 0.0f64;
        for &(df, fmax, d) in &evals {
            level_max = level_max.max(df);
            sup_norm = sup_norm.max(fmax);
            seminorm = seminorm.max(df / d.powf(alpha));
        }
        if evals.iter().any(|e| !e.0.is_finite() || !e.1.is_finite()) {
            return Err(NormError::NonFinite {
                node: total_pairs,
                modulus: f64::NAN,
            });
        }
        total_pairs += pairs.len();
        anchors = order
            .iter()
            .take(opts.anchors)
            .map(|&i| pairs[i].0)
            .collect();
        prev_delta = delta;
        if level_max > 0.0 {
            scale_points.push((delta.ln(), level_max.ln()));
        }
    }

    for _ in 0..n_global {
        let a = uniform_point(&mut rng, &region, bbox);
        let b = uniform_point(&mut rng, &region, bbox);
        let (fa, fb) = (f(a), f(b));
        let d = (a - b).norm();
        sup_norm = sup_norm.max(fa.pointwise_norm()).max(fb.pointwise_norm());
        if d > 0.0 {
            seminorm = seminorm.max(fa.distance(&fb) / d.powf(alpha));
        }
        total_pairs += 1;
    }

    let empirical_exponent = if scale_points.len() >= 2 {
        Some(least_squares_slope(&scale_points))
    } else {
        None
    };
    Ok(HolderEstimate {
        sup_norm,
        seminorm,
        empirical_exponent,
        pairs: total_pairs,
        seed: opts.seed,
    })
}

/// Slope of the least-squares line through (x, y) points.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
