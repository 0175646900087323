//! The corrected transform from a half-disk grid to whole rings of targets.
//!
//! When every target ring carries the same angular lattice as the source
//! grid, the kernel sum over one source ring is a circular correlation in the
//! angle index, so each source-ring/target-ring pair costs one FFT instead of
//! a dense sum.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{ring_mean, COINCIDENCE_TOL};
use crate::geometry::{QuadratureGrid, Stencil, C64};

/// Kernel bytes above which ring kernel spectra are recomputed on each use
/// instead of cached.
pub const KERNEL_CACHE_BYTES: usize = 256 << 20;

/// One ring of targets: radius and an angular shift in units of the angle
/// step. Target l of the ring sits at angle (l + 1/2 + shift) dtheta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRing {
    pub radius: f64,
    pub shift: f64,
}

impl TargetRing {
    pub fn new(radius: f64, shift: f64) -> Self {
        Self { radius, shift }
    }

    /// The ring of reciprocals; target l maps to target ring_len - 1 - l.
    pub fn reciprocal(&self) -> Self {
        Self {
            radius: 1.0 / self.radius,
            shift: -self.shift,
        }
    }
}

/// DFTs of the kernel 1/(r_i e^{i(m - shift) dtheta} - rho) over the angle
/// index m, for every source ring i and target ring (rho, shift). Shared by
/// the two half disks, which differ only in where their angles start.
pub struct RingKernels {
    pub rings: Vec<TargetRing>,
    source_radii: Vec<f64>,
    ring_weights: Vec<f64>,
    ntheta: usize,
    dtheta: f64,
    cache: Option<Vec<C64>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RingKernels {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RingKernels")
            .field("rings", &self.rings.len())
            .field("nr", &self.source_radii.len())
            .field("ntheta", &self.ntheta)
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

impl RingKernels {
    /// Kernels for half-disk grids of the shape of `grid`.
    pub fn new(grid: &QuadratureGrid, rings: Vec<TargetRing>) -> Self {
        let len = 2 * grid.ntheta;
        let mut planner = FftPlanner::new();
        let mut k = Self {
            rings,
            source_radii: (0..grid.nr).map(|i| (i as f64 + 0.5) * grid.dr).collect(),
            ring_weights: (0..grid.nr)
                .map(|i| grid.weights[i * grid.ntheta])
                .collect(),
            ntheta: grid.ntheta,
            dtheta: grid.dtheta,
            cache: None,
            fft: planner.plan_fft_forward(len),
            ifft: planner.plan_fft_inverse(len),
        };
        let bytes = k.rings.len() * grid.nr * len * std::mem::size_of::<C64>();
        if bytes <= KERNEL_CACHE_BYTES {
            let nr = grid.nr;
            let cache: Vec<C64> = (0..k.rings.len())
                .into_par_iter()
                .flat_map_iter(|t| {
                    let mut out = vec![C64::new(0.0, 0.0); nr * len];
                    for i in 0..nr {
                        k.compute(t, i, &mut out[i * len..(i + 1) * len]);
                    }
                    out
                })
                .collect();
            k.cache = Some(cache);
        }
        k
    }

    pub fn ring_len(&self) -> usize {
        2 * self.ntheta
    }

    fn compute(&self, t: usize, i: usize, buf: &mut [C64]) {
        let TargetRing { radius: rho, shift } = self.rings[t];
        let r = self.source_radii[i];
        for (m, kv) in buf.iter_mut().enumerate() {
            let d = C64::from_polar(r, (m as f64 - shift) * self.dtheta) - rho;
            *kv = if d.norm() < COINCIDENCE_TOL {
                C64::new(0.0, 0.0)
            } else {
                d.inv()
            };
        }
        self.fft.process(buf);
    }

    fn spectrum<'a>(&'a self, t: usize, i: usize, scratch: &'a mut [C64]) -> &'a [C64] {
        let len = self.ring_len();
        match &self.cache {
            Some(c) => {
                let nr = self.source_radii.len();
                &c[(t * nr + i) * len..(t * nr + i + 1) * len]
            }
            None => {
                self.compute(t, i, scratch);
                scratch
            }
        }
    }

    pub fn target(&self, ring: usize, l: usize) -> C64 {
        let TargetRing { radius, shift } = self.rings[ring];
        C64::from_polar(radius, (l as f64 + 0.5 + shift) * self.dtheta)
    }

    pub fn targets(&self) -> Vec<C64> {
        (0..self.rings.len())
            .flat_map(|t| (0..self.ring_len()).map(move |l| (t, l)))
            .map(|(t, l)| self.target(t, l))
            .collect()
    }

    /// sum_s w_s values_s / (z_s - k) at every target, skipping coincident
    /// nodes. Source angle j sits at lattice position j + offset.
    fn kernel_sums<const N: usize>(&self, values: &[[C64; N]], offset: usize) -> Vec<[C64; N]> {
        let len = self.ring_len();
        let nr = self.source_radii.len();
        let nt = self.ntheta;
        let zero = C64::new(0.0, 0.0);
        // spectra of the weighted source rings, laid out [ring][component][q]
        let spectra: Vec<C64> = (0..nr)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut out = vec![zero; N * len];
                for n in 0..N {
                    let buf = &mut out[n * len..(n + 1) * len];
                    for j in 0..nt {
                        buf[j + offset] = values[i * nt + j][n] * self.ring_weights[i];
                    }
                    self.fft.process(buf);
                }
                out
            })
            .collect();
        let per_ring: Vec<Vec<[C64; N]>> = (0..self.rings.len())
            .into_par_iter()
            .map(|t| {
                let mut acc = vec![zero; N * len];
                let mut scratch = vec![zero; len];
                for i in 0..nr {
                    let kernel = self.spectrum(t, i, &mut scratch);
                    let src = &spectra[i * N * len..(i + 1) * N * len];
                    for q in 0..len {
                        let kr = kernel[(len - q) % len];
                        for n in 0..N {
                            acc[n * len + q] += src[n * len + q] * kr;
                        }
                    }
                }
                for n in 0..N {
                    self.ifft.process(&mut acc[n * len..(n + 1) * len]);
                }
                let shift = self.rings[t].shift;
                (0..len)
                    .map(|l| {
                        let phase = C64::from_polar(
                            1.0 / len as f64,
                            -(l as f64 + 0.5 + shift) * self.dtheta,
                        );
                        let mut v = [zero; N];
                        for n in 0..N {
                            v[n] = acc[n * len + l] * phase;
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        per_ring.into_iter().flatten().collect()
    }
}

/// The corrected transform from one half-disk grid to the targets of a
/// [`RingKernels`], stored ring-major.
#[derive(Debug)]
pub struct RingPlan {
    pub kernels: Arc<RingKernels>,
    offset: usize,
    stencils: Vec<Stencil>,
    correction: Vec<C64>,
}

impl RingPlan {
    /// `grid` must be a half-disk grid about the origin whose angles start at
    /// 0 or pi, of the shape the kernels were built for.
    pub fn new(grid: &QuadratureGrid, kernels: Arc<RingKernels>) -> Self {
        assert!(!grid.is_full_disk() && grid.center == C64::new(0.0, 0.0));
        assert_eq!(kernels.ntheta, grid.ntheta);
        assert_eq!(kernels.source_radii.len(), grid.nr);
        let offset = (grid.theta0 / grid.dtheta).round() as usize;
        let targets = kernels.targets();
        let ones = vec![[C64::new(1.0, 0.0)]; grid.len()];
        let s0 = kernels.kernel_sums(&ones, offset);
        let stencils = targets
            .iter()
            .map(|&k| grid.interpolation_stencil(k))
            .collect();
        let correction = targets
            .iter()
            .zip(&s0)
            .map(|(&k, s)| grid.kernel_area_integral(k) - s[0])
            .collect();
        Self {
            kernels,
            offset,
            stencils,
            correction,
        }
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    /// Transforms N densities at once; the result is ring-major.
    pub fn apply<const N: usize>(
        &self,
        grid: &QuadratureGrid,
        values: &[[C64; N]],
    ) -> Vec<[C64; N]> {
        assert_eq!(values.len(), grid.len());
        let sums = self.kernels.kernel_sums(values, self.offset);
        let mean = ring_mean(grid, values);
        sums.into_par_iter()
            .enumerate()
            .map(|(t, s1)| {
                let c = self.stencils[t].apply(values, &mean);
                let mut out = [C64::new(0.0, 0.0); N];
                for n in 0..N {
                    out[n] = -(s1[n] + c[n] * self.correction[t]) / PI;
                }
                out
            })
            .collect()
    }
}
