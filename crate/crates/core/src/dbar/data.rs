//! Spectral data r_+(k), r_-(k), the evolved matrix R(k; x) and its nilpotent split.

use serde::{Deserialize, Serialize};

use crate::error::NormError;
use crate::field::Mat2;
use crate::geometry::{HalfPlane, C64};
use crate::spaces::{lpnu_norm, Resolution};

/// Closed-form profile multiplying an amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// exp(1 - 1/(1 - s^2)) with s = (|k| - mid)/half_width, zero for |s| >= 1.
    AnnulusBump { inner: f64, outer: f64 },
    /// 1/(1 + |k|^4).
    RationalDecay,
    /// exp(1 - 1/(1 - |k - c|^2/rho^2)) inside the disk |k - c| < rho.
    LocalBump { center: C64, radius: f64 },
}

impl Profile {
    pub fn annulus() -> Self {
        Profile::AnnulusBump {
            inner: 0.2,
            outer: 0.9,
        }
    }

    pub fn eval(&self, k: C64) -> f64 {
        match *self {
            Profile::AnnulusBump { inner, outer } => {
                let mid = 0.5 * (inner + outer);
                let half = 0.5 * (outer - inner);
                bump(((k.norm() - mid) / half).powi(2))
            }
            Profile::RationalDecay => 1.0 / (1.0 + k.norm_sqr().powi(2)),
            Profile::LocalBump { center, radius } => {
                bump((k - center).norm_sqr() / (radius * radius))
            }
        }
    }

    /// Whether the profile vanishes identically outside the closed unit disk.
    pub fn inside_unit_disk(&self) -> bool {
        match *self {
            Profile::AnnulusBump { outer, .. } => outer <= 1.0,
            Profile::RationalDecay => false,
            Profile::LocalBump { center, radius } => center.norm() + radius <= 1.0,
        }
    }
}

fn bump(s2: f64) -> f64 {
    if s2 < 1.0 {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralComponent {
    pub profile: Profile,
    pub amplitude_plus: C64,
    pub amplitude_minus: C64,
}

/// The pair (r_+, r_-) as a sum of amplitude-weighted closed-form profiles.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub components: Vec<SpectralComponent>,
}

impl SpectralData {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(profile: Profile, amplitude_plus: C64, amplitude_minus: C64) -> Self {
        Self {
            components: vec![SpectralComponent {
                profile,
                amplitude_plus,
                amplitude_minus,
            }],
        }
    }

    pub fn annulus_bump(amplitude_plus: C64, amplitude_minus: C64) -> Self {
        Self::single(Profile::annulus(), amplitude_plus, amplitude_minus)
    }

    pub fn rational_decay(amplitude_plus: C64, amplitude_minus: C64) -> Self {
        Self::single(Profile::RationalDecay, amplitude_plus, amplitude_minus)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| {
            c.amplitude_plus == C64::new(0.0, 0.0) && c.amplitude_minus == C64::new(0.0, 0.0)
        })
    }

    pub fn r_plus(&self, k: C64) -> C64 {
        self.components
            .iter()
            .map(|c| c.amplitude_plus * c.profile.eval(k))
            .sum()
    }

    pub fn r_minus(&self, k: C64) -> C64 {
        self.components
            .iter()
            .map(|c| c.amplitude_minus * c.profile.eval(k))
            .sum()
    }

    /// Multiplies both amplitudes of every component by `s`.
    pub fn scaled(&self, s: C64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| SpectralComponent {
                    amplitude_plus: c.amplitude_plus * s,
                    amplitude_minus: c.amplitude_minus * s,
                    ..*c
                })
                .collect(),
        }
    }

    /// Superposition of two data sets.
    pub fn plus(&self, other: &SpectralData) -> Self {
        let mut components = self.components.clone();
        components.extend(other.components.iter().copied());
        Self { components }
    }

    pub fn compactly_supported_in_unit_disk(&self) -> bool {
        self.components.iter().all(|c| c.profile.inside_unit_disk())
    }

    /// L^{q,2} norms of r_+ and r_- over the whole plane.
    pub fn lq2_norms(&self, q: f64, res: Resolution) -> Result<(f64, f64), NormError> {
        Ok((
            lpnu_norm(|k| self.r_plus(k), q, 2.0, None, res)?,
            lpnu_norm(|k| self.r_minus(k), q, 2.0, None, res)?,
        ))
    }

    /// L^{q,2} norm of (r_+, r_-) on one half-plane, summed over the two entries.
    pub fn lq2_norm_half(
        &self,
        q: f64,
        side: HalfPlane,
        res: Resolution,
    ) -> Result<f64, NormError> {
        Ok(lpnu_norm(|k| self.r_plus(k), q, 2.0, Some(side), res)?
            + lpnu_norm(|k| self.r_minus(k), q, 2.0, Some(side), res)?)
    }
}

/// R(k; x) = [[0, r_+(k) e^{-2ikx}], [r_-(k) e^{2ikx}, 0]].
pub fn evolve_r(data: &SpectralData, x: f64, k: C64) -> Mat2 {
    let e = (C64::new(0.0, 2.0) * k * x).exp();
    let zero = C64::new(0.0, 0.0);
    Mat2::new(zero, data.r_plus(k) / e, data.r_minus(k) * e, zero)
}

/// R = w_- + w_+ with w_- strictly lower and w_+ strictly upper triangular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NilpotentPair {
    pub w_minus: Mat2,
    pub w_plus: Mat2,
}

pub fn nilpotent_split(r: &Mat2) -> NilpotentPair {
    let zero = C64::new(0.0, 0.0);
    NilpotentPair {
        w_minus: Mat2::new(zero, zero, r[(1, 0)], zero),
        w_plus: Mat2::new(zero, r[(0, 1)], zero, zero),
    }
}

pub fn sigma3() -> Mat2 {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    Mat2::new(one, zero, zero, -one)
}

pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b - b * a
}

/// [sigma3, a] written out, so its diagonal is exactly zero.
pub fn sigma3_commutator(a: &Mat2) -> Mat2 {
    let zero = C64::new(0.0, 0.0);
    Mat2::new(zero, a[(0, 1)] * 2.0, -a[(1, 0)] * 2.0, zero)
}
