//! Regions of the split plane, polar midpoint quadrature grids and the
//! inversion map k -> 1/k between the unit half-disks and their exteriors.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::GridError;

pub type C64 = Complex64;

/// Upper or lower half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HalfPlane {
    Plus,
    Minus,
}

impl HalfPlane {
    pub fn opposite(self) -> Self {
        match self {
            HalfPlane::Plus => HalfPlane::Minus,
            HalfPlane::Minus => HalfPlane::Plus,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            HalfPlane::Plus => 1.0,
            HalfPlane::Minus => -1.0,
        }
    }

    /// Half-plane of `k`; the real axis belongs to `Plus`.
    pub fn of(k: C64) -> Self {
        if k.im >= 0.0 {
            HalfPlane::Plus
        } else {
            HalfPlane::Minus
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    E1Plus,
    E1Minus,
    E2Plus,
    E2Minus,
    CPlus,
    CMinus,
    UnitDisk,
    Disk { center: C64, radius: f64 },
}

impl Region {
    pub fn half_disk(side: HalfPlane) -> Self {
        match side {
            HalfPlane::Plus => Region::E1Plus,
            HalfPlane::Minus => Region::E1Minus,
        }
    }

    pub fn exterior(side: HalfPlane) -> Self {
        match side {
            HalfPlane::Plus => Region::E2Plus,
            HalfPlane::Minus => Region::E2Minus,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(
            self,
            Region::E1Plus | Region::E1Minus | Region::UnitDisk | Region::Disk { .. }
        )
    }

    /// Membership with the same boundary convention as [`classify_point`].
    pub fn contains(&self, k: C64) -> bool {
        let tag = classify_point(k);
        match *self {
            Region::E1Plus | Region::E1Minus | Region::E2Plus | Region::E2Minus => tag == *self,
            Region::CPlus => matches!(tag, Region::E1Plus | Region::E2Plus),
            Region::CMinus => matches!(tag, Region::E1Minus | Region::E2Minus),
            Region::UnitDisk => k.norm() <= 1.0,
            Region::Disk { center, radius } => (k - center).norm() <= radius,
        }
    }

    /// Smallest axis-aligned box containing a bounded region: (re_min, re_max, im_min, im_max).
    pub fn bounding_box(&self) -> Result<(f64, f64, f64, f64), GridError> {
        match *self {
            Region::E1Plus => Ok((-1.0, 1.0, 0.0, 1.0)),
            Region::E1Minus => Ok((-1.0, 1.0, -1.0, 0.0)),
            Region::UnitDisk => Ok((-1.0, 1.0, -1.0, 1.0)),
            Region::Disk { center, radius } => Ok((
                center.re - radius,
                center.re + radius,
                center.im - radius,
                center.im + radius,
            )),
            other => Err(GridError::Unbounded(other.name())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Region::E1Plus => "E1plus".into(),
            Region::E1Minus => "E1minus".into(),
            Region::E2Plus => "E2plus".into(),
            Region::E2Minus => "E2minus".into(),
            Region::CPlus => "Cplus".into(),
            Region::CMinus => "Cminus".into(),
            Region::UnitDisk => "UnitDisk".into(),
            Region::Disk { center, radius } => {
                format!("Disk({}{:+}i, {})", center.re, center.im, radius)
            }
        }
    }
}

/// Tags a finite point with one of the four pieces of the split plane.
/// The real axis goes to the plus side and the unit circle to E1.
pub fn classify_point(k: C64) -> Region {
    let inside = k.norm_sqr() <= 1.0;
    match (inside, HalfPlane::of(k)) {
        (true, HalfPlane::Plus) => Region::E1Plus,
        (true, HalfPlane::Minus) => Region::E1Minus,
        (false, HalfPlane::Plus) => Region::E2Plus,
        (false, HalfPlane::Minus) => Region::E2Minus,
    }
}

/// Polar tensor grid with midpoint nodes on a disk or a sector of a disk.
///
/// Nodes are stored radius-major: node `i * ntheta + j` sits at
/// `center + r_i e^{i theta_j}` with `r_i = (i + 1/2) dr` and
/// `theta_j = theta0 + (j + 1/2) dtheta`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub region: Region,
    pub center: C64,
    pub radius: f64,
    pub theta0: f64,
    pub span: f64,
    pub nr: usize,
    pub ntheta: usize,
    pub dr: f64,
    pub dtheta: f64,
    pub nodes: Vec<C64>,
    pub weights: Vec<f64>,
    pub h: f64,
}

impl QuadratureGrid {
    fn polar(
        region: Region,
        center: C64,
        radius: f64,
        theta0: f64,
        span: f64,
        nr: usize,
        ntheta: usize,
    ) -> Result<Self, GridError> {
        if nr < 2 || ntheta < 2 {
            return Err(GridError::ResolutionTooSmall { nr, ntheta });
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GridError::InvalidRadius(radius));
        }
        let dr = radius / nr as f64;
        let dtheta = span / ntheta as f64;
        let mut nodes = Vec::with_capacity(nr * ntheta);
        let mut weights = Vec::with_capacity(nr * ntheta);
        for i in 0..nr {
            let r = (i as f64 + 0.5) * dr;
            for j in 0..ntheta {
                let th = theta0 + (j as f64 + 0.5) * dtheta;
                nodes.push(center + C64::from_polar(r, th));
                weights.push(r * dr * dtheta);
            }
        }
        Ok(Self {
            region,
            center,
            radius,
            theta0,
            span,
            nr,
            ntheta,
            dr,
            dtheta,
            nodes,
            weights,
            h: dr.max(dtheta),
        })
    }

    /// Midpoint polar grid on the upper (`Plus`) or lower (`Minus`) half unit disk.
    pub fn half_disk(side: HalfPlane, nr: usize, ntheta: usize) -> Result<Self, GridError> {
        let theta0 = match side {
            HalfPlane::Plus => 0.0,
            HalfPlane::Minus => PI,
        };
        Self::polar(
            Region::half_disk(side),
            C64::new(0.0, 0.0),
            1.0,
            theta0,
            PI,
            nr,
            ntheta,
        )
    }

    /// Midpoint polar grid on a full disk.
    pub fn disk(center: C64, radius: f64, nr: usize, ntheta: usize) -> Result<Self, GridError> {
        let region = if center == C64::new(0.0, 0.0) && radius == 1.0 {
            Region::UnitDisk
        } else {
            Region::Disk { center, radius }
        };
        Self::polar(region, center, radius, 0.0, TAU, nr, ntheta)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_full_disk(&self) -> bool {
        self.span >= TAU
    }

    /// Exact area of the discretized region.
    pub fn area(&self) -> f64 {
        0.5 * self.radius * self.radius * self.span
    }

    pub fn half_plane(&self) -> Option<HalfPlane> {
        match self.region {
            Region::E1Plus => Some(HalfPlane::Plus),
            Region::E1Minus => Some(HalfPlane::Minus),
            _ => None,
        }
    }

    /// Index of the node whose polar cell contains `k`, clamped onto the grid
    /// for points outside the region.
    pub fn nearest_node(&self, k: C64) -> usize {
        let z = k - self.center;
        let r = z.norm();
        let i = ((r / self.dr).floor() as isize).clamp(0, self.nr as isize - 1) as usize;
        let j = if r == 0.0 {
            0
        } else if self.is_full_disk() {
            let t = (z.arg() - self.theta0).rem_euclid(TAU);
            ((t / self.dtheta).floor() as usize).min(self.ntheta - 1)
        } else {
            // angle measured from the middle of the sector, wrapped into (-pi, pi]
            let mid = self.theta0 + 0.5 * self.span;
            let mut t = z.arg() - mid;
            t = (t + PI).rem_euclid(TAU) - PI;
            let t = t + 0.5 * self.span;
            ((t / self.dtheta).floor() as isize).clamp(0, self.ntheta as isize - 1) as usize
        };
        i * self.ntheta + j
    }

    /// Bilinear interpolation weights in polar index space for a point `k`,
    /// clamped at the outer edges (and at the straight edges of a sector).
    /// Inside the first half ring the value is blended towards the ring mean so
    /// that the interpolant is continuous at the centre.
    pub fn interpolation_stencil(&self, k: C64) -> Stencil {
        let z = k - self.center;
        let r = z.norm();
        let fi = (r / self.dr - 0.5).clamp(0.0, (self.nr - 1) as f64);
        let i0 = (fi.floor() as usize).min(self.nr - 1);
        let i1 = (i0 + 1).min(self.nr - 1);
        let ti = fi - i0 as f64;
        let (j0, j1, tj) = if self.is_full_disk() {
            let t = (z.arg() - self.theta0).rem_euclid(TAU) / self.dtheta - 0.5;
            let t = t.rem_euclid(self.ntheta as f64);
            let j0 = (t.floor() as usize).min(self.ntheta - 1);
            (j0, (j0 + 1) % self.ntheta, t - j0 as f64)
        } else {
            let mid = self.theta0 + 0.5 * self.span;
            let t = (z.arg() - mid + PI).rem_euclid(TAU) - PI + 0.5 * self.span;
            let fj = (t / self.dtheta - 0.5).clamp(0.0, (self.ntheta - 1) as f64);
            let j0 = (fj.floor() as usize).min(self.ntheta - 1);
            (j0, (j0 + 1).min(self.ntheta - 1), fj - j0 as f64)
        };
        let blend = if r < 0.5 * self.dr {
            1.0 - r / (0.5 * self.dr)
        } else {
            0.0
        };
        let keep = 1.0 - blend;
        let at = |i: usize, j: usize| i * self.ntheta + j;
        Stencil {
            terms: [
                (at(i0, j0), keep * (1.0 - ti) * (1.0 - tj)),
                (at(i0, j1), keep * (1.0 - ti) * tj),
                (at(i1, j0), keep * ti * (1.0 - tj)),
                (at(i1, j1), keep * ti * tj),
            ],
            ring_mean: blend,
        }
    }

    /// Exact value of the area integral of 1/(z - k) over the region.
    pub fn kernel_area_integral(&self, k: C64) -> C64 {
        if self.is_full_disk() {
            disk_kernel_integral(self.center, self.radius, k)
        } else {
            sector_kernel_integral(self.center, self.radius, self.theta0, self.span, k)
        }
    }

    /// Quadrature of a scalar function over the region.
    pub fn integrate(&self, f: impl Fn(C64) -> C64) -> C64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| f(z) * w)
            .sum()
    }
}

/// Interpolation weights produced by [`QuadratureGrid::interpolation_stencil`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub terms: [(usize, f64); 4],
    /// Weight of the mean over the innermost ring of nodes.
    pub ring_mean: f64,
}

impl Stencil {
    pub fn apply<const N: usize>(&self, values: &[[C64; N]], ring_mean: &[C64; N]) -> [C64; N] {
        let mut out = [C64::new(0.0, 0.0); N];
        for n in 0..N {
            let mut acc = ring_mean[n] * self.ring_mean;
            for &(idx, w) in &self.terms {
                acc += values[idx][n] * w;
            }
            out[n] = acc;
        }
        out
    }
}

/// Area integral of 1/(z - k) over the disk |z - c| < R.
pub fn disk_kernel_integral(center: C64, radius: f64, k: C64) -> C64 {
    let a = k - center;
    if a.norm() <= radius {
        -PI * a.conj()
    } else {
        -PI * radius * radius / a
    }
}

/// Area integral of 1/(z - k) over the sector of |z - c| < R with
/// arguments in (theta0, theta0 + span), span <= pi.
///
/// Uses the boundary form (1/2i) * contour integral of conj(z - k)/(z - k) dz.
pub fn sector_kernel_integral(center: C64, radius: f64, theta0: f64, span: f64, k: C64) -> C64 {
    let za = center + C64::from_polar(radius, theta0);
    let zb = center + C64::from_polar(radius, theta0 + span);
    let mut total = arc_piece(center, radius, za - center, zb - center, span, k);
    total += segment_piece(zb, center, k);
    total += segment_piece(center, za, k);
    total / C64::new(0.0, 2.0)
}

fn segment_piece(a: C64, b: C64, k: C64) -> C64 {
    let d = b - a;
    let w0 = a - k;
    let w1 = b - k;
    let coeff = w0.conj() - d.conj() / d * w0;
    let scale = w0.norm().max(d.norm());
    if coeff.norm() <= 1e-14 * scale || w0.norm() == 0.0 || w1.norm() == 0.0 {
        return d.conj();
    }
    d.conj() + coeff * (w1 / w0).ln()
}

/// Integral of (R^2/zeta - conj(a)) / (zeta - a) along the arc from zeta0 to zeta1,
/// counterclockwise, where a = k - center.
fn arc_piece(center: C64, radius: f64, zeta0: C64, zeta1: C64, span: f64, k: C64) -> C64 {
    let a = k - center;
    let r2 = radius * radius;
    let l0 = C64::new(0.0, span);
    if a.norm() < 1e-7 * radius {
        // expansion of (R^2/a)(L(a) - L(0)) to second order in a
        let d1 = zeta0.inv() - zeta1.inv();
        let d2 = 0.5 * (zeta0.inv().powi(2) - zeta1.inv().powi(2));
        return r2 * (d1 + a * d2) - a.conj() * (l0 + a * d1);
    }
    let mut la = ((zeta1 - a) / (zeta0 - a)).ln();
    if a.norm() < radius {
        let chord = zeta0 - zeta1;
        let rel = a - zeta1;
        if chord.re * rel.im - chord.im * rel.re > 0.0 {
            la += C64::new(0.0, TAU);
        }
    }
    r2 / a * (la - l0) - a.conj() * la
}

/// Image of a half-disk grid under k -> 1/k.
///
/// `image_nodes[i] = 1/source.nodes[i]` lies in the exterior of the opposite
/// half-plane and `jacobian_weights[i] = source.weights[i] * |source.nodes[i]|^{-4}`,
/// so that the integral of F over the exterior equals the sum of
/// `jacobian_weights[i] * F(image_nodes[i])`.
#[derive(Debug, Clone)]
pub struct InversionImage {
    pub source: QuadratureGrid,
    pub region: Region,
    pub image_nodes: Vec<C64>,
    pub jacobian_weights: Vec<f64>,
}

impl InversionImage {
    pub fn integrate(&self, f: impl Fn(C64) -> C64) -> C64 {
        self.image_nodes
            .iter()
            .zip(&self.jacobian_weights)
            .map(|(&z, &w)| f(z) * w)
            .sum()
    }

    /// Inverts the image nodes back, recovering the source nodes.
    pub fn invert_nodes(&self) -> Vec<C64> {
        self.image_nodes.iter().map(|z| z.inv()).collect()
    }
}

pub fn invert_grid(grid: &QuadratureGrid) -> Result<InversionImage, GridError> {
    let side = grid
        .half_plane()
        .ok_or_else(|| GridError::NotHalfDisk(grid.region.name()))?;
    let image_nodes = grid.nodes.iter().map(|z| z.inv()).collect();
    let jacobian_weights = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(z, w)| w / z.norm_sqr().powi(2))
        .collect();
    Ok(InversionImage {
        source: grid.clone(),
        region: Region::exterior(side.opposite()),
        image_nodes,
        jacobian_weights,
    })
}

/// Integrates `f` over an exterior region at three successive radial
/// refinements and reports whether the values keep growing, the signature of
/// a non-integrable tail.
pub fn exterior_appears_divergent(
    side: HalfPlane,
    nr: usize,
    ntheta: usize,
    f: impl Fn(C64) -> C64,
) -> Result<bool, GridError> {
    let mut values = Vec::with_capacity(3);
    for level in 0..3 {
        let grid = QuadratureGrid::half_disk(side.opposite(), nr << level, ntheta)?;
        let image = invert_grid(&grid)?;
        values.push(image.integrate(&f).norm());
    }
    Ok(values[1] > 1.5 * values[0] && values[2] > 1.5 * values[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_kernel(grid_region: Region, k: C64, n: usize) -> C64 {
        let (x0, x1, y0, y1) = grid_region.bounding_box().unwrap();
        let hx = (x1 - x0) / n as f64;
        let ny = ((y1 - y0) / hx).round() as usize;
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..ny {
                let z = C64::new(x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hx);
                let inside = match grid_region {
                    Region::E1Plus => z.norm() < 1.0 && z.im > 0.0,
                    Region::E1Minus => z.norm() < 1.0 && z.im < 0.0,
                    _ => unreachable!(),
                };
                if inside && (z - k).norm() > 0.75 * hx {
                    s += hx * hx / (z - k);
                }
            }
        }
        s
    }

    #[test]
    fn tiny_half_disk_grid() {
        let g = QuadratureGrid::half_disk(HalfPlane::Plus, 2, 2).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.nodes.iter().all(|z| z.im > 0.0));
        let total: f64 = g.weights.iter().sum();
        assert!((total - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn lower_half_disk_area() {
        let g = QuadratureGrid::half_disk(HalfPlane::Minus, 64, 128).unwrap();
        let total: f64 = g.weights.iter().sum();
        assert!((total - PI / 2.0).abs() < 1e-12);
        assert!(g.nodes.iter().all(|z| z.im < 0.0 && z.norm() < 1.0));
    }

    #[test]
    fn nodes_strictly_inside() {
        let g = QuadratureGrid::half_disk(HalfPlane::Plus, 64, 128).unwrap();
        assert!(g
            .nodes
            .iter()
            .all(|z| z.norm() > 0.0 && z.norm() < 1.0 && z.im > 0.0));
        assert!(g.weights.iter().all(|&w| w > 0.0));
        assert_eq!(g.h, (1.0f64 / 64.0).max(PI / 128.0));
    }

    #[test]
    fn rejects_coarse_resolution() {
        assert!(matches!(
            QuadratureGrid::half_disk(HalfPlane::Plus, 1, 8),
            Err(GridError::ResolutionTooSmall { .. })
        ));
        assert!(QuadratureGrid::half_disk(HalfPlane::Minus, 8, 1).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(classify_point(C64::new(0.0, 0.5)), Region::E1Plus);
        assert_eq!(classify_point(C64::new(2.0, -1.0)), Region::E2Minus);
        assert_eq!(classify_point(C64::new(1.0, 0.0)), Region::E1Plus);
        assert_eq!(classify_point(C64::new(-0.3, -0.1)), Region::E1Minus);
        assert_eq!(classify_point(C64::new(-3.0, 0.0)), Region::E2Plus);
    }

    #[test]
    fn nearest_node_recovers_own_index() {
        let g = QuadratureGrid::half_disk(HalfPlane::Minus, 7, 13).unwrap();
        for (idx, &z) in g.nodes.iter().enumerate() {
            assert_eq!(g.nearest_node(z), idx);
        }
        let d = QuadratureGrid::disk(C64::new(0.2, -0.1), 0.7, 5, 11).unwrap();
        for (idx, &z) in d.nodes.iter().enumerate() {
            assert_eq!(d.nearest_node(z), idx);
        }
    }

    #[test]
    fn stencil_reproduces_node_values_and_linear_data() {
        let g = QuadratureGrid::half_disk(HalfPlane::Plus, 6, 10).unwrap();
        let vals: Vec<[C64; 1]> = g.nodes.iter().map(|z| [C64::new(z.norm(), 0.0)]).collect();
        let mean = [vals[..g.ntheta].iter().map(|v| v[0]).sum::<C64>() / g.ntheta as f64];
        for (idx, &z) in g.nodes.iter().enumerate() {
            let v = g.interpolation_stencil(z).apply(&vals, &mean)[0];
            assert!((v - vals[idx][0]).norm() < 1e-12);
        }
        // |k| is linear in the radial index: exact between rings
        let k = C64::from_polar(0.5, 1.0);
        let v = g.interpolation_stencil(k).apply(&vals, &mean)[0];
        assert!((v.re - 0.5).abs() < 1e-12);
        let w = g
            .interpolation_stencil(k)
            .terms
            .iter()
            .map(|t| t.1)
            .sum::<f64>();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stencil_is_continuous_at_the_centre_and_across_the_seam() {
        let g = QuadratureGrid::disk(C64::new(0.0, 0.0), 1.0, 4, 8).unwrap();
        let vals: Vec<[C64; 1]> = (0..g.len())
            .map(|i| [C64::new((i * 7 % 5) as f64, 0.0)])
            .collect();
        let mean = [vals[..8].iter().map(|v| v[0]).sum::<C64>() / 8.0];
        let at = |k: C64| g.interpolation_stencil(k).apply(&vals, &mean)[0];
        for th in [0.0, 1.0, 2.5, 4.0] {
            assert!((at(C64::from_polar(1e-12, th)) - mean[0]).norm() < 1e-9);
        }
        let a = at(C64::from_polar(0.6, -1e-12));
        let b = at(C64::from_polar(0.6, 1e-12));
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn nearest_node_clamps_outside_points() {
        let g = QuadratureGrid::half_disk(HalfPlane::Plus, 4, 8).unwrap();
        // below the real axis, just right of the origin: first angular cell
        let idx = g.nearest_node(C64::new(0.3, -0.01));
        assert_eq!(idx % 8, 0);
        let idx = g.nearest_node(C64::new(-0.3, -0.01));
        assert_eq!(idx % 8, 7);
        let idx = g.nearest_node(C64::new(0.0, 5.0));
        assert_eq!(idx / 8, 3);
    }

    #[test]
    fn half_disk_kernel_integrals_add_to_disk() {
        let pts = [
            C64::new(0.3, 0.2),
            C64::new(-0.5, -0.6),
            C64::new(0.0, 0.0),
            C64::new(0.7, 0.0),
            C64::new(1.5, -0.4),
            C64::new(-2.0, 3.0),
            C64::new(1e-9, 1e-9),
            C64::new(0.0, -0.999),
        ];
        for k in pts {
            let up = sector_kernel_integral(C64::new(0.0, 0.0), 1.0, 0.0, PI, k);
            let down = sector_kernel_integral(C64::new(0.0, 0.0), 1.0, PI, PI, k);
            let full = disk_kernel_integral(C64::new(0.0, 0.0), 1.0, k);
            assert!(
                (up + down - full).norm() < 1e-12,
                "k = {k}: {}",
                up + down - full
            );
        }
    }

    #[test]
    fn kernel_integral_at_origin() {
        let up = sector_kernel_integral(C64::new(0.0, 0.0), 1.0, 0.0, PI, C64::new(0.0, 0.0));
        assert!((up - C64::new(0.0, -2.0)).norm() < 1e-14);
    }

    #[test]
    fn kernel_integral_matches_brute_force() {
        for (region, k) in [
            (Region::E1Plus, C64::new(0.31, 0.47)),
            (Region::E1Plus, C64::new(0.2, -0.3)),
            (Region::E1Minus, C64::new(-0.55, -0.25)),
            (Region::E1Minus, C64::new(1.4, 0.6)),
        ] {
            let side = if region == Region::E1Plus {
                HalfPlane::Plus
            } else {
                HalfPlane::Minus
            };
            let g = QuadratureGrid::half_disk(side, 4, 4).unwrap();
            let exact = g.kernel_area_integral(k);
            let brute = brute_kernel(region, k, 1200);
            assert!(
                (exact - brute).norm() < 1e-2,
                "{region:?} {k}: {exact} vs {brute}"
            );
        }
    }

    #[test]
    fn inversion_is_an_involution() {
        let g = QuadratureGrid::half_disk(HalfPlane::Plus, 32, 64).unwrap();
        let img = invert_grid(&g).unwrap();
        assert_eq!(img.region, Region::E2Minus);
        for (a, b) in img.invert_nodes().iter().zip(&g.nodes) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(img.image_nodes.iter().all(|z| z.norm() > 1.0 && z.im < 0.0));
    }

    #[test]
    fn inverted_annulus_integral() {
        // |k|^{-4} on 1 <= |k| <= 2 in the upper half-plane becomes the
        // half annulus 1/2 <= |z| <= 1 with unit density
        let g = QuadratureGrid::half_disk(HalfPlane::Minus, 64, 64).unwrap();
        let img = invert_grid(&g).unwrap();
        let val = img.integrate(|k| {
            let r = k.norm();
            if r <= 2.0 {
                C64::new(r.powi(-4), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!((val.re - 3.0 * PI / 8.0).abs() < 1e-10);
        // direct quadrature of the same integral in polar coordinates
        let n = 4000;
        let dr = 1.0 / n as f64;
        let direct: f64 = (0..n)
            .map(|i| {
                let r = 1.0 + (i as f64 + 0.5) * dr;
                PI * r.powi(-3) * dr
            })
            .sum();
        assert!((direct - val.re).abs() < 1e-6);
    }

    #[test]
    fn constant_exterior_density_is_flagged() {
        let one = |_k: C64| C64::new(1.0, 0.0);
        assert!(exterior_appears_divergent(HalfPlane::Plus, 16, 32, one).unwrap());
        let decaying = |k: C64| C64::new(k.norm().powi(-4), 0.0);
        assert!(!exterior_appears_divergent(HalfPlane::Plus, 16, 32, decaying).unwrap());
    }

    #[test]
    fn invert_rejects_full_disk() {
        let d = QuadratureGrid::disk(C64::new(0.0, 0.0), 1.0, 4, 4).unwrap();
        assert!(invert_grid(&d).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn classify_is_total(re in -5.0f64..5.0, im in -5.0f64..5.0) {
                let k = C64::new(re, im);
                let tag = classify_point(k);
                let hits = [Region::E1Plus, Region::E1Minus, Region::E2Plus, Region::E2Minus]
                    .iter()
                    .filter(|r| r.contains(k))
                    .count();
                prop_assert_eq!(hits, 1);
                prop_assert!(tag.contains(k));
            }

            #[test]
            fn area_error_shrinks(nr in 2usize..40, nt in 2usize..40) {
                let g = QuadratureGrid::half_disk(HalfPlane::Plus, nr, nt).unwrap();
                let total: f64 = g.weights.iter().sum();
                prop_assert!((total - PI / 2.0).abs() <= 1e-12 + g.h * g.h);
            }

            #[test]
            fn sector_pieces_sum(re in -1.5f64..1.5, im in -1.5f64..1.5) {
                let k = C64::new(re, im);
                let c = C64::new(0.0, 0.0);
                let parts: C64 = (0..4)
                    .map(|q| sector_kernel_integral(c, 1.0, q as f64 * PI / 2.0, PI / 2.0, k))
                    .sum();
                prop_assert!((parts - disk_kernel_integral(c, 1.0, k)).norm() < 1e-10);
            }
        }
    }
}
