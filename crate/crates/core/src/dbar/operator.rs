//! The decomposed operator psi -> psi R T_C on the four component node sets.
//!
//! Nodes are stored in the order [E1+, E1-, E2+, E2-], `n` nodes each. The
//! exterior sets are inversions of the half disks: E2+ = 1/E1- and
//! E2- = 1/E1+ node for node, so node `c*n + i` and node `(3-c)*n + i` are
//! reciprocals of each other.
//!
//! A half-plane transform is split into its interior half disk and the
//! inverted exterior,
//!
//!   T_{C^s} F(k) = T_{E1^s} F(k) + T_{E1^-s} G(0) - T_{E1^-s} G(1/k),
//!   G(z) = F(1/z) / conj(z)^2,
//!
//! so only two Cauchy plans are needed, one per half disk. All nodes of the
//! four sets lie on rings sharing one angular lattice, which the plans use.

use std::sync::Arc;

use rayon::prelude::*;

use super::data::{evolve_r, SpectralData};
use crate::cauchy::lattice::{RingKernels, RingPlan, TargetRing};
use crate::cauchy::CauchyPlan;
use crate::error::{DbarError, GridError};
use crate::field::{FieldValue, Mat2};
use crate::geometry::{invert_grid, HalfPlane, QuadratureGrid, C64};

/// Allowed excess of an active exponential factor over 1.
pub const EXP_SLACK: f64 = 1e-12;

/// Index of each component in the node order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    E1Plus = 0,
    E1Minus = 1,
    E2Plus = 2,
    E2Minus = 3,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::E1Plus,
        Component::E1Minus,
        Component::E2Plus,
        Component::E2Minus,
    ];

    pub fn half_plane(self) -> HalfPlane {
        match self {
            Component::E1Plus | Component::E2Plus => HalfPlane::Plus,
            _ => HalfPlane::Minus,
        }
    }

    pub fn interior(side: HalfPlane) -> Self {
        match side {
            HalfPlane::Plus => Component::E1Plus,
            HalfPlane::Minus => Component::E1Minus,
        }
    }

    pub fn exterior(side: HalfPlane) -> Self {
        match side {
            HalfPlane::Plus => Component::E2Plus,
            HalfPlane::Minus => Component::E2Minus,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::E1Plus => "E1+",
            Component::E1Minus => "E1-",
            Component::E2Plus => "E2+",
            Component::E2Minus => "E2-",
        }
    }
}

/// Cauchy plans from one half disk to every node and to the origin.
#[derive(Debug)]
struct NodePlans {
    rings: RingPlan,
    origin: CauchyPlan,
}

/// The two half-disk grids, the combined node list with area weights and the
/// cached Cauchy plans targeting every node and the origin.
#[derive(Debug)]
pub struct ComponentGrids {
    pub plus: QuadratureGrid,
    pub minus: QuadratureGrid,
    pub nodes: Vec<C64>,
    /// Area weight of each node; on E2 these include the Jacobian |z|^{-4}.
    pub weights: Vec<f64>,
    n: usize,
    /// Position of each node in the ring-major target lattice of the plans.
    lattice: Vec<usize>,
    plan_plus: NodePlans,
    plan_minus: NodePlans,
}

impl ComponentGrids {
    pub fn new(nr: usize, ntheta: usize) -> Result<Self, GridError> {
        let plus = QuadratureGrid::half_disk(HalfPlane::Plus, nr, ntheta)?;
        let minus = QuadratureGrid::half_disk(HalfPlane::Minus, nr, ntheta)?;
        let e2_plus = invert_grid(&minus)?;
        let e2_minus = invert_grid(&plus)?;
        let n = plus.len();
        let mut nodes = Vec::with_capacity(4 * n);
        let mut weights = Vec::with_capacity(4 * n);
        nodes.extend_from_slice(&plus.nodes);
        nodes.extend_from_slice(&minus.nodes);
        nodes.extend_from_slice(&e2_plus.image_nodes);
        nodes.extend_from_slice(&e2_minus.image_nodes);
        weights.extend_from_slice(&plus.weights);
        weights.extend_from_slice(&minus.weights);
        weights.extend_from_slice(&e2_plus.jacobian_weights);
        weights.extend_from_slice(&e2_minus.jacobian_weights);
        // rings 0..nr hold E1+ then E1- at radius r_i; rings nr..2nr hold the
        // reciprocal rings, whose angles run backwards
        let (nr, nt) = (plus.nr, plus.ntheta);
        let len = 2 * nt;
        let mut lattice = vec![0; 4 * n];
        for i in 0..nr {
            for j in 0..nt {
                let s = i * nt + j;
                lattice[s] = i * len + j;
                lattice[n + s] = i * len + nt + j;
                lattice[2 * n + s] = (nr + i) * len + nt - 1 - j;
                lattice[3 * n + s] = (nr + i) * len + len - 1 - j;
            }
        }
        let mut rings: Vec<TargetRing> = (0..nr)
            .map(|i| TargetRing::new((i as f64 + 0.5) * plus.dr, 0.0))
            .collect();
        let inverted: Vec<TargetRing> = rings.iter().map(TargetRing::reciprocal).collect();
        rings.extend(inverted);
        let kernels = Arc::new(RingKernels::new(&plus, rings));
        let plans = |g: &QuadratureGrid| NodePlans {
            rings: RingPlan::new(g, kernels.clone()),
            origin: CauchyPlan::new(g, vec![C64::new(0.0, 0.0)]),
        };
        let (plan_plus, plan_minus) = rayon::join(|| plans(&plus), || plans(&minus));
        Ok(Self {
            plus,
            minus,
            nodes,
            weights,
            n,
            lattice,
            plan_plus,
            plan_minus,
        })
    }

    /// Nodes per component.
    pub fn per_component(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        4 * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nr(&self) -> usize {
        self.plus.nr
    }

    pub fn ntheta(&self) -> usize {
        self.plus.ntheta
    }

    pub fn h(&self) -> f64 {
        self.plus.h
    }

    /// Targets per ring of the angle lattice shared by all node sets.
    pub fn ring_len(&self) -> usize {
        2 * self.plus.ntheta
    }

    /// Ring and angle index of node t; rings nr..2nr are the reciprocal rings.
    pub fn lattice_position(&self, t: usize) -> (usize, usize) {
        (
            self.lattice[t] / self.ring_len(),
            self.lattice[t] % self.ring_len(),
        )
    }

    pub fn component_of(&self, t: usize) -> Component {
        Component::ALL[t / self.n]
    }

    /// Index of the node 1/nodes[t].
    pub fn reciprocal(&self, t: usize) -> usize {
        (3 - t / self.n) * self.n + t % self.n
    }

    pub fn range(&self, c: Component) -> std::ops::Range<usize> {
        let c = c as usize;
        c * self.n..(c + 1) * self.n
    }

    fn half_disk(&self, side: HalfPlane) -> &QuadratureGrid {
        match side {
            HalfPlane::Plus => &self.plus,
            HalfPlane::Minus => &self.minus,
        }
    }

    fn plan(&self, side: HalfPlane) -> &NodePlans {
        match side {
            HalfPlane::Plus => &self.plan_plus,
            HalfPlane::Minus => &self.plan_minus,
        }
    }

    /// -(1/pi) times the area integral over the whole plane of values sampled
    /// at the nodes.
    pub fn plane_moment<T: FieldValue>(&self, values: &[T], range: std::ops::Range<usize>) -> T {
        let mut acc = T::zero();
        for t in range {
            acc = acc.plus(&values[t].scaled(C64::new(self.weights[t], 0.0)));
        }
        acc.scaled(C64::new(-1.0 / std::f64::consts::PI, 0.0))
    }
}

/// psi R T_C at fixed x. Only the parts of R that the decomposition keeps are
/// stored: w_- on the half-plane where e^{2ikx} is bounded and w_+ on the
/// other one.
#[derive(Debug, Clone)]
pub struct DbarOperator {
    pub grids: Arc<ComponentGrids>,
    pub data: SpectralData,
    pub x: f64,
    /// Half-plane carrying w_-, which feeds the first column.
    pub lower_side: HalfPlane,
    /// Active R_21 at each node, zero off `lower_side`.
    pub w21: Vec<C64>,
    /// Active R_12 at each node, zero on `lower_side`.
    pub w12: Vec<C64>,
    /// Largest modulus of any exponential factor evaluated at an active node.
    pub max_exponential: f64,
    /// Every active entry is zero, so the operator is zero.
    vanishes: bool,
}

impl DbarOperator {
    pub fn new(grids: Arc<ComponentGrids>, data: &SpectralData, x: f64) -> Result<Self, DbarError> {
        if x == 0.0 || !x.is_finite() {
            return Err(DbarError::ZeroX);
        }
        let lower_side = if x > 0.0 {
            HalfPlane::Plus
        } else {
            HalfPlane::Minus
        };
        let zero = C64::new(0.0, 0.0);
        let mut w21 = vec![zero; grids.len()];
        let mut w12 = vec![zero; grids.len()];
        let mut max_exponential = 0.0f64;
        for (t, &k) in grids.nodes.iter().enumerate() {
            let (m, w) = active_entry(data, x, k, grids.component_of(t).half_plane() == lower_side);
            max_exponential = max_exponential.max(m);
            if grids.component_of(t).half_plane() == lower_side {
                w21[t] = w;
            } else {
                w12[t] = w;
            }
        }
        if max_exponential > 1.0 + EXP_SLACK {
            return Err(DbarError::UnboundedExponential {
                modulus: max_exponential,
            });
        }
        let vanishes = w21.iter().chain(&w12).all(|&w| w == zero);
        Ok(Self {
            grids,
            data: data.clone(),
            x,
            lower_side,
            w21,
            w12,
            max_exponential,
            vanishes,
        })
    }

    /// Active part of R at node t.
    pub fn r_active(&self, t: usize) -> Mat2 {
        let zero = C64::new(0.0, 0.0);
        Mat2::new(zero, self.w12[t], self.w21[t], zero)
    }

    /// Active part of R at an arbitrary point.
    pub fn r_active_at(&self, k: C64) -> Mat2 {
        let r = evolve_r(&self.data, self.x, k);
        let zero = C64::new(0.0, 0.0);
        if HalfPlane::of(k) == self.lower_side {
            Mat2::new(zero, zero, r[(1, 0)], zero)
        } else {
            Mat2::new(zero, r[(0, 1)], zero, zero)
        }
    }

    /// Half-plane whose transform produces column j of psi R T_C.
    fn column_side(&self, j: usize) -> HalfPlane {
        if j == 0 {
            self.lower_side
        } else {
            self.lower_side.opposite()
        }
    }

    /// Column j of psi R at node t: psi_{., 1-j} times the active R entry.
    fn density(&self, psi: &[Mat2], j: usize, t: usize) -> [C64; 2] {
        let (col, w) = if j == 0 {
            (1, self.w21[t])
        } else {
            (0, self.w12[t])
        };
        [psi[t][(0, col)] * w, psi[t][(1, col)] * w]
    }

    /// Densities on the half disk E1^s: the interior density of the column
    /// whose half-plane is s, then the inverted exterior density of the other
    /// column.
    fn half_disk_densities(&self, psi: &[Mat2], side: HalfPlane) -> Vec<[C64; 4]> {
        let g = &self.grids;
        let (j_in, j_out) = if self.column_side(0) == side {
            (0, 1)
        } else {
            (1, 0)
        };
        let range = g.range(Component::interior(side));
        let zeta_nodes = &g.half_disk(side).nodes;
        range
            .enumerate()
            .map(|(i, t)| {
                let a = self.density(psi, j_in, t);
                let b = self.density(psi, j_out, g.reciprocal(t));
                let z = zeta_nodes[i].conj();
                let s = (z * z).inv();
                [a[0], a[1], b[0] * s, b[1] * s]
            })
            .collect()
    }

    /// psi R T_C at every node.
    pub fn apply(&self, psi: &[Mat2]) -> Vec<Mat2> {
        let g = &self.grids;
        assert_eq!(psi.len(), g.len());
        if self.vanishes {
            return vec![Mat2::zeros(); g.len()];
        }
        let transform = |side: HalfPlane| {
            let grid = g.half_disk(side);
            let plans = g.plan(side);
            let d = self.half_disk_densities(psi, side);
            (plans.rings.apply(grid, &d), plans.origin.apply(grid, &d)[0])
        };
        let (up, down) = rayon::join(
            || transform(HalfPlane::Plus),
            || transform(HalfPlane::Minus),
        );
        let sums = |side: HalfPlane| match side {
            HalfPlane::Plus => &up,
            HalfPlane::Minus => &down,
        };
        (0..g.len())
            .into_par_iter()
            .map(|t| {
                let mut out = Mat2::zeros();
                for j in 0..2 {
                    let side = self.column_side(j);
                    let inner = &sums(side).0[g.lattice[t]];
                    let (outer, far) = sums(side.opposite());
                    let near = &outer[g.lattice[g.reciprocal(t)]];
                    for row in 0..2 {
                        out[(row, j)] = inner[row] + far[2 + row] - near[2 + row];
                    }
                }
                out
            })
            .collect()
    }

    /// psi R T_C at arbitrary points, using the node values of psi as the
    /// density. Targets on a node are rejected.
    pub fn apply_at(&self, psi: &[Mat2], targets: &[C64]) -> Result<Vec<Mat2>, DbarError> {
        let g = &self.grids;
        for &k in targets {
            if g.plus
                .nodes
                .iter()
                .chain(&g.minus.nodes)
                .any(|&z| (z - k).norm() < 1e-14)
            {
                return Err(DbarError::TargetOnNode { re: k.re, im: k.im });
            }
        }
        Ok(self.extend(psi, targets))
    }

    /// Nystrom extension of psi R T_C off the nodes, without the node check.
    pub(crate) fn extend(&self, psi: &[Mat2], targets: &[C64]) -> Vec<Mat2> {
        let g = &self.grids;
        let m = targets.len();
        if self.vanishes {
            return vec![Mat2::zeros(); m];
        }
        // targets, then their reciprocals, then the origin; 1/0 is never used
        let mut all = Vec::with_capacity(2 * m + 1);
        all.extend_from_slice(targets);
        all.extend(
            targets
                .iter()
                .map(|&k| if k == C64::new(0.0, 0.0) { k } else { k.inv() }),
        );
        all.push(C64::new(0.0, 0.0));
        let (up, down) = rayon::join(
            || {
                let d = self.half_disk_densities(psi, HalfPlane::Plus);
                CauchyPlan::new(&g.plus, all.clone()).apply(&g.plus, &d)
            },
            || {
                let d = self.half_disk_densities(psi, HalfPlane::Minus);
                CauchyPlan::new(&g.minus, all.clone()).apply(&g.minus, &d)
            },
        );
        let sums = |side: HalfPlane| match side {
            HalfPlane::Plus => &up,
            HalfPlane::Minus => &down,
        };
        (0..m)
            .map(|t| {
                let k = targets[t];
                let mut out = Mat2::zeros();
                for j in 0..2 {
                    let side = self.column_side(j);
                    let inner = &sums(side)[t];
                    let outer = sums(side.opposite());
                    let far = &outer[2 * m];
                    for row in 0..2 {
                        let near = if k == C64::new(0.0, 0.0) {
                            C64::new(0.0, 0.0)
                        } else {
                            outer[m + t][2 + row]
                        };
                        out[(row, j)] = inner[row] + far[2 + row] - near;
                    }
                }
                out
            })
            .collect()
    }

    /// psi R T_C on whole rings of targets sharing the node angle lattice,
    /// ring-major with [`ComponentGrids::ring_len`] targets per ring.
    pub fn extend_rings(&self, psi: &[Mat2], rings: &[TargetRing]) -> Vec<Mat2> {
        let g = &self.grids;
        let m = rings.len();
        let len = g.ring_len();
        if self.vanishes {
            return vec![Mat2::zeros(); m * len];
        }
        let mut all = rings.to_vec();
        all.extend(rings.iter().map(TargetRing::reciprocal));
        let kernels = Arc::new(RingKernels::new(&g.plus, all));
        let transform = |side: HalfPlane| {
            let grid = g.half_disk(side);
            let d = self.half_disk_densities(psi, side);
            let far = g.plan(side).origin.apply(grid, &d)[0];
            (RingPlan::new(grid, kernels.clone()).apply(grid, &d), far)
        };
        let (up, down) = rayon::join(
            || transform(HalfPlane::Plus),
            || transform(HalfPlane::Minus),
        );
        let sums = |side: HalfPlane| match side {
            HalfPlane::Plus => &up,
            HalfPlane::Minus => &down,
        };
        (0..m * len)
            .map(|t| {
                let (ring, l) = (t / len, t % len);
                let recip = (m + ring) * len + len - 1 - l;
                let mut out = Mat2::zeros();
                for j in 0..2 {
                    let side = self.column_side(j);
                    let inner = &sums(side).0[t];
                    let (outer, far) = sums(side.opposite());
                    for row in 0..2 {
                        out[(row, j)] = inner[row] + far[2 + row] - outer[recip][2 + row];
                    }
                }
                out
            })
            .collect()
    }

    /// Values of psi at off-node points: I + psi R T_C.
    pub fn psi_at(&self, psi: &[Mat2], targets: &[C64]) -> Vec<Mat2> {
        self.extend(psi, targets)
            .into_iter()
            .map(|m| m + Mat2::identity())
            .collect()
    }
}

/// Modulus of the exponential and the value of the active entry at k.
fn active_entry(data: &SpectralData, x: f64, k: C64, lower: bool) -> (f64, C64) {
    let e = if lower {
        (C64::new(0.0, 2.0) * k * x).exp()
    } else {
        (C64::new(0.0, -2.0) * k * x).exp()
    };
    let r = if lower {
        data.r_minus(k)
    } else {
        data.r_plus(k)
    };
    (e.norm(), r * e)
}
