//! Scalar and 2x2-matrix samples attached to a quadrature grid.

use std::sync::Arc;

use nalgebra::Matrix2;

use crate::error::NormError;
use crate::geometry::{QuadratureGrid, C64};

pub type Mat2 = Matrix2<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity() -> Mat2 {
    Mat2::identity()
}

/// Pointwise values that carry a norm: complex modulus for scalars and the
/// Frobenius norm for matrices.
pub trait FieldValue: Copy + Send + Sync + 'static {
    fn pointwise_norm(&self) -> f64;
    fn distance(&self, other: &Self) -> f64;
    fn is_finite(&self) -> bool;
    fn scaled(&self, s: C64) -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn zero() -> Self;
}

impl FieldValue for C64 {
    fn pointwise_norm(&self) -> f64 {
        self.norm()
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn scaled(&self, s: C64) -> Self {
        self * s
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
}

impl FieldValue for Mat2 {
    fn pointwise_norm(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).pointwise_norm()
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
    fn scaled(&self, s: C64) -> Self {
        self * s
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn zero() -> Self {
        Mat2::zeros()
    }
}

/// Values of a function at the nodes of one grid.
#[derive(Debug, Clone)]
pub struct Field<T> {
    pub grid: Arc<QuadratureGrid>,
    pub values: Vec<T>,
}

pub type ScalarField = Field<C64>;
pub type MatrixField = Field<Mat2>;

impl<T: FieldValue> Field<T> {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<T>) -> Result<Self, NormError> {
        assert_eq!(
            grid.len(),
            values.len(),
            "field length must match the grid node count"
        );
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(NormError::NonFinite {
                node,
                modulus: grid.nodes[node].norm(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<QuadratureGrid>, f: impl Fn(C64) -> T) -> Result<Self, NormError> {
        let values = grid.nodes.iter().map(|&z| f(z)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<QuadratureGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![T::zero(); n],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.pointwise_norm())
            .fold(0.0, f64::max)
    }
}
