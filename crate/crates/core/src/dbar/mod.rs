//! The Dbar problem dpsi/dkbar = psi R for the AKNS spectral data and its
//! integral-equation form psi = I + psi R T_C.

pub mod data;
pub mod norm;
pub mod operator;
pub mod solve;

pub use data::{
    commutator, evolve_r, nilpotent_split, sigma3, sigma3_commutator, NilpotentPair, Profile,
    SpectralComponent, SpectralData,
};
pub use norm::{
    estimate_operator_norm, holder_of_extension, lp0_norm, HolderSampling, OperatorEstimate,
};
pub use operator::{Component, ComponentGrids, DbarOperator, EXP_SLACK};
pub use solve::{dbar_residual, solve_psi, Solution, SolverConfig};
