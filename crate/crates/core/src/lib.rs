pub mod akns;
pub mod cauchy;
pub mod cli;
pub mod dbar;
pub mod error;
pub mod field;
pub mod geometry;
pub mod report;
pub mod spaces;
