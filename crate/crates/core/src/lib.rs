pub mod boundary;
pub mod cli;
pub mod fieldmc;
pub mod geometry;
pub mod greens;
pub mod quad;
pub mod tessellation;
