pub mod basis;
pub mod error;
pub mod field;
pub mod kernel;
pub mod rng;
pub mod torus;
pub mod dynamics;
pub mod observables;
pub mod galerkin;
pub mod wick;
pub mod stats;
pub mod experiment;
pub mod acceptance;
