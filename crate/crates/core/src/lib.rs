//! Simulation and numerics for rarefied renewal processes.
//!
//! A rarefied process keeps the events of a point process at the indices
//! `beta(1) = xi(0)`, `beta(m + 1) = beta(m) + xi(beta(m))`. The modules cover
//! distribution plumbing ([`dist`]), renewal paths ([`renewal`]), the index
//! recursion and its probability bounds ([`raring`]), two renewal processes
//! marking each other ([`interaction`]), limit laws on a grid ([`limit`]) and
//! the seeded experiment harness ([`experiment`]).

pub mod dist;
pub mod experiment;
pub mod interaction;
pub mod limit;
pub mod raring;
pub mod renewal;
pub mod rng;
