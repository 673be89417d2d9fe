//! Fault-tolerant integrated vehicle stability control.
//!
//! The crate is `no_std` (it needs `alloc`) and contains the numerical core:
//!
//! - [`plant`]: 14-DOF nonlinear vehicle model and RK4 integrator.
//! - [`linear`]: linearized time-varying model and the effectiveness
//!   factorization used by the allocator.
//! - [`controllers`]: virtual control generation and the baseline controller.
//! - [`allocator`]: adaptive control allocation with parameter projection.
//! - [`sim`]: scenarios, fault injection, closed-loop runs, metrics and the
//!   linear closed-loop stability check.
#![no_std]

extern crate alloc;

mod error;
pub mod params;
pub mod allocator;
pub mod controllers;
pub mod linear;
pub mod plant;
pub mod sim;

pub use error::{Error, Result};
pub use nalgebra;
pub use params::VehicleParams;
