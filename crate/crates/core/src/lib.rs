//! Linear precoders for massive MIMO downlinks that minimize power-amplifier
//! consumption rather than radiated power.
//!
//! Under a class-B efficiency law each PA draws power proportional to the
//! square root of its output power, so total consumption is the L2,1 norm of
//! the precoding matrix. This crate provides the closed-form conventional and
//! efficient precoders, an ADMM solver for the group-sparse programs that
//! have no closed form, and a seeded Monte Carlo harness for the
//! power-consumption-gain experiments.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod convex;
pub mod error;
pub mod harness;
pub mod model;
pub mod power;
pub mod problems;

pub use error::{Error, Result};
