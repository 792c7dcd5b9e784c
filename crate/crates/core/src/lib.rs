//! Proxy collision detection for planar robot arms.
//!
//! A kernel perceptron is trained over a fixed set of configuration-space
//! samples labeled by a kinematic collision checker (forward kinematics plus
//! GJK). When obstacles move, an active-learning step picks a small subset of
//! samples to relabel, and the perceptron is corrected in place without
//! retraining from scratch. The learned model then answers collision queries
//! much faster than the kinematic checker.
//!
//! Modules, bottom-up:
//!
//! - [`geometry`]: convex polygons, GJK, SAT, forward kinematics.
//! - [`kcd`]: the kinematic collision checker used as ground truth.
//! - [`dataset`]: configuration samples, Gaussian kernel, Gram matrix.
//! - [`fastron`]: the perceptron model, its update rule and classifier.
//! - [`active_learning`]: relabel-set selection and the update cycle.
//! - [`planner`]: RRT with a pluggable collision checker.
//! - [`bench`]: scenarios, metrics, and the benchmark drivers.

// `!(x > 0.0)` style checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active_learning;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod fastron;
pub mod geometry;
pub mod kcd;
pub mod planner;

pub use error::{Error, Result};
