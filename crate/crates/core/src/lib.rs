//! Composition toolkit for finite-dimensional passive linear systems.
//!
//! Systems are certified passive by matrix inequalities and moved between
//! port representations by closed-form transforms. Redheffer star products
//! couple them, with an ε-shift when the loop would otherwise be singular.
//! Two worked pipelines sit on top: a Butterworth π-ladder and an acoustic
//! waveguide terminated by a rational radiation-impedance model.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod feedback;
pub mod io;
pub mod linalg;
pub mod loewner;
pub mod passivity;
pub mod pipelines;
pub mod quadrature;
pub mod secondorder;
pub mod simulate;
pub mod special;
pub mod system;
pub mod transforms;
pub mod websterfem;
pub mod xprec;

pub use error::{Error, Result};
pub use system::{DiscreteSystem, PortSignalFrame, StateSpaceSystem};
