//! Desk-scale numerics for nuclearity criteria, quantum energy inequalities
//! and negative-energy states of towers of free scalar fields.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distal;
pub mod error;
pub mod legendre;
pub mod negstate;
pub mod qei;
pub mod quad;
pub mod testfn;
pub mod tower;

pub use error::{LabError, Result};
