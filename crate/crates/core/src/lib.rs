//! Fractal interpolation functions on self-similar domains.
//!
//! The crate builds the iterated function system of an interval, an
//! m-dimensional cube or the Sierpiński gasket, constructs the fractal
//! interpolation function `f*` defined by scale functions `s_i` and
//! displacements `q_i`, and bounds the box dimension of its graph both from
//! the scale data and by box counting.

pub mod dimension;
pub mod expr;
pub mod fif;
pub mod ifs;
pub mod oscillation;
pub mod region;

#[cfg(test)]
mod testkit;

pub use expr::{parse_expr, Expr, Holder, ShapeFacts};
pub use region::{Bracket, Point, Region};
