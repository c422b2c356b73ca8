//! Guided-mode coupling, photon budgets and van der Waals excitation spectra
//! for cold atoms around an optical nanofiber.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod budget;
pub mod cli;
pub mod constants;
pub mod coupling;
pub mod detection;
pub mod fiber;
pub mod qm1d;
pub mod quadrature;
pub mod spectrum;
pub mod vdw;
