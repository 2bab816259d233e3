//! SU(2) lattice gauge fields on a periodic 4D lattice: the Yang-Mills and
//! Yang-Mills-α functionals, their gradient flows, Landau gauge fixing, and
//! blow-up/bubble analysis with an energy-identity ledger.

pub mod action;
pub mod bubble;
pub mod cli_io;
pub mod fields;
pub mod flow;
pub mod gaugefix;
pub mod geometry;
pub mod util;

pub use action::{el_residual, topological_charge, ym_action, ym_alpha_action, ym_alpha_force};
pub use fields::{clover_field_strength, energy_density, LinkField};
pub use geometry::{AlgebraElement, GroupElement, LatticeGeometry};
