//! Numerical toolkit for a transmission problem between an elastic medium and a
//! viscoelastic medium with localized memory damping.

pub mod fixtures;
pub mod gcc;
pub mod geometry;
pub mod kernel;
pub mod observability;
pub mod rays;
pub mod solver;
