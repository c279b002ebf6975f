//! Generalized U-statistics over finite discrete laws: exact enumeration,
//! bound parameters, a registry of moment and tail inequalities with exact
//! and fitted constants, and a seeded Monte-Carlo engine.

pub mod bounds;
pub mod cli;
pub mod mc;
pub mod exact;
pub mod model;
pub mod numeric;
pub mod par;
pub mod suite;
