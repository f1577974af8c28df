//! Distributed priority synthesis for systems of interacting components.

pub mod attractor;
pub mod bdd;
pub mod engine;
pub mod explicit;
pub mod fixer;
pub mod game;
pub mod generators;
pub mod model;
pub mod random;
pub mod refine;
pub mod sat;
