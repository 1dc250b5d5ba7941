pub mod checks;
pub mod dimension;
pub mod engine;
pub mod geometry;
pub mod rational;
pub mod strategies;
pub mod targets;
pub mod unfolding;
