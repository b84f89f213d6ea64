//! Turn-based social media simulation with persona-driven LLM agents.
//!
//! The crate is organised bottom-up: [`retrieval`] and [`platform`] are
//! pure data structures, [`persona`], [`planning`] and [`agent`] implement
//! agent behaviour on top of a [`llm::ChatBackend`], [`sim`] runs the
//! two-stage experiment and [`eval`] computes metrics over its outputs.

pub mod agent;
pub mod clock;
pub mod config;
pub mod eval;
pub mod events;
pub mod exec;
pub mod llm;
pub mod persona;
pub mod planning;
pub mod platform;
pub mod retrieval;
pub mod sim;
pub mod text;
