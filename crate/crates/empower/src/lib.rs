//! Multi-agent empowerment through Gaussian interference channels.
//!
//! Each agent's influence over its own sensed future is scored as the
//! capacity of a power-constrained linear Gaussian channel; coupled agents
//! see each other's probing as structured interference, and the joint probing
//! covariances are the Nash equilibrium of that game, computed by iterative
//! water-filling. On top of the solver sit two reference environments
//! (tendon-linked pendulums and a controllable alignment flock), empowerment
//! -maximizing control policies, and a batch experiment harness with a CLI.
//!
//! The guide in `book/` walks through the concepts chapter by chapter; the
//! code snippets there mirror the doc-tests on the public entry points:
//!
//! * [`channel::waterfill`] / [`channel::capacity`] — single-user kernel
//! * [`game::solve_game`] — N-agent iterative water-filling
//! * [`linearize::sensitivity`] — finite-difference block Jacobians
//! * [`control::run_episode`] — the online control loop
//! * [`harness`] — sweeps, flock studies, file outputs

pub mod channel;
pub mod control;
pub mod env;
pub mod error;
pub mod game;
pub mod harness;
pub mod linearize;
pub mod rng;

pub use error::{Error, Result};
