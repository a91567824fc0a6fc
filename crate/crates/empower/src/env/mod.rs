//! Reference environments: tendon-linked pendulums, a controllable
//! alignment flock, and a linear system for checking the linearization
//! machinery against closed forms.

pub mod flock;
pub mod linear;
pub mod pendulum;

pub use flock::{
    circular_mean, flock_step, heading_histogram, min_image, order_parameter, FlockConfig,
    FlockEnv, HeadingHistogram,
};
pub use linear::LinearEnv;
pub use pendulum::{
    classify_outcome, mechanical_energy, pendulum_step, wrap_angle, OutcomeLabel, PendulumConfig,
    PendulumEnv,
};
