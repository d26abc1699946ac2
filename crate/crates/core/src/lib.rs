//! Optimal mass transportation on the flat torus Ω = ℝⁿ/ℤⁿ under a
//! prescribed pressure field P(x,t).
//!
//! The library is organised around the mechanical Lagrangian
//! L(v,x,t) = |v|²/2 + P(x,t) and its action
//!
//!   J_P(x,y,t₁,t₂) = inf ∫ [ |ẋ|²/2 + P(x̄(t),t) ] dt
//!
//! over orbits joining (x,t₁) to (y,t₂). On top of the action sit
//!
//! * Hopf-Lax forward/backward solutions of φ_t + |∇φ|²/2 = P and
//!   reversible pairs with their reversibility set K₀,
//! * the Kantorovich transport problem with cost J_P, its dual
//!   potentials, and the duality gap against the Euler value,
//! * the optimal velocity field v = ∇ψ on K₀, its Lipschitz
//!   extension and the induced flow maps,
//! * kinetic norms of measure-valued orbits (H₂ norms, Rayleigh
//!   lower bounds, mollified tubes, the ε-regularised dual).
//!
//! Everything is deterministic: all randomised pieces (jittered
//! restarts, random seeds) run on counter-seeded ChaCha streams.

pub mod action;
pub mod error;
pub mod flow;
pub mod hj;
pub mod norm;
pub mod pressure;
pub mod torus;
pub mod transport;

mod interp;
mod lp;

pub use error::{Error, Result};
pub use torus::{Grid, LiftedPoint, TorusPoint};
