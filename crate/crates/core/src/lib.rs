//! Radial solutions of `M±_{λ,Λ}(D²u) + u^p = 0`: shooting, critical exponents,
//! concentration of ball solutions and the identities they satisfy.

pub mod ball;
pub mod critical;
pub mod diagnostics;
pub mod emden_fowler;
pub mod error;
pub mod export;
pub mod integrator;
pub mod params;
pub mod quadrature;
pub mod radial_operator;

pub use ball::{derivative_limit_sweep, solve_ball, solve_ball_eps, solve_ball_eps_with, solve_ball_from, concentration_sweep, BallSolution, ConvergenceReport};
pub use critical::{critical_ordering_check, find_critical, find_critical_with, CriticalOptions, CriticalResult, CriticalStatus};
pub use emden_fowler::{classify, to_phase, PhaseTrajectory, ShotOutcome};
pub use error::{Error, Result};
pub use export::{to_json_string, write_json};
pub use integrator::{integrate, Integrator, RadialProfile, SolverOptions, StopCondition};
pub use params::{Bracket, ExponentConstants, OpSign, Params};
pub use radial_operator::OperatorModel;
