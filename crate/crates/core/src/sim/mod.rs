//! Fixed-step method-of-steps simulation of delay systems.
//!
//! [`integrate`] runs classical RK4 on a uniform grid. Past values come from
//! the history before `t0`, linear interpolation on the grid afterwards, and
//! two-point extrapolation when a delayed argument falls inside the step
//! being computed (locally first order). Distributed terms use the trapezoid
//! rule on the grid restricted to the integration window.

mod analysis;
mod integrator;
mod systems;

pub use analysis::{
    check_forcing_property, coppel_check, estimate_decay, CoppelCheck, DecayEstimate, ForcingCheck, ForcingProperty,
    BOUNDED_RATIO, COPPEL_TOL, LOG_CLIP, MIN_FIT_POINTS, VANISHING_RATIO,
};
pub use integrator::{integrate, DelaySystem, History, Past, Trajectory, BLOWUP_NORM};
pub use systems::{
    reduced_history, reduced_system, simulate_second_order, Coefficient, Delay, Forcing, KernelTerm, LinearDelaySystem,
    PointTerm, SecondOrderSystem,
};
