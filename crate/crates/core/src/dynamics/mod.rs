//! Evolution of the momentum system: right-hand sides, RK4 time stepping,
//! simulation driver and characteristic flows.

mod flow;
mod rhs;
mod state;
mod stepper;

pub use flow::{
    flow_integrate, speed_field, CubicSpline, FlowMap, FlowOptions, Interpolation,
    PeriodicInterpolant, SpeedHistory, SpeedKind, StateHistory, TrigInterpolant,
};
pub use rhs::{
    build_transport, rhs_componentwise, rhs_transport, RhsForm, Tendency, TransportForm,
};
pub use state::{make_reduction, NovikovState, Reduction};
pub use stepper::{
    resume_simulation, run_simulation, step_rk4, Observer, SimConfig, SimulationReport,
    StepOutcome, Termination,
};
