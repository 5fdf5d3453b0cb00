use serde::{Deserialize, Serialize};

use crate::blowup::{Flag, MonitorSeries};
use crate::dynamics::rhs::{tendency_raw, RhsForm};
use crate::dynamics::state::NovikovState;
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;

/// Time-stepping and monitoring parameters of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    /// Absolute end time.
    pub t_end: f64,
    /// Evaluate nonlinear products on the zero-padded grid.
    pub dealias: bool,
    /// Steps between monitor samples and observer calls.
    pub monitor_stride: usize,
    /// Runs stop with a blow-up verdict once `max ‖m_i‖_∞, ‖n_i‖_∞` exceeds this.
    pub blowup_linf_cap: f64,
    /// Courant number used by the advective step-size warning.
    pub cfl: f64,
    #[serde(skip)]
    pub form: RhsForm,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            dealias: true,
            monitor_stride: 10,
            blowup_linf_cap: 1e6,
            cfl: 1.0,
            form: RhsForm::Componentwise,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.monitor_stride = stride;
        self
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.blowup_linf_cap = cap;
        self
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    /// Checks the configuration against an initial state.
    pub fn validate(&self, s0: &NovikovState) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if self.dt >= self.t_end {
            return bad(format!(
                "dt = {} must be below t_end = {}",
                self.dt, self.t_end
            ));
        }
        if self.monitor_stride == 0 {
            return bad("monitor_stride must be at least 1".into());
        }
        if !(self.blowup_linf_cap > s0.linf_max()) {
            return bad(format!(
                "blowup_linf_cap = {} must exceed the initial L∞ = {}",
                self.blowup_linf_cap,
                s0.linf_max()
            ));
        }
        Ok(())
    }
}

/// Result of a single step.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    Advanced(NovikovState),
    /// The new state exceeded the L∞ cap. It is still finite and is returned
    /// as the last state of the run.
    BlowupSuspected(NovikovState),
}

impl StepOutcome {
    pub fn state(&self) -> &NovikovState {
        match self {
            StepOutcome::Advanced(s) | StepOutcome::BlowupSuspected(s) => s,
        }
    }

    pub fn into_state(self) -> NovikovState {
        match self {
            StepOutcome::Advanced(s) | StepOutcome::BlowupSuspected(s) => s,
        }
    }
}

fn axpy(y: &[Vec<f64>], h: f64, k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    y.iter()
        .zip(k)
        .map(|(y, k)| y.iter().zip(k).map(|(a, b)| a + h * b).collect())
        .collect()
}

/// Classical RK4 on raw fields. Returns the new fields and `max |a|` of the
/// first stage.
pub(crate) fn rk4_raw(
    grid: &PeriodicGrid,
    y: &[Vec<f64>],
    dt: f64,
    form: RhsForm,
    dealias: bool,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let (k1, speed) = tendency_raw(grid, y, form, dealias)?;
    let (k2, _) = tendency_raw(grid, &axpy(y, 0.5 * dt, &k1), form, dealias)?;
    let (k3, _) = tendency_raw(grid, &axpy(y, 0.5 * dt, &k2), form, dealias)?;
    let (k4, _) = tendency_raw(grid, &axpy(y, dt, &k3), form, dealias)?;
    let out = y
        .iter()
        .enumerate()
        .map(|(c, y)| {
            (0..y.len())
                .map(|p| y[p] + dt / 6.0 * (k1[c][p] + 2.0 * k2[c][p] + 2.0 * k3[c][p] + k4[c][p]))
                .collect()
        })
        .collect();
    Ok((out, speed))
}

fn check_cfl(grid: &PeriodicGrid, dt: f64, cfl: f64, speed: f64) -> bool {
    let limit = cfl * grid.spacing() / speed;
    if speed > 0.0 && dt > limit {
        log::warn!("dt = {dt:.3e} exceeds the advective limit {limit:.3e} (max |a| = {speed:.3e})");
        false
    } else {
        true
    }
}

fn advance(s: &NovikovState, dt: f64, time: f64, cfg: &SimConfig) -> Result<(NovikovState, f64)> {
    let (raw, speed) = rk4_raw(s.grid(), &s.raw_fields(), dt, cfg.form, cfg.dealias)?;
    let next = NovikovState::from_raw(s.grid(), raw, time, s.reduction());
    if !next.is_finite() {
        return Err(Error::NanInTendency {
            component: next.momenta().position(|f| !f.is_finite()).unwrap_or(0),
        });
    }
    Ok((next, speed))
}

/// Advances `s` by one step of size `cfg.dt`.
pub fn step_rk4(s: &NovikovState, cfg: &SimConfig) -> Result<StepOutcome> {
    let (next, speed) = advance(s, cfg.dt, s.time() + cfg.dt, cfg)?;
    check_cfl(s.grid(), cfg.dt, cfg.cfl, speed);
    if next.linf_max() > cfg.blowup_linf_cap {
        Ok(StepOutcome::BlowupSuspected(next))
    } else {
        Ok(StepOutcome::Advanced(next))
    }
}

/// Read-only hook invoked on every monitor sample.
pub trait Observer {
    fn name(&self) -> &str {
        "observer"
    }

    fn observe(
        &mut self,
        state: &NovikovState,
    ) -> Result<(), Box<dyn std::error::Error + Send + Sync>>;
}

impl<F> Observer for F
where
    F: FnMut(&NovikovState) -> Result<(), Box<dyn std::error::Error + Send + Sync>>,
{
    fn observe(
        &mut self,
        state: &NovikovState,
    ) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
        self(state)
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    TEnd,
    BlowupSuspected { time: f64, linf: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::TEnd => "t_end",
            Termination::BlowupSuspected { .. } => "blowup_suspected",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub termination: Termination,
    pub final_state: NovikovState,
    pub series: MonitorSeries,
    pub steps: usize,
}

fn sample(
    state: &NovikovState,
    series: &mut MonitorSeries,
    observers: &mut [&mut dyn Observer],
) -> Result<()> {
    series.record(state)?;
    for obs in observers.iter_mut() {
        obs.observe(state).map_err(|e| Error::Observer {
            name: obs.name().to_string(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}

/// Integrates from `s0` to `cfg.t_end`, sampling monitors and observers
/// every `cfg.monitor_stride` steps.
pub fn run_simulation(
    s0: NovikovState,
    cfg: &SimConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<SimulationReport> {
    let series = MonitorSeries::for_state(&s0);
    resume_simulation(s0, cfg, observers, series)
}

/// Continues a run, appending to an existing monitor series. If the series
/// already ends at `s0.time()` the initial sample is not repeated.
pub fn resume_simulation(
    s0: NovikovState,
    cfg: &SimConfig,
    observers: &mut [&mut dyn Observer],
    mut series: MonitorSeries,
) -> Result<SimulationReport> {
    cfg.validate(&s0)?;
    let t0 = s0.time();
    if cfg.t_end <= t0 {
        return Err(Error::InvalidConfig(format!(
            "t_end = {} is not after t = {t0}",
            cfg.t_end
        )));
    }
    if series.last_time() != Some(t0) {
        sample(&s0, &mut series, observers)?;
    }
    let steps = ((cfg.t_end - t0) / cfg.dt - 1e-9).ceil() as usize;
    let mut state = s0;
    let mut warned = false;
    for k in 1..=steps {
        let (h, time) = if k == steps {
            (cfg.t_end - (t0 + (k - 1) as f64 * cfg.dt), cfg.t_end)
        } else {
            (cfg.dt, t0 + k as f64 * cfg.dt)
        };
        let (next, speed) = advance(&state, h, time, cfg)?;
        if !warned {
            warned = !check_cfl(state.grid(), h, cfg.cfl, speed);
        }
        state = next;
        let linf = state.linf_max();
        if linf > cfg.blowup_linf_cap {
            sample(&state, &mut series, observers)?;
            series.flags.insert(Flag::LinfCap);
            return Ok(SimulationReport {
                termination: Termination::BlowupSuspected { time, linf },
                final_state: state,
                series,
                steps: k,
            });
        }
        if k % cfg.monitor_stride == 0 {
            sample(&state, &mut series, observers)?;
        }
    }
    Ok(SimulationReport {
        termination: Termination::TEnd,
        final_state: state,
        series,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::state::{make_reduction, Reduction};

    fn gx_bumps(n: usize) -> NovikovState {
        let g = PeriodicGrid::new(n, 20.0).unwrap();
        let m = g.sample(|x| (-(x - 8.0).powi(2)).exp());
        let nn = g.sample(|x| 0.7 * (-(x - 11.0).powi(2) / 2.0).exp());
        make_reduction(Reduction::GengXue, m, nn).unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = PeriodicGrid::new(32, 10.0).unwrap();
        let s = NovikovState::zeros(&g, 2);
        let cfg = SimConfig::new(0.01, 1.0);
        let out = step_rk4(&s, &cfg).unwrap();
        assert!(matches!(out, StepOutcome::Advanced(_)));
        let next = out.into_state();
        assert_eq!(next.linf_max(), 0.0);
        assert!((next.time() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn run_samples_every_stride() {
        let s = gx_bumps(64);
        let cfg = SimConfig::new(0.01, 0.5).with_stride(7);
        let mut count = 0usize;
        let mut obs = |_: &NovikovState| -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
            count += 1;
            Ok(())
        };
        let report = run_simulation(s, &cfg, &mut [&mut obs]).unwrap();
        assert_eq!(report.steps, 50);
        assert_eq!(report.series.len(), 50 / 7 + 1);
        assert_eq!(count, 50 / 7 + 1);
        assert_eq!(report.termination, Termination::TEnd);
        assert!((report.final_state.time() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_data_runs_to_end() {
        let g = PeriodicGrid::new(16, 10.0).unwrap();
        let cfg = SimConfig::new(0.1, 1.0).with_stride(2);
        let report = run_simulation(NovikovState::zeros(&g, 1), &cfg, &mut []).unwrap();
        assert_eq!(report.termination, Termination::TEnd);
        assert_eq!(report.series.len(), 6);
    }

    #[test]
    fn failing_observer_aborts_with_name() {
        struct Picky;
        impl Observer for Picky {
            fn name(&self) -> &str {
                "picky"
            }
            fn observe(
                &mut self,
                s: &NovikovState,
            ) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
                if s.time() > 0.05 {
                    Err("too late".into())
                } else {
                    Ok(())
                }
            }
        }
        let cfg = SimConfig::new(0.01, 0.2).with_stride(2);
        let err = run_simulation(gx_bumps(32), &cfg, &mut [&mut Picky]).unwrap_err();
        assert!(
            matches!(err, Error::Observer { ref name, .. } if name == "picky"),
            "{err}"
        );
    }

    #[test]
    fn cap_is_a_normal_termination() {
        let s = gx_bumps(64);
        let cap = s.linf_max() * 1.0000001;
        let cfg = SimConfig::new(0.01, 5.0).with_cap(cap);
        let report = run_simulation(s, &cfg, &mut []).unwrap();
        // Nonnegative GX bumps amplify somewhere within a few steps.
        assert!(matches!(
            report.termination,
            Termination::BlowupSuspected { .. }
        ));
        assert!(report.series.flags.contains(&Flag::LinfCap));
        assert!(report.final_state.is_finite());
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let s = gx_bumps(32);
        assert!(SimConfig::new(0.0, 1.0).validate(&s).is_err());
        assert!(SimConfig::new(2.0, 1.0).validate(&s).is_err());
        assert!(SimConfig::new(0.1, 1.0)
            .with_stride(0)
            .validate(&s)
            .is_err());
        assert!(SimConfig::new(0.1, 1.0).with_cap(0.5).validate(&s).is_err());
    }
}
