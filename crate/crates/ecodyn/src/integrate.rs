//! Fixed-step and adaptive integration of model vector fields, with
//! conserved-quantity monitoring.
//!
//! Accepted states are checked against the field's admissible domain;
//! leaving it is an error that names the exit time and coordinate, never a
//! silent clamp. Hamiltonian monitors are evaluated at every recorded
//! sample and their series travel with the trajectory.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::models::Trajectory;
use crate::poisson::{HamiltonianFn, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// First-order explicit Euler. Shipped as a convergence baseline.
    Euler,
    /// Classic fourth-order Runge-Kutta with a fixed step.
    Rk4,
    /// Runge-Kutta-Fehlberg 4(5) with adaptive step control, advancing on
    /// the fifth-order solution.
    Rkf45,
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for Euler/RK4, initial step for RKF45.
    pub h: f64,
    pub t_span: (f64, f64),
    /// Record every k-th accepted step (the initial and final states are
    /// always recorded).
    pub record_every: usize,
    /// Relative error tolerance (RKF45 only).
    pub rel_tol: f64,
    /// Absolute error tolerance (RKF45 only).
    pub abs_tol: f64,
    /// Smallest step RKF45 may take before reporting underflow.
    pub h_min: f64,
    /// Largest step RKF45 may take.
    pub h_max: f64,
}

impl IntegratorConfig {
    pub fn rk4(h: f64, t_span: (f64, f64)) -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            h,
            t_span,
            record_every: 1,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h_min: 1e-12,
            h_max: f64::INFINITY,
        }
    }

    pub fn euler(h: f64, t_span: (f64, f64)) -> Self {
        IntegratorConfig {
            method: Method::Euler,
            ..IntegratorConfig::rk4(h, t_span)
        }
    }

    pub fn rkf45(h_init: f64, t_span: (f64, f64)) -> Self {
        IntegratorConfig {
            method: Method::Rkf45,
            h: h_init,
            t_span,
            record_every: 1,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h_min: 1e-12,
            h_max: (t_span.1 - t_span.0).abs(),
        }
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_step_bounds(mut self, h_min: f64, h_max: f64) -> Self {
        self.h_min = h_min;
        self.h_max = h_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::config("integrator.h", "step must be positive and finite"));
        }
        if !(self.t_span.0 < self.t_span.1) {
            return Err(Error::config(
                "integrator.t_span",
                format!("need t0 < t1, got [{}, {}]", self.t_span.0, self.t_span.1),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::config("integrator.record_every", "must be at least 1"));
        }
        if self.method == Method::Rkf45 {
            if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
                return Err(Error::config(
                    "integrator.tolerances",
                    "rel_tol and abs_tol must be positive",
                ));
            }
            if !(self.h_min > 0.0) || !(self.h_min <= self.h_max) {
                return Err(Error::config(
                    "integrator.step_bounds",
                    "need 0 < h_min <= h_max",
                ));
            }
        }
        Ok(())
    }
}

/// Integrate `field` from `x0` over the configured span, recording monitor
/// values at every sample.
///
/// Errors: initial state or any accepted state outside the field's domain
/// (with the exit time and coordinate), non-finite states, and adaptive
/// step underflow.
pub fn integrate(
    field: &VectorField,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
    monitors: &[&HamiltonianFn],
) -> Result<Trajectory> {
    cfg.validate()?;
    field.domain().check(x0)?;
    for m in monitors {
        if m.dim() != field.dim() {
            return Err(Error::DimensionMismatch {
                expected: field.dim(),
                got: m.dim(),
            });
        }
    }

    let mut recorder = Recorder::new(monitors);
    recorder.push(cfg.t_span.0, x0.clone())?;

    match cfg.method {
        Method::Euler | Method::Rk4 => fixed_step_loop(field, x0, cfg, &mut recorder)?,
        Method::Rkf45 => adaptive_loop(field, x0, cfg, &mut recorder)?,
    }

    recorder.into_trajectory()
}

struct Recorder<'a> {
    monitors: &'a [&'a HamiltonianFn],
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    monitor_values: Vec<Vec<f64>>,
}

impl<'a> Recorder<'a> {
    fn new(monitors: &'a [&'a HamiltonianFn]) -> Self {
        Recorder {
            monitors,
            times: Vec::new(),
            states: Vec::new(),
            monitor_values: vec![Vec::new(); monitors.len()],
        }
    }

    fn push(&mut self, t: f64, x: DVector<f64>) -> Result<()> {
        for (series, m) in self.monitor_values.iter_mut().zip(self.monitors) {
            series.push(m.value(&x)?);
        }
        self.times.push(t);
        self.states.push(x);
        Ok(())
    }

    fn last_time(&self) -> f64 {
        *self.times.last().expect("initial state always recorded")
    }

    fn into_trajectory(self) -> Result<Trajectory> {
        Trajectory::from_parts(
            "",
            self.times,
            self.states,
            self.monitors.iter().map(|m| m.name().to_string()).collect(),
            self.monitor_values,
        )
    }
}

fn accept_state(field: &VectorField, t: f64, x: &DVector<f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time: t });
    }
    if let Some((coordinate, value)) = field.domain().first_violation(x) {
        return Err(Error::DomainExit {
            time: t,
            coordinate: coordinate + 1,
            value,
        });
    }
    Ok(())
}

fn fixed_step_loop(
    field: &VectorField,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
    recorder: &mut Recorder,
) -> Result<()> {
    let (t0, t1) = cfg.t_span;
    let mut x = x0.clone();
    let mut t = t0;
    let mut step_index: usize = 0;
    while t < t1 {
        // Land exactly on t1; skip degenerate trailing steps.
        let h = cfg.h.min(t1 - t);
        if h < cfg.h * 1e-12 {
            break;
        }
        x = match cfg.method {
            Method::Euler => euler_step(field, &x, h)?,
            _ => rk4_step(field, &x, h)?,
        };
        t = if (t1 - t) <= cfg.h { t1 } else { t0 + (step_index + 1) as f64 * cfg.h };
        step_index += 1;
        accept_state(field, t, &x)?;
        if step_index % cfg.record_every == 0 && t < t1 {
            recorder.push(t, x.clone())?;
        }
    }
    if recorder.last_time() < t1 {
        recorder.push(t1, x)?;
    }
    Ok(())
}

fn euler_step(field: &VectorField, x: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    Ok(x + field.eval(x)? * h)
}

fn rk4_step(field: &VectorField, x: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let k1 = field.eval(x)?;
    let k2 = field.eval(&(x + &k1 * (h / 2.0)))?;
    let k3 = field.eval(&(x + &k2 * (h / 2.0)))?;
    let k4 = field.eval(&(x + &k3 * h))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Fehlberg 4(5) embedded pair; returns the fifth-order proposal and the
/// max-norm of the embedded error estimate.
fn rkf45_step(field: &VectorField, x: &DVector<f64>, h: f64) -> Result<(DVector<f64>, f64)> {
    let k1 = field.eval(x)?;
    let k2 = field.eval(&(x + &k1 * (h * 0.25)))?;
    let k3 = field.eval(&(x + &k1 * (h * 3.0 / 32.0) + &k2 * (h * 9.0 / 32.0)))?;
    let k4 = field.eval(
        &(x + &k1 * (h * 1932.0 / 2197.0) - &k2 * (h * 7200.0 / 2197.0)
            + &k3 * (h * 7296.0 / 2197.0)),
    )?;
    let k5 = field.eval(
        &(x + &k1 * (h * 439.0 / 216.0) - &k2 * (h * 8.0) + &k3 * (h * 3680.0 / 513.0)
            - &k4 * (h * 845.0 / 4104.0)),
    )?;
    let k6 = field.eval(
        &(x - &k1 * (h * 8.0 / 27.0) + &k2 * (h * 2.0) - &k3 * (h * 3544.0 / 2565.0)
            + &k4 * (h * 1859.0 / 4104.0)
            - &k5 * (h * 11.0 / 40.0)),
    )?;
    let fourth = x
        + &k1 * (h * 25.0 / 216.0)
        + &k3 * (h * 1408.0 / 2565.0)
        + &k4 * (h * 2197.0 / 4104.0)
        - &k5 * (h / 5.0);
    let fifth = x
        + &k1 * (h * 16.0 / 135.0)
        + &k3 * (h * 6656.0 / 12825.0)
        + &k4 * (h * 28561.0 / 56430.0)
        - &k5 * (h * 9.0 / 50.0)
        + &k6 * (h * 2.0 / 55.0);
    let err = (&fifth - &fourth).amax();
    Ok((fifth, err))
}

fn adaptive_loop(
    field: &VectorField,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
    recorder: &mut Recorder,
) -> Result<()> {
    let (t0, t1) = cfg.t_span;
    let mut x = x0.clone();
    let mut t = t0;
    let mut h = cfg.h.clamp(cfg.h_min, cfg.h_max);
    let mut accepted: usize = 0;
    while t < t1 {
        let h_step = h.min(t1 - t);
        let (proposal, err) = rkf45_step(field, &x, h_step)?;
        let tol_scale = (0..x.len())
            .map(|i| cfg.abs_tol + cfg.rel_tol * x[i].abs().max(proposal[i].abs()))
            .fold(f64::INFINITY, f64::min);
        let err_ratio = err / tol_scale;
        if err_ratio <= 1.0 {
            t += h_step;
            x = proposal;
            accepted += 1;
            accept_state(field, t, &x)?;
            if accepted % cfg.record_every == 0 && t < t1 {
                recorder.push(t, x.clone())?;
            }
            let grow = if err_ratio > 0.0 {
                0.9 * err_ratio.powf(-0.2)
            } else {
                4.0
            };
            h = (h_step * grow.clamp(0.1, 4.0)).clamp(cfg.h_min, cfg.h_max);
        } else {
            if h_step <= cfg.h_min * (1.0 + 1e-12) {
                return Err(Error::StepUnderflow {
                    time: t,
                    h_min: cfg.h_min,
                });
            }
            let shrink = (0.9 * err_ratio.powf(-0.2)).clamp(0.1, 0.9);
            h = (h_step * shrink).max(cfg.h_min);
        }
    }
    if recorder.last_time() < t1 {
        recorder.push(t1, x)?;
    }
    Ok(())
}

/// Observed convergence order against a closed-form solution.
#[derive(Debug, Clone)]
pub struct OrderEstimate {
    /// Mean of the per-level order estimates, NaN when nothing was
    /// measurable.
    pub order: f64,
    /// `log2(e_k / e_{k+1})` for each halving of the step.
    pub per_level: Vec<f64>,
    /// Final-time errors at each step size.
    pub errors: Vec<f64>,
    /// False when the errors sit at the rounding floor (the method is exact
    /// on this field) or fail to decrease, making the estimate meaningless.
    pub reliable: bool,
}

/// Estimate the convergence order of `method` by halving the step three
/// times and comparing final states with `exact(t1)`.
pub fn convergence_order(
    field: &VectorField,
    x0: &DVector<f64>,
    exact: &dyn Fn(f64) -> DVector<f64>,
    method: Method,
    h0: f64,
    t_span: (f64, f64),
) -> Result<OrderEstimate> {
    let reference = exact(t_span.1);
    let scale = reference.amax().max(1.0);
    let floor = 64.0 * f64::EPSILON * scale;
    let mut errors = Vec::with_capacity(4);
    for level in 0..4 {
        let h = h0 / 2f64.powi(level);
        let mut cfg = match method {
            Method::Euler => IntegratorConfig::euler(h, t_span),
            Method::Rk4 => IntegratorConfig::rk4(h, t_span),
            Method::Rkf45 => IntegratorConfig::rkf45(h, t_span),
        };
        cfg.record_every = usize::MAX;
        let traj = integrate(field, x0, &cfg, &[])?;
        let last = traj.final_state().expect("trajectory has a final state");
        errors.push((last - &reference).amax());
    }
    let mut per_level = Vec::new();
    for w in errors.windows(2) {
        if w[0] > floor && w[1] > floor {
            per_level.push((w[0] / w[1]).log2());
        }
    }
    let reliable = per_level.len() == errors.len() - 1
        && errors.windows(2).all(|w| w[1] < w[0]);
    let order = if per_level.is_empty() {
        f64::NAN
    } else {
        per_level.iter().sum::<f64>() / per_level.len() as f64
    };
    Ok(OrderEstimate {
        order,
        per_level,
        errors,
        reliable,
    })
}
