//! Observed integrator orders against closed-form flows.
//!
//! Halving the step three times and comparing final states with the exact
//! solution should show errors shrinking by 2^p per halving. Euler sits at
//! p = 1, RK4 at p = 4. On a field RK4 integrates exactly (here: constant
//! drift) the errors live at the rounding floor and the estimate is
//! flagged unreliable instead of reporting a junk order.

use ecodyn::integrate::{convergence_order, integrate, IntegratorConfig, Method};
use ecodyn::models::{logistic_closed_form, GrowthModel, SatoModel};
use ecodyn::poisson::{Domain, VectorField};
use nalgebra::DVector;
use std::sync::Arc;

fn show(label: &str, est: &ecodyn::integrate::OrderEstimate) {
    println!("{label}");
    println!("  errors per halving: {:?}", est.errors);
    println!(
        "  observed order {:.3} (reliable: {})",
        est.order, est.reliable
    );
}

fn main() -> ecodyn::Result<()> {
    // Exponential flow, all three rates active.
    let model = SatoModel::new([1.0, 3.0, 2.0])?;
    let x0 = DVector::from_element(3, 1.0);
    let field = model.vector_field();
    let exact = {
        let x0 = x0.clone();
        move |t: f64| model.exact_state(&x0, t).unwrap()
    };
    let rk4 = convergence_order(&field, &x0, &exact, Method::Rk4, 0.05, (0.0, 1.0))?;
    show("RK4 on the exponential flow:", &rk4);
    let euler = convergence_order(&field, &x0, &exact, Method::Euler, 0.05, (0.0, 1.0))?;
    show("Euler on the exponential flow:", &euler);
    println!();

    // Logistic flow in one dimension.
    let logistic = VectorField::from_closures(
        1,
        Arc::new(|x: &DVector<f64>| DVector::from_vec(vec![2.0 * x[0] * (1.0 - x[0] / 5.0)])),
        Domain::positive(1),
    );
    let exact_logistic =
        |t: f64| DVector::from_vec(vec![logistic_closed_form(2.0, 5.0, 0.5, t)]);
    let x0 = DVector::from_vec(vec![0.5]);
    let rk4 = convergence_order(&logistic, &x0, &exact_logistic, Method::Rk4, 0.05, (0.0, 2.0))?;
    show("RK4 on the logistic flow:", &rk4);
    let euler =
        convergence_order(&logistic, &x0, &exact_logistic, Method::Euler, 0.05, (0.0, 2.0))?;
    show("Euler on the logistic flow:", &euler);
    println!();

    // Constant drift: RK4 is exact, so no order can be read off.
    let constant = VectorField::from_closures(
        2,
        Arc::new(|_: &DVector<f64>| DVector::from_vec(vec![1.0, -2.0])),
        Domain::unbounded(2),
    );
    let exact_line = |t: f64| DVector::from_vec(vec![t, -2.0 * t]);
    let est = convergence_order(
        &constant,
        &DVector::zeros(2),
        &exact_line,
        Method::Rk4,
        0.1,
        (0.0, 1.0),
    )?;
    show("RK4 on a constant field:", &est);
    println!();

    // Adaptive integration hits the requested tolerance.
    let model = SatoModel::new([1.0, 3.0, 2.0])?;
    let x0 = DVector::from_element(3, 1.0);
    let cfg = IntegratorConfig::rkf45(1e-2, (0.0, 1.0)).with_tolerances(1e-10, 1e-12);
    let traj = integrate(&model.vector_field(), &x0, &cfg, &[])?;
    let exact_t1 = model.exact_state(&x0, 1.0)?;
    let err = (traj.final_state().unwrap() - &exact_t1).amax();
    println!(
        "RKF45 at rel_tol 1e-10: final-state error {err:.3e} over {} accepted samples",
        traj.len()
    );
    Ok(())
}
