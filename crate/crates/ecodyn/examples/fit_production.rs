//! Fitting production functions to data.
//!
//! Two lessons here. First, data from a single exponential trajectory
//! cannot identify all three power-law parameters: along one orbit the log
//! inputs move on a straight line, so the design matrix is rank deficient.
//! Imposing constant returns (or pooling trajectories with different
//! starting points) restores identifiability. Second, the sigmoid family
//! is fit by a deterministic simplex search and recovers its parameters
//! from exact data.

use ecodyn::fitting::{
    fit_cobb_douglas, fit_logistic_pf, Capacities, Dataset, Observation, SigmoidFitOptions,
};
use ecodyn::integrate::{integrate, IntegratorConfig};
use ecodyn::models::{GrowthModel, SatoModel, Trajectory};
use ecodyn::production::{LogisticPF, ProductionFunction};
use nalgebra::DVector;

fn rows_from(traj: &Trajectory) -> Vec<Observation> {
    traj.states
        .iter()
        .map(|x| Observation::new(x[0], x[1], x[2]))
        .collect()
}

fn main() -> ecodyn::Result<()> {
    let model = SatoModel::new([1.0, 3.0, 2.0])?;
    let cfg = IntegratorConfig::rk4(1e-2, (0.0, 1.5)).with_record_every(10);

    // One trajectory: the full fit must fail, the constrained one succeeds.
    let single = integrate(
        &model.vector_field(),
        &DVector::from_vec(vec![1.0, 2.0, 4.0]),
        &cfg,
        &[],
    )?;
    let data = Dataset::new(rows_from(&single))?;
    match fit_cobb_douglas(&data, false) {
        Err(e) => println!("unconstrained fit on one trajectory: {e}"),
        Ok(_) => println!("unconstrained fit on one trajectory unexpectedly succeeded"),
    }
    let crs_fit = fit_cobb_douglas(&data, true)?;
    if let ProductionFunction::CobbDouglas(pf) = &crs_fit.pf {
        println!(
            "constant-returns fit:  Y = {:.6} * L^{:.6} * K^{:.6}   (rss {:.2e})",
            pf.scale, pf.alpha, pf.beta, crs_fit.rss
        );
    }

    // Pooling trajectories breaks the collinearity. The starting points
    // must share the conserved value (here x1 x2 / x3^2 = 1), otherwise the
    // rows lie on different level surfaces and no single function fits.
    let mut rows = Vec::new();
    for x0 in [[1.0, 1.0, 1.0], [1.0, 4.0, 2.0], [4.0, 1.0, 2.0]] {
        let traj = integrate(&model.vector_field(), &DVector::from_row_slice(&x0), &cfg, &[])?;
        rows.extend(rows_from(&traj));
    }
    let pooled = Dataset::new(rows)?;
    let full = fit_cobb_douglas(&pooled, false)?;
    if let ProductionFunction::CobbDouglas(pf) = &full.pf {
        println!(
            "pooled unconstrained:  Y = {:.6} * L^{:.6} * K^{:.6}   (rss {:.2e})",
            pf.scale, pf.alpha, pf.beta, full.rss
        );
    }
    println!();

    // Sigmoid family: exact synthetic data, deterministic recovery.
    let truth = LogisticPF::new(5.0, 10.0, 20.0, 0.4, 0.6, 2.0)?;
    let mut rows = Vec::new();
    for i in 1..=6 {
        for j in 1..=6 {
            let l = truth.n_l * i as f64 / 7.0;
            let k = truth.n_k * j as f64 / 7.0;
            rows.push(Observation::new(l, k, truth.eval(l, k)?));
        }
    }
    let data = Dataset::new(rows)?;
    let caps = Capacities {
        n_f: truth.n_f,
        n_l: truth.n_l,
        n_k: truth.n_k,
    };
    let fit = fit_logistic_pf(&data, caps, &SigmoidFitOptions::default())?;
    if let ProductionFunction::Logistic(pf) = &fit.pf {
        println!("sigmoid truth:   alpha = 0.4, beta = 0.6, c = 2");
        println!(
            "sigmoid fit:     alpha = {:.6}, beta = {:.6}, c = {:.6}",
            pf.alpha, pf.beta, pf.c
        );
        println!(
            "                 rss {:.3e}, {} iterations, converged = {}",
            fit.rss, fit.iterations, fit.converged
        );
    }
    Ok(())
}
