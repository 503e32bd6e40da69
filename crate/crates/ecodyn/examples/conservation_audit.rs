//! Conservation along integrated trajectories.
//!
//! Each model carries a quantity that the exact flow keeps constant; a
//! fixed-step integrator only keeps it constant up to its truncation
//! error. This audit integrates every model over t in [0, 5] with RK4 at
//! h = 1e-3 and reports the worst relative drift of each monitored
//! quantity, which should stay far below 1e-6.

use ecodyn::hamiltonian::{
    bihamiltonian_ab, bihamiltonian_triple, debt_hamiltonian, logistic_hamiltonian,
    sato_hamiltonian, sato_solve_c, CoeffChoice,
};
use ecodyn::integrate::{integrate, IntegratorConfig};
use ecodyn::models::{DebtModel, GrowthModel, LogisticModel, SatoModel, Trajectory};
use ecodyn::poisson::HamiltonianFn;
use nalgebra::DVector;

fn drift_report(label: &str, traj: &Trajectory) {
    for (name, series) in traj.monitor_names.iter().zip(&traj.monitor_values) {
        let h0 = series[0];
        let drift = series.iter().map(|v| (v - h0).abs()).fold(0.0, f64::max)
            / h0.abs().max(1.0);
        println!(
            "{label:<14} {name:<8} initial {h0:>12.6}   relative drift {drift:.3e}"
        );
    }
}

fn main() -> ecodyn::Result<()> {
    let cfg = IntegratorConfig::rk4(1e-3, (0.0, 5.0)).with_record_every(10);
    println!("RK4, h = 1e-3, t in [0, 5]\n");

    // Exponential model: the coefficient-route H plus the bi-Hamiltonian
    // triple, all conserved by the same flow.
    let sato = SatoModel::new([1.0, 3.0, 2.0])?;
    let c = sato_solve_c(sato.b(), CoeffChoice::Crs)?;
    let params = bihamiltonian_ab(sato.b())?;
    let (h1, h2, h3) = bihamiltonian_triple(&params);
    let monitors: Vec<HamiltonianFn> = vec![sato_hamiltonian(&c), h1, h2, h3];
    let refs: Vec<&HamiltonianFn> = monitors.iter().collect();
    let x0 = DVector::from_element(3, 1.0);
    let traj = integrate(&sato.vector_field(), &x0, &cfg, &refs)?;
    drift_report("exponential", &traj);
    println!();

    // Capacity-bounded model: the conserved quantity diverges at the
    // capacities, so states must stay strictly inside the open box.
    let logistic = LogisticModel::new([1.0, 3.0, 2.0], [10.0, 10.0, 10.0])?;
    let h = logistic_hamiltonian(&logistic, &c);
    let x0 = DVector::from_vec(vec![1.0, 2.0, 4.0]);
    let traj = integrate(&logistic.vector_field(), &x0, &cfg, &[&h])?;
    drift_report("logistic", &traj);
    println!();

    // Capital-debt model: a center in the (K, D) plane; conservation holds
    // around the whole cycle.
    let debt = DebtModel::new([0.5, -0.5, 1.0, 1.0], -1.0, 1.0, 10.0, 10.0)?;
    let h4 = debt_hamiltonian(&debt)?;
    let x0 = DVector::from_element(4, 1.0);
    let traj = integrate(&debt.vector_field(), &x0, &cfg, &[&h4])?;
    drift_report("debt", &traj);
    Ok(())
}
