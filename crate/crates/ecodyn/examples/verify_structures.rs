//! Numerical verification of every shipped bracket.
//!
//! For each model this samples random admissible states and measures three
//! residuals: antisymmetry of the bivector, the Jacobi identity, and the
//! gap between the bracket-generated field and the model equations. All of
//! them should sit at rounding level; the bivectors are antisymmetric by
//! construction and satisfy Jacobi exactly, so anything above ~1e-10 would
//! indicate a transcription bug rather than discretization error.

use ecodyn::hamiltonian::{
    bihamiltonian_ab, bihamiltonian_bivectors, bihamiltonian_triple, debt_bivector,
    debt_log_hamiltonian, logistic_bivector, logistic_log_hamiltonian, sato_bivector,
    sato_hamiltonian, sato_solve_c, CoeffChoice,
};
use ecodyn::models::{DebtModel, GrowthModel, LogisticModel, SatoModel};
use ecodyn::poisson::{
    field_consistency_residual, jacobi_residual, skew_residual, Bivector, BoxSampler,
    HamiltonianFn, VectorField,
};
use nalgebra::DVector;

fn report(
    label: &str,
    pi: &Bivector,
    pair: Option<(&HamiltonianFn, &VectorField)>,
    sampler: &BoxSampler,
) -> ecodyn::Result<()> {
    let skew = skew_residual(pi, sampler)?;
    let jacobi = jacobi_residual(pi, sampler)?;
    print!(
        "{label:<28} antisymmetry {:.2e}   jacobi {:.2e}",
        skew.max_abs, jacobi.max_abs
    );
    if let Some((h, field)) = pair {
        let cons = field_consistency_residual(pi, h, field, sampler)?;
        print!("   field gap {:.2e}", cons.max_abs);
    }
    println!();
    Ok(())
}

fn main() -> ecodyn::Result<()> {
    println!("residuals over 100 sampled states per bracket\n");

    // Exponential model: state-space bracket plus the pair of brackets that
    // make the same flow bi-Hamiltonian.
    let sato = SatoModel::new([1.0, 3.0, 2.0])?;
    let field = sato.vector_field();
    let sampler = BoxSampler::new(
        DVector::from_element(3, 0.2),
        DVector::from_element(3, 5.0),
    )?;
    let c = sato_solve_c(sato.b(), CoeffChoice::Crs)?;
    let h = sato_hamiltonian(&c);
    report("exponential: state bracket", &sato_bivector(), Some((&h, &field)), &sampler)?;

    let params = bihamiltonian_ab(sato.b())?;
    let (h1, h2, _h3) = bihamiltonian_triple(&params);
    let (pi1, pi2) = bihamiltonian_bivectors(&params)?;
    report("exponential: first bracket", &pi1, Some((&h1, &field)), &sampler)?;
    report("exponential: second bracket", &pi2, Some((&h2, &field)), &sampler)?;
    for lambda in [-1.0, 1.0, 2.0] {
        let pencil = Bivector::pencil(&pi1, &pi2, lambda)?;
        report(&format!("exponential: pencil {lambda}"), &pencil, None, &sampler)?;
    }
    println!();

    // Capacity-bounded model, in the log coordinates where its bracket is
    // separable.
    let logistic = LogisticModel::new([1.0, 3.0, 2.0], [10.0, 10.0, 10.0])?;
    let log_field = logistic.log_vector_field();
    let log_sampler = BoxSampler::new(
        DVector::from_element(3, -3.0),
        DVector::from_element(3, -0.1),
    )?;
    let h_log = logistic_log_hamiltonian(&c);
    report(
        "logistic: log bracket",
        &logistic_bivector(),
        Some((&h_log, &log_field)),
        &log_sampler,
    )?;
    println!();

    // Four-variable capital-debt model: block bracket in log coordinates.
    let debt = DebtModel::new([0.5, -0.5, 1.0, 1.0], -1.0, 1.0, 10.0, 10.0)?;
    let debt_field = debt.log_vector_field();
    let debt_sampler = BoxSampler::new(
        DVector::from_vec(vec![-2.0, -2.0, -3.0, -3.0]),
        DVector::from_vec(vec![2.0, 2.0, -0.1, -0.1]),
    )?;
    let h4 = debt_log_hamiltonian(&debt)?;
    report(
        "debt: log bracket",
        &debt_bivector(&debt),
        Some((&h4, &debt_field)),
        &debt_sampler,
    )?;
    Ok(())
}
