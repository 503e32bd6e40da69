//! Construction of the Hamiltonian structures behind each growth model.
//!
//! For the exponential model the conserved quantity is log-linear,
//! `H = sum_k c_k ln x_k`, where the coefficients solve `S c = b` with the
//! fixed antisymmetric matrix [`crate::poisson::structural_skew3`]. The
//! system is solvable exactly when the growth rates satisfy
//! `b1 + b3 = b2`; the solutions form a one-parameter family
//! `c = (b2 + t, b3 - b2 - t, t)` and the constant-returns choice
//! `t = -b3` makes the induced output elasticities sum to one.
//!
//! The same model also admits a bi-Hamiltonian description: two log-linear
//! Hamiltonians `H1`, `H2` whose difference `H3` again generates the flow,
//! with elasticities read off from the `H3` level set. Both derivation
//! routes produce identical elasticities; the acceptance suite sweeps this.
//!
//! The logistic and debt models reuse the same machinery after the change
//! to log coordinates supplied by [`crate::models`].

use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{DebtModel, GrowthModel, LogisticModel, SatoModel};
use crate::poisson::{structural_skew3, Bivector, BoxSampler, Domain, HamiltonianFn, Residual};

/// Largest tolerated defect of the growth-rate compatibility condition
/// `b1 + b3 = b2`.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Relative threshold below which `b1 b2 - b3^2` counts as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Choice of member in the one-parameter family of coefficient solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoeffChoice {
    /// Constant returns to scale: `t = -b3`, so the elasticities sum to one.
    Crs,
    /// Explicit free parameter `t` (must be nonzero: `c3 = t` is the
    /// coefficient the level set is solved against).
    Free(f64),
}

/// One solution of `S c = b`, remembering the free parameter and the growth
/// rates it came from.
#[derive(Debug, Clone, Copy)]
pub struct CoeffSolution {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Value of the free parameter (equals `c3`).
    pub t: f64,
    /// Whether the constant-returns normalization picked `t`.
    pub crs: bool,
    /// Growth rates this solution was derived from.
    pub growth: [f64; 3],
}

impl CoeffSolution {
    pub fn c_vec(&self) -> DVector<f64> {
        DVector::from_vec(vec![self.c1, self.c2, self.c3])
    }

    /// Output elasticities `(alpha, beta)` of the level set solved for
    /// `x3`: `alpha = -c1/c3` multiplies labor, `beta = -c2/c3` capital.
    pub fn elasticities(&self) -> (f64, f64) {
        (-self.c1 / self.c3, -self.c2 / self.c3)
    }
}

/// Solve the coefficient system `S c = b` for the exponential model.
///
/// Errors when the compatibility condition `b1 + b3 = b2` is violated
/// (the defect is reported) and when the requested free parameter is zero.
pub fn sato_solve_c(b: [f64; 3], choice: CoeffChoice) -> Result<CoeffSolution> {
    let defect = b[0] + b[2] - b[1];
    if defect.abs() > COMPATIBILITY_TOL {
        return Err(Error::IncompatibleRates { defect });
    }
    let (t, crs) = match choice {
        CoeffChoice::Crs => (-b[2], true),
        CoeffChoice::Free(t) => (t, false),
    };
    if t == 0.0 {
        return Err(Error::ZeroFreeParameter);
    }
    Ok(CoeffSolution {
        c1: b[1] + t,
        c2: b[2] - b[1] - t,
        c3: t,
        t,
        crs,
        growth: b,
    })
}

/// Parameters of the bi-Hamiltonian description of exponential growth.
#[derive(Debug, Clone, Copy)]
pub struct BiHamiltonianParams {
    /// Coefficient `a` appearing in `H1 = b ln x1 + ln x2 + a ln x3` and
    /// `H2 = ln x1 + a ln x2 + b ln x3`.
    pub a: f64,
    /// Coefficient `b` of the same pair (distinct from the growth rates).
    pub b: f64,
    /// Labor elasticity `(1 - b) / (a - b)` read off the `H3` level set.
    pub alpha: f64,
    /// Capital elasticity `(a - 1) / (a - b)`.
    pub beta: f64,
    /// Growth rates the parameters were derived from.
    pub growth: [f64; 3],
}

/// Derive the bi-Hamiltonian parameters from the growth rates:
///
/// `a = (b2 b3 - b1^2) / (b1 b2 - b3^2)`,
/// `b = (b1 b3 - b2^2) / (b1 b2 - b3^2)`.
///
/// The elasticities attach `alpha` to labor (`x1`) and `beta` to capital
/// (`x2`); they follow from solving the level set of `H3 = H1 - H2` for
/// `x3` and collapse to the closed forms `alpha = (b2 - b3)/(b2 - b1)`,
/// `beta = (b3 - b1)/(b2 - b1)`, so both are positive whenever
/// `b2 > b3 > b1`. `alpha + beta = 1` identically.
///
/// Errors on the singular configuration `b1 b2 = b3^2` and on the
/// degenerate case `a = b` where the elasticities are undefined.
pub fn bihamiltonian_ab(growth: [f64; 3]) -> Result<BiHamiltonianParams> {
    let [b1, b2, b3] = growth;
    let den = b1 * b2 - b3 * b3;
    let den_scale = (b1 * b2).abs().max(b3 * b3).max(1e-300);
    if den.abs() <= SINGULAR_TOL * den_scale {
        return Err(Error::Singular(format!(
            "b1 b2 = b3^2 (b1 b2 - b3^2 = {den:e}); the bi-Hamiltonian coefficients are undefined"
        )));
    }
    let a = (b2 * b3 - b1 * b1) / den;
    let b = (b1 * b3 - b2 * b2) / den;
    let ab_scale = a.abs().max(b.abs()).max(1.0);
    if (a - b).abs() <= SINGULAR_TOL * ab_scale {
        return Err(Error::Singular(format!(
            "a = b = {a}; the level set cannot be solved for x3"
        )));
    }
    Ok(BiHamiltonianParams {
        a,
        b,
        alpha: (1.0 - b) / (a - b),
        beta: (a - 1.0) / (a - b),
        growth,
    })
}

/// Log-linear Hamiltonian `H = c1 ln x1 + c2 ln x2 + c3 ln x3` of the
/// exponential model.
pub fn sato_hamiltonian(c: &CoeffSolution) -> HamiltonianFn {
    HamiltonianFn::log_linear("H", c.c_vec())
}

/// The two commuting Hamiltonians and their difference:
/// `H1 = b ln x1 + ln x2 + a ln x3`, `H2 = ln x1 + a ln x2 + b ln x3`,
/// `H3 = H1 - H2`.
#[allow(non_snake_case)]
pub fn bihamiltonian_triple(
    p: &BiHamiltonianParams,
) -> (HamiltonianFn, HamiltonianFn, HamiltonianFn) {
    let h1 = HamiltonianFn::log_linear("H1", DVector::from_vec(vec![p.b, 1.0, p.a]));
    let h2 = HamiltonianFn::log_linear("H2", DVector::from_vec(vec![1.0, p.a, p.b]));
    let h3 = HamiltonianFn::log_linear(
        "H3",
        DVector::from_vec(vec![p.b - 1.0, 1.0 - p.a, p.a - p.b]),
    );
    (h1, h2, h3)
}

/// Quadratic bracket `P_ij = s_ij x_i x_j` of the exponential model, with
/// the fixed structural coefficient matrix.
pub fn sato_bivector() -> Bivector {
    Bivector::quadratic(structural_skew3()).expect("structural matrix is antisymmetric")
}

/// Brackets `P1`, `P2` pairing with `H1`, `H2` so that both reproduce the
/// exponential flow.
///
/// A constant antisymmetric matrix `S` with `S u = w` (for the Hamiltonian
/// coefficient vector `u` and growth rates `w`) exists exactly when
/// `u . w = 0`, which is the condition already enforced by
/// [`bihamiltonian_ab`]; the canonical member
/// `S = (w u^T - u w^T) / (u . u)` is used here. The quadratic brackets
/// `s_ij x_i x_j` built from any such matrices satisfy the Jacobi identity,
/// as does every pencil `P1 + lambda P2`.
pub fn bihamiltonian_bivectors(p: &BiHamiltonianParams) -> Result<(Bivector, Bivector)> {
    let w = DVector::from_row_slice(&p.growth);
    let u1 = DVector::from_vec(vec![p.b, 1.0, p.a]);
    let u2 = DVector::from_vec(vec![1.0, p.a, p.b]);
    let pi1 = Bivector::quadratic(skew_solving(&u1, &w)?)?;
    let pi2 = Bivector::quadratic(skew_solving(&u2, &w)?)?;
    Ok((pi1, pi2))
}

/// Antisymmetric `S` with `S u = w`, requiring `u . w = 0`.
fn skew_solving(u: &DVector<f64>, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    let uu = u.dot(u);
    if uu == 0.0 {
        return Err(Error::Singular("zero Hamiltonian coefficient vector".into()));
    }
    let uw = u.dot(w);
    if uw.abs() > 1e-8 * uu.max(1.0) {
        return Err(Error::Singular(format!(
            "coefficients do not conserve the Hamiltonian: u . w = {uw:e}"
        )));
    }
    Ok(DMatrix::from_fn(3, 3, |i, j| (w[i] * u[j] - u[i] * w[j]) / uu))
}

/// Bracket of the logistic model in log coordinates:
/// `P_ij(v) = s_ij (1 - e^{v_i}) (1 - e^{v_j})`.
pub fn logistic_bivector() -> Bivector {
    Bivector::separable(structural_skew3(), |v: f64| 1.0 - v.exp(), |v: f64| -v.exp())
        .expect("structural matrix is antisymmetric")
}

/// Logistic Hamiltonian in log coordinates,
/// `Htilde3 = sum_k c_k (v_k - ln(1 - e^{v_k}))`, defined for `v_k < 0`.
#[allow(non_snake_case)]
pub fn logistic_log_hamiltonian(c: &CoeffSolution) -> HamiltonianFn {
    let cv = c.c_vec();
    let cg = cv.clone();
    HamiltonianFn::from_closures(
        "Htilde3",
        3,
        Arc::new(move |v: &DVector<f64>| {
            (0..3)
                .map(|k| cv[k] * (v[k] - (1.0 - v[k].exp()).ln()))
                .sum()
        }),
        Arc::new(move |v: &DVector<f64>| {
            DVector::from_fn(3, |k, _| cg[k] / (1.0 - v[k].exp()))
        }),
        Domain::negative(3),
    )
}

/// Logistic Hamiltonian in the original variables,
/// `H3 = sum_k c_k ln(x_k / (N_k - x_k))`, on the below-capacity box
/// `0 < x_k < N_k`. (The above-capacity branch with `|N_k - x_k|` is not
/// used for level-set work and is deliberately not constructed here.)
#[allow(non_snake_case)]
pub fn logistic_hamiltonian(model: &LogisticModel, c: &CoeffSolution) -> HamiltonianFn {
    let cv = c.c_vec();
    let cg = cv.clone();
    let n = model.n();
    let domain = model.state_domain();
    HamiltonianFn::from_closures(
        "H3",
        3,
        Arc::new(move |x: &DVector<f64>| {
            (0..3).map(|k| cv[k] * (x[k] / (n[k] - x[k])).ln()).sum()
        }),
        Arc::new(move |x: &DVector<f64>| {
            DVector::from_fn(3, |k, _| cg[k] * (1.0 / x[k] + 1.0 / (n[k] - x[k])))
        }),
        domain,
    )
}

/// Bracket of the debt model in log coordinates. Block structure: the
/// capital/debt pair is canonical (`P_12 = 1`), the production/labor pair
/// carries `P_34 = -b3 b4 (1 - e^{v3}) (1 - e^{v4})`; all cross terms
/// vanish, which is also why the Jacobi identity holds exactly.
pub fn debt_bivector(model: &DebtModel) -> Bivector {
    let [_, _, b3, b4] = model.b();
    let coeff = move |v: &DVector<f64>| {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = -1.0;
        let p34 = -b3 * b4 * (1.0 - v[2].exp()) * (1.0 - v[3].exp());
        m[(2, 3)] = p34;
        m[(3, 2)] = -p34;
        m
    };
    let partial = move |v: &DVector<f64>, l: usize| {
        let mut m = DMatrix::zeros(4, 4);
        let d = match l {
            2 => b3 * b4 * v[2].exp() * (1.0 - v[3].exp()),
            3 => b3 * b4 * (1.0 - v[2].exp()) * v[3].exp(),
            _ => 0.0,
        };
        m[(2, 3)] = d;
        m[(3, 2)] = -d;
        m
    };
    Bivector::from_closures(4, Arc::new(coeff), Arc::new(partial))
}

/// Debt Hamiltonian in log coordinates:
///
/// `H4 = b1 (v2 - e^{v2}) - b2 (v1 - e^{v1})
///       + (1/b3)(v3 - ln(1 - e^{v3})) - (1/b4)(v4 - ln(1 - e^{v4}))`.
///
/// Requires `b3 != 0` and `b4 != 0`; defined for `v3, v4 < 0`.
#[allow(non_snake_case)]
pub fn debt_log_hamiltonian(model: &DebtModel) -> Result<HamiltonianFn> {
    let [b1, b2, b3, b4] = model.b();
    check_debt_rates(b3, b4)?;
    Ok(HamiltonianFn::from_closures(
        "H4",
        4,
        Arc::new(move |v: &DVector<f64>| debt_h_value(b1, b2, b3, b4, v)),
        Arc::new(move |v: &DVector<f64>| debt_h_grad(b1, b2, b3, b4, v)),
        model.log_domain(),
    ))
}

/// Debt Hamiltonian pulled back to the original variables through the log
/// substitution, so it can monitor trajectories of the model itself.
#[allow(non_snake_case)]
pub fn debt_hamiltonian(model: &DebtModel) -> Result<HamiltonianFn> {
    let [b1, b2, b3, b4] = model.b();
    check_debt_rates(b3, b4)?;
    let (kappa1, kappa2) = model.kappa();
    let (n_f, n_l) = (model.n_f(), model.n_l());
    let to_v = move |x: &DVector<f64>| {
        DVector::from_vec(vec![
            (kappa1 * x[0]).ln(),
            (kappa2 * x[1]).ln(),
            (x[2] / n_f).ln(),
            (x[3] / n_l).ln(),
        ])
    };
    Ok(HamiltonianFn::from_closures(
        "H4",
        4,
        Arc::new(move |x: &DVector<f64>| debt_h_value(b1, b2, b3, b4, &to_v(x))),
        Arc::new(move |x: &DVector<f64>| {
            // Diagonal substitution: dH/dx_i = (dH/dv_i) / x_i.
            let g = debt_h_grad(b1, b2, b3, b4, &to_v(x));
            DVector::from_fn(4, |i, _| g[i] / x[i])
        }),
        model.state_domain(),
    ))
}

fn check_debt_rates(b3: f64, b4: f64) -> Result<()> {
    if b3 == 0.0 {
        return Err(Error::config("model.b[2]", "b3 must be nonzero: H4 divides by it"));
    }
    if b4 == 0.0 {
        return Err(Error::config("model.b[3]", "b4 must be nonzero: H4 divides by it"));
    }
    Ok(())
}

fn debt_h_value(b1: f64, b2: f64, b3: f64, b4: f64, v: &DVector<f64>) -> f64 {
    b1 * (v[1] - v[1].exp()) - b2 * (v[0] - v[0].exp())
        + (v[2] - (1.0 - v[2].exp()).ln()) / b3
        - (v[3] - (1.0 - v[3].exp()).ln()) / b4
}

fn debt_h_grad(b1: f64, b2: f64, b3: f64, b4: f64, v: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![
        -b2 * (1.0 - v[0].exp()),
        b1 * (1.0 - v[1].exp()),
        1.0 / (b3 * (1.0 - v[2].exp())),
        -1.0 / (b4 * (1.0 - v[3].exp())),
    ])
}

/// Divergence of the exponential-growth field, computed as the trace of the
/// analytic Lotka-Volterra Jacobian (not from a closed-form shortcut). For
/// `dx_i/dt = b_i x_i` the Jacobian is constant, so a single probe point
/// suffices.
pub fn sato_divergence(model: &SatoModel) -> f64 {
    let lv = model.as_lv();
    let j = lv
        .jacobian(&DVector::from_element(3, 1.0))
        .expect("probe point has the right dimension");
    j.trace()
}

/// Largest curl magnitude of the exponential-growth field over the sample
/// set, from the analytic Jacobian. The field is diagonal, so this measures
/// pure floating-point noise.
pub fn sato_curl_residual(model: &SatoModel, sampler: &BoxSampler) -> Result<Residual> {
    let lv = model.as_lv();
    let mut worst: Vec<(f64, DVector<f64>)> = Vec::with_capacity(sampler.count());
    for x in sampler.points() {
        let j = lv.jacobian(&x)?;
        let curl = [
            j[(2, 1)] - j[(1, 2)],
            j[(0, 2)] - j[(2, 0)],
            j[(1, 0)] - j[(0, 1)],
        ];
        let r = curl.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        worst.push((r, x));
    }
    residual_over(worst)
}

/// Largest gap between the exponential-growth field and the gradient of its
/// potential `f(x) = (b1 x1^2 + b2 x2^2 + b3 x3^2) / 2` over the sample
/// set. Exact agreement makes the field a gradient field, consistent with
/// zero curl.
pub fn sato_gradient_field_residual(model: &SatoModel, sampler: &BoxSampler) -> Result<Residual> {
    let lv = model.as_lv();
    let b = model.b();
    let mut worst: Vec<(f64, DVector<f64>)> = Vec::with_capacity(sampler.count());
    for x in sampler.points() {
        let field = lv.rhs(&x)?;
        let grad_f = DVector::from_fn(3, |i, _| b[i] * x[i]);
        worst.push(((field - grad_f).amax(), x));
    }
    residual_over(worst)
}

fn residual_over(values: Vec<(f64, DVector<f64>)>) -> Result<Residual> {
    let mut max_abs = -1.0;
    let mut argmax_point = DVector::zeros(0);
    let samples = values.len();
    if samples == 0 {
        return Err(Error::EmptySample);
    }
    for (v, p) in values {
        if v.abs() > max_abs {
            max_abs = v.abs();
            argmax_point = p;
        }
    }
    Ok(Residual {
        max_abs,
        argmax_point,
        samples,
        vacuous: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Trajectory;
    use crate::poisson::{
        conservation_residual, field_consistency_residual, hamiltonian_vector_field,
    };
    use approx::assert_relative_eq;

    #[test]
    fn crs_coefficients_for_reference_rates() {
        let c = sato_solve_c([1.0, 3.0, 2.0], CoeffChoice::Crs).unwrap();
        assert_eq!((c.c1, c.c2, c.c3), (1.0, 1.0, -2.0));
        assert_eq!(c.t, -2.0);
        assert!(c.crs);
        let (alpha, beta) = c.elasticities();
        assert_eq!((alpha, beta), (0.5, 0.5));
    }

    #[test]
    fn crs_coefficients_track_capital_only_growth() {
        // Static labor, growing capital: production tracks capital alone.
        let c = sato_solve_c([0.0, 1.0, 1.0], CoeffChoice::Crs).unwrap();
        assert_eq!((c.c1, c.c2, c.c3), (0.0, 1.0, -1.0));
        let (alpha, beta) = c.elasticities();
        assert_eq!(alpha, 0.0);
        assert_eq!(beta, 1.0);
    }

    #[test]
    fn incompatible_rates_are_rejected_with_defect() {
        match sato_solve_c([1.0, 1.0, 1.0], CoeffChoice::Crs).unwrap_err() {
            Error::IncompatibleRates { defect } => assert_relative_eq!(defect, 1.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn zero_free_parameter_is_rejected() {
        assert!(matches!(
            sato_solve_c([1.0, 3.0, 2.0], CoeffChoice::Free(0.0)),
            Err(Error::ZeroFreeParameter)
        ));
        // CRS with b3 = 0 also lands on t = 0.
        assert!(matches!(
            sato_solve_c([1.0, 1.0, 0.0], CoeffChoice::Crs),
            Err(Error::ZeroFreeParameter)
        ));
    }

    #[test]
    fn coefficient_solution_satisfies_system_and_conserves() {
        let b = [0.4, 1.1, 0.7];
        for choice in [CoeffChoice::Crs, CoeffChoice::Free(2.5), CoeffChoice::Free(-0.3)] {
            let c = sato_solve_c(b, choice).unwrap();
            let s = structural_skew3();
            let residual = s * c.c_vec() - DVector::from_row_slice(&b);
            assert!(residual.amax() < 1e-12, "S c != b: {}", residual.amax());
            // Skewness of S forces c . b = 0, which is why H is conserved.
            let cb = c.c_vec().dot(&DVector::from_row_slice(&b));
            assert!(cb.abs() < 1e-12);
        }
    }

    #[test]
    fn bihamiltonian_reference_values() {
        let p = bihamiltonian_ab([1.0, 3.0, 2.0]).unwrap();
        assert_eq!(p.a, -5.0);
        assert_eq!(p.b, 7.0);
        assert_relative_eq!(p.alpha, 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.beta, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bihamiltonian_singular_configuration() {
        match bihamiltonian_ab([1.0, 4.0, 2.0]).unwrap_err() {
            Error::Singular(msg) => assert!(msg.contains("b3^2")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bihamiltonian_degenerate_when_a_equals_b() {
        // b1 = b2 makes a = b by symmetry of the defining equations.
        match bihamiltonian_ab([2.0, 2.0, 0.5]).unwrap_err() {
            Error::Singular(msg) => assert!(msg.contains("a = b")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn elasticities_agree_across_routes() {
        // For compatible rates (b2 = b1 + b3) the CRS coefficient solve and
        // the bi-Hamiltonian parameters give the same elasticities.
        for (b1, b3) in [(1.0, 2.0), (0.3, 0.9), (-0.2, 1.4), (2.0, 0.5)] {
            let b = [b1, b1 + b3, b3];
            let (a1, b1e) = sato_solve_c(b, CoeffChoice::Crs).unwrap().elasticities();
            let p = bihamiltonian_ab(b).unwrap();
            assert_relative_eq!(a1, p.alpha, epsilon = 1e-12);
            assert_relative_eq!(b1e, p.beta, epsilon = 1e-12);
        }
    }

    #[test]
    fn h3_coefficients_for_reference_rates() {
        let p = bihamiltonian_ab([1.0, 3.0, 2.0]).unwrap();
        let (_, _, h3) = bihamiltonian_triple(&p);
        // H3 = (b-1) ln x1 + (1-a) ln x2 + (a-b) ln x3 = 6 ln x1 + 6 ln x2 - 12 ln x3.
        let x = DVector::from_vec(vec![std::f64::consts::E, 1.0, 1.0]);
        assert_relative_eq!(h3.value(&x).unwrap(), 6.0, epsilon = 1e-12);
        let g = h3.grad(&DVector::from_element(3, 1.0)).unwrap();
        assert_relative_eq!(g, DVector::from_vec(vec![6.0, 6.0, -12.0]), epsilon = 1e-12);
    }

    #[test]
    fn sato_h_gradient_reference_point() {
        let c = sato_solve_c([1.0, 3.0, 2.0], CoeffChoice::Crs).unwrap();
        let h = sato_hamiltonian(&c);
        let g = h.grad(&DVector::from_vec(vec![1.0, 2.0, 4.0])).unwrap();
        assert_relative_eq!(
            g,
            DVector::from_vec(vec![1.0, 0.5, -0.5]),
            epsilon = 1e-15
        );
        assert_relative_eq!(h.value(&DVector::from_element(3, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn sato_pair_reproduces_flow() {
        let model = SatoModel::new([1.0, 3.0, 2.0]).unwrap();
        let c = sato_solve_c(model.b(), CoeffChoice::Crs).unwrap();
        let v = hamiltonian_vector_field(
            &sato_bivector(),
            &sato_hamiltonian(&c),
            &DVector::from_element(3, 1.0),
        )
        .unwrap();
        assert_relative_eq!(v, DVector::from_vec(vec![1.0, 3.0, 2.0]), epsilon = 1e-14);
    }

    #[test]
    fn bihamiltonian_pairs_reproduce_flow() {
        let model = SatoModel::new([1.0, 3.0, 2.0]).unwrap();
        let p = bihamiltonian_ab(model.b()).unwrap();
        let (h1, h2, _) = bihamiltonian_triple(&p);
        let (pi1, pi2) = bihamiltonian_bivectors(&p).unwrap();
        let sampler = BoxSampler::new(
            DVector::from_element(3, 0.1),
            DVector::from_element(3, 10.0),
        )
        .unwrap();
        let field = model.vector_field();
        let r1 = field_consistency_residual(&pi1, &h1, &field, &sampler).unwrap();
        let r2 = field_consistency_residual(&pi2, &h2, &field, &sampler).unwrap();
        assert!(r1.max_abs < 1e-10, "pi1/H1 residual {}", r1.max_abs);
        assert!(r2.max_abs < 1e-10, "pi2/H2 residual {}", r2.max_abs);
    }

    #[test]
    fn logistic_pair_reproduces_log_flow() {
        let model = LogisticModel::new([1.0, 3.0, 2.0], [10.0, 10.0, 10.0]).unwrap();
        let c = sato_solve_c(model.b(), CoeffChoice::Crs).unwrap();
        let sampler = BoxSampler::new(
            DVector::from_element(3, -3.0),
            DVector::from_element(3, -0.1),
        )
        .unwrap();
        let r = field_consistency_residual(
            &logistic_bivector(),
            &logistic_log_hamiltonian(&c),
            &model.log_vector_field(),
            &sampler,
        )
        .unwrap();
        assert!(r.max_abs < 1e-10, "logistic residual {}", r.max_abs);
    }

    #[test]
    fn debt_pair_reproduces_log_flow() {
        let model = DebtModel::new([0.5, -0.5, 1.0, 1.0], -1.0, 1.0, 10.0, 10.0).unwrap();
        let sampler = BoxSampler::new(
            DVector::from_vec(vec![-2.0, -2.0, -3.0, -3.0]),
            DVector::from_vec(vec![2.0, 2.0, -0.1, -0.1]),
        )
        .unwrap();
        let r = field_consistency_residual(
            &debt_bivector(&model),
            &debt_log_hamiltonian(&model).unwrap(),
            &model.log_vector_field(),
            &sampler,
        )
        .unwrap();
        assert!(r.max_abs < 1e-10, "debt residual {}", r.max_abs);
    }

    #[test]
    fn debt_h_reference_value() {
        // At v = (0, 0, v3, v4) the capital/debt terms contribute b2 - b1.
        let model = DebtModel::new([0.5, -0.5, 1.0, 1.0], -1.0, 1.0, 10.0, 10.0).unwrap();
        let h = debt_log_hamiltonian(&model).unwrap();
        let v3 = -1.0f64;
        let v4 = -2.0f64;
        let log_terms = (v3 - (1.0 - v3.exp()).ln()) / 1.0 - (v4 - (1.0 - v4.exp()).ln()) / 1.0;
        // Evaluate just inside the domain; v1 = v2 = 0 is fine (only v3, v4
        // are constrained).
        let v = DVector::from_vec(vec![0.0, 0.0, v3, v4]);
        let expected = (-0.5 - 0.5) + log_terms;
        assert_relative_eq!(h.value(&v).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn debt_h_rejects_zero_saturation_rates() {
        // Constructing the model itself succeeds; only H4 needs b3, b4 != 0.
        let model = DebtModel::new([0.5, -0.5, 0.0, 1.0], -1.0, 1.0, 10.0, 10.0).unwrap();
        match debt_log_hamiltonian(&model).unwrap_err() {
            Error::Config { field, .. } => assert!(field.contains("b[2]")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn debt_h_x_matches_log_version() {
        let model = DebtModel::new([0.5, -0.5, 1.0, 1.0], -1.0, 1.0, 10.0, 10.0).unwrap();
        let hv = debt_log_hamiltonian(&model).unwrap();
        let hx = debt_hamiltonian(&model).unwrap();
        let x = DVector::from_vec(vec![0.8, 1.3, 4.0, 6.5]);
        let v = model.to_log(&x).unwrap();
        assert_relative_eq!(hx.value(&x).unwrap(), hv.value(&v).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn conservation_along_exact_exponential_flow() {
        // Using closed-form states keeps this independent of any integrator.
        let model = SatoModel::new([1.0, 3.0, 2.0]).unwrap();
        let c = sato_solve_c(model.b(), CoeffChoice::Crs).unwrap();
        let h = sato_hamiltonian(&c);
        let x0 = DVector::from_element(3, 1.0);
        let times: Vec<f64> = (0..=50).map(|k| k as f64 * 0.1).collect();
        let states = times
            .iter()
            .map(|&t| model.exact_state(&x0, t).unwrap())
            .collect();
        let traj = Trajectory::from_parts("sato", times, states, vec![], vec![]).unwrap();
        let r = conservation_residual(&h, &traj).unwrap();
        assert!(r.max_abs < 1e-12, "drift {}", r.max_abs);
    }

    #[test]
    fn divergence_is_sum_of_rates() {
        let model = SatoModel::new([1.0, 3.0, 2.0]).unwrap();
        assert_eq!(sato_divergence(&model), 6.0);
        let zero = SatoModel::new([0.0, 0.0, 0.0]).unwrap();
        assert_eq!(sato_divergence(&zero), 0.0);
    }

    #[test]
    fn curl_and_potential_residuals_vanish() {
        let model = SatoModel::new([1.0, 3.0, 2.0]).unwrap();
        let sampler = BoxSampler::new(
            DVector::from_element(3, 0.1),
            DVector::from_element(3, 10.0),
        )
        .unwrap();
        assert_eq!(sato_curl_residual(&model, &sampler).unwrap().max_abs, 0.0);
        assert_eq!(
            sato_gradient_field_residual(&model, &sampler).unwrap().max_abs,
            0.0
        );
    }
}
