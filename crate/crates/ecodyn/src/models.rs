//! Concrete growth models and their Lotka-Volterra normal form.
//!
//! Every model is a special case of `dx_i/dt = x_i (b_i + sum_j a_ij x_j)`:
//!
//! * [`SatoModel`] - pure exponential growth (`a = 0`) of labor, capital,
//!   and production: state `(x1, x2, x3) = (L, K, Y)`.
//! * [`LogisticModel`] - saturating growth with capacities `N_i`
//!   (`a = diag(-b_i / N_i)`), same state roles.
//! * [`DebtModel`] - four species: capital and debt coupled predator-prey
//!   style, production and labor logistic. State
//!   `(x1, x2, x3, x4) = (K, D, Y, L)` with capacities `N_f` for production
//!   and `N_L` for labor.
//!
//! Each model also carries the log-style change of coordinates under which
//! its Hamiltonian structure has constant or separable coefficients, plus
//! closed-form flows used as integration oracles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poisson::{Domain, VectorField};
use std::sync::Arc;

/// General Lotka-Volterra system `dx_i/dt = x_i (b_i + sum_j a_ij x_j)`.
#[derive(Debug, Clone)]
pub struct LVSystem {
    pub b: DVector<f64>,
    pub a: DMatrix<f64>,
}

impl LVSystem {
    pub fn new(b: DVector<f64>, a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != b.len() || a.ncols() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: b.len(),
                got: a.nrows().max(a.ncols()),
            });
        }
        if b.iter().any(|v| !v.is_finite()) || a.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("lv", "coefficients must be finite"));
        }
        Ok(LVSystem { b, a })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn rhs(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let interaction = &self.a * x;
        Ok(DVector::from_fn(self.dim(), |i, _| {
            x[i] * (self.b[i] + interaction[i])
        }))
    }

    /// Analytic Jacobian `J_ij = delta_ij (b_i + (a x)_i) + x_i a_ij`.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let interaction = &self.a * x;
        Ok(DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            let mut v = x[i] * self.a[(i, j)];
            if i == j {
                v += self.b[i] + interaction[i];
            }
            v
        }))
    }

    pub fn vector_field(&self) -> VectorField {
        let sys = self.clone();
        let dim = self.dim();
        VectorField::from_closures(
            dim,
            Arc::new(move |x: &DVector<f64>| {
                let interaction = &sys.a * x;
                DVector::from_fn(dim, |i, _| x[i] * (sys.b[i] + interaction[i]))
            }),
            Domain::unbounded(dim),
        )
    }
}

/// Common surface of the three named models.
pub trait GrowthModel {
    fn dim(&self) -> usize;
    fn name(&self) -> &'static str;

    /// The model as a general Lotka-Volterra system.
    fn as_lv(&self) -> LVSystem;

    /// Domain on which the model's Hamiltonian machinery is defined
    /// (logistic-type coordinates must stay strictly below capacity).
    fn state_domain(&self) -> Domain;

    /// Domain within which trajectories are integrated. Wider than
    /// [`GrowthModel::state_domain`] for the saturating models: the dynamics
    /// are perfectly regular at and above capacity, only the conserved
    /// quantity is not.
    fn flow_domain(&self) -> Domain;

    /// Domain of the log coordinates.
    fn log_domain(&self) -> Domain;

    fn to_log(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn from_log(&self, v: &DVector<f64>) -> Result<DVector<f64>>;

    /// Model right-hand side in log coordinates.
    fn rhs_log(&self, v: &DVector<f64>) -> Result<DVector<f64>>;

    fn vector_field(&self) -> VectorField {
        let lv = self.as_lv();
        let dim = self.dim();
        let domain = self.flow_domain();
        VectorField::from_closures(
            dim,
            Arc::new(move |x: &DVector<f64>| {
                let interaction = &lv.a * x;
                DVector::from_fn(dim, |i, _| x[i] * (lv.b[i] + interaction[i]))
            }),
            domain,
        )
    }

    fn log_vector_field(&self) -> VectorField;
}

/// Exponential growth `dx_i/dt = b_i x_i` of labor, capital, and production.
#[derive(Debug, Clone, Copy)]
pub struct SatoModel {
    b: [f64; 3],
}

impl SatoModel {
    pub fn new(b: [f64; 3]) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("model.b", "growth rates must be finite"));
        }
        Ok(SatoModel { b })
    }

    pub fn b(&self) -> [f64; 3] {
        self.b
    }

    pub fn b_vec(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.b)
    }

    /// Closed-form flow `x_i(t) = x_i(0) e^{b_i t}`, the oracle for
    /// integrator accuracy.
    pub fn exact_state(&self, x0: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        if x0.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: x0.len(),
            });
        }
        Ok(DVector::from_fn(3, |i, _| x0[i] * (self.b[i] * t).exp()))
    }
}

impl GrowthModel for SatoModel {
    fn dim(&self) -> usize {
        3
    }

    fn name(&self) -> &'static str {
        "sato"
    }

    fn as_lv(&self) -> LVSystem {
        LVSystem {
            b: self.b_vec(),
            a: DMatrix::zeros(3, 3),
        }
    }

    fn state_domain(&self) -> Domain {
        Domain::positive(3)
    }

    fn flow_domain(&self) -> Domain {
        Domain::positive(3)
    }

    fn log_domain(&self) -> Domain {
        Domain::unbounded(3)
    }

    fn to_log(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.state_domain().check(x)?;
        Ok(x.map(f64::ln))
    }

    fn from_log(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.log_domain().check(v)?;
        Ok(v.map(f64::exp))
    }

    fn rhs_log(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.log_domain().check(v)?;
        Ok(self.b_vec())
    }

    fn log_vector_field(&self) -> VectorField {
        let b = self.b_vec();
        VectorField::from_closures(3, Arc::new(move |_: &DVector<f64>| b.clone()), Domain::unbounded(3))
    }
}

/// Saturating growth `dx_i/dt = b_i x_i (1 - x_i / N_i)`.
#[derive(Debug, Clone, Copy)]
pub struct LogisticModel {
    b: [f64; 3],
    n: [f64; 3],
}

impl LogisticModel {
    pub fn new(b: [f64; 3], n: [f64; 3]) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite()) || n.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("model", "parameters must be finite"));
        }
        for (i, &cap) in n.iter().enumerate() {
            if cap <= 0.0 {
                return Err(Error::config(
                    format!("model.n[{i}]"),
                    format!("capacity must be positive, got {cap}"),
                ));
            }
        }
        Ok(LogisticModel { b, n })
    }

    pub fn b(&self) -> [f64; 3] {
        self.b
    }

    pub fn n(&self) -> [f64; 3] {
        self.n
    }

    pub fn b_vec(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.b)
    }
}

impl GrowthModel for LogisticModel {
    fn dim(&self) -> usize {
        3
    }

    fn name(&self) -> &'static str {
        "logistic"
    }

    fn as_lv(&self) -> LVSystem {
        LVSystem {
            b: self.b_vec(),
            a: DMatrix::from_fn(3, 3, |i, j| {
                if i == j {
                    -self.b[i] / self.n[i]
                } else {
                    0.0
                }
            }),
        }
    }

    fn state_domain(&self) -> Domain {
        Domain::open_box(DVector::zeros(3), DVector::from_row_slice(&self.n))
            .expect("capacities are positive")
    }

    fn flow_domain(&self) -> Domain {
        Domain::positive(3)
    }

    fn log_domain(&self) -> Domain {
        Domain::negative(3)
    }

    fn to_log(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.state_domain().check(x)?;
        Ok(DVector::from_fn(3, |i, _| (x[i] / self.n[i]).ln()))
    }

    fn from_log(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.log_domain().check(v)?;
        Ok(DVector::from_fn(3, |i, _| self.n[i] * v[i].exp()))
    }

    fn rhs_log(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: v.len(),
            });
        }
        Ok(DVector::from_fn(3, |i, _| {
            self.b[i] * (1.0 - v[i].exp())
        }))
    }

    fn log_vector_field(&self) -> VectorField {
        let b = self.b;
        VectorField::from_closures(
            3,
            Arc::new(move |v: &DVector<f64>| {
                DVector::from_fn(3, |i, _| b[i] * (1.0 - v[i].exp()))
            }),
            Domain::negative(3),
        )
    }
}

/// Four-species capital/debt system: capital `x1 = K` and debt `x2 = D`
/// interact predator-prey style, production `x3 = Y` (capacity `N_f`) and
/// labor `x4 = L` (capacity `N_L`) grow logistically.
///
/// ```text
/// dK/dt = K (b1 + a12 D)
/// dD/dt = D (b2 + a21 K)
/// dY/dt = b3 Y (1 - Y / N_f)
/// dL/dt = b4 L (1 - L / N_L)
/// ```
///
/// The log substitution requires `a12 b1 < 0` and `a21 b2 < 0`. The K and D
/// coordinates are paired crosswise, `v1 = ln(-(a21/b2) K)` and
/// `v2 = ln(-(a12/b1) D)`; this is the pairing under which the log dynamics
/// close to `dv1/dt = b1 (1 - e^{v2})`, `dv2/dt = b2 (1 - e^{v1})` with no
/// extra parameter condition.
#[derive(Debug, Clone, Copy)]
pub struct DebtModel {
    b: [f64; 4],
    a12: f64,
    a21: f64,
    n_f: f64,
    n_l: f64,
}

impl DebtModel {
    pub fn new(b: [f64; 4], a12: f64, a21: f64, n_f: f64, n_l: f64) -> Result<Self> {
        let finite =
            b.iter().all(|v| v.is_finite()) && [a12, a21, n_f, n_l].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("model", "parameters must be finite"));
        }
        if !(a12 * b[0] < 0.0) {
            return Err(Error::config(
                "model.a12",
                format!("a12 * b1 = {} must be negative for the log substitution", a12 * b[0]),
            ));
        }
        if !(a21 * b[1] < 0.0) {
            return Err(Error::config(
                "model.a21",
                format!("a21 * b2 = {} must be negative for the log substitution", a21 * b[1]),
            ));
        }
        if n_f <= 0.0 {
            return Err(Error::config("model.n_f", "production capacity must be positive"));
        }
        if n_l <= 0.0 {
            return Err(Error::config("model.n_l", "labor capacity must be positive"));
        }
        Ok(DebtModel {
            b,
            a12,
            a21,
            n_f,
            n_l,
        })
    }

    pub fn b(&self) -> [f64; 4] {
        self.b
    }

    pub fn a12(&self) -> f64 {
        self.a12
    }

    pub fn a21(&self) -> f64 {
        self.a21
    }

    pub fn n_f(&self) -> f64 {
        self.n_f
    }

    pub fn n_l(&self) -> f64 {
        self.n_l
    }

    /// Scale factors of the crosswise log substitution:
    /// `v1 = ln(kappa1 K)` with `kappa1 = -a21/b2`, and
    /// `v2 = ln(kappa2 D)` with `kappa2 = -a12/b1`. Both are positive by the
    /// sign constraints enforced at construction.
    pub fn kappa(&self) -> (f64, f64) {
        (-self.a21 / self.b[1], -self.a12 / self.b[0])
    }
}

impl GrowthModel for DebtModel {
    fn dim(&self) -> usize {
        4
    }

    fn name(&self) -> &'static str {
        "debt"
    }

    fn as_lv(&self) -> LVSystem {
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = self.a12;
        a[(1, 0)] = self.a21;
        a[(2, 2)] = -self.b[2] / self.n_f;
        a[(3, 3)] = -self.b[3] / self.n_l;
        LVSystem {
            b: DVector::from_row_slice(&self.b),
            a,
        }
    }

    fn state_domain(&self) -> Domain {
        Domain::open_box(
            DVector::zeros(4),
            DVector::from_vec(vec![f64::INFINITY, f64::INFINITY, self.n_f, self.n_l]),
        )
        .expect("capacities are positive")
    }

    fn flow_domain(&self) -> Domain {
        Domain::positive(4)
    }

    fn log_domain(&self) -> Domain {
        Domain::open_box(
            DVector::from_element(4, f64::NEG_INFINITY),
            DVector::from_vec(vec![f64::INFINITY, f64::INFINITY, 0.0, 0.0]),
        )
        .expect("bounds ordered")
    }

    fn to_log(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.state_domain().check(x)?;
        let (kappa1, kappa2) = self.kappa();
        Ok(DVector::from_vec(vec![
            (kappa1 * x[0]).ln(),
            (kappa2 * x[1]).ln(),
            (x[2] / self.n_f).ln(),
            (x[3] / self.n_l).ln(),
        ]))
    }

    fn from_log(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.log_domain().check(v)?;
        let (kappa1, kappa2) = self.kappa();
        Ok(DVector::from_vec(vec![
            v[0].exp() / kappa1,
            v[1].exp() / kappa2,
            self.n_f * v[2].exp(),
            self.n_l * v[3].exp(),
        ]))
    }

    fn rhs_log(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: v.len(),
            });
        }
        Ok(DVector::from_vec(vec![
            self.b[0] * (1.0 - v[1].exp()),
            self.b[1] * (1.0 - v[0].exp()),
            self.b[2] * (1.0 - v[2].exp()),
            self.b[3] * (1.0 - v[3].exp()),
        ]))
    }

    fn log_vector_field(&self) -> VectorField {
        let b = self.b;
        VectorField::from_closures(
            4,
            Arc::new(move |v: &DVector<f64>| {
                DVector::from_vec(vec![
                    b[0] * (1.0 - v[1].exp()),
                    b[1] * (1.0 - v[0].exp()),
                    b[2] * (1.0 - v[2].exp()),
                    b[3] * (1.0 - v[3].exp()),
                ])
            }),
            self.log_domain(),
        )
    }
}

/// Scalar logistic flow `x(t)` for rate `b`, capacity `n`, start `x0`,
/// written in the saturation-stable form `n / (1 + (n/x0 - 1) e^{-b t})`.
/// Used as an oracle for integrator accuracy.
pub fn logistic_closed_form(b: f64, n: f64, x0: f64, t: f64) -> f64 {
    n / (1.0 + (n / x0 - 1.0) * (-b * t).exp())
}

/// Recorded solution samples of one integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Model tag, e.g. `"sato"`.
    pub model: String,
    /// Strictly increasing sample times.
    pub times: Vec<f64>,
    /// State at each sample time.
    pub states: Vec<DVector<f64>>,
    /// One name per monitored Hamiltonian.
    pub monitor_names: Vec<String>,
    /// One series per monitored Hamiltonian, aligned with `times`.
    pub monitor_values: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn from_parts(
        model: impl Into<String>,
        times: Vec<f64>,
        states: Vec<DVector<f64>>,
        monitor_names: Vec<String>,
        monitor_values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: states.len(),
            });
        }
        for w in times.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::config(
                    "trajectory.times",
                    format!("sample times must be strictly increasing, got {} then {}", w[0], w[1]),
                ));
            }
        }
        for (i, x) in states.iter().enumerate() {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { time: times[i] });
            }
        }
        if monitor_names.len() != monitor_values.len()
            || monitor_values.iter().any(|s| s.len() != times.len())
        {
            return Err(Error::config(
                "trajectory.monitors",
                "monitor series must align with sample times",
            ));
        }
        Ok(Trajectory {
            model: model.into(),
            times,
            states,
            monitor_names,
            monitor_values,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn final_state(&self) -> Option<&DVector<f64>> {
        self.states.last()
    }
}
