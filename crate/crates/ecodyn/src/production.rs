//! Production functions derived from conserved quantities, plus residual
//! checks that measure how well a function reproduces model output along a
//! trajectory.
//!
//! Each family is the explicit solution of a conservation-law level set for
//! the output coordinate: power-law output for the exponential model,
//! saturating (sigmoid) output for the capacity-bounded models. Builders
//! taking an initial state pin the integration constant so the surface
//! passes through that state exactly.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::CoeffSolution;
use crate::models::{DebtModel, LogisticModel, Trajectory};
use crate::poisson::Residual;

/// Numerically stable logistic sigmoid: never exponentiates a large
/// positive argument.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(u / (1 - u))` for `u` in (0, 1).
pub fn logit(u: f64) -> f64 {
    (u / (1.0 - u)).ln()
}

/// `Y = scale * L^alpha * K^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CobbDouglasPF {
    pub scale: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CobbDouglasPF {
    pub fn new(scale: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::config("scale", "must be positive and finite"));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::config("elasticities", "must be finite"));
        }
        Ok(CobbDouglasPF { scale, alpha, beta })
    }

    /// Constant returns to scale: `beta = 1 - alpha`.
    pub fn crs(scale: f64, alpha: f64) -> Result<Self> {
        CobbDouglasPF::new(scale, alpha, 1.0 - alpha)
    }

    pub fn eval(&self, labor: f64, capital: f64) -> Result<f64> {
        check_positive_input("labor", labor)?;
        check_positive_input("capital", capital)?;
        Ok(self.scale * labor.powf(self.alpha) * capital.powf(self.beta))
    }
}

/// `Y = a G / (1 + b G)` with `G = L^p K^(1-p)`: a saturating surface that
/// reduces to the power law when `b = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SShapedPF {
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

impl SShapedPF {
    pub fn new(a: f64, b: f64, p: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::config("a", "must be positive and finite"));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::config("b", "must be nonnegative and finite"));
        }
        if !p.is_finite() {
            return Err(Error::config("p", "must be finite"));
        }
        Ok(SShapedPF { a, b, p })
    }

    pub fn eval(&self, labor: f64, capital: f64) -> Result<f64> {
        check_positive_input("labor", labor)?;
        check_positive_input("capital", capital)?;
        let g = labor.powf(self.p) * capital.powf(1.0 - self.p);
        Ok(self.a * g / (1.0 + self.b * g))
    }
}

/// Sigmoid surface solved from the capacity-bounded conservation law:
/// `Y = n_f * sigma(p - q)` with `p = alpha ln L + beta ln K` and
/// `q = ln c + alpha ln(n_l - L) + beta ln(n_k - K)`.
///
/// Output approaches the capacity `n_f` as inputs approach theirs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogisticPF {
    pub n_f: f64,
    pub n_l: f64,
    pub n_k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
}

impl LogisticPF {
    pub fn new(n_f: f64, n_l: f64, n_k: f64, alpha: f64, beta: f64, c: f64) -> Result<Self> {
        for (name, v) in [("n_f", n_f), ("n_l", n_l), ("n_k", n_k)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(name, "capacity must be positive and finite"));
            }
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::config("elasticities", "must be finite"));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::config("c", "must be positive and finite"));
        }
        Ok(LogisticPF {
            n_f,
            n_l,
            n_k,
            alpha,
            beta,
            c,
        })
    }

    pub fn eval(&self, labor: f64, capital: f64) -> Result<f64> {
        check_open_interval("labor", labor, self.n_l)?;
        check_open_interval("capital", capital, self.n_k)?;
        let z = self.alpha * (labor / (self.n_l - labor)).ln()
            + self.beta * (capital / (self.n_k - capital)).ln()
            - self.c.ln();
        Ok(self.n_f * sigmoid(z))
    }
}

/// Sigmoid surface for the four-variable model with debt:
/// `Y = n_f * sigma(b3 * G)` where
/// `G = c - b1 (ln(k2 D) - k2 D) + b2 (ln(k1 K) - k1 K) + ln(L / (n_l - L)) / b4`
/// and `k1 = -a21/b2`, `k2 = -a12/b1`.
///
/// A bracket whose leading rate is zero drops out entirely (its scale
/// factor is undefined but the term carries a zero coefficient).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DebtPF {
    pub n_f: f64,
    pub b: [f64; 4],
    pub a12: f64,
    pub a21: f64,
    pub n_l: f64,
    pub c: f64,
}

impl DebtPF {
    pub fn new(n_f: f64, b: [f64; 4], a12: f64, a21: f64, n_l: f64, c: f64) -> Result<Self> {
        for (name, v) in [("n_f", n_f), ("n_l", n_l)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(name, "capacity must be positive and finite"));
            }
        }
        if b.iter().any(|v| !v.is_finite()) || !a12.is_finite() || !a21.is_finite() {
            return Err(Error::config("rates", "must be finite"));
        }
        if b[2] == 0.0 {
            return Err(Error::config("b[2]", "output rate must be nonzero"));
        }
        if b[3] == 0.0 {
            return Err(Error::config("b[3]", "labor rate must be nonzero"));
        }
        if b[0] != 0.0 && !(a12 * b[0] < 0.0) {
            return Err(Error::config("a12", "needs a12 * b1 < 0 so k2 > 0"));
        }
        if b[1] != 0.0 && !(a21 * b[1] < 0.0) {
            return Err(Error::config("a21", "needs a21 * b2 < 0 so k1 > 0"));
        }
        if !c.is_finite() {
            return Err(Error::config("c", "must be finite"));
        }
        Ok(DebtPF {
            n_f,
            b,
            a12,
            a21,
            n_l,
            c,
        })
    }

    pub fn eval(&self, labor: f64, capital: f64, debt: f64) -> Result<f64> {
        check_open_interval("labor", labor, self.n_l)?;
        let [b1, b2, b3, b4] = self.b;
        let mut g = self.c + (labor / (self.n_l - labor)).ln() / b4;
        if b1 != 0.0 {
            check_positive_input("debt", debt)?;
            let k2d = (-self.a12 / b1) * debt;
            g -= b1 * (k2d.ln() - k2d);
        }
        if b2 != 0.0 {
            check_positive_input("capital", capital)?;
            let k1k = (-self.a21 / b2) * capital;
            g += b2 * (k1k.ln() - k1k);
        }
        Ok(self.n_f * sigmoid(b3 * g))
    }
}

fn check_positive_input(name: &'static str, v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Column {
            name: name.to_string(),
            message: format!("input must be positive and finite, got {v}"),
        });
    }
    Ok(v)
}

fn check_open_interval(name: &'static str, v: f64, cap: f64) -> Result<f64> {
    check_positive_input(name, v)?;
    if v >= cap {
        return Err(Error::Column {
            name: name.to_string(),
            message: format!("input must stay below its capacity {cap}, got {v}"),
        });
    }
    Ok(v)
}

/// A production surface of any supported family, evaluated against model
/// states.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductionFunction {
    CobbDouglas(CobbDouglasPF),
    SShaped(SShapedPF),
    Logistic(LogisticPF),
    Debt(DebtPF),
}

impl ProductionFunction {
    pub fn family(&self) -> &'static str {
        match self {
            ProductionFunction::CobbDouglas(_) => "cobb-douglas",
            ProductionFunction::SShaped(_) => "s-shaped",
            ProductionFunction::Logistic(_) => "logistic",
            ProductionFunction::Debt(_) => "debt",
        }
    }

    /// State dimension the surface expects.
    pub fn dim(&self) -> usize {
        match self {
            ProductionFunction::Debt(_) => 4,
            _ => 3,
        }
    }

    /// Indices of the (labor, capital) coordinates in the model state.
    pub fn input_indices(&self) -> (usize, usize) {
        match self {
            ProductionFunction::Debt(_) => (3, 0),
            _ => (0, 1),
        }
    }

    /// Index of the output coordinate the surface predicts.
    pub fn output_index(&self) -> usize {
        2
    }

    /// Predict the output coordinate from the remaining state coordinates.
    pub fn predict(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        match self {
            ProductionFunction::CobbDouglas(pf) => pf.eval(x[0], x[1]),
            ProductionFunction::SShaped(pf) => pf.eval(x[0], x[1]),
            ProductionFunction::Logistic(pf) => pf.eval(x[0], x[1]),
            ProductionFunction::Debt(pf) => pf.eval(x[3], x[0], x[1]),
        }
    }
}

/// Power-law surface pinned to an initial state of the exponential model.
///
/// The conservation law `c . ln x = const` solved for `x3` gives
/// `Y = A L^alpha K^beta` with `A = exp(H(x0) / c3)` and the elasticities
/// `alpha = -c1/c3`, `beta = -c2/c3`.
pub fn cobb_douglas_from_state(c: &CoeffSolution, x0: &DVector<f64>) -> Result<CobbDouglasPF> {
    if x0.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: x0.len(),
        });
    }
    if c.c3 == 0.0 {
        return Err(Error::ZeroFreeParameter);
    }
    for i in 0..3 {
        check_positive_input("state", x0[i])?;
    }
    let h0 = c.c1 * x0[0].ln() + c.c2 * x0[1].ln() + c.c3 * x0[2].ln();
    let (alpha, beta) = c.elasticities();
    CobbDouglasPF::new((h0 / c.c3).exp(), alpha, beta)
}

/// Sigmoid surface pinned to an initial state of the capacity-bounded
/// model. The constant is `c = exp(-H3(x0) / c3)` with
/// `H3 = sum c_k ln(x_k / (n_k - x_k))`.
pub fn logistic_from_state(
    model: &LogisticModel,
    c: &CoeffSolution,
    x0: &DVector<f64>,
) -> Result<LogisticPF> {
    if x0.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: x0.len(),
        });
    }
    if c.c3 == 0.0 {
        return Err(Error::ZeroFreeParameter);
    }
    let n = model.n();
    for i in 0..3 {
        check_open_interval("state", x0[i], n[i])?;
    }
    let h0 = c.c1 * (x0[0] / (n[0] - x0[0])).ln()
        + c.c2 * (x0[1] / (n[1] - x0[1])).ln()
        + c.c3 * (x0[2] / (n[2] - x0[2])).ln();
    let (alpha, beta) = c.elasticities();
    LogisticPF::new(n[2], n[0], n[1], alpha, beta, (-h0 / c.c3).exp())
}

/// Sigmoid surface pinned to an initial state of the four-variable model.
/// The additive constant is the conserved value `H4(x0)`.
pub fn debt_from_state(model: &DebtModel, x0: &DVector<f64>) -> Result<DebtPF> {
    if x0.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: x0.len(),
        });
    }
    let [b1, b2, b3, b4] = model.b();
    if b3 == 0.0 {
        return Err(Error::config("model.b[2]", "output rate must be nonzero"));
    }
    if b4 == 0.0 {
        return Err(Error::config("model.b[3]", "labor rate must be nonzero"));
    }
    check_open_interval("output", x0[2], model.n_f())?;
    check_open_interval("labor", x0[3], model.n_l())?;
    // Conserved value at x0, with zero-rate brackets dropped.
    let mut h0 = logit(x0[2] / model.n_f()) / b3 - logit(x0[3] / model.n_l()) / b4;
    if b1 != 0.0 {
        check_positive_input("debt", x0[1])?;
        let k2d = (-model.a12() / b1) * x0[1];
        h0 += b1 * (k2d.ln() - k2d);
    }
    if b2 != 0.0 {
        check_positive_input("capital", x0[0])?;
        let k1k = (-model.a21() / b2) * x0[0];
        h0 -= b2 * (k1k.ln() - k1k);
    }
    DebtPF::new(
        model.n_f(),
        model.b(),
        model.a12(),
        model.a21(),
        model.n_l(),
        h0,
    )
}

/// Largest relative gap between predicted and simulated output along a
/// trajectory: `|pf(x) - x_out| / max(1, |x_out|)` over all recorded
/// states.
pub fn surface_residual(pf: &ProductionFunction, traj: &Trajectory) -> Result<Residual> {
    let out = pf.output_index();
    let mut points = Vec::with_capacity(traj.len());
    for state in &traj.states {
        let predicted = pf.predict(state)?;
        let observed = state[out];
        points.push(((predicted - observed).abs() / observed.abs().max(1.0), state.clone()));
    }
    Residual::over(points)
}

/// Output elasticities measured as central log-derivatives at a state:
/// `d ln Y / d ln L` and `d ln Y / d ln K`. Exact (up to rounding) for the
/// power-law family.
pub fn log_elasticities(
    pf: &ProductionFunction,
    x: &DVector<f64>,
    delta: f64,
) -> Result<(f64, f64)> {
    let (labor_idx, capital_idx) = pf.input_indices();
    let bump = |idx: usize, sign: f64| -> Result<f64> {
        let mut probe = x.clone();
        probe[idx] *= (sign * delta).exp();
        Ok(pf.predict(&probe)?.ln())
    };
    let eps_l = (bump(labor_idx, 1.0)? - bump(labor_idx, -1.0)?) / (2.0 * delta);
    let eps_k = (bump(capital_idx, 1.0)? - bump(capital_idx, -1.0)?) / (2.0 * delta);
    Ok((eps_l, eps_k))
}
