//! Poisson bivectors, Hamiltonian functions, and structure-verification
//! residuals.
//!
//! A bivector is represented by its antisymmetric coefficient matrix
//! `P(x)`, and the Hamiltonian vector field of `H` is `X_H(x) = P(x) * grad
//! H(x)`. This fixes the sign and factor conventions once: every structure
//! shipped by this crate is constructed so that `X_H` equals the model
//! right-hand side exactly, and the residual operations below measure how
//! well that holds.
//!
//! Residuals are evaluated over seeded uniform samples from an explicit box
//! so that every number reported here is reproducible.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::Trajectory;

type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type VecFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type MatFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type PartialFn = Arc<dyn Fn(&DVector<f64>, usize) -> DMatrix<f64> + Send + Sync>;

/// Seed used by samplers unless the caller overrides it.
pub const DEFAULT_SEED: u64 = 1729;

/// Open box `lo_i < x_i < hi_i`, with infinite bounds allowed.
///
/// Doubles as the admissibility predicate of Hamiltonians and vector
/// fields; a violation always names the offending coordinate.
#[derive(Debug, Clone)]
pub struct Domain {
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl Domain {
    pub fn open_box(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        for i in 0..lo.len() {
            if !(lo[i] < hi[i]) {
                return Err(Error::config(
                    format!("domain[{i}]"),
                    format!("lower bound {} must be below upper bound {}", lo[i], hi[i]),
                ));
            }
        }
        Ok(Domain { lo, hi })
    }

    /// No constraint beyond finiteness.
    pub fn unbounded(dim: usize) -> Self {
        Domain {
            lo: DVector::from_element(dim, f64::NEG_INFINITY),
            hi: DVector::from_element(dim, f64::INFINITY),
        }
    }

    /// Positive orthant `x_i > 0`.
    pub fn positive(dim: usize) -> Self {
        Domain {
            lo: DVector::zeros(dim),
            hi: DVector::from_element(dim, f64::INFINITY),
        }
    }

    /// Negative orthant `x_i < 0` (log coordinates of below-capacity states).
    pub fn negative(dim: usize) -> Self {
        Domain {
            lo: DVector::from_element(dim, f64::NEG_INFINITY),
            hi: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &DVector<f64> {
        &self.lo
    }

    pub fn hi(&self) -> &DVector<f64> {
        &self.hi
    }

    /// Index and value of the first coordinate outside the box, if any.
    /// Non-finite coordinates always count as violations.
    pub fn first_violation(&self, x: &DVector<f64>) -> Option<(usize, f64)> {
        for i in 0..x.len() {
            if !x[i].is_finite() || x[i] <= self.lo[i] || x[i] >= self.hi[i] {
                return Some((i, x[i]));
            }
        }
        None
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim() && self.first_violation(x).is_none()
    }

    fn constraint_text(&self, i: usize) -> String {
        match (self.lo[i].is_finite(), self.hi[i].is_finite()) {
            (true, true) => format!("{} < x{} < {}", self.lo[i], i + 1, self.hi[i]),
            (true, false) => format!("x{} > {}", i + 1, self.lo[i]),
            (false, true) => format!("x{} < {}", i + 1, self.hi[i]),
            (false, false) => format!("x{} finite", i + 1),
        }
    }

    pub fn check(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        match self.first_violation(x) {
            None => Ok(()),
            Some((i, v)) => Err(Error::Inadmissible {
                coordinate: i + 1,
                value: v,
                constraint: self.constraint_text(i),
            }),
        }
    }
}

/// Seeded uniform sampler over an open box. Identical seed and bounds give
/// an identical point set, so residual reports are reproducible.
#[derive(Debug, Clone)]
pub struct BoxSampler {
    lo: DVector<f64>,
    hi: DVector<f64>,
    count: usize,
    seed: u64,
}

impl BoxSampler {
    pub fn new(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        for i in 0..lo.len() {
            if !lo[i].is_finite() || !hi[i].is_finite() || !(lo[i] < hi[i]) {
                return Err(Error::config(
                    format!("sampler box[{i}]"),
                    "bounds must be finite with lo < hi",
                ));
            }
        }
        Ok(BoxSampler {
            lo,
            hi,
            count: 100,
            seed: DEFAULT_SEED,
        })
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn points(&self) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                DVector::from_fn(self.dim(), |i, _| rng.gen_range(self.lo[i]..self.hi[i]))
            })
            .collect()
    }
}

/// Worst-case magnitude of a pointwise residual over a sample set.
#[derive(Debug, Clone)]
pub struct Residual {
    /// Largest absolute residual observed.
    pub max_abs: f64,
    /// Sample point where the maximum was attained.
    pub argmax_point: DVector<f64>,
    /// Number of points inspected.
    pub samples: usize,
    /// True when the identity holds for structural reasons (for example the
    /// Jacobi identity below three dimensions) and nothing was measured.
    pub vacuous: bool,
}

impl Residual {
    pub(crate) fn over<I>(points: I) -> Result<Residual>
    where
        I: IntoIterator<Item = (f64, DVector<f64>)>,
    {
        let mut max_abs = -1.0;
        let mut argmax_point = DVector::zeros(0);
        let mut samples = 0;
        for (value, point) in points {
            samples += 1;
            if value.abs() > max_abs {
                max_abs = value.abs();
                argmax_point = point;
            }
        }
        if samples == 0 {
            return Err(Error::EmptySample);
        }
        Ok(Residual {
            max_abs,
            argmax_point,
            samples,
            vacuous: false,
        })
    }
}

/// Poisson bivector as a state-dependent antisymmetric coefficient matrix,
/// together with its analytic partial derivatives.
#[derive(Clone)]
pub struct Bivector {
    dim: usize,
    coeff: MatFn,
    coeff_partial: PartialFn,
}

impl std::fmt::Debug for Bivector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Bivector").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl Bivector {
    /// Build from raw closures. `coeff(x)` returns the full matrix,
    /// `coeff_partial(x, l)` the entrywise derivative with respect to `x_l`.
    pub fn from_closures(dim: usize, coeff: MatFn, coeff_partial: PartialFn) -> Self {
        Bivector {
            dim,
            coeff,
            coeff_partial,
        }
    }

    /// Constant-coefficient bivector. `s` must be exactly antisymmetric.
    pub fn constant(s: DMatrix<f64>) -> Result<Self> {
        check_skew(&s)?;
        let dim = s.nrows();
        let zero = DMatrix::zeros(dim, dim);
        Ok(Bivector {
            dim,
            coeff: Arc::new(move |_| s.clone()),
            coeff_partial: Arc::new(move |_, _| zero.clone()),
        })
    }

    /// Separable bivector `P_ij(x) = s_ij * u(x_i) * u(x_j)` for a constant
    /// antisymmetric `s` and a scalar profile `u` with derivative `du`.
    ///
    /// This family covers every coefficient matrix used by the growth
    /// models: `u(x) = x` gives the quadratic bracket of the exponential
    /// model, `u(v) = 1 - e^v` the logistic bracket in log coordinates.
    /// Entries are computed as products of per-coordinate factors, so
    /// antisymmetry is exact in floating point.
    pub fn separable<U, V>(s: DMatrix<f64>, u: U, du: V) -> Result<Self>
    where
        U: Fn(f64) -> f64 + Send + Sync + 'static,
        V: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_skew(&s)?;
        let dim = s.nrows();
        let s_coeff = s.clone();
        let u_coeff = Arc::new(u);
        let u_partial = Arc::clone(&u_coeff);
        let coeff: MatFn = Arc::new(move |x: &DVector<f64>| {
            let vals: Vec<f64> = x.iter().map(|&xi| u_coeff(xi)).collect();
            DMatrix::from_fn(dim, dim, |i, j| s_coeff[(i, j)] * vals[i] * vals[j])
        });
        let coeff_partial: PartialFn = Arc::new(move |x: &DVector<f64>, l: usize| {
            let vals: Vec<f64> = x.iter().map(|&xi| u_partial(xi)).collect();
            let dl = du(x[l]);
            DMatrix::from_fn(dim, dim, |i, j| {
                let mut d = 0.0;
                if i == l {
                    d += dl * vals[j];
                }
                if j == l {
                    d += vals[i] * dl;
                }
                s[(i, j)] * d
            })
        });
        Ok(Bivector {
            dim,
            coeff,
            coeff_partial,
        })
    }

    /// Quadratic bivector `P_ij(x) = s_ij * x_i * x_j`.
    pub fn quadratic(s: DMatrix<f64>) -> Result<Self> {
        Bivector::separable(s, |x| x, |_| 1.0)
    }

    /// Pencil `P + lambda * Q` of two bivectors of equal dimension.
    pub fn pencil(p: &Bivector, q: &Bivector, lambda: f64) -> Result<Self> {
        if p.dim != q.dim {
            return Err(Error::DimensionMismatch {
                expected: p.dim,
                got: q.dim,
            });
        }
        let (pc, qc) = (Arc::clone(&p.coeff), Arc::clone(&q.coeff));
        let (pp, qp) = (Arc::clone(&p.coeff_partial), Arc::clone(&q.coeff_partial));
        Ok(Bivector {
            dim: p.dim,
            coeff: Arc::new(move |x| pc(x) + qc(x) * lambda),
            coeff_partial: Arc::new(move |x, l| pp(x, l) + qp(x, l) * lambda),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        Ok((self.coeff)(x))
    }

    /// Entrywise derivative of the coefficient matrix with respect to `x_l`.
    pub fn coeff_partial(&self, x: &DVector<f64>, l: usize) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        if l >= self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: l + 1,
            });
        }
        Ok((self.coeff_partial)(x, l))
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

fn check_skew(s: &DMatrix<f64>) -> Result<()> {
    if s.nrows() != s.ncols() {
        return Err(Error::DimensionMismatch {
            expected: s.nrows(),
            got: s.ncols(),
        });
    }
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            if s[(i, j)] + s[(j, i)] != 0.0 {
                return Err(Error::Singular(format!(
                    "coefficient matrix not antisymmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// Scalar Hamiltonian with analytic gradient and an explicit admissible
/// domain.
#[derive(Clone)]
pub struct HamiltonianFn {
    name: String,
    dim: usize,
    value: ScalarFn,
    grad: VecFn,
    domain: Domain,
}

impl std::fmt::Debug for HamiltonianFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianFn")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl HamiltonianFn {
    pub fn from_closures(
        name: impl Into<String>,
        dim: usize,
        value: ScalarFn,
        grad: VecFn,
        domain: Domain,
    ) -> Self {
        HamiltonianFn {
            name: name.into(),
            dim,
            value,
            grad,
            domain,
        }
    }

    /// Log-linear Hamiltonian `sum_k c_k ln x_k` on the positive orthant.
    pub fn log_linear(name: impl Into<String>, c: DVector<f64>) -> Self {
        let dim = c.len();
        let cv = c.clone();
        let cg = c;
        HamiltonianFn {
            name: name.into(),
            dim,
            value: Arc::new(move |x: &DVector<f64>| {
                (0..dim).map(|k| cv[k] * x[k].ln()).sum()
            }),
            grad: Arc::new(move |x: &DVector<f64>| {
                DVector::from_fn(dim, |k, _| cg[k] / x[k])
            }),
            domain: Domain::positive(dim),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn admissible(&self, x: &DVector<f64>) -> bool {
        self.domain.contains(x)
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.domain.check(x)?;
        Ok((self.value)(x))
    }

    pub fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.domain.check(x)?;
        Ok((self.grad)(x))
    }
}

/// Autonomous vector field with an admissible domain for integration.
///
/// Evaluation itself does not enforce the domain: intermediate integrator
/// stages may probe slightly outside it. Accepted states are checked by the
/// integrator against `domain()`.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    f: VecFn,
    domain: Domain,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl VectorField {
    pub fn from_closures(dim: usize, f: VecFn, domain: Domain) -> Self {
        VectorField { dim, f, domain }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((self.f)(x))
    }
}

/// Hamiltonian vector field `X_H(x) = P(x) * grad H(x)` at a single state.
pub fn hamiltonian_vector_field(
    pi: &Bivector,
    h: &HamiltonianFn,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    if pi.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            got: h.dim(),
        });
    }
    let grad = h.grad(x)?;
    Ok(pi.coeff(x)? * grad)
}

/// Package `(P, H)` as an integrable vector field on the Hamiltonian's
/// domain.
pub fn pair_field(pi: &Bivector, h: &HamiltonianFn) -> Result<VectorField> {
    if pi.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            got: h.dim(),
        });
    }
    let coeff = Arc::clone(&pi.coeff);
    let grad = Arc::clone(&h.grad);
    Ok(VectorField {
        dim: pi.dim(),
        f: Arc::new(move |x| coeff(x) * grad(x)),
        domain: h.domain.clone(),
    })
}

/// Largest antisymmetry defect `|P_ij + P_ji|` over the sample set.
pub fn skew_residual(pi: &Bivector, sampler: &BoxSampler) -> Result<Residual> {
    if sampler.dim() != pi.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            got: sampler.dim(),
        });
    }
    Residual::over(sampler.points().into_iter().map(|x| {
        let m = (pi.coeff)(&x);
        let mut worst: f64 = 0.0;
        for i in 0..pi.dim() {
            for j in 0..pi.dim() {
                worst = worst.max((m[(i, j)] + m[(j, i)]).abs());
            }
        }
        (worst, x)
    }))
}

/// Largest Jacobi defect over the sample set, in the coordinate form
///
/// `sum_l P_il d_l P_jk + P_jl d_l P_ki + P_kl d_l P_ij` for all `i < j < k`.
///
/// Below three dimensions every triple sum is empty, so the residual is
/// trivially zero and flagged `vacuous`.
pub fn jacobi_residual(pi: &Bivector, sampler: &BoxSampler) -> Result<Residual> {
    if sampler.dim() != pi.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            got: sampler.dim(),
        });
    }
    let n = pi.dim();
    if n < 3 {
        if sampler.count() == 0 {
            return Err(Error::EmptySample);
        }
        return Ok(Residual {
            max_abs: 0.0,
            argmax_point: DVector::zeros(n),
            samples: sampler.count(),
            vacuous: true,
        });
    }
    Residual::over(sampler.points().into_iter().map(|x| {
        let m = (pi.coeff)(&x);
        let partials: Vec<DMatrix<f64>> = (0..n).map(|l| (pi.coeff_partial)(&x, l)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let mut t = 0.0;
                    for l in 0..n {
                        t += m[(i, l)] * partials[l][(j, k)]
                            + m[(j, l)] * partials[l][(k, i)]
                            + m[(k, l)] * partials[l][(i, j)];
                    }
                    worst = worst.max(t.abs());
                }
            }
        }
        (worst, x)
    }))
}

/// Largest relative gap between the Hamiltonian field of `(P, H)` and a
/// reference field, `max_i |X_H - X_ref|_inf / max(1, |X_ref|_inf)` over the
/// sample set.
pub fn field_consistency_residual(
    pi: &Bivector,
    h: &HamiltonianFn,
    reference: &VectorField,
    sampler: &BoxSampler,
) -> Result<Residual> {
    if pi.dim() != reference.dim() || pi.dim() != sampler.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            got: reference.dim().max(sampler.dim()),
        });
    }
    let mut worst: Vec<(f64, DVector<f64>)> = Vec::with_capacity(sampler.count());
    for x in sampler.points() {
        let xh = hamiltonian_vector_field(pi, h, &x)?;
        let xr = reference.eval(&x)?;
        let diff = (&xh - &xr).amax();
        let scale = xr.amax().max(1.0);
        worst.push((diff / scale, x));
    }
    Residual::over(worst)
}

/// Largest relative drift of `H` along a recorded trajectory,
/// `max_t |H(x(t)) - H(x(0))| / max(1, |H(x(0))|)`.
///
/// Every recorded state must lie in the Hamiltonian's domain; the first
/// offending sample index is reported otherwise.
pub fn conservation_residual(h: &HamiltonianFn, traj: &Trajectory) -> Result<Residual> {
    if traj.states.is_empty() {
        return Err(Error::EmptySample);
    }
    for (idx, x) in traj.states.iter().enumerate() {
        if x.len() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                got: x.len(),
            });
        }
        if let Some((coord, _)) = h.domain().first_violation(x) {
            return Err(Error::InadmissibleSample {
                index: idx,
                coordinate: coord + 1,
            });
        }
    }
    let h0 = (h.value)(&traj.states[0]);
    let scale = h0.abs().max(1.0);
    Residual::over(
        traj.states
            .iter()
            .map(|x| (((h.value)(x) - h0) / scale, x.clone())),
    )
}

/// Worst relative gap between the analytic gradient of `H` and a central
/// finite difference with the given step. Sample boxes must keep at least
/// `step` of margin inside the domain.
pub fn grad_fd_residual(h: &HamiltonianFn, sampler: &BoxSampler, step: f64) -> Result<Residual> {
    let mut worst: Vec<(f64, DVector<f64>)> = Vec::with_capacity(sampler.count());
    for x in sampler.points() {
        let g = h.grad(&x)?;
        let mut r: f64 = 0.0;
        for l in 0..h.dim() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[l] += step;
            xm[l] -= step;
            let fd = (h.value(&xp)? - h.value(&xm)?) / (2.0 * step);
            r = r.max((fd - g[l]).abs() / g[l].abs().max(1.0));
        }
        worst.push((r, x));
    }
    Residual::over(worst)
}

/// Worst relative gap between `coeff_partial` and a central finite
/// difference of `coeff` with the given step.
pub fn coeff_partial_fd_residual(
    pi: &Bivector,
    sampler: &BoxSampler,
    step: f64,
) -> Result<Residual> {
    let n = pi.dim();
    let mut worst: Vec<(f64, DVector<f64>)> = Vec::with_capacity(sampler.count());
    for x in sampler.points() {
        let mut r: f64 = 0.0;
        for l in 0..n {
            let analytic = pi.coeff_partial(&x, l)?;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[l] += step;
            xm[l] -= step;
            let fd = (pi.coeff(&xp)? - pi.coeff(&xm)?) / (2.0 * step);
            for i in 0..n {
                for j in 0..n {
                    let a = analytic[(i, j)];
                    r = r.max((fd[(i, j)] - a).abs() / a.abs().max(1.0));
                }
            }
        }
        worst.push((r, x));
    }
    Residual::over(worst)
}

/// The fixed antisymmetric coefficient matrix shared by the
/// three-dimensional growth structures:
///
/// ```text
///  0 -1 -1
///  1  0 -1
///  1  1  0
/// ```
pub fn structural_skew3() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, -1.0, -1.0, 1.0, 0.0, -1.0, 1.0, 1.0, 0.0])
}
