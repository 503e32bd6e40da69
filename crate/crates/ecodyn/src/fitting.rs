//! Fitting production functions to observed (labor, capital, output) data.
//!
//! The power-law family is linear in log space and solved directly by
//! singular value decomposition. The sigmoid family is fit by a
//! deterministic Nelder-Mead search seeded from the power-law fit of the
//! small-input rows, where the sigmoid is well approximated by a power
//! law.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::poisson::DEFAULT_SEED;
use crate::production::{CobbDouglasPF, LogisticPF, ProductionFunction};

/// One observed data point. Time and debt are carried through when present
/// but only labor, capital and output enter the fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub labor: f64,
    pub capital: f64,
    pub output: f64,
    pub time: Option<f64>,
    pub debt: Option<f64>,
}

impl Observation {
    pub fn new(labor: f64, capital: f64, output: f64) -> Self {
        Observation {
            labor,
            capital,
            output,
            time: None,
            debt: None,
        }
    }
}

/// A validated collection of observations: every labor, capital and output
/// value is positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Observation>,
}

impl Dataset {
    pub fn new(rows: Vec<Observation>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            for (name, v) in [
                ("labor", row.labor),
                ("capital", row.capital),
                ("output", row.output),
            ] {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Data {
                        row: i + 1,
                        message: format!("{name} must be positive and finite, got {v}"),
                    });
                }
            }
            if let Some(d) = row.debt {
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::Data {
                        row: i + 1,
                        message: format!("debt must be positive and finite, got {d}"),
                    });
                }
            }
        }
        Ok(Dataset { rows })
    }

    pub fn rows(&self) -> &[Observation] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Read a dataset from CSV with columns `L,K,Y` and optional `t` and `D`,
/// in any order. Any other column name is an error, as is a missing
/// required column.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let mut idx: [Option<usize>; 5] = [None; 5];
    const NAMES: [&str; 5] = ["L", "K", "Y", "t", "D"];
    for (pos, name) in headers.iter().enumerate() {
        match NAMES.iter().position(|n| *n == name.trim()) {
            Some(slot) => {
                if idx[slot].replace(pos).is_some() {
                    return Err(Error::Column {
                        name: name.trim().to_string(),
                        message: "column appears more than once".to_string(),
                    });
                }
            }
            None => {
                return Err(Error::Column {
                    name: name.trim().to_string(),
                    message: "unrecognized column (expected L, K, Y and optionally t, D)"
                        .to_string(),
                })
            }
        }
    }
    for slot in 0..3 {
        if idx[slot].is_none() {
            return Err(Error::Column {
                name: NAMES[slot].to_string(),
                message: "required column is missing".to_string(),
            });
        }
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let parse = |slot: usize| -> Result<Option<f64>> {
            match idx[slot] {
                None => Ok(None),
                Some(pos) => {
                    let cell = record.get(pos).unwrap_or("");
                    cell.trim().parse::<f64>().map(Some).map_err(|_| Error::Data {
                        row: i + 1,
                        message: format!("column {} is not a number: {cell:?}", NAMES[slot]),
                    })
                }
            }
        };
        rows.push(Observation {
            labor: parse(0)?.expect("L is required"),
            capital: parse(1)?.expect("K is required"),
            output: parse(2)?.expect("Y is required"),
            time: parse(3)?,
            debt: parse(4)?,
        });
    }
    Dataset::new(rows)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Data {
            row: 0,
            message: format!("malformed csv: {other:?}"),
        },
    }
}

/// Outcome of a fit: the fitted surface plus goodness-of-fit measured in
/// the fitting space (log output for the power law, output level for the
/// sigmoid family).
#[derive(Debug, Clone)]
pub struct FitResult {
    pub pf: ProductionFunction,
    pub rss: f64,
    pub r_squared: f64,
    /// Whether constant returns to scale were imposed.
    pub crs: bool,
    pub converged: bool,
    pub iterations: usize,
}

const MIN_ROWS: usize = 3;
/// Smallest acceptable ratio of extreme singular values before the design
/// matrix is declared rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Least-squares fit of `ln Y = ln A + alpha ln L + beta ln K`, optionally
/// with `beta = 1 - alpha` imposed exactly.
pub fn fit_cobb_douglas(data: &Dataset, crs: bool) -> Result<FitResult> {
    if data.len() < MIN_ROWS {
        return Err(Error::TooFewRows {
            needed: MIN_ROWS,
            got: data.len(),
        });
    }
    let n = data.len();
    let (design, target): (DMatrix<f64>, DVector<f64>) = if crs {
        // Regress ln(Y/K) on ln(L/K); scale invariance makes beta exact.
        let mut m = DMatrix::zeros(n, 2);
        let mut y = DVector::zeros(n);
        for (i, row) in data.rows().iter().enumerate() {
            m[(i, 0)] = 1.0;
            m[(i, 1)] = (row.labor / row.capital).ln();
            y[i] = (row.output / row.capital).ln();
        }
        (m, y)
    } else {
        let mut m = DMatrix::zeros(n, 3);
        let mut y = DVector::zeros(n);
        for (i, row) in data.rows().iter().enumerate() {
            m[(i, 0)] = 1.0;
            m[(i, 1)] = row.labor.ln();
            m[(i, 2)] = row.capital.ln();
            y[i] = row.output.ln();
        }
        (m, y)
    };

    let svd = design.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let (s_max, s_min) = (sigma.max(), sigma.min());
    if !(s_min / s_max >= RANK_TOL) {
        return Err(Error::RankDeficient(format!(
            "design matrix singular value ratio {:.3e} below {RANK_TOL:.0e}; \
             inputs do not vary independently",
            s_min / s_max
        )));
    }
    let coeffs = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::Singular(e.to_string()))?;

    let (alpha, beta) = if crs {
        (coeffs[1], 1.0 - coeffs[1])
    } else {
        (coeffs[1], coeffs[2])
    };
    let pf = CobbDouglasPF::new(coeffs[0].exp(), alpha, beta)?;

    let mut rss = 0.0;
    let mut log_outputs = Vec::with_capacity(n);
    for row in data.rows() {
        let predicted = pf.eval(row.labor, row.capital)?.ln();
        rss += (predicted - row.output.ln()).powi(2);
        log_outputs.push(row.output.ln());
    }
    let mean = log_outputs.iter().sum::<f64>() / n as f64;
    let tss: f64 = log_outputs.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    Ok(FitResult {
        pf: ProductionFunction::CobbDouglas(pf),
        rss,
        r_squared,
        crs,
        converged: true,
        iterations: 0,
    })
}

/// Capacities for the sigmoid fit. Each must exceed the corresponding
/// maximum observed value.
#[derive(Debug, Clone, Copy)]
pub struct Capacities {
    pub n_f: f64,
    pub n_l: f64,
    pub n_k: f64,
}

#[derive(Debug, Clone)]
pub struct SigmoidFitOptions {
    /// Also optimize the capacities (they stay above the observed maxima
    /// by construction). Default: capacities fixed as given.
    pub free_capacities: bool,
    /// Seed for the simplex jitter; the whole fit is deterministic in it.
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for SigmoidFitOptions {
    fn default() -> Self {
        SigmoidFitOptions {
            free_capacities: false,
            seed: DEFAULT_SEED,
            max_iter: 600,
        }
    }
}

/// Fit the sigmoid surface `Y = n_f sigma(p - q)` by Nelder-Mead over
/// `(alpha, beta, ln c)`, with the capacities optionally free.
///
/// The search minimizes the residual sum of squares in output space. It is
/// deterministic for a fixed seed.
pub fn fit_logistic_pf(
    data: &Dataset,
    capacities: Capacities,
    opts: &SigmoidFitOptions,
) -> Result<FitResult> {
    if data.len() < MIN_ROWS {
        return Err(Error::TooFewRows {
            needed: MIN_ROWS,
            got: data.len(),
        });
    }
    let max_l = data.rows().iter().map(|r| r.labor).fold(0.0, f64::max);
    let max_k = data.rows().iter().map(|r| r.capital).fold(0.0, f64::max);
    let max_y = data.rows().iter().map(|r| r.output).fold(0.0, f64::max);
    for (name, cap, observed) in [
        ("n_f", capacities.n_f, max_y),
        ("n_l", capacities.n_l, max_l),
        ("n_k", capacities.n_k, max_k),
    ] {
        if !(cap > observed) {
            return Err(Error::InfeasibleCapacity {
                name: name.to_string(),
                capacity: cap,
                max_observed: observed,
            });
        }
    }

    // Initial guess: power-law fit of the rows far from capacity, where
    // sigma(z) ~ e^z makes the sigmoid a power law with
    // A = n_f / (c n_l^alpha n_k^beta).
    let small: Vec<Observation> = data
        .rows()
        .iter()
        .filter(|r| r.labor < capacities.n_l / 3.0 && r.capital < capacities.n_k / 3.0)
        .copied()
        .collect();
    let init_fit = match Dataset::new(small).and_then(|d| fit_cobb_douglas(&d, false)) {
        Ok(f) => Some(f),
        Err(_) => fit_cobb_douglas(data, false).ok(),
    };
    let (alpha0, beta0, c0) = match init_fit {
        Some(FitResult {
            pf: ProductionFunction::CobbDouglas(cd),
            ..
        }) => {
            let c0 = capacities.n_f
                / (cd.scale
                    * capacities.n_l.powf(cd.alpha)
                    * capacities.n_k.powf(cd.beta));
            if c0.is_finite() && c0 > 0.0 {
                (cd.alpha, cd.beta, c0)
            } else {
                (cd.alpha, cd.beta, 1.0)
            }
        }
        _ => (0.5, 0.5, 1.0),
    };

    let free = opts.free_capacities;
    let build = move |theta: &[f64], caps: Capacities| -> Result<LogisticPF> {
        let (n_f, n_l, n_k) = if free {
            // Capacity parameterized as max_observed * (1 + e^u): always
            // feasible for any real u.
            (
                max_y * (1.0 + theta[3].exp()),
                max_l * (1.0 + theta[4].exp()),
                max_k * (1.0 + theta[5].exp()),
            )
        } else {
            (caps.n_f, caps.n_l, caps.n_k)
        };
        LogisticPF::new(n_f, n_l, n_k, theta[0], theta[1], theta[2].exp())
    };
    let objective = |theta: &[f64]| -> f64 {
        let pf = match build(theta, capacities) {
            Ok(pf) => pf,
            Err(_) => return f64::INFINITY,
        };
        let mut rss = 0.0;
        for row in data.rows() {
            match pf.eval(row.labor, row.capital) {
                Ok(y) => rss += (y - row.output).powi(2),
                Err(_) => return f64::INFINITY,
            }
        }
        rss
    };

    let mut theta0 = vec![alpha0, beta0, c0.ln()];
    let mut steps = vec![0.1, 0.1, 0.25];
    if free {
        for (cap, observed) in [
            (capacities.n_f, max_y),
            (capacities.n_l, max_l),
            (capacities.n_k, max_k),
        ] {
            theta0.push((cap / observed - 1.0).ln());
            steps.push(0.25);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let jitter: Vec<f64> = steps
        .iter()
        .map(|s| s * rng.gen_range(0.9..1.1))
        .collect();
    let first = nelder_mead(&objective, &theta0, &jitter, opts.max_iter);
    // Polish once from the best point with a tighter simplex.
    let refine_steps: Vec<f64> = jitter.iter().map(|s| s * 0.1).collect();
    let second = nelder_mead(&objective, &first.best, &refine_steps, opts.max_iter);
    let (best, rss, converged) = if second.best_value <= first.best_value {
        (second.best, second.best_value, second.converged)
    } else {
        (first.best.clone(), first.best_value, first.converged)
    };
    let iterations = first.iterations + second.iterations;

    let pf = build(&best, capacities)?;
    let mean = data.rows().iter().map(|r| r.output).sum::<f64>() / data.len() as f64;
    let tss: f64 = data
        .rows()
        .iter()
        .map(|r| (r.output - mean).powi(2))
        .sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    Ok(FitResult {
        pf: ProductionFunction::Logistic(pf),
        rss,
        r_squared,
        crs: false,
        converged,
        iterations,
    })
}

struct SimplexOutcome {
    best: Vec<f64>,
    best_value: f64,
    iterations: usize,
    converged: bool,
}

/// Plain Nelder-Mead with standard coefficients. Deterministic: ties in
/// the vertex ordering resolve by index.
fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    max_iter: usize,
) -> SimplexOutcome {
    let n = x0.len();
    let tol = 1e-12;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        let fv = f(&v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= tol * (1.0 + best.abs()) {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(v, _)| v[d]).sum::<f64>() / n as f64)
            .collect();
        let at = |coef: f64| -> Vec<f64> {
            (0..n)
                .map(|d| centroid[d] + coef * (centroid[d] - simplex[n].0[d]))
                .collect()
        };

        let reflected = at(1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = at(2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[n].1 { at(0.5) } else { at(-0.5) };
            let fc = f(&contracted);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for d in 0..n {
                        vertex.0[d] = anchor[d] + 0.5 * (vertex.0[d] - anchor[d]);
                    }
                    vertex.1 = f(&vertex.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    SimplexOutcome {
        best: simplex[0].0.clone(),
        best_value: simplex[0].1,
        iterations,
        converged,
    }
}
