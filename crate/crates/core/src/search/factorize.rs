//! Heuristic search for a classical `d`-message strategy reproducing a
//! prepare-and-measure behaviour.
//!
//! With binary outputs the behaviour is determined by `P0[x][y] = P(0|xy)`, and
//! a strategy is a factorization `P0 = S T` with `S` row-stochastic (`|X| x d`)
//! and `T` entrywise in `[0, 1]` (`d x |Y|`). The search alternates between the
//! two blocks, solving each constrained least-squares block by accelerated
//! projected gradient. Failing to find a model proves nothing; only the rank
//! witness certifies impossibility.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::behaviour::{validate_pm, PmBehaviour, DEFAULT_VALIDATION_TOL};
use crate::error::{Error, Result};
use crate::par::map_range;
use crate::sampling::Seed;
use crate::scalar::{Scalar, ScalarKind};
use crate::strategy::{simulate_classical_pm, ClassicalPmStrategy};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorizeOptions {
    pub restarts: usize,
    pub iterations: usize,
    /// Largest accepted entrywise deviation.
    pub acceptance: f64,
    pub seed: Seed,
    pub parallel: bool,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        FactorizeOptions { restarts: 32, iterations: 2000, acceptance: 1e-8, seed: Seed(0), parallel: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Found,
    NotFound,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorizationResult {
    pub status: SearchStatus,
    pub model: Option<ClassicalPmStrategy>,
    /// Max entrywise deviation of the best model found.
    pub residual: f64,
    /// Outer iterations run by the winning restart.
    pub iterations: usize,
    pub restarts: usize,
    pub best_restart: usize,
    /// For exact inputs: whether a rationalized model reproduces the behaviour exactly.
    pub exact_verified: Option<bool>,
}

const INNER_STEPS: usize = 25;
const RATIONAL_MAX_DEN: i64 = 1 << 12;

type Mat = DMatrix<f64>;

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

fn project_box(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
}

/// FISTA on `min 1/2 z^T G z - h^T z` over the set given by `project`, warm-started at `z`.
fn fista(g: &Mat, h: &[f64], z: &mut [f64], project: fn(&mut [f64])) {
    let d = z.len();
    let lip = (0..d).map(|i| (0..d).map(|j| g[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
    if lip <= 0.0 {
        return;
    }
    let step = 1.0 / lip;
    let mut y = z.to_vec();
    let mut prev = z.to_vec();
    let mut t = 1.0f64;
    for _ in 0..INNER_STEPS {
        let mut next: Vec<f64> = (0..d)
            .map(|i| {
                let grad = (0..d).map(|j| g[(i, j)] * y[j]).sum::<f64>() - h[i];
                y[i] - step * grad
            })
            .collect();
        project(&mut next);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        for i in 0..d {
            y[i] = next[i] + momentum * (next[i] - prev[i]);
        }
        prev.copy_from_slice(&next);
        t = t_next;
    }
    z.copy_from_slice(&prev);
}

fn max_deviation(p0: &Mat, s: &Mat, t: &Mat) -> f64 {
    (s * t - p0).amax()
}

struct Run {
    s: Mat,
    t: Mat,
    residual: f64,
    iterations: usize,
}

fn alternate(p0: &Mat, mut s: Mat, opts: &FactorizeOptions) -> Run {
    let (nx, ny) = p0.shape();
    let d = s.ncols();
    let mut t = Mat::from_element(d, ny, 0.5);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..opts.iterations {
        iterations = it + 1;
        // T-step: columns of T in the box.
        let g = s.transpose() * &s;
        let h = s.transpose() * p0;
        for y in 0..ny {
            let mut col: Vec<f64> = t.column(y).iter().copied().collect();
            let hy: Vec<f64> = h.column(y).iter().copied().collect();
            fista(&g, &hy, &mut col, project_box);
            t.set_column(y, &nalgebra::DVector::from_vec(col));
        }
        // S-step: rows of S on the simplex.
        let g = &t * t.transpose();
        let h = &t * p0.transpose();
        for x in 0..nx {
            let mut row: Vec<f64> = s.row(x).iter().copied().collect();
            let hx: Vec<f64> = h.column(x).iter().copied().collect();
            fista(&g, &hx, &mut row, project_simplex);
            for (m, v) in row.into_iter().enumerate() {
                s[(x, m)] = v;
            }
        }
        residual = max_deviation(p0, &s, &t);
        if residual <= opts.acceptance {
            break;
        }
    }
    Run { s, t, residual, iterations }
}

/// Clipped truncated-SVD start: `|U_d|` with rows renormalized.
fn svd_start(p0: &Mat, d: usize) -> Mat {
    let (nx, _) = p0.shape();
    let svd = p0.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).expect("finite"));
    let mut s = Mat::from_element(nx, d, 0.0);
    for (m, &k) in order.iter().take(d).enumerate() {
        for x in 0..nx {
            s[(x, m)] = u[(x, k)].abs();
        }
    }
    for x in 0..nx {
        let total: f64 = s.row(x).sum();
        if total > 0.0 {
            for m in 0..d {
                s[(x, m)] /= total;
            }
        } else {
            for m in 0..d {
                s[(x, m)] = 1.0 / d as f64;
            }
        }
    }
    s
}

fn dirichlet_start(nx: usize, d: usize, seed: Seed) -> Mat {
    let mut rng = seed.rng();
    let mut s = Mat::from_fn(nx, d, |_, _| Exp1.sample(&mut rng));
    for x in 0..nx {
        let total: f64 = s.row(x).sum();
        for m in 0..d {
            s[(x, m)] /= total;
        }
    }
    s
}

/// Best rational approximation with denominator at most `max_den` (continued fractions).
fn approximate_rational(v: f64, max_den: i64) -> BigRational {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut x = v;
    for _ in 0..64 {
        let a = x.floor();
        let ai = a as i64;
        let k2 = ai.saturating_mul(k1).saturating_add(k0);
        if k2 > max_den || k2 <= 0 {
            break;
        }
        let h2 = ai.saturating_mul(h1).saturating_add(h0);
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = x - a;
        if frac.abs() < 1e-12 {
            break;
        }
        x = 1.0 / frac;
    }
    BigRational::new(BigInt::from(h1), BigInt::from(k1))
}

fn rationalize(s: &Mat, t: &Mat) -> Result<ClassicalPmStrategy> {
    let (nx, d) = s.shape();
    let ny = t.ncols();
    let zero = BigRational::zero();
    let one = BigRational::one();
    let mut s_rows = Vec::with_capacity(nx);
    for x in 0..nx {
        let mut row: Vec<BigRational> = (0..d).map(|m| approximate_rational(s[(x, m)].max(0.0), RATIONAL_MAX_DEN)).collect();
        let top = (0..d).max_by(|&a, &b| s[(x, a)].partial_cmp(&s[(x, b)]).expect("finite")).expect("d >= 1");
        let rest: BigRational = (0..d).filter(|&m| m != top).map(|m| row[m].clone()).sum();
        row[top] = &one - rest;
        if row[top].is_negative() {
            return Err(Error::Precondition("rationalized sender row is not stochastic".into()));
        }
        s_rows.push(row.into_iter().map(Scalar::Exact).collect());
    }
    let t_table = (0..d)
        .map(|m| {
            (0..ny)
                .map(|y| {
                    let p = approximate_rational(t[(m, y)].clamp(0.0, 1.0), RATIONAL_MAX_DEN).clamp(zero.clone(), one.clone());
                    vec![Scalar::Exact(p.clone()), Scalar::Exact(&one - p)]
                })
                .collect()
        })
        .collect();
    ClassicalPmStrategy::new(d, s_rows, t_table)
}

fn float_model(s: &Mat, t: &Mat) -> Result<ClassicalPmStrategy> {
    let (nx, d) = s.shape();
    let ny = t.ncols();
    let s_rows = (0..nx)
        .map(|x| {
            let total: f64 = s.row(x).sum();
            (0..d).map(|m| Scalar::Float(s[(x, m)] / total)).collect()
        })
        .collect();
    let t_table = (0..d)
        .map(|m| (0..ny).map(|y| vec![Scalar::Float(t[(m, y)]), Scalar::Float(1.0 - t[(m, y)])]).collect())
        .collect();
    ClassicalPmStrategy::new(d, s_rows, t_table)
}

/// Multi-restart alternating search for a `d`-message classical model of `beh`.
pub fn factorize_classical(beh: &PmBehaviour, d: usize, opts: &FactorizeOptions) -> Result<FactorizationResult> {
    if d == 0 {
        return Err(Error::Precondition("message dimension must be at least 1".into()));
    }
    if opts.restarts == 0 || opts.iterations == 0 {
        return Err(Error::Precondition("restart and iteration budgets must be positive".into()));
    }
    if !(opts.acceptance > 0.0) {
        return Err(Error::Precondition(format!("acceptance threshold must be positive, got {}", opts.acceptance)));
    }
    let report = validate_pm(beh, DEFAULT_VALIDATION_TOL);
    if !report.is_valid() {
        return Err(Error::InvalidBehaviour(report.messages().join("; ")));
    }
    let scenario = beh.scenario();
    let (nx, ny) = (scenario.n_inputs_a(), scenario.n_inputs_b());
    let p0 = Mat::from_fn(nx, ny, |x, y| beh.get(0, x, y).to_f64());

    let runs = map_range(opts.restarts, opts.parallel, |r| {
        let start = if r == 0 { svd_start(&p0, d) } else { dirichlet_start(nx, d, opts.seed.child(r as u64)) };
        alternate(&p0, start, opts)
    });
    let (best_restart, best) = runs
        .iter()
        .enumerate()
        .fold(None::<(usize, &Run)>, |acc, (i, run)| match acc {
            Some((_, b)) if b.residual <= run.residual => acc,
            _ => Some((i, run)),
        })
        .expect("at least one restart");

    let model = float_model(&best.s, &best.t)?;
    let simulated = simulate_classical_pm(&model, scenario)?;
    let residual = simulated
        .probs()
        .iter()
        .zip(beh.probs())
        .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
        .fold(0.0, f64::max);
    let found = residual <= opts.acceptance;
    let mut exact_verified = None;
    let mut model = found.then_some(model);
    if found && beh.kind() == ScalarKind::Exact {
        let verified = rationalize(&best.s, &best.t)
            .ok()
            .and_then(|m| simulate_classical_pm(&m, scenario).ok().map(|sim| (m, sim)))
            .filter(|(_, sim)| sim == beh);
        exact_verified = Some(verified.is_some());
        if let Some((m, _)) = verified {
            model = Some(m);
        }
    }
    Ok(FactorizationResult {
        status: if found { SearchStatus::Found } else { SearchStatus::NotFound },
        model,
        residual: if exact_verified == Some(true) { 0.0 } else { residual },
        iterations: best.iterations,
        restarts: opts.restarts,
        best_restart,
        exact_verified,
    })
}
