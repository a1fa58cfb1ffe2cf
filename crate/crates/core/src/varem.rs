//! Variational EM with an MM-minorized E-step.
//!
//! The mean-field lower bound is
//!
//! ```text
//! LB(π, θ; Γ) = Σ_t [ Σ_{i<j} Σ_{k,l} γ_ik γ_jl log pr_θkl(y_t,ij | y_t-1,ij)
//!                     + Σ_i Σ_k γ_ik (log π_k − log γ_ik) ]
//! ```
//!
//! Each E-step maximizes a separable quadratic minorizer of the bound, one
//! simplex-constrained QP per node. The M-step sets `π` to the column means
//! of `Γ` and moves `θ` with a line-searched Newton iteration. Every step is
//! an ascent step for the bound.
//!
//! Because the bound depends on the data only through per-dyad transition
//! counts summed over time, everything here works on
//! [`DyadTransitionCounts`]: one `n x n` matrix per `(y_prev, y_cur)` cell.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    flatten_theta, log_prob_tables, unflatten_theta, ModelKind, ModelSpec, PairTransitionWeights,
    Params,
};
use crate::netseries::{DyadTransitionCounts, NetworkSeries};

/// Armijo sufficient-increase constant.
const ARMIJO_SLOPE: f64 = 1e-4;
const NEWTON_GRAD_TOL: f64 = 1e-8;
const RIDGE_START: f64 = 1e-8;
const RIDGE_MAX: f64 = 1e-2;
/// Slack allowed when checking the ascent property.
pub const ASCENT_SLACK: f64 = 1e-8;

/// Row-stochastic `n x K` responsibility matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    gamma: DMatrix<f64>,
}

impl VariationalState {
    /// Wraps `gamma` after checking that every row lies on the simplex with
    /// entries at least `floor`.
    pub fn new(gamma: DMatrix<f64>, floor: f64) -> Result<Self> {
        for (i, row) in gamma.row_iter().enumerate() {
            if (row.sum() - 1.0).abs() > 1e-10 {
                return Err(Error::Shape(format!("row {i} of gamma sums to {}", row.sum())));
            }
            check_floor_row(i, row.iter().copied(), floor)?;
        }
        Ok(VariationalState { gamma })
    }

    /// Uniform(0, 1) entries, each row normalized, then floored.
    pub fn random<R: Rng>(n: usize, k: usize, floor: f64, rng: &mut R) -> Self {
        let mut gamma = DMatrix::from_fn(n, k, |_, _| rng.random::<f64>());
        for i in 0..n {
            let s = gamma.row(i).sum();
            gamma.row_mut(i).iter_mut().for_each(|v| *v /= s);
            floor_row(&mut gamma, i, floor);
        }
        VariationalState { gamma }
    }

    /// Hard 0/1 responsibilities (floored) for the given labels.
    pub fn from_labels(labels: &[usize], k: usize, floor: f64) -> Self {
        let mut gamma = DMatrix::zeros(labels.len(), k);
        for (i, &z) in labels.iter().enumerate() {
            gamma[(i, z)] = 1.0;
            floor_row(&mut gamma, i, floor);
        }
        VariationalState { gamma }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.gamma
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.gamma.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

fn check_floor_row(i: usize, row: impl Iterator<Item = f64>, floor: f64) -> Result<()> {
    for (k, v) in row.enumerate() {
        // Renormalization may shave a few ulps off floored entries.
        if !(v >= floor * (1.0 - 1e-9)) {
            return Err(Error::GammaBelowFloor {
                node: i,
                community: k,
                value: v,
            });
        }
    }
    Ok(())
}

/// Raises entries below `floor` and renormalizes the row, keeping it on the
/// simplex.
fn floor_row(gamma: &mut DMatrix<f64>, i: usize, floor: f64) {
    let k = gamma.ncols();
    let low: Vec<usize> = (0..k).filter(|&c| gamma[(i, c)] < floor).collect();
    if low.is_empty() {
        return;
    }
    let mass_low = floor * low.len() as f64;
    let mass_high: f64 = (0..k)
        .filter(|c| !low.contains(c))
        .map(|c| gamma[(i, c)])
        .sum();
    for c in 0..k {
        if low.contains(&c) {
            gamma[(i, c)] = floor;
        } else {
            gamma[(i, c)] *= (1.0 - mass_low) / mass_high;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Stop when `|ΔLB| / (|LB| + 1)` falls below this.
    pub rel_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub gamma_floor: f64,
    pub newton_max_inner: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iter: 500,
            rel_tol: 1e-6,
            restarts: 10,
            seed: 0,
            gamma_floor: 1e-10,
            newton_max_inner: 50,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || self.restarts == 0 || self.newton_max_inner == 0 {
            return Err(Error::Config(
                "max_iter, restarts and newton_max_inner must be positive".into(),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!("rel_tol {} must lie in (0, 1)", self.rel_tol)));
        }
        if !(self.gamma_floor > 0.0 && self.gamma_floor < 1e-3) {
            return Err(Error::Config(format!(
                "gamma_floor {} must lie in (0, 1e-3)",
                self.gamma_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params: Params,
    pub gamma: VariationalState,
    /// 0-based community of each node.
    pub labels: Vec<usize>,
    /// Lower bound after the initial M-step and after every EM iteration.
    pub lb_trajectory: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub restart_index: usize,
    pub seed: u64,
    pub failed_restarts: usize,
}

impl FitResult {
    pub fn lower_bound(&self) -> f64 {
        *self.lb_trajectory.last().expect("trajectory is never empty")
    }

    /// Number of EM iterations whose lower bound dropped by more than
    /// [`ASCENT_SLACK`].
    pub fn ascent_violations(&self) -> usize {
        count_ascent_violations(&self.lb_trajectory)
    }

    pub fn to_document(&self) -> FitDocument {
        FitDocument {
            model: self.spec.kind,
            k: self.spec.k,
            pi: self.params.pi.clone(),
            theta: self.params.theta.clone(),
            gamma: self.gamma.rows(),
            labels: self.labels.iter().map(|z| z + 1).collect(),
            lb_trajectory: self.lb_trajectory.clone(),
            converged: self.converged,
            iterations: self.iterations,
            restart_index: self.restart_index,
            seed: self.seed,
        }
    }
}

pub fn count_ascent_violations(trajectory: &[f64]) -> usize {
    trajectory
        .windows(2)
        .filter(|w| w[1] < w[0] - ASCENT_SLACK)
        .count()
}

/// Serialized form of a [`FitResult`]. Labels are 1-based, as in label files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub model: ModelKind,
    pub k: usize,
    pub pi: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub lb_trajectory: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub restart_index: usize,
    pub seed: u64,
}

fn check_shapes(data: &DyadTransitionCounts, spec: &ModelSpec, gamma: &DMatrix<f64>) -> Result<()> {
    if gamma.nrows() != data.n() || gamma.ncols() != spec.k {
        return Err(Error::Shape(format!(
            "gamma is {}x{}, expected {}x{}",
            gamma.nrows(),
            gamma.ncols(),
            data.n(),
            spec.k
        )));
    }
    Ok(())
}

/// `C_c Γ` for each transition cell.
fn propagate(data: &DyadTransitionCounts, gamma: &DMatrix<f64>) -> [DMatrix<f64>; 4] {
    std::array::from_fn(|c| data.cell(c) * gamma)
}

/// Expected pair weights `Σ_{i<j} (γ_ik γ_jl + γ_il γ_jk) c_ij` from the
/// propagated matrices.
fn pair_weights_from(gamma: &DMatrix<f64>, propagated: &[DMatrix<f64>; 4]) -> PairTransitionWeights {
    let k = gamma.ncols();
    // Γᵀ C Γ counts each unordered dyad twice.
    let full: Vec<DMatrix<f64>> = propagated.iter().map(|r| gamma.transpose() * r).collect();
    let mut cells = Vec::with_capacity(k * (k + 1) / 2);
    for a in 0..k {
        for b in a..k {
            cells.push(std::array::from_fn(|c| {
                if a == b {
                    0.5 * full[c][(a, a)]
                } else {
                    0.5 * (full[c][(a, b)] + full[c][(b, a)])
                }
            }));
        }
    }
    PairTransitionWeights::from_cells(k, cells)
}

/// Expected pair transition weights under `Γ`; the θ-dependent part of the
/// lower bound is their weighted logistic log-likelihood.
pub fn pair_weights(data: &DyadTransitionCounts, gamma: &DMatrix<f64>) -> PairTransitionWeights {
    pair_weights_from(gamma, &propagate(data, gamma))
}

/// `T Σ_i Σ_k γ_ik (log π_k − log γ_ik)`.
fn prior_entropy_term(horizon: usize, pi: &[f64], gamma: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..gamma.nrows() {
        for (k, &p) in pi.iter().enumerate() {
            let g = gamma[(i, k)];
            if g > 0.0 {
                s += g * (p.ln() - g.ln());
            }
        }
    }
    horizon as f64 * s
}

pub fn lower_bound(
    data: &DyadTransitionCounts,
    spec: &ModelSpec,
    params: &Params,
    gamma: &DMatrix<f64>,
) -> Result<f64> {
    check_shapes(data, spec, gamma)?;
    params.validate(spec)?;
    let weights = pair_weights(data, gamma);
    Ok(weights.loglik(spec.kind, &params.theta_flat())
        + prior_entropy_term(data.horizon(), &params.pi, gamma))
}

/// Gradient and Hessian of the lower bound with respect to the flattened θ
/// (column-major, see [`crate::models`]), holding `Γ` fixed.
pub fn lb_grad_hess_theta(
    data: &DyadTransitionCounts,
    spec: &ModelSpec,
    theta: &[Vec<f64>],
    gamma: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_shapes(data, spec, gamma)?;
    Ok(pair_weights(data, gamma).grad_hess(spec.kind, &flatten_theta(theta)))
}

/// Per-node coefficients of the separable minorizer
/// `Q(Γ) = Σ_i Σ_k (A_ik γ_ik² + B_ik γ_ik)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Minorizer {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl Minorizer {
    /// `Q` evaluated at `gamma`.
    pub fn value(&self, gamma: &DMatrix<f64>) -> f64 {
        self.a
            .iter()
            .zip(self.b.iter())
            .zip(gamma.iter())
            .map(|((a, b), g)| a * g * g + b * g)
            .sum()
    }
}

fn minorizer_from(
    data: &DyadTransitionCounts,
    spec: &ModelSpec,
    params: &Params,
    gamma: &DMatrix<f64>,
    propagated: &[DMatrix<f64>; 4],
) -> Minorizer {
    let tables = log_prob_tables(spec.kind, &params.theta);
    // S_ik = Σ_{j≠i} Σ_l γ_jl Σ_t log pr_kl(y_t,ij | y_t-1,ij)
    let mut s = &propagated[0] * &tables[0];
    for c in 1..4 {
        s += &propagated[c] * &tables[c];
    }
    let t = data.horizon() as f64;
    let (n, k) = gamma.shape();
    let a = DMatrix::from_fn(n, k, |i, c| (s[(i, c)] / 2.0 - t) / gamma[(i, c)]);
    let b = DMatrix::from_fn(n, k, |i, c| t * (params.pi[c].ln() - gamma[(i, c)].ln() + 1.0));
    Minorizer { a, b }
}

/// Builds the minorizer of the lower bound at `gamma_tau`.
pub fn minorizer_coefficients(
    data: &DyadTransitionCounts,
    spec: &ModelSpec,
    params_tau: &Params,
    gamma_tau: &DMatrix<f64>,
    floor: f64,
) -> Result<Minorizer> {
    check_shapes(data, spec, gamma_tau)?;
    params_tau.validate(spec)?;
    for (i, row) in gamma_tau.row_iter().enumerate() {
        check_floor_row(i, row.iter().copied(), floor)?;
    }
    Ok(minorizer_from(data, spec, params_tau, gamma_tau, &propagate(data, gamma_tau)))
}

/// Maximizes `Σ_k (a_k γ_k² + b_k γ_k)` over `{γ : Σγ = 1, floor <= γ_k <= 1}`.
///
/// KKT gives `γ_k(ν) = clamp((ν − b_k) / (2 a_k), floor, 1)`, which is
/// non-increasing in the multiplier `ν`; `ν` is bracketed and bisected until
/// `Σ γ_k(ν) = 1`, then solved exactly on the free coordinates.
pub fn estep_node_qp(a: &[f64], b: &[f64], floor: f64) -> Result<Vec<f64>> {
    assert_eq!(a.len(), b.len());
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, &v)| !(v < 0.0)) {
        return Err(Error::NonConcaveQp { index, value });
    }
    let k = a.len();
    if k == 1 {
        return Ok(vec![1.0]);
    }
    let lo_box = floor.min(1.0 / k as f64);
    let gamma_at = |nu: f64, k: usize| ((nu - b[k]) / (2.0 * a[k])).clamp(lo_box, 1.0);
    let total = |nu: f64| (0..k).map(|c| gamma_at(nu, c)).sum::<f64>();

    // At nu_lo every coordinate sits at 1; at nu_hi every coordinate sits at the floor.
    let mut nu_lo = (0..k).map(|c| b[c] + 2.0 * a[c]).fold(f64::INFINITY, f64::min);
    let mut nu_hi = (0..k).map(|c| b[c] + 2.0 * a[c] * lo_box).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (nu_lo + nu_hi);
        if total(mid) > 1.0 {
            nu_lo = mid;
        } else {
            nu_hi = mid;
        }
        if nu_hi - nu_lo <= 1e-12 * nu_lo.abs().max(nu_hi.abs()).max(1.0) {
            break;
        }
    }
    let mut nu = 0.5 * (nu_lo + nu_hi);

    // Exact multiplier on the free set identified by the bisection.
    let raw = |c: usize| (nu - b[c]) / (2.0 * a[c]);
    let (mut fixed_mass, mut num, mut den) = (0.0, 0.0, 0.0);
    for c in 0..k {
        let r = raw(c);
        if r <= lo_box {
            fixed_mass += lo_box;
        } else if r >= 1.0 {
            fixed_mass += 1.0;
        } else {
            num += b[c] / (2.0 * a[c]);
            den += 1.0 / (2.0 * a[c]);
        }
    }
    if den != 0.0 {
        let exact = (1.0 - fixed_mass + num) / den;
        if (total(exact) - 1.0).abs() <= (total(nu) - 1.0).abs() {
            nu = exact;
        }
    }
    let mut gamma: Vec<f64> = (0..k).map(|c| gamma_at(nu, c)).collect();
    // Put the residual rounding error on the largest coordinate.
    let resid = 1.0 - gamma.iter().sum::<f64>();
    let top = (0..k)
        .max_by(|&x, &y| gamma[x].total_cmp(&gamma[y]))
        .expect("k >= 2");
    gamma[top] += resid;
    Ok(gamma)
}

fn estep_from(minorizer: &Minorizer, floor: f64) -> Result<DMatrix<f64>> {
    let (n, k) = minorizer.a.shape();
    let mut next = DMatrix::zeros(n, k);
    for i in 0..n {
        let a: Vec<f64> = minorizer.a.row(i).iter().copied().collect();
        let b: Vec<f64> = minorizer.b.row(i).iter().copied().collect();
        let row = estep_node_qp(&a, &b, floor)?;
        for (c, v) in row.into_iter().enumerate() {
            next[(i, c)] = v;
        }
    }
    Ok(next)
}

/// One variational E-step: maximizes the minorizer built at `gamma_tau`
/// node by node.
pub fn estep(
    data: &DyadTransitionCounts,
    spec: &ModelSpec,
    params_tau: &Params,
    gamma_tau: &DMatrix<f64>,
    floor: f64,
) -> Result<DMatrix<f64>> {
    let minorizer = minorizer_coefficients(data, spec, params_tau, gamma_tau, floor)?;
    estep_from(&minorizer, floor)
}

/// `π_k = n⁻¹ Σ_i γ_ik`.
pub fn mstep_pi(gamma: &DMatrix<f64>) -> Vec<f64> {
    let n = gamma.nrows() as f64;
    let mut pi: Vec<f64> = gamma.column_iter().map(|c| c.sum() / n).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= s);
    pi
}

/// Solves `(−H + ridge I) h = g`, escalating the ridge from 1e-8 to 1e-2.
pub(crate) fn newton_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Result<DVector<f64>> {
    let neg = -hess;
    if let Some(chol) = neg.clone().cholesky() {
        let h = chol.solve(grad);
        if h.iter().all(|v| v.is_finite()) {
            return Ok(h);
        }
    }
    let mut ridge = RIDGE_START;
    while ridge <= RIDGE_MAX * (1.0 + 1e-9) {
        let shifted = &neg + DMatrix::identity(grad.len(), grad.len()) * ridge;
        if let Some(chol) = shifted.cholesky() {
            let h = chol.solve(grad);
            if h.iter().all(|v| v.is_finite()) {
                return Ok(h);
            }
        }
        ridge *= 10.0;
    }
    Err(Error::SingularHessian {
        ridge: RIDGE_MAX,
        diagnostic: format!("diagonal {:?}", hess.diagonal().as_slice()),
    })
}

/// Outcome of a line-searched Newton ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub theta: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Objective value after every accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

/// Maximizes a concave objective by Newton steps with Armijo backtracking
/// (`λ` halved from 1). Stops when the gradient ∞-norm drops below 1e-8,
/// the line search stalls, or after `max_iter` steps.
pub(crate) fn newton_ascent<F, G>(
    mut theta: DVector<f64>,
    max_iter: usize,
    objective: F,
    grad_hess: G,
) -> Result<NewtonOutcome>
where
    F: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
{
    let mut value = objective(&theta);
    if !value.is_finite() {
        return Err(Error::NonFinite("Newton initialization"));
    }
    let mut trace = vec![value];
    let mut iterations = 0;
    let (mut grad, mut hess) = grad_hess(&theta);
    while iterations < max_iter && grad.amax() >= NEWTON_GRAD_TOL {
        let dir = newton_direction(&grad, &hess)?;
        let slope = grad.dot(&dir);
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda > 1e-12 {
            let cand = &theta + &dir * lambda;
            let v = objective(&cand);
            if v.is_finite() && v >= value + ARMIJO_SLOPE * lambda * slope {
                accepted = Some((cand, v));
                break;
            }
            lambda *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            break;
        };
        theta = cand;
        value = v;
        trace.push(v);
        iterations += 1;
        (grad, hess) = grad_hess(&theta);
    }
    Ok(NewtonOutcome {
        grad_norm: grad.amax(),
        theta,
        value,
        iterations,
        trace,
    })
}

fn mstep_theta_weights(
    weights: &PairTransitionWeights,
    kind: ModelKind,
    theta_init: &[Vec<f64>],
    config: &FitConfig,
) -> Result<(Vec<Vec<f64>>, NewtonOutcome)> {
    let k = theta_init.len();
    let out = newton_ascent(
        flatten_theta(theta_init),
        config.newton_max_inner,
        |th| weights.loglik(kind, th),
        |th| weights.grad_hess(kind, th),
    )?;
    Ok((unflatten_theta(&out.theta, k), out))
}

/// θ-update of the M-step: line-searched Newton ascent on the lower bound
/// with `Γ` fixed. The bound at the result is never below its value at
/// `theta_init`.
pub fn mstep_theta(
    data: &DyadTransitionCounts,
    spec: &ModelSpec,
    gamma: &DMatrix<f64>,
    theta_init: &[Vec<f64>],
    config: &FitConfig,
) -> Result<(Vec<Vec<f64>>, NewtonOutcome)> {
    check_shapes(data, spec, gamma)?;
    mstep_theta_weights(&pair_weights(data, gamma), spec.kind, theta_init, config)
}

/// `z_i = argmax_k γ_ik`, ties going to the smallest `k`.
pub fn assign_labels(gamma: &DMatrix<f64>) -> Vec<usize> {
    gamma
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// A single EM run from a given initial `Γ`, without reordering communities.
#[derive(Debug, Clone, PartialEq)]
pub struct EmRun {
    pub params: Params,
    pub gamma: DMatrix<f64>,
    pub lb_trajectory: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Runs Algorithm-style EM from `gamma0`: an initial M-step, then E/M
/// iterations until the relative change of the bound drops below
/// `config.rel_tol` or `config.max_iter` iterations have run.
pub fn run_em(
    data: &DyadTransitionCounts,
    spec: &ModelSpec,
    gamma0: &DMatrix<f64>,
    config: &FitConfig,
) -> Result<EmRun> {
    config.validate()?;
    check_shapes(data, spec, gamma0)?;
    let floor = config.gamma_floor;
    let horizon = data.horizon();
    let mut gamma = VariationalState::new(gamma0.clone(), floor)?.into_matrix();
    let mut propagated = propagate(data, &gamma);

    let pi = mstep_pi(&gamma);
    let weights = pair_weights_from(&gamma, &propagated);
    let (theta, out) =
        mstep_theta_weights(&weights, spec.kind, &vec![vec![0.0; spec.p()]; spec.k], config)?;
    let mut params = Params { pi, theta };
    let mut lb = out.value + prior_entropy_term(horizon, &params.pi, &gamma);
    if !lb.is_finite() {
        return Err(Error::NonFinite("initial M-step"));
    }
    let mut trajectory = vec![lb];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        let minorizer = minorizer_from(data, spec, &params, &gamma, &propagated);
        gamma = estep_from(&minorizer, floor)?;
        propagated = propagate(data, &gamma);

        params.pi = mstep_pi(&gamma);
        let weights = pair_weights_from(&gamma, &propagated);
        let (theta, out) = mstep_theta_weights(&weights, spec.kind, &params.theta, config)?;
        params.theta = theta;

        let next = out.value + prior_entropy_term(horizon, &params.pi, &gamma);
        if !next.is_finite() {
            return Err(Error::NonFinite("EM iteration"));
        }
        debug_assert!(
            next >= lb - ASCENT_SLACK,
            "lower bound decreased from {lb} to {next} at iteration {iterations}"
        );
        trajectory.push(next);
        let change = (next - lb).abs() / (lb.abs() + 1.0);
        lb = next;
        if change < config.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(EmRun {
        params,
        gamma,
        lb_trajectory: trajectory,
        converged,
        iterations,
    })
}

/// Reorders communities by descending `π`, ties by ascending first θ column.
fn canonical_order(params: &Params) -> Vec<usize> {
    let mut order: Vec<usize> = (0..params.pi.len()).collect();
    order.sort_by(|&a, &b| {
        params.pi[b]
            .total_cmp(&params.pi[a])
            .then(params.theta[a][0].total_cmp(&params.theta[b][0]))
    });
    order
}

fn permute_run(run: EmRun, order: &[usize]) -> EmRun {
    let params = Params {
        pi: order.iter().map(|&c| run.params.pi[c]).collect(),
        theta: order.iter().map(|&c| run.params.theta[c].clone()).collect(),
    };
    let gamma = run.gamma.select_columns(order);
    EmRun {
        params,
        gamma,
        ..run
    }
}

/// PRNG for restart `restart` of a fit seeded with `seed`.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

pub fn fit(series: &NetworkSeries, spec: &ModelSpec, config: &FitConfig) -> Result<FitResult> {
    fit_counts(&DyadTransitionCounts::new(series), spec, config)
}

/// [`fit`] on precomputed dyad counts, so several `K` can share them.
pub fn fit_counts(
    data: &DyadTransitionCounts,
    spec: &ModelSpec,
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    if data.n() < 2 || data.horizon() < 1 {
        return Err(Error::Shape("fitting needs n >= 2 and T >= 1".into()));
    }
    if spec.k > data.n() {
        return Err(Error::Config(format!("K = {} exceeds n = {}", spec.k, data.n())));
    }
    let runs: Vec<Result<EmRun>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(config.seed, r);
            let init = VariationalState::random(data.n(), spec.k, config.gamma_floor, &mut rng);
            run_em(data, spec, init.matrix(), config)
        })
        .collect();

    let mut best: Option<(usize, EmRun)> = None;
    let mut failed = 0;
    let mut last_err = None;
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok(run) => {
                let better = best.as_ref().is_none_or(|(_, b)| {
                    run.lb_trajectory.last() > b.lb_trajectory.last()
                });
                if better {
                    best = Some((r, run));
                }
            }
            Err(e) => {
                log::warn!("restart {r} failed: {e}");
                failed += 1;
                last_err = Some(e);
            }
        }
    }
    let Some((restart_index, run)) = best else {
        return Err(Error::AllRestartsFailed {
            restarts: config.restarts,
            last: Box::new(last_err.expect("at least one restart ran")),
        });
    };
    let run = permute_run(run.clone(), &canonical_order(&run.params));
    let labels = assign_labels(&run.gamma);
    Ok(FitResult {
        spec: *spec,
        params: run.params,
        gamma: VariationalState { gamma: run.gamma },
        labels,
        lb_trajectory: run.lb_trajectory,
        converged: run.converged,
        iterations: run.iterations,
        restart_index,
        seed: config.seed,
        failed_restarts: failed,
    })
}
