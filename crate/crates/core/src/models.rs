//! Transition models with node-additive parameters.
//!
//! Given the previous network and the community labels, each dyad evolves
//! independently as a logistic model whose log-odds is the sum of the two
//! endpoint communities' parameters:
//!
//! * `TergmStability`: one stability parameter per community. The log-odds
//!   of `y_cur = 1` is `+(θ_k + θ_l)` when the edge was present and
//!   `-(θ_k + θ_l)` when it was absent.
//! * `StergmFp`: formation and persistence parameters. Absent edges form
//!   with log-odds `θ^f_k + θ^f_l`; present edges persist with log-odds
//!   `θ^p_k + θ^p_l`.
//!
//! Parameter vectors are flattened column-major: entry `c * K + k` holds
//! column `c` of community `k`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netseries::{BlockTransitionCounts, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// TERGM with a single stability statistic.
    TergmStability,
    /// Separable TERGM with formation and persistence statistics.
    StergmFp,
}

impl ModelKind {
    /// Short name used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TergmStability => "tergm",
            ModelKind::StergmFp => "stergm",
        }
    }

    /// Parameters per community.
    pub fn params_per_community(self) -> usize {
        match self {
            ModelKind::TergmStability => 1,
            ModelKind::StergmFp => 2,
        }
    }

    pub fn column_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::TergmStability => &["stability"],
            ModelKind::StergmFp => &["formation", "persistence"],
        }
    }

    /// Parameter column and sign of the log-odds for a dyad whose previous
    /// state is `prev`.
    #[inline]
    fn column_and_sign(self, prev: bool) -> (usize, f64) {
        match self {
            ModelKind::TergmStability => (0, if prev { 1.0 } else { -1.0 }),
            ModelKind::StergmFp => (prev as usize, 1.0),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tergm" | "tergm_stability" => Ok(ModelKind::TergmStability),
            "stergm" | "stergm_fp" => Ok(ModelKind::StergmFp),
            other => Err(Error::Config(format!("unknown model {other:?}; expected tergm or stergm"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub k: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("community count must be at least 1".into()));
        }
        Ok(ModelSpec { kind, k })
    }

    pub fn p(&self) -> usize {
        self.kind.params_per_community()
    }

    /// Length of the flattened parameter vector, `K * p`.
    pub fn dim(&self) -> usize {
        self.k * self.p()
    }
}

/// Mixing proportions and per-community parameters (`theta[k]` has `p` entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub pi: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
}

impl Params {
    pub fn new(spec: &ModelSpec, pi: Vec<f64>, theta: Vec<Vec<f64>>) -> Result<Self> {
        let params = Params { pi, theta };
        params.validate(spec)?;
        Ok(params)
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.pi.len() != spec.k || self.theta.len() != spec.k {
            return Err(Error::Shape(format!(
                "expected {} communities, got pi {} / theta {}",
                spec.k,
                self.pi.len(),
                self.theta.len()
            )));
        }
        if self.theta.iter().any(|row| row.len() != spec.p()) {
            return Err(Error::Shape(format!("theta rows must have {} entries", spec.p())));
        }
        if self.pi.iter().any(|&p| !(p >= 0.0)) || (self.pi.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::Config(format!("pi {:?} is not on the simplex", self.pi)));
        }
        if self.theta.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("theta entries must be finite".into()));
        }
        Ok(())
    }

    pub fn theta_flat(&self) -> DVector<f64> {
        flatten_theta(&self.theta)
    }
}

pub fn flatten_theta(theta: &[Vec<f64>]) -> DVector<f64> {
    let k = theta.len();
    let p = theta.first().map_or(0, Vec::len);
    DVector::from_fn(k * p, |idx, _| theta[idx % k][idx / k])
}

pub fn unflatten_theta(flat: &DVector<f64>, k: usize) -> Vec<Vec<f64>> {
    let p = flat.len() / k;
    (0..k).map(|row| (0..p).map(|c| flat[c * k + row]).collect()).collect()
}

/// Dyad statistics for one transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffStats {
    /// Edges present at the current step.
    pub density: u64,
    /// Dyads whose state did not change.
    pub stability: u64,
    /// Edges absent before and present now.
    pub formation: u64,
    /// Edges present before and still present.
    pub persistence: u64,
}

pub fn suff_stats(prev: &Snapshot, cur: &Snapshot) -> Result<SuffStats> {
    if prev.n() != cur.n() {
        return Err(Error::Shape(format!(
            "snapshots over {} and {} nodes",
            prev.n(),
            cur.n()
        )));
    }
    let n = cur.n() as u64;
    let persistence = cur.edges().iter().filter(|&&(i, j)| prev.has_edge(i, j)).count() as u64;
    let density = cur.edge_count() as u64;
    let formation = density - persistence;
    let dissolved = prev.edge_count() as u64 - persistence;
    Ok(SuffStats {
        density,
        stability: n * n.saturating_sub(1) / 2 - formation - dissolved,
        formation,
        persistence,
    })
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Log-odds of `y_cur = 1` for a dyad between communities with parameter
/// rows `theta_k` and `theta_l`.
#[inline]
pub fn dyad_natural_param(kind: ModelKind, theta_k: &[f64], theta_l: &[f64], prev: bool) -> f64 {
    let (c, sign) = kind.column_and_sign(prev);
    sign * (theta_k[c] + theta_l[c])
}

/// `log pr(y_cur | y_prev)` for one dyad.
#[inline]
pub fn edge_transition_logprob(
    kind: ModelKind,
    theta_k: &[f64],
    theta_l: &[f64],
    prev: bool,
    cur: bool,
) -> f64 {
    let eta = dyad_natural_param(kind, theta_k, theta_l, prev);
    logprob_from_eta(eta, cur)
}

#[inline]
pub(crate) fn logprob_from_eta(eta: f64, cur: bool) -> f64 {
    if cur {
        -softplus(-eta)
    } else {
        -softplus(eta)
    }
}

/// `p_kl`: probability that a dyad between communities `k` and `l` is an
/// edge at the next step, given its previous state.
pub fn edge_probability(kind: ModelKind, theta_k: &[f64], theta_l: &[f64], prev: bool) -> f64 {
    sigmoid(dyad_natural_param(kind, theta_k, theta_l, prev))
}

/// `K x K` tables of `log pr(y_cur = b | y_prev = a)`, one per cell
/// `(a, b)` in [`crate::netseries::cell`] order.
pub fn log_prob_tables(kind: ModelKind, theta: &[Vec<f64>]) -> [DMatrix<f64>; 4] {
    let k = theta.len();
    std::array::from_fn(|c| {
        let (prev, cur) = (c & 2 != 0, c & 1 != 0);
        DMatrix::from_fn(k, k, |a, b| {
            edge_transition_logprob(kind, &theta[a], &theta[b], prev, cur)
        })
    })
}

/// Transition counts aggregated by unordered community pair, possibly with
/// fractional weights.
///
/// With hard labels these are the integer [`BlockTransitionCounts`]; with
/// responsibilities `Γ` the weight of pair `{k, l}` on dyad `{i, j}` is
/// `γ_ik γ_jl + γ_il γ_jk` (`γ_ik γ_jk` when `k = l`). In both cases the
/// θ-dependent part of the objective is a weighted logistic log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTransitionWeights {
    k: usize,
    /// `[w00, w01, w10, w11]` per pair `k <= l`, in pair-index order.
    cells: Vec<[f64; 4]>,
}

impl PairTransitionWeights {
    pub fn from_cells(k: usize, cells: Vec<[f64; 4]>) -> Self {
        assert_eq!(cells.len(), k * (k + 1) / 2);
        PairTransitionWeights { k, cells }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize, &[f64; 4])> + '_ {
        let k = self.k;
        (0..k)
            .flat_map(move |a| (a..k).map(move |b| (a, b)))
            .zip(&self.cells)
            .map(|((a, b), w)| (a, b, w))
    }

    /// Weighted log-likelihood at the flattened parameter vector.
    pub fn loglik(&self, kind: ModelKind, theta: &DVector<f64>) -> f64 {
        let k = self.k;
        let mut total = 0.0;
        for (a, b, w) in self.pairs() {
            for prev in [false, true] {
                let (c, sign) = kind.column_and_sign(prev);
                let (fail, succ) = (w[(prev as usize) << 1], w[(prev as usize) << 1 | 1]);
                if fail + succ == 0.0 {
                    continue;
                }
                let eta = sign * (theta[c * k + a] + theta[c * k + b]);
                total += succ * eta - (fail + succ) * softplus(eta);
            }
        }
        total
    }

    /// Gradient and Hessian of [`Self::loglik`].
    pub fn grad_hess(&self, kind: ModelKind, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let k = self.k;
        let dim = theta.len();
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);
        for (a, b, w) in self.pairs() {
            for prev in [false, true] {
                let (c, sign) = kind.column_and_sign(prev);
                let (fail, succ) = (w[(prev as usize) << 1], w[(prev as usize) << 1 | 1]);
                let trials = fail + succ;
                if trials == 0.0 {
                    continue;
                }
                let (ia, ib) = (c * k + a, c * k + b);
                let eta = sign * (theta[ia] + theta[ib]);
                let mu = sigmoid(eta);
                let g = sign * (succ - trials * mu);
                let h = trials * mu * (1.0 - mu);
                grad[ia] += g;
                grad[ib] += g;
                hess[(ia, ia)] -= h;
                hess[(ib, ib)] -= h;
                hess[(ia, ib)] -= h;
                hess[(ib, ia)] -= h;
            }
        }
        (grad, hess)
    }
}

impl From<&BlockTransitionCounts> for PairTransitionWeights {
    fn from(counts: &BlockTransitionCounts) -> Self {
        PairTransitionWeights {
            k: counts.k(),
            cells: counts.iter().map(|(_, _, c)| c.map(|v| v as f64)).collect(),
        }
    }
}
