//! Choosing the number of communities.
//!
//! Given hard labels `ẑ` from a fit, the conditional log-likelihood
//! `cl(θ, ẑ)` treats the dyad transitions as independent logistic outcomes.
//! CL-BIC penalizes `−2 cl(θ̂_mle, ẑ)` by the sandwich complexity
//! `d_K = tr(Ĥ⁻¹ V̂)` times `log(T n (n − 1) / 2)`; the modified ICL
//! penalizes `cl` by the parameter count times the same logarithm.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{flatten_theta, unflatten_theta, ModelKind, ModelSpec, PairTransitionWeights};
use crate::netseries::{
    check_labels, transition_tallies, transition_tallies_at, DyadTransitionCounts, NetworkSeries,
};
use crate::varem::{fit_counts, newton_ascent, FitConfig, FitResult};

/// Conditional MLEs are clipped to `|θ| <= THETA_BOUND` under separation.
pub const THETA_BOUND: f64 = 15.0;

/// Coordinates beyond this magnitude are tested for separation.
const RUNAWAY_CHECK: f64 = 4.0;

/// `log(T n (n − 1) / 2)`, the log of the number of modeled dyad transitions.
pub fn penalty_multiplier(n: usize, horizon: usize) -> f64 {
    ((horizon * n * (n - 1) / 2) as f64).ln()
}

fn weights_for(series: &NetworkSeries, spec: &ModelSpec, z: &[usize]) -> Result<PairTransitionWeights> {
    Ok(PairTransitionWeights::from(&transition_tallies(series, z, spec.k)?))
}

fn check_theta(spec: &ModelSpec, theta: &[Vec<f64>]) -> Result<()> {
    if theta.len() != spec.k || theta.iter().any(|r| r.len() != spec.p()) {
        return Err(Error::Shape(format!(
            "theta must be {}x{}",
            spec.k,
            spec.p()
        )));
    }
    Ok(())
}

/// `Σ_t Σ_{i<j} log pr_θ(y_t,ij | y_t-1,ij, ẑ)`, via block tallies.
pub fn conditional_loglik(
    series: &NetworkSeries,
    spec: &ModelSpec,
    theta: &[Vec<f64>],
    z: &[usize],
) -> Result<f64> {
    check_theta(spec, theta)?;
    Ok(weights_for(series, spec, z)?.loglik(spec.kind, &flatten_theta(theta)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMle {
    pub theta: Vec<Vec<f64>>,
    /// Some coordinate ran off to infinity and was clipped at ±[`THETA_BOUND`].
    pub diverged: bool,
    /// Some coordinate has no data at all (e.g. an empty community) and was
    /// left at zero.
    pub unidentified: bool,
    /// Gradient ∞-norm over the coordinates that were optimized freely.
    pub grad_norm: f64,
}

/// Maximizes `cl(θ, ẑ)` in θ.
///
/// The problem is a concave weighted logistic regression. Coordinates with
/// no information stay at zero. Under separation a coordinate that keeps
/// improving `cl` out to `±15` is clipped there and held fixed while the
/// remaining ones are re-optimized.
pub fn conditional_mle(series: &NetworkSeries, spec: &ModelSpec, z: &[usize]) -> Result<ConditionalMle> {
    let weights = weights_for(series, spec, z)?;
    mle_from_weights(&weights, spec)
}

fn mle_from_weights(weights: &PairTransitionWeights, spec: &ModelSpec) -> Result<ConditionalMle> {
    let dim = spec.dim();
    let kind = spec.kind;
    let mut theta = DVector::zeros(dim);
    let (_, h0) = weights.grad_hess(kind, &theta);
    let mut free: Vec<bool> = (0..dim).map(|c| h0[(c, c)] < 0.0).collect();
    let unidentified = free.iter().any(|f| !f);
    let mut diverged = false;
    let mut grad_norm = 0.0;

    for _ in 0..=dim {
        let idx: Vec<usize> = (0..dim).filter(|&c| free[c]).collect();
        if idx.is_empty() {
            break;
        }
        let embed = |sub: &DVector<f64>, base: &DVector<f64>| {
            let mut full = base.clone();
            for (s, &c) in idx.iter().enumerate() {
                full[c] = sub[s];
            }
            full
        };
        let base = theta.clone();
        let start = DVector::from_iterator(idx.len(), idx.iter().map(|&c| theta[c]));
        let out = newton_ascent(
            start,
            200,
            |sub| weights.loglik(kind, &embed(sub, &base)),
            |sub| {
                let (g, h) = weights.grad_hess(kind, &embed(sub, &base));
                (g.select_rows(&idx), h.select_rows(&idx).select_columns(&idx))
            },
        )?;
        theta = embed(&out.theta, &base);
        grad_norm = out.grad_norm;
        // The gradient decays like e^{-2|θ|} under separation, so Newton can
        // report convergence well short of the bound. A coordinate is running
        // off when moving it out to the bound does not lower cl.
        let value = weights.loglik(kind, &theta);
        let far: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&c| {
                if theta[c].abs() > THETA_BOUND {
                    return true;
                }
                if theta[c].abs() < RUNAWAY_CHECK {
                    return false;
                }
                let mut pushed = theta.clone();
                pushed[c] = THETA_BOUND.copysign(theta[c]);
                weights.loglik(kind, &pushed) >= value
            })
            .collect();
        if far.is_empty() {
            break;
        }
        for c in far {
            theta[c] = THETA_BOUND.copysign(theta[c]);
            free[c] = false;
        }
        diverged = true;
    }
    Ok(ConditionalMle {
        theta: unflatten_theta(&theta, spec.k),
        diverged,
        unidentified,
        grad_norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Complexity {
    /// `tr(Ĥ⁻¹ V̂)`.
    pub d: f64,
    /// Observed information `−∇² cl` at θ̂.
    pub h: DMatrix<f64>,
    /// `Σ_t u_t u_tᵀ` with `u_t` the score of step `t`.
    pub v: DMatrix<f64>,
    /// `Ĥ` was singular and a pseudo-inverse was used.
    pub singular: bool,
}

/// Inverse of a symmetric PSD matrix, or its pseudo-inverse (flagged) when
/// it is numerically singular.
fn psd_inverse(h: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let eig = h.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-10 * max.max(f64::MIN_POSITIVE);
    let singular = eig.eigenvalues.iter().any(|&v| v <= tol);
    let inv_vals = eig.eigenvalues.map(|v| if v > tol { 1.0 / v } else { 0.0 });
    let q = &eig.eigenvectors;
    (q * DMatrix::from_diagonal(&inv_vals) * q.transpose(), singular)
}

/// Sandwich complexity `d_K = tr(Ĥ⁻¹ V̂)` at `theta_mle`.
///
/// For the formation/persistence model the formation parameters only see
/// dyads that were absent at `t − 1` and the persistence parameters only
/// those that were present, so `Ĥ` is block diagonal across the two columns
/// and the scores stack the two sub-likelihoods.
pub fn clbic_complexity(
    series: &NetworkSeries,
    spec: &ModelSpec,
    theta_mle: &[Vec<f64>],
    z: &[usize],
) -> Result<Complexity> {
    check_theta(spec, theta_mle)?;
    check_labels(z, series.n(), spec.k)?;
    if theta_mle.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config("theta_mle must be finite".into()));
    }
    let theta = flatten_theta(theta_mle);
    let dim = spec.dim();
    let mut v = DMatrix::zeros(dim, dim);
    let mut h = DMatrix::zeros(dim, dim);
    for t in 1..=series.horizon() {
        let w = PairTransitionWeights::from(&transition_tallies_at(series, z, spec.k, t)?);
        let (u, hess) = w.grad_hess(spec.kind, &theta);
        v += &u * u.transpose();
        h -= hess;
    }
    let (h_inv, singular) = psd_inverse(&h);
    let d = (&h_inv * &v).trace();
    Ok(Complexity { d, h, v, singular })
}

/// `−2 cl + d_K log(T n (n − 1) / 2)`.
pub fn cl_bic(series: &NetworkSeries, spec: &ModelSpec, z: &[usize], theta_mle: &[Vec<f64>]) -> Result<f64> {
    let cl = conditional_loglik(series, spec, theta_mle, z)?;
    let d = clbic_complexity(series, spec, theta_mle, z)?.d;
    Ok(-2.0 * cl + d * penalty_multiplier(series.n(), series.horizon()))
}

/// Parameter count used by the modified ICL: `K` for the stability model,
/// `2K` for formation/persistence.
pub fn icl_parameter_count(spec: &ModelSpec) -> usize {
    spec.dim()
}

/// `cl(θ̂, ẑ) − m_K log(T n (n − 1) / 2)`.
pub fn icl(series: &NetworkSeries, spec: &ModelSpec, z: &[usize], theta_hat: &[Vec<f64>]) -> Result<f64> {
    let cl = conditional_loglik(series, spec, theta_hat, z)?;
    Ok(cl - icl_parameter_count(spec) as f64 * penalty_multiplier(series.n(), series.horizon()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identifiability {
    /// The mixture (π and the conditional edge probabilities) is generically
    /// identifiable up to label permutation.
    pub mixture_ok: bool,
    /// The node-additive θ can be recovered from the edge probabilities.
    pub theta_ok: bool,
}

/// Sufficient conditions for generic identifiability with `n` nodes, `K`
/// communities and `p` parameters per community.
pub fn identifiability_check(n: usize, k: usize, p: usize) -> Identifiability {
    let kf = k as f64;
    let needed = if k.is_multiple_of(2) {
        kf - 1.0 + (kf + 2.0).powi(2) / 4.0
    } else {
        kf - 1.0 + (kf + 1.0) * (kf + 3.0) / 4.0
    };
    Identifiability {
        mixture_ok: (n as f64).sqrt() >= needed,
        theta_ok: p <= k.div_ceil(2),
    }
}

/// Criteria for one candidate `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEvaluation {
    pub k: usize,
    pub cl: f64,
    pub theta_mle: Vec<Vec<f64>>,
    pub d_k: f64,
    pub cl_bic: f64,
    pub icl: f64,
    pub diverged: bool,
    pub unidentified: bool,
    pub singular_h: bool,
    pub lower_bound: f64,
    pub converged: bool,
}

/// Evaluates both criteria at hard labels `z` for `K = spec.k`.
pub fn evaluate_labels(series: &NetworkSeries, spec: &ModelSpec, z: &[usize]) -> Result<KEvaluation> {
    let weights = weights_for(series, spec, z)?;
    let mle = mle_from_weights(&weights, spec)?;
    let cl = weights.loglik(spec.kind, &flatten_theta(&mle.theta));
    let complexity = clbic_complexity(series, spec, &mle.theta, z)?;
    let mult = penalty_multiplier(series.n(), series.horizon());
    Ok(KEvaluation {
        k: spec.k,
        cl,
        d_k: complexity.d,
        cl_bic: -2.0 * cl + complexity.d * mult,
        icl: cl - icl_parameter_count(spec) as f64 * mult,
        theta_mle: mle.theta,
        diverged: mle.diverged,
        unidentified: mle.unidentified,
        singular_h: complexity.singular,
        lower_bound: f64::NAN,
        converged: true,
    })
}

/// Relative tolerance under which two criterion values count as tied.
///
/// A fit that leaves communities empty reproduces the smaller-K model up to
/// rounding; ties go to the smaller K.
const TIE_TOL: f64 = 1e-9;

fn smallest_best_k(rows: &[KEvaluation], score: impl Fn(&KEvaluation) -> f64) -> usize {
    let best = rows.iter().map(&score).fold(f64::NEG_INFINITY, f64::max);
    rows.iter()
        .filter(|r| score(r) >= best - TIE_TOL * (best.abs() + 1.0))
        .map(|r| r.k)
        .min()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub model: ModelKind,
    pub rows: Vec<KEvaluation>,
    pub chosen_k_clbic: usize,
    pub chosen_k_icl: usize,
}

impl SelectionReport {
    fn from_rows(model: ModelKind, rows: Vec<KEvaluation>) -> Self {
        let chosen_k_clbic = smallest_best_k(&rows, |r| -r.cl_bic);
        let chosen_k_icl = smallest_best_k(&rows, |r| r.icl);
        SelectionReport {
            model,
            rows,
            chosen_k_clbic,
            chosen_k_icl,
        }
    }

    /// Plot-ready curve: one row per `K`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("K\tcl\td_K\tcl_bic\ticl\n");
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}", r.k, r.cl, r.d_k, r.cl_bic, r.icl);
        }
        out
    }
}

/// A selection run together with the fits it was computed from.
#[derive(Debug, Clone)]
pub struct Selection {
    pub report: SelectionReport,
    pub fits: Vec<FitResult>,
}

impl Selection {
    pub fn fit_for(&self, k: usize) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.spec.k == k)
    }
}

/// Fits every `K` in `ks` and scores each with CL-BIC and ICL.
pub fn select(
    series: &NetworkSeries,
    kind: ModelKind,
    ks: RangeInclusive<usize>,
    config: &FitConfig,
) -> Result<Selection> {
    if ks.is_empty() || *ks.start() == 0 {
        return Err(Error::Config(format!("invalid K range {ks:?}")));
    }
    let data = DyadTransitionCounts::new(series);
    let ks: Vec<usize> = ks.collect();
    let results: Vec<(KEvaluation, FitResult)> = ks
        .par_iter()
        .map(|&k| {
            let spec = ModelSpec::new(kind, k)?;
            let fit = fit_counts(&data, &spec, config)?;
            let mut eval = evaluate_labels(series, &spec, &fit.labels)?;
            eval.lower_bound = fit.lower_bound();
            eval.converged = fit.converged;
            Ok((eval, fit))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, fits): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(Selection {
        report: SelectionReport::from_rows(kind, rows),
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::edge_transition_logprob;
    use approx::assert_relative_eq;

    const TERGM: ModelKind = ModelKind::TergmStability;
    const STERGM: ModelKind = ModelKind::StergmFp;

    fn small() -> NetworkSeries {
        NetworkSeries::from_timed_edges(
            4,
            2,
            [(0, 0, 1), (0, 2, 3), (1, 0, 1), (1, 1, 2), (2, 1, 2), (2, 0, 3), (2, 0, 1)],
        )
        .unwrap()
    }

    fn per_dyad_cl(series: &NetworkSeries, kind: ModelKind, theta: &[Vec<f64>], z: &[usize]) -> f64 {
        let n = series.n();
        let mut s = 0.0;
        for t in 1..=series.horizon() {
            for i in 0..n {
                for j in i + 1..n {
                    s += edge_transition_logprob(
                        kind,
                        &theta[z[i]],
                        &theta[z[j]],
                        series.snapshot(t - 1).has_edge(i, j),
                        series.snapshot(t).has_edge(i, j),
                    );
                }
            }
        }
        s
    }

    #[test]
    fn cl_matches_per_dyad_sum() {
        let s = small();
        let z = [0, 1, 1, 0];
        for (kind, theta) in [
            (TERGM, vec![vec![0.3], vec![-0.8]]),
            (STERGM, vec![vec![0.3, 1.1], vec![-0.8, 0.2]]),
        ] {
            let spec = ModelSpec::new(kind, 2).unwrap();
            assert_relative_eq!(
                conditional_loglik(&s, &spec, &theta, &z).unwrap(),
                per_dyad_cl(&s, kind, &theta, &z),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn cl_is_invariant_to_relabeling() {
        let s = small();
        let spec = ModelSpec::new(TERGM, 2).unwrap();
        let a = conditional_loglik(&s, &spec, &[vec![0.3], vec![-0.8]], &[0, 1, 1, 0]).unwrap();
        let b = conditional_loglik(&s, &spec, &[vec![-0.8], vec![0.3]], &[1, 0, 0, 1]).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-14);
    }

    #[test]
    fn cl_of_frozen_series_tends_to_zero() {
        let edges: Vec<_> = (0..=3).flat_map(|t| [(t, 0, 1), (t, 1, 2)]).collect();
        let s = NetworkSeries::from_timed_edges(4, 3, edges).unwrap();
        let spec = ModelSpec::new(TERGM, 1).unwrap();
        let cl = conditional_loglik(&s, &spec, &[vec![20.0]], &[0; 4]).unwrap();
        assert!(cl < 0.0 && cl > -1e-14);
    }

    #[test]
    fn mle_single_community_closed_form() {
        let s = small();
        let spec = ModelSpec::new(TERGM, 1).unwrap();
        let mle = conditional_mle(&s, &spec, &[0; 4]).unwrap();
        let c = transition_tallies(&s, &[0; 4], 1).unwrap().get(0, 0);
        let frac = (c[0] + c[3]) as f64 / 12.0;
        assert_relative_eq!(mle.theta[0][0], 0.5 * (frac / (1.0 - frac)).ln(), epsilon = 1e-10);
        assert!(!mle.diverged && mle.grad_norm < 1e-8);

        let spec = ModelSpec::new(STERGM, 1).unwrap();
        let mle = conditional_mle(&s, &spec, &[0; 4]).unwrap();
        let logit = |p: f64| (p / (1.0 - p)).ln();
        assert_relative_eq!(mle.theta[0][0], 0.5 * logit(c[1] as f64 / (c[0] + c[1]) as f64), epsilon = 1e-10);
        assert_relative_eq!(mle.theta[0][1], 0.5 * logit(c[3] as f64 / (c[2] + c[3]) as f64), epsilon = 1e-10);
    }

    #[test]
    fn separation_is_clipped_and_flagged() {
        let edges: Vec<_> = (0..=3).flat_map(|t| [(t, 0, 1), (t, 1, 2)]).collect();
        let s = NetworkSeries::from_timed_edges(4, 3, edges).unwrap();
        let spec = ModelSpec::new(TERGM, 1).unwrap();
        let mle = conditional_mle(&s, &spec, &[0; 4]).unwrap();
        assert!(mle.diverged);
        assert_eq!(mle.theta[0][0], THETA_BOUND);
    }

    #[test]
    fn empty_community_is_left_at_zero() {
        let s = small();
        let spec = ModelSpec::new(TERGM, 3).unwrap();
        let mle = conditional_mle(&s, &spec, &[0, 1, 1, 0]).unwrap();
        assert!(mle.unidentified);
        assert_eq!(mle.theta[2][0], 0.0);
        let c = clbic_complexity(&s, &spec, &mle.theta, &[0, 1, 1, 0]).unwrap();
        assert!(c.singular);
        assert!(c.d.is_finite());
    }

    #[test]
    fn complexity_single_step_is_rank_one() {
        let s = NetworkSeries::from_timed_edges(6, 1, [(0, 0, 1), (0, 2, 3), (1, 0, 1), (1, 4, 5), (1, 1, 3)])
            .unwrap();
        let spec = ModelSpec::new(TERGM, 2).unwrap();
        let z = [0, 0, 0, 1, 1, 1];
        let mle = conditional_mle(&s, &spec, &z).unwrap();
        let c = clbic_complexity(&s, &spec, &mle.theta, &z).unwrap();
        assert!(c.v.rank(1e-9 * c.v.amax().max(1e-300)) <= 1);
    }

    #[test]
    fn information_matches_displayed_structure() {
        // Within-community diagonal carries multiplicity 4, cross terms 1.
        let s = small();
        let spec = ModelSpec::new(TERGM, 2).unwrap();
        let z = [0, 0, 1, 1];
        let theta = vec![vec![0.2], vec![-0.4]];
        let c = clbic_complexity(&s, &spec, &theta, &z).unwrap();
        let d = |x: f64| {
            let p = crate::models::sigmoid(x);
            p * (1.0 - p)
        };
        let t = 2.0;
        // One within dyad per community, four cross dyads.
        assert_relative_eq!(c.h[(0, 0)], t * (4.0 * d(0.4) + 4.0 * d(-0.2)), max_relative = 1e-12);
        assert_relative_eq!(c.h[(0, 1)], t * 4.0 * d(-0.2), max_relative = 1e-12);
        assert_relative_eq!(c.h[(1, 1)], t * (4.0 * d(-0.8) + 4.0 * d(-0.2)), max_relative = 1e-12);
    }

    #[test]
    fn penalty_multiplier_value() {
        assert!((penalty_multiplier(100, 10) - 10.809).abs() < 1e-3);
        assert_relative_eq!(penalty_multiplier(100, 10), 49500f64.ln());
    }

    #[test]
    fn icl_difference_identity() {
        let s = small();
        let spec1 = ModelSpec::new(TERGM, 1).unwrap();
        let spec2 = ModelSpec::new(TERGM, 2).unwrap();
        let (z1, z2) = ([0; 4], [0, 0, 1, 1]);
        let (t1, t2) = (vec![vec![0.1]], vec![vec![0.1], vec![-0.3]]);
        let lhs = icl(&s, &spec1, &z1, &t1).unwrap() - icl(&s, &spec2, &z2, &t2).unwrap();
        let rhs = conditional_loglik(&s, &spec1, &t1, &z1).unwrap()
            - conditional_loglik(&s, &spec2, &t2, &z2).unwrap()
            + penalty_multiplier(4, 2);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn single_snapshot_pair_is_cross_sectional() {
        // T = 1, K = 1: ICL is cl − log(n (n − 1) / 2).
        let s = NetworkSeries::from_timed_edges(5, 1, [(0, 0, 1), (1, 0, 1), (1, 2, 3)]).unwrap();
        let spec = ModelSpec::new(TERGM, 1).unwrap();
        let theta = vec![vec![0.4]];
        let cl = conditional_loglik(&s, &spec, &theta, &[0; 5]).unwrap();
        assert_relative_eq!(icl(&s, &spec, &[0; 5], &theta).unwrap(), cl - 10f64.ln());
    }

    #[test]
    fn identifiability_examples() {
        assert!(identifiability_check(25, 2, 1).mixture_ok);
        assert!(!identifiability_check(24, 2, 1).mixture_ok);
        assert!(identifiability_check(1, 1, 1).theta_ok);
        assert!(!identifiability_check(100, 1, 2).theta_ok);
        assert!(identifiability_check(100, 3, 2).theta_ok);
        // K = 3 (odd): sqrt(n) >= 2 + 4 * 6 / 4 = 8.
        assert!(identifiability_check(64, 3, 1).mixture_ok);
        assert!(!identifiability_check(63, 3, 1).mixture_ok);
    }

    #[test]
    fn selection_report_picks_extremes() {
        let row = |k, cl_bic, icl| KEvaluation {
            k,
            cl: 0.0,
            theta_mle: vec![],
            d_k: 0.0,
            cl_bic,
            icl,
            diverged: false,
            unidentified: false,
            singular_h: false,
            lower_bound: 0.0,
            converged: true,
        };
        let r = SelectionReport::from_rows(TERGM, vec![row(1, 5.0, -3.0), row(2, 2.0, -1.0), row(3, 4.0, -1.0)]);
        assert_eq!((r.chosen_k_clbic, r.chosen_k_icl), (2, 2));
        assert_eq!(r.to_tsv().lines().count(), 4);
        let tied = SelectionReport::from_rows(TERGM, vec![row(3, 2.0, -1.0), row(2, 2.0 + 1e-12, -1.0 - 1e-12)]);
        assert_eq!((tied.chosen_k_clbic, tied.chosen_k_icl), (2, 2));
    }
}
