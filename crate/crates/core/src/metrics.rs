//! Clustering accuracy and network-dynamics summaries.

use std::fmt::Write as _;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::sigmoid;
use crate::netseries::{check_labels, transition_tallies_at, NetworkSeries};

/// Fraction of node pairs on which two labelings agree about being in the
/// same community or in different ones.
pub fn rand_index(truth: &[usize], estimate: &[usize]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::Shape(format!(
            "labelings of length {} and {}",
            truth.len(),
            estimate.len()
        )));
    }
    let n = truth.len();
    if n < 2 {
        return Err(Error::Shape("the Rand index needs at least two nodes".into()));
    }
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (truth[i] == truth[j]) == (estimate[i] == estimate[j]) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RseReport {
    pub rse_pi: f64,
    /// One entry per parameter column.
    pub rse_theta: Vec<f64>,
    /// `permutation[k]` is the estimated community matched to true community `k`.
    pub permutation: Vec<usize>,
}

/// Root squared errors of `π̂` and of each θ column after matching estimated
/// communities to the true ones by the permutation minimizing the summed
/// errors (exhaustive, so at most 8 communities).
pub fn rse(
    pi_hat: &[f64],
    pi_true: &[f64],
    theta_hat: &[Vec<f64>],
    theta_true: &[Vec<f64>],
) -> Result<RseReport> {
    let k = pi_true.len();
    if pi_hat.len() != k || theta_hat.len() != k || theta_true.len() != k {
        return Err(Error::Shape("estimates and truth differ in community count".into()));
    }
    if k > 8 {
        return Err(Error::TooManyCommunities(k));
    }
    let p = theta_true.first().map_or(0, Vec::len);
    if theta_hat.iter().chain(theta_true).any(|r| r.len() != p) {
        return Err(Error::Shape("theta rows differ in length".into()));
    }
    let score = |perm: &[usize]| -> (f64, Vec<f64>) {
        let pi = (0..k).map(|c| (pi_hat[perm[c]] - pi_true[c]).powi(2)).sum::<f64>().sqrt();
        let theta = (0..p)
            .map(|col| {
                (0..k)
                    .map(|c| (theta_hat[perm[c]][col] - theta_true[c][col]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        (pi, theta)
    };
    let best = (0..k)
        .permutations(k)
        .map(|perm| {
            let (pi, theta) = score(&perm);
            let total = pi + theta.iter().sum::<f64>();
            (total, perm, pi, theta)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one permutation");
    Ok(RseReport {
        rse_pi: best.2,
        rse_theta: best.3,
        permutation: best.1,
    })
}

/// Mean and spread of one instability ratio across time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    /// Average over the steps with a nonzero denominator.
    pub mean: Option<f64>,
    /// Sample standard deviation over the same steps.
    pub sd: Option<f64>,
    pub used: usize,
    /// Steps skipped because the denominator was zero.
    pub excluded: usize,
}

impl RatioSummary {
    fn from_ratios(ratios: &[Option<f64>]) -> Self {
        let used: Vec<f64> = ratios.iter().flatten().copied().collect();
        let mean = (!used.is_empty()).then(|| used.iter().sum::<f64>() / used.len() as f64);
        let sd = mean.map(|m| {
            if used.len() < 2 {
                0.0
            } else {
                (used.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (used.len() - 1) as f64).sqrt()
            }
        });
        RatioSummary {
            mean,
            sd,
            used: used.len(),
            excluded: ratios.len() - used.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInstability {
    pub k: usize,
    pub l: usize,
    /// Dissolved edges over persisted edges.
    pub dissolution: RatioSummary,
    /// Formed edges over stably absent dyads.
    pub formation: RatioSummary,
    /// Changed dyads over unchanged dyads.
    pub total: RatioSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilityReport {
    pub k: usize,
    pub pairs: Vec<PairInstability>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

impl InstabilityReport {
    pub fn pair(&self, k: usize, l: usize) -> &PairInstability {
        let (a, b) = (k.min(l), k.max(l));
        self.pairs
            .iter()
            .find(|p| p.k == a && p.l == b)
            .expect("pair within 0..K")
    }

    /// One row per pair, communities 1-based.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "k\tl\tas_10\tsd_10\tas_01\tsd_01\tas_tot\tsd_tot\texcluded_10\texcluded_01\texcluded_tot\n",
        );
        for p in &self.pairs {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.k + 1,
                p.l + 1,
                fmt_opt(p.dissolution.mean),
                fmt_opt(p.dissolution.sd),
                fmt_opt(p.formation.mean),
                fmt_opt(p.formation.sd),
                fmt_opt(p.total.mean),
                fmt_opt(p.total.sd),
                p.dissolution.excluded,
                p.formation.excluded,
                p.total.excluded,
            );
        }
        out
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Within- and between-community instability ratios averaged over time.
///
/// For each pair and step: `S_1→0 = n10 / n11`, `S_0→1 = n01 / n00` and
/// `S_tot = (n10 + n01) / (n00 + n11)`. Steps with a zero denominator are
/// left out of the average and counted as excluded.
pub fn instability_stats(series: &NetworkSeries, z: &[usize], k: usize) -> Result<InstabilityReport> {
    check_labels(z, series.n(), k)?;
    let per_t = (1..=series.horizon())
        .map(|t| transition_tallies_at(series, z, k, t))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for a in 0..k {
        for b in a..k {
            let cells: Vec<[u64; 4]> = per_t.iter().map(|c| c.get(a, b)).collect();
            let summarize = |f: fn(&[u64; 4]) -> Option<f64>| {
                RatioSummary::from_ratios(&cells.iter().map(f).collect::<Vec<_>>())
            };
            pairs.push(PairInstability {
                k: a,
                l: b,
                dissolution: summarize(|c| ratio(c[2], c[3])),
                formation: summarize(|c| ratio(c[1], c[0])),
                total: summarize(|c| ratio(c[1] + c[2], c[0] + c[3])),
            });
        }
    }
    Ok(InstabilityReport { k, pairs })
}

/// Expected lifetime of an edge that persists each step with probability
/// `logistic(theta_p)`.
pub fn mean_relational_duration(theta_p: f64) -> f64 {
    1.0 / (1.0 - sigmoid(theta_p))
}
