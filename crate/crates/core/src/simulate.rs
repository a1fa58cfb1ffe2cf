//! Synthetic time-evolving networks with planted communities.
//!
//! [`simulate_mixture`] samples exactly from the mixture model.
//! [`simulate_duration_density`] is a model-free robustness generator: each
//! within-community dyad follows a two-state Markov chain parameterized by a
//! mean relational duration and a stationary density, and a fixed number of
//! random cross-community edges is planted in every snapshot.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{edge_probability, sigmoid, ModelKind, ModelSpec, Params};
use crate::netseries::{NetworkSeries, Snapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSimConfig {
    pub n: usize,
    pub horizon: usize,
    pub model: ModelKind,
    pub pi: Vec<f64>,
    /// Dynamic parameters, one row of `p` entries per community.
    pub theta: Vec<Vec<f64>>,
    /// Initial-network density parameter per community.
    pub theta_d: Vec<f64>,
    pub seed: u64,
}

impl MixtureSimConfig {
    pub fn spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(self.model, self.pi.len())
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        Params {
            pi: self.pi.clone(),
            theta: self.theta.clone(),
        }
        .validate(&spec)?;
        if self.theta_d.len() != spec.k {
            return Err(Error::Shape(format!(
                "theta_d has {} entries for {} communities",
                self.theta_d.len(),
                spec.k
            )));
        }
        if self.n < 2 || self.horizon < 1 {
            return Err(Error::Config("need n >= 2 and horizon >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationSimConfig {
    pub n: usize,
    pub horizon: usize,
    pub pi: Vec<f64>,
    /// Mean lifetime of a within-community edge, in time steps.
    pub mean_duration: Vec<f64>,
    /// Stationary within-community edge density.
    pub avg_density: Vec<f64>,
    /// Random cross-community edges planted in every snapshot.
    pub cross_edges: usize,
    pub seed: u64,
}

impl DurationSimConfig {
    pub fn k(&self) -> usize {
        self.pi.len()
    }

    /// Per-community `(persistence, formation)` transition probabilities.
    pub fn transition_probabilities(&self) -> Result<Vec<(f64, f64)>> {
        let k = self.k();
        if self.mean_duration.len() != k || self.avg_density.len() != k {
            return Err(Error::Shape(format!(
                "{k} communities but {} durations and {} densities",
                self.mean_duration.len(),
                self.avg_density.len()
            )));
        }
        if self.pi.iter().any(|&p| !(p >= 0.0)) || (self.pi.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("pi {:?} is not on the simplex", self.pi)));
        }
        (0..k)
            .map(|c| {
                let (dur, rho) = (self.mean_duration[c], self.avg_density[c]);
                if !(dur > 1.0) {
                    return Err(Error::Infeasible {
                        community: c,
                        reason: format!("mean duration {dur} must exceed 1"),
                    });
                }
                if !(rho > 0.0 && rho < 1.0) {
                    return Err(Error::Infeasible {
                        community: c,
                        reason: format!("density {rho} must lie in (0, 1)"),
                    });
                }
                let persist = 1.0 - 1.0 / dur;
                // Stationary density of the chain is form / (form + 1 - persist).
                let form = rho * (1.0 - persist) / (1.0 - rho);
                if form >= 1.0 {
                    return Err(Error::Infeasible {
                        community: c,
                        reason: format!(
                            "formation probability {form:.4} >= 1 for duration {dur} and density {rho}"
                        ),
                    });
                }
                Ok((persist, form))
            })
            .collect()
    }
}

/// Named replication settings for the simulation designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Model1,
    Model2,
    Model3,
    Model4,
    Model5,
    Model6,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum SimConfig {
    Mixture(MixtureSimConfig),
    DurationDensity(DurationSimConfig),
}

impl SimConfig {
    pub fn seed(&self) -> u64 {
        match self {
            SimConfig::Mixture(c) => c.seed,
            SimConfig::DurationDensity(c) => c.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            SimConfig::Mixture(c) => c.seed = seed,
            SimConfig::DurationDensity(c) => c.seed = seed,
        }
        self
    }

    pub fn true_k(&self) -> usize {
        match self {
            SimConfig::Mixture(c) => c.pi.len(),
            SimConfig::DurationDensity(c) => c.pi.len(),
        }
    }

    pub fn simulate(&self) -> Result<(NetworkSeries, Vec<usize>)> {
        match self {
            SimConfig::Mixture(c) => simulate_mixture(c),
            SimConfig::DurationDensity(c) => simulate_duration_density(c),
        }
    }
}

const THIRD: f64 = 1.0 / 3.0;

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Model1,
        Preset::Model2,
        Preset::Model3,
        Preset::Model4,
        Preset::Model5,
        Preset::Model6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Model1 => "model1",
            Preset::Model2 => "model2",
            Preset::Model3 => "model3",
            Preset::Model4 => "model4",
            Preset::Model5 => "model5",
            Preset::Model6 => "model6",
        }
    }

    /// The model family the preset was designed for; the duration/density
    /// presets can be fitted with either.
    pub fn model(self) -> Option<ModelKind> {
        match self {
            Preset::Model1 | Preset::Model2 => Some(ModelKind::TergmStability),
            Preset::Model3 | Preset::Model4 => Some(ModelKind::StergmFp),
            Preset::Model5 | Preset::Model6 => None,
        }
    }

    /// 100 nodes and 10 transitions; three-community designs use equal
    /// proportions of one third.
    pub fn config(self, seed: u64) -> SimConfig {
        let (n, horizon) = (100, 10);
        let mixture = |model, pi: Vec<f64>, theta, theta_d| {
            SimConfig::Mixture(MixtureSimConfig {
                n,
                horizon,
                model,
                pi,
                theta,
                theta_d,
                seed,
            })
        };
        let duration = |pi, mean_duration, avg_density| {
            SimConfig::DurationDensity(DurationSimConfig {
                n,
                horizon,
                pi,
                mean_duration,
                avg_density,
                cross_edges: 10,
                seed,
            })
        };
        match self {
            Preset::Model1 => mixture(
                ModelKind::TergmStability,
                vec![0.5, 0.5],
                vec![vec![-0.5], vec![0.5]],
                vec![-0.5, 0.5],
            ),
            Preset::Model2 => mixture(
                ModelKind::TergmStability,
                vec![THIRD; 3],
                vec![vec![-1.0], vec![0.0], vec![1.0]],
                vec![-1.0, 0.0, 1.0],
            ),
            Preset::Model3 => mixture(
                ModelKind::StergmFp,
                vec![0.5, 0.5],
                vec![vec![-1.5, -1.0], vec![1.5, 1.0]],
                vec![-0.5, 0.5],
            ),
            Preset::Model4 => mixture(
                ModelKind::StergmFp,
                vec![THIRD; 3],
                vec![vec![-1.5, -1.0], vec![0.0, 0.0], vec![1.5, 1.0]],
                vec![-1.0, 0.0, 1.0],
            ),
            Preset::Model5 => duration(vec![0.4, 0.6], vec![5.0, 2.5], vec![0.15, 0.1]),
            Preset::Model6 => duration(
                vec![0.3, 0.4, 0.3],
                vec![7.5, 5.0, 2.5],
                vec![0.1, 0.25, 0.3],
            ),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}

fn draw_labels<R: Rng>(n: usize, pi: &[f64], rng: &mut R) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (k, &p) in pi.iter().enumerate() {
                acc += p;
                if u < acc {
                    return k;
                }
            }
            pi.len() - 1
        })
        .collect()
}

/// Draws community labels, an initial network and `T` transitions from the
/// mixture model.
pub fn simulate_mixture(config: &MixtureSimConfig) -> Result<(NetworkSeries, Vec<usize>)> {
    config.validate()?;
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let z = draw_labels(n, &config.pi, &mut rng);

    let mut state: Vec<bool> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let p = sigmoid(config.theta_d[z[i]] + config.theta_d[z[j]]);
            state.push(rng.random_bool(p));
        }
    }
    let mut snapshots = vec![snapshot_from_state(n, &state)];
    // Transition probabilities depend only on (z_i, z_j, y_prev).
    let k = config.pi.len();
    let prob: Vec<[f64; 2]> = (0..k * k)
        .map(|kl| {
            let (a, b) = (&config.theta[kl / k], &config.theta[kl % k]);
            [
                edge_probability(config.model, a, b, false),
                edge_probability(config.model, a, b, true),
            ]
        })
        .collect();
    for _ in 1..=config.horizon {
        let mut d = 0;
        for i in 0..n {
            for j in i + 1..n {
                let p = prob[z[i] * k + z[j]][state[d] as usize];
                state[d] = rng.random_bool(p);
                d += 1;
            }
        }
        snapshots.push(snapshot_from_state(n, &state));
    }
    Ok((NetworkSeries::new(snapshots)?, z))
}

fn snapshot_from_state(n: usize, state: &[bool]) -> Snapshot {
    let edges = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .zip(state)
        .filter(|(_, &on)| on)
        .map(|(e, _)| e);
    Snapshot::from_edges(n, edges).expect("generated edges are valid")
}

/// Within-community two-state Markov chains plus planted cross edges.
pub fn simulate_duration_density(config: &DurationSimConfig) -> Result<(NetworkSeries, Vec<usize>)> {
    let probs = config.transition_probabilities()?;
    let n = config.n;
    if n < 2 || config.horizon < 1 {
        return Err(Error::Config("need n >= 2 and horizon >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let z = draw_labels(n, &config.pi, &mut rng);

    // Only within-community dyads carry dynamics.
    let within: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| z[i] == z[j])
        .collect();
    let mut state: Vec<bool> = within
        .iter()
        .map(|&(i, _)| rng.random_bool(config.avg_density[z[i]]))
        .collect();
    let collect = |state: &[bool]| {
        Snapshot::from_edges(
            n,
            within.iter().zip(state).filter(|(_, &on)| on).map(|(&e, _)| e),
        )
        .expect("generated edges are valid")
    };
    let mut snapshots = vec![collect(&state)];
    for _ in 1..=config.horizon {
        for (s, &(i, _)) in state.iter_mut().zip(&within) {
            let (persist, form) = probs[z[i]];
            *s = rng.random_bool(if *s { persist } else { form });
        }
        snapshots.push(collect(&state));
    }
    let series = NetworkSeries::new(snapshots)?;
    let series = plant_cross_edges(&series, &z, config.cross_edges, config.seed ^ 0x5EED_C805_5ED6_E500)?;
    Ok((series, z))
}

/// Adds `m` distinct, uniformly chosen cross-community edges to every
/// snapshot, drawn independently per snapshot.
pub fn plant_cross_edges(
    series: &NetworkSeries,
    z: &[usize],
    m: usize,
    seed: u64,
) -> Result<NetworkSeries> {
    if z.len() != series.n() {
        return Err(Error::Shape(format!("{} labels for {} nodes", z.len(), series.n())));
    }
    if m == 0 {
        return Ok(series.clone());
    }
    let n = series.n();
    let cross: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| z[i] != z[j])
        .collect();
    if cross.len() < m {
        return Err(Error::InsufficientCrossDyads {
            requested: m,
            available: cross.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = series.clone();
    for snap in out.snapshots_mut() {
        for idx in index::sample(&mut rng, cross.len(), m) {
            let (i, j) = cross[idx];
            snap.insert(i, j);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::sigmoid;
    use approx::assert_relative_eq;

    fn mixture(preset: Preset, seed: u64) -> MixtureSimConfig {
        match preset.config(seed) {
            SimConfig::Mixture(c) => c,
            _ => unreachable!(),
        }
    }

    #[test]
    fn presets_have_expected_shapes() {
        for p in Preset::ALL {
            let c = p.config(1);
            assert_eq!(c.seed(), 1);
            let (s, z) = c.simulate().unwrap();
            assert_eq!((s.n(), s.horizon(), z.len()), (100, 10, 100));
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        let m3 = mixture(Preset::Model3, 0);
        assert_eq!(m3.theta, vec![vec![-1.5, -1.0], vec![1.5, 1.0]]);
        assert!("model9".parse::<Preset>().is_err());
    }

    #[test]
    fn mixture_is_reproducible() {
        let c = mixture(Preset::Model2, 17);
        assert_eq!(simulate_mixture(&c).unwrap(), simulate_mixture(&c).unwrap());
        let other = MixtureSimConfig { seed: 18, ..c.clone() };
        assert_ne!(simulate_mixture(&c).unwrap().0, simulate_mixture(&other).unwrap().0);
    }

    #[test]
    fn initial_density_matches_logistic() {
        // One community at θ^d = -0.5: initial edge probability logistic(-1).
        let c = MixtureSimConfig {
            n: 150,
            horizon: 1,
            model: ModelKind::TergmStability,
            pi: vec![1.0],
            theta: vec![vec![0.0]],
            theta_d: vec![-0.5],
            seed: 3,
        };
        let (s, _) = simulate_mixture(&c).unwrap();
        let frac = s.snapshot(0).edge_count() as f64 / s.dyad_count() as f64;
        assert!((frac - sigmoid(-1.0)).abs() < 0.02, "{frac}");
        assert_relative_eq!(sigmoid(-1.0), 0.2689, epsilon = 1e-4);
    }

    #[test]
    fn large_stability_freezes_the_series() {
        let mut c = mixture(Preset::Model1, 4);
        c.theta = vec![vec![15.0], vec![15.0]];
        let (s, _) = simulate_mixture(&c).unwrap();
        for t in 1..=s.horizon() {
            assert_eq!(s.snapshot(t), s.snapshot(0));
        }
    }

    #[test]
    fn stable_fraction_matches_logistic() {
        let c = MixtureSimConfig {
            n: 80,
            horizon: 10,
            model: ModelKind::TergmStability,
            pi: vec![0.5, 0.5],
            theta: vec![vec![-0.5], vec![0.5]],
            theta_d: vec![0.0, 0.0],
            seed: 8,
        };
        let (s, z) = simulate_mixture(&c).unwrap();
        let counts = crate::netseries::transition_tallies(&s, &z, 2).unwrap();
        for k in 0..2 {
            let cells = counts.get(k, k);
            let total: u64 = cells.iter().sum();
            let stable = (cells[0] + cells[3]) as f64 / total as f64;
            let p = sigmoid(2.0 * c.theta[k][0]);
            let se = (p * (1.0 - p) / total as f64).sqrt();
            assert!((stable - p).abs() < 3.0 * se, "community {k}: {stable} vs {p}");
        }
    }

    #[test]
    fn community_sizes_follow_multinomial() {
        // Pearson chi-square over 200 draws of n = 100 with pi = (0.3, 0.4, 0.3).
        let pi = [0.3, 0.4, 0.3];
        let mut observed = [0.0; 3];
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for z in draw_labels(100, &pi, &mut rng) {
                observed[z] += 1.0;
            }
        }
        let total = 200.0 * 100.0;
        let chi2: f64 = (0..3)
            .map(|k| (observed[k] - total * pi[k]).powi(2) / (total * pi[k]))
            .sum();
        // 0.999 quantile of chi-square with 2 degrees of freedom.
        assert!(chi2 < 13.816, "chi2 = {chi2}");
    }

    #[test]
    fn duration_probabilities() {
        let c = match Preset::Model5.config(0) {
            SimConfig::DurationDensity(c) => c,
            _ => unreachable!(),
        };
        let probs = c.transition_probabilities().unwrap();
        assert_relative_eq!(probs[0].0, 0.8, epsilon = 1e-12);
        assert_relative_eq!(probs[0].1, 0.15 * 0.2 / 0.85, epsilon = 1e-12);
        assert_relative_eq!(probs[0].1, 0.03529, epsilon = 1e-5);

        let bad = DurationSimConfig { mean_duration: vec![1.05, 2.5], avg_density: vec![0.9, 0.1], ..c.clone() };
        assert!(matches!(bad.transition_probabilities(), Err(Error::Infeasible { community: 0, .. })));
        let bad = DurationSimConfig { mean_duration: vec![0.5, 2.5], ..c };
        assert!(bad.transition_probabilities().is_err());
    }

    #[test]
    fn duration_generator_reaches_stationary_density() {
        let c = DurationSimConfig {
            n: 60,
            horizon: 200,
            pi: vec![1.0],
            mean_duration: vec![4.0],
            avg_density: vec![0.2],
            cross_edges: 0,
            seed: 5,
        };
        let (s, _) = simulate_duration_density(&c).unwrap();
        let dyads = s.dyad_count() as f64;
        let mean = (101..=200).map(|t| s.snapshot(t).edge_count() as f64).sum::<f64>() / (100.0 * dyads);
        // Successive snapshots are correlated; 100 snapshots of 1770 dyads
        // still pin the mean to well within 0.01.
        assert!((mean - 0.2).abs() < 0.01, "{mean}");
    }

    #[test]
    fn duration_generator_freezes_with_long_durations() {
        let c = DurationSimConfig {
            n: 30,
            horizon: 5,
            pi: vec![0.5, 0.5],
            mean_duration: vec![1e12, 1e12],
            avg_density: vec![0.3, 0.3],
            cross_edges: 0,
            seed: 2,
        };
        let (s, _) = simulate_duration_density(&c).unwrap();
        for t in 1..=5 {
            assert_eq!(s.snapshot(t), s.snapshot(0));
        }
    }

    #[test]
    fn cross_edges_are_planted_per_snapshot() {
        let base = NetworkSeries::from_timed_edges(6, 3, std::iter::empty()).unwrap();
        let z = [0, 0, 0, 1, 1, 1];
        assert_eq!(plant_cross_edges(&base, &z, 0, 1).unwrap(), base);
        let planted = plant_cross_edges(&base, &z, 4, 1).unwrap();
        for snap in planted.snapshots() {
            assert_eq!(snap.edge_count(), 4);
            assert!(snap.edges().iter().all(|&(i, j)| z[i] != z[j]));
        }
        assert!(matches!(
            plant_cross_edges(&base, &z, 10, 1),
            Err(Error::InsufficientCrossDyads { requested: 10, available: 9 })
        ));
        assert!(plant_cross_edges(&base, &[0; 6], 1, 1).is_err());
    }

    #[test]
    fn duration_series_has_ten_cross_edges() {
        let (s, z) = Preset::Model6.config(3).simulate().unwrap();
        for snap in s.snapshots() {
            let cross = snap.edges().iter().filter(|&&(i, j)| z[i] != z[j]).count();
            assert_eq!(cross, 10);
        }
    }
}
