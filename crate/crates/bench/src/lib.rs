//! Fixtures shared by the benchmarks.

use nalgebra::DMatrix;
use tergmix::netseries::DyadTransitionCounts;
use tergmix::{ModelKind, ModelSpec, NetworkSeries, Params, Preset, SimConfig};

pub struct Fixture {
    pub series: NetworkSeries,
    pub labels: Vec<usize>,
    pub data: DyadTransitionCounts,
    pub spec: ModelSpec,
    pub params: Params,
    pub gamma: DMatrix<f64>,
}

/// A Model 1 or Model 3 replicate with its true parameters and a uniform
/// variational matrix.
pub fn fixture(kind: ModelKind, seed: u64) -> Fixture {
    let preset = match kind {
        ModelKind::TergmStability => Preset::Model1,
        ModelKind::StergmFp => Preset::Model3,
    };
    let SimConfig::Mixture(config) = preset.config(seed) else {
        unreachable!("models 1 and 3 are mixture designs")
    };
    let (series, labels) = preset.config(seed).simulate().expect("preset simulates");
    let data = DyadTransitionCounts::new(&series);
    let spec = ModelSpec::new(kind, config.pi.len()).expect("valid spec");
    let gamma = DMatrix::from_element(series.n(), spec.k, 1.0 / spec.k as f64);
    Fixture {
        series,
        labels,
        data,
        spec,
        params: Params {
            pi: config.pi,
            theta: config.theta,
        },
        gamma,
    }
}
