use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tergmix::models::{flatten_theta, unflatten_theta};
use tergmix::selection::{
    cl_bic, clbic_complexity, conditional_loglik, conditional_mle, evaluate_labels, icl,
};
use tergmix::{ModelKind, ModelSpec, NetworkSeries, Preset};

fn random_series(rng: &mut ChaCha8Rng, n: usize, horizon: usize) -> NetworkSeries {
    let mut edges = vec![];
    for t in 0..=horizon {
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.4) {
                    edges.push((t, i, j));
                }
            }
        }
    }
    NetworkSeries::from_timed_edges(n, horizon, edges).unwrap()
}

fn two_step(series: &NetworkSeries, t: usize) -> NetworkSeries {
    NetworkSeries::new(vec![series.snapshot(t - 1).clone(), series.snapshot(t).clone()]).unwrap()
}

/// `tr(H⁻¹ V)` with `H` and the per-step scores taken by central differences
/// of the conditional log-likelihood.
fn finite_difference_complexity(series: &NetworkSeries, spec: &ModelSpec, theta: &[Vec<f64>], z: &[usize]) -> f64 {
    let x0 = flatten_theta(theta);
    let dim = x0.len();
    let cl = |s: &NetworkSeries, x: &DVector<f64>| conditional_loglik(s, spec, &unflatten_theta(x, spec.k), z).unwrap();
    let shifted = |pairs: &[(usize, f64)]| {
        let mut x = x0.clone();
        for &(c, d) in pairs {
            x[c] += d;
        }
        x
    };
    let h = 1e-4;
    let mut hess = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let f = |da: f64, db: f64| cl(series, &shifted(&[(a, da), (b, db)]));
            hess[(a, b)] = -(f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        }
    }
    let mut v = DMatrix::zeros(dim, dim);
    for t in 1..=series.horizon() {
        let step = two_step(series, t);
        let g = DVector::from_fn(dim, |c, _| {
            (cl(&step, &shifted(&[(c, 1e-6)])) - cl(&step, &shifted(&[(c, -1e-6)]))) / 2e-6
        });
        v += &g * g.transpose();
    }
    (hess.try_inverse().unwrap() * v).trace()
}

#[test]
fn complexity_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for inst in 0..12 {
        let kind = if inst % 2 == 0 { ModelKind::TergmStability } else { ModelKind::StergmFp };
        let series = random_series(&mut rng, 10, 4);
        let spec = ModelSpec::new(kind, 2).unwrap();
        let z: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let mle = conditional_mle(&series, &spec, &z).unwrap();
        assert!(!mle.diverged && !mle.unidentified);
        let c = clbic_complexity(&series, &spec, &mle.theta, &z).unwrap();
        assert!(!c.singular);
        let fd = finite_difference_complexity(&series, &spec, &mle.theta, &z);
        assert!((c.d - fd).abs() <= 1e-3 * fd.abs(), "{} vs {fd}", c.d);
    }
}

#[test]
fn mle_is_stationary_unless_flagged() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for inst in 0..20 {
        let kind = if inst % 2 == 0 { ModelKind::TergmStability } else { ModelKind::StergmFp };
        let series = random_series(&mut rng, 9, 3);
        let k = 1 + inst % 3;
        let spec = ModelSpec::new(kind, k).unwrap();
        let z: Vec<usize> = (0..9).map(|_| rng.random_range(0..k)).collect();
        let mle = conditional_mle(&series, &spec, &z).unwrap();
        if !mle.diverged {
            assert!(mle.grad_norm < 1e-8, "{}", mle.grad_norm);
        }
    }
}

#[test]
fn criteria_are_invariant_to_relabeling() {
    let (series, z) = Preset::Model3.config(4).simulate().unwrap();
    let spec = ModelSpec::new(ModelKind::StergmFp, 3).unwrap();
    let z3: Vec<usize> = z.iter().enumerate().map(|(i, &c)| if c == 1 && i % 3 == 0 { 2 } else { c }).collect();
    let perm = [2, 0, 1];
    let permuted: Vec<usize> = z3.iter().map(|&c| perm[c]).collect();
    let a = evaluate_labels(&series, &spec, &z3).unwrap();
    let b = evaluate_labels(&series, &spec, &permuted).unwrap();
    assert!((a.cl_bic - b.cl_bic).abs() <= 1e-9 * a.cl_bic.abs());
    assert!((a.icl - b.icl).abs() <= 1e-9 * a.icl.abs());
    let mut theta_b = vec![vec![]; 3];
    for c in 0..3 {
        theta_b[perm[c]] = a.theta_mle[c].clone();
    }
    let direct = cl_bic(&series, &spec, &permuted, &theta_b).unwrap();
    assert!((direct - a.cl_bic).abs() <= 1e-6 * a.cl_bic.abs());
    let direct = icl(&series, &spec, &permuted, &theta_b).unwrap();
    assert!((direct - a.icl).abs() <= 1e-9 * a.icl.abs());
}

#[test]
fn duplicated_community_is_penalized() {
    for seed in 0..3 {
        let (series, z) = Preset::Model1.config(seed).simulate().unwrap();
        let two = evaluate_labels(&series, &ModelSpec::new(ModelKind::TergmStability, 2).unwrap(), &z).unwrap();
        let split: Vec<usize> = z.iter().enumerate().map(|(i, &c)| if c == 1 && i % 2 == 0 { 2 } else { c }).collect();
        let three = evaluate_labels(&series, &ModelSpec::new(ModelKind::TergmStability, 3).unwrap(), &split).unwrap();
        assert!(three.cl >= two.cl - 1e-9);
        assert!(three.d_k > two.d_k);
        assert!(three.cl_bic > two.cl_bic);
    }
}
