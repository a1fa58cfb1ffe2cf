use proptest::prelude::*;
use tergmix::simulate::{simulate_mixture, MixtureSimConfig};
use tergmix::{instability_stats, rand_index, rse, ModelKind};

fn relabel(z: &[usize], perm: &[usize]) -> Vec<usize> {
    z.iter().map(|&c| perm[c]).collect()
}

proptest! {
    #[test]
    fn rand_index_is_symmetric_and_label_free(
        a in prop::collection::vec(0usize..3, 2..30),
        seed in any::<u64>(),
    ) {
        let b: Vec<usize> = a.iter().enumerate().map(|(i, &c)| ((seed >> (i % 60)) as usize + c) % 3).collect();
        let ri = rand_index(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ri));
        prop_assert_eq!(ri, rand_index(&b, &a).unwrap());
        prop_assert_eq!(ri, rand_index(&relabel(&a, &[2, 0, 1]), &relabel(&b, &[1, 2, 0])).unwrap());
        prop_assert_eq!(rand_index(&a, &relabel(&a, &[1, 2, 0])).unwrap(), 1.0);
    }

    #[test]
    fn rse_ignores_estimated_labeling(
        raw in prop::collection::vec(0.1f64..1.0, 3),
        theta in prop::collection::vec(-2.0f64..2.0, 6),
        truth_theta in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let s: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|r| r / s).collect();
        let pi_true = vec![0.2, 0.3, 0.5];
        let th: Vec<Vec<f64>> = theta.chunks(2).map(<[f64]>::to_vec).collect();
        let tt: Vec<Vec<f64>> = truth_theta.chunks(2).map(<[f64]>::to_vec).collect();
        let base = rse(&pi, &pi_true, &th, &tt).unwrap();
        let perm = [1, 2, 0];
        let pi_p: Vec<f64> = (0..3).map(|c| pi[perm[c]]).collect();
        let th_p: Vec<Vec<f64>> = (0..3).map(|c| th[perm[c]].clone()).collect();
        let other = rse(&pi_p, &pi_true, &th_p, &tt).unwrap();
        prop_assert!((base.rse_pi - other.rse_pi).abs() < 1e-12);
        for (x, y) in base.rse_theta.iter().zip(&other.rse_theta) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn more_stable_communities_change_less() {
    for seed in 0..20 {
        let config = MixtureSimConfig {
            n: 90,
            horizon: 10,
            model: ModelKind::TergmStability,
            pi: vec![1.0 / 3.0; 3],
            theta: vec![vec![-0.5], vec![0.5], vec![1.5]],
            theta_d: vec![0.0; 3],
            seed,
        };
        let (series, z) = simulate_mixture(&config).unwrap();
        let report = instability_stats(&series, &z, 3).unwrap();
        let tot: Vec<f64> = (0..3).map(|k| report.pair(k, k).total.mean.unwrap()).collect();
        assert!(tot[0] > tot[1] && tot[1] > tot[2], "seed {seed}: {tot:?}");
    }
}
