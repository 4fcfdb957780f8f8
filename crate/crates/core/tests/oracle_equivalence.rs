//! Closed-form optimal weights against numeric minimizers.

use ope_core::analysis::mse_at_fixed_path;
use ope_core::multi::{AlphaWeights, PolicyFamily};
use ope_core::oracle::{
    optimal_unbiased_alphas, optimal_weights_single_policy, per_action_objective, MomentSource, OracleInputs,
};
use ope_core::single::{omega_bis, omega_ea};
use ope_core::{PathCounts, Policy, RewardModel};
use ope_testkit::{alpha_objective, fd_gradient, fixed_path_mse, minimize_quadratic, minimize_quadratic_on_simplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Instance {
    counts: Vec<usize>,
    means: Vec<f64>,
    vars: Vec<f64>,
    p_test: Vec<f64>,
}

fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> Instance {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    Instance {
        counts: (0..k).map(|_| rng.random_range(1..12)).collect(),
        means: (0..k)
            .map(|_| rng.random_range(0.2..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect(),
        vars: (0..k).map(|_| rng.random_range(0.1..2.0)).collect(),
        p_test: raw.iter().map(|x| x / s).collect(),
    }
}

fn oracle_inputs(inst: &Instance) -> OracleInputs {
    OracleInputs::build(
        inst.counts.clone(),
        inst.means.clone(),
        inst.vars.clone(),
        inst.p_test.clone(),
        MomentSource::Oracle,
    )
    .unwrap()
}

#[test]
fn closed_form_matches_numeric_minimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 3);
        let w = optimal_weights_single_policy(&oracle_inputs(&inst)).unwrap();
        let f = |om: &[f64]| fixed_path_mse(om, &inst.counts, &inst.p_test, &inst.means, &inst.vars);
        let numeric = minimize_quadratic(f, 3, 1.0).unwrap();
        for a in 0..3 {
            assert!(
                (w.get(a) - numeric[a]).abs() <= 1e-6,
                "{:?} vs {numeric:?}",
                w.as_slice()
            );
        }
        let g = fd_gradient(f, w.as_slice(), 1e-5);
        assert!(g.iter().all(|x| x.abs() <= 1e-8), "gradient {g:?}");
    }
}

#[test]
fn optimal_weights_beat_bis_and_ea_at_fixed_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let k = rng.random_range(1..6);
        let inst = random_instance(&mut rng, k);
        let w = optimal_weights_single_policy(&oracle_inputs(&inst)).unwrap();
        let counts = PathCounts::from_counts(inst.counts.clone()).unwrap();
        let p_test = Policy::new(inst.p_test.clone()).unwrap();
        let rm = RewardModel::two_point(&inst.means, &inst.vars).unwrap();
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let p = Policy::renormalized(&raw).unwrap();
        let best = mse_at_fixed_path(&w, &counts, &p_test, &rm).unwrap().mse;
        for other in [omega_bis(&counts, &p).unwrap(), omega_ea(k).unwrap()] {
            let m = mse_at_fixed_path(&other, &counts, &p_test, &rm).unwrap().mse;
            assert!(best <= m + 1e-10, "{best} > {m}");
        }
    }
}

fn random_family(rng: &mut ChaCha8Rng, k: usize, m: usize) -> PolicyFamily {
    let pols = (0..m)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.02..1.0)).collect();
            Policy::renormalized(&raw).unwrap()
        })
        .collect();
    PolicyFamily::new(pols, (0..m).collect()).unwrap()
}

#[test]
fn unbiased_alphas_match_constrained_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let m = rng.random_range(1..9);
        let fam = random_family(&mut rng, 3, m);
        let tau = rng.random_range(0..3);
        let r_bar = rng.random_range(-2.0..2.0);
        let v = if rng.random::<f64>() < 0.2 {
            0.0
        } else {
            rng.random_range(0.0..2.0)
        };
        let p_t = rng.random_range(0.1..1.0);
        let probs = fam.record_probs(tau);
        let alpha = optimal_unbiased_alphas(tau, &fam, r_bar, v).unwrap();
        let numeric = minimize_quadratic_on_simplex(|a| alpha_objective(a, &probs, p_t, r_bar, v), m, 1.0).unwrap();
        assert!(numeric.iter().all(|&x| x >= -1e-12));
        for i in 0..m {
            assert!((alpha[i] - numeric[i]).abs() <= 1e-8, "{alpha:?} vs {numeric:?}");
        }
    }
}

#[test]
fn optimal_alphas_never_lose_to_fused_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let k = rng.random_range(1..6);
        let m = rng.random_range(1..11);
        let fam = random_family(&mut rng, k, m);
        let means: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let vars: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..2.0)).collect();
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        let p_test = Policy::renormalized(&raw).unwrap();
        let opt = AlphaWeights::ouis(&fam, &means, &vars).unwrap();
        let fis = AlphaWeights::fis(&fam);
        for a in 0..k {
            let probs = fam.record_probs(a);
            let f = |al: &[f64]| per_action_objective(al, &probs, p_test.prob(a), means[a], vars[a]);
            assert!(f(opt.action(a)) <= f(fis.action(a)) + 1e-10);
        }
    }
}
