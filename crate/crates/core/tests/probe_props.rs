mod common;

use common::*;
use lowrank::linalg::{eig_sym, principal_angle_sin, singular_values, SymmetricMatrix};
use lowrank::probe::{check_lemmas, construct_w, proof_artifacts, CheckStatus};
use lowrank::synth::{haar_orthogonal, psd_from_spectrum, scaled_perturbation, RngStream};
use proptest::prelude::*;

fn instance(n: usize, k: usize, rng: &mut RngStream) -> SymmetricMatrix {
    let spectrum = clustered_spectrum(n, k, rng);
    psd_from_spectrum(&spectrum, &haar_orthogonal(n, rng).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn closed_form_w_beats_random_search(n in 4usize..=8, k_frac in 0.0f64..1.0, scale in 0.01f64..0.5, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let k = (1 + ((n - 2) as f64 * k_frac) as usize).min(n - 1);
        let a = instance(n, k, &mut rng);
        let a_hat = a.add(&scaled_perturbation(n, scale, &mut rng).unwrap());
        prop_assert!(w_oracle_excess(&a, &a_hat, k, 0.25, 400, &mut rng) <= 1e-8);
    }

    #[test]
    fn artifacts_invariants(n in 4usize..=20, k_frac in 0.0f64..1.0, eps_idx in 0usize..3, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 1);
        let k = (1 + ((n - 2) as f64 * k_frac) as usize).min(n - 1);
        let eps = [0.05, 0.1, 0.25][eps_idx];
        let a = instance(n, k, &mut rng);
        let d = eig_sym(&a).unwrap();
        let allowed = eps * eps * d.sigma(k + 1);
        let a_hat = a.add(&scaled_perturbation(n, allowed, &mut rng).unwrap());
        let d_hat = eig_sym(&a_hat).unwrap();
        let art = proof_artifacts(&d, &d_hat, k, eps).unwrap();
        let env = art.envelope;
        if art.w.cols() > 0 {
            prop_assert!(art.w.orthonormality_defect() <= 1e-8);
            let band = d.basis_range(env.m1, env.m2);
            prop_assert!(principal_angle_sin(&art.w, &band).unwrap() <= 1e-8);
        }
        let vals = eig_sym(&art.a_tilde).unwrap();
        prop_assert!(vals.sigma(k + 1).abs() <= 1e-8 * d.sigma(1));
        prop_assert!(art.u_tilde.cols() <= k);
        if art.u_tilde.cols() > 0 {
            prop_assert!(principal_angle_sin(&art.u_tilde, &d.top(env.m2)).unwrap() <= 1e-8);
        }
        if env.m1 > 0 {
            prop_assert!(principal_angle_sin(&d.top(env.m1), &art.u_tilde).unwrap() <= 1e-8);
        }
        let report = check_lemmas(&a, &a_hat, k, eps).unwrap();
        prop_assert!(report.precondition_holds);
        for c in &report.checks {
            prop_assert_eq!(c.status, CheckStatus::Pass, "{} lhs {} bound {}", &c.name, c.lhs, c.bound);
        }
    }
}

#[test]
fn alignment_exceeds_sqrt_one_minus_eps_squared() {
    let eps = 0.1;
    for seed in 0..20 {
        let mut rng = RngStream::new(seed, 2);
        let (n, k) = (12, 4);
        let a = instance(n, k, &mut rng);
        let d = eig_sym(&a).unwrap();
        let a_hat = a.add(&scaled_perturbation(n, eps * eps * d.sigma(k + 1), &mut rng).unwrap());
        let d_hat = eig_sym(&a_hat).unwrap();
        let aligned = construct_w(&d, &d_hat, k, eps).unwrap();
        let r = k - aligned.envelope.m1;
        if r == 0 {
            continue;
        }
        let sv = singular_values(&aligned.w.t_matmul(&d_hat.top(k))).unwrap();
        assert!((sv[r - 1] - aligned.alignment).abs() < 1e-12);
        assert!(aligned.alignment >= (1.0 - eps * eps).sqrt() - 1e-8, "seed {seed}: {}", aligned.alignment);
    }
}

#[test]
fn diagonal_example_passes_every_check() {
    let a = SymmetricMatrix::from_diag(&[4.0, 2.0, 1.0, 0.5]);
    let eps = 0.25;
    let mut rng = RngStream::new(3, 0);
    let e = scaled_perturbation(4, eps * eps * 1.0, &mut rng).unwrap();
    let report = check_lemmas(&a, &a.add(&e), 2, eps).unwrap();
    assert!(report.precondition_holds);
    assert_eq!(report.checks.len(), 9);
    assert!(report.all_pass(), "{:?}", report.failures().collect::<Vec<_>>());
}

#[test]
fn oversized_perturbation_marks_checks_not_applicable() {
    let a = SymmetricMatrix::from_diag(&[4.0, 2.0, 1.0, 0.5]);
    let mut rng = RngStream::new(4, 0);
    let e = scaled_perturbation(4, 0.5, &mut rng).unwrap();
    let report = check_lemmas(&a, &a.add(&e), 2, 0.1).unwrap();
    assert!(!report.precondition_holds);
    assert!(report.precondition_margin < 0.0);
    assert!(!report.all_pass());
    assert_eq!(report.failures().count(), 0);
}
