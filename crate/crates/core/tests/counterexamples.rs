use ginvkit::certificate::{certify_optimality, certify_optimality_with, CertificateOptions};
use ginvkit::constructions::{self, construct, Construction, DEFAULT_THETA};
use ginvkit::linalg::{self, Matrix};
use ginvkit::norms::{self, NormSpec};
use ginvkit::solvers::{self, SolverConfig, Target};

fn certify_mpp(a: &Matrix, spec: NormSpec, target: Target) -> bool {
    let x = linalg::mpp(a).unwrap();
    certify_optimality(a, &x, &spec, target).unwrap().passed
}

#[test]
fn a1_mpp_is_l1_optimal_only_for_p2() {
    let a = construct(&Construction::A1 { m: 3, n: 5 }).unwrap();
    for p in [1.0, 1.5, 3.0] {
        assert!(!certify_mpp(&a, NormSpec::Entrywise { p }, Target::Ginv), "p = {p}");
    }
    assert!(certify_mpp(&a, NormSpec::Entrywise { p: 2.0 }, Target::Ginv));
}

#[test]
fn a1_solver_beats_mpp() {
    let a = construct(&Construction::A1 { m: 3, n: 5 }).unwrap();
    let mpp = linalg::mpp(&a).unwrap();
    let cfg = SolverConfig { max_iter: 20_000, tol_primal: 1e-10, tol_change: 1e-12, ..SolverConfig::default() };
    for spec in [NormSpec::Entrywise { p: 1.0 }, NormSpec::Columnwise { p: 1.0, q: 2.0 }] {
        let r = solvers::admm_ginv(&a, &spec, &cfg).unwrap();
        assert!(r.objective < spec.evaluate(&mpp) - 1e-3, "{spec}");
    }
}

#[test]
fn a2_mpp_rowwise_optimal_only_for_p2() {
    let a = construct(&Construction::A2 { m: 3, n: 6 }).unwrap();
    for p in [1.0, 1.5, 3.0] {
        for q in [1.0, 2.0] {
            assert!(!certify_mpp(&a, NormSpec::Rowwise { p, q }, Target::Ginv), "p = {p}, q = {q}");
        }
    }
    assert!(certify_mpp(&a, NormSpec::Rowwise { p: 2.0, q: 2.0 }, Target::Ginv));
}

#[test]
fn a3_positive_mpp_is_row12_optimal() {
    for (m, n) in [(3, 4), (3, 6), (4, 7)] {
        let a = construct(&Construction::A3 { m, n }).unwrap();
        assert!(linalg::mpp(&a).unwrap().iter().all(|&v| v > 0.0));
        assert!(certify_mpp(&a, NormSpec::Rowwise { p: 1.0, q: 2.0 }, Target::Ginv), "{m}x{n}");
        assert!(!certify_mpp(&a, NormSpec::Rowwise { p: 2.0, q: 1.0 }, Target::Ginv), "{m}x{n}");
    }
}

#[test]
fn a4_pginv_columnwise_optimal_only_for_p2() {
    for (m, n) in [(2, 4), (3, 6)] {
        let a = construct(&Construction::A4 { m, n, theta: DEFAULT_THETA }).unwrap();
        for q in [1.0, 2.0] {
            for p in [1.0, 3.0] {
                assert!(!certify_mpp(&a, NormSpec::Columnwise { p, q }, Target::Pginv), "p={p} q={q}");
            }
            assert!(certify_mpp(&a, NormSpec::Columnwise { p: 2.0, q }, Target::Pginv), "q={q}");
        }
    }
}

#[test]
fn a5_pginv_rowwise_q2_optimal_only_for_p2() {
    for (m, n) in [(3, 4), (3, 6), (4, 7)] {
        let a = construct(&Construction::A5 { m, n }).unwrap();
        for p in [1.0, 3.0] {
            assert!(!certify_mpp(&a, NormSpec::Rowwise { p, q: 2.0 }, Target::Pginv), "{m}x{n} p={p}");
        }
        assert!(certify_mpp(&a, NormSpec::Rowwise { p: 2.0, q: 2.0 }, Target::Pginv), "{m}x{n}");
    }
}

#[test]
fn flat_mpp_certifies_for_every_entrywise_p() {
    let a = construct(&Construction::PartialHadamard { n: 8, rows: vec![0, 3, 5] }).unwrap();
    let mpp = linalg::mpp(&a).unwrap();
    assert!((&mpp - a.transpose() / 8.0).amax() < 1e-15);
    assert!(constructions::flatness_check(&mpp, 1e-12));
    for p in [1.0, 1.5, 2.0, 3.0] {
        assert!(certify_mpp(&a, NormSpec::Entrywise { p }, Target::Ginv), "p = {p}");
    }
}

#[test]
fn classical_norms_certify_mpp() {
    for seed in 0..5 {
        let a = constructions::gaussian(3, 7, seed);
        for spec in [
            NormSpec::Entrywise { p: 2.0 },
            NormSpec::Columnwise { p: 2.0, q: 1.0 },
            NormSpec::Columnwise { p: 2.0, q: 3.0 },
            NormSpec::Schatten { p: 1.0 },
            NormSpec::Schatten { p: 3.0 },
        ] {
            assert!(certify_mpp(&a, spec.clone(), Target::Ginv), "ginv {spec}");
        }
        for spec in [NormSpec::Columnwise { p: 2.0, q: 1.5 }, NormSpec::Rowwise { p: 2.0, q: 2.0 }, NormSpec::Schatten { p: 4.0 }] {
            assert!(certify_mpp(&a, spec.clone(), Target::Pginv), "pginv {spec}");
        }
    }
}

#[test]
fn solver_outputs_certify_with_a_looser_zero_threshold() {
    let a = construct(&Construction::DiracHadamard { m: 4 }).unwrap();
    let spec = NormSpec::Columnwise { p: 1.0, q: 1.0 };
    let cfg = SolverConfig { max_iter: 20_000, tol_primal: 1e-10, tol_change: 1e-12, ..SolverConfig::default() };
    let r = solvers::admm_ginv(&a, &spec, &cfg).unwrap();
    let opts = CertificateOptions { zero_tol: 1e-6, ..CertificateOptions::default() };
    let cert = certify_optimality_with(&a, &r.x, &spec, Target::Ginv, &opts).unwrap();
    assert!(cert.passed, "{cert:?}");
    assert!(!certify_mpp(&a, spec, Target::Ginv));
}

#[test]
fn eta_counterexample_has_many_col2inf_minimizers() {
    let eta = 0.5;
    let a = construct(&Construction::EtaCounterexample { eta }).unwrap();
    let mpp = linalg::mpp(&a).unwrap();
    let want = Matrix::from_row_slice(3, 2, &[eta, 0.0, 0.0, 1.0, 0.0, 0.0]);
    assert!((&mpp - &want).amax() < 1e-14);
    for alpha in [0.1, 0.5, (1.0f64 - eta * eta).sqrt()] {
        let mut x = want.clone();
        x[(2, 0)] = alpha;
        assert!(linalg::inverse_residual(&a, &x).unwrap() < 1e-14);
        assert!((norms::columnwise_mixed(&x, 2.0, f64::INFINITY) - 1.0).abs() < 1e-12);
    }
}
