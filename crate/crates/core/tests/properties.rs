use proptest::prelude::*;

use saddle_ipm::constants::{appendix_checks, derived_constants, inf_sup_beta, AssumptionClass};
use saddle_ipm::hodge::{
    betti, harmonic_dim, hodge_decompose, orthogonality_report, projection_oracle, random_cochain,
    random_flag_complex,
};
use saddle_ipm::ipm::{ipm_reference, ipm_solve, ipm_solve_with_riesz, spd_error_oracle, IpmConfig, QGeometry, Termination};
use saddle_ipm::lab::{gen_class, gen_example31, gen_synthetic, sweep_beta, sweep_config, AKind, SweepSetup, SyntheticSpec};
use saddle_ipm::linalg::{factor_spd, norm2, sub, sym_generalized_eig, DenseMatrix};
use saddle_ipm::penalty::{penalty_solve, PenaltyPath};
use saddle_ipm::problem::{kkt_solve, parse_problem, problem_to_string, riesz_preimage, to_div_gram, ProblemFile};
use saddle_ipm::Error;

fn class_strategy() -> impl Strategy<Value = AssumptionClass> {
    prop_oneof![
        Just(AssumptionClass::A3),
        Just(AssumptionClass::A1),
        Just(AssumptionClass::A2),
        Just(AssumptionClass::None),
    ]
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let s = norm2(a).max(norm2(b));
    if s == 0.0 {
        0.0
    } else {
        norm2(&sub(a, b)) / s
    }
}

fn spd(n: usize, entries: &[f64]) -> DenseMatrix {
    let b = DenseMatrix::from_row_major(n, n, entries[..n * n].to_vec()).unwrap();
    b.transpose().matmul(&b).add(&DenseMatrix::identity(n).scale(0.1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cholesky_reconstructs(n in 1usize..12, entries in prop::collection::vec(-1.0f64..1.0, 144)) {
        let m = spd(n, &entries);
        let f = factor_spd(&m).unwrap();
        let l = f.lower();
        for i in 0..n {
            prop_assert!(l[(i, i)] > 0.0);
        }
        let back = l.matmul(&l.transpose());
        prop_assert!(back.sub(&m).frobenius_norm() <= 1e-10 * m.frobenius_norm());
    }

    #[test]
    fn generalized_eigenpairs(n in 1usize..10, a in prop::collection::vec(-1.0f64..1.0, 100),
                              b in prop::collection::vec(-1.0f64..1.0, 100)) {
        let am = DenseMatrix::from_row_major(n, n, a[..n * n].to_vec()).unwrap().sym_part();
        let bm = spd(n, &b);
        let s = sym_generalized_eig(&am, &bm).unwrap();
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let x = &s.eigenvectors;
        let gram = x.transpose().matmul(&bm).matmul(x);
        prop_assert!(gram.sub(&DenseMatrix::identity(n)).max_abs() <= 1e-9);
        let scale = am.frobenius_norm();
        for j in 0..n {
            let v = s.vector(j);
            let lam = s.eigenvalues[j];
            let r = sub(&am.matvec(&v), &bm.matvec(&v).iter().map(|x| lam * x).collect::<Vec<_>>());
            prop_assert!(norm2(&r) <= 1e-8 * (scale + lam.abs() * bm.frobenius_norm()));
        }
    }

    #[test]
    fn kkt_residuals_small(class in class_strategy(), seed in 0u64..10_000) {
        let s = gen_class(class, 20, seed).unwrap();
        let sol = kkt_solve(&s.problem, 0.0).unwrap();
        let (r1, r2) = s.problem.kkt_residuals(&sol.u, sol.p().unwrap(), 0.0);
        prop_assert!(r1 <= 1e-9 && r2 <= 1e-9, "residuals {r1} {r2}");
    }

    #[test]
    fn penalty_never_singular_for_semidefinite_classes(
        a1 in any::<bool>(), seed in 0u64..10_000, eps in 1e-6f64..10.0,
    ) {
        let class = if a1 { AssumptionClass::A1 } else { AssumptionClass::A2 };
        let s = gen_class(class, 20, seed).unwrap();
        prop_assert!(kkt_solve(&s.problem, eps).is_ok());
    }

    #[test]
    fn coupled_and_eliminated_agree(class in class_strategy(), seed in 0u64..10_000, k in 0usize..4) {
        let s = gen_class(class, 20, seed).unwrap();
        let c = derived_constants(&s.problem).unwrap();
        let eps = [1e-4f64, 1e-3, 1e-2, 1e-1][k].min(0.5 * c.eps0);
        prop_assert!(penalty_solve(&s.problem, eps, PenaltyPath::Both).is_ok());
    }

    #[test]
    fn singular_exactly_at_predicted_eps(a0 in 0.1f64..5.0, a1 in -5.0f64..-0.1, beta in 0.1f64..3.0) {
        let ex = gen_example31(a0, a1, beta).unwrap();
        let eps = ex.singular_eps.unwrap();
        let at = penalty_solve(&ex.problem, eps, PenaltyPath::Coupled);
        prop_assert!(matches!(at, Err(Error::SingularSystem { .. })), "eps {}: {:?}", eps, at.map(|_| ()));
        for f in [0.99, 1.01] {
            prop_assert!(penalty_solve(&ex.problem, eps * f, PenaltyPath::Coupled).is_ok());
        }
    }

    #[test]
    fn explicit_and_basis_free_iterates_agree(
        class in prop_oneof![Just(AssumptionClass::A3), Just(AssumptionClass::A2), Just(AssumptionClass::None)],
        seed in 0u64..10_000,
    ) {
        let s = gen_class(class, 20, seed).unwrap();
        let p = &s.problem;
        let c = derived_constants(p).unwrap();
        let rho = if class == AssumptionClass::None { 2.0 * c.rho0 } else { 5.0 };
        let cfg = IpmConfig::new(rho).with_tols(1e-13, 1e-10).with_max_iters(300);
        let explicit = ipm_reference(p, &cfg).unwrap();
        let free = ipm_solve_with_riesz(&to_div_gram(p).unwrap(), &cfg, &riesz_preimage(p).unwrap()).unwrap();
        prop_assert_eq!(explicit.records.len(), free.main.records.len());
        for (a, b) in explicit.records.iter().zip(&free.main.records) {
            let pb = match &b.pressure {
                saddle_ipm::problem::Pressure::Represented(r) => r.materialize(&p.dc),
                saddle_ipm::problem::Pressure::Coefficients(c) => c.clone(),
            };
            prop_assert!(rel(&a.u, &b.u) <= 1e-9);
            prop_assert!(rel(a.pressure_coefficients().unwrap(), &pb) <= 1e-9);
        }
    }

    #[test]
    fn full_algorithm_converges_to_reference(class in prop_oneof![Just(AssumptionClass::A3), Just(AssumptionClass::A1)],
                                            seed in 0u64..10_000) {
        let s = gen_class(class, 20, seed).unwrap();
        let p = &s.problem;
        // The default absolute tol2 = 1e-11 can sit at the roundoff floor of the
        // main stage for some load scales, so the tolerances here are looser.
        let cfg = IpmConfig::new(100.0).with_tols(1e-11, 1e-9);
        let sol = ipm_solve(&to_div_gram(p).unwrap(), &cfg).unwrap();
        prop_assert_eq!(sol.termination(), Termination::Converged);
        let exact = s.exact_solution().unwrap();
        let c = derived_constants(p).unwrap();
        // Residual chain: errors are at most the residual times Υ/β and M_aΥ/β².
        // The pressure D(w − nρy) cancels two terms of size nρ‖Dy‖, so
        // residual-level errors in w and y come back amplified by nρ.
        let sub_res = sol.subsolve.as_ref().map_or(0.0, |t| t.final_residual());
        let res = sol.main.final_residual() + sub_res + 1e-12;
        let eu = p.v_norm(&sub(&sol.u, &exact.u));
        let ep = p.q_norm(&sub(&sol.pressure.materialize(&p.dc), exact.p.as_ref().unwrap()));
        let n_rho = sol.iterations() as f64 * 100.0;
        prop_assert!(eu <= 2.0 * c.upsilon / c.beta * res, "velocity error {eu}");
        prop_assert!(ep <= 2.0 * ((c.m_a * c.upsilon / (c.beta * c.beta) + n_rho) * res), "pressure error {ep}");
    }

    #[test]
    fn contraction_within_predicted_rate(
        class in prop_oneof![Just(AssumptionClass::A1), Just(AssumptionClass::A2), Just(AssumptionClass::None)],
        seed in 0u64..10_000, scale in 0.5f64..20.0,
    ) {
        let s = gen_class(class, 16, seed).unwrap();
        let p = &s.problem;
        let c = derived_constants(p).unwrap();
        let rho = if class == AssumptionClass::None { scale.max(1.5) * c.rho0 } else { scale };
        let rate = c.predicted_rate(rho).unwrap();
        let px = s.exact_solution().unwrap().p.unwrap();
        let trace = ipm_reference(p, &IpmConfig::new(rho).with_tols(1e-300, 1e-300).with_max_iters(30)).unwrap();
        let e: Vec<f64> = trace.records.iter().map(|r| p.q_norm(&sub(&px, r.pressure_coefficients().unwrap()))).collect();
        let floor = 1e-9 * p.q_norm(&px);
        for k in 1..e.len() {
            if e[k - 1] > floor {
                prop_assert!(e[k] <= rate * (1.0 + 1e-6) * e[k - 1] + 1e-12 * p.q_norm(&px),
                    "step {}: {} > {} * {}", k + 1, e[k], rate, e[k - 1]);
            }
        }
    }

    #[test]
    fn two_parameter_contraction_within_rate(
        class in prop_oneof![Just(AssumptionClass::A3), Just(AssumptionClass::A1), Just(AssumptionClass::A2)],
        seed in 0u64..10_000, rho in 1.0f64..200.0, ratio in 0.6f64..1.6,
    ) {
        let s = gen_class(class, 12, seed).unwrap();
        let p = &s.problem;
        let lambda = ratio * rho;
        let c = derived_constants(p).unwrap();
        // Outside the region where the theory gives a rate nothing is asserted.
        let Some(rate) = c.two_param_rate(lambda, rho) else { return Ok(()) };
        let exact = s.exact_solution().unwrap();
        let px = exact.p.unwrap();
        let cfg = IpmConfig::new(rho).with_lambda(lambda).with_tols(1e-300, 1e-300).with_max_iters(30);
        let trace = ipm_reference(p, &cfg).unwrap();
        let ep: Vec<f64> = std::iter::once(p.q_norm(&px))
            .chain(trace.records.iter().map(|r| p.q_norm(&sub(&px, r.pressure_coefficients().unwrap()))))
            .collect();
        let eu: Vec<f64> = trace.records.iter().map(|r| p.v_norm(&sub(&exact.u, &r.u))).collect();
        for e in [&ep, &eu] {
            let floor = 1e-9 * e[0];
            for k in 1..e.len() {
                if e[k - 1] > floor {
                    prop_assert!(e[k] <= rate * (1.0 + 1e-6) * e[k - 1] + 1e-3 * floor);
                }
            }
        }
    }

    #[test]
    fn oracle_matches_measured_errors(seed in 0u64..10_000, rho in 0.5f64..50.0) {
        let s = gen_class(AssumptionClass::A3, 16, seed).unwrap();
        let p = &s.problem;
        let cfg = IpmConfig::new(rho).with_tols(1e-300, 1e-300).with_max_iters(25);
        let mut trace = ipm_reference(p, &cfg).unwrap();
        trace.annotate(&to_div_gram(p).unwrap(), &s.exact_solution().unwrap(), Some(QGeometry::of(p)));
        let pred = spd_error_oracle(p, &cfg, 25).unwrap();
        let floor = 1e2 * f64::EPSILON * pred.p_x_norm.max(pred.u_a[0]).max(pred.div_q[0]) * (1.0 + rho);
        for r in &trace.records {
            let i = r.iter - 1;
            for (m, q) in [(r.err_u_a.unwrap(), pred.u_a[i]), (r.err_p_q.unwrap(), pred.p_q[i]), (r.residual, pred.div_q[i])] {
                if q > floor {
                    prop_assert!((m - q).abs() <= 1e-8 * q + floor, "step {}: measured {m} predicted {q}", r.iter);
                }
            }
        }
    }

    #[test]
    fn residual_bounds_the_errors(class in class_strategy(), seed in 0u64..10_000) {
        let s = gen_class(class, 16, seed).unwrap();
        let p = &s.problem;
        let c = derived_constants(p).unwrap();
        let rho = if class == AssumptionClass::None { 2.0 * c.rho0 } else { 10.0 };
        let exact = s.exact_solution().unwrap();
        let px = exact.p.unwrap();
        let trace = ipm_reference(p, &IpmConfig::new(rho).with_tols(1e-300, 1e-300).with_max_iters(20)).unwrap();
        let floor = 1e-10 * (p.v_norm(&exact.u) + p.q_norm(&px));
        for r in &trace.records {
            let eu = p.v_norm(&sub(&exact.u, &r.u));
            let ep = p.q_norm(&sub(&px, r.pressure_coefficients().unwrap()));
            prop_assert!(eu <= c.upsilon / c.beta * r.residual * (1.0 + 1e-8) + floor);
            prop_assert!(ep <= c.m_a * c.upsilon / (c.beta * c.beta) * r.residual * (1.0 + 1e-8) + floor);
        }
    }

    #[test]
    fn rank_deficient_converges_in_two_steps(seed in 0u64..10_000, rho in 0.1f64..1e3) {
        let s = gen_class(AssumptionClass::A1, 20, seed).unwrap();
        let trace = ipm_reference(&s.problem, &IpmConfig::new(rho).with_tols(1e-300, 1e-300).with_max_iters(2)).unwrap();
        let exact = s.exact_solution().unwrap();
        prop_assert!(rel(&trace.records[1].u, &exact.u) <= 1e-9);
    }

    #[test]
    fn appendix_inequalities_hold(class in class_strategy(), seed in 0u64..10_000) {
        let s = gen_class(class, 14, seed).unwrap();
        let rep = appendix_checks(&s.problem, 6, seed).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep.violations);
    }

    #[test]
    fn generated_inf_sup_matches_request(n in 4usize..20, s1 in -6.0f64..0.0, spread in prop::collection::vec(0.0f64..1.0, 1..4),
                                         lo in 0.5f64..2.0, seed in 0u64..10_000) {
        prop_assume!(spread.len() < n);
        let s1 = 10f64.powf(s1);
        let mut sigmas = vec![s1];
        sigmas.extend(spread.iter().map(|x| s1 + 0.1 + x));
        sigmas.sort_by(f64::total_cmp);
        let p = gen_synthetic(&SyntheticSpec::new(n, sigmas, AKind::Spd { lambda_min: lo, lambda_max: lo }, seed)).unwrap();
        let beta = inf_sup_beta(&p).unwrap();
        prop_assert!((beta - s1).abs() <= 1e-9 * s1, "beta {beta} requested {s1}");
    }

    #[test]
    fn generators_are_reproducible(class in class_strategy(), seed in 0u64..10_000) {
        let a = gen_class(class, 12, seed).unwrap().problem;
        let b = gen_class(class, 12, seed).unwrap().problem;
        prop_assert_eq!(problem_to_string(&a).unwrap(), problem_to_string(&b).unwrap());
    }

    #[test]
    fn problem_json_round_trips(class in class_strategy(), seed in 0u64..10_000) {
        let p = gen_class(class, 10, seed).unwrap().problem;
        match parse_problem(&problem_to_string(&p).unwrap()).unwrap() {
            ProblemFile::Explicit(q) => prop_assert_eq!(q, p),
            ProblemFile::DivGram(_) => prop_assert!(false, "explicit problem came back basis-free"),
        }
    }

    #[test]
    fn harmonic_dimension_is_betti(n in 3usize..9, prob in 0.2f64..0.9, seed in 0u64..10_000) {
        let c = random_flag_complex(n, prob, seed);
        let b = betti(&c);
        for k in 0..=c.top() {
            prop_assert_eq!(harmonic_dim(&c, k), b[k]);
        }
    }

    #[test]
    fn hodge_split_matches_projections(n in 3usize..8, prob in 0.3f64..0.9, seed in 0u64..10_000) {
        let c = random_flag_complex(n, prob, seed);
        prop_assume!(c.top() >= 1 && c.count(1) > 0);
        let u = random_cochain(c.count(1), seed);
        let split = hodge_decompose(&c, 1, &u, &IpmConfig::new(1e3)).unwrap();
        let un = norm2(&u);
        let sum: Vec<f64> = (0..u.len()).map(|i| split.exact[i] + split.harmonic[i] + split.coexact[i]).collect();
        prop_assert!(norm2(&sub(&sum, &u)) <= 1e-9 * un);
        prop_assert!(orthogonality_report(&split, c.weight(1)).max_abs() <= 1e-10 * un * un.max(1.0));
        let o = projection_oracle(&c, 1, &u).unwrap();
        for (a, b) in [(&split.exact, &o.exact), (&split.harmonic, &o.harmonic), (&split.coexact, &o.coexact)] {
            prop_assert!(norm2(&sub(a, b)) <= 1e-9 * un.max(1e-300));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sweep_stops_where_oracle_predicts(seed in 0u64..1000) {
        let setup = SweepSetup { seed, ..SweepSetup::default() };
        let rep = sweep_beta(&[1e-1, 3e-2, 1e-2], &setup, &sweep_config()).unwrap();
        for r in &rep.rows {
            match r.predicted_iterations {
                Some(n) => prop_assert!(r.iterations.abs_diff(n) <= 1, "delta {}: {} against {n}", r.delta, r.iterations),
                None => prop_assert_eq!(r.termination, Termination::MaxIters),
            }
        }
    }
}
