mod common;

use common::*;
use sar_core::milp::{
    branch_and_bound, cross_evaluate, lp_solve, solve, BigM, BnbOptions, BnbStatus, LinearProgram, LpOutcome,
    MilpProblem, Sense, SolveOptions, SolveStatus,
};
use sar_core::Exec;

fn sequential() -> SolveOptions {
    SolveOptions {
        exec: Exec::Sequential,
        ..SolveOptions::default()
    }
}

#[test]
fn branch_and_bound_matches_enumeration() {
    let mut feasible = 0;
    for seed in 0..ORACLE_INSTANCES {
        let inst = random_instance(seed);
        let w = oracle_weights(seed);
        let s = solve(&inst, w, &sequential()).unwrap();
        match brute_force(&inst, w) {
            Some(best) => {
                feasible += 1;
                assert_eq!(s.status, SolveStatus::Optimal, "seed {seed}");
                assert!(close(s.objective, best), "seed {seed}: {} vs {best}", s.objective);
                s.plan(&inst).unwrap().verify(&inst).unwrap();
            }
            None => assert_eq!(s.status, SolveStatus::Infeasible, "seed {seed}"),
        }
    }
    assert!(feasible >= ORACLE_INSTANCES / 2, "only {feasible} feasible instances");
}

#[test]
fn unstrengthened_model_has_the_same_optima() {
    let plain = SolveOptions {
        strengthen: false,
        ..sequential()
    };
    for seed in 0..ORACLE_INSTANCES {
        let inst = random_instance(seed);
        let w = oracle_weights(seed);
        let a = solve(&inst, w, &plain).unwrap();
        let b = solve(&inst, w, &sequential()).unwrap();
        assert_eq!(a.status, b.status, "seed {seed}");
        if a.is_solved() {
            assert!(close(a.objective, b.objective), "seed {seed}");
        }
    }
}

#[test]
fn big_m_choice_does_not_change_optima() {
    for seed in 0..ORACLE_INSTANCES {
        let inst = random_instance(seed);
        let loose = inst.with_big_m(BigM::Hundred).unwrap();
        let w = oracle_weights(seed);
        let a = solve(&inst, w, &sequential()).unwrap();
        let b = solve(&loose, w, &sequential()).unwrap();
        assert_eq!(a.status, b.status, "seed {seed}");
        if a.is_solved() {
            assert!(close(a.objective, b.objective), "seed {seed}");
        }
    }
}

#[test]
fn self_cross_evaluation_reproduces_direct_f2() {
    for seed in 0..ORACLE_INSTANCES {
        let inst = random_instance(seed);
        let w = oracle_weights(seed);
        let direct = solve(&inst, w, &sequential()).unwrap();
        if !direct.is_solved() {
            continue;
        }
        let cross = cross_evaluate(&inst, &inst, w, &sequential()).unwrap();
        assert!(cross.feasible);
        assert!(close(cross.f2.unwrap(), direct.f2), "seed {seed}");
        assert_eq!(cross.locations, direct.x);

        let empty = cross_evaluate(&inst, &without_demand(&inst), w, &sequential()).unwrap();
        assert_eq!(empty.f2, Some(0.0));
    }
}

#[test]
fn parallel_and_sequential_solves_agree() {
    for seed in 0..40 {
        let inst = random_instance(seed);
        let w = oracle_weights(seed);
        let a = solve(&inst, w, &sequential()).unwrap();
        let b = solve(&inst, w, &SolveOptions::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
    }
}

#[test]
fn simplex_matches_vertex_enumeration() {
    for seed in 0..ORACLE_LPS {
        let lp = random_lp(seed);
        let oracle = vertex_enumeration(&lp);
        match lp_solve(&lp).unwrap() {
            LpOutcome::Optimal(s) => {
                let best = oracle.unwrap_or_else(|| panic!("seed {seed}: oracle found no vertex"));
                assert!((s.objective - best).abs() <= 1e-6, "seed {seed}: {} vs {best}", s.objective);
                assert!(lp.max_violation(&s.x) <= 1e-7, "seed {seed}");
            }
            other => panic!("seed {seed}: {other:?} but oracle {oracle:?}"),
        }
    }
}

#[test]
fn simplex_detects_infeasible_boxes() {
    // x + y >= 5 cannot hold inside [0, 2]^2.
    let mut lp = LinearProgram::new(2);
    lp.upper = vec![2.0, 2.0];
    lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 5.0);
    assert!(matches!(lp_solve(&lp).unwrap(), LpOutcome::Infeasible { .. }));
    assert!(vertex_enumeration(&lp).is_none());
}

#[test]
fn integer_programs_match_enumeration() {
    // Bounded random integer programs checked against every lattice point.
    for seed in 0..60 {
        let mut lp = random_lp(1000 + seed);
        for j in 0..lp.num_vars() {
            lp.lower[j] = lp.lower[j].ceil();
            lp.upper[j] = lp.upper[j].floor().clamp(lp.lower[j], lp.lower[j] + 3.0);
        }
        let n = lp.num_vars();
        let p = MilpProblem {
            lp: lp.clone(),
            integer: vec![true; n],
            priority: vec![0; n],
        };
        let mut best: Option<f64> = None;
        let mut x: Vec<f64> = lp.lower.clone();
        'outer: loop {
            if lp.max_violation(&x) <= 1e-9 {
                let obj = lp.objective_value(&x);
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
            for j in 0..n {
                x[j] += 1.0;
                if x[j] <= lp.upper[j] {
                    continue 'outer;
                }
                x[j] = lp.lower[j];
            }
            break;
        }
        let r = branch_and_bound(&p, None, &BnbOptions::default()).unwrap();
        match best {
            Some(b) => {
                assert_eq!(r.status, BnbStatus::Optimal, "seed {seed}");
                assert!((r.best.unwrap().1 - b).abs() <= 1e-6, "seed {seed}");
            }
            None => assert_eq!(r.status, BnbStatus::Infeasible, "seed {seed}"),
        }
    }
}
