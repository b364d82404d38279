use std::time::Duration;

use super::*;
use crate::grid::{Coord, CyclePath, GridGraph, Snake};
use crate::model::{objective_of, snake_edge_lits, External, Model};
use crate::oracle::brute_force_oracle;

fn c(x: u32, y: u32) -> Coord {
    Coord { x, y }
}

fn grid(n: u32, m: u32) -> GridGraph {
    GridGraph::new(n, m).unwrap()
}

fn solver_on(n: u32, m: u32) -> Solver {
    Solver::new(Model::new(grid(n, m)))
}

fn set_externals(s: &mut Solver, head: Coord, apple: Coord) {
    s.model_mut().set_external(External::Head(head), true).unwrap();
    s.model_mut().set_external(External::Apple(apple), true).unwrap();
}

fn cycle(g: &GridGraph, cells: &[(u32, u32)]) -> CyclePath {
    CyclePath::new(g, cells.iter().map(|&(x, y)| c(x, y)).collect()).unwrap()
}

#[test]
fn satisfaction_call_finds_a_hamiltonian_cycle() {
    let mut s = solver_on(4, 4);
    let out = s.solve(SolveOptions::default()).unwrap();
    assert_eq!(out.incumbent.len(), 16);
    assert!(crate::grid::validate_hc(s.model().grid(), out.incumbent.cells()));
    assert!(out.optimal_proven);
    assert_eq!(out.objective, None);
    assert!(!out.timed_out);
    assert!(!out.restricted_search);
    assert_eq!(out.stats.models, 1);
}

#[test]
fn optimal_objective_on_2x2_matches_enumeration() {
    // Only two directed cycles exist; the apple lands at index 2 or 4.
    let mut s = solver_on(2, 2);
    set_externals(&mut s, c(1, 1), c(2, 1));
    let out = s.solve(SolveOptions::default()).unwrap();
    assert_eq!(out.objective, Some(2));
    assert!(out.optimal_proven);
    assert_eq!(objective_of(&out.incumbent, c(1, 1), c(2, 1)).unwrap(), 2);
}

#[test]
fn warm_start_improves_from_5_to_optimal_3() {
    let g = grid(2, 3);
    let perimeter =
        cycle(&g, &[(1, 1), (1, 2), (1, 3), (2, 3), (2, 2), (2, 1)]);
    let mut s = solver_on(2, 3);
    s.model_mut().set_warm_start(perimeter.clone()).unwrap();
    set_externals(&mut s, c(1, 1), c(2, 2));

    let mut seen: Vec<(usize, bool)> = Vec::new();
    let opts = SolveOptions {
        on_model: Some(Box::new(|ev: &ModelEvent<'_>, _: &mut Injector<'_>| {
            seen.push((ev.objective.unwrap(), ev.dummy));
        })),
        ..Default::default()
    };
    let out = s.solve(opts).unwrap();

    assert_eq!(seen, vec![(5, true), (3, false)]);
    assert_eq!(out.objective, Some(3));
    assert!(out.optimal_proven);
    assert_eq!(out.stats.models, 2);
    // The warm cycle itself was the first incumbent.
    assert_eq!(objective_of(&perimeter, c(1, 1), c(2, 2)).unwrap(), 5);
}

#[test]
fn zero_deadline_with_warm_start_returns_the_stored_cycle() {
    let g = grid(6, 6);
    let hc = crate::grid::generic_hc(&g);
    let mut s = solver_on(6, 6);
    s.model_mut().set_warm_start(hc.clone()).unwrap();
    set_externals(&mut s, c(1, 1), c(4, 4));
    let out = s
        .solve(SolveOptions::with_deadline(Some(Duration::ZERO)))
        .unwrap();
    assert!(out.timed_out);
    assert!(!out.optimal_proven);
    assert_eq!(out.incumbent.cells(), hc.cells());
    assert_eq!(
        out.objective,
        Some(objective_of(&hc, c(1, 1), c(4, 4)).unwrap())
    );
}

#[test]
fn zero_deadline_without_warm_start_yields_no_model() {
    // Large enough that the first deadline check fires before any model.
    let mut s = solver_on(20, 20);
    set_externals(&mut s, c(1, 1), c(10, 10));
    let err = s
        .solve(SolveOptions::with_deadline(Some(Duration::ZERO)))
        .unwrap_err();
    assert!(matches!(err, SolveError::NoModelBeforeDeadline));
}

#[test]
fn warm_start_first_model_is_the_cycle_when_consistent() {
    let g = grid(6, 6);
    let hc = crate::grid::generic_hc(&g);
    let mut s = solver_on(6, 6);
    s.model_mut().set_warm_start(hc.clone()).unwrap();
    set_externals(&mut s, c(2, 2), c(5, 3));
    let mut first: Option<(Vec<Coord>, bool)> = None;
    let mut dummies = Vec::new();
    let opts = SolveOptions {
        on_model: Some(Box::new(|ev: &ModelEvent<'_>, _: &mut Injector<'_>| {
            if first.is_none() {
                first = Some((ev.cycle.cells().to_vec(), ev.dummy));
            }
            dummies.push(ev.dummy);
        })),
        ..Default::default()
    };
    s.solve(opts).unwrap();
    let (first_cells, first_dummy) = first.unwrap();
    // Cycles are reported anchored at the head; same cycle, same edges.
    assert_eq!(first_cells, hc.rotated_to(c(2, 2)).unwrap().cells());
    assert!(first_dummy);
    assert!(dummies[1..].iter().all(|&d| !d));
}

#[test]
fn inconsistent_warm_start_yields_a_valid_non_dummy_first_model() {
    let g = grid(2, 3);
    let perimeter =
        cycle(&g, &[(1, 1), (1, 2), (1, 3), (2, 3), (2, 2), (2, 1)]);
    let mut s = solver_on(2, 3);
    s.model_mut().set_warm_start(perimeter.clone()).unwrap();
    // Forbid the warm cycle's first edge outright.
    s.add_edge_fact(crate::model::EdgeLit::new(c(1, 1), c(1, 2)), false)
        .unwrap();
    set_externals(&mut s, c(1, 1), c(2, 2));
    let mut first_dummy = None;
    let opts = SolveOptions {
        on_model: Some(Box::new(|ev: &ModelEvent<'_>, _: &mut Injector<'_>| {
            first_dummy.get_or_insert(ev.dummy);
        })),
        ..Default::default()
    };
    let out = s.solve(opts).unwrap();
    assert_eq!(first_dummy, Some(false));
    assert!(out.incumbent.successor(c(1, 1)) != Some(c(1, 2)));
    assert!(out.optimal_proven);
}

#[test]
fn facts_are_permanent_and_contradictions_are_unsat() {
    let mut s = solver_on(2, 2);
    s.add_edge_fact(crate::model::EdgeLit::new(c(1, 1), c(2, 1)), true)
        .unwrap();
    let out = s.solve(SolveOptions::default()).unwrap();
    assert_eq!(out.incumbent.successor(c(1, 1)), Some(c(2, 1)));
    // A second out-edge of the same cell can never coexist.
    s.add_edge_fact(crate::model::EdgeLit::new(c(1, 1), c(1, 2)), true)
        .unwrap();
    assert!(matches!(
        s.solve(SolveOptions::default()),
        Err(SolveError::Unsat)
    ));
}

#[test]
fn snake_facts_match_the_oracle() {
    // 4×2, snake [(2,1),(1,1)], apple (2,2): unique optimum of 3.
    let g = grid(4, 2);
    let snake = Snake::new(&g, vec![c(2, 1), c(1, 1)]).unwrap();
    let want = brute_force_oracle(&g, &snake, c(2, 2)).unwrap();
    let mut s = solver_on(4, 2);
    for lit in snake_edge_lits(&snake) {
        s.add_edge_fact(lit, true).unwrap();
    }
    set_externals(&mut s, snake.head(), c(2, 2));
    let out = s.solve(SolveOptions::default()).unwrap();
    assert!(out.optimal_proven);
    assert_eq!(out.objective, Some(want.objective));
    assert_eq!(out.objective, Some(3));
}

#[test]
fn guarded_constraints_bite_only_under_their_assumption() {
    let mut s = solver_on(2, 3);
    let right = crate::model::EdgeLit::new(c(1, 1), c(2, 1));
    let up = crate::model::EdgeLit::new(c(1, 1), c(1, 2));
    let g_right = s.new_guard();
    let g_up = s.new_guard();
    s.add_guarded_constraints(g_right, &[right]).unwrap();
    s.add_guarded_constraints(g_up, &[up]).unwrap();

    let mut opts = SolveOptions::default();
    opts.assumptions = vec![Assumption::Guard(g_right)];
    let out = s.solve(opts).unwrap();
    assert_eq!(out.incumbent.successor(c(1, 1)), Some(c(2, 1)));

    let mut opts = SolveOptions::default();
    opts.assumptions = vec![Assumption::Guard(g_up)];
    let out = s.solve(opts).unwrap();
    assert_eq!(out.incumbent.successor(c(1, 1)), Some(c(1, 2)));

    // Both at once demand two successors of (1,1).
    let mut opts = SolveOptions::default();
    opts.assumptions = vec![Assumption::Guard(g_right), Assumption::Guard(g_up)];
    assert!(matches!(s.solve(opts), Err(SolveError::Unsat)));

    // Unassumed guards leave the space unconstrained.
    let out = s.solve(SolveOptions::default()).unwrap();
    assert!(out.optimal_proven);
}

#[test]
fn released_guards_reject_reuse_and_cleanup_frees_their_clauses() {
    let mut s = solver_on(2, 3);
    let snake_edge = crate::model::EdgeLit::new(c(1, 1), c(2, 1));
    let g1 = s.new_guard();
    s.add_guarded_constraints(g1, &[snake_edge]).unwrap();
    assert_eq!(s.clause_counts().guarded, 1);

    s.release_guard(g1).unwrap();
    let mut opts = SolveOptions::default();
    opts.assumptions = vec![Assumption::Guard(g1)];
    assert!(matches!(s.solve(opts), Err(SolveError::GuardReleased(_))));
    assert!(matches!(
        s.add_guarded_constraints(g1, &[snake_edge]),
        Err(SolveError::GuardReleased(_))
    ));

    // Released but not yet cleaned: solving works, clauses are vacuous.
    let out = s.solve(SolveOptions::default()).unwrap();
    assert!(out.optimal_proven);

    assert_eq!(s.cleanup(), 1);
    assert_eq!(s.clause_counts().guarded, 0);
    // Idempotent.
    s.release_guard(g1).unwrap();
    assert_eq!(s.cleanup(), 0);
}

#[test]
fn cleanup_keeps_clause_count_within_budget() {
    // Clause count after add + release + cleanup never exceeds the count
    // before the batch plus whatever was learned meanwhile.
    let g = grid(4, 4);
    let mut s = solver_on(4, 4);
    let before = s.clause_counts().total();
    let snake = Snake::new(&g, vec![c(2, 1), c(1, 1)]).unwrap();
    let guard = s.new_guard();
    s.add_guarded_constraints(guard, &snake_edge_lits(&snake)).unwrap();
    set_externals(&mut s, snake.head(), c(3, 3));
    let mut opts = SolveOptions::default();
    opts.assumptions = vec![Assumption::Guard(guard)];
    let out = s.solve(opts).unwrap();
    assert!(out.optimal_proven);
    s.release_guard(guard).unwrap();
    s.cleanup();
    let after = s.clause_counts();
    assert!(after.total() <= before + after.learned_global);
    assert_eq!(after.guarded, 0);
    assert_eq!(after.call_scoped, 0);
}

#[test]
fn activation_literals_are_reversible() {
    let right = crate::model::EdgeLit::new(c(1, 1), c(2, 1));
    let up = crate::model::EdgeLit::new(c(1, 1), c(1, 2));
    let mut s = solver_on(2, 2);

    s.model_mut().set_activation(right, true).unwrap();
    let out = s.solve(SolveOptions::default()).unwrap();
    assert_eq!(out.incumbent.successor(c(1, 1)), Some(c(2, 1)));

    // Two successors of one cell activated: unsatisfiable.
    s.model_mut().set_activation(up, true).unwrap();
    assert!(matches!(
        s.solve(SolveOptions::default()),
        Err(SolveError::Unsat)
    ));

    // Deactivation restores the original space.
    s.model_mut().set_activation(right, false).unwrap();
    s.model_mut().set_activation(up, false).unwrap();
    let out = s.solve(SolveOptions::default()).unwrap();
    assert!(out.optimal_proven);
}

#[test]
fn assumptions_hold_for_exactly_one_call() {
    let up = crate::model::EdgeLit::new(c(1, 1), c(1, 2));
    let mut s = solver_on(2, 2);

    let mut opts = SolveOptions::default();
    opts.assumptions = vec![Assumption::Edge(up, true)];
    let out = s.solve(opts).unwrap();
    assert_eq!(out.incumbent.successor(c(1, 1)), Some(c(1, 2)));

    let mut opts = SolveOptions::default();
    opts.assumptions = vec![Assumption::Edge(up, false)];
    let out = s.solve(opts).unwrap();
    assert_ne!(out.incumbent.successor(c(1, 1)), Some(c(1, 2)));

    // A probe call without assumptions is unconstrained by past ones.
    let out = s.solve(SolveOptions::default()).unwrap();
    assert!(out.optimal_proven);
    assert!(matches!(s.clause_counts().call_scoped, 0));
}

#[test]
fn injected_clauses_restrict_this_call_only() {
    let g = grid(2, 3);
    let perimeter =
        cycle(&g, &[(1, 1), (1, 2), (1, 3), (2, 3), (2, 2), (2, 1)]);
    let first_edge = crate::model::EdgeLit::new(c(1, 1), c(1, 2));
    let mut s = solver_on(2, 3);
    s.model_mut().set_warm_start(perimeter).unwrap();
    set_externals(&mut s, c(1, 1), c(2, 2));

    // Forbid the warm cycle's first edge as soon as the dummy model shows.
    let opts = SolveOptions {
        on_model: Some(Box::new(
            |ev: &ModelEvent<'_>, inj: &mut Injector<'_>| {
                if ev.dummy {
                    inj.inject_clause(&[(first_edge, false)]).unwrap();
                }
            },
        )),
        ..Default::default()
    };
    let out = s.solve(opts).unwrap();
    assert!(out.restricted_search);
    assert_ne!(out.incumbent.successor(c(1, 1)), Some(c(1, 2)));
    assert_eq!(out.objective, Some(3));

    // Probe call: a satisfaction solve returns the warm cycle itself, so
    // the injected clause forbidding its first edge must be gone.
    s.model_mut().set_external(External::Head(c(1, 1)), false).unwrap();
    s.model_mut().set_external(External::Apple(c(2, 2)), false).unwrap();
    let probe = s.solve(SolveOptions::default()).unwrap();
    assert_eq!(probe.incumbent.successor(c(1, 1)), Some(c(1, 2)));
    assert_eq!(s.clause_counts().call_scoped, 0);
}

#[test]
fn injecting_a_contradiction_ends_the_call_with_the_incumbent() {
    let mut s = solver_on(4, 4);
    set_externals(&mut s, c(1, 1), c(4, 4));
    let mut models = 0u32;
    let opts = SolveOptions {
        on_model: Some(Box::new(
            |_: &ModelEvent<'_>, inj: &mut Injector<'_>| {
                models += 1;
                inj.inject_clause(&[]).unwrap();
            },
        )),
        ..Default::default()
    };
    let out = s.solve(opts).unwrap();
    assert_eq!(models, 1);
    assert!(out.restricted_search);
    assert!(out.optimal_proven);
    assert_eq!(out.stats.models, 1);
}

#[test]
fn two_heads_or_two_apples_violate_the_contract() {
    let mut s = solver_on(2, 2);
    s.model_mut().set_external(External::Head(c(1, 1)), true).unwrap();
    s.model_mut().set_external(External::Head(c(2, 2)), true).unwrap();
    assert!(matches!(
        s.solve(SolveOptions::default()),
        Err(SolveError::ContractViolation(_))
    ));
    s.model_mut().set_external(External::Head(c(2, 2)), false).unwrap();
    s.model_mut().set_external(External::Apple(c(1, 2)), true).unwrap();
    s.model_mut().set_external(External::Apple(c(2, 1)), true).unwrap();
    assert!(matches!(
        s.solve(SolveOptions::default()),
        Err(SolveError::ContractViolation(_))
    ));
}

#[test]
fn fresh_and_reused_solvers_agree_on_optima() {
    let g = grid(4, 4);
    let snake = Snake::new(&g, vec![c(3, 1), c(2, 1), c(1, 1)]).unwrap();
    let apples = [c(2, 3), c(4, 1), c(1, 4), c(3, 2)];
    let mut reused = solver_on(4, 4);

    for apple in apples {
        let want = brute_force_oracle(&g, &snake, apple).unwrap().objective;

        // Fresh solver, facts.
        let mut fresh = solver_on(4, 4);
        for lit in snake_edge_lits(&snake) {
            fresh.add_edge_fact(lit, true).unwrap();
        }
        set_externals(&mut fresh, snake.head(), apple);
        let f = fresh.solve(SolveOptions::default()).unwrap();

        // Reused solver, assumptions; externals reset each round.
        let mut opts = SolveOptions::default();
        opts.assumptions = snake_edge_lits(&snake)
            .into_iter()
            .map(|l| Assumption::Edge(l, true))
            .collect();
        set_externals(&mut reused, snake.head(), apple);
        let r = reused.solve(opts).unwrap();
        reused.model_mut().set_external(External::Head(snake.head()), false).unwrap();
        reused.model_mut().set_external(External::Apple(apple), false).unwrap();

        assert!(f.optimal_proven && r.optimal_proven);
        assert_eq!(f.objective, Some(want));
        assert_eq!(r.objective, Some(want));
    }
}

#[test]
fn learned_clause_counter_matches_per_call_stats() {
    let mut s = solver_on(6, 6);
    let mut learned_total = 0;
    for apple in [c(4, 4), c(1, 6), c(6, 1)] {
        set_externals(&mut s, c(1, 1), apple);
        let out = s.solve(SolveOptions::default()).unwrap();
        learned_total += out.stats.learned as usize;
        s.model_mut().set_external(External::Head(c(1, 1)), false).unwrap();
        s.model_mut().set_external(External::Apple(apple), false).unwrap();
    }
    assert_eq!(s.clause_counts().learned_global, learned_total);
}

#[test]
fn disabling_objective_bounding_still_finds_the_optimum() {
    let mut s = solver_on(2, 3);
    set_externals(&mut s, c(1, 1), c(2, 2));
    let mut opts = SolveOptions::default();
    opts.objective_bounding = false;
    let out = s.solve(opts).unwrap();
    assert!(out.optimal_proven);
    assert_eq!(out.objective, Some(3));
    // Enumeration visits more models than bounded descent would.
    assert!(out.stats.models >= 2);
}

#[test]
fn optimum_matches_oracle_across_small_boards() {
    for (n, m) in [(2, 2), (2, 3), (4, 2), (4, 3), (4, 4)] {
        let g = grid(n, m);
        let snake = Snake::initial();
        for apple_idx in 0..g.cell_count() {
            let apple = g.coord(apple_idx);
            if apple == c(1, 1) {
                continue;
            }
            let want = brute_force_oracle(&g, &snake, apple).unwrap().objective;
            let mut s = solver_on(n, m);
            set_externals(&mut s, c(1, 1), apple);
            let out = s.solve(SolveOptions::default()).unwrap();
            assert!(out.optimal_proven);
            assert_eq!(
                out.objective,
                Some(want),
                "{n}x{m} apple {apple} disagreed with the oracle"
            );
        }
    }
}
