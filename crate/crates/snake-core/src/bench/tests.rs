use super::*;
use crate::game::{follow_path, place_apple};
use crate::grid::{Coord, GridGraph, Snake};
use crate::oracle::brute_force_oracle;
use crate::rng::SplitMix64;
use crate::strategy::{Strategy, StrategyOptions};

fn grid(n: u32, m: u32) -> GridGraph {
    GridGraph::new(n, m).unwrap()
}

fn solver_backends() -> Vec<StrategyId> {
    StrategyId::ALL.into_iter().filter(|id| id.solver_backed()).collect()
}

fn read_lines(path: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn two_by_two_study_wins_with_plausible_totals() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = BenchConfig::new(vec![(2, 2)], 10, solver_backends());
    cfg.out_dir = Some(dir.path().to_path_buf());
    let report = run_bench(&cfg).unwrap();
    assert_eq!(report.cells.len(), 5);
    for cell in &report.cells {
        assert_eq!(cell.win_rate, 1.0, "{}", cell.strategy);
        assert_eq!(cell.games, 10);
    }
    // Case analysis of the 2x2 board bounds each game's total steps.
    for id in solver_backends() {
        let lines = read_lines(&dir.path().join(format!("games/2x2-{id}.jsonl")));
        let totals: Vec<u64> = lines
            .iter()
            .filter(|v| v.get("won").is_some())
            .map(|v| v["total_steps"].as_u64().unwrap())
            .collect();
        assert_eq!(totals.len(), 10);
        assert!(totals.iter().all(|&t| (1..=5).contains(&t)), "{id}: {totals:?}");
    }
}

#[test]
fn aggregates_match_a_recount_of_the_raw_lines() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = BenchConfig::new(vec![(4, 4)], 6, vec![StrategyId::Assume]);
    cfg.out_dir = Some(dir.path().to_path_buf());
    cfg.base_seed = 11;
    let report = run_bench(&cfg).unwrap();
    let cell = &report.cells[0];

    let lines = read_lines(&dir.path().join("games/4x4-assume.jsonl"));
    let summaries: Vec<&serde_json::Value> =
        lines.iter().filter(|v| v.get("won").is_some()).collect();
    let iterations: Vec<&serde_json::Value> =
        lines.iter().filter(|v| v.get("iter").is_some()).collect();

    assert_eq!(summaries.len(), 6);
    let wins = summaries.iter().filter(|v| v["won"].as_bool().unwrap()).count();
    assert_eq!(cell.win_rate, wins as f64 / 6.0);
    let steps: u64 = summaries.iter().map(|v| v["total_steps"].as_u64().unwrap()).sum();
    assert_eq!(cell.mean_total_steps, steps as f64 / 6.0);
    let timeouts = iterations.iter().filter(|v| v["timeout"].as_bool().unwrap()).count();
    assert_eq!(cell.timeout_rate, timeouts as f64 / iterations.len() as f64);
    // Any one strategy sees each seed's board once: 15 apples per won game.
    assert_eq!(iterations.len(), 6 * 15);
}

#[test]
fn strategies_see_the_same_boards() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg =
        BenchConfig::new(vec![(4, 4)], 4, vec![StrategyId::Assume, StrategyId::Nogood]);
    cfg.out_dir = Some(dir.path().to_path_buf());
    run_bench(&cfg).unwrap();
    let first_apples = |id: StrategyId| -> Vec<serde_json::Value> {
        read_lines(&dir.path().join(format!("games/4x4-{id}.jsonl")))
            .into_iter()
            .filter(|v| v.get("iter").map(|k| k == 1).unwrap_or(false))
            .map(|v| v["apple"].clone())
            .collect()
    };
    // Equal seeds mean the first apple of game i is the same either way.
    assert_eq!(first_apples(StrategyId::Assume), first_apples(StrategyId::Nogood));
}

#[test]
fn report_files_have_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = BenchConfig::new(vec![(2, 2), (4, 2)], 3, vec![StrategyId::OneShot]);
    cfg.out_dir = Some(dir.path().to_path_buf());
    let report = run_bench(&cfg).unwrap();

    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "grid,strategy,games,win_rate,mean_total_steps,mean_total_time_ms,timeout_rate"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), report.cells.len());
    for (row, cell) in rows.iter().zip(&report.cells) {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], cell.grid);
        assert_eq!(fields[1], cell.strategy.name());
        assert_eq!(fields[2].parse::<usize>().unwrap(), cell.games);
        assert_eq!(fields[3].parse::<f64>().unwrap(), cell.win_rate);
        assert_eq!(fields[4].parse::<f64>().unwrap(), cell.mean_total_steps);
        assert_eq!(fields[6].parse::<f64>().unwrap(), cell.timeout_rate);
    }

    let objects = read_lines(&dir.path().join("report.jsonl"));
    assert_eq!(objects.len(), report.cells.len());
    for (v, cell) in objects.iter().zip(&report.cells) {
        assert_eq!(v["grid"].as_str().unwrap(), cell.grid);
        assert_eq!(v["strategy"].as_str().unwrap(), cell.strategy.name());
        assert_eq!(
            v["timeout_rate_by_iter"].as_array().unwrap().len(),
            cell.timeout_rate_by_iter.len()
        );
    }
}

#[test]
fn reports_replay_identically_apart_from_timing() {
    let mut cfg = BenchConfig::new(vec![(4, 4)], 5, vec![StrategyId::Preground]);
    cfg.base_seed = 3;
    let a = run_bench(&cfg).unwrap();
    let b = run_bench(&cfg).unwrap();
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!(x.grid, y.grid);
        assert_eq!(x.win_rate, y.win_rate);
        assert_eq!(x.mean_total_steps, y.mean_total_steps);
        assert_eq!(x.timeout_rate, y.timeout_rate);
        assert_eq!(x.timeout_rate_by_iter, y.timeout_rate_by_iter);
    }
}

#[test]
fn hopeless_games_are_recorded_as_losses_not_crashes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = BenchConfig::new(vec![(300, 300)], 2, vec![StrategyId::Assume]);
    cfg.out_dir = Some(dir.path().to_path_buf());
    cfg.timeout_ms = 1;
    cfg.warm_start = false;
    let report = run_bench(&cfg).unwrap();
    assert_eq!(report.cells[0].win_rate, 0.0);
    let lines = read_lines(&dir.path().join("games/300x300-assume.jsonl"));
    assert!(lines
        .iter()
        .filter(|v| v.get("won").is_some())
        .all(|v| v["diagnostic"].is_string()));
}

/// Random reachable states, produced the way the game produces them: by
/// walking the fixed serpentine and dropping apples at random.
fn reachable_states(n: u32, m: u32, games: usize) -> Vec<(Snake, Coord)> {
    let g = grid(n, m);
    let mut states = Vec::new();
    for seed in 0..games as u64 {
        let mut naive = Strategy::new(g.clone(), StrategyId::Naive, StrategyOptions::default());
        let mut rng = SplitMix64::new(seed);
        let mut snake = Snake::initial();
        while snake.len() < g.cell_count() {
            let apple = place_apple(&g, &snake, &mut rng).unwrap();
            states.push((snake.clone(), apple));
            let r = naive.retrieve(&snake, apple).unwrap();
            let (next, _) = follow_path(&g, &snake, r.path.unwrap().cells(), apple).unwrap();
            snake = next;
        }
    }
    states
}

#[test]
fn every_proven_optimum_matches_the_oracle_on_reachable_states() {
    let mut states = Vec::new();
    states.extend(reachable_states(2, 3, 5).into_iter().map(|s| (2u32, 3u32, s)));
    states.extend(reachable_states(4, 2, 5).into_iter().map(|s| (4u32, 2u32, s)));
    states.extend(reachable_states(4, 4, 10).into_iter().map(|s| (4u32, 4u32, s)));
    assert!(states.len() >= 200, "state pool holds {}", states.len());
    for (n, m, (snake, apple)) in states {
        let g = grid(n, m);
        let expected = brute_force_oracle(&g, &snake, apple).unwrap().objective;
        for id in solver_backends() {
            let mut st = Strategy::new(g.clone(), id, StrategyOptions::default());
            let r = st.retrieve(&snake, apple).unwrap();
            assert!(r.optimal_proven, "{id} on {n}x{m} {snake:?} apple {apple}");
            assert_eq!(
                r.objective,
                Some(expected),
                "{id} on {n}x{m} {snake:?} apple {apple}"
            );
        }
    }
}
