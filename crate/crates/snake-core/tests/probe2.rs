//! Temporary calibration probe. Not part of the suite.

use std::time::Duration;

use snake_core::game::{follow_path, place_apple};
use snake_core::rng::SplitMix64;
use snake_core::strategy::{Strategy, StrategyId, StrategyOptions};
use snake_core::{GridGraph, Snake};

#[test]
#[ignore]
fn dissect_hard_instances() {
    let n = 16u32;
    let g = GridGraph::new(n, n).unwrap();
    let mut shown = 0;
    'outer: for k in 0..15u64 {
        let opts = StrategyOptions {
            deadline: Some(Duration::from_millis(512)),
            ..Default::default()
        };
        let mut strategy = Strategy::new(g.clone(), StrategyId::OneShot, opts);
        let mut snake = Snake::initial();
        let mut rng = SplitMix64::new(100 + k);
        for iter in 1..=10 {
            let apple = place_apple(&g, &snake, &mut rng).unwrap();
            let r = strategy.retrieve(&snake, apple).unwrap();
            if r.timed_out {
                let head = snake.head();
                let md = head.manhattan(apple);
                // Re-solve with a 8s budget and full stats.
                let opts2 = StrategyOptions {
                    deadline: Some(Duration::from_secs(8)),
                    ..Default::default()
                };
                let mut s2 = Strategy::new(g.clone(), StrategyId::OneShot, opts2);
                let r2 = s2.retrieve(&snake, apple).unwrap();
                println!(
                    "seed {k} iter {iter}: len {} head {head:?} apple {apple:?} md {md} -> \
                     obj {:?} optimal {} in {:?}; decisions {} conflicts {} props {} models {} \
                     learned {}",
                    snake.len(),
                    r2.objective,
                    r2.optimal_proven,
                    r2.stats.duration,
                    r2.stats.decisions,
                    r2.stats.conflicts,
                    r2.stats.propagations,
                    r2.stats.models,
                    r2.stats.learned,
                );
                shown += 1;
                if shown >= 6 {
                    break 'outer;
                }
            }
            let path = r.path.unwrap();
            let (moved, _) = follow_path(&g, &snake, path.cells(), apple).unwrap();
            snake = moved;
        }
    }
}
