//! Temporary calibration probe. Not part of the suite.

use snake_core::game::{Game, GameConfig};
use snake_core::strategy::StrategyId;

fn rates(n: u32, m: u32, timeout_ms: u64, id: StrategyId, games: usize) -> (f64, f64) {
    rates_seeded(n, m, timeout_ms, id, games, 1000)
}

fn rates_seeded(
    n: u32,
    m: u32,
    timeout_ms: u64,
    id: StrategyId,
    games: usize,
    base: u64,
) -> (f64, f64) {
    let mut iter1 = 0usize;
    let mut late = 0usize;
    let mut late_total = 0usize;
    for k in 0..games {
        let mut cfg = GameConfig::new(n, m, base + k as u64, id);
        cfg.timeout_ms = timeout_ms;
        let mut game = Game::new(&cfg).unwrap();
        for _ in 0..10 {
            if !game.step() {
                break;
            }
        }
        for rec in game.records() {
            if rec.iteration == 1 && rec.timed_out {
                iter1 += 1;
            }
            if (3..=10).contains(&rec.iteration) {
                late_total += 1;
                if rec.timed_out {
                    late += 1;
                }
            }
        }
    }
    (iter1 as f64 / games as f64, late as f64 / late_total as f64)
}

#[test]
#[ignore]
fn calibrate() {
    let games = 30;
    for &(n, m, t, base) in &[
        (18u32, 18u32, 2u64, 0u64),
        (18, 18, 2, 1000),
        (18, 18, 2, 7777),
        (17, 18, 2, 0),
        (17, 18, 2, 1000),
        (18, 18, 3, 0),
        (16, 18, 2, 0),
        (19, 18, 3, 0),
    ] {
        let (i1, one) = rates_seeded(n, m, t, StrategyId::OneShot, games, base);
        print!("{n}x{m} {t}ms seeds {base}+: oneshot iter1 {i1:.2} late {one:.3} |");
        for id in [
            StrategyId::AdHoc,
            StrategyId::Preground,
            StrategyId::Assume,
            StrategyId::Nogood,
        ] {
            let (_, late) = rates_seeded(n, m, t, id, games, base);
            let mark = if late < one { "<" } else { "!" };
            print!(" {id} {late:.3}{mark}");
        }
        println!();
    }
}
