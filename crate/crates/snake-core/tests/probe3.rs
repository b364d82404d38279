use snake_core::game::{Game, GameConfig};
use snake_core::strategy::StrategyId;
use std::time::Instant;

// Per-call wall time on easy mid-game states: isolates the fixed
// construction cost one-shot repays every call.
#[test]
#[ignore]
fn fixed_cost() {
    for n in [12u32, 16, 18] {
        let mut line = format!("{n}x{n}:");
        for id in [StrategyId::OneShot, StrategyId::AdHoc, StrategyId::Assume] {
            let cfg = {
                let mut c = GameConfig::new(n, n, 42, id);
                c.timeout_ms = 50;
                c
            };
            let mut game = Game::new(&cfg).unwrap();
            let mut times = Vec::new();
            for _ in 0..40 {
                let t0 = Instant::now();
                if !game.step() {
                    break;
                }
                times.push(t0.elapsed().as_micros() as u64);
            }
            times.sort_unstable();
            let med = times[times.len() / 2];
            line += &format!("  {:?} med {}us", id, med);
        }
        println!("{line}");
    }
}
