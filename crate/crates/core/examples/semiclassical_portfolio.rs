//! Second-order occupation shifts and portfolio value with classical prices.

use qmarket::semiclassical::{delta_occupations, portfolio_evolution, sum_rule_residual};
use qmarket::{BasisState, MarketConfig, PriceTrajectory};

fn main() -> qmarket::Result<()> {
    let cfg = MarketConfig::new(vec![vec![1.0], vec![2.0]], vec![0.3, 0.5], 0.01).with_coupling(0, 1, 0, 0.1);
    let traj = PriceTrajectory::new(1.0, vec![vec![1], vec![2], vec![1]])?;
    let f0 = BasisState::new(vec![vec![1], vec![0]], vec![1, 1])?;

    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>10}",
        "t", "dn_1", "dk_1", "Pi_1", "residual"
    );
    for i in 0..=12 {
        let t = i as f64 * 0.25;
        let shift = delta_occupations(&cfg, &f0, &traj, 0, t)?;
        let pi = portfolio_evolution(&cfg, &f0, &traj, 0, t)?;
        let residual = sum_rule_residual(&cfg, &f0, &traj, 0, t)?.max_abs();
        println!(
            "{t:>5.2} {:>12.4e} {:>12.4e} {pi:>12.6} {residual:>10.1e}",
            shift.delta_n[0], shift.delta_k
        );
    }
    Ok(())
}
