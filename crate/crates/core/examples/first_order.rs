//! First-order transition probability against the exact result.

use std::sync::Arc;

use qmarket::perturbation::{p1_interval_sum, p1_transition};
use qmarket::{enumerate_sector, exact_transition_probability, BasisState, MarketConfig, PriceTrajectory, SectorKey};

fn main() -> qmarket::Result<()> {
    let traj = PriceTrajectory::new(1.0, vec![vec![1], vec![2], vec![1]])?;
    let f0 = BasisState::new(vec![vec![0], vec![1]], vec![2, 0])?;
    let ff = BasisState::new(vec![vec![1], vec![0]], vec![1, 1])?;

    println!("{:>8} {:>14} {:>14} {:>14}", "lambda", "P1", "P1 (sum form)", "exact");
    for lambda in [0.1, 0.05, 0.02, 0.01] {
        let cfg = MarketConfig::new(vec![vec![1.0], vec![2.0]], vec![0.3, 0.5], lambda).with_coupling(0, 1, 0, 0.1);
        let basis = Arc::new(enumerate_sector(&cfg, &SectorKey::new(vec![1], 2))?);
        let t = traj.duration();
        let p1 = p1_transition(&cfg, &basis, &traj, &f0, &ff, t)?;
        let sum = p1_interval_sum(&cfg, &basis, &traj, &f0, &ff)?;
        let exact = exact_transition_probability(&cfg, basis, &traj, &f0, &ff, t)?;
        println!("{lambda:>8} {p1:>14.6e} {sum:>14.6e} {exact:>14.6e}");
    }
    Ok(())
}
