//! Distribution of one trader's portfolio value at several orders.

use std::sync::Arc;

use qmarket::perturbation::portfolio_distribution;
use qmarket::{enumerate_sector, BasisState, MarketConfig, Order, PriceTrajectory, SectorKey};

fn main() -> qmarket::Result<()> {
    let cfg = MarketConfig::new(vec![vec![1.0], vec![1.7], vec![2.3]], vec![0.3, 0.45, 0.6], 0.1)
        .with_coupling(0, 1, 0, 0.12)
        .with_coupling(1, 2, 0, 0.2);
    let basis = Arc::new(enumerate_sector(&cfg, &SectorKey::new(vec![2], 3))?);
    let traj = PriceTrajectory::new(1.0, vec![vec![1], vec![2], vec![2]])?;
    let f0 = BasisState::new(vec![vec![1], vec![1], vec![0]], vec![0, 1, 2])?;
    let t = traj.duration();

    for order in [Order::Second, Order::Dyson(4), Order::Exact] {
        let dist = portfolio_distribution(&cfg, &basis, &traj, &f0, 1, t, order)?;
        let cells: Vec<String> = dist.iter().map(|(v, p)| format!("{v}: {p:.5}")).collect();
        println!("{order:?}: {}", cells.join(", "));
    }
    Ok(())
}
