//! Exact evolution of a basis state across a price path.

use std::sync::Arc;

use qmarket::{
    enumerate_sector, expectation_occupations, BasisState, MarketConfig, PriceTrajectory, Propagator, SectorKey,
    StateVector,
};

fn main() -> qmarket::Result<()> {
    let cfg = MarketConfig::new(vec![vec![1.0], vec![2.0]], vec![0.3, 0.5], 0.2).with_coupling(0, 1, 0, 0.1);
    let basis = Arc::new(enumerate_sector(&cfg, &SectorKey::new(vec![1], 2))?);
    let traj = PriceTrajectory::new(1.0, vec![vec![1], vec![2], vec![1]])?;
    let f0 = BasisState::new(vec![vec![0], vec![1]], vec![2, 0])?;

    let psi0 = StateVector::basis_state(Arc::clone(&basis), &f0)?;
    let propagator = Propagator::new(&cfg, basis, &traj)?;
    let evolution = propagator.evolution(&psi0)?;
    println!("{:>5} {:>10} {:>10} {:>10}", "t", "norm", "<n_1>", "<k_1>");
    for i in 0..=12 {
        let t = i as f64 * traj.duration() / 12.0;
        let result = evolution.at(t)?;
        let (n, k) = expectation_occupations(&result, 0)?;
        println!("{t:>5.2} {:>10.6} {:>10.6} {:>10.6}", result.psi_t.norm(), n[0], k);
    }
    Ok(())
}
