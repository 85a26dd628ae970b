//! Truncated Dyson series converging to the exact amplitude.

use std::sync::Arc;

use qmarket::perturbation::DysonSeries;
use qmarket::{
    enumerate_sector, BasisState, MarketConfig, PriceTrajectory, Propagator, SectorKey, StateSpace, StateVector,
};

fn main() -> qmarket::Result<()> {
    let cfg = MarketConfig::new(vec![vec![1.0], vec![1.7], vec![2.3]], vec![0.3, 0.45, 0.6], 0.3)
        .with_coupling(0, 1, 0, 0.12)
        .with_coupling(1, 2, 0, 0.2);
    let basis = Arc::new(enumerate_sector(&cfg, &SectorKey::new(vec![1], 2))?);
    let traj = PriceTrajectory::new(0.5, vec![vec![1], vec![2], vec![1], vec![0]])?;
    let f0 = BasisState::new(vec![vec![0], vec![0], vec![1]], vec![1, 1, 0])?;
    let t = traj.duration();

    let psi0 = StateVector::basis_state(Arc::clone(&basis), &f0)?;
    let exact = Propagator::new(&cfg, Arc::clone(&basis), &traj)?.propagate(&psi0, t)?;
    let series = DysonSeries::new(&cfg, &basis, &traj, &f0, 10)?.at(t)?;
    for upto in 0..=10 {
        let err = (0..basis.dim())
            .map(|b| (series.schrodinger_amplitude(basis.as_ref(), b, upto) - exact.psi_t.amplitudes()[b]).norm())
            .fold(0.0, f64::max);
        println!("order {upto:>2}: max amplitude error {err:.3e}");
    }
    Ok(())
}
