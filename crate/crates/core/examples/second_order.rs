//! Second-order amplitudes from the closed forms and from the Dyson solver.

use qmarket::perturbation::{c2_constant, c2_piecewise_m3, dyson_coefficients};
use qmarket::{enumerate_sector, BasisState, MarketConfig, PriceTrajectory, SectorKey, StateSpace};

fn main() -> qmarket::Result<()> {
    // A share can only reach trader 3 through trader 2.
    let cfg = MarketConfig::new(vec![vec![1.0], vec![1.7], vec![2.3]], vec![0.3, 0.45, 0.6], 0.05)
        .with_coupling(0, 1, 0, 0.12)
        .with_coupling(1, 2, 0, 0.2);
    let basis = enumerate_sector(&cfg, &SectorKey::new(vec![1], 2))?;
    let f0 = BasisState::new(vec![vec![1], vec![0], vec![0]], vec![0, 1, 1])?;
    let ff = BasisState::new(vec![vec![0], vec![0], vec![1]], vec![1, 1, 0])?;
    let target = basis.index_of(&ff).expect("target in sector");

    let constant = PriceTrajectory::constant(0.8, vec![1], 3)?;
    let t = constant.duration();
    let closed = c2_constant(&cfg, &basis, &f0, &ff, &[1], t)?;
    let dyson = dyson_coefficients(&cfg, &basis, &constant, &f0, 2, t)?.coeffs[2][target];
    println!("constant prices:  c2 = {closed:.6e}, Dyson = {dyson:.6e}");

    let path = PriceTrajectory::new(0.8, vec![vec![1], vec![2], vec![1]])?;
    let piecewise = c2_piecewise_m3(&cfg, &basis, &path, &f0, &ff)?;
    let dyson = dyson_coefficients(&cfg, &basis, &path, &f0, 2, path.duration())?.coeffs[2][target];
    println!("three intervals:  c2 = {piecewise:.6e}, Dyson = {dyson:.6e}");
    println!(
        "relay probability lambda^4 |c2|^2 = {:.4e}",
        cfg.lambda.powi(4) * piecewise.norm_sqr()
    );
    Ok(())
}
