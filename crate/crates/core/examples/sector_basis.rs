//! Enumerate a conserved sector and list its free energies.

use qmarket::{enumerate_sector, MarketConfig, SectorKey, StateSpace};

fn main() -> qmarket::Result<()> {
    let cfg = MarketConfig::new(vec![vec![1.0], vec![2.0]], vec![0.3, 0.5], 0.01).with_coupling(0, 1, 0, 0.1);
    let key = SectorKey::new(vec![1], 2);
    let basis = enumerate_sector(&cfg, &key)?;

    println!(
        "sector {key:?}: {} states (predicted {})",
        basis.dim(),
        key.dimension(cfg.n_traders)
    );
    for (i, s) in basis.states().iter().enumerate() {
        println!("{i:>3}  {s}  E = {:+.4}", basis.energy(i));
    }
    Ok(())
}
