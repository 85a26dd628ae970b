//! Assemble `H = H0 + lambda H_I` at one price and check its symmetries.

use qmarket::operators::{exchange_violations, total_cash_diagonal, total_shares_diagonal};
use qmarket::{build_h, enumerate_sector, MarketConfig, PriceTrajectory, SectorKey, StateSpace};

fn main() -> qmarket::Result<()> {
    let cfg = MarketConfig::new(
        vec![vec![1.0, 0.8], vec![2.0, 1.1], vec![1.4, 0.6]],
        vec![0.3, 0.5, 0.4],
        0.05,
    )
    .with_coupling(0, 1, 0, 0.1)
    .with_coupling(1, 2, 1, 0.2)
    .with_coupling(0, 2, 0, 0.15);
    let basis = enumerate_sector(&cfg, &SectorKey::new(vec![2, 1], 3))?;
    let traj = PriceTrajectory::new(1.0, vec![vec![1, 2]])?;
    let h = build_h(&cfg, &basis, &traj, 0)?;

    println!("dimension {}, nonzeros {}", basis.dim(), h.nnz());
    println!("|H - H^dag| = {:e}", h.hermiticity_defect());
    for a in 0..cfg.n_share_types {
        println!(
            "[H, N_{a}] = {:e}",
            h.commutator_with_diagonal(&total_shares_diagonal(&basis, a))
        );
    }
    println!(
        "[H, K]   = {:e}",
        h.commutator_with_diagonal(&total_cash_diagonal(&basis))
    );
    println!(
        "entries breaking one-exchange structure: {}",
        exchange_violations(&cfg, &basis, traj.row(0))
    );
    Ok(())
}
