//! Resonant and off-resonant first-order growth at constant prices.

use qmarket::perturbation::{golden_rule_rate, p1_transition, GrowthDiagnostic};
use qmarket::{enumerate_sector, BasisState, MarketConfig, PriceTrajectory, SectorKey};

fn main() -> qmarket::Result<()> {
    let f0 = BasisState::new(vec![vec![0], vec![1]], vec![2, 0])?;
    let ff = BasisState::new(vec![vec![1], vec![0]], vec![1, 1])?;
    // With cash frequency 1.3 for trader 2 both holdings have free energy 2.6.
    for (label, omega_cash) in [("resonant", [0.3, 1.3]), ("off-resonant", [0.3, 0.5])] {
        let cfg = MarketConfig::new(vec![vec![1.0], vec![2.0]], omega_cash.to_vec(), 0.01).with_coupling(0, 1, 0, 0.1);
        let basis = enumerate_sector(&cfg, &SectorKey::new(vec![1], 2))?;
        let rule = golden_rule_rate(&cfg, &basis, &f0, &ff, &[1])?;
        println!(
            "{label}: dE = {:+.3}, h = {:.3}, rate = {:.3e}",
            rule.delta_e, rule.h, rule.rate
        );
        let traj = PriceTrajectory::constant(1.0, vec![1], 50)?;
        for t in [1.0, 10.0, 50.0] {
            let p = p1_transition(&cfg, &basis, &traj, &f0, &ff, t)?;
            let note = match rule.diagnostic {
                GrowthDiagnostic::Resonant { t2_coefficient } => format!("c t^2 = {:.4e}", t2_coefficient * t * t),
                GrowthDiagnostic::OffResonant { bound } => format!("bound {bound:.4e}"),
            };
            println!("  t = {t:>4}: P1 = {p:.4e}  ({note})");
        }
    }
    Ok(())
}
