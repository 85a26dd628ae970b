//! Exact evolution under the piecewise-constant market Hamiltonian.
//!
//! Each interval Hamiltonian is diagonalised once; `exp(-i H_k s)` is then
//! applied in its eigenbasis. This is the reference against which every
//! perturbative result is checked.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::market::{BasisState, MarketConfig, PriceTrajectory, SectorBasis, StateSpace, StateVector};
use crate::operators::{build_h, SparseHermitian};

const NORM_TOLERANCE: f64 = 1e-10;

/// Spectral decomposition `H = V diag(E) V^dag` of one interval Hamiltonian.
#[derive(Debug, Clone)]
pub struct IntervalEigen {
    energies: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

impl IntervalEigen {
    pub fn new(h: &SparseHermitian) -> Result<Self> {
        let dense = h.to_dense();
        if !dense.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Linalg("Hamiltonian has non-finite entries".into()));
        }
        let eig = dense.symmetric_eigen();
        Ok(Self {
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `exp(-i H s) psi`.
    pub fn evolve(&self, psi: &[Complex64], s: f64) -> Vec<Complex64> {
        let v = DVector::from_column_slice(psi);
        let mut coeffs = self.vectors.ad_mul(&v);
        for (c, &e) in coeffs.iter_mut().zip(&self.energies) {
            *c *= Complex64::from_polar(1.0, -e * s);
        }
        (&self.vectors * coeffs).iter().copied().collect()
    }
}

/// Evolved state at time `t`, with the states at the interval boundaries passed on the way.
#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub time: f64,
    pub psi_t: StateVector,
    pub checkpoints: Vec<(f64, StateVector)>,
}

/// Interval Hamiltonians and their eigendecompositions for one trajectory.
#[derive(Debug, Clone)]
pub struct Propagator {
    basis: Arc<SectorBasis>,
    trajectory: PriceTrajectory,
    hamiltonians: Vec<Arc<SparseHermitian>>,
    eigen: Vec<Arc<IntervalEigen>>,
}

impl Propagator {
    pub fn new(cfg: &MarketConfig, basis: Arc<SectorBasis>, trajectory: &PriceTrajectory) -> Result<Self> {
        trajectory.check_market(cfg)?;
        // Intervals with identical prices share one decomposition.
        let mut by_row: HashMap<&[u32], (Arc<SparseHermitian>, Arc<IntervalEigen>)> = HashMap::new();
        let mut hamiltonians = Vec::with_capacity(trajectory.n_intervals());
        let mut eigen = Vec::with_capacity(trajectory.n_intervals());
        for k in 0..trajectory.n_intervals() {
            let row = trajectory.row(k);
            if !by_row.contains_key(row) {
                let h = build_h(cfg, basis.as_ref(), trajectory, k)?;
                let e = IntervalEigen::new(&h)?;
                by_row.insert(row, (Arc::new(h), Arc::new(e)));
            }
            let (h, e) = &by_row[row];
            hamiltonians.push(Arc::clone(h));
            eigen.push(Arc::clone(e));
        }
        Ok(Self {
            basis,
            trajectory: trajectory.clone(),
            hamiltonians,
            eigen,
        })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn trajectory(&self) -> &PriceTrajectory {
        &self.trajectory
    }

    pub fn hamiltonian(&self, k: usize) -> &SparseHermitian {
        &self.hamiltonians[k]
    }

    /// Precomputes the boundary states for `psi0`; later queries only evolve within one interval.
    pub fn evolution(&self, psi0: &StateVector) -> Result<Evolution<'_>> {
        if psi0.amplitudes().len() != self.basis.dim() {
            return Err(Error::Dimension(format!(
                "initial vector has {} amplitudes, basis dimension {}",
                psi0.amplitudes().len(),
                self.basis.dim()
            )));
        }
        let norm = psi0.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        let h = self.trajectory.step();
        let mut boundaries = Vec::with_capacity(self.trajectory.n_intervals() + 1);
        boundaries.push(psi0.amplitudes().to_vec());
        for e in &self.eigen {
            let next = e.evolve(boundaries.last().expect("nonempty"), h);
            boundaries.push(next);
        }
        Ok(Evolution {
            propagator: self,
            boundaries,
        })
    }

    pub fn propagate(&self, psi0: &StateVector, t: f64) -> Result<PropagationResult> {
        self.evolution(psi0)?.at(t)
    }
}

/// Cached trajectory of one initial state; read-only once built.
#[derive(Debug, Clone)]
pub struct Evolution<'a> {
    propagator: &'a Propagator,
    boundaries: Vec<Vec<Complex64>>,
}

impl Evolution<'_> {
    fn vector(&self, amplitudes: Vec<Complex64>) -> StateVector {
        StateVector::new(Arc::clone(&self.propagator.basis), amplitudes).expect("dimension checked")
    }

    /// Amplitudes of `Psi(t)` without building the checkpoint list.
    pub fn amplitudes_at(&self, t: f64) -> Result<Vec<Complex64>> {
        let traj = &self.propagator.trajectory;
        let m = traj.interval_at(t)?;
        let s = t - traj.boundary(m);
        if s == 0.0 {
            return Ok(self.boundaries[m].clone());
        }
        Ok(self.propagator.eigen[m].evolve(&self.boundaries[m], s))
    }

    pub fn at(&self, t: f64) -> Result<PropagationResult> {
        let psi = self.amplitudes_at(t)?;
        let traj = &self.propagator.trajectory;
        let checkpoints = (0..=traj.n_intervals())
            .map(|k| (traj.boundary(k), k))
            .take_while(|&(tk, _)| tk <= t)
            .map(|(tk, k)| (tk, self.vector(self.boundaries[k].clone())))
            .collect();
        Ok(PropagationResult {
            time: t,
            psi_t: self.vector(psi),
            checkpoints,
        })
    }
}

/// `Psi(t)` for `Psi(0) = psi0`.
pub fn propagate(
    cfg: &MarketConfig,
    basis: Arc<SectorBasis>,
    trajectory: &PriceTrajectory,
    psi0: &StateVector,
    t: f64,
) -> Result<PropagationResult> {
    Propagator::new(cfg, basis, trajectory)?.propagate(psi0, t)
}

/// `|<to|Psi(t)>|^2` starting from the number state `from`.
pub fn exact_transition_probability(
    cfg: &MarketConfig,
    basis: Arc<SectorBasis>,
    trajectory: &PriceTrajectory,
    from: &BasisState,
    to: &BasisState,
    t: f64,
) -> Result<f64> {
    let to_index = basis.require(to)?;
    let psi0 = StateVector::basis_state(Arc::clone(&basis), from)?;
    let prop = Propagator::new(cfg, basis, trajectory)?;
    let psi = prop.evolution(&psi0)?.amplitudes_at(t)?;
    Ok(psi[to_index].norm_sqr())
}

/// Expected share holdings (one per type) and cash of `trader` in the evolved state.
pub fn expectation_occupations(result: &PropagationResult, trader: usize) -> Result<(Vec<f64>, f64)> {
    let basis = result.psi_t.basis();
    if trader >= basis.n_traders() {
        return Err(Error::IndexOutOfRange {
            what: "trader",
            index: trader,
            limit: basis.n_traders(),
        });
    }
    let mut shares = vec![0.0; basis.n_share_types()];
    let mut cash = 0.0;
    for (s, w) in basis.states().iter().zip(result.psi_t.probabilities()) {
        for (a, n) in shares.iter_mut().enumerate() {
            *n += w * s.shares(trader, a) as f64;
        }
        cash += w * s.cash(trader) as f64;
    }
    Ok((shares, cash))
}

/// `<psi|H|psi>`.
pub fn energy_expectation(h: &SparseHermitian, psi: &StateVector) -> f64 {
    let hpsi = h.mul_vec(psi.amplitudes());
    psi.amplitudes().iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{enumerate_sector, SectorKey};

    fn setup(lambda: f64) -> (MarketConfig, Arc<SectorBasis>) {
        let cfg = MarketConfig::new(vec![vec![1.0], vec![2.0]], vec![0.3, 0.5], lambda).with_coupling(0, 1, 0, 0.1);
        let basis = Arc::new(enumerate_sector(&cfg, &SectorKey::new(vec![1], 2)).unwrap());
        (cfg, basis)
    }

    #[test]
    fn identity_at_time_zero() {
        let (cfg, basis) = setup(0.1);
        let traj = PriceTrajectory::constant(1.0, vec![1], 3).unwrap();
        let psi0 = StateVector::basis_state(Arc::clone(&basis), basis.state(2)).unwrap();
        let r = propagate(&cfg, Arc::clone(&basis), &traj, &psi0, 0.0).unwrap();
        for (a, b) in r.psi_t.amplitudes().iter().zip(psi0.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
        assert_eq!(r.checkpoints.len(), 1);
    }

    #[test]
    fn free_evolution_is_a_phase() {
        let (cfg, basis) = setup(0.0);
        let traj = PriceTrajectory::constant(1.0, vec![1], 2).unwrap();
        let s = basis.state(3).clone();
        let psi0 = StateVector::basis_state(Arc::clone(&basis), &s).unwrap();
        let r = propagate(&cfg, Arc::clone(&basis), &traj, &psi0, 1.7).unwrap();
        let amp = r.psi_t.amplitude_of(&s).unwrap();
        let expected = Complex64::from_polar(1.0, -basis.energy(3) * 1.7);
        assert!((amp - expected).norm() < 1e-12);
        let p = exact_transition_probability(&cfg, basis, &traj, &s, &s, 1.7).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (cfg, basis) = setup(0.1);
        let traj = PriceTrajectory::constant(1.0, vec![1], 2).unwrap();
        let prop = Propagator::new(&cfg, Arc::clone(&basis), &traj).unwrap();
        let psi0 = StateVector::basis_state(Arc::clone(&basis), basis.state(0)).unwrap();
        assert!(matches!(prop.propagate(&psi0, 2.5), Err(Error::TimeOutOfRange { .. })));
        let half = StateVector::new(Arc::clone(&basis), psi0.amplitudes().iter().map(|a| a * 0.5).collect()).unwrap();
        assert!(matches!(prop.propagate(&half, 1.0), Err(Error::NotNormalized(_))));
        let outside = BasisState::new(vec![vec![2], vec![0]], vec![0, 0]).unwrap();
        assert!(exact_transition_probability(&cfg, basis.clone(), &traj, &outside, basis.state(0), 1.0).is_err());
    }

    #[test]
    fn occupations_conserved() {
        let (cfg, basis) = setup(0.3);
        let traj = PriceTrajectory::new(0.5, vec![vec![1], vec![0], vec![2]]).unwrap();
        let prop = Propagator::new(&cfg, Arc::clone(&basis), &traj).unwrap();
        let s0 = BasisState::new(vec![vec![1], vec![0]], vec![1, 1]).unwrap();
        let psi0 = StateVector::basis_state(Arc::clone(&basis), &s0).unwrap();
        let evo = prop.evolution(&psi0).unwrap();
        for t in [0.1, 0.5, 0.9, 1.5] {
            let r = evo.at(t).unwrap();
            let (n0, k0) = expectation_occupations(&r, 0).unwrap();
            let (n1, k1) = expectation_occupations(&r, 1).unwrap();
            assert!((n0[0] + n1[0] - 1.0).abs() < 1e-12);
            assert!((k0 + k1 - 2.0).abs() < 1e-12);
        }
    }
}
