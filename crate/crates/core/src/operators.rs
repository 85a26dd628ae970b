//! Ladder-operator action of the exchange terms and sparse Hamiltonian assembly.
//!
//! The interaction is `H_I = 2 sum_{i,j,a} p_{ij}^a x_{i,a}^dag x_{j,a}` where
//! `x_{j,a} = a_{j,a} (c_j^dag)^P` sells one share of type `a` out of trader
//! `j`'s portfolio and credits `P` cash units. With symmetric couplings the
//! sum over ordered pairs already contains every Hermitian-conjugate term.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::market::{BasisState, MarketConfig, PriceTrajectory, StateSpace};

/// Trader `seller` hands one share of type `share` to trader `buyer`, who pays the price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExchangeMove {
    pub buyer: usize,
    pub seller: usize,
    pub share: usize,
}

impl ExchangeMove {
    pub fn new(buyer: usize, seller: usize, share: usize) -> Self {
        debug_assert_ne!(buyer, seller, "a trader cannot trade with itself");
        Self { buyer, seller, share }
    }

    /// Every ordered `(buyer, seller, share)` triple with distinct traders.
    pub fn all(n_traders: usize, n_share_types: usize) -> impl Iterator<Item = ExchangeMove> {
        (0..n_traders).flat_map(move |buyer| {
            (0..n_traders)
                .filter(move |&seller| seller != buyer)
                .flat_map(move |seller| (0..n_share_types).map(move |share| ExchangeMove::new(buyer, seller, share)))
        })
    }
}

/// `(k+1)(k+2)...(k+p) = (k+p)!/k!`, as a length-`p` product.
pub(crate) fn rising_ratio(k: u32, p: u32) -> f64 {
    (1..=p).fold(1.0, |acc, m| acc * (k as f64 + m as f64))
}

/// `k(k-1)...(k-p+1) = k!/(k-p)!`, zero when `p > k`.
pub(crate) fn falling_ratio(k: u32, p: u32) -> f64 {
    if p > k {
        return 0.0;
    }
    (0..p).fold(1.0, |acc, m| acc * (k - m) as f64)
}

/// Applies `a_{i}^dag a_{j} c_i^P (c_j^dag)^P` to a number state.
///
/// Returns the unique target state and the amplitude `Gamma`, or `None` when
/// the seller holds no share of that type or the buyer cannot pay `price`.
pub fn apply_exchange(s: &BasisState, m: ExchangeMove, price: u32) -> Option<(BasisState, f64)> {
    let (i, j, a) = (m.buyer, m.seller, m.share);
    debug_assert_ne!(i, j);
    let n_seller = s.shares(j, a);
    let n_buyer = s.shares(i, a);
    let k_seller = s.cash(j);
    let k_buyer = s.cash(i);
    if n_seller == 0 || k_buyer < price {
        return None;
    }
    let gamma_sq =
        rising_ratio(k_seller, price) * falling_ratio(k_buyer, price) * n_seller as f64 * (1.0 + n_buyer as f64);
    let mut target = s.clone();
    *target.shares_mut(j, a) -= 1;
    *target.shares_mut(i, a) += 1;
    *target.cash_mut(j) += price;
    *target.cash_mut(i) -= price;
    Some((target, gamma_sq.sqrt()))
}

/// Hermitian matrix in coordinate storage with deterministic `(row, col)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl SparseHermitian {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.add(i, i, Complex64::new(d, 0.0));
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub(crate) fn add(&mut self, row: usize, col: usize, value: Complex64) {
        if value == Complex64::new(0.0, 0.0) {
            return;
        }
        *self.entries.entry((row, col)).or_insert(Complex64::new(0.0, 0.0)) += value;
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries
            .get(&(row, col))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Stored entries in `(row, col)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|(&k, &v)| (k, v * factor)).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (r, c, v) in other.iter() {
            out.add(r, c, v);
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `max |H - H^dag|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry magnitude of `H D - D H` for a diagonal `D`.
    pub fn commutator_with_diagonal(&self, diag: &[f64]) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v * (diag[c] - diag[r])).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (r, c, h) in self.iter() {
            out[r] += h * v[c];
        }
        out
    }

    /// Coordinate text: `row col re im`, one entry per line, sorted by `(row, col)`.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (r, c, v) in self.iter() {
            writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Diagonal free Hamiltonian `H_0` over the basis.
pub fn build_h0<B: StateSpace>(basis: &B) -> SparseHermitian {
    SparseHermitian::from_diagonal(basis.energies())
}

/// Interaction `H_I` at fixed integer prices.
///
/// Fails with [`Error::LeavesBasis`] if some exchange produces a state that
/// is not part of `basis`; within a full sector that cannot happen.
pub fn build_hi<B: StateSpace>(cfg: &MarketConfig, basis: &B, prices: &[u32]) -> Result<SparseHermitian> {
    if prices.len() != cfg.n_share_types {
        return Err(Error::Dimension(format!(
            "{} prices for {} share types",
            prices.len(),
            cfg.n_share_types
        )));
    }
    let mut h = SparseHermitian::zeros(basis.dim());
    for (col, s) in basis.states().iter().enumerate() {
        for m in ExchangeMove::all(cfg.n_traders, cfg.n_share_types) {
            let p = cfg.coupling(m.buyer, m.seller, m.share);
            if p == 0.0 {
                continue;
            }
            if let Some((target, gamma)) = apply_exchange(s, m, prices[m.share]) {
                let row = basis
                    .index_of(&target)
                    .ok_or_else(|| Error::LeavesBasis(format!("{s} -> {target}")))?;
                h.add(row, col, Complex64::new(2.0 * p * gamma, 0.0));
            }
        }
    }
    debug_assert!(h.hermiticity_defect() == 0.0);
    Ok(h)
}

/// `H_0 + lambda H_I` with the prices of interval `k`.
pub fn build_h<B: StateSpace>(
    cfg: &MarketConfig,
    basis: &B,
    trajectory: &PriceTrajectory,
    k: usize,
) -> Result<SparseHermitian> {
    if k >= trajectory.n_intervals() {
        return Err(Error::IndexOutOfRange {
            what: "price interval",
            index: k,
            limit: trajectory.n_intervals(),
        });
    }
    let hi = build_hi(cfg, basis, trajectory.row(k))?;
    Ok(build_h0(basis).plus(&hi.scaled(cfg.lambda)))
}

/// Counts exchanges whose target leaves the basis or changes the conserved totals.
pub fn exchange_violations<B: StateSpace>(cfg: &MarketConfig, basis: &B, prices: &[u32]) -> usize {
    let mut violations = 0;
    for s in basis.states() {
        let key = s.sector_key();
        for m in ExchangeMove::all(cfg.n_traders, cfg.n_share_types) {
            if cfg.coupling(m.buyer, m.seller, m.share) == 0.0 {
                continue;
            }
            if let Some((target, _)) = apply_exchange(s, m, prices[m.share]) {
                if basis.index_of(&target).is_none() || target.sector_key() != key {
                    violations += 1;
                }
            }
        }
    }
    violations
}

/// Diagonal of the total-share operator for share type `share` over the basis.
pub fn total_shares_diagonal<B: StateSpace>(basis: &B, share: usize) -> Vec<f64> {
    basis
        .states()
        .iter()
        .map(|s| (0..s.n_traders()).map(|j| s.shares(j, share) as f64).sum())
        .collect()
}

/// Diagonal of the total-cash operator over the basis.
pub fn total_cash_diagonal<B: StateSpace>(basis: &B) -> Vec<f64> {
    basis
        .states()
        .iter()
        .map(|s| s.cash_vec().iter().map(|&k| k as f64).sum())
        .collect()
}
