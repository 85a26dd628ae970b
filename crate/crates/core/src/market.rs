//! Market configuration, conservation sectors and number-state bases.
//!
//! A market has `N` traders and `L` share types. A number state records how
//! many shares of each type every trader holds and how many monetary units of
//! cash they own. The Hamiltonian conserves the total number of shares of
//! each type and the total cash, so every computation in this crate runs
//! inside one fixed sector of those totals.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};

/// Traders, share types, free frequencies, pair couplings and interaction strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub n_traders: usize,
    pub n_share_types: usize,
    /// `omega_share[j][a]`: frequency of share type `a` held by trader `j`.
    pub omega_share: Vec<Vec<f64>>,
    /// `omega_cash[j]`: frequency of one cash unit held by trader `j`.
    pub omega_cash: Vec<f64>,
    /// `coupling[i][j][a]`: strength with which traders `i` and `j` exchange share `a`.
    pub coupling: Vec<Vec<Vec<f64>>>,
    pub lambda: f64,
}

impl MarketConfig {
    /// A market with the given frequencies and no couplings yet.
    pub fn new(omega_share: Vec<Vec<f64>>, omega_cash: Vec<f64>, lambda: f64) -> Self {
        let n_traders = omega_cash.len();
        let n_share_types = omega_share.first().map_or(0, Vec::len);
        Self {
            n_traders,
            n_share_types,
            omega_share,
            omega_cash,
            coupling: vec![vec![vec![0.0; n_share_types]; n_traders]; n_traders],
            lambda,
        }
    }

    /// Sets `p[i][j][share] = p[j][i][share] = value`.
    pub fn with_coupling(mut self, i: usize, j: usize, share: usize, value: f64) -> Self {
        self.coupling[i][j][share] = value;
        self.coupling[j][i][share] = value;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// Checks every invariant and hands the config back unchanged.
    pub fn validate(self) -> Result<Self, ConfigError> {
        validate_config(self)
    }

    #[inline]
    pub fn coupling(&self, i: usize, j: usize, share: usize) -> f64 {
        self.coupling[i][j][share]
    }

    /// Largest pair coupling, used for energy-scale and validity estimates.
    pub fn max_coupling(&self) -> f64 {
        self.coupling.iter().flatten().flatten().fold(0.0_f64, |m, &p| m.max(p))
    }

    /// Largest free frequency; sets the scale for degeneracy thresholds.
    pub fn energy_scale(&self) -> f64 {
        self.omega_share
            .iter()
            .flatten()
            .chain(self.omega_cash.iter())
            .fold(1.0_f64, |m, &w| m.max(w.abs()))
    }

    pub(crate) fn check_state(&self, s: &BasisState) -> Result<()> {
        if s.n_traders() != self.n_traders || s.n_share_types() != self.n_share_types {
            return Err(Error::Dimension(format!(
                "state has N={}, L={} but market has N={}, L={}",
                s.n_traders(),
                s.n_share_types(),
                self.n_traders,
                self.n_share_types
            )));
        }
        Ok(())
    }
}

/// Enforces symmetric couplings with a vanishing diagonal, positive
/// frequencies and a nonnegative interaction strength.
pub fn validate_config(cfg: MarketConfig) -> Result<MarketConfig, ConfigError> {
    let (n, l) = (cfg.n_traders, cfg.n_share_types);
    if n == 0 || l == 0 {
        return Err(ConfigError::Empty {
            traders: n,
            share_types: l,
        });
    }
    if cfg.omega_share.len() != n || cfg.omega_share.iter().any(|row| row.len() != l) {
        return Err(ConfigError::Shape {
            field: "omega_share",
            detail: format!("expected {n} rows of {l} entries"),
        });
    }
    if cfg.omega_cash.len() != n {
        return Err(ConfigError::Shape {
            field: "omega_cash",
            detail: format!("expected {n} entries, got {}", cfg.omega_cash.len()),
        });
    }
    if cfg.coupling.len() != n
        || cfg
            .coupling
            .iter()
            .any(|row| row.len() != n || row.iter().any(|p| p.len() != l))
    {
        return Err(ConfigError::Shape {
            field: "coupling",
            detail: format!("expected an {n}x{n}x{l} array"),
        });
    }
    for (j, row) in cfg.omega_share.iter().enumerate() {
        for (a, &w) in row.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(ConfigError::NonpositiveFrequency {
                    what: format!("omega_share[{j}][{a}]"),
                    value: w,
                });
            }
        }
    }
    for (j, &w) in cfg.omega_cash.iter().enumerate() {
        if !(w > 0.0 && w.is_finite()) {
            return Err(ConfigError::NonpositiveFrequency {
                what: format!("omega_cash[{j}]"),
                value: w,
            });
        }
    }
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(ConfigError::NegativeLambda(cfg.lambda));
    }
    for i in 0..n {
        for j in 0..n {
            for a in 0..l {
                let p = cfg.coupling[i][j][a];
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(ConfigError::NegativeCoupling {
                        i,
                        j,
                        share: a,
                        value: p,
                    });
                }
                if i == j && p != 0.0 {
                    return Err(ConfigError::DiagonalCoupling {
                        trader: i,
                        share: a,
                        value: p,
                    });
                }
                let q = cfg.coupling[j][i][a];
                if p != q {
                    return Err(ConfigError::SymmetryViolation {
                        i,
                        j,
                        share: a,
                        forward: p,
                        backward: q,
                    });
                }
            }
        }
    }
    Ok(cfg)
}

/// Conserved totals labelling a sector: shares of each type and total cash.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorKey {
    pub shares: Vec<u32>,
    pub cash: u32,
}

impl SectorKey {
    pub fn new(shares: Vec<u32>, cash: u32) -> Self {
        Self { shares, cash }
    }

    /// Dimension predicted by counting weak compositions of every total into `n_traders` parts.
    pub fn dimension(&self, n_traders: usize) -> u128 {
        self.shares
            .iter()
            .chain(std::iter::once(&self.cash))
            .map(|&total| binomial(total as u64 + n_traders as u64 - 1, n_traders as u64 - 1))
            .product()
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// One market configuration: `n[j][a]` shares and `k[j]` cash units per trader.
///
/// Ordering is lexicographic on the flattened occupations
/// `(n[0][0], .., n[N-1][L-1], k[0], .., k[N-1])`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    n_share_types: usize,
    shares: Vec<u32>,
    cash: Vec<u32>,
}

impl BasisState {
    /// Builds a state from per-trader share rows and cash.
    pub fn new(shares: Vec<Vec<u32>>, cash: Vec<u32>) -> Result<Self> {
        if shares.len() != cash.len() {
            return Err(Error::Dimension(format!(
                "{} share rows but {} cash entries",
                shares.len(),
                cash.len()
            )));
        }
        let l = shares.first().map_or(0, Vec::len);
        if shares.iter().any(|row| row.len() != l) {
            return Err(Error::Dimension("ragged share rows".into()));
        }
        Ok(Self {
            n_share_types: l,
            shares: shares.into_iter().flatten().collect(),
            cash,
        })
    }

    pub(crate) fn from_flat(n_share_types: usize, shares: Vec<u32>, cash: Vec<u32>) -> Self {
        debug_assert_eq!(shares.len(), n_share_types * cash.len());
        Self {
            n_share_types,
            shares,
            cash,
        }
    }

    pub fn n_traders(&self) -> usize {
        self.cash.len()
    }

    pub fn n_share_types(&self) -> usize {
        self.n_share_types
    }

    #[inline]
    pub fn shares(&self, trader: usize, share: usize) -> u32 {
        self.shares[trader * self.n_share_types + share]
    }

    #[inline]
    pub fn cash(&self, trader: usize) -> u32 {
        self.cash[trader]
    }

    pub fn shares_of(&self, trader: usize) -> &[u32] {
        let l = self.n_share_types;
        &self.shares[trader * l..(trader + 1) * l]
    }

    pub fn share_rows(&self) -> Vec<Vec<u32>> {
        self.shares
            .chunks(self.n_share_types.max(1))
            .map(<[u32]>::to_vec)
            .collect()
    }

    pub fn cash_vec(&self) -> &[u32] {
        &self.cash
    }

    pub(crate) fn shares_mut(&mut self, trader: usize, share: usize) -> &mut u32 {
        &mut self.shares[trader * self.n_share_types + share]
    }

    pub(crate) fn cash_mut(&mut self, trader: usize) -> &mut u32 {
        &mut self.cash[trader]
    }

    /// Conserved totals of this state.
    pub fn sector_key(&self) -> SectorKey {
        let shares = (0..self.n_share_types)
            .map(|a| (0..self.n_traders()).map(|j| self.shares(j, a)).sum())
            .collect();
        SectorKey {
            shares,
            cash: self.cash.iter().sum(),
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n=[")?;
        for (j, row) in self.shares.chunks(self.n_share_types.max(1)).enumerate() {
            if j > 0 {
                write!(f, ";")?;
            }
            let cells: Vec<String> = row.iter().map(u32::to_string).collect();
            write!(f, "{}", cells.join(","))?;
        }
        let cash: Vec<String> = self.cash.iter().map(u32::to_string).collect();
        write!(f, "] k=[{}]", cash.join(","))
    }
}

/// Free energy `E_F = sum_{j,a} w_{j,a} n_{j,a} + sum_j w_j k_j`.
pub fn free_energy(cfg: &MarketConfig, s: &BasisState) -> Result<f64> {
    cfg.check_state(s)?;
    Ok(free_energy_unchecked(cfg, s))
}

fn free_energy_unchecked(cfg: &MarketConfig, s: &BasisState) -> f64 {
    let mut e = 0.0;
    for j in 0..cfg.n_traders {
        for a in 0..cfg.n_share_types {
            e += cfg.omega_share[j][a] * s.shares(j, a) as f64;
        }
        e += cfg.omega_cash[j] * s.cash(j) as f64;
    }
    e
}

/// Cash plus price-weighted holdings of `trader`.
pub fn portfolio_value(s: &BasisState, prices: &[u32], trader: usize) -> Result<u64> {
    if trader >= s.n_traders() {
        return Err(Error::IndexOutOfRange {
            what: "trader",
            index: trader,
            limit: s.n_traders(),
        });
    }
    if prices.len() != s.n_share_types() {
        return Err(Error::Dimension(format!(
            "{} prices for {} share types",
            prices.len(),
            s.n_share_types()
        )));
    }
    let held: u64 = prices
        .iter()
        .zip(s.shares_of(trader))
        .map(|(&p, &n)| p as u64 * n as u64)
        .sum();
    Ok(held + s.cash(trader) as u64)
}

/// Index lookup over an ordered list of number states.
pub trait StateSpace {
    fn dim(&self) -> usize;
    fn state(&self, i: usize) -> &BasisState;
    fn index_of(&self, s: &BasisState) -> Option<usize>;
    fn energy(&self, i: usize) -> f64;
    fn states(&self) -> &[BasisState];
    fn energies(&self) -> &[f64];
}

#[derive(Debug, Clone)]
struct StateTable {
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
    energies: Vec<f64>,
}

impl StateTable {
    fn new(cfg: &MarketConfig, mut states: Vec<BasisState>) -> Self {
        states.sort();
        states.dedup();
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let energies = states.iter().map(|s| free_energy_unchecked(cfg, s)).collect();
        Self {
            states,
            index,
            energies,
        }
    }
}

macro_rules! impl_state_space {
    ($ty:ty) => {
        impl StateSpace for $ty {
            fn dim(&self) -> usize {
                self.table.states.len()
            }
            fn state(&self, i: usize) -> &BasisState {
                &self.table.states[i]
            }
            fn index_of(&self, s: &BasisState) -> Option<usize> {
                self.table.index.get(s).copied()
            }
            fn energy(&self, i: usize) -> f64 {
                self.table.energies[i]
            }
            fn states(&self) -> &[BasisState] {
                &self.table.states
            }
            fn energies(&self) -> &[f64] {
                &self.table.energies
            }
        }
    };
}

/// Complete, lexicographically ordered basis of one conservation sector.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    key: SectorKey,
    n_traders: usize,
    n_share_types: usize,
    table: StateTable,
}

impl_state_space!(SectorBasis);

impl SectorBasis {
    pub fn key(&self) -> &SectorKey {
        &self.key
    }

    pub fn n_traders(&self) -> usize {
        self.n_traders
    }

    pub fn n_share_types(&self) -> usize {
        self.n_share_types
    }

    pub fn contains(&self, s: &BasisState) -> bool {
        self.table.index.contains_key(s)
    }

    /// Index of `s`, or an error naming the state.
    pub fn require(&self, s: &BasisState) -> Result<usize> {
        self.index_of(s).ok_or_else(|| Error::StateNotInBasis(s.to_string()))
    }
}

/// Union of several sectors, used to check that the Hamiltonian never mixes them.
#[derive(Debug, Clone)]
pub struct MultiSectorBasis {
    keys: Vec<SectorKey>,
    table: StateTable,
}

impl_state_space!(MultiSectorBasis);

impl MultiSectorBasis {
    pub fn new(cfg: &MarketConfig, keys: &[SectorKey]) -> Result<Self> {
        let mut states = Vec::new();
        for key in keys {
            states.extend(sector_states(cfg, key)?);
        }
        let mut keys = keys.to_vec();
        keys.sort();
        keys.dedup();
        Ok(Self {
            keys,
            table: StateTable::new(cfg, states),
        })
    }

    pub fn keys(&self) -> &[SectorKey] {
        &self.keys
    }
}

/// All weak compositions of `total` into `parts` nonnegative integers, lexicographic.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first);
            rec(remaining - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn sector_states(cfg: &MarketConfig, key: &SectorKey) -> Result<Vec<BasisState>> {
    let (n, l) = (cfg.n_traders, cfg.n_share_types);
    if key.shares.len() != l {
        return Err(Error::Dimension(format!(
            "sector lists {} share totals for {} share types",
            key.shares.len(),
            l
        )));
    }
    if n == 0 {
        return Err(Error::Dimension("market has no traders".into()));
    }
    let per_share: Vec<Vec<Vec<u32>>> = key.shares.iter().map(|&t| compositions(t, n)).collect();
    let cash_splits = compositions(key.cash, n);

    // Odometer over one composition per share type.
    let mut states = Vec::new();
    let mut pick = vec![0usize; l];
    loop {
        let mut shares = vec![0u32; n * l];
        for (a, &c) in pick.iter().enumerate() {
            for j in 0..n {
                shares[j * l + a] = per_share[a][c][j];
            }
        }
        for cash in &cash_splits {
            states.push(BasisState::from_flat(l, shares.clone(), cash.clone()));
        }
        let mut a = l;
        loop {
            if a == 0 {
                return Ok(states);
            }
            a -= 1;
            pick[a] += 1;
            if pick[a] < per_share[a].len() {
                break;
            }
            pick[a] = 0;
        }
    }
}

/// Enumerates the sector basis with cached free energies.
pub fn enumerate_sector(cfg: &MarketConfig, key: &SectorKey) -> Result<SectorBasis> {
    let states = sector_states(cfg, key)?;
    Ok(SectorBasis {
        key: key.clone(),
        n_traders: cfg.n_traders,
        n_share_types: cfg.n_share_types,
        table: StateTable::new(cfg, states),
    })
}

/// Piecewise-constant integer prices on intervals `[k h, (k+1) h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTrajectory {
    step: f64,
    prices: Vec<Vec<u32>>,
}

impl PriceTrajectory {
    /// `prices[k][a]` is the price of share `a` during interval `k`.
    pub fn new(step: f64, prices: Vec<Vec<u32>>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Trajectory(format!(
                "transaction time h = {step} must be positive"
            )));
        }
        if prices.is_empty() {
            return Err(Error::Trajectory("at least one price interval is required".into()));
        }
        let l = prices[0].len();
        if l == 0 || prices.iter().any(|row| row.len() != l) {
            return Err(Error::Trajectory("price rows must share one nonzero width".into()));
        }
        Ok(Self { step, prices })
    }

    /// Same prices on every one of `intervals` intervals.
    pub fn constant(step: f64, prices: Vec<u32>, intervals: usize) -> Result<Self> {
        Self::new(step, vec![prices; intervals.max(1)])
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_intervals(&self) -> usize {
        self.prices.len()
    }

    pub fn n_share_types(&self) -> usize {
        self.prices[0].len()
    }

    pub fn row(&self, k: usize) -> &[u32] {
        &self.prices[k]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.prices
    }

    /// Start time `t_k = k h`.
    pub fn boundary(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// End of the simulated window, `M h`.
    pub fn duration(&self) -> f64 {
        self.boundary(self.n_intervals())
    }

    pub fn is_constant(&self) -> bool {
        self.prices.windows(2).all(|w| w[0] == w[1])
    }

    /// Interval holding `t`; the right end `M h` belongs to the last interval.
    pub fn interval_at(&self, t: f64) -> Result<usize> {
        let end = self.duration();
        if !(t >= 0.0 && t <= end * (1.0 + 1e-14)) {
            return Err(Error::TimeOutOfRange { t, end });
        }
        Ok(((t / self.step).floor() as usize).min(self.n_intervals() - 1))
    }

    /// Prices in force at `t`.
    pub fn prices_at(&self, t: f64) -> Result<&[u32]> {
        Ok(self.row(self.interval_at(t)?))
    }

    pub(crate) fn check_market(&self, cfg: &MarketConfig) -> Result<()> {
        if self.n_share_types() != cfg.n_share_types {
            return Err(Error::Trajectory(format!(
                "trajectory has {} price columns for {} share types",
                self.n_share_types(),
                cfg.n_share_types
            )));
        }
        Ok(())
    }
}

/// Complex amplitudes over a sector basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<SectorBasis>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(basis: Arc<SectorBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, amplitudes })
    }

    /// The number state `s` as a unit vector.
    pub fn basis_state(basis: Arc<SectorBasis>, s: &BasisState) -> Result<Self> {
        let i = basis.require(s)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn amplitude_of(&self, s: &BasisState) -> Result<Complex64> {
        Ok(self.amplitudes[self.basis.require(s)?])
    }

    /// `|<s|psi>|^2`.
    pub fn probability_of(&self, s: &BasisState) -> Result<f64> {
        Ok(self.amplitude_of(s)?.norm_sqr())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }
}
