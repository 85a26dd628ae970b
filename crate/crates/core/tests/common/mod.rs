//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use num_complex::Complex64;
use qmarket::{BasisState, MarketConfig, PriceTrajectory, SectorBasis, SectorKey, StateSpace};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two traders, one share type, share frequencies 1 and 2, cash 0.3 and 0.5, p = 0.1.
pub fn six_state_config(lambda: f64) -> MarketConfig {
    MarketConfig::new(vec![vec![1.0], vec![2.0]], vec![0.3, 0.5], lambda).with_coupling(0, 1, 0, 0.1)
}

pub fn six_state_key() -> SectorKey {
    SectorKey::new(vec![1], 2)
}

/// Two-trader, one-share-type state `n = (n1, n2)`, `k = (k1, k2)`.
pub fn st2(n: [u32; 2], k: [u32; 2]) -> BasisState {
    BasisState::new(vec![vec![n[0]], vec![n[1]]], k.to_vec()).unwrap()
}

/// Three traders in a chain: 1-2 and 2-3 trade, 1-3 do not.
pub fn chain_config(lambda: f64) -> MarketConfig {
    MarketConfig::new(vec![vec![1.0], vec![1.7], vec![2.3]], vec![0.3, 0.45, 0.6], lambda)
        .with_coupling(0, 1, 0, 0.12)
        .with_coupling(1, 2, 0, 0.2)
}

pub fn st3(n: [u32; 3], k: [u32; 3]) -> BasisState {
    BasisState::new(vec![vec![n[0]], vec![n[1]], vec![n[2]]], k.to_vec()).unwrap()
}

pub fn random_market(rng: &mut impl Rng, max_traders: usize, max_shares: usize) -> MarketConfig {
    let n = rng.random_range(2..=max_traders);
    let l = rng.random_range(1..=max_shares);
    let omega_share = (0..n)
        .map(|_| (0..l).map(|_| rng.random_range(0.5..2.5)).collect())
        .collect();
    let omega_cash = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let mut cfg = MarketConfig::new(omega_share, omega_cash, rng.random_range(0.01..0.3));
    for i in 0..n {
        for j in i + 1..n {
            for a in 0..l {
                if rng.random_bool(0.75) {
                    cfg = cfg.with_coupling(i, j, a, rng.random_range(0.05..0.5));
                }
            }
        }
    }
    cfg.validate().unwrap()
}

pub fn random_key(rng: &mut impl Rng, cfg: &MarketConfig, max_per_type: u32, max_cash: u32) -> SectorKey {
    SectorKey::new(
        (0..cfg.n_share_types)
            .map(|_| rng.random_range(0..=max_per_type))
            .collect(),
        rng.random_range(0..=max_cash),
    )
}

pub fn random_trajectory(rng: &mut impl Rng, l: usize, m: usize, max_price: u32, step: f64) -> PriceTrajectory {
    let rows = (0..m)
        .map(|_| (0..l).map(|_| rng.random_range(0..=max_price)).collect())
        .collect();
    PriceTrajectory::new(step, rows).unwrap()
}

pub fn random_state<'a>(rng: &mut impl Rng, basis: &'a SectorBasis) -> &'a BasisState {
    &basis.states()[rng.random_range(0..basis.dim())]
}

/// Occupation-number modes of one state: shares `(j, a)` then cash `j`.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Modes(Vec<u32>);

impl Modes {
    fn of(s: &BasisState) -> Self {
        let mut v: Vec<u32> = s.share_rows().into_iter().flatten().collect();
        v.extend_from_slice(s.cash_vec());
        Self(v)
    }

    fn lower(&mut self, mode: usize) -> f64 {
        if self.0[mode] == 0 {
            return 0.0;
        }
        let amp = (self.0[mode] as f64).sqrt();
        self.0[mode] -= 1;
        amp
    }

    fn raise(&mut self, mode: usize) -> f64 {
        self.0[mode] += 1;
        (self.0[mode] as f64).sqrt()
    }
}

/// Interaction Hamiltonian from single-quantum ladder operators:
/// `sum_{i != j, a} p_ij (T + T^dag)` with `T = a_i^dag a_j c_i^P (c_j^dag)^P`.
pub fn ladder_interaction(cfg: &MarketConfig, basis: &SectorBasis, prices: &[u32]) -> Vec<Vec<Complex64>> {
    let dim = basis.dim();
    let (n, l) = (cfg.n_traders, cfg.n_share_types);
    let index: HashMap<Modes, usize> = basis
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| (Modes::of(s), i))
        .collect();
    let mut t = vec![vec![Complex64::default(); dim]; dim];
    for (col, s) in basis.states().iter().enumerate() {
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                for (a, &price) in prices.iter().enumerate().take(l) {
                    let p = cfg.coupling(i, j, a);
                    if p == 0.0 {
                        continue;
                    }
                    let mut m = Modes::of(s);
                    let mut amp = 1.0;
                    for _ in 0..price {
                        amp *= m.raise(n * l + j);
                    }
                    for _ in 0..price {
                        amp *= m.lower(n * l + i);
                    }
                    amp *= m.lower(j * l + a);
                    amp *= m.raise(i * l + a);
                    if amp == 0.0 {
                        continue;
                    }
                    let row = *index.get(&m).expect("ladder image stays in sector");
                    t[row][col] += p * amp;
                }
            }
        }
    }
    let mut h = vec![vec![Complex64::default(); dim]; dim];
    for r in 0..dim {
        for c in 0..dim {
            h[r][c] = t[r][c] + t[c][r].conj();
        }
    }
    h
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of a complex integrand on `[a, b]`.
pub fn simpson<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    if b <= a {
        return Complex64::default();
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Quadrature over `[0, t]` split at every multiple of `step`; the integrand
/// receives the interval index so one-sided prices are unambiguous.
pub fn simpson_piecewise<F: Fn(usize, f64) -> Complex64>(f: F, t: f64, step: f64, tol: f64) -> Complex64 {
    let mut acc = Complex64::default();
    let mut k = 0;
    while (k as f64) * step < t {
        let a = k as f64 * step;
        let b = ((k + 1) as f64 * step).min(t);
        acc += simpson(|s| f(k, s), a, b, tol);
        k += 1;
    }
    acc
}
