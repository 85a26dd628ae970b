//! Time-dependent perturbation theory in the interaction strength `lambda`.
//!
//! The wave function is expanded as
//! `Psi(t) = sum_F c_F(t) e^{-i E_F t} phi_F` with
//! `c_F = c_F^(0) + lambda c_F^(1) + lambda^2 c_F^(2) + ...` and
//!
//! ```text
//! d/dt c^(j)_F'(t) = -i sum_F c^(j-1)_F(t) e^{i (E_F' - E_F) t} h_{F',F}(t),
//! ```
//!
//! where `h_{F,G}(t) = <phi_F, H_I(t) phi_G>` is constant on each price
//! interval. Closed forms are provided for first order, second order with
//! constant prices and second order on a three-interval trajectory; the
//! generic-order solver integrates the hierarchy exactly with
//! [`ExpPolyKernel`]s.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::ExpPolyKernel;
use crate::market::{portfolio_value, BasisState, MarketConfig, PriceTrajectory, SectorBasis, StateSpace, StateVector};
use crate::operators::{apply_exchange, build_hi, ExchangeMove, SparseHermitian};
use crate::propagator::Propagator;

/// Rows of `H_I` as `(column, value)` lists, shared between intervals with equal prices.
type InteractionRows = Arc<Vec<Vec<(usize, f64)>>>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default cap on `dim * order` for the generic Dyson solver.
pub const DEFAULT_DYSON_CAP: usize = 20_000;

/// Below this relative size an energy difference counts as a resonance.
const DEGENERACY_REL: f64 = 1e-8;

/// Threshold `1e-8 * max(1, max |E_F|)` under which energy gaps are treated as zero.
pub fn degeneracy_threshold<B: StateSpace>(basis: &B) -> f64 {
    let scale = basis.energies().iter().fold(1.0_f64, |m, e| m.max(e.abs()));
    DEGENERACY_REL * scale
}

/// `E_to - E_from`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGap(pub f64);

impl EnergyGap {
    pub fn between<B: StateSpace>(basis: &B, from: usize, to: usize) -> Self {
        Self(basis.energy(to) - basis.energy(from))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn reversed(self) -> Self {
        Self(-self.0)
    }
}

/// Perturbative order used when aggregating probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    First,
    Second,
    Dyson(usize),
    Exact,
}

impl Order {
    /// Highest power of `lambda` kept, `None` for exact propagation.
    pub fn truncation(self) -> Option<usize> {
        match self {
            Order::First => Some(1),
            Order::Second => Some(2),
            Order::Dyson(n) => Some(n),
            Order::Exact => None,
        }
    }
}

/// `h_{F,G} = <phi_F, H_I phi_G>` at fixed prices, summed over all exchanges taking `G` to `F`.
pub fn h_element(
    cfg: &MarketConfig,
    basis: &SectorBasis,
    f: &BasisState,
    g: &BasisState,
    prices: &[u32],
) -> Result<f64> {
    basis.require(f)?;
    basis.require(g)?;
    if prices.len() != cfg.n_share_types {
        return Err(Error::Dimension(format!(
            "{} prices for {} share types",
            prices.len(),
            cfg.n_share_types
        )));
    }
    let mut h = 0.0;
    for m in ExchangeMove::all(cfg.n_traders, cfg.n_share_types) {
        let p = cfg.coupling(m.buyer, m.seller, m.share);
        if p == 0.0 {
            continue;
        }
        if let Some((target, gamma)) = apply_exchange(g, m, prices[m.share]) {
            if &target == f {
                h += 2.0 * p * gamma;
            }
        }
    }
    Ok(h)
}

/// `int_a^b e^{i w s} ds = e^{i w a} e^{i w d/2} 2 sin(w d/2) / w`, with `d = b - a`.
fn phase_integral(w: f64, a: f64, b: f64, thr: f64) -> Complex64 {
    let d = b - a;
    if w.abs() <= thr {
        return Complex64::new(d, 0.0);
    }
    Complex64::from_polar(2.0 * (w * d / 2.0).sin() / w, w * (a + d / 2.0))
}

/// Per-interval `h_{Ff,F0}(t_k)` along the trajectory.
fn h_along(
    cfg: &MarketConfig,
    basis: &SectorBasis,
    trajectory: &PriceTrajectory,
    f0: &BasisState,
    ff: &BasisState,
) -> Result<Vec<f64>> {
    trajectory.check_market(cfg)?;
    let mut cache: BTreeMap<&[u32], f64> = BTreeMap::new();
    let mut out = Vec::with_capacity(trajectory.n_intervals());
    for row in trajectory.rows() {
        let h = match cache.get(row.as_slice()) {
            Some(&h) => h,
            None => {
                let h = h_element(cfg, basis, ff, f0, row)?;
                cache.insert(row, h);
                h
            }
        };
        out.push(h);
    }
    Ok(out)
}

/// First-order coefficient `c^(1)_{Ff}(t)`, interval by interval in closed form.
///
/// A trailing partial interval is integrated up to `t`.
pub fn c1_coefficient(
    cfg: &MarketConfig,
    basis: &SectorBasis,
    trajectory: &PriceTrajectory,
    f0: &BasisState,
    ff: &BasisState,
    t: f64,
) -> Result<Complex64> {
    let last = trajectory.interval_at(t)?;
    let hs = h_along(cfg, basis, trajectory, f0, ff)?;
    let de = EnergyGap::between(basis, basis.require(f0)?, basis.require(ff)?).value();
    let thr = degeneracy_threshold(basis);
    let mut acc = ZERO;
    for (k, &h) in hs.iter().enumerate().take(last + 1) {
        if h == 0.0 {
            continue;
        }
        let a = trajectory.boundary(k);
        let b = if k == last { t } else { trajectory.boundary(k + 1) };
        acc += h * phase_integral(de, a, b, thr);
    }
    Ok(-I * acc)
}

/// First-order transition probability `lambda^2 |c^(1)_{Ff}(t)|^2` for `Ff != F0`.
pub fn p1_transition(
    cfg: &MarketConfig,
    basis: &SectorBasis,
    trajectory: &PriceTrajectory,
    f0: &BasisState,
    ff: &BasisState,
    t: f64,
) -> Result<f64> {
    if f0 == ff {
        return Err(Error::SameState);
    }
    let c1 = c1_coefficient(cfg, basis, trajectory, f0, ff, t)?;
    Ok(cfg.lambda * cfg.lambda * c1.norm_sqr())
}

/// First-order probability at `t = M h` written as one interval factor times a phased sum:
/// `lambda^2 (sin(dE h/2)/(dE/2))^2 |sum_k h_k e^{i t_k dE}|^2`.
pub fn p1_interval_sum(
    cfg: &MarketConfig,
    basis: &SectorBasis,
    trajectory: &PriceTrajectory,
    f0: &BasisState,
    ff: &BasisState,
) -> Result<f64> {
    if f0 == ff {
        return Err(Error::SameState);
    }
    let hs = h_along(cfg, basis, trajectory, f0, ff)?;
    let de = EnergyGap::between(basis, basis.require(f0)?, basis.require(ff)?).value();
    let step = trajectory.step();
    let factor = if de.abs() <= degeneracy_threshold(basis) {
        step
    } else {
        (de * step / 2.0).sin() / (de / 2.0)
    };
    let sum: Complex64 = hs
        .iter()
        .enumerate()
        .map(|(k, &h)| h * Complex64::from_polar(1.0, trajectory.boundary(k) * de))
        .sum();
    Ok(cfg.lambda * cfg.lambda * factor * factor * sum.norm_sqr())
}

/// Long-time behaviour of the constant-price first-order probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum GrowthDiagnostic {
    /// `P(t) = coefficient * t^2` exactly.
    Resonant { t2_coefficient: f64 },
    /// `P(t) <= bound` for all `t`.
    OffResonant { bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoldenRule {
    pub delta_e: f64,
    pub h: f64,
    /// Transition probability per unit time; nonzero only for degenerate pairs.
    pub rate: f64,
    pub diagnostic: GrowthDiagnostic,
}

/// Golden-rule rate on a discrete spectrum: `2 pi lambda^2 |h|^2` when the
/// free energies coincide, zero otherwise.
pub fn golden_rule_rate(
    cfg: &MarketConfig,
    basis: &SectorBasis,
    f0: &BasisState,
    ff: &BasisState,
    prices: &[u32],
) -> Result<GoldenRule> {
    let h = h_element(cfg, basis, ff, f0, prices)?;
    let de = EnergyGap::between(basis, basis.require(f0)?, basis.require(ff)?).value();
    let l2h2 = cfg.lambda * cfg.lambda * h * h;
    Ok(if de.abs() <= degeneracy_threshold(basis) {
        GoldenRule {
            delta_e: de,
            h,
            rate: 2.0 * PI * l2h2,
            diagnostic: GrowthDiagnostic::Resonant { t2_coefficient: l2h2 },
        }
    } else {
        GoldenRule {
            delta_e: de,
            h,
            rate: 0.0,
            diagnostic: GrowthDiagnostic::OffResonant {
                bound: l2h2 * (2.0 / de).powi(2),
            },
        }
    })
}

/// `g(x) = (e^{ixt} - 1)/x`, `g(0) = it`.
fn phase_ratio(x: f64, t: f64, thr: f64) -> Complex64 {
    if x.abs() <= thr {
        return Complex64::new(0.0, t);
    }
    // e^{iθ} - 1 = 2i sin(θ/2) e^{iθ/2} avoids cancellation for small θ.
    I * Complex64::from_polar(2.0 * (x * t / 2.0).sin() / x, x * t / 2.0)
}

/// `g'(x)`, with a Taylor series when `|x t|` is small.
fn phase_ratio_derivative(x: f64, t: f64, thr: f64) -> Complex64 {
    let xt = x * t;
    if x.abs() <= thr || xt.abs() < 0.1 {
        // g'(x) = sum_{n>=2} (it)^n (n-1) x^{n-2} / n!
        let it = Complex64::new(0.0, t);
        let mut term = it * it / 2.0; // (it)^n x^{n-2} / n! at n = 2
        let mut sum = term;
        for n in 3..=24u32 {
            term = term * it * x / n as f64;
            sum += term * (n - 1) as f64;
        }
        return sum;
    }
    let e = Complex64::from_polar(1.0, xt);
    (I * t * x * e - (e - 1.0)) / (x * x)
}

/// `E_{F,F0,Ff}(t)` with every removable singularity resolved analytically.
fn second_order_weight(e0: f64, ef: f64, e_mid: f64, t: f64, thr: f64) -> Complex64 {
    let a = e_mid - e0;
    let b = ef - e_mid;
    let c = ef - e0;
    if a.abs() <= thr {
        phase_ratio_derivative(b, t, thr)
    } else if (a * t).abs() < 0.1 {
        // Near-degenerate: the divided difference cancels, integrate directly.
        -ExpPolyKernel::exp(Complex64::new(1.0, 0.0), a, thr)
            .with_horizon(t)
            .integrate_from(0.0)
            .shift(b)
            .integral(0.0, t)
    } else {
        (phase_ratio(c, t, thr) - phase_ratio(b, t, thr)) / a
    }
}

/// Second-order coefficient `c^(2)_{Ff}(t)` for constant prices:
/// `sum_F h_{Ff,F} h_{F,F0} E_{F,F0,Ff}(t)`.
///
/// The `(-i)^2` of the double time integral is already absorbed into `E`, so
/// `lambda^2` times the result is the order-`lambda^2` amplitude.
pub fn c2_constant(
    cfg: &MarketConfig,
    basis: &SectorBasis,
    f0: &BasisState,
    ff: &BasisState,
    prices: &[u32],
    t: f64,
) -> Result<Complex64> {
    let i0 = basis.require(f0)?;
    let i_f = basis.require(ff)?;
    let hi = build_hi(cfg, basis, prices)?;
    let thr = degeneracy_threshold(basis);
    let (e0, ef) = (basis.energy(i0), basis.energy(i_f));
    let mut acc = ZERO;
    for (mid, _, h_mid0) in hi.iter().filter(|&(_, c, _)| c == i0) {
        let h_fmid = hi.get(i_f, mid);
        if h_fmid == ZERO {
            continue;
        }
        acc += h_fmid * h_mid0 * second_order_weight(e0, ef, basis.energy(mid), t, thr);
    }
    Ok(acc)
}

/// `I_j(F,G;t) = int_{t_j}^t e^{i (E_F - E_G) s} ds`.
fn i_fn(de: f64, tj: f64, t: f64, thr: f64) -> Complex64 {
    phase_integral(de, tj, t, thr)
}

/// `J_j(F,G,L;t) = int_{t_j}^t I_j(F,G;s) e^{i (E_L - E_F) s} ds`, integrated in
/// local time so nearly degenerate gaps keep full precision.
fn j_fn(de_fg: f64, de_lf: f64, tj: f64, t: f64, thr: f64) -> Complex64 {
    let span = t - tj;
    let inner = ExpPolyKernel::exp(Complex64::new(1.0, 0.0), de_fg, thr)
        .with_horizon(span)
        .integrate_from(0.0);
    Complex64::from_polar(1.0, (de_fg + de_lf) * tj) * inner.shift(de_lf).integral(0.0, span)
}

/// Second-order coefficient at `t = 3h` on a three-interval trajectory,
/// assembled from the interval functions `I_j` and `J_j`.
pub fn c2_piecewise_m3(
    cfg: &MarketConfig,
    basis: &SectorBasis,
    trajectory: &PriceTrajectory,
    f0: &BasisState,
    ff: &BasisState,
) -> Result<Complex64> {
    if trajectory.n_intervals() != 3 {
        return Err(Error::IntervalCount {
            expected: 3,
            actual: trajectory.n_intervals(),
        });
    }
    trajectory.check_market(cfg)?;
    let i0 = basis.require(f0)?;
    let i_f = basis.require(ff)?;
    let his: Vec<SparseHermitian> = trajectory
        .rows()
        .iter()
        .map(|row| build_hi(cfg, basis, row))
        .collect::<Result<_>>()?;
    let thr = degeneracy_threshold(basis);
    let t: [f64; 4] = [0, 1, 2, 3].map(|k| trajectory.boundary(k));
    let e = |i: usize| basis.energy(i);
    let (e0, ef) = (e(i0), e(i_f));

    // Intermediate states reachable from F0 in any interval.
    let mut mids: Vec<usize> = his
        .iter()
        .flat_map(|hi| hi.iter().filter(|&(_, c, _)| c == i0).map(|(r, _, _)| r))
        .collect();
    mids.sort_unstable();
    mids.dedup();

    let mut acc = ZERO;
    for mid in mids {
        let em = e(mid);
        let h_m0 = |k: usize| his[k].get(mid, i0);
        let h_fm = |k: usize| his[k].get(i_f, mid);
        let i_m0 = |j: usize, upto: f64| i_fn(em - e0, t[j], upto, thr);
        let i_fm = |j: usize, upto: f64| i_fn(ef - em, t[j], upto, thr);
        let j_fn_at = |j: usize, upto: f64| j_fn(em - e0, ef - em, t[j], upto, thr);

        let first = h_fm(0) * h_m0(0) * j_fn_at(0, t[1]);
        let second = h_fm(1) * (h_m0(0) * i_m0(0, t[1]) * i_fm(1, t[2]) + h_m0(1) * j_fn_at(1, t[2]));
        let third = h_fm(2)
            * ((h_m0(0) * i_m0(0, t[1]) + h_m0(1) * i_m0(1, t[2])) * i_fm(2, t[3]) + h_m0(2) * j_fn_at(2, t[3]));
        acc += first + second + third;
    }
    Ok(-acc)
}

/// Coefficients `c^(j)_F(t)` for every order `j <= n` and every basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct DysonCoefficients {
    pub order: usize,
    pub lambda: f64,
    pub time: f64,
    /// `coeffs[j][F]`.
    pub coeffs: Vec<Vec<Complex64>>,
}

impl DysonCoefficients {
    /// `sum_{j <= upto} lambda^j c^(j)_F`.
    pub fn amplitude(&self, state: usize, upto: usize) -> Complex64 {
        let mut acc = ZERO;
        let mut lp = 1.0;
        for j in 0..=upto.min(self.order) {
            acc += lp * self.coeffs[j][state];
            lp *= self.lambda;
        }
        acc
    }

    /// Truncated-order probability `|sum_{j<=upto} lambda^j c^(j)_F|^2`.
    pub fn probability(&self, state: usize, upto: usize) -> f64 {
        self.amplitude(state, upto).norm_sqr()
    }

    /// `<phi_F, Psi(t)>` implied by the truncated series, free phase included.
    pub fn schrodinger_amplitude<B: StateSpace>(&self, basis: &B, state: usize, upto: usize) -> Complex64 {
        self.amplitude(state, upto) * Complex64::from_polar(1.0, -basis.energy(state) * self.time)
    }
}

/// Exact-in-time solution of the Dyson hierarchy along a whole trajectory.
///
/// On each interval `c^(j)_F` is stored as an exponential polynomial, so it
/// can be evaluated at any `t` in the window without re-solving.
#[derive(Debug, Clone)]
pub struct DysonSeries {
    order: usize,
    lambda: f64,
    trajectory: PriceTrajectory,
    /// `kernels[k][j][F]` on interval `k`.
    kernels: Vec<Vec<Vec<ExpPolyKernel>>>,
}

impl DysonSeries {
    pub fn new(
        cfg: &MarketConfig,
        basis: &SectorBasis,
        trajectory: &PriceTrajectory,
        f0: &BasisState,
        order: usize,
    ) -> Result<Self> {
        Self::with_cap(cfg, basis, trajectory, f0, order, DEFAULT_DYSON_CAP)
    }

    pub fn with_cap(
        cfg: &MarketConfig,
        basis: &SectorBasis,
        trajectory: &PriceTrajectory,
        f0: &BasisState,
        order: usize,
        cap: usize,
    ) -> Result<Self> {
        trajectory.check_market(cfg)?;
        let dim = basis.dim();
        let work = dim.saturating_mul(order.max(1));
        if work > cap {
            return Err(Error::BasisTooLarge { work, cap });
        }
        let i0 = basis.require(f0)?;
        let thr = degeneracy_threshold(basis);
        let energies = basis.energies();

        let mut hi_cache: BTreeMap<&[u32], InteractionRows> = BTreeMap::new();
        let mut start: Vec<Vec<Complex64>> = vec![vec![ZERO; dim]; order + 1];
        start[0][i0] = Complex64::new(1.0, 0.0);

        let mut kernels = Vec::with_capacity(trajectory.n_intervals());
        for k in 0..trajectory.n_intervals() {
            let row = trajectory.row(k);
            let rows = match hi_cache.get(row) {
                Some(r) => Arc::clone(r),
                None => {
                    let hi = build_hi(cfg, basis, row)?;
                    let mut rows = vec![Vec::new(); dim];
                    for (r, c, v) in hi.iter() {
                        rows[r].push((c, v.re));
                    }
                    let rows = Arc::new(rows);
                    hi_cache.insert(row, Arc::clone(&rows));
                    rows
                }
            };
            // Kernels run in local time `t - t_k` on `[0, h]`.
            let tk = trajectory.boundary(k);
            let step = trajectory.step();
            let constant = |c: Complex64| ExpPolyKernel::constant(c, thr).with_horizon(step);
            let mut per_order: Vec<Vec<ExpPolyKernel>> = Vec::with_capacity(order + 1);
            per_order.push(start[0].iter().map(|&c| constant(c)).collect());
            for j in 1..=order {
                let prev = &per_order[j - 1];
                let level: Vec<ExpPolyKernel> = (0..dim)
                    .map(|fp| {
                        let mut integrand = ExpPolyKernel::zero(thr).with_horizon(step);
                        for &(f, h) in &rows[fp] {
                            if !prev[f].is_zero() {
                                let de = energies[fp] - energies[f];
                                integrand.add_scaled_shifted(&prev[f], Complex64::from_polar(h, de * tk), de);
                            }
                        }
                        let base = constant(start[j][fp]);
                        if integrand.is_zero() {
                            base
                        } else {
                            base.add(&integrand.integrate_from(0.0).scale(-I))
                        }
                    })
                    .collect();
                per_order.push(level);
            }
            for (j, level) in per_order.iter().enumerate() {
                for (f, kern) in level.iter().enumerate() {
                    start[j][f] = kern.eval(step);
                }
            }
            kernels.push(per_order);
        }
        Ok(Self {
            order,
            lambda: cfg.lambda,
            trajectory: trajectory.clone(),
            kernels,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn at(&self, t: f64) -> Result<DysonCoefficients> {
        let k = self.trajectory.interval_at(t)?;
        let local = t - self.trajectory.boundary(k);
        let coeffs = self.kernels[k]
            .iter()
            .map(|level| level.iter().map(|kern| kern.eval(local)).collect())
            .collect();
        Ok(DysonCoefficients {
            order: self.order,
            lambda: self.lambda,
            time: t,
            coeffs,
        })
    }
}

/// All coefficients up to order `n` at time `t`.
pub fn dyson_coefficients(
    cfg: &MarketConfig,
    basis: &SectorBasis,
    trajectory: &PriceTrajectory,
    f0: &BasisState,
    order: usize,
    t: f64,
) -> Result<DysonCoefficients> {
    trajectory.interval_at(t)?;
    DysonSeries::new(cfg, basis, trajectory, f0, order)?.at(t)
}

/// `lambda * max|h| * t`: the expansion is only trustworthy while this is small.
pub fn validity_indicator(
    cfg: &MarketConfig,
    basis: &SectorBasis,
    trajectory: &PriceTrajectory,
    t: f64,
) -> Result<f64> {
    let mut max_h = 0.0_f64;
    for row in trajectory.rows() {
        max_h = max_h.max(build_hi(cfg, basis, row)?.max_abs());
    }
    Ok(cfg.lambda * max_h * t)
}

/// Probabilities of every basis state at time `t` under the chosen order.
pub fn state_probabilities(
    cfg: &MarketConfig,
    basis: &Arc<SectorBasis>,
    trajectory: &PriceTrajectory,
    f0: &BasisState,
    t: f64,
    order: Order,
) -> Result<Vec<f64>> {
    let i0 = basis.require(f0)?;
    match order {
        Order::Exact => {
            let prop = Propagator::new(cfg, Arc::clone(basis), trajectory)?;
            let psi0 = StateVector::basis_state(Arc::clone(basis), f0)?;
            Ok(prop
                .evolution(&psi0)?
                .amplitudes_at(t)?
                .iter()
                .map(Complex64::norm_sqr)
                .collect())
        }
        Order::First => basis
            .states()
            .iter()
            .enumerate()
            .map(|(g, s)| {
                let c0 = if g == i0 { 1.0 } else { 0.0 };
                let c1 = c1_coefficient(cfg, basis, trajectory, f0, s, t)?;
                Ok((c0 + cfg.lambda * c1).norm_sqr())
            })
            .collect(),
        Order::Second | Order::Dyson(_) => {
            let n = order.truncation().expect("finite order");
            let coeffs = dyson_coefficients(cfg, basis, trajectory, f0, n, t)?;
            Ok((0..basis.dim()).map(|g| coeffs.probability(g, n)).collect())
        }
    }
}

/// Probability that `trader`'s portfolio is worth `target` at time `t`,
/// summed over every final state with that portfolio value.
#[allow(clippy::too_many_arguments)]
pub fn portfolio_transition_probability(
    cfg: &MarketConfig,
    basis: &Arc<SectorBasis>,
    trajectory: &PriceTrajectory,
    f0: &BasisState,
    trader: usize,
    target: u64,
    t: f64,
    order: Order,
) -> Result<f64> {
    Ok(portfolio_distribution(cfg, basis, trajectory, f0, trader, t, order)?
        .get(&target)
        .copied()
        .unwrap_or(0.0))
}

/// Probability for every achievable portfolio value of `trader` at time `t`.
pub fn portfolio_distribution(
    cfg: &MarketConfig,
    basis: &Arc<SectorBasis>,
    trajectory: &PriceTrajectory,
    f0: &BasisState,
    trader: usize,
    t: f64,
    order: Order,
) -> Result<BTreeMap<u64, f64>> {
    let prices = trajectory.prices_at(t)?;
    let probs = state_probabilities(cfg, basis, trajectory, f0, t, order)?;
    let mut out = BTreeMap::new();
    for (s, p) in basis.states().iter().zip(probs) {
        *out.entry(portfolio_value(s, prices, trader)?).or_insert(0.0) += p;
    }
    Ok(out)
}
