//! Second-order Heisenberg-picture shifts with classical prices.
//!
//! Prices `P_a(t)` are external functions of time here, taken piecewise
//! constant from a [`PriceTrajectory`] and held at the last row beyond
//! `M h`. For an ordered trader pair `(j, l)` and share type `a`
//!
//! ```text
//! Theta0(t) = (w_j - w_l) int_0^t P_a - (w_{j,a} - w_{l,a}) t
//! Theta1(t) = int_0^t e^{-i Theta0}
//! Theta2(t) = int_0^t Theta1 e^{-i Theta0}
//! Theta3(t) = int_0^t P_a Theta1 e^{-i Theta0}
//! ```
//!
//! Theta0 is piecewise linear. With `phi(tau) = int_0^tau e^{-i nu u} du` on
//! an interval of slope `nu`, `Theta1` grows by `e^{-i Theta0} phi` and
//! `Theta2` by `Theta1 e^{-i Theta0} phi + e^{-2 i Theta0} phi^2 / 2`, so every
//! Theta is exact and stays accurate for small detunings.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{BasisState, MarketConfig, PriceTrajectory};
use crate::operators::{falling_ratio, rising_ratio};

/// `Theta0..Theta3` of one `(j, l, a)` triple at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSet {
    pub theta0: f64,
    pub theta1: Complex64,
    pub theta2: Complex64,
    pub theta3: Complex64,
}

#[derive(Debug, Clone)]
struct Segment {
    start: f64,
    price: f64,
    theta0_start: f64,
    slope: f64,
    theta1_start: Complex64,
    theta2_start: Complex64,
    theta3_start: Complex64,
}

/// `int_0^tau e^{-i w u} du`, accurate for any `w tau`.
fn phase_integral(w: f64, tau: f64) -> Complex64 {
    let x = 0.5 * w * tau;
    let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    Complex64::from_polar(tau * sinc, -x)
}

impl Segment {
    /// `(e^{-i Theta0}, Theta1, Theta2 - Theta2(start))` at `t` inside the segment.
    fn local(&self, t: f64) -> (Complex64, Complex64, Complex64) {
        let tau = t - self.start;
        let e0 = Complex64::from_polar(1.0, -self.theta0_start);
        let phi = phase_integral(self.slope, tau);
        let theta1 = self.theta1_start + e0 * phi;
        let d2 = self.theta1_start * e0 * phi + e0 * e0 * phi * phi / 2.0;
        (
            Complex64::from_polar(1.0, -(self.theta0_start + self.slope * tau)),
            theta1,
            d2,
        )
    }

    fn at(&self, t: f64) -> ThetaSet {
        let (_, theta1, d2) = self.local(t);
        ThetaSet {
            theta0: self.theta0_start + self.slope * (t - self.start),
            theta1,
            theta2: self.theta2_start + d2,
            theta3: self.theta3_start + self.price * d2,
        }
    }
}

/// The Theta functions of one `(j, l, a)` triple, evaluable at any `t >= 0`.
#[derive(Debug, Clone)]
pub struct ThetaIntegrals {
    step: f64,
    segments: Vec<Segment>,
}

fn check_indices(cfg: &MarketConfig, j: usize, l: usize, share: usize) -> Result<()> {
    for (what, index, limit) in [
        ("trader", j, cfg.n_traders),
        ("trader", l, cfg.n_traders),
        ("share type", share, cfg.n_share_types),
    ] {
        if index >= limit {
            return Err(Error::IndexOutOfRange { what, index, limit });
        }
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::TimeOutOfRange { t, end: f64::INFINITY });
    }
    Ok(())
}

impl ThetaIntegrals {
    pub fn new(cfg: &MarketConfig, trajectory: &PriceTrajectory, j: usize, l: usize, share: usize) -> Result<Self> {
        check_indices(cfg, j, l, share)?;
        trajectory.check_market(cfg)?;
        let d_cash = cfg.omega_cash[j] - cfg.omega_cash[l];
        let d_share = cfg.omega_share[j][share] - cfg.omega_share[l][share];
        let step = trajectory.step();

        let mut segments: Vec<Segment> = Vec::with_capacity(trajectory.n_intervals());
        for k in 0..trajectory.n_intervals() {
            let price = trajectory.row(k)[share] as f64;
            let mut seg = Segment {
                start: trajectory.boundary(k),
                price,
                theta0_start: 0.0,
                slope: d_cash * price - d_share,
                theta1_start: Complex64::default(),
                theta2_start: Complex64::default(),
                theta3_start: Complex64::default(),
            };
            if let Some(prev) = segments.last() {
                let end = prev.at(seg.start);
                seg.theta0_start = end.theta0;
                seg.theta1_start = end.theta1;
                seg.theta2_start = end.theta2;
                seg.theta3_start = end.theta3;
            }
            segments.push(seg);
        }
        Ok(Self { step, segments })
    }

    fn segment(&self, t: f64) -> &Segment {
        let k = ((t / self.step).floor() as usize).min(self.segments.len() - 1);
        &self.segments[k]
    }

    pub fn at(&self, t: f64) -> Result<ThetaSet> {
        check_time(t)?;
        Ok(self.segment(t).at(t))
    }

    /// `Theta1(t) e^{-i Theta0(t)}`, the derivative of `Theta2`.
    pub fn theta2_rate(&self, t: f64) -> Result<Complex64> {
        check_time(t)?;
        let (phase, theta1, _) = self.segment(t).local(t);
        Ok(theta1 * phase)
    }
}

/// `Theta0..Theta3` for trader pair `(j, l)` and share type `share` at time `t`.
pub fn theta_integrals(
    cfg: &MarketConfig,
    trajectory: &PriceTrajectory,
    j: usize,
    l: usize,
    share: usize,
    t: f64,
) -> Result<ThetaSet> {
    ThetaIntegrals::new(cfg, trajectory, j, l, share)?.at(t)
}

/// `M_{j,l}` and its antisymmetrization `M_{j,l} - M_{l,j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairWeight {
    pub m: f64,
    pub m_tilde: f64,
}

fn directed_weight(n_j: u32, n_l: u32, k_j: u32, k_l: u32, price: u32) -> f64 {
    let (nj, nl) = (n_j as f64, n_l as f64);
    let rj = rising_ratio(k_j, price);
    nj * nl * rj * rising_ratio(k_l, price) - nj * (1.0 + nl) * rj * falling_ratio(k_l, price)
}

/// Pair weight from share counts `n`, cash `k` and the price of the share type.
pub fn pair_weight(n: [u32; 2], k: [u32; 2], price: u32) -> PairWeight {
    let m = directed_weight(n[0], n[1], k[0], k[1], price);
    let m_rev = directed_weight(n[1], n[0], k[1], k[0], price);
    PairWeight { m, m_tilde: m - m_rev }
}

/// Second-order shifts of trader `l`'s holdings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationShift {
    pub delta_n: Vec<f64>,
    pub delta_k: f64,
}

struct PairTerm {
    weight: f64,
    theta: ThetaIntegrals,
    share: usize,
}

/// Every nonzero `8 lambda^2 p_{l,j}^2 Mtilde_{j,l}` term for trader `l`.
fn pair_terms(
    cfg: &MarketConfig,
    initial: &BasisState,
    trajectory: &PriceTrajectory,
    l: usize,
) -> Result<Vec<PairTerm>> {
    cfg.check_state(initial)?;
    trajectory.check_market(cfg)?;
    if l >= cfg.n_traders {
        return Err(Error::IndexOutOfRange {
            what: "trader",
            index: l,
            limit: cfg.n_traders,
        });
    }
    let prices0 = trajectory.row(0);
    let mut out = Vec::new();
    for j in (0..cfg.n_traders).filter(|&j| j != l) {
        for (a, &price0) in prices0.iter().enumerate() {
            let p = cfg.coupling(l, j, a);
            if p == 0.0 || cfg.lambda == 0.0 {
                continue;
            }
            let w = pair_weight(
                [initial.shares(j, a), initial.shares(l, a)],
                [initial.cash(j), initial.cash(l)],
                price0,
            );
            if w.m_tilde == 0.0 {
                continue;
            }
            out.push(PairTerm {
                weight: 8.0 * cfg.lambda * cfg.lambda * p * p * w.m_tilde,
                theta: ThetaIntegrals::new(cfg, trajectory, j, l, a)?,
                share: a,
            });
        }
    }
    Ok(out)
}

/// `delta n_{l,a}(t) = -8 lambda^2 sum_j p^2 Mtilde Re Theta2` and
/// `delta k_l(t) = 8 lambda^2 sum_{j,a} p^2 Mtilde Re Theta3`.
///
/// Pair weights use the prices in force at `t = 0`.
pub fn delta_occupations(
    cfg: &MarketConfig,
    initial: &BasisState,
    trajectory: &PriceTrajectory,
    l: usize,
    t: f64,
) -> Result<OccupationShift> {
    check_time(t)?;
    let mut shift = OccupationShift {
        delta_n: vec![0.0; cfg.n_share_types],
        delta_k: 0.0,
    };
    for term in pair_terms(cfg, initial, trajectory, l)? {
        let th = term.theta.at(t)?;
        shift.delta_n[term.share] -= term.weight * th.theta2.re;
        shift.delta_k += term.weight * th.theta3.re;
    }
    Ok(shift)
}

/// Prices at `t >= 0`, held at the last row beyond the trajectory.
pub fn classical_prices(trajectory: &PriceTrajectory, t: f64) -> Result<&[u32]> {
    check_time(t)?;
    let k = ((t / trajectory.step()).floor() as usize).min(trajectory.n_intervals() - 1);
    Ok(trajectory.row(k))
}

/// `Pi_l(t) = Pi_l(0) + sum_a n_{l,a} (P_a(t) - P_a(0)) + sum_a P_a(t) dn_{l,a}(t) + dk_l(t)`.
pub fn portfolio_evolution(
    cfg: &MarketConfig,
    initial: &BasisState,
    trajectory: &PriceTrajectory,
    l: usize,
    t: f64,
) -> Result<f64> {
    let shift = delta_occupations(cfg, initial, trajectory, l, t)?;
    let (p0, pt) = (trajectory.row(0), classical_prices(trajectory, t)?);
    let mut value = initial.cash(l) as f64;
    for a in 0..cfg.n_share_types {
        let n = initial.shares(l, a) as f64;
        value += n * p0[a] as f64 + n * (pt[a] as f64 - p0[a] as f64) + pt[a] as f64 * shift.delta_n[a];
    }
    Ok(value + shift.delta_k)
}

/// Value of `sum_a P_a(t) d(dn_{l,a})/dt + d(dk_l)/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SumRuleResidual {
    Smooth {
        residual: f64,
    },
    /// At a price jump the derivative of `dk` is one-sided.
    Jump {
        left: f64,
        right: f64,
    },
}

impl SumRuleResidual {
    pub fn max_abs(self) -> f64 {
        match self {
            Self::Smooth { residual } => residual.abs(),
            Self::Jump { left, right } => left.abs().max(right.abs()),
        }
    }
}

/// Sum-rule residual from the analytic integrands, never finite differences.
pub fn sum_rule_residual(
    cfg: &MarketConfig,
    initial: &BasisState,
    trajectory: &PriceTrajectory,
    l: usize,
    t: f64,
) -> Result<SumRuleResidual> {
    check_time(t)?;
    let terms = pair_terms(cfg, initial, trajectory, l)?;
    let residual = |price_row: &[u32]| -> Result<f64> {
        let mut dn = vec![0.0; cfg.n_share_types];
        let mut dk = 0.0;
        for term in &terms {
            let rate = term.theta.theta2_rate(t)?;
            dn[term.share] -= term.weight * rate.re;
            dk += term.weight * (price_row[term.share] as f64 * rate).re;
        }
        Ok(dn.iter().zip(price_row).map(|(d, &p)| p as f64 * d).sum::<f64>() + dk)
    };

    let step = trajectory.step();
    let k = (t / step).round();
    let at_boundary = (t - k * step).abs() <= 1e-12 * step.max(t);
    let k = k as usize;
    if at_boundary && k >= 1 && k < trajectory.n_intervals() && trajectory.row(k - 1) != trajectory.row(k) {
        return Ok(SumRuleResidual::Jump {
            left: residual(trajectory.row(k - 1))?,
            right: residual(trajectory.row(k))?,
        });
    }
    Ok(SumRuleResidual::Smooth {
        residual: residual(classical_prices(trajectory, t)?)?,
    })
}
