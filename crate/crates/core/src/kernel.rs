//! Exponential polynomials `sum_r g_r t^{m_r} e^{i w_r t}` with exact integration.
//!
//! With piecewise-constant prices every integrand met in the perturbation
//! series and in the semiclassical integrals is of this form on each price
//! interval, so nested time integrals are evaluated in closed form.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerm {
    pub coeff: Complex64,
    pub freq: f64,
    pub power: u32,
}

/// Exponential polynomial in `t`.
///
/// Frequencies closer than `freq_tol` are treated as equal, and frequencies
/// below it as exactly zero, so removable singularities in `1/w` never form.
/// With a finite `horizon` the kernel is only evaluated on `|t| <= horizon`,
/// and terms with `|w| horizon` small are integrated through the Taylor series
/// of `e^{iwt}` instead of dividing by `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPolyKernel {
    terms: Vec<KernelTerm>,
    freq_tol: f64,
    horizon: f64,
}

/// Largest `|w| horizon` integrated by series.
const SERIES_RADIUS: f64 = 0.5;

impl ExpPolyKernel {
    pub fn zero(freq_tol: f64) -> Self {
        Self {
            terms: Vec::new(),
            freq_tol,
            horizon: f64::INFINITY,
        }
    }

    pub fn constant(c: Complex64, freq_tol: f64) -> Self {
        Self::exp(c, 0.0, freq_tol)
    }

    /// `c e^{i w t}`.
    pub fn exp(c: Complex64, freq: f64, freq_tol: f64) -> Self {
        Self::from_terms(
            vec![KernelTerm {
                coeff: c,
                freq,
                power: 0,
            }],
            freq_tol,
        )
    }

    pub fn from_terms(terms: Vec<KernelTerm>, freq_tol: f64) -> Self {
        let mut k = Self {
            terms,
            freq_tol,
            horizon: f64::INFINITY,
        };
        k.canonicalize();
        k
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon.abs();
        self
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    pub fn freq_tol(&self) -> f64 {
        self.freq_tol
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_power(&self) -> u32 {
        self.terms.iter().map(|t| t.power).max().unwrap_or(0)
    }

    fn canonicalize(&mut self) {
        let tol = self.freq_tol;
        for t in &mut self.terms {
            if t.freq.abs() <= tol {
                t.freq = 0.0;
            }
        }
        self.terms
            .sort_by(|a, b| a.freq.total_cmp(&b.freq).then(a.power.cmp(&b.power)));
        let mut merged: Vec<KernelTerm> = Vec::with_capacity(self.terms.len());
        // Cluster nearby frequencies onto the first member of the cluster.
        let mut anchor = f64::NAN;
        for mut t in self.terms.drain(..) {
            if (t.freq - anchor).abs() <= tol {
                t.freq = anchor;
            } else {
                anchor = t.freq;
            }
            match merged
                .iter_mut()
                .rev()
                .take_while(|m| m.freq == t.freq)
                .find(|m| m.power == t.power)
            {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != ZERO);
        merged.sort_by(|a, b| a.freq.total_cmp(&b.freq).then(a.power.cmp(&b.power)));
        self.terms = merged;
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|term| {
                let poly = if term.power == 0 {
                    1.0
                } else {
                    t.powi(term.power as i32)
                };
                term.coeff * poly * Complex64::from_polar(1.0, term.freq * t)
            })
            .sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == ZERO {
            return Self::zero(self.freq_tol).with_horizon(self.horizon);
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| KernelTerm {
                    coeff: t.coeff * c,
                    ..*t
                })
                .collect(),
            freq_tol: self.freq_tol,
            horizon: self.horizon,
        }
    }

    /// Multiplies by `e^{i w t}`.
    pub fn shift(&self, freq: f64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| KernelTerm {
                    freq: t.freq + freq,
                    ..*t
                })
                .collect(),
            self.freq_tol,
        )
        .with_horizon(self.horizon)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(terms, self.freq_tol.max(other.freq_tol)).with_horizon(self.horizon.min(other.horizon))
    }

    /// In-place `self += c * other * e^{i w t}`; the workhorse of the Dyson recursion.
    pub fn add_scaled_shifted(&mut self, other: &Self, c: Complex64, freq: f64) {
        if c == ZERO {
            return;
        }
        self.terms.extend(other.terms.iter().map(|t| KernelTerm {
            coeff: t.coeff * c,
            freq: t.freq + freq,
            power: t.power,
        }));
        self.canonicalize();
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(KernelTerm {
                    coeff: a.coeff * b.coeff,
                    freq: a.freq + b.freq,
                    power: a.power + b.power,
                });
            }
        }
        Self::from_terms(terms, self.freq_tol.max(other.freq_tol)).with_horizon(self.horizon.min(other.horizon))
    }

    /// An antiderivative `F` with `F' = self` on `|t| <= horizon`.
    pub fn antiderivative(&self) -> Self {
        let mut terms = Vec::new();
        for term in &self.terms {
            let m = term.power;
            if term.freq == 0.0 {
                terms.push(KernelTerm {
                    coeff: term.coeff / (m as f64 + 1.0),
                    freq: 0.0,
                    power: m + 1,
                });
                continue;
            }
            if term.freq.abs() * self.horizon <= SERIES_RADIUS {
                // int t^m e^{iwt} = sum_n (iw)^n t^{m+n+1} / (n! (m+n+1)), truncated below
                // rounding on |t| <= horizon.
                let iw = Complex64::new(0.0, term.freq);
                let x = term.freq.abs() * self.horizon;
                let (mut c, mut bound) = (term.coeff, 1.0);
                for n in 0u32.. {
                    terms.push(KernelTerm {
                        coeff: c / f64::from(m + n + 1),
                        freq: 0.0,
                        power: m + n + 1,
                    });
                    bound *= x / f64::from(n + 1);
                    if bound < 1e-17 {
                        break;
                    }
                    c = c * iw / f64::from(n + 1);
                }
                continue;
            }
            // int t^m e^{iwt} = e^{iwt} sum_r (-1)^r m!/(m-r)! t^{m-r} / (iw)^{r+1}
            let iw = Complex64::new(0.0, term.freq);
            let mut c = term.coeff / iw;
            for r in 0..=m {
                terms.push(KernelTerm {
                    coeff: c,
                    freq: term.freq,
                    power: m - r,
                });
                c = -c * (m - r) as f64 / iw;
            }
        }
        Self::from_terms(terms, self.freq_tol).with_horizon(self.horizon)
    }

    /// `K(t) = int_a^t self(s) ds` as a kernel in `t`.
    pub fn integrate_from(&self, a: f64) -> Self {
        let anti = self.antiderivative();
        let at_a = anti.eval(a);
        anti.add(&Self::constant(-at_a, self.freq_tol).with_horizon(self.horizon))
    }

    /// `int_a^b self(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> Complex64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }
}
