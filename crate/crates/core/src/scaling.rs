//! Scaling law λ(t) = t^(−1−ν) exp(−ε₀ sin log t) and the algebra of
//! log-periodic coefficient tables Σ ε̃ⁿ h_{n,m} t^((n−2m)i).

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const DEFAULT_NU: f64 = 3.5;
pub const DEFAULT_EPS0: f64 = 0.02;
pub const DEFAULT_T0: f64 = 0.1;
pub const DEFAULT_N_MAX: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingParams {
    pub nu: f64,
    pub eps0: f64,
    pub t0: f64,
}

impl Default for ScalingParams {
    fn default() -> Self {
        Self { nu: DEFAULT_NU, eps0: DEFAULT_EPS0, t0: DEFAULT_T0 }
    }
}

impl ScalingParams {
    pub fn new(nu: f64, eps0: f64, t0: f64) -> Result<Self> {
        let p = Self { nu, eps0, t0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 1.0) {
            return Err(Error::Validation(format!("nu = {} must exceed 1", self.nu)));
        }
        if !(self.t0 > 0.0 && self.t0 < 0.5) {
            return Err(Error::Validation(format!("t0 = {} must lie in (0, 1/2)", self.t0)));
        }
        if !(self.eps0.is_finite() && self.eps0.abs() < 1.0) {
            return Err(Error::Validation(format!("|eps0| = {} must be below 1", self.eps0)));
        }
        Ok(())
    }

    /// Rejects configurations whose level `j` has ν̃_j ≤ 1.
    pub fn validate_level(&self, j: usize) -> Result<()> {
        let nt = self.nu_tilde(j);
        if nt <= 1.0 {
            return Err(Error::Validation(format!("nu_tilde_{j} = {nt} must exceed 1 (nu = {})", self.nu)));
        }
        Ok(())
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t > 0.0 && t < 0.5 {
            Ok(())
        } else {
            Err(Error::Domain(format!("t = {t} outside (0, 1/2)")))
        }
    }

    pub fn lambda_of(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.lambda_unchecked(t))
    }

    pub(crate) fn lambda_unchecked(&self, t: f64) -> f64 {
        t.powf(-1.0 - self.nu) * (-self.eps0 * t.ln().sin()).exp()
    }

    pub fn mu_of(&self, t: f64) -> Result<f64> {
        Ok(t * self.lambda_of(t)?)
    }

    pub fn kappa_of(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.kappa_unchecked(t))
    }

    pub(crate) fn kappa_unchecked(&self, t: f64) -> f64 {
        self.nu + self.eps0 * t.ln().cos()
    }

    /// t κ′(t) = −ε₀ sin log t.
    pub fn t_dkappa(&self, t: f64) -> f64 {
        -self.eps0 * t.ln().sin()
    }

    pub fn nu_eff(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        let l = t.ln();
        Ok(self.nu + self.eps0 * l.sin() / l)
    }

    /// ν̃_j = (j − 1/2)ν − 1/2.
    pub fn nu_tilde(&self, j: usize) -> f64 {
        (j as f64 - 0.5) * self.nu - 0.5
    }

    /// ε̃_j = (j/2 − 1/4)ε₀.
    pub fn eps_tilde(&self, j: usize) -> f64 {
        (j as f64 / 2.0 - 0.25) * self.eps0
    }

    /// κ as a table over base amplitude `eps`: ν + (ε₀/2)(t^i + t^(−i)).
    pub fn kappa_table(&self, eps: f64, n_max: usize) -> AdmissibleFn {
        let mut k = AdmissibleFn::constant(self.nu, eps, n_max);
        let h = if eps == 0.0 { 0.0 } else { self.eps0 / (2.0 * eps) };
        k.set(1, 0, Complex64::new(h, 0.0));
        k.set(1, 1, Complex64::new(h, 0.0));
        k
    }

    /// β_j(t) = (j − 1/2)κ(t) − 1/2 over base amplitude ε̃_j.
    pub fn beta_table(&self, j: usize, n_max: usize) -> AdmissibleFn {
        let c = j as f64 - 0.5;
        self.kappa_table(self.eps_tilde(j), n_max).scale(c).add_const(-0.5)
    }

    /// Comoving time τ(t) = ∫_t^{t₀} λ(s) ds, growing without bound as t → 0.
    pub fn tau_of(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        if t >= self.t0 {
            return Err(Error::Domain(format!("t = {t} is not below t0 = {}", self.t0)));
        }
        // In x = log s the integrand e^(−νx − ε₀ sin x) is smooth; panels of width ≤ 1/4.
        let (x0, x1) = (t.ln(), self.t0.ln());
        let panels = ((x1 - x0) * 4.0).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=panels).map(|k| x0 + (x1 - x0) * k as f64 / panels as f64).collect();
        let q = crate::quad::Composite::new(&breaks, 16);
        Ok(q.integrate(|x| (-self.nu * x - self.eps0 * x.sin()).exp()))
    }

    /// Inverse of `tau_of` by Newton iteration in log t.
    pub fn t_of_tau(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("tau = {tau} must be positive")));
        }
        let mut x = (self.nu * tau + self.t0.powf(-self.nu)).powf(-1.0 / self.nu).ln();
        for _ in 0..60 {
            let t = x.exp().min(self.t0 * (1.0 - 1e-15));
            let f = self.tau_of(t)? - tau;
            let step = f / (self.lambda_unchecked(t) * t);
            x += step;
            if step.abs() < 1e-15 {
                return Ok(x.exp());
            }
        }
        Err(Error::Numerical(format!("t(tau) did not converge at tau = {tau}")))
    }
}

/// Finite table Σ_{n ≤ N} Σ_{m ≤ n} ε̃ⁿ h_{n,m} t^((n−2m)i).
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleFn {
    eps_tilde: f64,
    n_max: usize,
    coeffs: Vec<Vec<Complex64>>,
}

impl AdmissibleFn {
    pub fn zero(eps_tilde: f64, n_max: usize) -> Self {
        let coeffs = (0..=n_max).map(|n| vec![Complex64::new(0.0, 0.0); n + 1]).collect();
        Self { eps_tilde, n_max, coeffs }
    }

    pub fn constant(c: f64, eps_tilde: f64, n_max: usize) -> Self {
        let mut a = Self::zero(eps_tilde, n_max);
        a.coeffs[0][0] = Complex64::new(c, 0.0);
        a
    }

    /// The single term t^(ki) at order |k|, i.e. coefficient ε̃^(−|k|) so that evaluation gives t^(ki).
    pub fn monomial(k: i32, eps_tilde: f64, n_max: usize) -> Result<Self> {
        let n = k.unsigned_abs() as usize;
        if n > n_max {
            return Err(Error::TruncationOverflow { order: n, n_max });
        }
        let mut a = Self::zero(eps_tilde, n_max);
        let m = ((n as i32 - k) / 2) as usize;
        a.coeffs[n][m] = Complex64::new(eps_tilde.powi(-(n as i32)), 0.0);
        Ok(a)
    }

    pub fn eps_tilde(&self) -> f64 {
        self.eps_tilde
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        if n > self.n_max || m > n {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[n][m]
        }
    }

    pub fn set(&mut self, n: usize, m: usize, h: Complex64) {
        self.coeffs[n][m] = h;
    }

    /// Highest n carrying a nonzero coefficient.
    pub fn order(&self) -> usize {
        (0..=self.n_max).rev().find(|&n| self.coeffs[n].iter().any(|h| h.norm() != 0.0)).unwrap_or(0)
    }

    fn check_compat(&self, o: &Self) -> Result<()> {
        if self.eps_tilde != o.eps_tilde {
            return Err(Error::Validation(format!("incompatible base amplitudes {} and {}", self.eps_tilde, o.eps_tilde)));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_compat(o)?;
        let n_max = self.n_max.max(o.n_max);
        let mut r = Self::zero(self.eps_tilde, n_max);
        for n in 0..=n_max {
            for m in 0..=n {
                r.coeffs[n][m] = self.get(n, m) + o.get(n, m);
            }
        }
        Ok(r)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut r = self.clone();
        r.coeffs.iter_mut().flatten().for_each(|h| *h *= c);
        r
    }

    pub fn add_const(&self, c: f64) -> Self {
        let mut r = self.clone();
        r.coeffs[0][0] += c;
        r
    }

    /// Product: orders add, exponent indices add.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check_compat(o)?;
        let n_max = self.n_max.max(o.n_max);
        let order = self.order() + o.order();
        if order > n_max {
            return Err(Error::TruncationOverflow { order, n_max });
        }
        let mut r = Self::zero(self.eps_tilde, n_max);
        for n1 in 0..=self.order() {
            for m1 in 0..=n1 {
                let a = self.coeffs[n1][m1];
                if a.norm() == 0.0 {
                    continue;
                }
                for n2 in 0..=o.order() {
                    for m2 in 0..=n2 {
                        r.coeffs[n1 + n2][m1 + m2] += a * o.coeffs[n2][m2];
                    }
                }
            }
        }
        Ok(r)
    }

    /// t∂_t: multiplies h_{n,m} by i(n − 2m).
    pub fn tdt(&self) -> Self {
        let mut r = self.clone();
        for (n, row) in r.coeffs.iter_mut().enumerate() {
            for (m, h) in row.iter_mut().enumerate() {
                *h *= Complex64::new(0.0, n as f64 - 2.0 * m as f64);
            }
        }
        r
    }

    /// Re-expresses the same function over a different base amplitude.
    pub fn rebase(&self, eps_new: f64) -> Self {
        let mut r = Self::zero(eps_new, self.n_max);
        r.coeffs[0][0] = self.coeffs[0][0];
        if eps_new != 0.0 {
            let ratio = self.eps_tilde / eps_new;
            let mut f = 1.0;
            for n in 1..=self.n_max {
                f *= ratio;
                for m in 0..=n {
                    r.coeffs[n][m] = self.coeffs[n][m] * f;
                }
            }
        }
        r
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let l = t.ln();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut p = 1.0;
        for n in 0..=self.n_max {
            for m in 0..=n {
                let k = n as f64 - 2.0 * m as f64;
                sum += self.coeffs[n][m] * p * Complex64::cis(k * l);
            }
            p *= self.eps_tilde;
        }
        sum
    }

    pub fn eval_re(&self, t: f64) -> f64 {
        self.eval(t).re
    }

    /// max over entries of |h_{n,m} − conj(h_{n,n−m})|.
    pub fn reality_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for n in 0..=self.n_max {
            for m in 0..=n {
                d = d.max((self.coeffs[n][m] - self.coeffs[n][n - m].conj()).norm());
            }
        }
        d
    }

    /// Σ_{n ≥ from} |ε̃|ⁿ Σ_m |h_{n,m}|.
    pub fn tail_norm(&self, from: usize) -> f64 {
        let mut s = 0.0;
        for n in from..=self.n_max {
            let w = self.eps_tilde.abs().powi(n as i32);
            s += w * self.coeffs[n].iter().map(|h| h.norm()).sum::<f64>();
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.tail_norm(0)
    }
}
