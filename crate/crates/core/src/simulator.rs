//! Evolution of v = Rε in the comoving frame (τ, R), driven by the cone error of the
//! approximate solution.
//!
//! With 𝒟 = ∂_τ + β(R∂_R − 1), β = κ′/κ and ℒ = −∂_R² − 5W⁴ the equation is the first-order
//! system 𝒟v = w, 𝒟w = −βw − ℒv + F with
//! F = κ⁻² χ(R/(ντ)) [5(u₂⁴ − u₀⁴)v + R N(u₂, v/R) − R e₂].
//! Spatially: 4th-order upwind-biased advection, centered 4th-order ℒ, odd reflection at
//! R = 0 and 3rd-order one-sided closures at the outflow edge. Classical RK4 in τ.

use crate::correction_two::SecondCorrection;
use crate::error::{Error, Result};
use crate::profile::{potential, w};
use crate::scaling::ScalingParams;
use crate::spectral::{bound_state_on_grid, chi, find_xi_d, forcing_slice, slice_breaks, ForcingSlice, ODE_TOL};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest admissible Courant number.
pub const CFL_MAX: f64 = 0.5;
const CHUNK: usize = 2048;

/// N(u, ε) = 10u³ε² + 10u²ε³ + 5uε⁴ + ε⁵, i.e. (u + ε)⁵ − u⁵ − 5u⁴ε.
pub fn nonlinearity(u: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    e2 * (10.0 * u * u * u + eps * (10.0 * u * u + eps * (5.0 * u + eps)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionState {
    pub tau: f64,
    /// v = Rε on R_j = j·dr.
    pub v: Vec<f64>,
    /// w = 𝒟v.
    pub w: Vec<f64>,
    pub dr: f64,
    pub cfl: f64,
}

impl EvolutionState {
    pub fn zero(tau: f64, n: usize, dr: f64, cfl: f64) -> Result<Self> {
        let s = Self { tau, v: vec![0.0; n + 1], w: vec![0.0; n + 1], dr, cfl };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dr > 0.0 && self.dr.is_finite()) {
            return Err(Error::Validation(format!("dr = {} must be positive", self.dr)));
        }
        if !(self.cfl > 0.0 && self.cfl <= CFL_MAX) {
            return Err(Error::Validation(format!("cfl = {} outside (0, {CFL_MAX}]", self.cfl)));
        }
        if self.v.len() != self.w.len() || self.v.len() < 6 {
            return Err(Error::Validation("v and w need equal length of at least 6".into()));
        }
        Ok(())
    }

    pub fn r_max(&self) -> f64 {
        (self.v.len() - 1) as f64 * self.dr
    }

    pub fn radius(&self, j: usize) -> f64 {
        j as f64 * self.dr
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().chain(&self.w).all(|x| x.is_finite())
    }
}

/// Time-dependent coefficient tables on the simulation grid, interpolated in τ.
pub struct Drive {
    taus: Vec<f64>,
    /// κ⁻²χ R e₂
    src: Vec<Vec<f64>>,
    /// κ⁻²χ · 5(u₂⁴ − u₀⁴)
    lin: Vec<Vec<f64>>,
    /// u₂
    u2: Vec<Vec<f64>>,
    /// κ⁻²χ
    cut: Vec<Vec<f64>>,
}

impl Drive {
    /// Tables at `taus` (ascending, at least 4, uniformly spaced) for grid spacing `dr`.
    pub fn build(sc: &SecondCorrection, taus: &[f64], n: usize, dr: f64) -> Result<Self> {
        if taus.len() < 4 || taus.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Validation("drive needs at least 4 ascending slice times".into()));
        }
        let p = &sc.params;
        let mut d = Self { taus: taus.to_vec(), src: vec![], lin: vec![], u2: vec![], cut: vec![] };
        for &tau in taus {
            let t = p.t_of_tau(tau)?;
            let l = p.lambda_of(t)?;
            let (mu, sl, ntau) = (t * l, l.sqrt(), p.nu * tau);
            let fs = forcing_slice(sc, tau)?;
            // u₂ − u₀ on the same panels; u₀ is added back exactly on the grid.
            let corr = ForcingSlice::from_fn(tau, slice_breaks(mu, ntau, sc.bump_width), |rr| {
                let r = rr / l;
                let u = if r < t { sc.interior_fields(t, r).map(|f| f.u) } else { sc.extend_beyond_cone(t, r) };
                u.map(|u| u - sl * w(rr)).unwrap_or(f64::NAN)
            });
            if corr.vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("profile correction not finite at tau = {tau}")));
            }
            let rows: Vec<[f64; 4]> = (0..=n)
                .into_par_iter()
                .map(|j| {
                    let rr = j as f64 * dr;
                    let c = chi(rr / ntau) / (l * l);
                    let u0 = sl * w(rr);
                    let u2 = u0 + corr.eval(rr);
                    [fs.eval(rr), c * 5.0 * (u2.powi(4) - u0.powi(4)), u2, c]
                })
                .collect();
            d.src.push(rows.iter().map(|r| r[0]).collect());
            d.lin.push(rows.iter().map(|r| r[1]).collect());
            d.u2.push(rows.iter().map(|r| r[2]).collect());
            d.cut.push(rows.iter().map(|r| r[3]).collect());
        }
        Ok(d)
    }

    fn len(&self) -> usize {
        self.src[0].len()
    }

    /// Four-point Lagrange stencil in τ (clamped at the ends of the table).
    fn stencil(&self, tau: f64) -> (usize, [f64; 4]) {
        let m = self.taus.len();
        let (a, b) = (self.taus[0], self.taus[m - 1]);
        let h = (b - a) / (m - 1) as f64;
        let x = ((tau - a) / h).clamp(0.0, (m - 1) as f64);
        let k = (x.floor() as usize).saturating_sub(1).min(m - 4);
        let s = x - k as f64;
        let wts = [
            -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
            s * (s - 2.0) * (s - 3.0) / 2.0,
            -s * (s - 1.0) * (s - 3.0) / 2.0,
            s * (s - 1.0) * (s - 2.0) / 6.0,
        ];
        (k, wts)
    }
}

fn interp(tab: &[Vec<f64>], k: usize, wts: &[f64; 4], j: usize) -> f64 {
    wts[0] * tab[k][j] + wts[1] * tab[k + 1][j] + wts[2] * tab[k + 2][j] + wts[3] * tab[k + 3][j]
}

/// The spatial operator together with its coefficient switches.
pub struct Evolution {
    /// None switches the comoving drift off (β ≡ 0).
    pub params: Option<ScalingParams>,
    pub potential: bool,
    pub drive: Option<Drive>,
    /// Unit-norm discrete mode on the grid; its component is removed after every step.
    pub bound: Option<Vec<f64>>,
}

impl Evolution {
    /// v_ττ = v_RR on the half line.
    pub fn free() -> Self {
        Self { params: None, potential: false, drive: None, bound: None }
    }

    /// Linear operator with drift and potential, no source.
    pub fn linear(params: ScalingParams) -> Self {
        Self { params: Some(params), potential: true, drive: None, bound: None }
    }

    /// β(τ) = κ′/κ = (1 + ν + ε₀ cos log t)/μ(t).
    pub fn beta(&self, tau: f64) -> Result<f64> {
        match &self.params {
            None => Ok(0.0),
            Some(p) => {
                let t = p.t_of_tau(tau)?;
                Ok((1.0 + p.kappa_of(t)?) / p.mu_of(t)?)
            }
        }
    }

    /// Attaches the normalized discrete mode sampled on `n + 1` points of spacing `dr`.
    pub fn with_bound_state(mut self, xi_d: f64, n: usize, dr: f64) -> Result<Self> {
        let mut phi = bound_state_on_grid(xi_d, dr, n, ODE_TOL)?;
        let norm = dot(&phi, &phi, dr).sqrt();
        phi.iter_mut().for_each(|x| *x /= norm);
        self.bound = Some(phi);
        Ok(self)
    }

    /// Largest admissible step for `state` at its current time.
    pub fn max_step(&self, state: &EvolutionState) -> Result<f64> {
        let b = self.beta(state.tau)?;
        Ok(state.cfl * state.dr / (1.0 + b * state.r_max()))
    }

    /// Right-hand side of ∂_τ(v, w).
    fn rhs(&self, tau: f64, v: &[f64], wv: &[f64], dr: f64, out_v: &mut [f64], out_w: &mut [f64]) -> Result<()> {
        let beta = self.beta(tau)?;
        let n = v.len() - 1;
        let drive = self.drive.as_ref().map(|d| (d, d.stencil(tau)));
        if let Some((d, _)) = &drive {
            if d.len() != v.len() {
                return Err(Error::Validation("drive tables do not match the grid".into()));
            }
        }
        let pot = self.potential;
        out_v.par_chunks_mut(CHUNK).zip(out_w.par_chunks_mut(CHUNK)).enumerate().for_each(|(c, (ov, ow))| {
            for (o, (dv, dw)) in ov.iter_mut().zip(ow.iter_mut()).enumerate() {
                let j = c * CHUNK + o;
                if j == 0 {
                    *dv = 0.0;
                    *dw = 0.0;
                    continue;
                }
                let rr = j as f64 * dr;
                let mut f = d2(v, j, n, dr);
                if pot {
                    f += potential(rr) * v[j];
                }
                if let Some((d, (k, wts))) = &drive {
                    let u = interp(&d.u2, *k, wts, j);
                    let eps = v[j] / rr;
                    f += interp(&d.lin, *k, wts, j) * v[j] + interp(&d.cut, *k, wts, j) * rr * nonlinearity(u, eps)
                        - interp(&d.src, *k, wts, j);
                }
                *dv = wv[j] - beta * (rr * d1_upwind(v, j, n, dr) - v[j]);
                *dw = -beta * rr * d1_upwind(wv, j, n, dr) + f;
            }
        });
        Ok(())
    }

    /// One RK4 step of size `dtau`.
    pub fn step(&self, state: &EvolutionState, dtau: f64) -> Result<EvolutionState> {
        state.validate()?;
        let lim = self.max_step(state)?;
        if !(dtau > 0.0) || dtau > lim * (1.0 + 1e-12) {
            return Err(Error::Validation(format!("step {dtau} violates the CFL limit {lim}")));
        }
        let n = state.v.len();
        let (h, tau) = (state.dr, state.tau);
        let mut k = vec![(vec![0.0; n], vec![0.0; n]); 4];
        let mut tv = vec![0.0; n];
        let mut tw = vec![0.0; n];
        let stages = [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)];
        for s in 0..4 {
            let (c, a) = stages[s];
            if s == 0 {
                tv.copy_from_slice(&state.v);
                tw.copy_from_slice(&state.w);
            } else {
                let (pv, pw) = &k[s - 1];
                for j in 0..n {
                    tv[j] = state.v[j] + a * dtau * pv[j];
                    tw[j] = state.w[j] + a * dtau * pw[j];
                }
            }
            let (kv, kw) = &mut k[s];
            self.rhs(tau + c * dtau, &tv, &tw, h, kv, kw)?;
        }
        let mut next = state.clone();
        next.tau = tau + dtau;
        for j in 0..n {
            next.v[j] += dtau / 6.0 * (k[0].0[j] + 2.0 * k[1].0[j] + 2.0 * k[2].0[j] + k[3].0[j]);
            next.w[j] += dtau / 6.0 * (k[0].1[j] + 2.0 * k[1].1[j] + 2.0 * k[2].1[j] + k[3].1[j]);
        }
        next.v[0] = 0.0;
        next.w[0] = 0.0;
        if let Some(phi) = &self.bound {
            for f in [&mut next.v, &mut next.w] {
                let c = dot(f, phi, h);
                f.iter_mut().zip(phi).for_each(|(x, p)| *x -= c * p);
            }
        }
        if !next.is_finite() {
            let vmax = state.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let wmax = state.w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            return Err(Error::Numerical(format!(
                "non-finite state after the step from tau = {tau} (dtau = {dtau}, max|v| = {vmax:e}, max|w| = {wmax:e}, n = {n})"
            )));
        }
        Ok(next)
    }

    /// Advances to `tau_end` with the largest admissible steps.
    pub fn advance(&self, mut state: EvolutionState, tau_end: f64) -> Result<(EvolutionState, usize)> {
        let mut steps = 0;
        while state.tau < tau_end - 1e-12 * tau_end.abs().max(1.0) {
            let dt = self.max_step(&state)?.min(tau_end - state.tau);
            state = self.step(&state, dt)?;
            steps += 1;
        }
        Ok((state, steps))
    }
}

fn at(f: &[f64], i: isize) -> f64 {
    // odd reflection through R = 0
    if i < 0 {
        -f[(-i) as usize]
    } else {
        f[i as usize]
    }
}

/// ∂_R biased against the outward drift; 4th order inside, 3rd order at the last point.
fn d1_upwind(f: &[f64], j: usize, n: usize, h: f64) -> f64 {
    if j == n {
        return (11.0 * f[n] - 18.0 * f[n - 1] + 9.0 * f[n - 2] - 2.0 * f[n - 3]) / (6.0 * h);
    }
    let i = j as isize;
    (-at(f, i - 3) + 6.0 * at(f, i - 2) - 18.0 * at(f, i - 1) + 10.0 * f[j] + 3.0 * f[j + 1]) / (12.0 * h)
}

/// Centered 4th-order ∂_R; one-sided 3rd order on the last two points.
fn d1_centered(f: &[f64], j: usize, n: usize, h: f64) -> f64 {
    if j + 1 >= n {
        return d1_upwind(f, j, n, h);
    }
    let i = j as isize;
    (at(f, i - 2) - 8.0 * at(f, i - 1) + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * h)
}

/// ∂_R²: centered 4th order, 3rd-order one-sided closures on the last two points.
fn d2(f: &[f64], j: usize, n: usize, h: f64) -> f64 {
    let h2 = 12.0 * h * h;
    if j == n {
        return (35.0 * f[n] - 104.0 * f[n - 1] + 114.0 * f[n - 2] - 56.0 * f[n - 3] + 11.0 * f[n - 4]) / h2;
    }
    if j == n - 1 {
        return (11.0 * f[n] - 20.0 * f[n - 1] + 6.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    }
    let i = j as isize;
    (-at(f, i - 2) + 16.0 * at(f, i - 1) - 30.0 * f[j] + 16.0 * f[j + 1] - f[j + 2]) / h2
}

fn dot(a: &[f64], b: &[f64], h: f64) -> f64 {
    let n = a.len() - 1;
    h * (a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() - 0.5 * (a[0] * b[0] + a[n] * b[n]))
}

/// ½∫(w² + v_R²) dR, conserved by the free system.
pub fn free_energy(s: &EvolutionState) -> f64 {
    let n = s.v.len() - 1;
    let dens: Vec<f64> = (0..=n).map(|j| s.w[j].powi(2) + d1_centered(&s.v, j, n, s.dr).powi(2)).collect();
    0.5 * dot(&dens, &vec![1.0; n + 1], s.dr)
}

/// Physical energy of ε split at the light cone R = μ:
/// κ⁻¹∫ [w² + (v_R − v/R)²] dR over R ≤ μ and R > μ.
pub fn cone_energies(s: &EvolutionState, kappa: f64, mu: f64) -> (f64, f64) {
    let n = s.v.len() - 1;
    let h = s.dr;
    let dens: Vec<f64> = (0..=n)
        .map(|j| {
            let g = if j == 0 { 0.0 } else { d1_centered(&s.v, j, n, h) - s.v[j] / (j as f64 * h) };
            s.w[j] * s.w[j] + g * g
        })
        .collect();
    let (mut e_in, mut e_out) = (0.0, 0.0);
    for j in 0..n {
        let piece = 0.5 * h * (dens[j] + dens[j + 1]) / kappa;
        if (j + 1) as f64 * h <= mu {
            e_in += piece;
        } else {
            e_out += piece;
        }
    }
    (e_in, e_out)
}

/// ε(t, 0) = ∂_R v(τ, 0) and sup_R |ε|.
pub fn eps_origin_and_sup(s: &EvolutionState) -> (f64, f64) {
    let n = s.v.len() - 1;
    let e0 = d1_centered(&s.v, 0, n, s.dr);
    let sup = (1..=n).map(|j| (s.v[j] / (j as f64 * s.dr)).abs()).fold(e0.abs(), f64::max);
    (e0, sup)
}

/// Amplitude read off at the centre: λ_fit = (u(t, 0)/W(0))² with u = u₀ + ε.
pub fn lambda_fit(p: &ScalingParams, t: f64, eps_origin: f64) -> Result<f64> {
    let l = p.lambda_of(t)?;
    Ok((l.sqrt() * w(0.0) + eps_origin).powi(2) / w(0.0).powi(2))
}

/// Least-squares slope of log y against log x, negated; None without enough positive data.
pub fn decay_exponent(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx).powi(2), a.1 + (p.0 - mx) * (p.1 - my)));
    (sxx > 0.0).then(|| -sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub tau0: f64,
    pub tau1: f64,
    pub dr: f64,
    pub cfl: f64,
    /// R_max = r_max_factor·ν·τ₁.
    pub r_max_factor: f64,
    /// Number of τ-slices of the coefficient tables.
    pub slices: usize,
    /// Number of trajectory records after the initial one.
    pub records: usize,
    /// Remove the unstable discrete mode after every step.
    pub project_bound_state: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { tau0: 5.0, tau1: 100.0, dr: 0.1, cfl: 0.5, r_max_factor: 3.0, slices: 16, records: 200, project_bound_state: true }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, why: &str| Err(Error::Validation(format!("simulate.{k}: {why}")));
        if !(self.tau0 > 0.0 && self.tau1 > self.tau0) {
            return bad("tau1", "need 0 < tau0 < tau1");
        }
        if !(self.dr > 0.0 && self.dr.is_finite()) {
            return bad("dr", "must be positive");
        }
        if !(self.cfl > 0.0 && self.cfl <= CFL_MAX) {
            return bad("cfl", "must lie in (0, 0.5]");
        }
        if !(self.r_max_factor >= 2.0) {
            return bad("r_max_factor", "must be at least 2 to contain the cutoff support");
        }
        if self.slices < 4 {
            return bad("slices", "need at least 4");
        }
        if self.records < 3 {
            return bad("records", "need at least 3");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub tau: f64,
    pub t: f64,
    pub energy_in: f64,
    pub energy_out: f64,
    pub sup_eps: f64,
    pub lambda_fit: f64,
    /// −d log λ_fit / d log t − 1.
    pub kappa_eff: f64,
    /// ‖v(τ)‖_{L²(dR)}.
    pub v_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub samples: Vec<Sample>,
    pub steps: usize,
    pub n_points: usize,
    pub r_max: f64,
    /// Order of the one-sided closures at R_max.
    pub boundary_order: usize,
    /// Decay exponents fitted over the second half of the window.
    pub energy_exponent: Option<f64>,
    pub norm_exponent: Option<f64>,
    pub max_sup_eps: f64,
    /// Last-half energy fit decreasing.
    pub energy_trending_down: bool,
}

/// Forcing-driven run from v = w = 0 at τ₀.
pub fn run(sc: &SecondCorrection, cfg: &SimConfig) -> Result<RunReport> {
    cfg.validate()?;
    let p = sc.params;
    let r_max = cfg.r_max_factor * p.nu * cfg.tau1;
    let n = (r_max / cfg.dr).ceil() as usize;
    let dr = r_max / n as f64;
    let taus: Vec<f64> = (0..cfg.slices).map(|k| cfg.tau0 + (cfg.tau1 - cfg.tau0) * k as f64 / (cfg.slices - 1) as f64).collect();
    let mut ev = Evolution::linear(p);
    ev.drive = Some(Drive::build(sc, &taus, n, dr)?);
    if cfg.project_bound_state {
        let xi_d = find_xi_d(ODE_TOL, 1.0, 250)?.xi_d;
        ev = ev.with_bound_state(xi_d, n, dr)?;
    }
    let mut state = EvolutionState::zero(cfg.tau0, n, dr, cfg.cfl)?;
    let mut samples = vec![sample(&p, &state)?];
    let mut steps = 0;
    for k in 1..=cfg.records {
        let target = cfg.tau0 + (cfg.tau1 - cfg.tau0) * k as f64 / cfg.records as f64;
        let (s, m) = ev.advance(state, target)?;
        state = s;
        steps += m;
        samples.push(sample(&p, &state)?);
    }
    fill_kappa_eff(&mut samples);
    let half = samples.len() / 2;
    let tail = &samples[half..];
    let xs: Vec<f64> = tail.iter().map(|s| s.tau).collect();
    let energy_exponent = decay_exponent(&xs, &tail.iter().map(|s| s.energy_in).collect::<Vec<_>>());
    let norm_exponent = decay_exponent(&xs, &tail.iter().map(|s| s.v_norm).collect::<Vec<_>>());
    Ok(RunReport {
        max_sup_eps: samples.iter().map(|s| s.sup_eps).fold(0.0, f64::max),
        energy_trending_down: energy_exponent.is_some_and(|e| e > 0.0),
        samples,
        steps,
        n_points: n + 1,
        r_max,
        boundary_order: 3,
        energy_exponent,
        norm_exponent,
    })
}

fn sample(p: &ScalingParams, s: &EvolutionState) -> Result<Sample> {
    let t = p.t_of_tau(s.tau)?;
    let kappa = p.lambda_of(t)?;
    let (energy_in, energy_out) = cone_energies(s, kappa, t * kappa);
    let (e0, sup_eps) = eps_origin_and_sup(s);
    Ok(Sample {
        tau: s.tau,
        t,
        energy_in,
        energy_out,
        sup_eps,
        lambda_fit: lambda_fit(p, t, e0)?,
        kappa_eff: f64::NAN,
        v_norm: dot(&s.v, &s.v, s.dr).sqrt(),
    })
}

fn fill_kappa_eff(samples: &mut [Sample]) {
    let m = samples.len();
    let logs: Vec<(f64, f64)> = samples.iter().map(|s| (s.t.ln(), s.lambda_fit.ln())).collect();
    for k in 0..m {
        let (a, b) = (k.saturating_sub(1), (k + 1).min(m - 1));
        if a != b {
            samples[k].kappa_eff = -(logs[b].1 - logs[a].1) / (logs[b].0 - logs[a].0) - 1.0;
        }
    }
}

/// Worst relative deviation of λ_fit·t^(1+ν) from exp(−ε₀ sin log t) over
/// t ∈ [t_hi·e^(−π), t_hi], half a period of log t. `center(t)` supplies u(t, 0).
pub fn oscillation_tracking(p: &ScalingParams, t_hi: f64, points: usize, center: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..points {
        let t = t_hi * (-std::f64::consts::PI * k as f64 / (points - 1) as f64).exp();
        let fit = (center(t)? / w(0.0)).powi(2);
        let target = (-p.eps0 * t.ln().sin()).exp();
        worst = worst.max((fit * t.powf(1.0 + p.nu) / target - 1.0).abs());
    }
    Ok(worst)
}
