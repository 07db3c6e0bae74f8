//! Spectral side of ℒ = −∂_R² − 5W⁴ on the half line with a Dirichlet condition at R = 0:
//! generalized eigenfunctions, the bound state, the spectral density, the distorted
//! Fourier transform, parametrix kernels, truncated Hilbert transforms and weighted norms.

use crate::cheb::PanelGrid;
use crate::correction_two::{bump, SecondCorrection};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::profile::potential;
use crate::quad::{gauss_legendre, Composite};
use crate::residual::e2_normalized;
use crate::scaling::ScalingParams;
use nalgebra::{allocator::Allocator, DefaultAllocator, Dim, OVector};
use num_complex::Complex64;
use ode_solvers::{Dop853, OutputType, System, Vector2, Vector3, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const ODE_TOL: f64 = 1e-11;
/// Left end of the bound-state search interval.
pub const XI_D_FLOOR: f64 = -25.0;

/// Radius where the potential is negligible against √|ξ|: max(60, 30/√|ξ|).
pub fn matching_radius(xi: f64) -> f64 {
    (30.0 / xi.abs().sqrt()).max(60.0)
}

struct Radial {
    xi: f64,
    with_potential: bool,
}

// R rides along as the last state component: the solver's stage abscissae are then
// fixed by its own A-matrix row sums rather than by its c-table, which mis-times the
// stages of explicitly R-dependent right-hand sides.
impl System<f64, Vector3<f64>> for Radial {
    fn system(&self, _x: f64, y: &Vector3<f64>, dy: &mut Vector3<f64>) {
        let v = if self.with_potential { potential(y[2]) } else { 0.0 };
        dy[0] = y[1];
        dy[1] = -(self.xi + v) * y[0];
        dy[2] = 1.0;
    }
}

/// The radial equation with a running integral ∫ φ F dR attached.
struct Weighted<'a> {
    xi: f64,
    forcing: &'a ForcingSlice,
}

impl System<f64, Vector4<f64>> for Weighted<'_> {
    fn system(&self, _x: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let r = y[3];
        dy[0] = y[1];
        dy[1] = -(self.xi + potential(r)) * y[0];
        dy[2] = y[0] * self.forcing.eval(r);
        dy[3] = 1.0;
    }
}

/// Dormand–Prince 8(5,3) with step-end output only and the stiffness probe off: the
/// radial equation is oscillatory or exponential, never stiff.
fn solver<D, F>(f: F, r0: f64, r1: f64, y0: OVector<f64, D>, tol: f64) -> Dop853<f64, OVector<f64, D>, F>
where
    D: Dim,
    F: System<f64, OVector<f64, D>>,
    DefaultAllocator: Allocator<D>,
    OVector<f64, D>: std::ops::Mul<f64, Output = OVector<f64, D>>,
{
    let span = r1 - r0;
    Dop853::from_param(
        f,
        r0,
        r1,
        span,
        y0,
        tol,
        tol * 1e-3,
        0.9,
        0.0,
        0.333,
        6.0,
        span,
        0.0,
        10_000_000,
        u32::MAX,
        OutputType::Sparse,
    )
}

fn ode_failure(e: impl std::fmt::Debug, xi: f64) -> Error {
    Error::Numerical(format!("eigenfunction integration failed at xi = {xi}: {e:?}"))
}

fn last<V: Clone>(ys: &[V], xi: f64) -> Result<V> {
    ys.last().cloned().ok_or_else(|| ode_failure("empty output", xi))
}

/// (φ, φ′) at `r1` starting from `y0` at `r0`.
fn propagate(xi: f64, with_potential: bool, r0: f64, y0: Vector2<f64>, r1: f64, tol: f64) -> Result<Vector2<f64>> {
    if r1 <= r0 {
        return Ok(y0);
    }
    let mut s = solver(Radial { xi, with_potential }, r0, r1, Vector3::new(y0[0], y0[1], r0), tol);
    s.integrate().map_err(|e| ode_failure(e, xi))?;
    let y = last(s.y_out(), xi)?;
    Ok(Vector2::new(y[0], y[1]))
}

/// φ(·, ξ) with φ(0) = 0, φ′(0) = 1 on the uniform grid jh, j = 0..=n, plus (φ, φ′) at nh.
/// Restarted per cell, since the solver's interpolant is less accurate than its steps.
fn sample_on_grid(xi: f64, with_potential: bool, h: f64, n: usize, tol: f64) -> Result<(Vec<f64>, Vector2<f64>)> {
    let mut y = Vector2::new(0.0, 1.0);
    let mut vals = Vec::with_capacity(n + 1);
    vals.push(0.0);
    for j in 0..n {
        y = propagate(xi, with_potential, j as f64 * h, y, (j + 1) as f64 * h, tol)?;
        vals.push(y[0]);
    }
    Ok((vals, y))
}

/// Unnormalized φ_d on the uniform grid jh, j = 0..=n. Past a few decay lengths the shot
/// solution picks up the growing mode, so the decay is continued exactly from 10/κ on.
pub fn bound_state_on_grid(xi_d: f64, h: f64, n: usize, tol: f64) -> Result<Vec<f64>> {
    let kap = (-xi_d).sqrt();
    let cut = ((10.0 / kap / h) as usize).min(n);
    let (mut phi, _) = sample_on_grid(xi_d, true, h, cut, tol)?;
    let edge = phi[cut];
    phi.extend((cut + 1..=n).map(|j| edge * (-kap * (j - cut) as f64 * h).exp()));
    Ok(phi)
}

/// φ(R, ξ) at the given radii (ascending).
pub fn eigenfunction(xi: f64, radii: &[f64]) -> Result<Vec<f64>> {
    eigenfunction_with(xi, radii, true)
}

/// Same as `eigenfunction`, optionally with the potential switched off.
pub fn eigenfunction_with(xi: f64, radii: &[f64], with_potential: bool) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(radii.len());
    let (mut r, mut y) = (0.0, Vector2::new(0.0, 1.0));
    for &x in radii {
        if x < r {
            return Err(Error::Domain("radii must be ascending and non-negative".into()));
        }
        y = propagate(xi, with_potential, r, y, x, ODE_TOL)?;
        r = x;
        out.push(y[0]);
    }
    Ok(out)
}

/// Amplitude a(ξ) in φ ≈ a e^(i√ξR) + conj, matched at `r`.
fn amplitude_from(xi: f64, r: f64, y: Vector2<f64>) -> Complex64 {
    let k = xi.sqrt();
    Complex64::new(y[0], -y[1] / k) * 0.5 * Complex64::from_polar(1.0, -k * r)
}

/// a(ξ) matched at `matching_radius(ξ)`.
pub fn amplitude(xi: f64, with_potential: bool, tol: f64) -> Result<Complex64> {
    if xi <= 0.0 {
        return Err(Error::Domain(format!("amplitude needs xi > 0, got {xi}")));
    }
    let r = matching_radius(xi);
    let y = propagate(xi, with_potential, 0.0, Vector2::new(0.0, 1.0), r, tol)?;
    Ok(amplitude_from(xi, r, y))
}

/// ρ(ξ) = 1/(4π|a|²√ξ).
pub fn density_from_amplitude(xi: f64, a: Complex64) -> f64 {
    1.0 / (4.0 * PI * a.norm_sqr() * xi.sqrt())
}

pub fn spectral_density(xi: f64) -> Result<f64> {
    Ok(density_from_amplitude(xi, amplitude(xi, true, ODE_TOL)?))
}

/// Coefficient A of the growing mode in φ ≈ A e^(κR) + B e^(−κR), ξ = −κ², read at `scale`·R_far.
pub fn growth_coefficient(xi: f64, tol: f64, scale: f64) -> Result<f64> {
    if xi >= 0.0 {
        return Err(Error::Domain(format!("growth coefficient needs xi < 0, got {xi}")));
    }
    let kap = (-xi).sqrt();
    let r = matching_radius(xi) * scale;
    let y = propagate(xi, true, 0.0, Vector2::new(0.0, 1.0), r, tol)?;
    Ok(0.5 * (y[0] + y[1] / kap) * (-kap * r).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundState {
    pub xi_d: f64,
    /// Sign changes of the shooting functional seen by the scan on (−25, 0).
    pub sign_changes: usize,
}

/// The negative eigenvalue by a dense scan of the growing-mode coefficient, then bisection.
pub fn find_xi_d(tol: f64, scale: f64, scan: usize) -> Result<BoundState> {
    let xs: Vec<f64> = (0..scan).map(|j| XI_D_FLOOR * (1.0 - j as f64 / scan as f64)).collect();
    let vals: Vec<f64> = xs.par_iter().map(|&x| growth_coefficient(x, tol, scale)).collect::<Result<_>>()?;
    let brackets: Vec<usize> = (0..scan - 1).filter(|&j| vals[j].signum() != vals[j + 1].signum()).collect();
    let Some(&j) = brackets.first() else {
        return Err(Error::Numerical("no sign change of the shooting functional on (-25, 0)".into()));
    };
    let (mut lo, mut hi, mut flo) = (xs[j], xs[j + 1], vals[j]);
    while hi - lo > 4.0 * f64::EPSILON * lo.abs() {
        let mid = 0.5 * (lo + hi);
        let fm = growth_coefficient(mid, tol, scale)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(BoundState { xi_d: 0.5 * (lo + hi), sign_changes: brackets.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    /// Transforms act on functions supported in [0, r_max].
    pub r_max: f64,
    pub dr: f64,
    /// Continuous part cut at ξ = k_max².
    pub k_max: f64,
    pub k_panel: f64,
    pub k_order: usize,
    pub tol: f64,
    /// Output table of ρ and a on a log grid.
    pub n_xi: usize,
    pub xi_lo: f64,
    pub xi_hi: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { r_max: 40.0, dr: 0.02, k_max: 60.0, k_panel: 0.5, k_order: 12, tol: ODE_TOL, n_xi: 400, xi_lo: 1e-4, xi_hi: 1e3 }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r_max > 0.0
            && self.dr > 0.0
            && self.dr < self.r_max
            && self.k_max > self.k_panel
            && self.k_panel > 0.0
            && self.k_order >= 2
            && self.tol > 0.0
            && self.n_xi >= 2
            && self.xi_lo > 0.0
            && self.xi_hi > self.xi_lo;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("inconsistent spectral configuration {self:?}")))
        }
    }
}

/// Eigenfunctions on a tensor grid, the bound state and the density.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub config: SpectralConfig,
    pub xi_d: f64,
    pub phi_d: Vec<f64>,
    pub phi_d_norm2: f64,
    pub r: Vec<f64>,
    /// Quadrature in k = √ξ for the continuous part.
    pub k: Vec<f64>,
    pub k_weights: Vec<f64>,
    /// phi[j] = φ(·, k_j²) on `r`.
    pub phi: Vec<Vec<f64>>,
    pub rho_k: Vec<f64>,
    /// Output table: ξ, ρ(ξ), a(ξ).
    pub xi: Vec<f64>,
    pub rho: Vec<f64>,
    pub a_amp: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transform {
    pub f_d: f64,
    /// Values at the k-nodes.
    pub f_c: Vec<f64>,
    /// L²_ρ mass of the last k-panel, an estimate of the truncation at k_max.
    pub tail: f64,
}

impl SpectralData {
    pub fn build(config: &SpectralConfig) -> Result<Self> {
        config.validate()?;
        let cfg = config.clone();
        let bound = find_xi_d(cfg.tol, 1.0, 250)?;
        let xi_d = bound.xi_d;
        let n = (cfg.r_max / cfg.dr).round() as usize;
        let h = cfg.r_max / n as f64;
        let r: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();

        let phi_d = bound_state_on_grid(xi_d, h, n, cfg.tol)?;
        let kap = (-xi_d).sqrt();
        let phi_d_norm2 = trapezoid(&phi_d.iter().map(|v| v * v).collect::<Vec<_>>(), h) + phi_d[n] * phi_d[n] / (2.0 * kap);

        let mut breaks = vec![0.0];
        for s in [8.0, 4.0, 2.0] {
            breaks.push(cfg.k_panel / s);
        }
        let mut x = cfg.k_panel;
        while x < cfg.k_max - 1e-12 {
            breaks.push(x);
            x += cfg.k_panel;
        }
        breaks.push(cfg.k_max);
        let kq = Composite::new(&breaks, cfg.k_order);
        let cols: Vec<(Vec<f64>, f64)> = kq
            .nodes
            .par_iter()
            .map(|&k| {
                let xi = k * k;
                let (col, end) = sample_on_grid(xi, true, h, n, cfg.tol)?;
                let rf = matching_radius(xi).max(r[n]);
                let y = propagate(xi, true, r[n], end, rf, cfg.tol)?;
                Ok((col, density_from_amplitude(xi, amplitude_from(xi, rf, y))))
            })
            .collect::<Result<_>>()?;
        let (phi, rho_k): (Vec<_>, Vec<_>) = cols.into_iter().unzip();

        let xi: Vec<f64> =
            (0..cfg.n_xi).map(|j| cfg.xi_lo * (cfg.xi_hi / cfg.xi_lo).powf(j as f64 / (cfg.n_xi - 1) as f64)).collect();
        let a_amp: Vec<Complex64> = xi.par_iter().map(|&x| amplitude(x, true, cfg.tol)).collect::<Result<_>>()?;
        let rho = xi.iter().zip(&a_amp).map(|(&x, &a)| density_from_amplitude(x, a)).collect();
        Ok(Self { config: cfg, xi_d, phi_d, phi_d_norm2, r, k: kq.nodes, k_weights: kq.weights, phi, rho_k, xi, rho, a_amp })
    }

    pub fn dr(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    /// ρ by log–log interpolation of the table, continued by the two power laws outside it.
    pub fn rho_at(&self, xi: f64) -> f64 {
        let n = self.xi.len();
        if xi <= self.xi[0] {
            return self.rho[0] * (xi / self.xi[0]).powf(-0.5);
        }
        if xi >= self.xi[n - 1] {
            return self.rho[n - 1] * (xi / self.xi[n - 1]).sqrt();
        }
        let j = self.xi.partition_point(|&x| x <= xi).clamp(1, n - 1);
        let (x0, x1) = (self.xi[j - 1].ln(), self.xi[j].ln());
        let s = (xi.ln() - x0) / (x1 - x0);
        (self.rho[j - 1].ln() * (1.0 - s) + self.rho[j].ln() * s).exp()
    }

    /// 𝒰f at ξ_d and at the k-nodes, from samples of f on `r`.
    pub fn forward(&self, f: &[f64]) -> Result<Transform> {
        if f.len() != self.r.len() {
            return Err(Error::Domain(format!("expected {} samples, got {}", self.r.len(), f.len())));
        }
        let h = self.dr();
        let dot = |col: &[f64]| trapezoid(&col.iter().zip(f).map(|(a, b)| a * b).collect::<Vec<_>>(), h);
        let f_d = dot(&self.phi_d);
        let f_c: Vec<f64> = self.phi.par_iter().map(|c| dot(c)).collect();
        let last_panel = self.k.len() - self.config.k_order;
        let tail = (last_panel..self.k.len()).map(|j| self.spectral_weight(j) * f_c[j] * f_c[j]).sum::<f64>().sqrt();
        Ok(Transform { f_d, f_c, tail })
    }

    /// Quadrature weight of node j for ∫ · ρ(ξ) dξ.
    fn spectral_weight(&self, j: usize) -> f64 {
        self.k_weights[j] * 2.0 * self.k[j] * self.rho_k[j]
    }

    /// φ_d f_d/‖φ_d‖² + ∫ φ f_c ρ dξ on `r`.
    pub fn inverse(&self, tr: &Transform) -> Vec<f64> {
        (0..self.r.len())
            .into_par_iter()
            .map(|i| {
                let c: f64 = (0..self.k.len()).map(|j| self.spectral_weight(j) * tr.f_c[j] * self.phi[j][i]).sum();
                self.phi_d[i] * tr.f_d / self.phi_d_norm2 + c
            })
            .collect()
    }

    /// Transform-side inner product.
    pub fn inner(&self, a: &Transform, b: &Transform) -> f64 {
        a.f_d * b.f_d / self.phi_d_norm2 + (0..self.k.len()).map(|j| self.spectral_weight(j) * a.f_c[j] * b.f_c[j]).sum::<f64>()
    }

    /// R-side inner product with the trapezoid rule.
    pub fn inner_r(&self, a: &[f64], b: &[f64]) -> f64 {
        trapezoid(&a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>(), self.dr())
    }

    /// Relative size of 𝒰(ℒf) − ξ𝒰f in the transform-side norm.
    pub fn diagonalization_error(&self, f: &[f64], lf: &[f64]) -> Result<f64> {
        let tf = self.forward(f)?;
        let tl = self.forward(lf)?;
        let diff = Transform {
            f_d: tl.f_d - self.xi_d * tf.f_d,
            f_c: tl.f_c.iter().zip(&tf.f_c).zip(&self.k).map(|((l, f), k)| l - k * k * f).collect(),
            tail: 0.0,
        };
        let scaled =
            Transform { f_d: self.xi_d * tf.f_d, f_c: tf.f_c.iter().zip(&self.k).map(|(f, k)| k * k * f).collect(), tail: 0.0 };
        Ok((self.inner(&diff, &diff) / self.inner(&scaled, &scaled)).sqrt())
    }

    /// Round-trip and diagonalization errors on a compact smooth bump centred at `c`.
    pub fn bump_check(&self, c: f64, half_width: f64) -> Result<(f64, f64)> {
        let j: Vec<Jet> = self.r.iter().map(|&r| smooth_bump(Jet::var(r), c, half_width)).collect();
        let f: Vec<f64> = j.iter().map(|x| x.v).collect();
        let lf: Vec<f64> = j.iter().zip(&self.r).map(|(x, &r)| apply_l(*x, r)).collect();
        let back = self.inverse(&self.forward(&f)?);
        let d: Vec<f64> = back.iter().zip(&f).map(|(a, b)| a - b).collect();
        let round_trip = (self.inner_r(&d, &d) / self.inner_r(&f, &f)).sqrt();
        Ok((round_trip, self.diagonalization_error(&f, &lf)?))
    }

    /// Kernels of the explicit solution of the transported problem.
    pub fn parametrix(&self, p: &ScalingParams, tau: f64, sigma: f64, xi: f64) -> Result<Kernels> {
        if !(tau > 0.0 && sigma >= tau && xi > 0.0) {
            return Err(Error::Domain(format!(
                "parametrix needs 0 < tau <= sigma and xi > 0 (tau = {tau}, sigma = {sigma}, xi = {xi})"
            )));
        }
        let (tt, ts) = (p.t_of_tau(tau)?, p.t_of_tau(sigma)?);
        let (kt, ks) = (p.lambda_of(tt)?, p.lambda_of(ts)?);
        let om = kt / ks;
        // ∫_τ^σ du/κ(u) = t(τ) − t(σ) since dτ = −λ dt.
        let phase = kt * xi.sqrt() * (tt - ts);
        let ratio = om.powf(1.5) * (self.rho_at(om * om * xi) / self.rho_at(xi)).sqrt();
        let kd = (-self.xi_d).sqrt();
        Ok(Kernels {
            h_c: ratio * phase.sin() / xi.sqrt(),
            h_hat_c: ratio * phase.cos(),
            h_d: -0.5 / kd * (-kd * (sigma - tau).abs()).exp(),
        })
    }

    /// Smallest constants in |H_c| ≤ C min{ω ξ^(−1/2), ν ω σ} and |Ĥ_c| ≤ C ω, ω = (τ/σ)^(1+1/ν).
    pub fn parametrix_scan(&self, p: &ScalingParams, taus: &[f64], stretch: &[f64], xis: &[f64]) -> Result<ParametrixScan> {
        let pts: Vec<(f64, f64, f64)> =
            taus.iter().flat_map(|&t| stretch.iter().flat_map(move |&s| xis.iter().map(move |&x| (t, t * s, x)))).collect();
        let rows: Vec<[f64; 4]> = pts
            .par_iter()
            .map(|&(tau, sigma, xi)| {
                let k = self.parametrix(p, tau, sigma, xi)?;
                let om = (tau / sigma).powf(1.0 + 1.0 / p.nu);
                let (b1, b2) = (om / xi.sqrt(), p.nu * om * sigma);
                Ok([k.h_c.abs() / b1, k.h_c.abs() / b2, k.h_c.abs() / b1.min(b2), k.h_hat_c.abs() / om])
            })
            .collect::<Result<_>>()?;
        let max = |i: usize| rows.iter().fold(0.0f64, |m, r| m.max(r[i]));
        Ok(ParametrixScan { c_xi: max(0), c_sigma: max(1), c_min: max(2), c_hat: max(3), points: rows.len() })
    }

    /// 𝒰 of a forcing slice at ξ_d and at the given ξ > 0.
    pub fn transform_forcing(&self, fs: &ForcingSlice, xis: &[f64]) -> Result<(f64, Vec<f64>)> {
        let vals: Vec<f64> = self.r.iter().map(|&r| fs.eval(r)).collect();
        let f_d = self.inner_r(&self.phi_d, &vals);
        let f_c = xis.par_iter().map(|&xi| forcing_mode(fs, xi, self.config.tol)).collect::<Result<_>>()?;
        Ok((f_d, f_c))
    }

    /// Slice transforms of the cut-off cone error over a list of comoving times.
    pub fn inhomog_decay(&self, sc: &SecondCorrection, taus: &[f64], xis: &[f64]) -> Result<DecayReport> {
        let slices = taus.iter().map(|&tau| forcing_slice(sc, tau)).collect::<Result<Vec<_>>>()?;
        self.decay_from_slices(&sc.params, &slices, xis)
    }

    pub fn decay_from_slices(&self, p: &ScalingParams, slices: &[ForcingSlice], xis: &[f64]) -> Result<DecayReport> {
        let mut envelope = Vec::new();
        let mut discrete = Vec::new();
        let mut per_xi = Vec::new();
        for fs in slices {
            let (fd, fc) = self.transform_forcing(fs, xis)?;
            envelope.push(fc.iter().zip(xis).fold(0.0f64, |m, (v, x)| m.max(v.abs() * (1.0 + x * x).sqrt())));
            discrete.push(fd.abs());
            per_xi.push(fc);
        }
        let taus: Vec<f64> = slices.iter().map(|s| s.tau).collect();
        Ok(DecayReport {
            exponent: decay_exponent(&taus, &envelope),
            discrete_exponent: decay_exponent(&taus, &discrete),
            threshold: 3.0 - 0.5 * (1.0 + 1.0 / p.nu) - 0.3,
            taus,
            xis: xis.to_vec(),
            envelope,
            discrete,
            per_xi,
        })
    }
}

/// ∫ φ(R, ξ) F(R) dR: the ODE carries the integral up to the matching radius, the
/// oscillatory tail uses φ ≈ 2 Re(a e^(i√ξR)).
fn forcing_mode(fs: &ForcingSlice, xi: f64, tol: f64) -> Result<f64> {
    let r_m = matching_radius(xi).min(fs.r_end);
    let sys = Weighted { xi, forcing: fs };
    let mut s = solver(sys, 0.0, r_m, Vector4::new(0.0, 1.0, 0.0, 0.0), tol);
    s.integrate().map_err(|e| ode_failure(e, xi))?;
    let y = last(s.y_out(), xi)?;
    if r_m >= fs.r_end {
        return Ok(y[2]);
    }
    let a = amplitude_from(xi, r_m, Vector2::new(y[0], y[1]));
    let k = xi.sqrt();
    let (gx, gw) = gauss_legendre(12);
    let span = 4.0 * PI / k;
    let mut tail = 0.0;
    let mut brk: Vec<f64> = fs.grid.breaks().iter().copied().filter(|&b| b > r_m && b < fs.r_end).collect();
    brk.insert(0, r_m);
    brk.push(fs.r_end);
    for w in brk.windows(2) {
        let m = ((w[1] - w[0]) / span).ceil().max(1.0) as usize;
        let len = (w[1] - w[0]) / m as f64;
        for i in 0..m {
            let lo = w[0] + i as f64 * len;
            for (x, wt) in gx.iter().zip(&gw) {
                let r = lo + 0.5 * len * (x + 1.0);
                tail += 0.5 * len * wt * fs.eval(r) * 2.0 * (a * Complex64::from_polar(1.0, k * r)).re;
            }
        }
    }
    Ok(y[2] + tail)
}

/// Least-squares decay rate of a positive series against τ; None if any entry vanishes.
pub fn decay_exponent(taus: &[f64], vals: &[f64]) -> Option<f64> {
    if taus.len() < 2 || vals.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(-sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernels {
    pub h_c: f64,
    pub h_hat_c: f64,
    pub h_d: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParametrixScan {
    /// max |H_c|/(ω ξ^(−1/2)).
    pub c_xi: f64,
    /// max |H_c|/(ν ω σ).
    pub c_sigma: f64,
    pub c_min: f64,
    /// max |Ĥ_c|/ω.
    pub c_hat: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub taus: Vec<f64>,
    pub xis: Vec<f64>,
    /// sup over ξ of ⟨ξ⟩|e(τ, ξ)| per slice.
    pub envelope: Vec<f64>,
    pub discrete: Vec<f64>,
    pub per_xi: Vec<Vec<f64>>,
    /// Fitted decay rate of the envelope in τ.
    pub exponent: Option<f64>,
    pub discrete_exponent: Option<f64>,
    /// 3 − (1 + 1/ν)/2 − 0.3.
    pub threshold: f64,
}

/// A radial source F(R) on [0, r_end] held as a panel interpolant.
#[derive(Clone, Debug)]
pub struct ForcingSlice {
    pub tau: f64,
    pub r_end: f64,
    pub grid: PanelGrid,
    pub vals: Vec<f64>,
}

impl ForcingSlice {
    pub fn from_fn(tau: f64, breaks: Vec<f64>, f: impl Fn(f64) -> f64 + Sync) -> Self {
        let grid = PanelGrid::new(breaks, 16);
        let vals = grid.nodes().par_iter().map(|&r| f(r)).collect();
        Self { tau, r_end: grid.hi(), grid, vals }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 || r >= self.r_end {
            return 0.0;
        }
        self.grid.eval(&self.vals, r)
    }
}

/// F(R) = κ^(−2) R χ(R/(ντ)) e₂(t, R/κ) with κ = λ(t(τ)). Past the cone the error is
/// continued as its boundary value times the exterior smoothstep.
pub fn forcing_slice(sc: &SecondCorrection, tau: f64) -> Result<ForcingSlice> {
    let p = &sc.params;
    let t = p.t_of_tau(tau)?;
    let l = p.lambda_of(t)?;
    let mu = t * l;
    let cut = p.nu * tau;
    let b = sc.bump_width;
    let br = slice_breaks(mu, cut, b);
    let edge = e2_normalized(sc, t, mu)?;
    let scale = l.powf(-1.5) / (t * t);
    let val = |rr: f64| -> f64 {
        let e = if rr <= mu { e2_normalized(sc, t, rr).unwrap_or(f64::NAN) } else { edge * bump(rr / mu, b).v };
        scale * rr * chi(rr / cut) * e
    };
    let fs = ForcingSlice::from_fn(tau, br, val);
    if fs.vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite cone error in the forcing slice at tau = {tau}")));
    }
    Ok(fs)
}

/// Panel breaks on [0, 2·cut] resolving the core, the cone edge at μ and the cutoff ramp.
pub(crate) fn slice_breaks(mu: f64, cut: f64, b: f64) -> Vec<f64> {
    let r_end = 2.0 * cut;
    let mut br = vec![0.0, 0.5];
    let mut x = 1.0;
    while x < 0.5 * mu {
        br.push(x);
        x *= 2.0;
    }
    br.extend((1..=10).map(|j| mu * (1.0 - 0.5f64.powi(j))));
    br.push(mu);
    br.extend((1..=4).map(|j| mu * (1.0 + b * j as f64 / 4.0)));
    br.extend((0..=8).map(|j| cut * (1.0 + j as f64 / 8.0)));
    br.retain(|&v| v <= r_end);
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    br.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * r_end);
    br
}

/// Smooth cutoff: 1 on |x| ≤ 1, 0 on |x| ≥ 2.
pub fn chi(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        return 1.0;
    }
    if a >= 2.0 {
        return 0.0;
    }
    let s = a - 1.0;
    let (e0, e1) = ((-1.0 / (1.0 - s)).exp(), (-1.0 / s).exp());
    e0 / (e0 + e1)
}

/// exp(−1/(1 − x²)) with x = (R − c)/w, as a jet in R.
pub fn smooth_bump(r: Jet, center: f64, half_width: f64) -> Jet {
    let x = (r - center) * (1.0 / half_width);
    if x.v.abs() >= 1.0 {
        return Jet::constant(0.0);
    }
    (-(1.0 - x * x).recip()).exp()
}

/// ℒf = −f″ − 5W⁴f.
pub fn apply_l(f: Jet, r: f64) -> f64 {
    -f.dd - potential(r) * f.v
}

pub(crate) fn trapezoid(v: &[f64], h: f64) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]))
}

/// Uniform grid in x = log ξ.
#[derive(Clone, Debug, PartialEq)]
pub struct LogGrid {
    pub x0: f64,
    pub h: f64,
    pub n: usize,
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        assert!(lo > 0.0 && hi > lo && n >= 2);
        let (x0, x1) = (lo.ln(), hi.ln());
        Self { x0, h: (x1 - x0) / (n - 1) as f64, n }
    }

    pub fn xi(&self, i: usize) -> f64 {
        (self.x0 + self.h * i as f64).exp()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.xi(i)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.xi(i))).collect()
    }

    /// ∫ g dξ = ∫ g ξ dx with the trapezoid rule.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        let v: Vec<f64> = g.iter().enumerate().map(|(i, v)| v * self.xi(i)).collect();
        trapezoid(&v, self.h)
    }

    pub fn lq_norm(&self, f: &[f64], q: f64) -> f64 {
        self.integrate(&f.iter().map(|v| v.abs().powf(q)).collect::<Vec<_>>()).powf(1.0 / q)
    }
}

/// H_n f(ξ) = ∫ χ(n(ξ/η − 1)) f(η)/(ξ − η) dη for f sampled on a log grid and zero outside it.
/// In x = log ξ the kernel is k(x − y) with k(s) = χ(n(eˢ − 1))/(eˢ − 1); the two sides of
/// the diagonal are paired so the 1/s singularity cancels, and the pair sum at s = 0 is
/// extrapolated linearly.
pub fn truncated_hilbert(n: f64, grid: &LogGrid, f: &[f64]) -> Vec<f64> {
    assert_eq!(f.len(), grid.n);
    let h = grid.h;
    let reach = ((-(1.0 - 2.0 / n).ln()) / h).ceil() as usize + 1;
    let kern: Vec<(f64, f64)> = (0..=reach)
        .map(|m| {
            let s = m as f64 * h;
            let side = |s: f64| {
                let e = s.exp_m1();
                chi(n * e) / e
            };
            if m == 0 {
                (0.0, 0.0)
            } else {
                (side(s), side(-s))
            }
        })
        .collect();
    let at = |i: isize| if i < 0 || i as usize >= grid.n { 0.0 } else { f[i as usize] };
    (0..grid.n)
        .into_par_iter()
        .map(|i| {
            let i = i as isize;
            let pair = |m: usize| kern[m].0 * at(i - m as isize) + kern[m].1 * at(i + m as isize);
            let g0 = 2.0 * pair(1) - pair(2);
            h * (0.5 * g0 + (1..=reach).map(pair).sum::<f64>())
        })
        .collect()
}

/// Untruncated principal value ∫_{c−w}^{c+w} f(η)/(c − η) dη by symmetric pairs.
pub fn symmetric_pv(f: impl Fn(f64) -> f64, center: f64, half_width: f64, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    x.iter()
        .zip(&w)
        .map(|(x, w)| {
            let s = 0.5 * half_width * (x + 1.0);
            0.5 * half_width * w * (f(center - s) - f(center + s)) / s
        })
        .sum()
}

/// Test family for the uniform bound, with features on the kernel's width ℓ = 2/n around ξ = 2.
pub fn hilbert_test_set(n: f64) -> Vec<(String, Box<dyn Fn(f64) -> f64 + Send + Sync>)> {
    let l = 2.0 / n;
    let bump_at = move |x: f64, c: f64, w: f64| smooth_bump(Jet::constant(x), c, w).v;
    vec![
        ("indicator_1_2".into(), Box::new(|x: f64| if (1.0..=2.0).contains(&x) { 1.0 } else { 0.0 })),
        ("bump_1_5".into(), Box::new(move |x| bump_at(x, 3.0, 2.0))),
        ("indicator_narrow".into(), Box::new(move |x: f64| if (2.0..=2.0 + 3.0 * l).contains(&x) { 1.0 } else { 0.0 })),
        ("bump_narrow".into(), Box::new(move |x| bump_at(x, 2.0, 2.0 * l))),
        ("oscillatory".into(), Box::new(move |x| bump_at(x, 2.0, 8.0 * l) * ((x - 2.0) / l).sin())),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct HilbertNorms {
    pub n: f64,
    pub q: f64,
    /// ‖H_n f‖_q/‖f‖_q per test function.
    pub ratios: Vec<(String, f64)>,
    pub max_ratio: f64,
}

/// Empirical L^q norm of H_n over the test family on ξ ∈ [1/4, 16].
pub fn hilbert_norms(n: f64, q: f64) -> HilbertNorms {
    let pts = ((64f64).ln() * 16.0 * n).ceil() as usize + 1;
    let grid = LogGrid::new(0.25, 16.0, pts);
    let ratios: Vec<(String, f64)> = hilbert_test_set(n)
        .into_iter()
        .map(|(name, f)| {
            let v = grid.sample(&f);
            let hv = truncated_hilbert(n, &grid, &v);
            (name, grid.lq_norm(&hv, q) / grid.lq_norm(&v, q))
        })
        .collect();
    let max_ratio = ratios.iter().fold(0.0f64, |m, r| m.max(r.1));
    HilbertNorms { n, q, ratios, max_ratio }
}

/// Splits K into the near-diagonal part χ(n₀(ξ/η − 1))K and the rest.
pub fn split_kernel(k: &[Vec<f64>], xis: &[f64], etas: &[f64], n0: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut kd = Vec::with_capacity(k.len());
    let mut knd = Vec::with_capacity(k.len());
    for (row, &xi) in k.iter().zip(xis) {
        let d: Vec<f64> = row.iter().zip(etas).map(|(v, &eta)| chi(n0 * (xi / eta - 1.0)) * v).collect();
        knd.push(row.iter().zip(&d).map(|(v, d)| v - d).collect());
        kd.push(d);
    }
    (kd, knd)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub p: f64,
    pub delta: f64,
    pub tau0: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        Self { p: 8.0, delta: 0.05, tau0: 1.0 }
    }
}

impl NormParams {
    pub fn validate(&self) -> Result<()> {
        if self.p > 1.0 && self.delta > 0.0 && self.delta < 0.125 && self.tau0 > 0.0 {
            Ok(())
        } else {
            Err(Error::Validation(format!("norm parameters need p > 1, 0 < delta < 1/8, tau0 > 0: {self:?}")))
        }
    }
}

fn jp(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// ‖(ξ/⟨ξ⟩)^(1/2−δ) f‖_p + ‖ξ^(1/2)⟨ξ⟩^(1/8) f‖_{L²_ρ}.
pub fn norm_x(grid: &LogGrid, f: &[f64], rho: impl Fn(f64) -> f64, np: &NormParams) -> f64 {
    let xs = grid.points();
    let a: Vec<f64> = xs.iter().zip(f).map(|(&x, v)| (x / jp(x)).powf(0.5 - np.delta) * v).collect();
    let b: Vec<f64> = xs.iter().zip(f).map(|(&x, v)| x * jp(x).powf(0.25) * v * v * rho(x)).collect();
    grid.lq_norm(&a, np.p) + grid.integrate(&b).sqrt()
}

/// ‖f‖_p + ‖⟨ξ⟩^(1/8) f‖_{L²_ρ}.
pub fn norm_y(grid: &LogGrid, f: &[f64], rho: impl Fn(f64) -> f64, np: &NormParams) -> f64 {
    let xs = grid.points();
    let b: Vec<f64> = xs.iter().zip(f).map(|(&x, v)| jp(x).powf(0.25) * v * v * rho(x)).collect();
    grid.lq_norm(f, np.p) + grid.integrate(&b).sqrt()
}

/// sup over τ > τ₀ of τ^β·(slice norm).
pub fn spacetime_norm(taus: &[f64], slice_norms: &[f64], beta: f64, tau0: f64) -> f64 {
    taus.iter().zip(slice_norms).filter(|(t, _)| **t > tau0).fold(0.0f64, |m, (t, v)| m.max(t.powf(beta) * v))
}
