//! First correction v₁ = λ^(1/2) μ^(−2) (ω₁f₁ + ω₂f₂)(R): the profiles f_j solving
//! L₀f = g_j with f(0) = f′(0) = 0, their large-R heads b₁R + b₂, and the
//! leading error coefficients c₁, c₂.

use crate::cheb::PanelGrid;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::profile::{g1_jet, g2_jet, phi_tilde1_jet, phi_tilde2_jet, w};
use crate::scaling::{AdmissibleFn, ScalingParams};
use nalgebra::{DMatrix, DVector};

pub const R_CAP: f64 = 4000.0;
const R_SERIES: f64 = 1e-2;
const FIT_WINDOW: (f64, f64) = (200.0, 2000.0);
const DEG: usize = 32;

/// Tail basis beyond the linear head: log R/R, 1/R, 1/R², 1/R³, log R/R³, 1/R⁴.
const TAIL_TERMS: usize = 6;

fn tail_basis(r: Jet) -> [Jet; TAIL_TERMS] {
    let inv = r.recip();
    let lg = r.ln();
    let inv3 = inv * inv * inv;
    [lg * inv, inv, inv * inv, inv3, lg * inv3, inv3 * inv]
}

/// f(R) ≈ b₁R + b₂ + b₃ log R/R + … at large R.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticHead {
    pub b1: f64,
    pub b2: f64,
    /// Coefficients of `tail_basis`; the first is the log R/R coefficient b₃.
    pub tail: [f64; TAIL_TERMS],
    /// Largest fit residual over the fit window.
    pub fit_residual: f64,
}

impl AsymptoticHead {
    pub fn b3(&self) -> f64 {
        self.tail[0]
    }

    /// Image under 𝒟 = 1/2 + R∂_R of the linear head.
    pub fn apply_d(&self) -> (f64, f64) {
        (1.5 * self.b1, 0.5 * self.b2)
    }

    fn tail_jet(&self, r: Jet) -> Jet {
        tail_basis(r).iter().zip(self.tail.iter()).fold(Jet::constant(0.0), |s, (b, &c)| s + *b * c)
    }
}

/// A solution of L₀f = g with f(0) = f′(0) = 0.
#[derive(Clone, Debug)]
pub struct CorrectionProfile {
    grid: PanelGrid,
    i1: Vec<f64>,
    i2: Vec<f64>,
    forcing: fn(Jet) -> Jet,
    pub head: AsymptoticHead,
    /// c_k in f = Σ c_k R^(2k), k = 1, 2, …; the first entry is the R² coefficient.
    pub near_zero: Vec<f64>,
    /// Difference against a lower-degree build at R_cap, relative.
    pub quad_error: f64,
}

fn cumulative_integrals(grid: &PanelGrid, g: fn(Jet) -> Jet) -> (Vec<f64>, Vec<f64>) {
    let gr = |r: f64| r * g(Jet::constant(r)).v;
    let i1 = grid.cumulative(&grid.sample(|r| phi_tilde1_jet(Jet::constant(r)).v * gr(r)));
    let i2 = grid.cumulative(&grid.sample(|r| phi_tilde2_jet(Jet::constant(r)).v * gr(r)));
    (i1, i2)
}

fn radial_grid(deg: usize) -> PanelGrid {
    PanelGrid::geometric_outward(0.25, R_CAP, 3, deg)
}

const SERIES_TERMS: usize = 5;

/// Even Taylor coefficients of f at R = 0, from a least-squares fit of g in R² on [0, 1/4]
/// and the recursion (2k)(2k + 1)c_k = γ_(k−1) − Σ p_(k−1−i) c_i with 5W⁴ = Σ p_n R^(2n).
fn origin_series(g: fn(Jet) -> Jet) -> Result<Vec<f64>> {
    let (n, deg, h) = (60, 10, 0.25);
    let mut a = DMatrix::<f64>::zeros(n, deg);
    let mut y = DVector::<f64>::zeros(n);
    for i in 0..n {
        let x = h * (0.5 - 0.5 * (std::f64::consts::PI * i as f64 / (n - 1) as f64).cos());
        for k in 0..deg {
            a[(i, k)] = (x / h).powi(2 * k as i32);
        }
        y[i] = g(Jet::constant(x)).v;
    }
    let gamma: Vec<f64> = a
        .svd(true, true)
        .solve(&y, 1e-15)
        .map_err(|e| Error::Numerical(format!("origin fit failed: {e}")))?
        .iter()
        .enumerate()
        .map(|(k, c)| c / h.powi(2 * k as i32))
        .collect();
    let pot = |n: usize| 5.0 * (-1f64).powi(n as i32) * (n + 1) as f64 / 3f64.powi(n as i32);
    let mut c = [0.0; SERIES_TERMS + 1];
    for k in 1..=SERIES_TERMS {
        let mut s = gamma[k - 1];
        for i in 1..k {
            s -= pot(k - 1 - i) * c[i];
        }
        c[k] = s / ((2 * k) * (2 * k + 1)) as f64;
    }
    Ok(c[1..].to_vec())
}

/// Solves L₀f = g by variation of parameters against (φ̃₁, φ̃₂).
pub fn solve_l0(g: fn(Jet) -> Jet) -> Result<CorrectionProfile> {
    let grid = radial_grid(DEG);
    let (i1, i2) = cumulative_integrals(&grid, g);
    let coarse = radial_grid(DEG - 8);
    let (c1, c2) = cumulative_integrals(&coarse, g);
    let scale = i1.last().unwrap().abs().max(i2.last().unwrap().abs()).max(1e-300);
    let quad_error = (c1.last().unwrap() - i1.last().unwrap()).abs().max((c2.last().unwrap() - i2.last().unwrap()).abs()) / scale;
    if !(quad_error < 1e-10) {
        return Err(Error::Numerical(format!("variation-of-parameters quadrature did not converge: estimate {quad_error:e}")));
    }

    let near_zero = origin_series(g)?;

    let mut prof = CorrectionProfile {
        grid,
        i1,
        i2,
        forcing: g,
        head: AsymptoticHead { b1: 0.0, b2: 0.0, tail: [0.0; TAIL_TERMS], fit_residual: 0.0 },
        near_zero,
        quad_error,
    };
    prof.head = prof.fit_head()?;
    Ok(prof)
}

impl CorrectionProfile {
    fn interior(&self, r: f64) -> Jet {
        let st = self.grid.stencil(r);
        let (i1, i2) = (st.apply(&self.i1), st.apply(&self.i2));
        let rj = Jet::var(r);
        let a = phi_tilde1_jet(rj);
        let b = phi_tilde2_jet(rj);
        let rg = r * (self.forcing)(Jet::constant(r)).v;
        let h = Jet::new(a.v * i2 - b.v * i1, a.d * i2 - b.d * i1, a.dd * i2 - b.dd * i1 + rg);
        h / rj
    }

    fn fit_head(&self) -> Result<AsymptoticHead> {
        let n = 160;
        let cols = 2 + TAIL_TERMS;
        let (lo, hi) = FIT_WINDOW;
        let rs: Vec<f64> = (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect();
        let scales: Vec<f64> = {
            let b = tail_basis(Jet::constant(lo));
            let mut s = vec![lo, 1.0];
            s.extend(b.iter().map(|j| j.v.abs()));
            s
        };
        let mut a = DMatrix::<f64>::zeros(n, cols);
        let mut y = DVector::<f64>::zeros(n);
        for (i, &r) in rs.iter().enumerate() {
            let b = tail_basis(Jet::constant(r));
            a[(i, 0)] = r / scales[0];
            a[(i, 1)] = 1.0;
            for k in 0..TAIL_TERMS {
                a[(i, 2 + k)] = b[k].v / scales[2 + k];
            }
            y[i] = self.interior(r).v;
        }
        let svd = a.clone().svd(true, true);
        let x = svd.solve(&y, 1e-14).map_err(|e| Error::Numerical(format!("head fit failed: {e}")))?;
        let coef: Vec<f64> = x.iter().zip(scales.iter()).map(|(c, s)| c / s).collect();
        let fit_residual = (&a * &x - &y).amax();
        let mut tail = [0.0; TAIL_TERMS];
        tail.copy_from_slice(&coef[2..]);
        Ok(AsymptoticHead { b1: coef[0], b2: coef[1], tail, fit_residual })
    }

    /// f and its first two R-derivatives.
    pub fn eval_jet(&self, r: f64) -> Result<Jet> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("R = {r} outside [0, ∞)")));
        }
        Ok(self.jet_unchecked(r))
    }

    pub(crate) fn jet_unchecked(&self, r: f64) -> Jet {
        if r < R_SERIES {
            let x = Jet::var(r);
            let x2 = x * x;
            let mut acc = Jet::constant(0.0);
            for &c in self.near_zero.iter().rev() {
                acc = (acc + c) * x2;
            }
            acc
        } else if r <= R_CAP {
            self.interior(r)
        } else {
            self.head.tail_jet(Jet::var(r)) + Jet::new(self.head.b1 * r + self.head.b2, self.head.b1, 0.0)
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        Ok(self.eval_jet(r)?.v)
    }

    /// f − b₁R − b₂ with derivatives; decays like log R/R.
    pub fn remainder_jet(&self, r: f64) -> Jet {
        if r > R_CAP {
            self.head.tail_jet(Jet::var(r))
        } else {
            self.jet_unchecked(r) - Jet::new(self.head.b1 * r + self.head.b2, self.head.b1, 0.0)
        }
    }

    /// L₀f − g at R > 0.
    pub fn l0_residual(&self, r: f64) -> Result<f64> {
        let f = self.eval_jet(r)?;
        Ok(crate::profile::l0_apply(f, r)? - (self.forcing)(Jet::constant(r)).v)
    }
}

/// (𝒟ᵏf)(R) for k = 0, 1, 2 from a jet.
pub fn d_powers(f: Jet, r: f64) -> [f64; 3] {
    [f.v, 0.5 * f.v + r * f.d, 0.25 * f.v + 2.0 * r * f.d + r * r * f.dd]
}

/// The pair (f₁, f₂) together with the time operators acting on ω₁, ω₂.
#[derive(Clone, Debug)]
pub struct FirstCorrection {
    pub params: ScalingParams,
    pub f: [CorrectionProfile; 2],
    /// ops[j][k]: coefficient of 𝒟ᵏf_j in t²∂_t²(λ^(1/2)μ^(−2)ω_j f_j)·λ^(−1/2)μ²; base ε₀.
    ops: [[AdmissibleFn; 3]; 2],
}

/// T: α ↦ 2κα + t∂_tα − (1 + κ)α𝒟, the conjugated t∂_t on λ^(1/2)μ^(−2)α(t)F(R).
fn time_op(kappa: &AdmissibleFn, alpha: &[AdmissibleFn]) -> Result<Vec<AdmissibleFn>> {
    let zero = AdmissibleFn::zero(kappa.eps_tilde(), kappa.n_max());
    let one_k = kappa.add_const(1.0);
    let mut out = vec![zero.clone(); alpha.len() + 1];
    for (k, a) in alpha.iter().enumerate() {
        let stay = kappa.mul(a)?.scale(2.0).add(&a.tdt())?;
        out[k] = out[k].add(&stay)?;
        out[k + 1] = out[k + 1].sub(&one_k.mul(a)?)?;
    }
    Ok(out)
}

/// (T² − T)ω as coefficients of 𝒟⁰, 𝒟¹, 𝒟².
fn second_derivative_ops(kappa: &AdmissibleFn, omega: &AdmissibleFn) -> Result<[AdmissibleFn; 3]> {
    let t1 = time_op(kappa, std::slice::from_ref(omega))?;
    let t2 = time_op(kappa, &t1)?;
    Ok([t2[0].sub(&t1[0])?, t2[1].sub(&t1[1])?, t2[2].clone()])
}

fn omegas(p: &ScalingParams, eps: f64, n_max: usize) -> Result<(AdmissibleFn, [AdmissibleFn; 2])> {
    let c = crate::profile::BulkCoefficients::new(p, eps, n_max)?;
    Ok((p.kappa_table(eps, n_max), [c.omega1, c.omega2]))
}

/// ω₁ = (1 + κ − tκ′)/2 and ω₂ = (1 + κ)²/36 at t.
pub fn omega_values(p: &ScalingParams, t: f64) -> [f64; 2] {
    let k = p.kappa_unchecked(t);
    [0.5 * (1.0 + k - p.t_dkappa(t)), (1.0 + k) * (1.0 + k) / 36.0]
}

/// Normalized quintic interaction 10U³w² + 10U²w³ + 5Uw⁴ + w⁵.
pub fn quintic_tail(u: f64, v: f64) -> f64 {
    let v2 = v * v;
    v2 * (10.0 * u * u * u + v * (10.0 * u * u + v * (5.0 * u + v)))
}

impl FirstCorrection {
    /// Builds f₁, f₂ and the operator tables; `n_max` bounds the admissible algebra.
    pub fn build(params: &ScalingParams, n_max: usize) -> Result<Self> {
        params.validate()?;
        let f = [solve_l0(g1_jet)?, solve_l0(g2_jet)?];
        let (kappa, om) = omegas(params, params.eps0, n_max)?;
        let ops = [second_derivative_ops(&kappa, &om[0])?, second_derivative_ops(&kappa, &om[1])?];
        Ok(Self { params: *params, f, ops })
    }

    /// Rebuilds the time tables for new parameters, reusing the radial profiles.
    pub fn with_params(&self, params: &ScalingParams) -> Result<Self> {
        params.validate()?;
        let n_max = self.ops[0][0].n_max();
        let (kappa, om) = omegas(params, params.eps0, n_max)?;
        let ops = [second_derivative_ops(&kappa, &om[0])?, second_derivative_ops(&kappa, &om[1])?];
        Ok(Self { params: *params, f: self.f.clone(), ops })
    }

    /// c₁(t) and c₂(t) in t²λ^(−1/2)e₁⁰ = c₁ab + c₂b², each over its level's base ε̃_j.
    pub fn leading_error_coeffs(&self) -> Result<(AdmissibleFn, AdmissibleFn)> {
        let p = &self.params;
        let n_max = self.ops[0][0].n_max();
        let mut c = Vec::new();
        for (level, d) in [(1usize, 1.5f64), (2, 0.5)] {
            let eps = p.eps_tilde(level);
            let (kappa, om) = omegas(p, eps, n_max)?;
            let mut acc = AdmissibleFn::zero(eps, n_max);
            for (j, omega) in om.iter().enumerate() {
                let ops = second_derivative_ops(&kappa, omega)?;
                let h = &self.f[j].head;
                let b = if level == 1 { h.b1 } else { h.b2 };
                for (k, op) in ops.iter().enumerate() {
                    acc = acc.add(&op.scale(b * d.powi(k as i32)))?;
                }
            }
            c.push(acc);
        }
        let c2 = c.pop().unwrap();
        Ok((c.pop().unwrap(), c2))
    }

    /// A_{jk}(t): t²∂_t² of the first correction in 𝒟-powers of f_j.
    pub fn time_coefficients(&self, t: f64) -> [[f64; 3]; 2] {
        let mut a = [[0.0; 3]; 2];
        for j in 0..2 {
            for k in 0..3 {
                a[j][k] = self.ops[j][k].eval_re(t);
            }
        }
        a
    }

    fn check(&self, t: f64, r: f64) -> Result<()> {
        if !(t > 0.0 && t < self.params.t0) {
            return Err(Error::Domain(format!("t = {t} outside (0, t0)")));
        }
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("r = {r} < 0")));
        }
        Ok(())
    }

    /// w₁ = μ^(−2)(ω₁f₁ + ω₂f₂)(R) as a jet in R, so v₁ = λ^(1/2) w₁.
    pub fn w1_jet(&self, t: f64, rr: f64) -> Jet {
        let p = &self.params;
        let mu = t * p.lambda_unchecked(t);
        let om = omega_values(p, t);
        (self.f[0].jet_unchecked(rr).scale(om[0]) + self.f[1].jet_unchecked(rr).scale(om[1])).scale(1.0 / (mu * mu))
    }

    pub fn v1(&self, t: f64, r: f64) -> Result<f64> {
        self.check(t, r)?;
        let l = self.params.lambda_unchecked(t);
        Ok(l.sqrt() * self.w1_jet(t, l * r).v)
    }

    /// t²λ^(−1/2)∂_t²v₁ at (t, R), assembled from the operator tables.
    pub fn dtt_v1_normalized(&self, t: f64, rr: f64) -> f64 {
        let mu = t * self.params.lambda_unchecked(t);
        let a = self.time_coefficients(t);
        let mut s = 0.0;
        for j in 0..2 {
            let dk = d_powers(self.f[j].jet_unchecked(rr), rr);
            s += (0..3).map(|k| a[j][k] * dk[k]).sum::<f64>();
        }
        s / (mu * mu)
    }

    /// t²λ^(−1/2)e₁ with e₁ = ∂_t²v₁ − 10u₀³v₁² − 10u₀²v₁³ − 5u₀v₁⁴ − v₁⁵.
    pub fn e1_normalized(&self, t: f64, rr: f64) -> f64 {
        let mu = t * self.params.lambda_unchecked(t);
        self.dtt_v1_normalized(t, rr) - mu * mu * quintic_tail(w(rr), self.w1_jet(t, rr).v)
    }

    /// t²λ^(−1/2)(e₁ − e₁⁰), evaluated through the decaying remainders f_j − b₁jR − b₂j.
    pub fn e1_minus_e10_normalized(&self, t: f64, rr: f64) -> f64 {
        let mu = t * self.params.lambda_unchecked(t);
        let a = self.time_coefficients(t);
        let mut s = 0.0;
        for j in 0..2 {
            let dk = d_powers(self.f[j].remainder_jet(rr), rr);
            s += (0..3).map(|k| a[j][k] * dk[k]).sum::<f64>();
        }
        s / (mu * mu) - mu * mu * quintic_tail(w(rr), self.w1_jet(t, rr).v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const SQ3: f64 = 1.732_050_807_568_877_2;

    // High-precision quadrature values, independent of this module.
    const F1: [(f64, f64); 4] = [
        (0.5, 0.036_916_489_422_731_37),
        (2.0, 0.147_448_369_024_691_44),
        (10.0, -3.137_603_530_472_146_8),
        (300.0, -248.762_089_257_440_9),
    ];
    const F2: [(f64, f64); 4] = [
        (0.5, 0.250_081_299_623_736_87),
        (2.0, -4.337_465_795_693_53),
        (10.0, -15.848_235_710_048_74),
        (300.0, 2139.643_863_363_647_9),
    ];

    fn profiles() -> [CorrectionProfile; 2] {
        [solve_l0(g1_jet).unwrap(), solve_l0(g2_jet).unwrap()]
    }

    #[test]
    fn values_match_reference_quadrature() {
        let [f1, f2] = profiles();
        for (r, v) in F1 {
            assert!((f1.eval(r).unwrap() - v).abs() < 1e-10 * (1.0 + v.abs()), "f1({r})");
        }
        for (r, v) in F2 {
            assert!((f2.eval(r).unwrap() - v).abs() < 1e-10 * (1.0 + v.abs()), "f2({r})");
        }
    }

    #[test]
    fn heads_match_closed_forms() {
        let [f1, f2] = profiles();
        assert!((f1.head.b1 + SQ3 / 2.0).abs() < 1e-9, "{:?}", f1.head);
        assert!((f1.head.b2 - 15.0 * PI / 4.0).abs() < 1e-7, "{:?}", f1.head);
        assert!((f2.head.b1 - 9.0 * SQ3 / 2.0).abs() < 1e-8, "{:?}", f2.head);
        assert!((f2.head.b2 + 135.0 * PI / 2.0).abs() < 1e-6, "{:?}", f2.head);
    }

    #[test]
    fn origin_behaviour() {
        let [f1, f2] = profiles();
        assert!((f1.near_zero[0] - 1.0 / 6.0).abs() < 1e-13);
        assert!((f2.near_zero[0] - 1.5).abs() < 1e-13);
        assert!((f1.near_zero[1] + 1.0 / 12.0).abs() < 1e-11);
        for f in [&f1, &f2] {
            let j = f.eval_jet(0.0).unwrap();
            assert_eq!((j.v, j.d), (0.0, 0.0));
            // Series and quadrature branches meet at the switch.
            let a = f.interior(R_SERIES);
            let b = f.jet_unchecked(R_SERIES * (1.0 - 1e-12));
            assert!((a.v - b.v).abs() < 1e-14 * (1.0 + a.v.abs() * 1e5) && (a.dd - b.dd).abs() < 1e-9, "{a:?} {b:?}");
        }
    }

    #[test]
    fn solves_the_linearized_equation() {
        for f in profiles() {
            for k in 0..200 {
                let r = 0.1 * (2000f64).powf(k as f64 / 199.0);
                let res = f.l0_residual(r).unwrap();
                assert!(res.abs() < 1e-8, "R = {r}: {res}");
            }
        }
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let f = solve_l0(|_| Jet::constant(0.0)).unwrap();
        for r in [0.0, 0.005, 1.0, 100.0, 5000.0] {
            assert_eq!(f.eval(r).unwrap(), 0.0);
        }
    }

    #[test]
    fn head_transforms_under_scaling_generator() {
        let [f1, _] = profiles();
        // 𝒟 applied to the profile approaches the image of its head.
        let (d1, d2) = f1.head.apply_d();
        let r = 3000.0;
        let dk = d_powers(f1.eval_jet(r).unwrap(), r);
        let lin = d1 * r + d2;
        assert!((dk[1] - lin).abs() < 0.2);
    }

    fn defaults() -> FirstCorrection {
        FirstCorrection::build(&ScalingParams::default(), 8).unwrap()
    }

    #[test]
    fn leading_coefficients_at_zero_amplitude() {
        let p = ScalingParams::new(3.5, 0.0, 0.1).unwrap();
        let fc = FirstCorrection::build(&p, 8).unwrap();
        let (c1, c2) = fc.leading_error_coeffs().unwrap();
        let nu = 3.5;
        let (o1, o2) = ((1.0 + nu) / 2.0, (1.0 + nu) * (1.0 + nu) / 36.0);
        let x1 = (nu - 3.0) / 2.0;
        let x2 = (3.0 * nu - 1.0) / 2.0;
        let e1 = (x1 * x1 - x1) * (o1 * (-SQ3 / 2.0) + o2 * 9.0 * SQ3 / 2.0);
        let e2 = (x2 * x2 - x2) * (o1 * 15.0 * PI / 4.0 + o2 * (-135.0 * PI / 2.0));
        assert_eq!(c1.order(), 0);
        assert_eq!(c2.order(), 0);
        assert!((c1.get(0, 0).re - e1).abs() < 1e-8 * e1.abs());
        assert!((c2.get(0, 0).re - e2).abs() < 1e-7 * e2.abs());
    }

    #[test]
    fn leading_coefficients_are_real_and_finite_order() {
        let fc = defaults();
        let (c1, c2) = fc.leading_error_coeffs().unwrap();
        assert!(c1.reality_defect() < 1e-12 && c2.reality_defect() < 1e-12);
        assert!(c1.order() <= 4 && c2.order() <= 4);
        for k in 0..100 {
            let t = 0.1 * (1e-3f64).powf(k as f64 / 99.0);
            assert!(c1.eval(t).im.abs() <= 1e-12 * (1.0 + c1.eval(t).re.abs()));
        }
        assert!((c1.eps_tilde() - fc.params.eps_tilde(1)).abs() < 1e-18);
    }

    #[test]
    fn time_tables_match_finite_differences() {
        let fc = defaults();
        let p = fc.params;
        let (t, r) = (0.05, 0.01);
        let h = t * 1e-3;
        let v = |s: f64| fc.v1(s, r).unwrap();
        let fd = (-v(t + 2.0 * h) + 16.0 * v(t + h) - 30.0 * v(t) + 16.0 * v(t - h) - v(t - 2.0 * h)) / (12.0 * h * h);
        let l = p.lambda_of(t).unwrap();
        let an = fc.dtt_v1_normalized(t, l * r) * l.sqrt() / (t * t);
        assert!((fd - an).abs() < 1e-6 * an.abs(), "{fd} {an}");
    }

    #[test]
    fn v1_vanishes_at_origin_and_grows_linearly() {
        let fc = defaults();
        assert_eq!(fc.v1(0.05, 0.0).unwrap(), 0.0);
        let t = 0.05;
        let p = fc.params;
        let (l, mu) = (p.lambda_of(t).unwrap(), p.mu_of(t).unwrap());
        let mut worst: f64 = 0.0;
        for k in 0..100 {
            let rr = mu.powf(k as f64 / 99.0);
            let v = fc.v1(t, rr / l).unwrap();
            worst = worst.max((v / l.sqrt() * mu * mu).abs() / rr);
        }
        assert!(worst < 50.0, "{worst}");
    }

    #[test]
    fn remainder_decays() {
        for f in profiles() {
            let mut worst: f64 = 0.0;
            for k in 0..100 {
                let r = 100.0 * (100f64).powf(k as f64 / 99.0);
                worst = worst.max(f.remainder_jet(r).v.abs() * r / r.ln());
            }
            assert!(worst < 2000.0, "{worst}");
        }
    }

    #[test]
    fn log_coefficient_of_the_tail() {
        let [f1, f2] = profiles();
        assert!((f1.head.b3() + 30.0 * SQ3).abs() < 1e-4, "{}", f1.head.b3());
        assert!((f2.head.b3() - 540.0 * SQ3).abs() < 1e-3, "{}", f2.head.b3());
    }

    #[test]
    fn slope_two_near_origin() {
        for f in profiles() {
            let (a, b) = (1e-3, 1e-2);
            let s = (f.eval(b).unwrap().abs() / f.eval(a).unwrap().abs()).ln() / (b / a).ln();
            assert!((s - 2.0).abs() < 0.05, "{s}");
        }
    }
}
