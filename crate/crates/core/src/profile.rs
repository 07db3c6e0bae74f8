//! Ground state W, the bulk term u₀ = λ^(1/2) W(λr), the scaling generator 𝒟 = 1/2 + R∂_R,
//! fundamental systems of L₀ = ∂² + (2/R)∂ + 5W⁴, and the bulk error e₀.
//!
//! Closed forms are written in s = R²/3 and evaluated as jets, so first and
//! second derivatives come out of the same expression.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scaling::{AdmissibleFn, ScalingParams};

fn s_of(r: Jet) -> Jet {
    r * r * (1.0 / 3.0)
}

pub fn w_jet(r: Jet) -> Jet {
    (1.0 + s_of(r)).powf(-0.5)
}

/// W(R) = (1 + R²/3)^(−1/2).
pub fn w(r: f64) -> f64 {
    (1.0 + r * r / 3.0).powf(-0.5)
}

/// φ₁ = (1 − s)/(1 + s)^(3/2).
pub fn phi1_jet(r: Jet) -> Jet {
    let s = s_of(r);
    (1.0 - s) * (1.0 + s).powf(-1.5)
}

/// φ₂ = (1 − 6s + s²)/(R(1 + s)^(3/2)); singular at R = 0.
pub fn phi2_jet(r: Jet) -> Result<Jet> {
    if r.v <= 0.0 {
        return Err(Error::Domain("phi2 is singular at R = 0".into()));
    }
    Ok(phi_tilde2_jet(r) / r)
}

/// φ̃₁ = Rφ₁.
pub fn phi_tilde1_jet(r: Jet) -> Jet {
    r * phi1_jet(r)
}

/// φ̃₂ = (1 − 6s + s²)/(1 + s)^(3/2).
pub fn phi_tilde2_jet(r: Jet) -> Jet {
    let s = s_of(r);
    (1.0 - 6.0 * s + s * s) * (1.0 + s).powf(-1.5)
}

/// g₁ = φ₁.
pub fn g1_jet(r: Jet) -> Jet {
    phi1_jet(r)
}

/// g₂ = (9 − 30R² + R⁴)/(1 + s)^(5/2) = 9(1 − 10s + s²)/(1 + s)^(5/2).
pub fn g2_jet(r: Jet) -> Jet {
    let s = s_of(r);
    9.0 * (1.0 - 10.0 * s + s * s) * (1.0 + s).powf(-2.5)
}

pub fn g1(r: f64) -> f64 {
    g1_jet(Jet::constant(r)).v
}

pub fn g2(r: f64) -> f64 {
    g2_jet(Jet::constant(r)).v
}

pub fn phi1(r: f64) -> f64 {
    phi1_jet(Jet::constant(r)).v
}

pub fn phi2(r: f64) -> Result<f64> {
    Ok(phi2_jet(Jet::constant(r))?.v)
}

pub fn phi_tilde1(r: f64) -> f64 {
    phi_tilde1_jet(Jet::constant(r)).v
}

pub fn phi_tilde2(r: f64) -> f64 {
    phi_tilde2_jet(Jet::constant(r)).v
}

/// 5W⁴ = 5/(1 + s)².
pub fn potential(r: f64) -> f64 {
    let q = 1.0 + r * r / 3.0;
    5.0 / (q * q)
}

/// (𝒟f)(R) = f/2 + R f′ from a jet of f at R.
pub fn scaling_op_d(f: Jet, r: f64) -> f64 {
    0.5 * f.v + r * f.d
}

/// (𝒟²f)(R) = f/4 + 2R f′ + R² f″.
pub fn scaling_op_d2(f: Jet, r: f64) -> f64 {
    0.25 * f.v + 2.0 * r * f.d + r * r * f.dd
}

/// L₀f = f″ + (2/R) f′ + 5W⁴ f.
pub fn l0_apply(f: Jet, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Domain("L0 evaluated at R <= 0".into()));
    }
    Ok(f.dd + 2.0 * f.d / r + potential(r) * f.v)
}

/// Residual W″ + (2/R)W′ + W⁵.
pub fn ground_state_residual(r: f64) -> f64 {
    let j = w_jet(Jet::var(r));
    j.dd + 2.0 * j.d / r + j.v.powi(5)
}

/// Wronskian φ̃₁′φ̃₂ − φ̃₁φ̃₂′.
pub fn tilde_wronskian(r: f64) -> f64 {
    let a = phi_tilde1_jet(Jet::var(r));
    let b = phi_tilde2_jet(Jet::var(r));
    a.d * b.v - a.v * b.d
}

/// u₀(t, r) = λ^(1/2) W(λr).
pub fn u0(p: &ScalingParams, t: f64, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::Domain(format!("r = {r} < 0")));
    }
    let l = p.lambda_of(t)?;
    Ok(l.sqrt() * w(l * r))
}

/// Time coefficients of the bulk error in factored form.
#[derive(Clone, Debug)]
pub struct BulkCoefficients {
    /// ω₁ = t²(λ′/λ)′/2 = (1 + κ − tκ′)/2.
    pub omega1: AdmissibleFn,
    /// ω₂ = (tλ′/λ)²/36 = (1 + κ)²/36.
    pub omega2: AdmissibleFn,
}

impl BulkCoefficients {
    pub fn new(p: &ScalingParams, eps: f64, n_max: usize) -> Result<Self> {
        let k = p.kappa_table(eps, n_max);
        let one_k = k.add_const(1.0);
        let omega1 = one_k.sub(&k.tdt())?.scale(0.5);
        let omega2 = one_k.mul(&one_k)?.scale(1.0 / 36.0);
        Ok(Self { omega1, omega2 })
    }
}

/// t² λ^(−1/2) e₀ = ω₁ g₁ + ω₂ g₂, factored path.
pub fn bulk_error_factored(c: &BulkCoefficients, t: f64, r: f64) -> f64 {
    c.omega1.eval_re(t) * g1(r) + c.omega2.eval_re(t) * g2(r)
}

/// t² λ^(−1/2) e₀ = (tλ′/λ)² 𝒟²W + t²(λ′/λ)′ 𝒟W, direct path.
pub fn bulk_error_direct(p: &ScalingParams, t: f64, r: f64) -> Result<f64> {
    let k = p.kappa_of(t)?;
    let wj = w_jet(Jet::var(r));
    let a = (1.0 + k) * (1.0 + k);
    let b = 1.0 + k - p.t_dkappa(t);
    Ok(a * scaling_op_d2(wj, r) + b * scaling_op_d(wj, r))
}

/// e₀(t, r) in physical units.
pub fn bulk_error_e0(p: &ScalingParams, t: f64, r: f64) -> Result<f64> {
    let l = p.lambda_of(t)?;
    Ok(l.sqrt() * bulk_error_direct(p, t, l * r)? / (t * t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
        let h = 1e-5;
        ((f(x + h) - f(x - h)) / (2.0 * h), (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h))
    }

    #[test]
    fn ground_state_values() {
        assert_eq!(w(0.0), 1.0);
        assert!((w(3f64.sqrt()) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ground_state_solves_stationary_equation() {
        let mut worst: f64 = 0.0;
        for i in 0..=1000 {
            let r = 0.01 * (5000f64).powf(i as f64 / 1000.0);
            worst = worst.max(ground_state_residual(r).abs());
        }
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn jets_match_central_differences() {
        let cases: [(fn(Jet) -> Jet, &str); 5] =
            [(w_jet, "W"), (phi1_jet, "phi1"), (phi_tilde2_jet, "pt2"), (g2_jet, "g2"), (phi_tilde1_jet, "pt1")];
        for (f, name) in cases {
            for &r in &[0.3, 1.0, 1.7320508, 4.0, 11.0] {
                let j = f(Jet::var(r));
                let (d, dd) = fd(|x| f(Jet::constant(x)).v, r);
                assert!((j.d - d).abs() < 1e-7, "{name} d at {r}");
                assert!((j.dd - dd).abs() < 1e-4 * (1.0 + dd.abs()), "{name} dd at {r}");
            }
        }
    }

    #[test]
    fn scaling_generator_identities() {
        assert_eq!(scaling_op_d(w_jet(Jet::var(0.0)), 0.0), 0.5);
        for i in 0..=500 {
            let r = 50.0 * i as f64 / 500.0;
            let wj = w_jet(Jet::var(r));
            assert!((scaling_op_d(wj, r) - phi1(r) / 2.0).abs() < 1e-12);
            let q = 1.0 + r * r / 3.0;
            let closed = (9.0 - 30.0 * r * r + r.powi(4)) / (36.0 * q.powf(2.5));
            assert!((scaling_op_d2(wj, r) - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn fundamental_system_and_wronskian() {
        let mut worst: f64 = 0.0;
        for i in 0..=400 {
            let r = 0.1 + 49.9 * i as f64 / 400.0;
            worst = worst.max(l0_apply(phi1_jet(Jet::var(r)), r).unwrap().abs());
            worst = worst.max(l0_apply(phi2_jet(Jet::var(r)).unwrap(), r).unwrap().abs());
        }
        assert!(worst <= 1e-9, "{worst}");
        for &r in &[0.5, 1.0, 5.0, 20.0] {
            assert!((tilde_wronskian(r) - 1.0).abs() <= 1e-10);
        }
        let p1 = phi_tilde1_jet(Jet::var(0.0));
        assert_eq!((p1.v, p1.d), (0.0, 1.0));
        assert!(phi2(0.0).is_err());
    }

    #[test]
    fn bulk_error_forms_agree() {
        let p = ScalingParams::default();
        let c = BulkCoefficients::new(&p, p.eps0, 40).unwrap();
        assert!(c.omega1.reality_defect() < 1e-16);
        for i in 0..50 {
            let t = 0.001 + 0.098 * i as f64 / 49.0;
            for k in 0..50 {
                let r = 0.05 * (2000f64).powf(k as f64 / 49.0);
                let a = bulk_error_factored(&c, t, r);
                let b = bulk_error_direct(&p, t, r).unwrap();
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300) + 1e-15, "{t} {r} {a} {b}");
            }
        }
    }

    #[test]
    fn bulk_coefficients_at_zero_amplitude() {
        let p = ScalingParams::new(3.5, 0.0, 0.1).unwrap();
        let c = BulkCoefficients::new(&p, 0.0, 40).unwrap();
        for &t in &[0.001, 0.05, 0.3] {
            assert_eq!(c.omega1.eval_re(t), 4.5 / 2.0);
            assert_eq!(c.omega2.eval_re(t), 4.5 * 4.5 / 36.0);
        }
        assert_eq!(g1(0.0), 1.0);
        assert_eq!(g2(0.0), 9.0);
    }

    #[test]
    fn bulk_error_shape_bound() {
        let p = ScalingParams::default();
        let mut worst: f64 = 0.0;
        // R²⟨R⟩^(−3) is a large-R statement; e₀ does not vanish at R = 0.
        for k in 0..200 {
            let r = (1e7f64).powf(k as f64 / 199.0);
            let v = bulk_error_direct(&p, 0.05, r).unwrap().abs();
            worst = worst.max(v * (1.0 + r * r).powf(1.5) / (r * r));
        }
        assert!(worst.is_finite() && worst < 100.0, "{worst}");
    }
}
