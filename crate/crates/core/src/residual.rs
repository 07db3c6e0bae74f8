//! The light-cone error e₂ = □u₂ − u₂⁵ of the two-step profile: analytic assembly,
//! a finite-difference oracle, sup certification over the cone, and energies.

use crate::correction_two::SecondCorrection;
use crate::error::{Error, Result};
use crate::profile::w;
use crate::quad::{self, Composite};
use rayon::prelude::*;

/// (U + v)⁵ − U⁵ expanded in powers of v.
pub fn quintic_increment(u: f64, v: f64) -> f64 {
    v * (5.0 * u.powi(4) + v * (10.0 * u.powi(3) + v * (10.0 * u * u + v * (5.0 * u + v))))
}

/// t²λ^(−1/2)e₂ at (t, R), R ≤ μ(t).
pub fn e2_normalized(sc: &SecondCorrection, t: f64, rr: f64) -> Result<f64> {
    let p = &sc.params;
    let mu = p.mu_of(t)?;
    if !(0.0..=mu * (1.0 + 1e-12)).contains(&rr) {
        return Err(Error::Domain(format!("R = {rr} outside [0, μ(t) = {mu}]")));
    }
    let a = (rr / mu).min(1.0);
    let base = sc.first.e1_minus_e10_normalized(t, rr);
    let u1 = w(rr) + sc.first.w1_jet(t, rr).v;
    let w2 = sc.w2(t, a)?;
    Ok(base - mu * mu * quintic_increment(u1, w2))
}

/// e₂(t, r) in physical units for 0 ≤ r ≤ t.
pub fn e2_analytic(sc: &SecondCorrection, t: f64, r: f64) -> Result<f64> {
    let l = sc.params.lambda_of(t)?;
    Ok(l.sqrt() * e2_normalized(sc, t, l * r)? / (t * t))
}

/// The same quantity from differenced values: ∂_t²v₁ − N(u₀, v₁) + □v₂ − [(u₁ + v₂)⁵ − u₁⁵],
/// using □v₂ = −e₁⁰. Spatial cancellations inside □u₀ and □v₁ are left to the profile
/// identities; only the time-dependent pieces are differenced. Normalized like `e2_normalized`.
pub fn e2_finite_difference(sc: &SecondCorrection, t: f64, r: f64) -> Result<f64> {
    let p = sc.params;
    let l = p.lambda_of(t)?;
    // The radial step also follows r so the λ-scale stays resolved near the origin.
    let (ht, hr) = (t / 4000.0, (t / 2000.0).min(r / 20.0));
    if r + 2.0 * hr > t - 2.0 * ht * 1.0001 || r < 2.0 * hr || t + 2.0 * ht >= p.t0 {
        return Err(Error::Domain("stencil leaves the cone interior".into()));
    }
    let v1 = |s: f64| sc.first.v1(s, r).unwrap_or(f64::NAN);
    let v2 = |s: f64, x: f64| sc.v2(s, x).unwrap_or(f64::NAN);
    let dtt_v1 = quad::d2(v1, t, ht);
    let v2tt = quad::d2(|s| v2(s, r), t, ht);
    let v2rr = quad::d2(|x| v2(t, x), r, hr);
    let v2r = quad::d1(|x| v2(t, x), r, hr);
    let box_v2 = v2tt - v2rr - 2.0 * v2r / r;
    let sl = l.sqrt();
    let u0 = sl * w(l * r);
    let v1v = v1(t);
    let n1 = quintic_increment(u0, v1v) - 5.0 * u0.powi(4) * v1v;
    let n2 = quintic_increment(u0 + v1v, v2(t, r));
    Ok((dtt_v1 - n1 + box_v2 - n2) * t * t / sl)
}

/// Normalized sup of the cone error at one time slice.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceBound {
    pub t: f64,
    pub mu: f64,
    /// sup over R ∈ [0, μ] of |t²λ^(−1/2)e₂|μ²(R + 1)/log(R + 2).
    pub sup: f64,
    pub argmax: f64,
    /// The maximum sits at the edge of the scan.
    pub at_boundary: bool,
    /// Sup over each decade [10^k, 10^(k+1)) of R, starting at R < 1.
    pub per_decade: Vec<f64>,
    /// sup over R ∈ [0, 1] of |t²λ^(−1/2)e₂|μ².
    pub near_origin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub slices: Vec<SliceBound>,
    pub energy_in: Vec<f64>,
    pub energy_out: Vec<f64>,
}

impl ResidualReport {
    /// Largest ratio between consecutive normalized sups.
    pub fn max_step_ratio(&self) -> f64 {
        self.slices.windows(2).map(|w| (w[1].sup / w[0].sup).max(w[0].sup / w[1].sup)).fold(1.0, f64::max)
    }
}

fn normalized_weight(rr: f64, mu: f64) -> f64 {
    mu * mu * (rr + 1.0) / (rr + 2.0).ln()
}

/// Two-stage scan: `resolution` log-spaced points on (0, μ], then ×16 refinement around the top decile.
pub fn slice_bound(sc: &SecondCorrection, t: f64, resolution: usize) -> Result<SliceBound> {
    let mu = sc.params.mu_of(t)?;
    let lo = 1e-3;
    let mut grid: Vec<f64> =
        std::iter::once(0.0).chain((0..resolution).map(|k| lo * (mu / lo).powf(k as f64 / (resolution - 1) as f64))).collect();
    let score = |rr: f64| -> Result<f64> { Ok(e2_normalized(sc, t, rr)?.abs() * normalized_weight(rr, mu)) };
    let vals: Vec<f64> = grid.par_iter().map(|&x| score(x)).collect::<Result<_>>()?;
    let mut sorted = vals.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let cut = sorted[(vals.len() / 10).min(vals.len() - 1)];
    let mut extra = Vec::new();
    for i in 0..grid.len() {
        if vals[i] >= cut {
            let a = if i > 0 { grid[i - 1] } else { grid[0] };
            let b = if i + 1 < grid.len() { grid[i + 1] } else { grid[i] };
            for k in 1..16 {
                extra.push(a + (b - a) * k as f64 / 16.0);
            }
        }
    }
    let extra_vals: Vec<f64> = extra.par_iter().map(|&x| score(x)).collect::<Result<_>>()?;
    grid.extend(extra);
    let all: Vec<f64> = vals.into_iter().chain(extra_vals).collect();

    let (mut sup, mut argmax) = (0.0, 0.0);
    let n_dec = (mu.log10().ceil() as usize) + 1;
    let mut per_decade = vec![0.0f64; n_dec];
    let mut near_origin: f64 = 0.0;
    for (&x, &v) in grid.iter().zip(&all) {
        if v > sup {
            sup = v;
            argmax = x;
        }
        let d = if x < 1.0 { 0 } else { (x.log10().floor() as usize + 1).min(n_dec - 1) };
        per_decade[d] = per_decade[d].max(v);
        if x <= 1.0 {
            near_origin = near_origin.max(v / normalized_weight(x, mu) * mu * mu);
        }
    }
    let at_boundary = argmax == 0.0 || (argmax - mu).abs() < 1e-9 * mu;
    Ok(SliceBound { t, mu, sup, argmax, at_boundary, per_decade, near_origin })
}

/// Scans each time slice and tabulates energies inside and outside the cone.
pub fn certify_e2_bound(sc: &SecondCorrection, t_list: &[f64], resolution: usize) -> Result<ResidualReport> {
    if t_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Validation("time slices must be decreasing".into()));
    }
    let slices = t_list.iter().map(|&t| slice_bound(sc, t, resolution)).collect::<Result<Vec<_>>>()?;
    let mut energy_in = Vec::new();
    let mut energy_out = Vec::new();
    for &t in t_list {
        let (ei, eo) = energies(sc, t)?;
        energy_in.push(ei);
        energy_out.push(eo);
    }
    Ok(ResidualReport { slices, energy_in, energy_out })
}

/// ∫[(∂_r u₂)² + (∂_t u₂)² + u₂⁶] r² dr over r ≤ t and over r ≥ t.
pub fn energies(sc: &SecondCorrection, t: f64) -> Result<(f64, f64)> {
    let l = sc.params.lambda_of(t)?;
    let mu = t * l;
    let density = |f: crate::correction_two::Fields, r: f64| (f.ur * f.ur + f.ut * f.ut + f.u.powi(6)) * r * r;
    // Inside: integrate in R, where the profile lives on the unit scale.
    let qi = Composite::geometric(0.0, mu, 0.25, 2, 16);
    let ins: Vec<f64> = qi
        .nodes
        .par_iter()
        .map(|&rr| {
            let r = (rr / l).min(t);
            sc.interior_fields(t, r).map(|f| density(f, r) / l)
        })
        .collect::<Result<_>>()?;
    let e_in = ins.iter().zip(&qi.weights).map(|(v, w)| v * w).sum();
    let qo = Composite::new(&(0..=8).map(|k| t * (1.0 + sc.bump_width * k as f64 / 8.0)).collect::<Vec<_>>(), 12);
    let outs: Vec<f64> = qo.nodes.par_iter().map(|&r| sc.exterior_fields(t, r).map(|f| density(f, r))).collect::<Result<_>>()?;
    let e_out = outs.iter().zip(&qo.weights).map(|(v, w)| v * w).sum();
    Ok((e_in, e_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction_two::ProfileConfig;
    use crate::scaling::ScalingParams;

    fn defaults() -> &'static SecondCorrection {
        static S: std::sync::OnceLock<SecondCorrection> = std::sync::OnceLock::new();
        S.get_or_init(|| SecondCorrection::build(&ScalingParams::default(), &ProfileConfig::default()).unwrap())
    }

    #[test]
    fn increment_expansion() {
        for (u, v) in [(1.3f64, 0.2f64), (-0.4, 1e-3), (2.0, -1.5)] {
            let d: f64 = (u + v).powi(5) - u.powi(5);
            assert!((quintic_increment(u, v) - d).abs() < 1e-12 * (1.0 + d.abs()));
        }
        assert_eq!(quintic_increment(3.0, 0.0), 0.0);
    }

    #[test]
    fn analytic_matches_differences() {
        let sc = defaults();
        let t = 0.05;
        let l = sc.params.lambda_of(t).unwrap();
        let mu = t * l;
        let rs: Vec<f64> = (0..12).map(|k| 1.0 * (200f64).powf(k as f64 / 11.0)).collect();
        let an: Vec<f64> = rs.iter().map(|&rr| e2_normalized(sc, t, rr).unwrap()).collect();
        let fd: Vec<f64> = rs.iter().map(|&rr| e2_finite_difference(sc, t, rr / l).unwrap()).collect();
        let scale = an.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..rs.len() {
            assert!((an[i] - fd[i]).abs() <= 1e-4 * scale, "R = {}: {} vs {} (μ = {mu})", rs[i], an[i], fd[i]);
        }
    }

    #[test]
    fn normalized_sup_is_finite() {
        let sc = defaults();
        let s = slice_bound(sc, 0.05, 256).unwrap();
        assert!(s.sup.is_finite() && s.sup > 0.0);
        assert!(s.near_origin.is_finite());
    }

    #[test]
    fn energy_outside_is_small_and_scales_with_the_bump() {
        let sc = defaults();
        let t = 0.05;
        let (ein, eout) = energies(sc, t).unwrap();
        assert!(ein > 0.0 && eout > 0.0 && eout < ein);
        // The bump slope costs 1/b₁ in gradient energy, so E_out·b₁ levels off as b₁ shrinks.
        let mut prod = Vec::new();
        for b in [0.1, 0.05, 0.025] {
            let mut s = sc.clone();
            s.bump_width = b;
            prod.push(energies(&s, t).unwrap().1 * b);
        }
        assert!((prod[2] / prod[1] - 1.0).abs() < 0.2, "{prod:?}");
    }
}
