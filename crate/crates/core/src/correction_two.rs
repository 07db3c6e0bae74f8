//! Second correction v₂ = λ^(1/2)(μ^(−1)q₁ + μ^(−2)q₂)(a, t), a = r/t, where
//! q = Re Σ ε̃ⁿ g_{n,m}(a) t^((n−2m)i) solves the reduced cone equation level by level,
//! and the C² extension of u₂ = u₀ + v₁ + v₂ past the light cone.

use crate::cheb::{PanelGrid, Stencil};
use crate::correction_one::{d_powers, omega_values, FirstCorrection};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::profile::w_jet;
use crate::scaling::{AdmissibleFn, ScalingParams};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use std::sync::Arc;

pub const DEFAULT_DEPTH: usize = 30;
pub const DEFAULT_BUMP: f64 = 0.1;
const A_DEG: usize = 40;
/// The last node sits at 1 − 2^(−A_LEVELS); beyond it entries use their expansion at a = 1.
const A_LEVELS: i32 = 40;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Panels [0, 1/16, 1/8, 1/4, 1/2] and then halving distance to a = 1.
pub fn cone_grid(deg: usize) -> PanelGrid {
    let mut b = vec![0.0, 1.0 / 16.0, 0.125, 0.25, 0.5];
    for p in 2..=A_LEVELS {
        b.push(1.0 - 2f64.powi(-p));
    }
    PanelGrid::new(b, deg)
}

#[derive(Clone, Debug)]
pub struct RecursionParams {
    pub nu_tilde: f64,
    pub eps_tilde: f64,
    /// Forcing table c̃_{n,m} over base `eps_tilde`.
    pub c_table: AdmissibleFn,
    /// c̃_{n,m}(a) = c̃_{n,m}·a when true, constant otherwise.
    pub linear_in_a: bool,
    pub depth: usize,
}

impl RecursionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu_tilde > 1.0) {
            return Err(Error::Validation(format!("nu_tilde = {} must exceed 1", self.nu_tilde)));
        }
        if (self.c_table.eps_tilde() - self.eps_tilde).abs() > 1e-15 * self.eps_tilde.abs() {
            return Err(Error::Validation("forcing table is over a different base amplitude".into()));
        }
        Ok(())
    }

    fn forcing(&self, n: usize, m: usize, a: f64) -> (C, C) {
        let h = self.c_table.get(n, m);
        if self.linear_in_a {
            (h * a, h)
        } else {
            (h, c(0.0))
        }
    }
}

/// One g_{n,m}: nodal g, g′, g″ and the values of g, g′, g″ at a = 1.
#[derive(Clone, Debug)]
pub struct Entry {
    pub g: Vec<C>,
    pub dg: Vec<C>,
    pub ddg: Vec<C>,
    pub at_one: [C; 3],
}

impl Entry {
    fn zero(len: usize) -> Self {
        let z = vec![c(0.0); len];
        Self { g: z.clone(), dg: z.clone(), ddg: z, at_one: [c(0.0); 3] }
    }

    /// sup over [0, 1] of |g|, |g′|, |g″|.
    pub fn sup_norms(&self) -> [f64; 3] {
        let sup = |v: &[C], e: C| v.iter().fold(e.norm(), |m, z| m.max(z.norm()));
        [sup(&self.g, self.at_one[0]), sup(&self.dg, self.at_one[1]), sup(&self.ddg, self.at_one[2])]
    }
}

/// R_{n,m} and R′_{n,m} at the nodes and at a = 1.
#[derive(Clone, Debug)]
pub struct Rhs {
    pub val: Vec<C>,
    pub der: Vec<C>,
    pub at_one: [C; 2],
}

#[derive(Clone, Debug)]
pub struct CoefficientTable {
    grid: Arc<PanelGrid>,
    pub nu_tilde: f64,
    pub eps_tilde: f64,
    entries: Vec<Vec<Entry>>,
}

impl CoefficientTable {
    pub fn depth(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }

    pub fn entry(&self, n: usize, m: usize) -> &Entry {
        &self.entries[n][m]
    }

    pub fn grid(&self) -> &PanelGrid {
        &self.grid
    }

    fn get(&self, n: isize, m: isize) -> Option<&Entry> {
        if n < 0 || m < 0 || m > n || n as usize >= self.entries.len() {
            None
        } else {
            Some(&self.entries[n as usize][m as usize])
        }
    }

    /// Per-level growth max_m max_k ‖g^(k)_{n,m}‖∞^(1/n), n ≥ 1.
    pub fn growth_by_level(&self) -> Vec<f64> {
        (1..self.entries.len())
            .map(|n| {
                let sup = self.entries[n].iter().flat_map(|e| e.sup_norms()).fold(0.0f64, f64::max);
                sup.powf(1.0 / n as f64)
            })
            .collect()
    }
}

/// R_{n,m} from levels n−1 and n−2 of `table` and the forcing.
pub fn recursion_rhs(table: &CoefficientTable, n: usize, m: usize, rp: &RecursionParams) -> Rhs {
    let nodes = table.grid.nodes();
    let len = nodes.len();
    let (ni, mi) = (n as isize, m as isize);
    let k = (ni - 2 * mi) as f64;
    let nt = rp.nu_tilde;
    let i = C::new(0.0, 1.0);
    let alpha_a = c(1.0 - 2.0 * nt) + i - i * (2.0 * k);
    let alpha_b = c(1.0 - 2.0 * nt) - i - i * (2.0 * k);
    let prev = [table.get(ni - 1, mi), table.get(ni - 1, mi - 1)];
    let alphas = [alpha_a, alpha_b];
    let older = [(table.get(ni - 2, mi - 1), 2.0), (table.get(ni - 2, mi), 1.0), (table.get(ni - 2, mi - 2), 1.0)];

    let mut val = vec![c(0.0); len];
    let mut der = vec![c(0.0); len];
    let mut one = [c(0.0); 2];
    let at = |idx: Option<usize>, e: &Entry, d: usize| -> C {
        match (idx, d) {
            (Some(j), 0) => e.g[j],
            (Some(j), 1) => e.dg[j],
            (Some(j), _) => e.ddg[j],
            (None, d) => e.at_one[d],
        }
    };
    for slot in 0..=len {
        let (idx, a) = if slot < len { (Some(slot), nodes[slot]) } else { (None, 1.0) };
        let (f, fd) = rp.forcing(n, m, a);
        let (mut r, mut rd) = (f, fd);
        for (e, al) in prev.iter().zip(alphas.iter()) {
            if let Some(e) = e {
                let (g, g1, g2) = (at(idx, e, 0), at(idx, e, 1), at(idx, e, 2));
                r -= g1 * (2.0 * a) + al * g;
                rd -= g1 * 2.0 + g2 * (2.0 * a) + al * g1;
            }
        }
        for (e, w) in older.iter() {
            if let Some(e) = e {
                r += at(idx, e, 0) * *w;
                rd += at(idx, e, 1) * *w;
            }
        }
        match idx {
            Some(j) => {
                val[j] = r;
                der[j] = rd;
            }
            None => one = [r, rd],
        }
    }
    Rhs { val, der, at_one: one }
}

/// g_{n,m} from R_{n,m} by variation of parameters against (1 ± a)^s/a, s = ν̃ + 1 + ki.
pub fn solve_level(grid: &PanelGrid, k: f64, nu_tilde: f64, rhs: &Rhs) -> Entry {
    let nodes = grid.nodes();
    let len = nodes.len();
    let s = C::new(nu_tilde + 1.0, k);
    let one = c(1.0);
    // 1 − a from the break structure; the plain difference loses digits next to a = 1.
    let comp = grid.complement_nodes(1.0);
    let plus = |a: f64, e: C| c(1.0 + a).powc(e);
    let minus = |j: usize, e: C| c(comp[j]).powc(e);

    let ip = grid.cumulative(&(0..len).map(|j| plus(nodes[j], -s) * rhs.val[j] * nodes[j]).collect::<Vec<_>>());
    // Only used for a ≤ 1/2; the integrand blows up toward a = 1.
    let im = grid.cumulative(
        &(0..len).map(|j| if nodes[j] <= 0.5 { minus(j, -s) * rhs.val[j] * nodes[j] } else { c(0.0) }).collect::<Vec<_>>(),
    );
    // K(a) = ∫₀^a ψ′(x)(1 − x)^(1−s) dx with ψ = aR.
    let kk = grid.cumulative(&(0..len).map(|j| (rhs.val[j] + rhs.der[j] * nodes[j]) * minus(j, one - s)).collect::<Vec<_>>());

    let mut e = Entry::zero(len);
    for j in 0..len {
        let a = nodes[j];
        let r = rhs.val[j];
        if a == 0.0 {
            e.ddg[j] = r / 3.0;
            continue;
        }
        let p = plus(a, s - 1.0) * ip[j];
        let dp = (s - 1.0) * plus(a, s - 2.0) * ip[j] + r * (a / (1.0 + a));
        let oma = comp[j];
        let (m, dm) = if a <= 0.5 {
            (minus(j, s - 1.0) * im[j], -(s - 1.0) * minus(j, s - 2.0) * im[j] + r * (a / oma))
        } else {
            ((r * a - minus(j, s - 1.0) * kk[j]) / (s - 1.0), minus(j, s - 2.0) * kk[j])
        };
        let g = (p * (1.0 + a) - m * oma) / (s * (2.0 * a));
        let ag1 = (p + m) * 0.5;
        let ag2 = (dp + dm) * 0.5;
        let g1 = (ag1 - g) / a;
        e.g[j] = g;
        e.dg[j] = g1;
        e.ddg[j] = (ag2 - g1 * 2.0) / a;
    }

    let a_end = grid.hi();
    let [r1, rd1] = rhs.at_one;
    let ip1 = ip[len - 1] + (plus(1.0, -s) * r1) * (1.0 - a_end);
    let p1 = plus(1.0, s - 1.0) * ip1;
    let dp1 = (s - 1.0) * plus(1.0, s - 2.0) * ip1 + r1 * 0.5;
    let m1 = r1 / (s - 1.0);
    let dm1 = (r1 + rd1) / (s - 2.0);
    let g = p1 / s;
    let g1 = (p1 + m1) * 0.5 - g;
    let g2 = (dp1 + dm1) * 0.5 - g1 * 2.0;
    e.at_one = [g, g1, g2];
    e
}

/// Runs the recursion to depth N. Levels are sequential; entries within a level run in parallel.
pub fn build_table(rp: &RecursionParams, grid: Arc<PanelGrid>) -> Result<CoefficientTable> {
    rp.validate()?;
    let mut table = CoefficientTable { grid: grid.clone(), nu_tilde: rp.nu_tilde, eps_tilde: rp.eps_tilde, entries: Vec::new() };
    // With ε̃ = 0 only the n = 0 level contributes.
    let depth = if rp.eps_tilde == 0.0 { 0 } else { rp.depth };
    for n in 0..=depth {
        let level: Vec<Entry> = (0..=n)
            .into_par_iter()
            .map(|m| {
                let rhs = recursion_rhs(&table, n, m, rp);
                solve_level(&grid, n as f64 - 2.0 * m as f64, rp.nu_tilde, &rhs)
            })
            .collect();
        table.entries.push(level);
    }
    Ok(table)
}

/// q with its a-derivatives and t∂_t (at fixed a) derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QJet {
    pub q: f64,
    pub qa: f64,
    pub qaa: f64,
    /// t∂_t q
    pub s: f64,
    /// (t∂_t)² q
    pub ss: f64,
    /// t∂_t ∂_a q
    pub sa: f64,
}

/// Growth certification of a coefficient table.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub per_level: Vec<f64>,
    pub c0: f64,
    /// (max − min)/max of the per-level growth over n ∈ [10, N].
    pub drift: f64,
    pub tail_bound: f64,
}

/// The series q(a, t) = Re Σ ε̃ⁿ g_{n,m}(a) t^((n−2m)i).
#[derive(Clone, Debug)]
pub struct SeriesQ {
    pub table: CoefficientTable,
}

impl SeriesQ {
    pub fn build(rp: &RecursionParams) -> Result<Self> {
        Self::build_on(rp, Arc::new(cone_grid(A_DEG)))
    }

    pub fn build_on(rp: &RecursionParams, grid: Arc<PanelGrid>) -> Result<Self> {
        Ok(Self { table: build_table(rp, grid)? })
    }

    pub fn growth(&self) -> GrowthReport {
        let per_level = self.table.growth_by_level();
        let n = per_level.len();
        let window: Vec<f64> = if n >= 10 { per_level[9..].to_vec() } else { per_level.clone() };
        let c0 = window.iter().cloned().fold(0.0, f64::max);
        let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
        let drift = if c0 > 0.0 { (c0 - lo) / c0 } else { 0.0 };
        let x = c0 * self.table.eps_tilde.abs();
        let tail_bound = if x < 1.0 { x.powi(n as i32 + 1) / (1.0 - x) } else { f64::INFINITY };
        GrowthReport { per_level, c0, drift, tail_bound }
    }

    /// Fails when the fitted growth makes the series unsafe.
    pub fn certify(&self) -> Result<GrowthReport> {
        let g = self.growth();
        if g.c0 * self.table.eps_tilde.abs() >= 0.9 {
            return Err(Error::Divergence(g.c0 * self.table.eps_tilde.abs()));
        }
        Ok(g)
    }

    fn values(&self, a: f64, d: usize, st: &Option<Stencil>) -> impl Fn(&Entry) -> C + '_ {
        let st = st.clone();
        move |e: &Entry| {
            let v = match d {
                0 => &e.g,
                1 => &e.dg,
                _ => &e.ddg,
            };
            match &st {
                Some(st) => st.apply(v),
                None => {
                    let h = a - 1.0;
                    let [g0, g1, g2] = e.at_one;
                    match d {
                        0 => g0 + g1 * h + g2 * (0.5 * h * h),
                        1 => g1 + g2 * h,
                        _ => g2,
                    }
                }
            }
        }
    }

    pub fn eval(&self, a: f64, t: f64) -> Result<QJet> {
        if !(0.0..=1.0).contains(&a) || !(t > 0.0) {
            return Err(Error::Domain(format!("(a, t) = ({a}, {t}) outside [0, 1] × (0, ∞)")));
        }
        let st = if a <= self.table.grid.hi() { Some(self.table.grid.stencil(a)) } else { None };
        let (f0, f1, f2) = (self.values(a, 0, &st), self.values(a, 1, &st), self.values(a, 2, &st));
        let cis = C::cis(t.ln());
        let ecis = cis.inv();
        let mut out = QJet::default();
        let mut en = 1.0;
        for (n, level) in self.table.entries.iter().enumerate() {
            // t^(n i) down to t^(−n i).
            let mut w = cis.powi(n as i32) * en;
            for (m, e) in level.iter().enumerate() {
                let k = n as f64 - 2.0 * m as f64;
                let (g, g1, g2) = (f0(e), f1(e), f2(e));
                let wg = w * g;
                let ik = C::new(0.0, k);
                out.q += wg.re;
                out.qa += (w * g1).re;
                out.qaa += (w * g2).re;
                out.s += (ik * wg).re;
                out.ss += -(k * k) * wg.re;
                out.sa += (ik * w * g1).re;
                w *= ecis * ecis;
            }
            en *= self.table.eps_tilde;
            if en == 0.0 {
                break;
            }
        }
        Ok(out)
    }

    /// Reduced-equation operator applied to a `QJet` at (a, t), minus the forcing.
    pub fn reduced_residual(q: &QJet, a: f64, beta: f64, t_dbeta: f64, forcing: f64) -> f64 {
        let lhs = (1.0 - a * a) * q.qaa + (2.0 * (beta - 1.0) * a + 2.0 / a) * q.qa + (-beta * beta + beta - t_dbeta) * q.q
            - ((q.ss - q.s) + 2.0 * beta * q.s)
            + 2.0 * a * q.sa;
        lhs - forcing
    }
}

/// Build configuration for the second correction.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileConfig {
    pub depth: usize,
    pub n_max_time: usize,
    pub bump: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { depth: DEFAULT_DEPTH, n_max_time: 8, bump: DEFAULT_BUMP }
    }
}

/// u₂ together with ∂_r, ∂_r², and t∂_t at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Fields {
    pub u: f64,
    pub ur: f64,
    pub urr: f64,
    pub ut: f64,
}

impl std::ops::Add for Fields {
    type Output = Fields;
    fn add(self, o: Fields) -> Fields {
        Fields { u: self.u + o.u, ur: self.ur + o.ur, urr: self.urr + o.urr, ut: self.ut + o.ut }
    }
}

/// Quintic smoothstep: 1 for x ≤ 1, 0 for x ≥ 1 + b, C² in between.
pub fn bump(x: f64, b: f64) -> Jet {
    if x <= 1.0 {
        return Jet::constant(1.0);
    }
    if x >= 1.0 + b {
        return Jet::constant(0.0);
    }
    let y = (x - 1.0) / b;
    let p = y * y * y * (10.0 - 15.0 * y + 6.0 * y * y);
    let dp = 30.0 * y * y * (1.0 - y) * (1.0 - y);
    let ddp = 60.0 * y * (1.0 - y) * (1.0 - 2.0 * y);
    Jet::new(1.0 - p, -dp / b, -ddp / (b * b))
}

#[derive(Clone, Debug)]
pub struct SecondCorrection {
    pub params: ScalingParams,
    pub first: FirstCorrection,
    /// (c₁, c₂), each over its level's base amplitude.
    pub c: [AdmissibleFn; 2],
    pub q: [SeriesQ; 2],
    pub bump_width: f64,
}

impl SecondCorrection {
    pub fn build(params: &ScalingParams, cfg: &ProfileConfig) -> Result<Self> {
        params.validate()?;
        params.validate_level(1)?;
        params.validate_level(2)?;
        let first = FirstCorrection::build(params, cfg.n_max_time)?;
        Self::from_first(first, cfg)
    }

    pub fn from_first(first: FirstCorrection, cfg: &ProfileConfig) -> Result<Self> {
        let params = first.params;
        let (c1, c2) = first.leading_error_coeffs()?;
        let grid = Arc::new(cone_grid(A_DEG));
        let mk = |j: usize, ct: &AdmissibleFn| RecursionParams {
            nu_tilde: params.nu_tilde(j),
            eps_tilde: params.eps_tilde(j),
            c_table: ct.clone(),
            linear_in_a: j == 1,
            depth: cfg.depth,
        };
        let q1 = SeriesQ::build_on(&mk(1, &c1), grid.clone())?;
        let q2 = SeriesQ::build_on(&mk(2, &c2), grid)?;
        Ok(Self { params, first, c: [c1, c2], q: [q1, q2], bump_width: cfg.bump })
    }

    fn check(&self, t: f64, r: f64) -> Result<()> {
        if !(t > 0.0 && t < self.params.t0) {
            return Err(Error::Domain(format!("t = {t} outside (0, t0)")));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("r = {r} invalid")));
        }
        Ok(())
    }

    /// q₁ and q₂ at (a, t).
    pub fn q_pair(&self, a: f64, t: f64) -> Result<[QJet; 2]> {
        Ok([self.q[0].eval(a, t)?, self.q[1].eval(a, t)?])
    }

    /// w₂ = μ^(−1)q₁ + μ^(−2)q₂, so v₂ = λ^(1/2)w₂.
    pub fn w2(&self, t: f64, a: f64) -> Result<f64> {
        let mu = t * self.params.lambda_unchecked(t);
        let [q1, q2] = self.q_pair(a, t)?;
        Ok(q1.q / mu + q2.q / (mu * mu))
    }

    pub fn v2(&self, t: f64, r: f64) -> Result<f64> {
        self.check(t, r)?;
        if r > t {
            return Err(Error::Domain(format!("r = {r} beyond the cone r = {t}")));
        }
        Ok(self.params.lambda_unchecked(t).sqrt() * self.w2(t, r / t)?)
    }

    /// u₂ inside the cone and its C² extension outside.
    pub fn u2(&self, t: f64, r: f64) -> Result<f64> {
        self.check(t, r)?;
        if r <= t {
            Ok(self.interior_fields(t, r)?.u)
        } else {
            self.extend_beyond_cone(t, r)
        }
    }

    /// u₂ and its derivatives for 0 ≤ r ≤ t; `ut` is ∂_t (not t∂_t).
    pub fn interior_fields(&self, t: f64, r: f64) -> Result<Fields> {
        self.check(t, r)?;
        let p = &self.params;
        let l = p.lambda_unchecked(t);
        let (sl, mu, kap) = (l.sqrt(), t * l, p.kappa_unchecked(t));
        let rr = l * r;
        let a = (r / t).min(1.0);

        let wj = w_jet(Jet::var(rr));
        let dw = d_powers(wj, rr)[1];
        let u0 = Fields { u: sl * wj.v, ur: sl * l * wj.d, urr: sl * l * l * wj.dd, ut: -sl * (1.0 + kap) * dw / t };

        let om = omega_values(p, t);
        let tom = omega_tdt(p, t);
        let mut v1 = Fields::default();
        for j in 0..2 {
            let f = self.first.f[j].jet_unchecked(rr);
            let df = d_powers(f, rr)[1];
            v1.u += om[j] * f.v;
            v1.ur += om[j] * f.d * l;
            v1.urr += om[j] * f.dd * l * l;
            v1.ut += ((2.0 * kap * om[j] + tom[j]) * f.v - (1.0 + kap) * om[j] * df) / t;
        }
        let s1 = sl / (mu * mu);
        let v1 = Fields { u: s1 * v1.u, ur: s1 * v1.ur, urr: s1 * v1.urr, ut: s1 * v1.ut };

        let qs = self.q_pair(a, t)?;
        let mut v2 = Fields::default();
        for (pidx, q) in qs.iter().enumerate() {
            let pw = (pidx + 1) as f64;
            let f = sl * mu.powf(-pw);
            let beta = (pw - 0.5) * kap - 0.5;
            v2.u += f * q.q;
            v2.ur += f * q.qa / t;
            v2.urr += f * q.qaa / (t * t);
            v2.ut += f * (beta * q.q + q.s - a * q.qa) / t;
        }
        Ok(u0 + v1 + v2)
    }

    /// Anchors ∂_r^k u₂(t, t), k = 0, 1, 2.
    pub fn anchors(&self, t: f64) -> Result<[f64; 3]> {
        let f = self.interior_fields(t, t)?;
        Ok([f.u, f.ur, f.urr])
    }

    /// Quadratic Taylor continuation from r = t times the bump B₁(r/t).
    pub fn extend_beyond_cone(&self, t: f64, r: f64) -> Result<f64> {
        self.check(t, r)?;
        if r < t {
            return Err(Error::Domain(format!("r = {r} inside the cone")));
        }
        let b = bump(r / t, self.bump_width);
        if b.v == 0.0 {
            return Ok(0.0);
        }
        let [a0, a1, a2] = self.anchors(t)?;
        let h = r - t;
        Ok((a0 + h * a1 + 0.5 * h * h * a2) * b.v)
    }

    /// Extension with ∂_r and ∂_t for r ≥ t. Anchor t-derivatives use 4th-order differences.
    pub fn exterior_fields(&self, t: f64, r: f64) -> Result<Fields> {
        self.check(t, r)?;
        let bw = self.bump_width;
        let x = r / t;
        let b = bump(x, bw);
        if b.v == 0.0 && b.d == 0.0 {
            return Ok(Fields::default());
        }
        let an = self.anchors(t)?;
        let ht = t * 1e-4;
        let mut dan = [0.0; 3];
        let pts = [self.anchors(t - 2.0 * ht)?, self.anchors(t - ht)?, self.anchors(t + ht)?, self.anchors(t + 2.0 * ht)?];
        for k in 0..3 {
            dan[k] = (pts[0][k] - 8.0 * pts[1][k] + 8.0 * pts[2][k] - pts[3][k]) / (12.0 * ht);
        }
        let h = r - t;
        let uh = an[0] + h * an[1] + 0.5 * h * h * an[2];
        let uh_r = an[1] + h * an[2];
        let uh_t = dan[0] + h * dan[1] + 0.5 * h * h * dan[2] - an[1] - h * an[2];
        Ok(Fields {
            u: uh * b.v,
            ur: uh_r * b.v + uh * b.d / t,
            urr: an[2] * b.v + 2.0 * uh_r * b.d / t + uh * b.dd / (t * t),
            ut: uh_t * b.v - uh * b.d * r / (t * t),
        })
    }
}

/// t∂_t ω₁ and t∂_t ω₂.
pub fn omega_tdt(p: &ScalingParams, t: f64) -> [f64; 2] {
    let l = t.ln();
    let tk = -p.eps0 * l.sin();
    let ttk = -p.eps0 * l.cos();
    let k = p.kappa_unchecked(t);
    [0.5 * (tk - ttk), 2.0 * (1.0 + k) * tk / 36.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(nu_tilde: f64, c0: f64, linear: bool) -> SeriesQ {
        let rp = RecursionParams {
            nu_tilde,
            eps_tilde: 0.0,
            c_table: AdmissibleFn::constant(c0, 0.0, 0),
            linear_in_a: linear,
            depth: 0,
        };
        SeriesQ::build(&rp).unwrap()
    }

    #[test]
    fn constant_forcing_series_at_origin() {
        let q = single(4.75, 1.0, false);
        for a in [1e-3, 5e-3, 1e-2] {
            let v = q.eval(a, 0.05).unwrap();
            assert!((v.q / (a * a) - 1.0 / 6.0).abs() < 2.0 * a, "{}", v.q / (a * a));
        }
        let e = q.table.entry(0, 0);
        assert_eq!((e.g[0], e.dg[0]), (c(0.0), c(0.0)));
    }

    #[test]
    fn linear_forcing_series_at_origin() {
        let q = single(1.25, 2.0, true);
        for a in [1e-3, 5e-3] {
            let v = q.eval(a, 0.05).unwrap();
            assert!((v.q / a.powi(3) - 2.0 / 12.0).abs() < 5.0 * a, "{}", v.q / a.powi(3));
        }
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let q = single(2.0, 0.0, false);
        assert_eq!(q.eval(0.7, 0.01).unwrap(), QJet::default());
    }

    #[test]
    fn rhs_base_case_is_forcing() {
        let rp = RecursionParams {
            nu_tilde: 2.0,
            eps_tilde: 0.0,
            c_table: AdmissibleFn::constant(3.0, 0.0, 0),
            linear_in_a: true,
            depth: 0,
        };
        let grid = Arc::new(cone_grid(12));
        let empty = CoefficientTable { grid: grid.clone(), nu_tilde: 2.0, eps_tilde: 0.0, entries: vec![] };
        let r = recursion_rhs(&empty, 0, 0, &rp);
        for (j, &a) in grid.nodes().iter().enumerate() {
            assert_eq!(r.val[j], c(3.0 * a));
        }
        assert_eq!(r.at_one, [c(3.0), c(3.0)]);
    }

    #[test]
    fn single_level_solves_its_ode() {
        // Level-0 entries solve (1 − a²)g″ + (2(ν̃ − 1)a + 2/a)g′ + (ν̃ − ν̃²)g = R.
        for (nt, lin) in [(1.25, true), (4.75, false), (2.3, false)] {
            let q = single(nt, 1.0, lin);
            let e = q.table.entry(0, 0);
            let nodes = q.table.grid().nodes();
            let mut worst: f64 = 0.0;
            for (j, &a) in nodes.iter().enumerate() {
                if a == 0.0 || a > 1.0 - 1e-6 {
                    continue;
                }
                let lhs = (1.0 - a * a) * e.ddg[j] + (2.0 * (nt - 1.0) * a + 2.0 / a) * e.dg[j] + (nt - nt * nt) * e.g[j];
                let rhs = if lin { a } else { 1.0 };
                worst = worst.max((lhs - rhs).norm());
            }
            assert!(worst < 1e-9, "nu~ {nt}: {worst}");
            // The equation also holds at a = 1 with the limit values.
            let [g, g1, _] = e.at_one;
            let at1 = g1 * (2.0 * nt) + g * (nt - nt * nt);
            assert!((at1 - c(1.0)).norm() < 1e-9, "{at1}");
        }
    }

    #[test]
    fn endpoint_limits_match_grid() {
        let q = single(4.75, 1.0, false);
        let e = q.table.entry(0, 0);
        let n = e.g.len() - 1;
        assert!((e.g[n] - e.at_one[0]).norm() < 1e-9);
        assert!((e.dg[n] - e.at_one[1]).norm() < 1e-9);
        assert!((e.ddg[n] - e.at_one[2]).norm() < 1e-8, "{} {}", e.ddg[n], e.at_one[2]);
    }

    fn defaults() -> &'static SecondCorrection {
        static S: std::sync::OnceLock<SecondCorrection> = std::sync::OnceLock::new();
        S.get_or_init(|| SecondCorrection::build(&ScalingParams::default(), &ProfileConfig::default()).unwrap())
    }

    #[test]
    fn entries_vanish_to_second_order_at_origin() {
        for q in &defaults().q {
            for n in 0..=q.table.depth() {
                for m in 0..=n {
                    let e = q.table.entry(n, m);
                    assert!(e.g[0].norm() < 1e-10 && e.dg[0].norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn conjugate_symmetry_of_entries() {
        for q in &defaults().q {
            // Asymmetry weighted by ε̃ⁿ against the size of the leading term.
            let base = q.table.entry(0, 0).sup_norms()[0];
            for n in 0..=q.table.depth() {
                let scale = base / q.table.eps_tilde.abs().powi(n as i32);
                for m in 0..=n {
                    let (a, b) = (q.table.entry(n, m), q.table.entry(n, n - m));
                    let d = a.g.iter().zip(&b.g).map(|(x, y)| (x - y.conj()).norm()).fold(0.0, f64::max);
                    assert!(d <= 1e-13 * scale, "({n}, {m}): {d}");
                }
            }
        }
    }

    #[test]
    fn series_solves_reduced_equation_with_analytic_derivatives() {
        let sc = defaults();
        let p = sc.params;
        for j in 0..2 {
            let jv = (j + 1) as f64;
            let (mut worst, mut fmax): (f64, f64) = (0.0, 0.0);
            for ia in 0..25 {
                let a = (ia as f64 + 0.5) / 25.0;
                for it in 0..10 {
                    let t = 0.1 * (0.01f64).powf(it as f64 / 9.0);
                    let beta = (jv - 0.5) * p.kappa_of(t).unwrap() - 0.5;
                    let tdb = (jv - 0.5) * p.t_dkappa(t);
                    let forcing = sc.c[j].eval_re(t) * if j == 0 { a } else { 1.0 };
                    fmax = fmax.max(forcing.abs());
                    let qj = sc.q[j].eval(a, t).unwrap();
                    worst = worst.max(SeriesQ::reduced_residual(&qj, a, beta, tdb, forcing).abs());
                }
            }
            assert!(worst < 1e-8 * fmax, "j = {}: {worst} vs {fmax}", j + 1);
        }
    }

    #[test]
    fn growth_certificate() {
        for q in &defaults().q {
            let g = q.certify().unwrap();
            assert!(g.tail_bound < 1e-8, "{g:?}");
            assert_eq!(g.per_level.len(), DEFAULT_DEPTH);
        }
    }

    #[test]
    fn linear_level_second_derivative_vanishes_at_origin() {
        let q = &defaults().q[0];
        let mut worst: f64 = 0.0;
        for k in 1..=100 {
            let a = 0.5 * k as f64 / 100.0;
            for t in [0.1, 0.03, 0.01] {
                worst = worst.max(q.eval(a, t).unwrap().qaa.abs() / a);
            }
        }
        assert!(worst < 10.0, "{worst}");
    }

    #[test]
    fn pure_power_series_is_time_independent() {
        let p = ScalingParams::new(3.5, 0.0, 0.1).unwrap();
        let sc = SecondCorrection::build(&p, &ProfileConfig::default()).unwrap();
        assert_eq!(sc.q[0].table.depth(), 0);
        let a = sc.q[1].eval(0.4, 0.05).unwrap();
        let b = sc.q[1].eval(0.4, 0.0123).unwrap();
        assert_eq!(a.q, b.q);
        assert_eq!(a.s, 0.0);
    }

    #[test]
    fn extension_is_continuous_and_supported() {
        let sc = defaults();
        let t = 0.05;
        let inside = sc.u2(t, t).unwrap();
        let outside = sc.extend_beyond_cone(t, t * (1.0 + 1e-15)).unwrap();
        assert!((inside - outside).abs() <= 1e-12 * inside.abs());
        assert_eq!(sc.extend_beyond_cone(t, t * (1.0 + 2.0 * sc.bump_width)).unwrap(), 0.0);
        let e = sc.exterior_fields(t, t).unwrap();
        let i = sc.interior_fields(t, t).unwrap();
        assert!((e.ur - i.ur).abs() <= 1e-12 * i.ur.abs());
        assert!((e.urr - i.urr).abs() <= 1e-12 * i.urr.abs());
    }

    #[test]
    fn v2_vanishes_at_origin() {
        let sc = defaults();
        assert_eq!(sc.v2(0.05, 0.0).unwrap(), 0.0);
        assert!(sc.v2(0.05, 0.1).is_err());
    }

    #[test]
    fn bump_is_c2() {
        let b = 0.1;
        assert_eq!(bump(1.0, b), Jet::constant(1.0));
        assert_eq!(bump(1.0 + b, b).v, 0.0);
        let j = bump(1.0 + 1e-9, b);
        assert!(j.d.abs() < 1e-12 && j.dd.abs() < 1e-4);
    }
}
