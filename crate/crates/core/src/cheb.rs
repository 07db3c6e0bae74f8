//! Piecewise Chebyshev–Lobatto representation on a panel partition, with
//! barycentric evaluation and cumulative integration.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

pub trait Sample: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T> Sample for T where T: Copy + Default + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

#[derive(Clone, Debug)]
pub struct PanelGrid {
    breaks: Vec<f64>,
    deg: usize,
    /// Reference nodes −cos(πj/deg), ascending on [−1, 1].
    xref: Vec<f64>,
    bary: Vec<f64>,
    /// cum[i][j]: weight of value j in ∫_{−1}^{x_i}.
    cum: Vec<Vec<f64>>,
    nodes: Vec<f64>,
}

impl PanelGrid {
    pub fn new(breaks: Vec<f64>, deg: usize) -> Self {
        assert!(breaks.len() >= 2 && deg >= 2);
        assert!(breaks.windows(2).all(|w| w[1] > w[0]));
        let xref: Vec<f64> = (0..=deg).map(|j| -(PI * j as f64 / deg as f64).cos()).collect();
        let bary: Vec<f64> = (0..=deg)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == deg {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let cum = cumulative_matrix(&xref);
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * (deg + 1));
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            for &x in &xref {
                nodes.push(0.5 * (a + b) + 0.5 * (b - a) * x);
            }
        }
        Self { breaks, deg, xref, bary, cum, nodes }
    }

    /// Panels [0, first], then doubling toward `end`, refined near zero by `lead` halvings.
    pub fn geometric_outward(first: f64, end: f64, lead: usize, deg: usize) -> Self {
        let mut b = vec![0.0];
        for k in (1..=lead).rev() {
            b.push(first / 2f64.powi(k as i32));
        }
        let mut x = first;
        while x < end {
            b.push(x);
            x *= 2.0;
        }
        b.push(end);
        Self::new(b, deg)
    }

    pub fn n_panels(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn deg(&self) -> usize {
        self.deg
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `anchor − x` at every node, formed from break distances so that nodes
    /// close to the anchor keep full relative precision.
    pub fn complement_nodes(&self, anchor: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nodes.len());
        for w in self.breaks.windows(2) {
            let (da, db) = (anchor - w[0], anchor - w[1]);
            for &x in &self.xref {
                out.push(0.5 * (da + db) - 0.5 * (da - db) * x);
            }
        }
        out
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn lo(&self) -> f64 {
        self.breaks[0]
    }

    pub fn hi(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sample<T: Sample>(&self, f: impl Fn(f64) -> T) -> Vec<T> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    fn panel_of(&self, x: f64) -> usize {
        let n = self.n_panels();
        match self.breaks.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Evaluation stencil at `x`: node offset and weights summing to one.
    pub fn stencil(&self, x: f64) -> Stencil {
        let p = self.panel_of(x);
        let (a, b) = (self.breaks[p], self.breaks[p + 1]);
        let xr = (2.0 * x - a - b) / (b - a);
        let off = p * (self.deg + 1);
        let mut w = vec![0.0; self.deg + 1];
        if let Some(j) = self.xref.iter().position(|&z| z == xr) {
            w[j] = 1.0;
            return Stencil { off, w };
        }
        let mut den = 0.0;
        for j in 0..=self.deg {
            let c = self.bary[j] / (xr - self.xref[j]);
            w[j] = c;
            den += c;
        }
        w.iter_mut().for_each(|c| *c /= den);
        Stencil { off, w }
    }

    pub fn eval<T: Sample>(&self, vals: &[T], x: f64) -> T {
        self.stencil(x).apply(vals)
    }

    /// ∫_{lo}^{x_i} f at every node, panel by panel.
    pub fn cumulative<T: Sample>(&self, vals: &[T]) -> Vec<T> {
        let m = self.deg + 1;
        let mut out = vec![T::default(); vals.len()];
        let mut carry = T::default();
        for p in 0..self.n_panels() {
            let h = 0.5 * (self.breaks[p + 1] - self.breaks[p]);
            let v = &vals[p * m..(p + 1) * m];
            for i in 0..m {
                let mut s = T::default();
                for (j, &vj) in v.iter().enumerate() {
                    let c = self.cum[i][j];
                    if c != 0.0 {
                        s = s + vj * c;
                    }
                }
                out[p * m + i] = carry + s * h;
            }
            carry = out[p * m + m - 1];
        }
        out
    }

    pub fn integral<T: Sample>(&self, vals: &[T]) -> T {
        *self.cumulative(vals).last().unwrap()
    }
}

#[derive(Clone, Debug)]
pub struct Stencil {
    off: usize,
    w: Vec<f64>,
}

impl Stencil {
    pub fn apply<T: Sample>(&self, vals: &[T]) -> T {
        let mut s = T::default();
        for (j, &c) in self.w.iter().enumerate() {
            if c != 0.0 {
                s = s + vals[self.off + j] * c;
            }
        }
        s
    }
}

/// Values at Lobatto nodes → Chebyshev coefficients (direct DCT-I).
fn values_to_coeffs(x: &[f64], v: &[f64]) -> Vec<f64> {
    let n = x.len() - 1;
    let mut c = vec![0.0; n + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 0..=n {
            // Nodes are stored ascending; θ_j = π(n − j)/n maps back to cos θ.
            let theta = PI * (n - j) as f64 / n as f64;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            s += w * v[j] * (k as f64 * theta).cos();
        }
        let scale = if k == 0 || k == n { 1.0 / n as f64 } else { 2.0 / n as f64 };
        *ck = s * scale;
    }
    c
}

fn cheb_eval(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

fn cumulative_matrix(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len() - 1;
    let mut m = vec![vec![0.0; n + 1]; n + 1];
    for j in 0..=n {
        let mut e = vec![0.0; n + 1];
        e[j] = 1.0;
        let c = values_to_coeffs(x, &e);
        // Antiderivative coefficients (degree n + 1).
        let mut a = vec![0.0; n + 2];
        for k in 0..=n {
            match k {
                0 => a[1] += c[0],
                1 => a[2] += c[1] / 4.0,
                _ => {
                    a[k + 1] += c[k] / (2.0 * (k + 1) as f64);
                    a[k - 1] -= c[k] / (2.0 * (k - 1) as f64);
                }
            }
        }
        let base = cheb_eval(&a, -1.0);
        for i in 0..=n {
            m[i][j] = cheb_eval(&a, x[i]) - base;
        }
    }
    m
}
