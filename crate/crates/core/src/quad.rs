//! Gauss–Legendre rules, composite quadrature on break points, and central differences.

use std::f64::consts::PI;

/// Nodes and weights of the n-point rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite rule: `order` points on each interval between consecutive breaks.
#[derive(Clone, Debug)]
pub struct Composite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Composite {
    pub fn new(breaks: &[f64], order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * breaks.len());
        let mut weights = Vec::with_capacity(order * breaks.len());
        for b in breaks.windows(2) {
            let (m, h) = (0.5 * (b[0] + b[1]), 0.5 * (b[1] - b[0]));
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(m + h * xi);
                weights.push(h * wi);
            }
        }
        Self { nodes, weights }
    }

    /// Breaks at `lo` then doubling up to `hi`, each interval split into `sub` pieces.
    pub fn geometric(lo: f64, hi: f64, first: f64, sub: usize, order: usize) -> Self {
        let mut b = vec![lo];
        let mut x = lo + first;
        let mut step = first;
        while x < hi {
            b.push(x);
            step *= 2.0;
            x += step;
        }
        b.push(hi);
        let mut fine = vec![b[0]];
        for w in b.windows(2) {
            for k in 1..=sub {
                fine.push(w[0] + (w[1] - w[0]) * k as f64 / sub as f64);
            }
        }
        Self::new(&fine, order)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Fourth-order central first derivative.
pub fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Fourth-order central second derivative.
pub fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
}

/// Sixth-order central second derivative.
pub fn d2_6(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (2.0 * (f(x - 3.0 * h) + f(x + 3.0 * h)) - 27.0 * (f(x - 2.0 * h) + f(x + 2.0 * h)) + 270.0 * (f(x - h) + f(x + h))
        - 490.0 * f(x))
        / (180.0 * h * h)
}

/// Sixth-order central first derivative.
pub fn d1_6(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-(f(x - 3.0 * h)) + 9.0 * f(x - 2.0 * h) - 45.0 * f(x - h) + 45.0 * f(x + h) - 9.0 * f(x + 2.0 * h) + f(x + 3.0 * h))
        / (60.0 * h)
}
