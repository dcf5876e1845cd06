//! Collocation grids on the half-line.
//!
//! Nodes are Chebyshev–Gauss–Lobatto points `x_j = -cos(pi j / N)` pushed
//! through an algebraic map onto `[0, Y_max)`. The endpoint `x = 1` is not
//! stored: every field is taken to vanish there, so decay (or a homogeneous
//! Dirichlet value at a finite truncation) is built into the basis.
//!
//! Differentiation and cumulative integration act on node values through
//! dense matrices. Quadrature weights are the Clenshaw–Curtis weights pulled
//! back through the map.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex values sampled on the nodes of a [`Grid`].
pub type Field = DVector<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    /// `Y = L(1+x)/(1-x)`; the point `x = 1` sits at infinity.
    RationalChebyshev,
    /// `Y = L(1+x)/(1-x+s)` with `s = 2L/y_max`; the last point sits at `y_max`.
    TruncatedChebyshev { y_max: f64 },
}

#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    map_scale: f64,
    kind: GridKind,
    shift: f64,
    x: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    tail: DMatrix<f64>,
    /// Node values to Chebyshev coefficients (last column dropped).
    to_coeffs: DMatrix<f64>,
}

impl Grid {
    pub fn new(n: usize, map_scale: f64, kind: GridKind) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidSize(format!("N = {n} < 16")));
        }
        if !(map_scale > 0.0 && map_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("map scale L = {map_scale}")));
        }
        let shift = match kind {
            GridKind::RationalChebyshev => 0.0,
            GridKind::TruncatedChebyshev { y_max } => {
                if !(y_max > 0.0 && y_max.is_finite()) {
                    return Err(Error::InvalidParameter(format!("y_max = {y_max}")));
                }
                2.0 * map_scale / y_max
            }
        };
        let nf = n as f64;
        let pi = std::f64::consts::PI;
        let x: Vec<f64> = (0..=n).map(|j| -(pi * j as f64 / nf).cos()).collect();
        // dY/dx at every Chebyshev point; infinite at x = 1 for the rational map.
        let jac: Vec<f64> = x
            .iter()
            .map(|&xi| map_scale * (2.0 + shift) / (1.0 - xi + shift).powi(2))
            .collect();

        let (dx, dxx) = cheb_diff(n);
        // Chain rule: d/dY = x' d/dx, d2/dY2 = x'^2 d2/dx2 + x'' d/dx.
        let mut d1 = DMatrix::<f64>::zeros(n, n);
        let mut d2 = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let gap = 1.0 - x[i] + shift;
            let xp = gap * gap / (map_scale * (2.0 + shift));
            let xpp = -2.0 * gap.powi(3) / (map_scale * map_scale * (2.0 + shift).powi(2));
            for j in 0..n {
                d1[(i, j)] = xp * dx[(i, j)];
                d2[(i, j)] = xp * xp * dxx[(i, j)] + xpp * dx[(i, j)];
            }
        }

        let (qx, to_coeffs_full) = cheb_tail_integral(n);
        let mut tail = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                tail[(i, j)] = qx[(i, j)] * jac[j];
            }
        }
        let weights: Vec<f64> = (0..n).map(|j| tail[(0, j)]).collect();
        let nodes: Vec<f64> = x[..n]
            .iter()
            .map(|&xi| map_scale * (1.0 + xi) / (1.0 - xi + shift))
            .collect();
        let to_coeffs = to_coeffs_full.view((0, 0), (n + 1, n)).into_owned();

        Ok(Self {
            n,
            map_scale,
            kind,
            shift,
            x: x[..n].to_vec(),
            nodes,
            weights,
            d1,
            d2,
            tail,
            to_coeffs,
        })
    }

    /// Rational Chebyshev grid with the given size and map scale.
    pub fn rational(n: usize, map_scale: f64) -> Result<Self> {
        Self::new(n, map_scale, GridKind::RationalChebyshev)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn map_scale(&self) -> f64 {
        self.map_scale
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cheb_points(&self) -> &[f64] {
        &self.x
    }

    /// `(Y, dY/dx)` at a Chebyshev coordinate `x` in `[-1, 1)`.
    pub fn map_point(&self, x: f64) -> (f64, f64) {
        let gap = 1.0 - x + self.shift;
        (
            self.map_scale * (1.0 + x) / gap,
            self.map_scale * (2.0 + self.shift) / (gap * gap),
        )
    }

    /// Chebyshev coordinate of a point `Y` in `[0, Y_max)`.
    pub fn x_of(&self, y: f64) -> f64 {
        (y * (1.0 + self.shift) - self.map_scale) / (y + self.map_scale)
    }

    /// Evaluates the interpolant of `u` (with the implied zero at `x = 1`) at `x`.
    pub fn interpolate(&self, u: &Field, x: f64) -> C64 {
        let n = self.n;
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for j in 0..=n {
            let xj = if j == n { 1.0 } else { self.x[j] };
            let mut wj = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                wj *= 0.5;
            }
            let d = x - xj;
            if d == 0.0 {
                return if j == n { C64::new(0.0, 0.0) } else { u[j] };
            }
            let c = wj / d;
            if j < n {
                num += u[j] * c;
            }
            den += c;
        }
        num / den
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    /// Matrix of `g -> int_{Y_i}^inf g`.
    pub fn tail_matrix(&self) -> &DMatrix<f64> {
        &self.tail
    }

    pub fn sample<F: Fn(f64) -> C64>(&self, f: F) -> Field {
        Field::from_iterator(self.n, self.nodes.iter().map(|&y| f(y)))
    }

    pub fn sample_real<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        self.sample(|y| C64::new(f(y), 0.0))
    }

    pub fn zeros(&self) -> Field {
        Field::zeros(self.n)
    }

    pub fn diff(&self, u: &Field) -> Field {
        real_mul(&self.d1, u)
    }

    pub fn diff2(&self, u: &Field) -> Field {
        real_mul(&self.d2, u)
    }

    /// `(d^2 - alpha^2) u` at every node.
    pub fn helm_apply(&self, u: &Field, alpha: f64) -> Field {
        self.diff2(u) - u * C64::new(alpha * alpha, 0.0)
    }

    pub fn integrate(&self, u: &Field) -> C64 {
        u.iter().zip(&self.weights).map(|(v, w)| v * *w).sum()
    }

    pub fn integrate_real<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&y, w)| f(y) * w).sum()
    }

    /// `sigma[u](Y) = int_Y^inf u`.
    pub fn tail_integral(&self, u: &Field) -> Field {
        real_mul(&self.tail, u)
    }

    /// `int_0^Y u`.
    pub fn head_integral(&self, u: &Field) -> Field {
        let total = self.integrate(u);
        self.tail_integral(u).map(|t| total - t)
    }

    /// `<a, b> = int a conj(b)`.
    pub fn inner(&self, a: &Field, b: &Field) -> C64 {
        a.iter()
            .zip(b.iter())
            .zip(&self.weights)
            .map(|((x, y), w)| x * y.conj() * *w)
            .sum()
    }

    pub fn l2(&self, u: &Field) -> f64 {
        u.iter()
            .zip(&self.weights)
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// `(int (1+Y)^{2k} |u|^2)^{1/2}`.
    pub fn weighted_norm(&self, u: &Field, k: u32) -> f64 {
        u.iter()
            .zip(&self.weights)
            .zip(&self.nodes)
            .map(|((v, w), &y)| (1.0 + y).powi(2 * k as i32) * v.norm_sqr() * w)
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// `(int |Y^p u|^2)^{1/2}` for a real power `p >= 0`.
    pub fn power_weighted_norm(&self, u: &Field, p: f64) -> f64 {
        u.iter()
            .zip(&self.weights)
            .zip(&self.nodes)
            .map(|((v, w), &y)| y.powf(2.0 * p) * v.norm_sqr() * w)
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// `||(d u, alpha u)||_2`.
    pub fn grad_norm(&self, u: &Field, alpha: f64) -> f64 {
        let du = self.diff(u);
        (self.l2(&du).powi(2) + alpha * alpha * self.l2(u).powi(2)).sqrt()
    }

    pub fn sup(&self, u: &Field) -> f64 {
        u.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest trailing Chebyshev coefficient magnitude relative to the largest.
    ///
    /// The trailing eighth of the spectrum is inspected; a small value means the
    /// field is resolved.
    pub fn resolution_indicator(&self, u: &Field) -> f64 {
        let coeffs = real_mul(&self.to_coeffs, u);
        let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let start = self.n + 1 - (self.n + 1) / 8;
        coeffs.iter().skip(start).map(|c| c.norm()).fold(0.0, f64::max) / peak
    }
}

/// Real matrix times complex vector.
pub fn real_mul(m: &DMatrix<f64>, u: &Field) -> Field {
    let re = m * u.map(|c| c.re);
    let im = m * u.map(|c| c.im);
    Field::from_iterator(m.nrows(), re.iter().zip(im.iter()).map(|(a, b)| C64::new(*a, *b)))
}

/// Pointwise product of two fields.
pub fn mul(a: &Field, b: &Field) -> Field {
    a.component_mul(b)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let pi = std::f64::consts::PI;
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        let mut x = -(pi * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if q == 1 {
                p0 = 1.0;
            }
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// First and second Chebyshev differentiation matrices on ascending Lobatto
/// points, built from barycentric weights with diagonal entries fixed by the
/// negative-sum rule.
fn cheb_diff(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let nf = n as f64;
    let pi = std::f64::consts::PI;
    let w: Vec<f64> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    // x_i - x_j written as a product of sines to avoid cancellation.
    let gap = |i: usize, j: usize| {
        2.0 * (pi * (i + j) as f64 / (2.0 * nf)).sin() * (pi * (i as f64 - j as f64) / (2.0 * nf)).sin()
    };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut row_sum = 0.0;
        for j in 0..=n {
            if i != j {
                let v = (w[j] / w[i]) / gap(i, j);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    let mut dd = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut row_sum = 0.0;
        for j in 0..=n {
            if i != j {
                let v = 2.0 * d[(i, j)] * (d[(i, i)] - 1.0 / gap(i, j));
                dd[(i, j)] = v;
                row_sum += v;
            }
        }
        dd[(i, i)] = -row_sum;
    }
    (d, dd)
}

/// Returns the matrix of `h -> int_{x_i}^1 h` on the Lobatto points, and the
/// values-to-coefficients matrix.
fn cheb_tail_integral(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let nf = n as f64;
    let pi = std::f64::consts::PI;
    // T_k(x_j) with x_j = -cos(pi j / N).
    let t = |k: usize, j: usize| -> f64 {
        let s = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        s * (pi * (k * j) as f64 / nf).cos()
    };
    let mut c = DMatrix::<f64>::zeros(n + 1, n + 1);
    for k in 0..=n {
        for j in 0..=n {
            let mut v = 2.0 / nf * t(k, j);
            if j == 0 || j == n {
                v *= 0.5;
            }
            if k == 0 || k == n {
                v *= 0.5;
            }
            c[(k, j)] = v;
        }
    }
    // Antiderivative coefficients b_1..b_{N+1}.
    let mut k_mat = DMatrix::<f64>::zeros(n + 2, n + 1);
    for k in 1..=n + 1 {
        if k == 1 {
            k_mat[(1, 0)] += 1.0;
            if n >= 2 {
                k_mat[(1, 2)] -= 0.5;
            }
        } else {
            let kf = k as f64;
            if k - 1 <= n {
                k_mat[(k, k - 1)] += 1.0 / (2.0 * kf);
            }
            if k < n {
                k_mat[(k, k + 1)] -= 1.0 / (2.0 * kf);
            }
        }
    }
    // int_{x_j}^1 p = sum_k b_k (1 - T_k(x_j)).
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 2);
    for j in 0..=n {
        for k in 1..=n + 1 {
            m[(j, k)] = 1.0 - t(k, j);
        }
    }
    (m * k_mat * &c, c)
}
