//! Half-line solves of `(d^2 - alpha^2) phi = w`.
//!
//! The primary path evaluates the Green's representation
//!
//! ```text
//! alpha phi(Y) = -e^{-alpha Y} int_0^inf w sinh(alpha Z) dZ
//!                + int_Y^inf w sinh(alpha (Z - Y)) dZ
//! ```
//!
//! with every exponential written in a shifted variable so that no factor
//! exceeds one. The three convolution-type integrals are accumulated panel by
//! panel between consecutive nodes, each panel integrated with Gauss–Legendre
//! rules applied to the spectral interpolant of `w`.
//!
//! A fourth-order Numerov discretisation on a uniform truncated mesh is kept
//! as an independent cross-check.

use crate::error::{Error, Result};
use crate::grid::{gauss_legendre, Field, Grid, GridKind};
use crate::linalg;
use crate::C64;

const PANEL_ORDER: usize = 10;

/// Per-panel integrals of `w` against shifted exponentials.
struct Panels {
    /// `int_{panel k} w(Z) e^{-alpha (Z - Y_k)} dZ`.
    down_from_left: Vec<C64>,
    /// `int_{panel k} w(Z) e^{-alpha (Y_{k+1} - Z)} dZ`.
    up_to_right: Vec<C64>,
    /// `int_{panel k} w(Z) e^{alpha (Z - Y_k)} dZ`.
    up_from_left: Vec<C64>,
    /// `Y_{k+1} - Y_k`, infinite for an unbounded last panel.
    width: Vec<f64>,
}

fn panels(g: &Grid, w: &Field, alpha: f64) -> Result<Panels> {
    let n = g.len();
    let x = g.cheb_points();
    let y = g.nodes();
    let (gx, gw) = gauss_legendre(PANEL_ORDER);
    let unbounded = matches!(g.kind(), GridKind::RationalChebyshev);
    // Panels past the last node where |w| e^{alpha Y} is within 1e-16 of its
    // peak carry no weight in the growing integral.
    let log_weight: Vec<f64> = w
        .iter()
        .zip(y)
        .map(|(v, &yy)| if v.norm() > 0.0 { v.norm().ln() + alpha * yy } else { f64::NEG_INFINITY })
        .collect();
    let peak = log_weight.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = log_weight
        .iter()
        .rposition(|&l| l > peak - 37.0)
        .map_or(0, |j| j + 1);
    // Below this level the interpolant is roundoff; the growing weight would
    // amplify it, so those panels use an exponential fit of the node values.
    let tiny = 1e-10 * w.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut p = Panels {
        down_from_left: vec![C64::new(0.0, 0.0); n],
        up_to_right: vec![C64::new(0.0, 0.0); n],
        up_from_left: vec![C64::new(0.0, 0.0); n],
        width: vec![0.0; n],
    };
    for k in 0..n {
        let (xa, xb) = (x[k], if k + 1 < n { x[k + 1] } else { 1.0 });
        let last = k + 1 == n;
        let yb = if last { g.map_point(1.0).0 } else { y[k + 1] };
        p.width[k] = if last && unbounded { f64::INFINITY } else { yb - y[k] };
        let half = 0.5 * (xb - xa);
        let mid = 0.5 * (xb + xa);
        let fitted = !last && k < cut && (w[k].norm() < tiny || w[k + 1].norm() < tiny);
        if fitted {
            p.up_from_left[k] = exponential_panel(w[k], w[k + 1], alpha, p.width[k]);
        }
        for (t, wt) in gx.iter().zip(&gw) {
            let xq = mid + half * t;
            let (z, jac) = g.map_point(xq);
            let v = g.interpolate(w, xq) * (jac * wt * half);
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            p.down_from_left[k] += v * (-alpha * (z - y[k])).exp();
            if !last {
                p.up_to_right[k] += v * (-alpha * (yb - z)).exp();
            }
            if k < cut && !(last && unbounded) && !fitted {
                let grow = (alpha * (z - y[k])).exp();
                let term = v * grow;
                if !term.is_finite() {
                    return Err(Error::DivergentIntegral(format!(
                        "e^(alpha Z) weight overflows on panel {k}"
                    )));
                }
                p.up_from_left[k] += term;
            }
        }
    }
    Ok(p)
}

/// `int_0^h w0 (w1/w0)^{s/h} e^{alpha s} ds`; zero when either end vanishes.
fn exponential_panel(w0: C64, w1: C64, alpha: f64, h: f64) -> C64 {
    if w0 == C64::new(0.0, 0.0) || w1 == C64::new(0.0, 0.0) {
        return C64::new(0.0, 0.0);
    }
    let rate = (w1 / w0).ln() / h + alpha;
    if rate.norm() * h < 1e-8 {
        return w0 * h;
    }
    w0 * ((rate * h).exp() - 1.0) / rate
}

/// Rejects data whose `e^{alpha Y}`-weighted magnitude overflows.
fn check_weighted_decay(g: &Grid, w: &Field, alpha: f64) -> Result<()> {
    let peak = g.sup(w);
    if peak == 0.0 {
        return Ok(());
    }
    let base = peak.ln();
    for (v, &y) in w.iter().zip(g.nodes()) {
        let m = v.norm();
        if !m.is_finite() {
            return Err(Error::DivergentIntegral("non-finite data".into()));
        }
        if m > 0.0 && m.ln() + alpha * y - base > 700.0 {
            return Err(Error::DivergentIntegral(format!(
                "|w| e^(alpha Y) overflows at Y = {y:.3e}"
            )));
        }
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")))
    }
}

/// `e^{-alpha Y} int_0^Y w e^{alpha Z} dZ` and `e^{alpha Y} int_Y^inf w e^{-alpha Z} dZ`.
fn convolutions(g: &Grid, p: &Panels, alpha: f64) -> (Field, Field) {
    let n = g.len();
    let mut head = g.zeros();
    for k in 0..n - 1 {
        head[k + 1] = head[k] * (-alpha * p.width[k]).exp() + p.up_to_right[k];
    }
    let mut tail = g.zeros();
    let mut acc = C64::new(0.0, 0.0);
    for k in (0..n).rev() {
        let decay = if p.width[k].is_finite() { (-alpha * p.width[k]).exp() } else { 0.0 };
        acc = p.down_from_left[k] + acc * decay;
        tail[k] = acc;
    }
    (head, tail)
}

/// Decaying solution of `(d^2 - alpha^2) phi = w` with `phi(0) = 0`.
pub fn solve_dirichlet(g: &Grid, w: &Field, alpha: f64) -> Result<Field> {
    check_alpha(alpha)?;
    check_weighted_decay(g, w, alpha)?;
    let p = panels(g, w, alpha)?;
    let (head, tail) = convolutions(g, &p, alpha);
    let total = tail[0];
    let scale = 0.5 / alpha;
    Ok(Field::from_iterator(
        g.len(),
        g.nodes()
            .iter()
            .enumerate()
            .map(|(i, &y)| (total * (-alpha * y).exp() - head[i] - tail[i]) * scale),
    ))
}

/// `d phi(0) = -int_0^inf w e^{-alpha Y} dY` for the Dirichlet solution.
pub fn boundary_derivative(g: &Grid, w: &Field, alpha: f64) -> C64 {
    let weighted = Field::from_iterator(
        g.len(),
        w.iter().zip(g.nodes()).map(|(v, &y)| v * (-alpha * y).exp()),
    );
    -g.integrate(&weighted)
}

/// Particular solution `(1/alpha) int_Y^inf w sinh(alpha (Z - Y)) dZ`.
pub fn fast_decay_part(g: &Grid, w: &Field, alpha: f64) -> Result<Field> {
    check_alpha(alpha)?;
    check_weighted_decay(g, w, alpha)?;
    let p = panels(g, w, alpha)?;
    let (_, tail) = convolutions(g, &p, alpha);
    let n = g.len();
    let mut grow = g.zeros();
    let mut acc = C64::new(0.0, 0.0);
    for k in (0..n).rev() {
        if acc != C64::new(0.0, 0.0) {
            acc *= (alpha * p.width[k]).exp();
        }
        acc += p.up_from_left[k];
        if !acc.is_finite() {
            return Err(Error::DivergentIntegral(format!(
                "int w e^(alpha Z) overflows at node {k}"
            )));
        }
        grow[k] = acc;
    }
    Ok((grow - tail) * C64::new(0.5 / alpha, 0.0))
}

/// Dirichlet problem by dense collocation on the grid; unlike the kernel
/// path it needs no exponential decay of `w`.
pub fn solve_dirichlet_collocation(g: &Grid, w: &Field, alpha: f64) -> Result<Field> {
    let n = g.len();
    let mut a = linalg::complexify(g.d2());
    for i in 0..n {
        a[(i, i)] -= C64::new(alpha * alpha, 0.0);
    }
    a.row_mut(0).fill(C64::new(0.0, 0.0));
    a[(0, 0)] = C64::new(1.0, 0.0);
    let mut rhs = w.clone();
    rhs[0] = C64::new(0.0, 0.0);
    linalg::solve(a, &rhs)
}

/// Numerov solve of the Dirichlet problem on a uniform mesh over
/// `[0, y_max]` with spacing `h`, returned at the grid nodes (zero beyond
/// `y_max`).
pub fn solve_dirichlet_banded<F: Fn(f64) -> C64>(
    g: &Grid,
    w: F,
    alpha: f64,
    y_max: f64,
    h: f64,
) -> Result<Field> {
    check_alpha(alpha)?;
    if !(y_max > 0.0 && h > 0.0 && h < y_max) {
        return Err(Error::InvalidParameter(format!("mesh y_max = {y_max}, h = {h}")));
    }
    let m = (y_max / h).round() as usize;
    let h = y_max / m as f64;
    let a2 = alpha * alpha * h * h / 12.0;
    let wv: Vec<C64> = (0..=m).map(|i| w(i as f64 * h)).collect();
    // Unknowns phi_1..phi_{m-1}; phi_0 = phi_m = 0.
    let off = C64::new(1.0 - a2, 0.0);
    let diag = C64::new(-2.0 - 10.0 * a2, 0.0);
    let size = m - 1;
    let mut rhs: Vec<C64> = (1..m)
        .map(|i| (wv[i - 1] + wv[i] * 10.0 + wv[i + 1]) * (h * h / 12.0))
        .collect();
    // Thomas algorithm for the constant-coefficient tridiagonal system.
    let mut c_prime = vec![C64::new(0.0, 0.0); size];
    let mut denom = diag;
    c_prime[0] = off / denom;
    rhs[0] /= denom;
    for i in 1..size {
        denom = diag - off * c_prime[i - 1];
        c_prime[i] = off / denom;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for i in (0..size - 1).rev() {
        rhs[i] = rhs[i] - c_prime[i] * rhs[i + 1];
    }
    let mut phi = vec![C64::new(0.0, 0.0); m + 1];
    phi[1..m].copy_from_slice(&rhs);
    Ok(g.sample(|y| {
        if y >= y_max {
            return C64::new(0.0, 0.0);
        }
        // Four-point Lagrange interpolation.
        let s = y / h;
        let i0 = (s.floor() as isize - 1).clamp(0, m as isize - 3) as usize;
        let mut v = C64::new(0.0, 0.0);
        for a in 0..4 {
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    l *= (s - (i0 + b) as f64) / (a as f64 - b as f64);
                }
            }
            v += phi[i0 + a] * l;
        }
        v
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::rational(128, 4.0).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = grid();
        assert_eq!(g.sup(&solve_dirichlet(&g, &g.zeros(), 1.0).unwrap()), 0.0);
        assert_eq!(g.sup(&fast_decay_part(&g, &g.zeros(), 1.0).unwrap()), 0.0);
    }

    #[test]
    fn exponential_data() {
        let g = grid();
        let w = g.sample_real(|y| (-2.0 * y).exp());
        let phi = solve_dirichlet(&g, &w, 1.0).unwrap();
        let exact = g.sample_real(|y| ((-2.0 * y).exp() - (-y).exp()) / 3.0);
        assert!((&phi - exact).camax() < 1e-8);
        assert_eq!(phi[0], C64::new(0.0, 0.0));
        let f = fast_decay_part(&g, &w, 1.0).unwrap();
        assert!((f - g.sample_real(|y| (-2.0 * y).exp() / 3.0)).camax() < 1e-8);
        assert!((boundary_derivative(&g, &w, 1.0) + 1.0 / 3.0).norm() < 1e-9);
        let w1 = g.sample_real(|y| (-y).exp());
        assert!((boundary_derivative(&g, &w1, 1.0) + 0.5).norm() < 1e-9);
    }

    #[test]
    fn rejects_slow_decay() {
        let g = grid();
        let w = g.sample_real(|y| (1.0 + y).powi(-3));
        assert!(matches!(solve_dirichlet(&g, &w, 1.0), Err(Error::DivergentIntegral(_))));
        assert!(solve_dirichlet(&g, &w, -1.0).is_err());
    }

}
