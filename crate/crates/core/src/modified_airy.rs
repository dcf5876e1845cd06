//! The vorticity equation `i eps (d^2 - alpha^2) w + U w = f` on the
//! half-line with a Dirichlet or Neumann wall condition.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::helmholtz;
use crate::linalg;
use crate::profile::{ProfileSample, ShearProfile};
use crate::report::EstimateReport;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AiryBc {
    /// `w(0) = 0`.
    DirichletW,
    /// `dw(0) = 0`.
    NeumannW,
    /// No wall condition; only valid for containers built outside the solver.
    None,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct AiryNorms {
    pub w: f64,
    pub sqrt_u_w: f64,
    pub u_w: f64,
    /// `||(dw, alpha w)||`.
    pub grad: f64,
    /// `||(d^2 - alpha^2) w||`.
    pub helm: f64,
}

impl AiryNorms {
    /// Norms of `w`, each multiplied inside by `Y^power`.
    pub fn measure(g: &Grid, ps: &ProfileSample, w: &Field, alpha: f64, power: f64) -> Self {
        let u = &ps.u;
        let scaled = |k: &dyn Fn(usize) -> f64| Field::from_iterator(g.len(), w.iter().enumerate().map(|(i, v)| v * k(i)));
        let norm = |f: &Field| g.power_weighted_norm(f, power);
        let dw = g.diff(w);
        let hw = g.helm_apply(w, alpha);
        Self {
            w: norm(w),
            sqrt_u_w: norm(&scaled(&|i| u[i].max(0.0).sqrt())),
            u_w: norm(&scaled(&|i| u[i])),
            grad: (norm(&dw).powi(2) + alpha * alpha * norm(w).powi(2)).sqrt(),
            helm: norm(&hw),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AirySolve {
    pub w: Field,
    pub bc: AiryBc,
    /// Collocation residual over the interior rows, relative to `||f|| + ||w||`.
    pub residual: f64,
    /// Trailing Chebyshev coefficient indicator of `w`.
    pub resolution: f64,
    pub norms: AiryNorms,
    /// The same norms with weight `Y`.
    pub weighted_norms: AiryNorms,
}

/// Tolerance on the collocation residual.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Tolerance on the trailing-coefficient indicator.
pub const RESOLUTION_TOL: f64 = 1e-6;

/// Dense matrix of `i eps (D2 - alpha^2) + diag(U)`.
pub fn airy_operator(g: &Grid, ps: &ProfileSample, alpha: f64, eps: f64) -> DMatrix<C64> {
    let ie = C64::new(0.0, eps);
    let n = g.len();
    let mut a = g.d2().map(|v| ie * v);
    for i in 0..n {
        a[(i, i)] += ie * (-alpha * alpha) + ps.u[i];
    }
    a
}

/// Applies the Airy operator to `w`.
pub fn apply_airy(g: &Grid, ps: &ProfileSample, w: &Field, alpha: f64, eps: f64) -> Field {
    let uw = Field::from_iterator(g.len(), w.iter().zip(ps.u.iter()).map(|(a, b)| a * *b));
    g.helm_apply(w, alpha) * C64::new(0.0, eps) + uw
}

fn check_params(alpha: f64, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite() && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha}, eps = {eps}")));
    }
    Ok(())
}

pub fn solve_modified_airy(
    p: &ShearProfile,
    alpha: f64,
    eps: f64,
    f: &Field,
    g: &Grid,
    bc: AiryBc,
) -> Result<AirySolve> {
    check_params(alpha, eps)?;
    if f.len() != g.len() {
        return Err(Error::InvalidSize(format!("f has {} values on a {}-node grid", f.len(), g.len())));
    }
    let ps = p.on_grid(g);
    let mut a = airy_operator(g, &ps, alpha, eps);
    let mut rhs = f.clone();
    let n = g.len();
    match bc {
        AiryBc::DirichletW => {
            a.row_mut(0).fill(C64::new(0.0, 0.0));
            a[(0, 0)] = C64::new(1.0, 0.0);
        }
        AiryBc::NeumannW => {
            for j in 0..n {
                a[(0, j)] = C64::new(g.d1()[(0, j)], 0.0);
            }
        }
        AiryBc::None => {
            return Err(Error::InvalidParameter("a wall condition is required".into()));
        }
    }
    rhs[0] = C64::new(0.0, 0.0);
    let w = linalg::solve(a, &rhs)?;

    let mut r = apply_airy(g, &ps, &w, alpha, eps) - f;
    r[0] = C64::new(0.0, 0.0);
    let scale = g.l2(f) + g.l2(&w);
    let residual = if scale > 0.0 { g.l2(&r) / scale } else { 0.0 };
    let resolution = g.resolution_indicator(&w);
    if residual > RESIDUAL_TOL {
        return Err(Error::ResolutionInsufficient { residual, tolerance: RESIDUAL_TOL });
    }
    if resolution > RESOLUTION_TOL {
        return Err(Error::ResolutionInsufficient { residual: resolution, tolerance: RESOLUTION_TOL });
    }
    Ok(AirySolve {
        norms: AiryNorms::measure(g, &ps, &w, alpha, 0.0),
        weighted_norms: AiryNorms::measure(g, &ps, &w, alpha, 1.0),
        w,
        bc,
        residual,
        resolution,
    })
}

/// Relative gaps `(|Re<f,w> - ||sqrt(U) w||^2|, |Im<f,w> + eps ||(dw, alpha w)||^2|)`,
/// each divided by `|<f,w>|`.
pub fn energy_identity_gap(g: &Grid, f: &Field, s: &AirySolve, eps: f64) -> (f64, f64) {
    let ip = g.inner(f, &s.w);
    let scale = ip.norm().max(f64::MIN_POSITIVE);
    (
        (ip.re - s.norms.sqrt_u_w.powi(2)).abs() / scale,
        (ip.im + eps * s.norms.grad.powi(2)).abs() / scale,
    )
}

/// Forcing families used in the estimate sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Forcing {
    /// `e^{-Y}`.
    Exponential,
    /// `(1+Y)^{-3}`.
    Algebraic,
    /// `Y e^{-Y}`.
    LinearExponential,
    /// `eps^{-1/6} s e^{-s}` with `s = Y / eps^{1/3}`; unit-order `L^2` norm,
    /// concentrated in the viscous layer.
    Layer,
}

impl Forcing {
    pub fn value(self, y: f64, eps: f64) -> f64 {
        match self {
            Forcing::Exponential => (-y).exp(),
            Forcing::Algebraic => (1.0 + y).powi(-3),
            Forcing::LinearExponential => y * (-y).exp(),
            Forcing::Layer => {
                let d = eps.cbrt();
                let s = y / d;
                eps.powf(-1.0 / 6.0) * s * (-s).exp()
            }
        }
    }

    pub fn derivative(self, y: f64, eps: f64) -> f64 {
        match self {
            Forcing::Exponential => -(-y).exp(),
            Forcing::Algebraic => -3.0 * (1.0 + y).powi(-4),
            Forcing::LinearExponential => (1.0 - y) * (-y).exp(),
            Forcing::Layer => {
                let d = eps.cbrt();
                let s = y / d;
                eps.powf(-1.0 / 6.0) / d * (1.0 - s) * (-s).exp()
            }
        }
    }

    /// `f / Y`, defined only when `f(0) = 0`.
    pub fn over_y(self, y: f64, eps: f64) -> Option<f64> {
        match self {
            Forcing::LinearExponential => Some((-y).exp()),
            Forcing::Layer => {
                let d = eps.cbrt();
                Some(eps.powf(-1.0 / 6.0) / d * (-y / d).exp())
            }
            _ => None,
        }
    }
}

/// Right-hand side variants of the estimate family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    Plain,
    Derivative,
    OverY,
}

fn sample_variant(g: &Grid, forcing: Forcing, variant: Variant, eps: f64) -> Result<Field> {
    match variant {
        Variant::Plain => Ok(g.sample_real(|y| forcing.value(y, eps))),
        Variant::Derivative => Ok(g.sample_real(|y| forcing.derivative(y, eps))),
        Variant::OverY => {
            if forcing.over_y(0.0, eps).is_none() {
                return Err(Error::InvalidParameter(format!("{forcing:?} does not vanish at the wall")));
            }
            Ok(g.sample_real(|y| forcing.over_y(y, eps).unwrap_or(0.0)))
        }
    }
}

/// Dirichlet solve of `(d^2 - alpha^2) phi = w` by dense collocation.
fn stream_function(g: &Grid, w: &Field, alpha: f64) -> Result<Field> {
    helmholtz::solve_dirichlet_collocation(g, w, alpha)
}

/// Measured ratios for the estimate family over an `eps` sweep.
///
/// Returns, in order: the plain estimate, its `Y`-weighted companion, the
/// derivative and `f/Y` variants (Dirichlet wall only, skipped when the
/// forcing does not vanish at the wall), the interpolation inequality, and
/// exponent fits of `||w||`, `||(dw, alpha w)||` and `||(d^2 - alpha^2) w||`.
pub fn verify_airy_lemma(
    p: &ShearProfile,
    alpha: f64,
    sweep: &[f64],
    forcing: Forcing,
    bc: AiryBc,
    g: &Grid,
) -> Result<Vec<EstimateReport>> {
    let mut plain = EstimateReport::new("airy plain estimate", "eps");
    let mut weighted = EstimateReport::new("airy weighted estimate", "eps");
    let mut deriv = EstimateReport::new("airy derivative-forcing estimate", "eps");
    let mut over_y = EstimateReport::new("airy f/Y-forcing estimate", "eps");
    let mut interp = EstimateReport::new("interpolation inequality constant", "eps");
    let mut nw = EstimateReport::new("||w||", "eps");
    let mut ng = EstimateReport::new("||(dw, alpha w)||", "eps");
    let mut nh = EstimateReport::new("||(d^2 - alpha^2) w||", "eps");
    let has_over_y = forcing.over_y(0.0, 1.0).is_some();

    for &eps in sweep {
        let f = sample_variant(g, forcing, Variant::Plain, eps)?;
        let s = solve_modified_airy(p, alpha, eps, &f, g, bc)?;
        let fn2 = g.l2(&f);
        let n = &s.norms;
        let lhs = n.u_w + eps.powf(1.0 / 6.0) * n.sqrt_u_w + eps.cbrt() * n.w + eps.powf(2.0 / 3.0) * n.grad + eps * n.helm;
        plain.push(eps, lhs, lhs / fn2);
        nw.push(eps, n.w, n.w / fn2);
        ng.push(eps, n.grad, n.grad / fn2);
        nh.push(eps, n.helm, n.helm / fn2);

        let phi = stream_function(g, &s.w, alpha.abs().max(1e-12))?;
        let wn = &s.weighted_norms;
        let lhs_w = g.grad_norm(&phi, alpha)
            + eps.cbrt() * wn.w
            + eps.powf(1.0 / 6.0) * wn.sqrt_u_w
            + eps.powf(2.0 / 3.0) * wn.grad
            + eps * wn.helm;
        let rhs_w = g.weighted_norm(&f, 1);
        weighted.push(eps, lhs_w, lhs_w / rhs_w);

        let c = n.w / (eps.powf(1.0 / 6.0) * (g.l2(&g.diff(&s.w)) * n.w).sqrt() + eps.powf(-1.0 / 6.0) * n.sqrt_u_w);
        interp.push(eps, c, c);

        if bc == AiryBc::DirichletW {
            let mut variants = vec![(Variant::Derivative, &mut deriv)];
            if has_over_y {
                variants.push((Variant::OverY, &mut over_y));
            }
            for (variant, report) in variants {
                let rhs = sample_variant(g, forcing, variant, eps)?;
                let sv = solve_modified_airy(p, alpha, eps, &rhs, g, bc)?;
                let m = &sv.norms;
                let lhs3 = eps.sqrt() * m.sqrt_u_w + eps.powf(2.0 / 3.0) * m.w + eps * m.grad;
                report.push(eps, lhs3, lhs3 / fn2);
            }
        }
    }

    plain.judge_bounded(0.05, 10.0);
    weighted.judge_bounded(0.05, 10.0);
    interp.finish();
    interp.pass = interp.ratios.iter().all(|&c| c <= 10.0);
    let layer = forcing == Forcing::Layer;
    for (r, e) in [(&mut nw, -1.0 / 3.0), (&mut ng, -2.0 / 3.0), (&mut nh, -1.0)] {
        if layer {
            r.judge_exponent(e, 0.1);
        } else {
            r.finish();
            r.expected_exponent = Some(e);
            r.pass = r.fitted_exponent.is_some_and(|s| s >= e - 0.05);
            r.note = "one-sided: bound exponent is not sharp for this forcing".into();
        }
    }
    let mut out = vec![plain, weighted];
    if bc == AiryBc::DirichletW {
        deriv.judge_bounded(0.05, 10.0);
        out.push(deriv);
        if has_over_y {
            over_y.judge_bounded(0.05, 10.0);
            out.push(over_y);
        }
    }
    out.extend([interp, nw, ng, nh]);
    Ok(out)
}

/// Smooth cut-off `chi_R(Y) = chi(Y/R)` with `chi = 1` on `[0,1]` and `0` on
/// `[2, inf)`; returns `(chi_R, chi_R', chi_R'')`.
pub fn cutoff(y: f64, r: f64) -> (f64, f64, f64) {
    let s = y / r;
    if s <= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    if s >= 2.0 {
        return (0.0, 0.0, 0.0);
    }
    // chi(s) = h(2-s) / (h(2-s) + h(s-1)) with h(t) = e^{-1/t}.
    let h = |t: f64| -> (f64, f64, f64) {
        let e = (-1.0 / t).exp();
        let d1 = e / (t * t);
        let d2 = e * (1.0 - 2.0 * t) / t.powi(4);
        (e, d1, d2)
    };
    let (a, a1, a2) = h(2.0 - s);
    let (b, b1, b2) = h(s - 1.0);
    // Derivatives in s; a depends on 2-s.
    let (a1, a2) = (-a1, a2);
    let d = a + b;
    let d1 = a1 + b1;
    let d2 = a2 + b2;
    let c = a / d;
    let c1 = (a1 * d - a * d1) / (d * d);
    let c2 = (a2 - 2.0 * c1 * d1 - c * d2) / d;
    (c, c1 / r, c2 / (r * r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_forcing() {
        let g = Grid::rational(64, 2.0).unwrap();
        let p = ShearProfile::tanh(1.0).unwrap();
        let s = solve_modified_airy(&p, 1.0, 1e-3, &g.zeros(), &g, AiryBc::NeumannW).unwrap();
        assert_eq!(g.sup(&s.w), 0.0);
    }

    #[test]
    fn requires_wall_condition() {
        let g = Grid::rational(32, 2.0).unwrap();
        let p = ShearProfile::tanh(1.0).unwrap();
        assert!(solve_modified_airy(&p, 1.0, 1e-3, &g.zeros(), &g, AiryBc::None).is_err());
        assert!(solve_modified_airy(&p, 1.0, -1.0, &g.zeros(), &g, AiryBc::NeumannW).is_err());
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        let r = 3.0;
        for &y in &[3.5, 4.2, 5.1] {
            let h = 1e-5;
            let (c, c1, c2) = cutoff(y, r);
            let (cp, _, _) = cutoff(y + h, r);
            let (cm, _, _) = cutoff(y - h, r);
            assert!(((cp - cm) / (2.0 * h) - c1).abs() < 1e-7);
            assert!(((cp - 2.0 * c + cm) / (h * h) - c2).abs() < 1e-4);
        }
    }
}
