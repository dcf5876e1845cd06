//! Orr–Sommerfeld solvers for `U (d^2 - alpha^2) phi - U'' phi + i eps (d^2 - alpha^2)^2 phi = f`.
//!
//! Every solve uses the coupled unknowns `(phi, w)` with `w = (d^2 - alpha^2) phi`,
//! so each block is second order and carries one wall condition; decay at
//! infinity is built into the grid.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::airy::{self, DELTA_STAR};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linalg;
use crate::profile::{ProfileSample, ShearProfile};
use crate::rayleigh;
use crate::C64;

/// Default small-viscosity threshold.
pub const C2: f64 = 0.05;
/// Relative half-width of the band around `c2` where both non-slip paths run.
pub const OVERLAP_BAND: f64 = 0.3;
/// Tolerance on the collocation residual.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Tolerance on the trailing-coefficient indicator.
pub const RESOLUTION_TOL: f64 = 1e-6;
/// Agreement required between the two non-slip paths.
pub const OVERLAP_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SmallEps,
    LargeEps,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OsParams {
    pub alpha: f64,
    pub eps: f64,
    pub c2: f64,
    pub delta_star: f64,
    pub regime: Regime,
}

impl OsParams {
    pub fn new(alpha: f64, eps: f64) -> Result<Self> {
        Self::with_thresholds(alpha, eps, C2, DELTA_STAR)
    }

    pub fn with_thresholds(alpha: f64, eps: f64, c2: f64, delta_star: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite() && alpha.is_finite() && c2 > 0.0 && delta_star > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha}, eps = {eps}, c2 = {c2}, delta* = {delta_star}"
            )));
        }
        let small = eps <= c2 && eps * alpha.abs().powi(3) <= delta_star;
        Ok(Self {
            alpha,
            eps,
            c2,
            delta_star,
            regime: if small { Regime::SmallEps } else { Regime::LargeEps },
        })
    }

    /// `eps` within the overlap band around `c2` and the fast mode admissible.
    pub fn in_overlap(&self) -> bool {
        (self.eps - self.c2).abs() <= OVERLAP_BAND * self.c2 && self.fast_mode_admissible()
    }

    fn fast_mode_admissible(&self) -> bool {
        self.eps * self.alpha.abs().powi(3) <= self.delta_star
    }

    fn require_nonzero_alpha(&self) -> Result<()> {
        if self.alpha == 0.0 {
            Err(Error::InvalidParameter("alpha must be nonzero".into()))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Wall {
    /// `phi(0) = 0`, `dw(0) = 0`.
    Artificial,
    /// `phi(0) = dphi(0) = 0`.
    NonSlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolvePath {
    Artificial,
    Direct,
    Superposition,
    Split,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct BoundaryTraces {
    pub phi: C64,
    pub dphi: C64,
    pub w: C64,
    pub dw: C64,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct OsNorms {
    /// `||(dphi, alpha phi)||`.
    pub grad_phi: f64,
    /// `sup (|dphi|^2 + alpha^2 |phi|^2)^{1/2}`.
    pub grad_phi_sup: f64,
    /// `||sqrt(Y) (dphi, alpha phi)||`.
    pub sqrt_y_grad_phi: f64,
    /// `||(d^2 - alpha^2) phi||` from `phi`.
    pub helm_phi: f64,
    pub w: f64,
    /// `||(1+Y) w||`.
    pub w_weighted: f64,
    /// `||(1+Y) (dw, alpha w)||`.
    pub grad_w_weighted: f64,
    /// `||(1+Y) (d^2 - alpha^2) w||`.
    pub helm_w_weighted: f64,
    pub dw: f64,
    /// `||Y w||`.
    pub y_w: f64,
    /// `||Y (dw, alpha w)||`.
    pub y_grad_w: f64,
}

impl OsNorms {
    pub fn measure(g: &Grid, phi: &Field, w: &Field, alpha: f64) -> Self {
        let dphi = g.diff(phi);
        let dw = g.diff(w);
        let a2 = alpha * alpha;
        let pair = |a: &Field, b: &Field, k: u32| (g.weighted_norm(a, k).powi(2) + a2 * g.weighted_norm(b, k).powi(2)).sqrt();
        let ypair = |a: &Field, b: &Field, p: f64| {
            (g.power_weighted_norm(a, p).powi(2) + a2 * g.power_weighted_norm(b, p).powi(2)).sqrt()
        };
        let sup = dphi
            .iter()
            .zip(phi.iter())
            .map(|(d, v)| (d.norm_sqr() + a2 * v.norm_sqr()).sqrt())
            .fold(0.0, f64::max);
        Self {
            grad_phi: pair(&dphi, phi, 0),
            grad_phi_sup: sup,
            sqrt_y_grad_phi: ypair(&dphi, phi, 0.5),
            helm_phi: g.l2(&g.helm_apply(phi, alpha)),
            w: g.l2(w),
            w_weighted: g.weighted_norm(w, 1),
            grad_w_weighted: pair(&dw, w, 1),
            helm_w_weighted: g.weighted_norm(&g.helm_apply(w, alpha), 1),
            dw: g.l2(&dw),
            y_w: g.power_weighted_norm(w, 1.0),
            y_grad_w: ypair(&dw, w, 1.0),
        }
    }
}

/// Norms of the source used by the a-priori bounds.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SourceNorms {
    pub l2: f64,
    /// `||Y f||`.
    pub y: f64,
    /// `||(1+Y)^2 f||`.
    pub weighted2: f64,
    /// `|int f|`.
    pub mean: f64,
}

impl SourceNorms {
    pub fn measure(g: &Grid, f: &Field) -> Self {
        Self {
            l2: g.l2(f),
            y: g.power_weighted_norm(f, 1.0),
            weighted2: g.weighted_norm(f, 2),
            mean: g.integrate(f).norm(),
        }
    }

    /// `||(1+Y)^2 f|| + |alpha|^{-2} |int f|`.
    pub fn artificial_bound(&self, alpha: f64) -> f64 {
        self.weighted2 + self.mean / (alpha * alpha)
    }
}

#[derive(Debug, Clone)]
pub struct OsSolution {
    pub phi: Field,
    pub w: Field,
    pub traces: BoundaryTraces,
    /// Relative interior residual of both equations.
    pub residual: f64,
    pub resolution: f64,
    pub norms: OsNorms,
    pub path: SolvePath,
    /// Relative gap between the two non-slip paths when both ran.
    pub overlap_gap: Option<f64>,
}

impl OsSolution {
    fn build(g: &Grid, phi: Field, w: Field, alpha: f64, residual: f64, path: SolvePath) -> Self {
        let dphi = g.diff(&phi);
        let dw = g.diff(&w);
        Self {
            traces: BoundaryTraces { phi: phi[0], dphi: dphi[0], w: w[0], dw: dw[0] },
            resolution: g.resolution_indicator(&phi).max(g.resolution_indicator(&w)),
            norms: OsNorms::measure(g, &phi, &w, alpha),
            residual,
            phi,
            w,
            path,
            overlap_gap: None,
        }
    }
}

/// The `2N x 2N` collocation matrix in the unknowns `[phi; w]` with the wall
/// rows in place of the equations at `Y = 0`.
pub fn os_system(g: &Grid, ps: &ProfileSample, alpha: f64, eps: f64, wall: Wall) -> DMatrix<C64> {
    let n = g.len();
    let a2 = alpha * alpha;
    let ie = C64::new(0.0, eps);
    let d1 = g.d1();
    let d2 = g.d2();
    let mut a = DMatrix::from_element(2 * n, 2 * n, C64::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            a[(i, n + j)] = ie * d2[(i, j)];
            a[(n + i, j)] = C64::new(d2[(i, j)], 0.0);
        }
        a[(i, n + i)] += ie * (-a2) + ps.u[i];
        a[(i, i)] = C64::new(-ps.ddu[i], 0.0);
        a[(n + i, i)] -= a2;
        a[(n + i, n + i)] = C64::new(-1.0, 0.0);
    }
    a.row_mut(0).fill(C64::new(0.0, 0.0));
    a.row_mut(n).fill(C64::new(0.0, 0.0));
    a[(n, 0)] = C64::new(1.0, 0.0);
    let offset = match wall {
        Wall::Artificial => n,
        Wall::NonSlip => 0,
    };
    for j in 0..n {
        a[(0, offset + j)] = C64::new(d1[(0, j)], 0.0);
    }
    a
}

/// Interior residual of `i eps (d^2 - alpha^2) w + U w - U'' phi = f` and of
/// `(d^2 - alpha^2) phi = w`, each relative to its largest term.
pub fn os_residual(g: &Grid, ps: &ProfileSample, phi: &Field, w: &Field, alpha: f64, eps: f64, f: &Field) -> f64 {
    let n = g.len();
    let visc = g.helm_apply(w, alpha) * C64::new(0.0, eps);
    let uw = Field::from_iterator(n, (0..n).map(|i| w[i] * ps.u[i]));
    let upp = Field::from_iterator(n, (0..n).map(|i| phi[i] * ps.ddu[i]));
    let mut r1 = &visc + &uw - &upp - f;
    let hphi = g.helm_apply(phi, alpha);
    let mut r2 = &hphi - w;
    r1[0] = C64::new(0.0, 0.0);
    r2[0] = C64::new(0.0, 0.0);
    let s1 = g.l2(&visc).max(g.l2(&uw)).max(g.l2(f));
    let s2 = g.l2(&hphi).max(g.l2(w));
    let rel = |r: &Field, s: f64| if s > 0.0 { g.l2(r) / s } else { 0.0 };
    rel(&r1, s1).max(rel(&r2, s2))
}

fn certify(s: &OsSolution) -> Result<()> {
    if !(s.residual <= RESIDUAL_TOL) {
        return Err(Error::ResolutionInsufficient { residual: s.residual, tolerance: RESIDUAL_TOL });
    }
    if !(s.resolution <= RESOLUTION_TOL) {
        return Err(Error::ResolutionInsufficient { residual: s.resolution, tolerance: RESOLUTION_TOL });
    }
    Ok(())
}

fn check_source(g: &Grid, f: &Field) -> Result<()> {
    if f.len() != g.len() {
        return Err(Error::InvalidSize(format!("f has {} values on a {}-node grid", f.len(), g.len())));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite source".into()));
    }
    Ok(())
}

/// Dense solve with the given wall condition.
pub fn solve_os_dense(p: &ShearProfile, params: &OsParams, f: &Field, g: &Grid, wall: Wall) -> Result<OsSolution> {
    params.require_nonzero_alpha()?;
    check_source(g, f)?;
    let ps = p.on_grid(g);
    let n = g.len();
    let a = os_system(g, &ps, params.alpha, params.eps, wall);
    let mut rhs = Field::zeros(2 * n);
    for i in 1..n {
        rhs[i] = f[i];
    }
    let x = linalg::solve(a, &rhs)?;
    let phi = Field::from_iterator(n, x.iter().take(n).copied());
    let w = Field::from_iterator(n, x.iter().skip(n).copied());
    let residual = os_residual(g, &ps, &phi, &w, params.alpha, params.eps, f);
    let path = match wall {
        Wall::Artificial => SolvePath::Artificial,
        Wall::NonSlip => SolvePath::Direct,
    };
    let s = OsSolution::build(g, phi, w, params.alpha, residual, path);
    certify(&s)?;
    Ok(s)
}

/// `phi(0) = 0`, `dw(0) = 0`.
pub fn solve_os_artificial(p: &ShearProfile, params: &OsParams, f: &Field, g: &Grid) -> Result<OsSolution> {
    solve_os_dense(p, params, f, g, Wall::Artificial)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CorrectorBranch {
    /// `|alpha| >= 1`: normalised fast mode.
    AiryOnly,
    /// `0 < |alpha| <= 1`: fast mode combined with the slow mode.
    FastSlow,
}

/// Homogeneous solution with `Phi_b(0) = 0`, `dPhi_b(0) = 1`.
#[derive(Debug, Clone)]
pub struct Corrector {
    pub w_b: Field,
    pub phi_b: Field,
    pub branch: CorrectorBranch,
    /// Coefficients of the fast and slow modes (`FastSlow` only).
    pub a: Option<C64>,
    pub b: Option<C64>,
    /// `dPhi_f(0) - Phi_f(0) dphi_s(0)` (`FastSlow`) or `dPhi(0)` (`AiryOnly`).
    pub denominator: C64,
    /// `0.01 (eps^{2/3} + eps^{4/3}/alpha)`.
    pub floor: f64,
    /// `(Phi_b(0), dPhi_b(0))`.
    pub boundary: (C64, C64),
    /// Relative residual of the homogeneous system.
    pub residual: f64,
    /// Gap between the spectral and quadrature wall derivative of the fast part.
    pub derivative_gap: f64,
    pub fast: airy::FastModeBoundary,
    /// Slow-mode diagnostics (`FastSlow` only).
    pub slow: Option<rayleigh::SlowMode>,
}

/// Relative residual of the homogeneous system for `(w, phi)`.
pub fn homogeneous_residual(g: &Grid, ps: &ProfileSample, phi: &Field, w: &Field, alpha: f64, eps: f64) -> f64 {
    os_residual(g, ps, phi, w, alpha, eps, &g.zeros())
}

/// Builds the boundary corrector; requires `eps <= c2` and `eps |alpha|^3 <= delta*`.
pub fn boundary_corrector(p: &ShearProfile, params: &OsParams, g: &Grid) -> Result<Corrector> {
    if params.regime != Regime::SmallEps {
        return Err(Error::InvalidParameter(format!(
            "corrector needs eps <= {} and eps |alpha|^3 <= {}",
            params.c2, params.delta_star
        )));
    }
    corrector_unchecked(p, params, g)
}

fn corrector_unchecked(p: &ShearProfile, params: &OsParams, g: &Grid) -> Result<Corrector> {
    params.require_nonzero_alpha()?;
    if !params.fast_mode_admissible() {
        return Err(Error::InvalidParameter("eps |alpha|^3 exceeds delta*".into()));
    }
    let alpha = params.alpha.abs();
    let eps = params.eps;
    let ps = p.on_grid(g);
    let n = g.len();
    let y = g.nodes();
    let up0 = p.uprime0();
    let fm = airy::fast_mode(p, alpha, eps, g)?;
    let layer_source = |phi_a: &Field| {
        Field::from_iterator(
            n,
            (0..n).map(|i| -fm.w_a[i] * (ps.u[i] - up0 * y[i]) + phi_a[i] * ps.ddu[i]),
        )
    };
    let abs_params = OsParams { alpha, ..*params };
    let floor = 0.01 * (eps.powf(2.0 / 3.0) + eps.powf(4.0 / 3.0) / alpha);

    let (phi_b, w_b, branch, a, b, denominator, derivative_gap, slow) = if alpha >= 1.0 {
        let e = solve_os_artificial(p, &abs_params, &layer_source(&fm.phi_a), g)?;
        let mut phi = &fm.phi_a + &e.phi;
        phi[0] = C64::new(0.0, 0.0);
        let w = &fm.w_a + &e.w;
        let d = g.diff(&phi)[0];
        let quad = fm.boundary.dphi_a0 + e.traces.dphi;
        let gap = (d - quad).norm() / quad.norm();
        if d.norm() < floor {
            return Err(Error::DegenerateDenominator { value: d.norm(), floor });
        }
        let inv = C64::new(1.0, 0.0) / d;
        (phi * inv, w * inv, CorrectorBranch::AiryOnly, None, None, d, gap, None)
    } else {
        let e = solve_os_artificial(p, &abs_params, &layer_source(&fm.phi_af), g)?;
        let mut phi_f = &fm.phi_af + &e.phi;
        phi_f[0] = fm.phi_af[0];
        let w_f = &fm.w_a + &e.w;
        let (phi_s, w_s, dphi_s, s) = if p.wall_curvature_vanishes() {
            let s = rayleigh::slow_mode(p, alpha, eps, g)?;
            (s.phi_s.clone(), s.w_s.clone(), s.boundary.1, Some(s))
        } else {
            let (phi_s, w_s) = regular_slow_mode(p, &abs_params, g)?;
            let d = g.diff(&phi_s)[0];
            (phi_s, w_s, d, None)
        };
        let dphi_f = g.diff(&phi_f)[0];
        let quad = fm.boundary.dphi_af0 + e.traces.dphi;
        let gap = (dphi_f - quad).norm() / quad.norm();
        let den = dphi_f - phi_f[0] * dphi_s;
        if den.norm() < floor {
            return Err(Error::DegenerateDenominator { value: den.norm(), floor });
        }
        let a = C64::new(1.0, 0.0) / den;
        let b = -phi_f[0] / den;
        let mut phi = &phi_f * a + &phi_s * b;
        phi[0] = C64::new(0.0, 0.0);
        let w = &w_f * a + &w_s * b;
        (phi, w, CorrectorBranch::FastSlow, Some(a), Some(b), den, gap, s)
    };
    let d0 = g.diff(&phi_b)[0];
    let residual = homogeneous_residual(g, &ps, &phi_b, &w_b, alpha, eps);
    Ok(Corrector {
        boundary: (phi_b[0], d0),
        w_b,
        phi_b,
        branch,
        a,
        b,
        denominator,
        floor,
        residual,
        derivative_gap,
        fast: fm.boundary,
        slow,
    })
}

/// Decaying homogeneous solution with unit wall value for profiles with
/// `U''(0) != 0`, where the Rayleigh mode has a `Y log Y` term: `e^{-alpha Y}`
/// plus the artificial-wall solve of `OS[r] = U'' e^{-alpha Y}`.
fn regular_slow_mode(p: &ShearProfile, params: &OsParams, g: &Grid) -> Result<(Field, Field)> {
    let alpha = params.alpha;
    let seed = g.sample_real(|y| (-alpha * y).exp());
    let f = g.sample_real(|y| p.evaluate(y).2 * (-alpha * y).exp());
    let r = solve_os_artificial(p, params, &f, g)?;
    let mut phi = &seed + &r.phi;
    phi[0] = C64::new(1.0, 0.0);
    Ok((phi, r.w))
}

fn superposition(p: &ShearProfile, params: &OsParams, f: &Field, g: &Grid) -> Result<OsSolution> {
    let ar = solve_os_artificial(p, params, f, g)?;
    let c = corrector_unchecked(p, params, g)?;
    let k = ar.traces.dphi;
    let mut phi = &ar.phi - &c.phi_b * k;
    phi[0] = C64::new(0.0, 0.0);
    let w = &ar.w - &c.w_b * k;
    let ps = p.on_grid(g);
    let residual = os_residual(g, &ps, &phi, &w, params.alpha, params.eps, f);
    let s = OsSolution::build(g, phi, w, params.alpha, residual, SolvePath::Superposition);
    if !(s.residual <= 1e-6) {
        return Err(Error::ResolutionInsufficient { residual: s.residual, tolerance: 1e-6 });
    }
    Ok(s)
}

/// Relative `||(d, alpha)(a - b)|| / ||(d, alpha) b||`.
pub fn relative_gap(g: &Grid, a: &Field, b: &Field, alpha: f64) -> f64 {
    let d = a - b;
    let den = g.grad_norm(b, alpha);
    if den == 0.0 {
        g.grad_norm(&d, alpha)
    } else {
        g.grad_norm(&d, alpha) / den
    }
}

/// Non-slip solve: corrector superposition for small `eps`, dense direct
/// solve otherwise; both run and must agree inside the overlap band.
pub fn solve_os_nonslip(p: &ShearProfile, params: &OsParams, f: &Field, g: &Grid) -> Result<OsSolution> {
    params.require_nonzero_alpha()?;
    check_source(g, f)?;
    if params.in_overlap() {
        let sup = superposition(p, params, f, g)?;
        let dir = solve_os_dense(p, params, f, g, Wall::NonSlip)?;
        let gap = relative_gap(g, &sup.phi, &dir.phi, params.alpha);
        if !(gap <= OVERLAP_TOL) {
            return Err(Error::OverlapMismatch { gap });
        }
        let mut out = if params.regime == Regime::SmallEps { sup } else { dir };
        out.overlap_gap = Some(gap);
        return Ok(out);
    }
    match params.regime {
        Regime::SmallEps => superposition(p, params, f, g),
        Regime::LargeEps => solve_os_dense(p, params, f, g, Wall::NonSlip),
    }
}

/// The divergence-form part `phi0` of the split solve.
#[derive(Debug, Clone)]
pub struct FullSolution {
    pub phi: Field,
    pub w: Field,
    pub phi0: Field,
    pub phi1: Field,
    pub residual: f64,
    pub norms: OsNorms,
    pub phi0_norms: OsNorms,
    /// `||(f1, f2)||`.
    pub data: f64,
}

/// `d(U dphi0) - alpha^2 U phi0 + i eps (d^2 - alpha^2)^2 phi0 = g` with
/// `phi0(0) = dphi0(0) = 0`.
pub fn solve_divergence_os(p: &ShearProfile, params: &OsParams, rhs: &Field, g: &Grid) -> Result<(Field, Field)> {
    params.require_nonzero_alpha()?;
    let ps = p.on_grid(g);
    let n = g.len();
    let (alpha, eps) = (params.alpha, params.eps);
    let mut a = os_system(g, &ps, alpha, eps, Wall::NonSlip);
    // Replace U w - U'' phi by U d^2 phi + U' d phi - alpha^2 U phi in the interior rows.
    for i in 1..n {
        for j in 0..n {
            a[(i, j)] = C64::new(ps.u[i] * g.d2()[(i, j)] + ps.du[i] * g.d1()[(i, j)], 0.0);
        }
        a[(i, i)] -= alpha * alpha * ps.u[i];
        a[(i, n + i)] -= ps.u[i];
    }
    let mut b = Field::zeros(2 * n);
    for i in 1..n {
        b[i] = rhs[i];
    }
    let x = linalg::solve(a, &b)?;
    Ok((
        Field::from_iterator(n, x.iter().take(n).copied()),
        Field::from_iterator(n, x.iter().skip(n).copied()),
    ))
}

/// `OS[phi] = -f2 - (i/alpha) df1` with non-slip walls, via `phi0 + phi1`.
pub fn solve_os_full(p: &ShearProfile, params: &OsParams, f1: &Field, f2: &Field, g: &Grid) -> Result<FullSolution> {
    params.require_nonzero_alpha()?;
    check_source(g, f1)?;
    check_source(g, f2)?;
    let alpha = params.alpha;
    let rhs = full_rhs(g, f1, f2, alpha);
    let (phi0, w0) = solve_divergence_os(p, params, &rhs, g)?;
    let ps = p.on_grid(g);
    let up_phi0 = Field::from_iterator(g.len(), (0..g.len()).map(|i| phi0[i] * ps.du[i]));
    let src = g.diff(&up_phi0);
    let s1 = solve_os_nonslip(p, params, &src, g)?;
    let phi = &phi0 + &s1.phi;
    let w = &w0 + &s1.w;
    let residual = os_residual(g, &ps, &phi, &w, alpha, params.eps, &rhs);
    let data = (g.l2(f1).powi(2) + g.l2(f2).powi(2)).sqrt();
    Ok(FullSolution {
        norms: OsNorms::measure(g, &phi, &w, alpha),
        phi0_norms: OsNorms::measure(g, &phi0, &w0, alpha),
        phi,
        w,
        phi0,
        phi1: s1.phi,
        residual,
        data,
    })
}

/// `-f2 - (i/alpha) df1`.
pub fn full_rhs(g: &Grid, f1: &Field, f2: &Field, alpha: f64) -> Field {
    -(f2 + g.diff(f1) * C64::new(0.0, 1.0 / alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GapVerdict {
    Open,
    Closed,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub alpha: f64,
    pub eps: f64,
    pub n_list: Vec<usize>,
    pub sigma_min: Vec<f64>,
    pub verdict: GapVerdict,
    /// Set when `eps >= c2`: the verdict is evidence, not a check.
    pub evidence_only: bool,
    pub note: String,
}

/// Floor below which `sigma_min` counts as closed.
pub const GAP_FLOOR: f64 = 1e-8;
/// Relative spread under refinement that still counts as stable.
pub const GAP_STABILITY: f64 = 0.2;

/// Smallest singular value of the non-slip operator in Clenshaw–Curtis
/// weighted `L^2` on the subspace satisfying the wall conditions. For
/// `alpha = 0` the reduced velocity form `i eps u'' + U u - U' int_0^Y u`
/// with `u(0) = 0` is used, which keeps a nonzero far-field stream function.
pub fn gap_sigma_min(p: &ShearProfile, alpha: f64, eps: f64, g: &Grid) -> Result<f64> {
    let ps = p.on_grid(g);
    let n = g.len();
    let sw: Vec<f64> = g.weights().iter().map(|w| w.max(f64::MIN_POSITIVE).sqrt()).collect();
    if alpha == 0.0 {
        let ie = C64::new(0.0, eps);
        let tail = g.tail_matrix();
        let total: Vec<f64> = g.weights().to_vec();
        let m = n - 1;
        let a = DMatrix::from_fn(m, m, |r, c| {
            let (i, j) = (r + 1, c + 1);
            // int_0^Y u = int u - int_Y^inf u
            let head = total[j] - tail[(i, j)];
            let mut v = ie * g.d2()[(i, j)] - C64::new(ps.du[i] * head, 0.0);
            if i == j {
                v += ps.u[i];
            }
            v * (sw[i] / sw[j])
        });
        return Ok(linalg::sigma_min(a));
    }
    let a = os_system(g, &ps, alpha, eps, Wall::NonSlip);
    let col_scale = |j: usize| 1.0 / sw[j % n];
    // Orthonormal basis of the scaled wall-condition null space.
    let mut m = DMatrix::from_element(2 * n, 2 * n + 2, C64::new(0.0, 0.0));
    for (k, row) in [0usize, n].iter().enumerate() {
        for j in 0..2 * n {
            m[(j, k)] = (a[(*row, j)] * col_scale(j)).conj();
        }
    }
    for j in 0..2 * n {
        m[(j, 2 + j)] = C64::new(1.0, 0.0);
    }
    let q = m.qr().q();
    let basis = q.columns(2, 2 * n - 2).into_owned();
    let rows: Vec<usize> = (1..n).chain(n + 1..2 * n).collect();
    let scaled = DMatrix::from_fn(rows.len(), 2 * n, |r, j| a[(rows[r], j)] * (sw[rows[r] % n] * col_scale(j)));
    Ok(linalg::sigma_min(scaled * basis))
}

/// `sigma_min` for each grid size with a refinement verdict.
pub fn spectral_gap(p: &ShearProfile, params: &OsParams, n_list: &[usize], map_scale: f64) -> Result<GapReport> {
    let sigma = crate::par::try_map(n_list, |&n| gap_sigma_min(p, params.alpha, params.eps, &Grid::rational(n, map_scale)?))?;
    let last = *sigma.last().unwrap_or(&0.0);
    let stable = last > 0.0 && sigma.iter().all(|s| (s / last - 1.0).abs() <= GAP_STABILITY);
    let decaying = sigma.windows(2).all(|w| w[1] < w[0] * (1.0 - GAP_STABILITY));
    let (verdict, note) = if last < GAP_FLOOR || (decaying && sigma.len() > 1) {
        (GapVerdict::Closed, "sigma_min decays under refinement".to_string())
    } else if stable {
        (GapVerdict::Open, "sigma_min stable under refinement".to_string())
    } else {
        (GapVerdict::Inconclusive, "sigma_min not yet stable".to_string())
    };
    // The alpha = 0 problem is uniquely solvable at every eps by the energy method.
    let evidence_only = params.eps >= params.c2 && params.alpha != 0.0;
    Ok(GapReport {
        alpha: params.alpha,
        eps: params.eps,
        n_list: n_list.to_vec(),
        sigma_min: sigma,
        verdict,
        evidence_only,
        note: if evidence_only { format!("{note}; evidence only for eps >= c2") } else { note },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_classification() {
        assert_eq!(OsParams::new(1.0, 1e-3).unwrap().regime, Regime::SmallEps);
        assert_eq!(OsParams::new(1.0, 0.1).unwrap().regime, Regime::LargeEps);
        assert_eq!(OsParams::new(3.0, 0.05).unwrap().regime, Regime::LargeEps);
        assert!(OsParams::new(1.0, 0.06).unwrap().in_overlap());
        assert!(!OsParams::new(1.0, 0.1).unwrap().in_overlap());
        assert!(OsParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn zero_source() {
        let p = ShearProfile::tanh(1.0).unwrap();
        let g = Grid::rational(64, 2.0).unwrap();
        let params = OsParams::new(1.0, 0.1).unwrap();
        for wall in [Wall::Artificial, Wall::NonSlip] {
            let s = solve_os_dense(&p, &params, &g.zeros(), &g, wall).unwrap();
            assert_eq!(g.sup(&s.phi), 0.0);
        }
    }
}
