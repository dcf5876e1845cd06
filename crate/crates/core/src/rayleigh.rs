//! The inviscid problem `U (d^2 - alpha^2) phi - U'' phi = -d f1 + alpha^2 f2`
//! with `phi(0) = 0`, the operator `L[f] = U int_Y^inf f / U^2`, the
//! homogeneous decaying solution, and the slow mode of the viscous problem.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{gauss_legendre, Field, Grid, GridKind};
use crate::linalg;
use crate::modified_airy::{self, AiryBc};
use crate::os::{self, OsParams};
use crate::profile::{ProfileSample, ShearProfile};
use crate::report::EstimateReport;
use crate::C64;

const PANEL_ORDER: usize = 16;
/// Truncation point of the collocation route for `L`.
pub const COLLOCATION_Y_MAX: f64 = 40.0;

/// Tolerance on the relative Rayleigh residual.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// `rho0 = 4 Y e^{-2Y}`: unit mass, zero at the wall.
pub fn rho0(y: f64) -> f64 {
    4.0 * y * (-2.0 * y).exp()
}

/// `rho1 = (1 - 2Y) e^{-2Y}`: unit wall value, zero mass.
pub fn rho1(y: f64) -> f64 {
    (1.0 - 2.0 * y) * (-2.0 * y).exp()
}

pub fn sigma_rho0(y: f64) -> f64 {
    (1.0 + 2.0 * y) * (-2.0 * y).exp()
}

pub fn sigma_rho1(y: f64) -> f64 {
    -y * (-2.0 * y).exp()
}

/// `sigma[f](Y) = int_Y^inf f`.
pub fn sigma(g: &Grid, f: &Field) -> Field {
    g.tail_integral(f)
}

/// `Ray[phi] = U (d^2 - alpha^2) phi - U'' phi` at the nodes.
pub fn apply_rayleigh(g: &Grid, ps: &ProfileSample, phi: &Field, alpha: f64) -> Field {
    let h = g.helm_apply(phi, alpha);
    Field::from_iterator(g.len(), (0..g.len()).map(|i| h[i] * ps.u[i] - phi[i] * ps.ddu[i]))
}

fn check_len(g: &Grid, f: &Field, name: &str) -> Result<()> {
    if f.len() != g.len() {
        return Err(Error::InvalidSize(format!("{name} has {} values on a {}-node grid", f.len(), g.len())));
    }
    Ok(())
}

/// `L[f]` by Gauss–Legendre panels between nodes on the interpolant of `f`,
/// accumulated from infinity; the wall value is the limit `f(0)/U'(0)`.
pub fn operator_l(p: &ShearProfile, g: &Grid, f: &Field) -> Result<Field> {
    check_len(g, f, "f")?;
    let n = g.len();
    let x = g.cheb_points();
    let y = g.nodes();
    let (gx, gw) = gauss_legendre(PANEL_ORDER);
    let unbounded = matches!(g.kind(), GridKind::RationalChebyshev);
    let mut out = g.zeros();
    let mut acc = C64::new(0.0, 0.0);
    for k in (1..n).rev() {
        let xb = if k + 1 < n { x[k + 1] } else { 1.0 };
        let (xa, half) = (x[k], 0.5 * (xb - x[k]));
        let mid = xa + half;
        let mut panel = C64::new(0.0, 0.0);
        for (t, wt) in gx.iter().zip(&gw) {
            let xq = mid + half * t;
            let (z, jac) = g.map_point(xq);
            let u = p.value(z);
            panel += g.interpolate(f, xq) * (jac * wt * half / (u * u));
        }
        if k + 1 == n && !unbounded {
            panel = C64::new(0.0, 0.0);
        }
        acc += panel;
        out[k] = acc * p.value(y[k]);
    }
    out[0] = f[0] / p.uprime0();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::DivergentIntegral("int f / U^2 is not finite".into()));
    }
    Ok(out)
}

/// `L[f]` as the solution of `U phi'' - U'' phi = -f'` with
/// `phi(0) = f(0)/U'(0)` and `phi(COLLOCATION_Y_MAX) = 0`, by dense
/// collocation on a truncated grid of the same size.
pub fn operator_l_collocation(p: &ShearProfile, g: &Grid, f: &Field) -> Result<Field> {
    check_len(g, f, "f")?;
    let n = g.len();
    let t = Grid::new(n, g.map_scale(), GridKind::TruncatedChebyshev { y_max: COLLOCATION_Y_MAX })?;
    let ft = Field::from_iterator(n, t.nodes().iter().map(|&y| g.interpolate(f, g.x_of(y))));
    let ps = p.on_grid(&t);
    let mut a = DMatrix::from_fn(n, n, |i, j| C64::new(ps.u[i] * t.d2()[(i, j)], 0.0));
    for i in 0..n {
        a[(i, i)] -= ps.ddu[i];
    }
    let mut rhs = -t.diff(&ft);
    a.row_mut(0).fill(C64::new(0.0, 0.0));
    a[(0, 0)] = C64::new(1.0, 0.0);
    rhs[0] = f[0] / p.uprime0();
    let phi = linalg::solve(a, &rhs)?;
    Ok(Field::from_iterator(
        n,
        g.nodes()
            .iter()
            .map(|&y| if y < COLLOCATION_Y_MAX { t.interpolate(&phi, t.x_of(y)) } else { C64::new(0.0, 0.0) }),
    ))
}

/// Bounded decaying solution of `U psi'' + 2U' psi' - alpha^2 U psi = s`;
/// `U psi` then solves `Ray[phi] = U s` with `phi(0) = 0`.
fn solve_divergence_form(g: &Grid, ps: &ProfileSample, alpha: f64, s: &Field) -> Result<Field> {
    let n = g.len();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let mut v = ps.u[i] * g.d2()[(i, j)] + 2.0 * ps.du[i] * g.d1()[(i, j)];
        if i == j {
            v -= alpha * alpha * ps.u[i];
        }
        C64::new(v, 0.0)
    });
    let psi = linalg::solve(a, s)?;
    Ok(Field::from_iterator(n, psi.iter().zip(ps.u.iter()).map(|(v, u)| v * *u)))
}

/// `h / U` at the nodes, using `h'(0)/U'(0)` at the wall.
fn divide_by_u(g: &Grid, ps: &ProfileSample, h: &Field) -> Field {
    let dh0 = g.diff(h)[0];
    Field::from_iterator(
        g.len(),
        (0..g.len()).map(|i| if i == 0 { dh0 / ps.du[0] } else { h[i] / ps.u[i] }),
    )
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct RayleighNorms {
    pub phi: f64,
    /// `||(1+Y) f1||`.
    pub f1_weighted: f64,
    /// `||f2||_{H^1}`.
    pub f2_h1: f64,
    /// `||(1+Y) f1|| + (1 + alpha^2)(alpha^{-2} |f1(0)| + ||f2||_{H^1})`.
    pub data_bound: f64,
}

#[derive(Debug, Clone)]
pub struct RayleighSolve {
    pub phi: Field,
    /// `L[sigma[F11]]`.
    pub phi1: Field,
    pub phi2: Field,
    /// Weights of `rho0` and `rho1` in the wall correction: `f1(0)` and `f1'(0)`.
    pub cutoff_weights: (C64, C64),
    /// Relative residual of the Rayleigh equation away from the wall.
    pub residual: f64,
    pub norms: RayleighNorms,
}

fn rayleigh_rhs(g: &Grid, f1: &Field, f2: &Field, alpha: f64) -> Field {
    -g.diff(f1) + f2 * C64::new(alpha * alpha, 0.0)
}

/// Interior residual `||Ray[phi] - rhs|| / max(||rhs||, ||U (d^2 - alpha^2) phi||)`.
fn relative_residual(g: &Grid, ps: &ProfileSample, phi: &Field, alpha: f64, rhs: &Field) -> f64 {
    let mut r = apply_rayleigh(g, ps, phi, alpha) - rhs;
    r[0] = C64::new(0.0, 0.0);
    let h = g.helm_apply(phi, alpha);
    let uh = Field::from_iterator(g.len(), (0..g.len()).map(|i| h[i] * ps.u[i]));
    let scale = g.l2(rhs).max(g.l2(&uh));
    if scale == 0.0 {
        0.0
    } else {
        g.l2(&r) / scale
    }
}

fn check_compatibility(g: &Grid, f1: &Field, f2: &Field, alpha: f64) -> Result<(C64, C64)> {
    let df1 = g.diff(f1);
    let gap = (df1[0] - f2[0] * (alpha * alpha)).norm();
    let scale = g.sup(&df1).max(alpha * alpha * g.sup(f2));
    if gap > 1e-6 * scale.max(1e-300) && gap > 1e-12 {
        return Err(Error::CompatibilityViolated(format!(
            "f1'(0) - alpha^2 f2(0) = {gap:.3e}"
        )));
    }
    Ok((f1[0], df1[0]))
}

fn norms(g: &Grid, phi: &Field, f1: &Field, f2: &Field, alpha: f64) -> RayleighNorms {
    let f1_weighted = g.weighted_norm(f1, 1);
    let f2_h1 = (g.l2(f2).powi(2) + g.l2(&g.diff(f2)).powi(2)).sqrt();
    let a2 = alpha * alpha;
    RayleighNorms {
        phi: g.l2(phi),
        f1_weighted,
        f2_h1,
        data_bound: f1_weighted + (1.0 + a2) * (f1[0].norm() / a2 + f2_h1),
    }
}

/// Solves the inhomogeneous problem as `phi1 + phi2`: `phi1 = L[sigma[F11]]`
/// carries the derivative data after subtracting the cutoff corrections, and
/// `phi2 = U psi2` solves the remainder in divergence form.
pub fn solve_rayleigh(p: &ShearProfile, alpha: f64, f1: &Field, f2: &Field, g: &Grid) -> Result<RayleighSolve> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be nonzero")));
    }
    check_len(g, f1, "f1")?;
    check_len(g, f2, "f2")?;
    let (c0, c1) = check_compatibility(g, f1, f2, alpha)?;
    let ps = p.on_grid(g);
    let y = g.nodes();
    let a2 = alpha * alpha;

    let sigma_f11 = Field::from_iterator(
        g.len(),
        (0..g.len()).map(|i| f1[i] - c0 * sigma_rho0(y[i]) + c1 * sigma_rho1(y[i])),
    );
    let phi1 = operator_l(p, g, &sigma_f11)?;

    let h = Field::from_iterator(g.len(), (0..g.len()).map(|i| f2[i] * a2 - c1 * rho1(y[i])));
    let h_over_u = divide_by_u(g, &ps, &h);
    let s = Field::from_iterator(
        g.len(),
        (0..g.len()).map(|i| {
            let rho0_over_u = if i == 0 { 4.0 / ps.du[0] } else { rho0(y[i]) / ps.u[i] };
            phi1[i] * a2 + c0 * rho0_over_u + h_over_u[i]
        }),
    );
    let phi2 = solve_divergence_form(g, &ps, alpha, &s)?;
    let phi = &phi1 + &phi2;
    let rhs = rayleigh_rhs(g, f1, f2, alpha);
    let residual = relative_residual(g, &ps, &phi, alpha, &rhs);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::ResolutionInsufficient { residual, tolerance: RESIDUAL_TOL });
    }
    Ok(RayleighSolve {
        norms: norms(g, &phi, f1, f2, alpha),
        phi,
        phi1,
        phi2,
        cutoff_weights: (c0, c1),
        residual,
    })
}

/// Dense collocation of the whole problem with `phi(0) = 0`.
pub fn solve_rayleigh_direct(p: &ShearProfile, alpha: f64, f1: &Field, f2: &Field, g: &Grid) -> Result<Field> {
    check_len(g, f1, "f1")?;
    check_len(g, f2, "f2")?;
    let ps = p.on_grid(g);
    let n = g.len();
    let a2 = alpha * alpha;
    let mut a = DMatrix::from_fn(n, n, |i, j| {
        let mut v = ps.u[i] * g.d2()[(i, j)];
        if i == j {
            v -= a2 * ps.u[i] + ps.ddu[i];
        }
        C64::new(v, 0.0)
    });
    let mut rhs = rayleigh_rhs(g, f1, f2, alpha);
    a.row_mut(0).fill(C64::new(0.0, 0.0));
    a[(0, 0)] = C64::new(1.0, 0.0);
    rhs[0] = C64::new(0.0, 0.0);
    linalg::solve(a, &rhs)
}

/// Decaying solution of the homogeneous problem normalised to unit wall value.
#[derive(Debug, Clone)]
pub struct HomogeneousRayleigh {
    pub phi_ray: Field,
    /// `(c_E/alpha) U e^{-alpha Y}`.
    pub part0: Field,
    /// `(c_E/alpha) L[sigma[2 alpha U U' e^{-alpha Y}]]`, unit wall value.
    pub part1: Field,
    /// Remainder with zero wall value.
    pub part2: Field,
    pub c_e: C64,
    pub residual: f64,
}

/// Builds the decaying homogeneous solution from the seed `U e^{-alpha Y}`:
/// the seed leaves the residual `-2 alpha U U' e^{-alpha Y}`, removed by
/// `L[sigma[.]]` up to `alpha^2 U phi1`, which a Dirichlet solve absorbs.
pub fn homogeneous_rayleigh(p: &ShearProfile, alpha: f64, g: &Grid) -> Result<HomogeneousRayleigh> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    let ps = p.on_grid(g);
    let y = g.nodes();
    let n = g.len();
    let seed = Field::from_iterator(n, (0..n).map(|i| C64::new(ps.u[i] * (-alpha * y[i]).exp(), 0.0)));
    let forcing = Field::from_iterator(
        n,
        (0..n).map(|i| C64::new(2.0 * alpha * ps.u[i] * ps.du[i] * (-alpha * y[i]).exp(), 0.0)),
    );
    let phi1 = operator_l(p, g, &sigma(g, &forcing))?;
    let s = &phi1 * C64::new(alpha * alpha, 0.0);
    let phi2 = solve_divergence_form(g, &ps, alpha, &s)?;
    let w0 = phi1[0];
    if w0.norm() < 1e-14 {
        return Err(Error::SingularSystem { pivot_ratio: w0.norm() });
    }
    let c_e = alpha / w0;
    let scale = C64::new(1.0, 0.0) / w0;
    let part0 = seed * scale;
    let part1 = phi1 * scale;
    let mut part2 = phi2 * scale;
    part2[0] = C64::new(0.0, 0.0);
    let mut phi_ray = &part0 + &part1 + &part2;
    phi_ray[0] = C64::new(1.0, 0.0);
    let residual = relative_residual(g, &ps, &phi_ray, alpha, &g.zeros());
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::ResolutionInsufficient { residual, tolerance: RESIDUAL_TOL });
    }
    Ok(HomogeneousRayleigh { phi_ray, part0, part1, part2, c_e, residual })
}

/// Interior relative residual of `Ray[phi] = 0`.
pub fn homogeneous_residual(g: &Grid, p: &ShearProfile, phi: &Field, alpha: f64) -> f64 {
    relative_residual(g, &p.on_grid(g), phi, alpha, &g.zeros())
}

/// The slow mode `phi_s = phi_Ray - psi + phi_tilde` of the viscous problem.
///
/// `psi` solves `i eps (d^2 - alpha^2) psi + U psi = i eps (d^2 - alpha^2) phi_Ray`,
/// so `OS[phi_Ray - psi] = 2 d(U' psi)`, which `phi_tilde` cancels.
#[derive(Debug, Clone)]
pub struct SlowMode {
    pub phi_s: Field,
    /// `(d^2 - alpha^2) phi_s` assembled from the defining equations.
    pub w_s: Field,
    pub phi_ray: Field,
    pub psi: Field,
    /// Part of `psi` forced by `(c_E/alpha) U'' e^{-alpha Y}`.
    pub psi0: Field,
    pub psi1: Field,
    pub phi_tilde: Field,
    pub w_tilde: Field,
    pub c_e: C64,
    /// `(phi_s(0), d phi_s(0))`.
    pub boundary: (C64, C64),
    /// `phi_s - (c_E/alpha) U e^{-alpha Y}`, with unit wall value.
    pub remainder: Field,
    /// Relative residual of the coupled homogeneous system.
    pub residual: f64,
}

/// `(d^2 - alpha^2) phi_Ray` as `U'' phi_Ray / U`; the wall value is the
/// limit taken at a point `1e-6` from the wall.
fn rayleigh_vorticity(p: &ShearProfile, g: &Grid, ps: &ProfileSample, phi: &Field) -> Field {
    let delta = 1e-6;
    let (u, _, upp) = p.evaluate(delta);
    let d0 = g.diff(phi)[0];
    Field::from_iterator(
        g.len(),
        (0..g.len()).map(|i| if i == 0 { (phi[0] + d0 * delta) * (upp / u) } else { phi[i] * (ps.ddu[i] / ps.u[i]) }),
    )
}

pub fn slow_mode(p: &ShearProfile, alpha: f64, eps: f64, g: &Grid) -> Result<SlowMode> {
    let hr = homogeneous_rayleigh(p, alpha, g)?;
    let ps = p.on_grid(g);
    let n = g.len();
    let y = g.nodes();
    let ie = C64::new(0.0, eps);
    let coef = hr.c_e / alpha;
    let w_ray = rayleigh_vorticity(p, g, &ps, &hr.phi_ray);
    let source = &w_ray * ie;
    // The seed contributes (c_E/alpha) U'' e^{-alpha Y} to the vorticity.
    let source0 = Field::from_iterator(n, (0..n).map(|i| ie * coef * ps.ddu[i] * (-alpha * y[i]).exp()));
    let source1 = &source - &source0;
    let psi0 = modified_airy::solve_modified_airy(p, alpha, eps, &source0, g, AiryBc::DirichletW)?.w;
    let psi1 = modified_airy::solve_modified_airy(p, alpha, eps, &source1, g, AiryBc::DirichletW)?.w;
    let psi = &psi0 + &psi1;
    let w_psi = Field::from_iterator(n, (0..n).map(|i| (source[i] - psi[i] * ps.u[i]) / ie));

    let u_psi = Field::from_iterator(n, (0..n).map(|i| psi[i] * ps.du[i]));
    let f = g.diff(&u_psi) * C64::new(-2.0, 0.0);
    let params = OsParams::new(alpha, eps)?;
    let tilde = os::solve_os_artificial(p, &params, &f, g)?;

    let mut phi_s = &hr.phi_ray - &psi + &tilde.phi;
    phi_s[0] = C64::new(1.0, 0.0) - psi[0] + tilde.phi[0];
    let w_s = &w_ray - &w_psi + &tilde.w;
    let residual = os::homogeneous_residual(g, &ps, &phi_s, &w_s, alpha, eps);
    let dphi = g.diff(&phi_s);
    let remainder = &phi_s - &hr.part0;
    Ok(SlowMode {
        boundary: (phi_s[0], dphi[0]),
        phi_s,
        w_s,
        phi_ray: hr.phi_ray,
        psi,
        psi0,
        psi1,
        phi_tilde: tilde.phi,
        w_tilde: tilde.w,
        c_e: hr.c_e,
        remainder,
        residual,
    })
}

/// Random data `(f1, f2)` satisfying `f1'(0) = alpha^2 f2(0)`.
pub fn admissible_data(g: &Grid, alpha: f64, rng: &mut impl Rng) -> (Field, Field) {
    let mut c = [C64::new(0.0, 0.0); 3];
    for v in c.iter_mut() {
        *v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let r1 = rng.gen_range(0.5..2.0);
    let r2 = rng.gen_range(0.5..2.0);
    let b = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    // f1 = (c0 + c1 Y + c2 Y^2) e^{-r1 Y} with c1 fixed by the wall condition.
    c[1] = b * (alpha * alpha) + c[0] * r1;
    let f1 = g.sample(|y| (c[0] + c[1] * y + c[2] * y * y) * (-r1 * y).exp());
    let f2 = g.sample(|y| b * (1.0 + y) * (-r2 * y).exp());
    (f1, f2)
}

/// Ratios `||phi|| / data bound` on random admissible data for each `alpha`.
pub fn verify_rayleigh_estimate(p: &ShearProfile, alphas: &[f64], samples: usize, seed: u64, g: &Grid) -> Result<EstimateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = EstimateReport::new("Rayleigh L2 estimate", "alpha");
    for &alpha in alphas {
        let mut worst = 0.0f64;
        let mut value = 0.0;
        for _ in 0..samples {
            let (f1, f2) = admissible_data(g, alpha, &mut rng);
            let s = solve_rayleigh(p, alpha, &f1, &f2, g)?;
            let r = s.norms.phi / s.norms.data_bound;
            if r > worst {
                worst = r;
                value = s.norms.phi;
            }
        }
        rep.push(alpha, value, worst);
    }
    rep.judge_spread(10.0);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (ShearProfile, Grid) {
        (ShearProfile::tanh(1.0).unwrap(), Grid::rational(96, 2.0).unwrap())
    }

    #[test]
    fn cutoff_fixtures() {
        let g = Grid::rational(96, 2.0).unwrap();
        assert!((g.integrate_real(rho0) - 1.0).abs() < 1e-12);
        assert!(g.integrate_real(rho1).abs() < 1e-12);
        assert_eq!(rho0(0.0), 0.0);
        assert_eq!(rho1(0.0), 1.0);
        let s0 = sigma(&g, &g.sample_real(rho0));
        let s1 = sigma(&g, &g.sample_real(rho1));
        for (i, &y) in g.nodes().iter().enumerate() {
            assert!((s0[i].re - sigma_rho0(y)).abs() < 1e-12);
            assert!((s1[i].re - sigma_rho1(y)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_data() {
        let (p, g) = setup();
        let s = solve_rayleigh(&p, 1.0, &g.zeros(), &g.zeros(), &g).unwrap();
        assert_eq!(g.sup(&s.phi), 0.0);
        assert_eq!(g.sup(&operator_l(&p, &g, &g.zeros()).unwrap()), 0.0);
    }

    #[test]
    fn rejects_incompatible_data() {
        let (p, g) = setup();
        let f1 = g.sample_real(|y| y * (-y).exp());
        assert!(matches!(
            solve_rayleigh(&p, 1.0, &f1, &g.zeros(), &g),
            Err(Error::CompatibilityViolated(_))
        ));
    }
}
