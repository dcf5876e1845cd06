//! A-priori estimates for the Orr–Sommerfeld solvers measured over parameter
//! sweeps.

use crate::error::Result;
use crate::grid::{Field, Grid};
use crate::os::{self, OsParams, SourceNorms, Wall};
use crate::profile::ShearProfile;
use crate::report::EstimateReport;

/// Large-`alpha` threshold for the damping estimate.
pub const M2: f64 = 8.0;
/// Large-`eps` threshold for the damping estimate.
pub const C3: f64 = 0.1;

/// Default data `(f1, f2)` for the full-problem sweeps.
pub fn default_data(g: &Grid) -> (Field, Field) {
    (g.sample_real(|y| y * (-y).exp()), g.sample_real(|y| (1.0 + y) * (-2.0 * y).exp()))
}

/// `||sqrt(U) (dphi, alpha phi)||`.
fn sqrt_u_grad(g: &Grid, p: &ShearProfile, phi: &Field, alpha: f64) -> f64 {
    let ps = p.on_grid(g);
    let dphi = g.diff(phi);
    g.weights()
        .iter()
        .enumerate()
        .map(|(i, w)| ps.u[i] * (dphi[i].norm_sqr() + alpha * alpha * phi[i].norm_sqr()) * w)
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

/// Artificial-wall solves with `f = (1+Y)^{-3}`: the full weighted estimate,
/// the growth exponent of `||(1+Y) w||` (at least `-1/3`) and boundedness of
/// `||(dphi, alpha phi)||`.
pub fn verify_artificial_estimate(p: &ShearProfile, alpha: f64, sweep: &[f64], g: &Grid) -> Result<Vec<EstimateReport>> {
    let f = g.sample_real(|y| (1.0 + y).powi(-3));
    let rhs = SourceNorms::measure(g, &f).artificial_bound(alpha);
    let mut combo = EstimateReport::new("artificial-wall estimate", "eps");
    let mut w1 = EstimateReport::new("||(1+Y) w||", "eps");
    let mut grad = EstimateReport::new("||(dphi, alpha phi)||", "eps");
    for &eps in sweep {
        let s = os::solve_os_artificial(p, &OsParams::new(alpha, eps)?, &f, g)?;
        let n = &s.norms;
        let lhs = eps.cbrt() * n.w_weighted
            + eps.powf(2.0 / 3.0) * n.grad_w_weighted
            + eps * n.helm_w_weighted
            + n.grad_phi;
        combo.push(eps, lhs, lhs / rhs);
        w1.push(eps, n.w_weighted, n.w_weighted / rhs);
        grad.push(eps, n.grad_phi, n.grad_phi / rhs);
    }
    combo.judge_bounded(0.05, 10.0);
    grad.judge_bounded(0.05, 10.0);
    w1.finish();
    w1.expected_exponent = Some(-1.0 / 3.0);
    w1.pass = w1.fitted_exponent.is_some_and(|s| s >= -1.0 / 3.0 - 0.05);
    w1.note = "one-sided: slope at least the stated exponent".into();
    Ok(vec![combo, w1, grad])
}

/// Full split solves over `alphas x sweep`: the energy bound on `phi0` and the
/// small-`eps` estimate `eps^{2/3}|alpha| ||(d^2-alpha^2) phi|| +
/// eps^{1/3}|alpha| ||(dphi, alpha phi)||` over `||(f1, f2)||`, both judged by
/// ratio spread.
pub fn verify_full_estimate(
    p: &ShearProfile,
    alphas: &[f64],
    sweep: &[f64],
    data: &(Field, Field),
    g: &Grid,
) -> Result<Vec<EstimateReport>> {
    let mut phi0 = EstimateReport::new("phi0 energy bound", "eps");
    let mut full = EstimateReport::new("small-eps full estimate", "eps");
    for &alpha in alphas {
        for &eps in sweep {
            let s = os::solve_os_full(p, &OsParams::new(alpha, eps)?, &data.0, &data.1, g)?;
            let a = alpha.abs();
            let n0 = &s.phi0_norms;
            let lhs0 = eps.cbrt() * n0.grad_phi
                + eps.powf(2.0 / 3.0) * n0.helm_phi
                + eps.powf(1.0 / 6.0) * sqrt_u_grad(g, p, &s.phi0, alpha);
            phi0.push(eps, lhs0, lhs0 * a / s.data);
            let lhs = eps.powf(2.0 / 3.0) * a * s.norms.w + eps.cbrt() * a * s.norms.grad_phi;
            full.push(eps, lhs, lhs / s.data);
        }
    }
    for r in [&mut phi0, &mut full] {
        r.judge_spread(10.0);
        r.fitted_exponent = None;
        r.note = format!("alpha in {alphas:?}");
    }
    Ok(vec![phi0, full])
}

/// Large-`eps` full estimate `|alpha| (||(d^2-alpha^2) phi|| +
/// ||(dphi, alpha phi)||_inf + ||(dphi, alpha phi)||)` over `||(f1, f2)||`.
pub fn verify_large_eps_estimate(
    p: &ShearProfile,
    alphas: &[f64],
    sweep: &[f64],
    data: &(Field, Field),
    g: &Grid,
) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new("large-eps full estimate", "eps");
    for &alpha in alphas {
        for &eps in sweep {
            let s = os::solve_os_full(p, &OsParams::new(alpha, eps)?, &data.0, &data.1, g)?;
            let n = &s.norms;
            let lhs = alpha.abs() * (n.w + n.grad_phi_sup + n.grad_phi);
            rep.push(eps, lhs, lhs / s.data);
        }
    }
    rep.judge_spread(10.0);
    rep.fitted_exponent = None;
    rep.note = format!("alpha in {alphas:?}");
    Ok(rep)
}

/// The two weighted bounds checked on non-slip solves with `eps >= c2`:
/// `||sqrt(Y) grad phi||^2` against `||grad phi|| (eps ||(1+Y) grad w|| +
/// ||(1+Y)^2 f||)`, and `eps^{2/3} ||Y grad w|| + eps^{1/3} ||Y w||` against
/// `||dphi|| + ||Y f|| + eps ||dw||`.
pub fn verify_weighted_bounds(
    p: &ShearProfile,
    alphas: &[f64],
    sweep: &[f64],
    f: &Field,
    g: &Grid,
) -> Result<Vec<EstimateReport>> {
    let sn = SourceNorms::measure(g, f);
    let mut first = EstimateReport::new("sqrt(Y)-weighted gradient bound", "eps");
    let mut second = EstimateReport::new("Y-weighted vorticity bound", "eps");
    for &alpha in alphas {
        for &eps in sweep {
            let params = OsParams::new(alpha, eps)?;
            let s = os::solve_os_nonslip(p, &params, f, g)?;
            let n = &s.norms;
            let lhs1 = n.sqrt_y_grad_phi.powi(2);
            first.push(eps, lhs1, lhs1 / (n.grad_phi * (eps * n.grad_w_weighted + sn.weighted2)));
            let lhs2 = eps.powf(2.0 / 3.0) * n.y_grad_w + eps.cbrt() * n.y_w;
            let dphi = g.l2(&g.diff(&s.phi));
            second.push(eps, lhs2, lhs2 / (dphi + sn.y + eps * n.dw));
        }
    }
    for r in [&mut first, &mut second] {
        r.judge_upper(10.0);
        r.fitted_exponent = None;
        r.note = format!("alpha in {alphas:?}");
    }
    Ok(vec![first, second])
}

/// Large-`alpha` damping: `(||w|| + ||(dphi, alpha phi)||) / ||f||` for
/// `|alpha| >= M2` at fixed `eps >= C3`; the ratio must not grow with `alpha`.
pub fn verify_large_alpha_damping(p: &ShearProfile, alphas: &[f64], eps: f64, f: &Field, g: &Grid) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new("large-alpha damping", "alpha");
    let fn2 = g.l2(f);
    for &alpha in alphas {
        let s = os::solve_os_dense(p, &OsParams::new(alpha, eps)?, f, g, Wall::NonSlip)?;
        let lhs = s.norms.w + s.norms.grad_phi;
        rep.push(alpha, lhs, lhs / fn2);
    }
    rep.judge_upper(10.0);
    rep.note = format!("eps = {eps}");
    Ok(rep)
}
