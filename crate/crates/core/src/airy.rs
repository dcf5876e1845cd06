//! Complex Airy function, the integrated Airy function `A0`, and the fast
//! mode built from them.
//!
//! `Ai` is evaluated by three routes chosen by `|z|` and `arg z`:
//!
//! * Maclaurin series with compensated summation when `|z| <= 4`, and also up
//!   to `|z| = 7.5` away from the sector where `Ai` decays;
//! * the large-argument expansion with optimal truncation for `|z| >= 7.5`;
//! * in the decaying sector between the two radii, the expansion value at
//!   `|z| = 7.5` continued inward along the ray by Taylor steps of the Airy
//!   equation. Inward is the growing direction there, so the continuation is
//!   stable, while the Maclaurin sum would cancel catastrophically.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{gauss_legendre, Field, Grid};
use crate::helmholtz;
use crate::profile::ShearProfile;
use crate::C64;

/// Validity envelope of the public evaluators.
pub const ENVELOPE: f64 = 40.0;
/// Half-width of the sector where the large-argument expansion is used.
pub const SECTOR: f64 = 2.0 * PI / 3.0 - 0.1;

const SERIES_RADIUS: f64 = 4.0;
const ASYMPTOTIC_RADIUS: f64 = 7.5;
const CONTINUATION_SECTOR: f64 = FRAC_PI_3 + 0.1;

/// `Ai(0) = 1 / (3^{2/3} Gamma(2/3))`.
pub const AI0: f64 = 0.355_028_053_887_817_2;
/// `Ai'(0) = -1 / (3^{1/3} Gamma(1/3))`.
pub const AIP0: f64 = -0.258_819_403_792_806_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AiryMethod {
    Maclaurin,
    Asymptotic,
    Continuation,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AiryEval {
    pub ai: C64,
    pub ai_prime: C64,
    pub method: AiryMethod,
}

/// Neumaier-compensated complex accumulator.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: C64,
    carry: C64,
}

impl Compensated {
    fn add(&mut self, v: C64) {
        let re = two_sum(self.sum.re, v.re);
        let im = two_sum(self.sum.im, v.im);
        self.sum = C64::new(re.0, im.0);
        self.carry += C64::new(re.1, im.1);
    }

    fn value(&self) -> C64 {
        self.sum + self.carry
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn maclaurin(z: C64) -> (C64, C64) {
    let z3 = z * z * z;
    // f = sum a_k z^{3k}, g = sum b_k z^{3k+1}.
    let (mut f, mut fp, mut g, mut gp) = (
        Compensated::default(),
        Compensated::default(),
        Compensated::default(),
        Compensated::default(),
    );
    let mut tf = C64::new(1.0, 0.0); // a_k z^{3k}
    let mut tg = z; // b_k z^{3k+1}
    f.add(tf);
    g.add(tg);
    gp.add(C64::new(1.0, 0.0));
    for k in 0..120usize {
        let kf = k as f64;
        tf *= z3 / ((3.0 * kf + 2.0) * (3.0 * kf + 3.0));
        tg *= z3 / ((3.0 * kf + 3.0) * (3.0 * kf + 4.0));
        let m = 3.0 * (kf + 1.0);
        f.add(tf);
        g.add(tg);
        // f' = sum 3k a_k z^{3k-1}, g' = sum (3k+1) b_k z^{3k}.
        if z != C64::new(0.0, 0.0) {
            fp.add(tf * m / z);
            gp.add(tg * (m + 1.0) / z);
        }
        if tf.norm() + tg.norm() < 1e-18 * (f.value().norm() + g.value().norm()) && k > 2 {
            break;
        }
    }
    let (f, fp, g, gp) = (f.value(), fp.value(), g.value(), gp.value());
    (f * AI0 + g * AIP0, fp * AI0 + gp * AIP0)
}

/// Large-argument expansion returning `(Ai e^{zeta}, Ai' e^{zeta}, zeta)`.
fn asymptotic_scaled(z: C64) -> (C64, C64, C64) {
    let zeta = z.powf(1.5) * (2.0 / 3.0);
    let root = z.powf(0.25);
    let inv = 1.0 / zeta;
    let mut u = 1.0f64;
    let (mut su, mut sv) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
    let mut power = C64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..60usize {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -u * (6.0 * kf + 1.0) / (6.0 * kf - 1.0);
        power *= -inv;
        let tu = power * u;
        let size = tu.norm();
        if size > last {
            break;
        }
        su += tu;
        sv += power * v;
        last = size;
        if size < 1e-17 {
            break;
        }
    }
    let pref = 0.5 / PI.sqrt();
    (su * pref / root, -sv * pref * root, zeta)
}

fn asymptotic(z: C64) -> (C64, C64) {
    let (a, ap, zeta) = asymptotic_scaled(z);
    let e = (-zeta).exp();
    (a * e, ap * e)
}

/// Taylor step of `y'' = z y` from `z0` by `h`.
fn taylor_step(z0: C64, y: C64, yp: C64, h: C64) -> (C64, C64) {
    // Coefficients a_{k-3}, a_{k-2}, a_{k-1} entering a_k.
    let (mut c3, mut c2, mut c1) = (C64::new(0.0, 0.0), y, yp);
    let mut val = y + yp * h;
    let mut der = yp;
    let mut hp = h; // h^{k}
    let scale = y.norm() + yp.norm() * h.norm();
    for k in 2..200usize {
        let kf = k as f64;
        let a_k = (z0 * c2 + c3) / (kf * (kf - 1.0));
        c3 = c2;
        c2 = c1;
        c1 = a_k;
        der += a_k * hp * kf;
        hp *= h;
        let term = a_k * hp;
        val += term;
        if term.norm() < 1e-18 * scale && (a_k * kf).norm() * hp.norm() / h.norm() < 1e-18 * scale {
            break;
        }
    }
    (val, der)
}

fn continuation(z: C64) -> (C64, C64) {
    let far = z * (ASYMPTOTIC_RADIUS / z.norm());
    let (mut y, mut yp) = asymptotic(far);
    let total = z - far;
    let steps = ((total.norm() / 0.25).ceil() as usize).max(1);
    let h = total / steps as f64;
    let mut p = far;
    for _ in 0..steps {
        let (a, b) = taylor_step(p, y, yp, h);
        y = a;
        yp = b;
        p += h;
    }
    (y, yp)
}

/// `Ai` and `Ai'` without the envelope restriction; used where `Ai`
/// has long underflowed to zero beyond the envelope.
pub fn airy_unchecked(z: C64) -> Result<AiryEval> {
    let r = z.norm();
    if !r.is_finite() {
        return Err(Error::InvalidParameter(format!("Airy argument {z}")));
    }
    let phase = z.arg().abs();
    let (ai, ai_prime, method) = if r <= SERIES_RADIUS {
        let (a, b) = maclaurin(z);
        (a, b, AiryMethod::Maclaurin)
    } else if r >= ASYMPTOTIC_RADIUS {
        if phase >= SECTOR {
            return Err(Error::EnvelopeExceeded { modulus: r });
        }
        let (a, b) = asymptotic(z);
        (a, b, AiryMethod::Asymptotic)
    } else if phase <= CONTINUATION_SECTOR {
        let (a, b) = continuation(z);
        (a, b, AiryMethod::Continuation)
    } else {
        let (a, b) = maclaurin(z);
        (a, b, AiryMethod::Maclaurin)
    };
    Ok(AiryEval { ai, ai_prime, method })
}

/// `Ai(z)` and `Ai'(z)` for `|z| <= 40`.
pub fn airy_ai(z: C64) -> Result<AiryEval> {
    if z.norm() > ENVELOPE {
        return Err(Error::EnvelopeExceeded { modulus: z.norm() });
    }
    airy_unchecked(z)
}

fn rot(angle: f64) -> C64 {
    C64::from_polar(1.0, angle)
}

/// `A0(z) = int_{e^{i pi/6} z}^inf Ai(t) dt`, integrated along the ray
/// `e^{i pi/6} [z, inf)`.
pub fn a0(z: C64) -> Result<C64> {
    if z.norm() > ENVELOPE {
        return Err(Error::EnvelopeExceeded { modulus: z.norm() });
    }
    let e6 = rot(FRAC_PI_6);
    let length = (16.0 - z.re).max(0.0) + 8.0;
    let panels = (length / 0.5).ceil() as usize;
    let width = length / panels as f64;
    let (gx, gw) = gauss_legendre(16);
    let mut sum = Compensated::default();
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        let mut part = C64::new(0.0, 0.0);
        for (t, w) in gx.iter().zip(&gw) {
            let r = mid + 0.5 * width * t;
            part += airy_unchecked(e6 * (z + r))?.ai * (w * 0.5 * width);
        }
        sum.add(part);
    }
    // Two-term large-argument tail of int_T^inf Ai.
    let t = e6 * (z + length);
    let zeta = t.powf(1.5) * (2.0 / 3.0);
    let tail = (-zeta).exp() / (2.0 * PI.sqrt() * t.powf(0.75)) * (1.0 - 41.0 / (48.0 * zeta));
    Ok(e6 * sum.value() + tail)
}

/// `(A0'/A0, A0''/A0)` at `z`.
pub fn a0_ratios(z: C64) -> Result<(C64, C64)> {
    let a = a0(z)?;
    let e = airy_ai(rot(FRAC_PI_6) * z)?;
    let d1 = -rot(FRAC_PI_6) * e.ai;
    let d2 = -rot(FRAC_PI_3) * e.ai_prime;
    Ok((d1 / a, d2 / a))
}

/// Boundary data of the fast mode.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FastModeBoundary {
    /// `Phi_af(0)` by quadrature.
    pub phi_af0: C64,
    /// `d Phi_af(0) = -int W_a cosh(alpha Z) dZ`.
    pub dphi_af0: C64,
    /// `d Phi_a(0) = -int W_a e^{-alpha Z} dZ`.
    pub dphi_a0: C64,
    /// Leading term `i eps / U'(0)` of `Phi_af(0)`.
    pub lead_phi_af0: C64,
    /// Leading term `-e^{-i pi/3} eps^{2/3} / (3 U'(0)^{2/3} Ai'(0))` of `d Phi_af(0)`.
    pub lead_dphi_af0: C64,
    /// `d W_a(0)`.
    pub dw_a0: C64,
}

/// The Airy-layer mode `W_a` with its stream functions.
#[derive(Debug, Clone)]
pub struct FastMode {
    pub w_a: Field,
    pub phi_a: Field,
    pub phi_af: Field,
    pub kappa: f64,
    pub eta: C64,
    pub alpha: f64,
    pub eps: f64,
    pub boundary: FastModeBoundary,
    /// `||i eps (d^2 - alpha^2) W_a + U'(0) Y W_a|| / ||W_a||`.
    pub residual: f64,
}

/// Layer-scaled leading terms `(e^{i pi/3} eps^{4/3} Ai(0) / (U'^{4/3} Ai'(0)),
/// -eps^{2/3} / (3 U'^{2/3} Ai'(0)))` as stated for `(Phi_af(0), d Phi_af(0))`.
pub fn stated_leading_terms(uprime0: f64, eps: f64) -> (C64, C64) {
    (
        rot(FRAC_PI_3) * (eps.powf(4.0 / 3.0) * AI0 / (uprime0.powf(4.0 / 3.0) * AIP0)),
        C64::new(-eps.powf(2.0 / 3.0) / (3.0 * uprime0.powf(2.0 / 3.0) * AIP0), 0.0),
    )
}

/// Default bound on `eps |alpha|^3` for the fast-mode construction.
pub const DELTA_STAR: f64 = 0.5;

pub fn fast_mode(p: &ShearProfile, alpha: f64, eps: f64, g: &Grid) -> Result<FastMode> {
    if !(eps > 0.0) || alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha}, eps = {eps}")));
    }
    let a = alpha.abs();
    if eps * a.powi(3) > DELTA_STAR {
        return Err(Error::InvalidParameter(format!(
            "eps |alpha|^3 = {:.3e} exceeds {DELTA_STAR}",
            eps * a.powi(3)
        )));
    }
    let up = p.uprime0();
    let kappa = (up / eps).cbrt();
    let eta = C64::new(0.0, -eps * a * a / up);
    let scale = rot(FRAC_PI_6) * kappa;
    let norm = scale * AIP0;
    let mut w_a = g.zeros();
    for (i, &y) in g.nodes().iter().enumerate() {
        let arg = scale * (y + eta);
        if arg.norm() > 1e4 {
            continue;
        }
        w_a[i] = airy_unchecked(arg)?.ai / norm;
    }
    let dw_a0 = airy_unchecked(scale * eta)?.ai_prime / AIP0;
    let phi_a = helmholtz::solve_dirichlet(g, &w_a, a)?;
    let phi_af = helmholtz::fast_decay_part(g, &w_a, a)?;

    let y = g.nodes();
    let cosh_w = Field::from_iterator(
        g.len(),
        w_a.iter().zip(y).map(|(w, &yy)| if *w == C64::new(0.0, 0.0) { *w } else { w * (a * yy).cosh() }),
    );
    let boundary = FastModeBoundary {
        phi_af0: phi_af[0],
        dphi_af0: -g.integrate(&cosh_w),
        dphi_a0: helmholtz::boundary_derivative(g, &w_a, a),
        lead_phi_af0: C64::new(0.0, eps / up),
        lead_dphi_af0: -rot(-FRAC_PI_3) * (eps.powf(2.0 / 3.0) / (3.0 * up.powf(2.0 / 3.0) * AIP0)),
        dw_a0,
    };

    let ie = C64::new(0.0, eps);
    let lhs = g.helm_apply(&w_a, a) * ie
        + Field::from_iterator(g.len(), w_a.iter().zip(y).map(|(w, &yy)| w * (up * yy)));
    let wn = g.l2(&w_a);
    let residual = g.l2(&lhs) / wn;
    if residual > 1e-6 {
        return Err(Error::ResolutionInsufficient { residual, tolerance: 1e-6 });
    }
    Ok(FastMode {
        w_a,
        phi_a,
        phi_af,
        kappa,
        eta,
        alpha: a,
        eps,
        boundary,
        residual,
    })
}
