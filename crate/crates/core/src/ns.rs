//! Fourier modes of the steady Navier–Stokes perturbation problem around the
//! shear flow `(U(y/sqrt(nu)), 0)` on `T_theta x R_+`.
//!
//! Conventions: `u(x, y) = sum_n u_n(y) e^{i n~ x}` with `n~ = n/theta`, the
//! torus `T_theta` has length `2 pi theta`, and every `L^2(Omega)` norm is
//! `(2 pi theta sum_n ||u_n||^2)^{1/2}`. Mode norms such as `||u_n||_inf` and
//! `||dy u01||` are one-dimensional. Fields live on the nodes `y = sqrt(nu) Y`
//! of a grid in the boundary-layer variable `Y`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::airy::DELTA_STAR;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, GridKind};
use crate::os::{self, GapVerdict, OsParams, Wall};
use crate::par;
use crate::profile::ShearProfile;
use crate::report::EstimateReport;
use crate::C64;

/// Frequency threshold factor: `|n~| <= DELTA0 nu^{-3/4}` is exactly the fast
/// mode admissibility `eps |alpha|^3 <= delta*`.
pub const DELTA0: f64 = std::f64::consts::FRAC_1_SQRT_2;
/// Period threshold: `theta <= THETA0` keeps `eps = theta/n <= c2`.
pub const THETA0: f64 = os::C2;
/// Relative size of the dropped convolution tail that raises a warning.
pub const TRUNCATION_TOL: f64 = 1e-6;

const _: () = assert!((DELTA0 * DELTA0 - DELTA_STAR).abs() < 1e-15);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeRegime {
    LowFreq,
    HighFreq,
    LargeTheta,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModeParams {
    pub nu: f64,
    pub theta: f64,
    pub n: i64,
    pub n_tilde: f64,
    pub alpha: f64,
    pub eps: f64,
    pub regime: ModeRegime,
}

impl ModeParams {
    pub fn new(nu: f64, theta: f64, n: i64) -> Result<Self> {
        Self::with_thresholds(nu, theta, n, DELTA0, THETA0)
    }

    pub fn with_thresholds(nu: f64, theta: f64, n: i64, delta0: f64, theta0: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite() && theta > 0.0 && theta.is_finite()) || n == 0 {
            return Err(Error::InvalidParameter(format!("nu = {nu}, theta = {theta}, n = {n}")));
        }
        let n_tilde = n as f64 / theta;
        let regime = if theta > theta0 {
            ModeRegime::LargeTheta
        } else if n_tilde.abs() <= high_frequency_threshold(nu, delta0) {
            ModeRegime::LowFreq
        } else {
            ModeRegime::HighFreq
        };
        Ok(Self { nu, theta, n, n_tilde, alpha: n_tilde * nu.sqrt(), eps: 1.0 / n_tilde, regime })
    }

    /// Orr–Sommerfeld parameters of the mode `|n|`.
    pub fn os_params(&self) -> Result<OsParams> {
        OsParams::new(self.alpha.abs(), self.eps.abs())
    }
}

/// `delta0 nu^{-3/4}`.
pub fn high_frequency_threshold(nu: f64, delta0: f64) -> f64 {
    delta0 * nu.powf(-0.75)
}

/// Physical nodes `y = sqrt(nu) Y`.
pub fn physical_nodes(g: &Grid, nu: f64) -> Vec<f64> {
    let s = nu.sqrt();
    g.nodes().iter().map(|y| s * y).collect()
}

/// Norms and derivatives in the physical variable.
#[derive(Debug, Clone, Copy)]
struct Phys<'a> {
    g: &'a Grid,
    s: f64,
}

impl<'a> Phys<'a> {
    fn new(g: &'a Grid, nu: f64) -> Self {
        Self { g, s: nu.sqrt() }
    }

    fn l2(&self, u: &Field) -> f64 {
        self.s.sqrt() * self.g.l2(u)
    }

    fn pair(&self, a: &Field, b: &Field) -> f64 {
        self.l2(a).hypot(self.l2(b))
    }

    fn diff(&self, u: &Field) -> Field {
        self.g.diff(u) / C64::new(self.s, 0.0)
    }

    fn inner(&self, a: &Field, b: &Field) -> C64 {
        self.g.inner(a, b) * self.s
    }

    fn head_integral(&self, u: &Field) -> Field {
        self.g.head_integral(u) * C64::new(self.s, 0.0)
    }

    fn integrate(&self, u: &Field) -> C64 {
        self.g.integrate(u) * self.s
    }
}

fn sup_pair(a: &Field, b: &Field) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.norm().hypot(y.norm())).fold(0.0, f64::max)
}

fn conj(f: &Field) -> Field {
    f.map(|v| v.conj())
}

mod field_serde {
    use super::*;

    pub fn serialize<S: Serializer>(f: &Field, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(f.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Field, D::Error> {
        Ok(Field::from_vec(Vec::<C64>::deserialize(d)?))
    }
}

/// `u01 = nu^{-1} int_0^y F01`, its derivative `F01/nu`, and the limit at
/// infinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroMode {
    #[serde(with = "field_serde")]
    pub u01: Field,
    #[serde(with = "field_serde")]
    pub du01: Field,
    pub limit: f64,
}

/// Zero mode from the flux `F01` sampled on the physical nodes.
pub fn solve_zero_mode(nu: f64, f01: &Field, g: &Grid) -> Result<ZeroMode> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("nu = {nu}")));
    }
    let ph = Phys::new(g, nu);
    let inv = C64::new(1.0 / nu, 0.0);
    Ok(ZeroMode {
        u01: ph.head_integral(f01) * inv,
        du01: f01 * inv,
        limit: ph.integrate(f01).re / nu,
    })
}

/// Velocity `(u1, u2)` of one mode and its physical stream function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeField {
    pub n: i64,
    #[serde(with = "field_serde")]
    pub u1: Field,
    #[serde(with = "field_serde")]
    pub u2: Field,
    #[serde(with = "field_serde")]
    pub phi: Field,
}

impl ModeField {
    fn conjugate(&self) -> Self {
        Self { n: -self.n, u1: conj(&self.u1), u2: conj(&self.u2), phi: conj(&self.phi) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSolve {
    pub params: ModeParams,
    pub field: ModeField,
    /// Residual of the underlying Orr–Sommerfeld solve.
    pub residual: f64,
    /// `max |i n~ u1 + dy u2|` relative to `|n~| max |u1|`.
    pub divergence: f64,
    /// `max(|u1(0)|, |u2(0)|)`.
    pub wall: f64,
    pub u_l2: f64,
    pub du_l2: f64,
    pub f_l2: f64,
    /// `||sqrt(U) u||`.
    pub sqrt_u_l2: f64,
    /// Relative gap in the imaginary-part energy identity.
    pub energy_gap: f64,
    /// Relative gap in the real-part energy identity.
    pub real_energy_gap: f64,
}

/// Grid sizes used for the spectral-condition check behind a mode solve.
pub fn gap_grids(n: usize) -> Vec<usize> {
    vec![n / 2, 3 * n / 4, n]
}

/// Gap verdict for the mode, computed on [`gap_grids`].
pub fn mode_verdict(p: &ShearProfile, mp: &ModeParams, g: &Grid) -> Result<GapVerdict> {
    Ok(os::spectral_gap(p, &mp.os_params()?, &gap_grids(g.len()), g.map_scale())?.verdict)
}

/// Solves one nonzero mode with forcing `(f1, f2)` on the physical nodes.
///
/// Large-period modes need a gap-open verdict; pass one in `gap` or it is
/// computed here.
pub fn solve_mode(
    p: &ShearProfile,
    mp: &ModeParams,
    f1: &Field,
    f2: &Field,
    g: &Grid,
    gap: Option<GapVerdict>,
) -> Result<ModeSolve> {
    if mp.regime == ModeRegime::LargeTheta {
        let verdict = match gap {
            Some(v) => v,
            None => mode_verdict(p, mp, g)?,
        };
        if verdict != GapVerdict::Open {
            return Err(Error::SpectralConditionUnverified { theta: mp.theta });
        }
    }
    if mp.n > 0 {
        return solve_positive(p, mp, f1, f2, g);
    }
    // u_{-n}[f] = conj(u_n[conj f]).
    let mirror = ModeParams { n: -mp.n, n_tilde: -mp.n_tilde, alpha: -mp.alpha, eps: -mp.eps, ..*mp };
    let mut s = solve_positive(p, &mirror, &conj(f1), &conj(f2), g)?;
    s.params = *mp;
    s.field = s.field.conjugate();
    Ok(s)
}

fn solve_positive(p: &ShearProfile, mp: &ModeParams, f1: &Field, f2: &Field, g: &Grid) -> Result<ModeSolve> {
    let sq = C64::new(mp.nu.sqrt(), 0.0);
    let params = mp.os_params()?;
    let full = os::solve_os_full(p, &params, &(f1 * sq), &(f2 * sq), g)?;
    let field = ModeField {
        n: mp.n,
        u1: g.diff(&full.phi),
        u2: &full.phi * C64::new(0.0, -mp.alpha),
        phi: &full.phi * sq,
    };
    Ok(diagnose(p, mp, field, f1, f2, full.residual, g))
}

fn diagnose(p: &ShearProfile, mp: &ModeParams, field: ModeField, f1: &Field, f2: &Field, residual: f64, g: &Grid) -> ModeSolve {
    let ph = Phys::new(g, mp.nu);
    let ps = p.on_grid(g);
    let nt = mp.n_tilde;
    let d1 = ph.diff(&field.u1);
    let d2 = ph.diff(&field.u2);
    let div = &field.u1 * C64::new(0.0, nt) + &d2;
    let scale = nt.abs() * g.sup(&field.u1);
    let divergence = if scale > 0.0 { g.sup(&div) / scale } else { g.sup(&div) };

    let u_sq = |i: usize| field.u1[i].norm_sqr() + field.u2[i].norm_sqr();
    let w = g.weights();
    let uu: f64 = (0..g.len()).map(|i| ps.u[i] * u_sq(i) * w[i]).sum::<f64>() * ph.s;
    // Re <dy U phi_n, dy phi_n> with dy U = U'/sqrt(nu), dy phi_n = u1.
    let cross: f64 = (0..g.len())
        .map(|i| ps.du[i] / ph.s * (field.phi[i] * field.u1[i].conj()).re * w[i])
        .sum::<f64>()
        * ph.s;
    let fu = ph.inner(f1, &field.u1) + ph.inner(f2, &field.u2);
    let lhs = nt * (uu - cross);
    let energy_gap = (lhs - fu.im).abs() / (nt.abs() * uu + fu.norm()).max(f64::MIN_POSITIVE);

    let u_l2 = ph.pair(&field.u1, &field.u2);
    let du_l2 = ph.pair(&d1, &d2);
    // Re <u2 dy U, u1>.
    let stretch: f64 = (0..g.len())
        .map(|i| ps.du[i] / ph.s * (field.u2[i] * field.u1[i].conj()).re * w[i])
        .sum::<f64>()
        * ph.s;
    let diss = mp.nu * (du_l2 * du_l2 + nt * nt * u_l2 * u_l2);
    let real_energy_gap = (diss + stretch - fu.re).abs() / (diss + fu.norm()).max(f64::MIN_POSITIVE);

    ModeSolve {
        params: *mp,
        residual,
        divergence,
        wall: field.u1[0].norm().max(field.u2[0].norm()),
        u_l2,
        du_l2,
        f_l2: ph.pair(f1, f2),
        sqrt_u_l2: uu.max(0.0).sqrt(),
        energy_gap,
        real_energy_gap,
        field,
    }
}

/// Constant of the interpolation bound `||u_n|| <= C (nu^{1/4} |n~|^{-1/6}
/// ||dy u_n||^{1/2} ||u_n||^{1/2} + |n~|^{1/6} ||sqrt(U) u_n||)`.
pub fn interpolation_constant(s: &ModeSolve) -> f64 {
    let nt = s.params.n_tilde.abs();
    let rhs = s.params.nu.powf(0.25) * nt.powf(-1.0 / 6.0) * (s.du_l2 * s.u_l2).sqrt() + nt.powf(1.0 / 6.0) * s.sqrt_u_l2;
    s.u_l2 / rhs
}

/// Shapes of per-mode forcing in the boundary-layer variable; the physical
/// forcing is `nu^{-1/2} f(y/sqrt(nu))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingShape {
    /// `(e^{-Y}, 0)`.
    Streamwise,
    /// `(0, Y e^{-Y})`.
    Normal,
    /// `(Y e^{-Y}, e^{-2Y})`.
    Mixed,
}

impl ForcingShape {
    /// Physical components on the grid nodes.
    pub fn sample(self, g: &Grid, nu: f64) -> (Field, Field) {
        let a = nu.powf(-0.5);
        type RealFn = fn(f64) -> f64;
        let (f1, f2): (RealFn, RealFn) = match self {
            Self::Streamwise => (|y| (-y).exp(), |_| 0.0),
            Self::Normal => (|_| 0.0, |y| y * (-y).exp()),
            Self::Mixed => (|y| y * (-y).exp(), |y| (-2.0 * y).exp()),
        };
        (g.sample_real(|y| a * f1(y)), g.sample_real(|y| a * f2(y)))
    }
}

/// Ratio combination of the resolvent estimate for a regime.
pub fn regime_combination(regime: ModeRegime, n_tilde: f64, nu: f64, u: f64, du: f64) -> f64 {
    let nt = n_tilde.abs();
    match regime {
        ModeRegime::LowFreq => nt.powf(2.0 / 3.0) * u + nt.cbrt() * nu.sqrt() * du,
        ModeRegime::HighFreq => nt * nt * nu * u + nt * nu * du,
        ModeRegime::LargeTheta => nt * u + nu.sqrt() * nt * du,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventSweep {
    pub nus: Vec<f64>,
    pub theta: f64,
    pub n_list: Vec<i64>,
    /// Adds `n = ceil(delta0 nu^{-3/4} theta)` and twice that for each `nu`.
    pub high_frequency: bool,
    /// Period for the large-period block, run over `n_list`.
    pub large_theta: Option<f64>,
    pub forcing: ForcingShape,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeRow {
    pub nu: f64,
    pub theta: f64,
    pub n: i64,
    pub n_tilde: f64,
    pub regime: ModeRegime,
    pub u_l2: f64,
    pub du_l2: f64,
    pub f_l2: f64,
    pub lhs: f64,
    pub ratio: f64,
    pub divergence: f64,
    pub energy_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventReport {
    pub rows: Vec<RegimeRow>,
    /// One report per regime present, in the order low, high, large period.
    pub regimes: Vec<(ModeRegime, EstimateReport)>,
    pub pass: bool,
}

/// Measures the regime combinations over the sweep; each regime passes when
/// its ratio spread is at most 10.
pub fn verify_resolvent_regimes(p: &ShearProfile, sweep: &ResolventSweep, g: &Grid) -> Result<ResolventReport> {
    let mut points: Vec<(f64, f64, i64)> = Vec::new();
    for &nu in &sweep.nus {
        for &n in &sweep.n_list {
            points.push((nu, sweep.theta, n));
        }
        if sweep.high_frequency {
            let n_hf = (high_frequency_threshold(nu, DELTA0) * sweep.theta).ceil() as i64;
            points.push((nu, sweep.theta, n_hf));
            points.push((nu, sweep.theta, 2 * n_hf));
        }
        if let Some(t) = sweep.large_theta {
            for &n in &sweep.n_list {
                points.push((nu, t, n));
            }
        }
    }
    let rows = par::try_map(&points, |&(nu, theta, n)| {
        let mp = ModeParams::new(nu, theta, n)?;
        let (f1, f2) = sweep.forcing.sample(g, nu);
        let s = solve_mode(p, &mp, &f1, &f2, g, None)?;
        let lhs = regime_combination(mp.regime, mp.n_tilde, nu, s.u_l2, s.du_l2);
        Ok(RegimeRow {
            nu,
            theta,
            n,
            n_tilde: mp.n_tilde,
            regime: mp.regime,
            u_l2: s.u_l2,
            du_l2: s.du_l2,
            f_l2: s.f_l2,
            lhs,
            ratio: lhs / s.f_l2,
            divergence: s.divergence,
            energy_gap: s.energy_gap,
        })
    })?;
    let mut regimes = Vec::new();
    for (regime, name) in [
        (ModeRegime::LowFreq, "low-frequency resolvent"),
        (ModeRegime::HighFreq, "high-frequency resolvent"),
        (ModeRegime::LargeTheta, "large-period resolvent"),
    ] {
        let mut rep = EstimateReport::new(name, "nu");
        for r in rows.iter().filter(|r| r.regime == regime) {
            rep.push(r.nu, r.lhs, r.ratio);
        }
        if rep.ratios.is_empty() {
            continue;
        }
        rep.judge_spread(10.0);
        rep.fitted_exponent = None;
        regimes.push((regime, rep));
    }
    let pass = !regimes.is_empty() && regimes.iter().all(|(_, r)| r.pass);
    Ok(ResolventReport { rows, regimes, pass })
}

/// Parameters of a truncated nonlinear problem.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowParams {
    pub nu: f64,
    pub theta: f64,
    pub n_max: usize,
}

impl FlowParams {
    pub fn new(nu: f64, theta: f64, n_max: usize) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite() && theta > 0.0 && theta.is_finite()) || n_max == 0 {
            return Err(Error::InvalidParameter(format!("nu = {nu}, theta = {theta}, n_max = {n_max}")));
        }
        Ok(Self { nu, theta, n_max })
    }

    pub fn mode(&self, n: i64) -> Result<ModeParams> {
        ModeParams::new(self.nu, self.theta, n)
    }

    /// `-n_max..=-1` then `1..=n_max`.
    pub fn modes(&self) -> Vec<i64> {
        let m = self.n_max as i64;
        (-m..=m).filter(|&n| n != 0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n: usize,
    pub map_scale: f64,
    pub kind: GridKind,
}

impl GridMeta {
    pub fn of(g: &Grid) -> Self {
        Self { n: g.len(), map_scale: g.map_scale(), kind: g.kind() }
    }

    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.n, self.map_scale, self.kind)
    }
}

/// Truncated Fourier state: the zero mode and modes `0 < |n| <= n_max`, sorted
/// by `n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralState {
    pub nu: f64,
    pub theta: f64,
    pub n_max: usize,
    pub grid: GridMeta,
    pub zero: ZeroMode,
    pub modes: Vec<ModeField>,
}

impl SpectralState {
    pub fn zeros(flow: &FlowParams, g: &Grid) -> Self {
        let z = g.zeros();
        Self {
            nu: flow.nu,
            theta: flow.theta,
            n_max: flow.n_max,
            grid: GridMeta::of(g),
            zero: ZeroMode { u01: z.clone(), du01: z.clone(), limit: 0.0 },
            modes: flow
                .modes()
                .into_iter()
                .map(|n| ModeField { n, u1: z.clone(), u2: z.clone(), phi: z.clone() })
                .collect(),
        }
    }

    pub fn mode(&self, n: i64) -> Option<&ModeField> {
        self.modes.iter().find(|m| m.n == n)
    }

    /// `c * self`.
    pub fn scaled(&self, c: f64) -> Self {
        let k = C64::new(c, 0.0);
        let mut out = self.clone();
        out.zero.u01 *= k;
        out.zero.du01 *= k;
        out.zero.limit *= c;
        for m in out.modes.iter_mut() {
            m.u1 *= k;
            m.u2 *= k;
            m.phi *= k;
        }
        out
    }

    /// `self - other`, mode by mode.
    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.zero.u01 -= &other.zero.u01;
        out.zero.du01 -= &other.zero.du01;
        out.zero.limit -= other.zero.limit;
        for m in out.modes.iter_mut() {
            if let Some(o) = other.mode(m.n) {
                m.u1 -= &o.u1;
                m.u2 -= &o.u2;
                m.phi -= &o.phi;
            }
        }
        for o in &other.modes {
            if self.mode(o.n).is_none() {
                out.modes.push(ModeField { n: o.n, u1: -&o.u1, u2: -&o.u2, phi: -&o.phi });
            }
        }
        out.modes.sort_by_key(|m| m.n);
        out
    }

    /// Largest `|u_{-n} - conj(u_n)|` over stored pairs, relative to the
    /// largest mode value.
    pub fn reality_defect(&self) -> f64 {
        let scale = self.modes.iter().map(|m| sup_pair(&m.u1, &m.u2)).fold(0.0, f64::max);
        let mut worst = 0.0f64;
        for m in self.modes.iter().filter(|m| m.n > 0) {
            if let Some(o) = self.mode(-m.n) {
                worst = worst.max(sup_pair(&(&o.u1 - conj(&m.u1)), &(&o.u2 - conj(&m.u2))));
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Per-mode forcing `(f_{n,1}, f_{n,2})` on the physical nodes; no zero mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Forcing {
    pub modes: Vec<ForcingMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForcingMode {
    pub n: i64,
    #[serde(with = "field_serde")]
    pub f1: Field,
    #[serde(with = "field_serde")]
    pub f2: Field,
}

impl Forcing {
    pub fn zero() -> Self {
        Self { modes: Vec::new() }
    }

    /// Real forcing `a (f e^{i n~ x} + conj)` of the given shape.
    pub fn single_mode(g: &Grid, nu: f64, n: i64, amplitude: f64, shape: ForcingShape) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("forcing must have no zero mode".into()));
        }
        let (f1, f2) = shape.sample(g, nu);
        let a = C64::new(amplitude, 0.0);
        let (f1, f2) = (f1 * a, f2 * a);
        let mut modes = vec![
            ForcingMode { n: n.abs(), f1: f1.clone(), f2: f2.clone() },
            ForcingMode { n: -n.abs(), f1: conj(&f1), f2: conj(&f2) },
        ];
        modes.sort_by_key(|m| m.n);
        Ok(Self { modes })
    }

    pub fn mode(&self, n: i64) -> Option<&ForcingMode> {
        self.modes.iter().find(|m| m.n == n)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let k = C64::new(c, 0.0);
        Self { modes: self.modes.iter().map(|m| ForcingMode { n: m.n, f1: &m.f1 * k, f2: &m.f2 * k }).collect() }
    }

    /// `||f||_{L^2(Omega)}`.
    pub fn l2(&self, g: &Grid, nu: f64, theta: f64) -> f64 {
        let ph = Phys::new(g, nu);
        (2.0 * PI * theta * self.modes.iter().map(|m| ph.pair(&m.f1, &m.f2).powi(2)).sum::<f64>()).sqrt()
    }
}

/// The five terms of the `X_nu` norm and their sum.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct XNorm {
    pub zero_sup: f64,
    pub zero_grad: f64,
    pub modes_sup: f64,
    pub q0_l2: f64,
    pub q0_grad: f64,
    pub total: f64,
}

/// `||u01||_inf + nu^{1/4} ||dy u01|| + sum_n ||u_n||_inf + nu^{-1/4}
/// ||Q0 u|| + nu^{1/4} ||grad Q0 u||`.
pub fn x_norm(s: &SpectralState, g: &Grid) -> XNorm {
    let ph = Phys::new(g, s.nu);
    let q = 2.0 * PI * s.theta;
    let mut modes_sup = 0.0;
    let (mut l2sq, mut gradsq) = (0.0, 0.0);
    for m in &s.modes {
        let nt = m.n as f64 / s.theta;
        modes_sup += sup_pair(&m.u1, &m.u2);
        let u = ph.pair(&m.u1, &m.u2);
        let du = ph.pair(&ph.diff(&m.u1), &ph.diff(&m.u2));
        l2sq += u * u;
        gradsq += du * du + nt * nt * u * u;
    }
    let nq = s.nu.powf(0.25);
    let mut x = XNorm {
        zero_sup: g.sup(&s.zero.u01).max(s.zero.limit.abs()),
        zero_grad: nq * ph.l2(&s.zero.du01),
        modes_sup,
        q0_l2: (q * l2sq).sqrt() / nq,
        q0_grad: nq * (q * gradsq).sqrt(),
        total: 0.0,
    };
    x.total = x.zero_sup + x.zero_grad + x.modes_sup + x.q0_l2 + x.q0_grad;
    x
}

struct Velocity {
    u1: Field,
    u2: Field,
    d1: Field,
    d2: Field,
}

fn velocities(s: &SpectralState, g: &Grid) -> Vec<(i64, Velocity)> {
    let ph = Phys::new(g, s.nu);
    let mut out = vec![(
        0,
        Velocity { u1: s.zero.u01.clone(), u2: g.zeros(), d1: s.zero.du01.clone(), d2: g.zeros() },
    )];
    for m in &s.modes {
        out.push((m.n, Velocity { d1: ph.diff(&m.u1), d2: ph.diff(&m.u2), u1: m.u1.clone(), u2: m.u2.clone() }));
    }
    out
}

/// Advection `(v . grad v)_n` from the stored modes, plus the zero-mode flux
/// `F01 = sum_k v_{k,1} v_{-k,2}` and the relative size of the dropped
/// modes `n_max < |n| <= 2 n_max`.
struct Advection {
    modes: Vec<(i64, Field, Field)>,
    flux: Field,
    tail: f64,
}

fn advection(s: &SpectralState, g: &Grid) -> Advection {
    let vel = velocities(s, g);
    let ph = Phys::new(g, s.nu);
    let m = s.n_max as i64;
    let term = |n: i64| -> (Field, Field) {
        let (mut a1, mut a2) = (g.zeros(), g.zeros());
        for (k, vk) in &vel {
            let Some((_, vm)) = vel.iter().find(|(j, _)| *j == n - k) else { continue };
            let ik = C64::new(0.0, (n - k) as f64 / s.theta);
            for i in 0..g.len() {
                a1[i] += vk.u1[i] * ik * vm.u1[i] + vk.u2[i] * vm.d1[i];
                a2[i] += vk.u1[i] * ik * vm.u2[i] + vk.u2[i] * vm.d2[i];
            }
        }
        (a1, a2)
    };
    let mut flux = g.zeros();
    for (k, vk) in vel.iter().filter(|(k, _)| *k != 0) {
        if let Some((_, vm)) = vel.iter().find(|(j, _)| *j == -k) {
            flux += vk.u1.component_mul(&vm.u2);
        }
    }
    let modes: Vec<(i64, Field, Field)> = (-m..=m).filter(|&n| n != 0).map(|n| {
        let (a1, a2) = term(n);
        (n, a1, a2)
    }).collect();
    let kept: f64 = modes.iter().map(|(_, a, b)| ph.pair(a, b).powi(2)).sum();
    let dropped: f64 = (m + 1..=2 * m)
        .flat_map(|n| [n, -n])
        .map(|n| {
            let (a, b) = term(n);
            ph.pair(&a, &b).powi(2)
        })
        .sum();
    let tail = if kept + dropped > 0.0 { (dropped / (kept + dropped)).sqrt() } else { 0.0 };
    Advection { modes, flux, tail }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StepInfo {
    /// Relative size of the dropped convolution modes.
    pub truncation_tail: f64,
    pub truncation_warning: bool,
    /// Largest mode-solve residual.
    pub residual: f64,
}

/// Gap verdicts for every large-period mode of the flow.
pub fn flow_verdicts(p: &ShearProfile, flow: &FlowParams, g: &Grid) -> Result<Vec<(i64, GapVerdict)>> {
    let mut out = Vec::new();
    for n in flow.modes().into_iter().filter(|&n| n > 0) {
        let mp = flow.mode(n)?;
        if mp.regime == ModeRegime::LargeTheta {
            let v = mode_verdict(p, &mp, g)?;
            out.push((n, v));
            out.push((-n, v));
        }
    }
    Ok(out)
}

/// One application of `Psi`: the linear solve with source `-v . grad v + f`.
pub fn picard_step(
    p: &ShearProfile,
    s: &SpectralState,
    f: &Forcing,
    flow: &FlowParams,
    g: &Grid,
) -> Result<(SpectralState, StepInfo)> {
    let verdicts = flow_verdicts(p, flow, g)?;
    picard_step_with(p, s, f, flow, g, &verdicts)
}

fn picard_step_with(
    p: &ShearProfile,
    s: &SpectralState,
    f: &Forcing,
    flow: &FlowParams,
    g: &Grid,
    verdicts: &[(i64, GapVerdict)],
) -> Result<(SpectralState, StepInfo)> {
    let adv = advection(s, g);
    let sources: Vec<(i64, Field, Field)> = adv
        .modes
        .iter()
        .map(|(n, a1, a2)| {
            let (mut s1, mut s2) = (-a1, -a2);
            if let Some(fm) = f.mode(*n) {
                s1 += &fm.f1;
                s2 += &fm.f2;
            }
            (*n, s1, s2)
        })
        .collect();
    // A negative mode whose source is the conjugate of its partner's is the
    // conjugate of the partner's solution.
    let mirrored = |n: i64| -> bool {
        if n > 0 {
            return false;
        }
        let a = sources.iter().find(|x| x.0 == n);
        let b = sources.iter().find(|x| x.0 == -n);
        match (a, b) {
            (Some(a), Some(b)) => {
                let d = g.sup(&(&a.1 - conj(&b.1))).max(g.sup(&(&a.2 - conj(&b.2))));
                let scale = g.sup(&b.1).max(g.sup(&b.2));
                d <= 1e-14 * scale
            }
            _ => false,
        }
    };
    let to_solve: Vec<&(i64, Field, Field)> = sources.iter().filter(|x| !mirrored(x.0)).collect();
    let solved = par::try_map(&to_solve, |(n, s1, s2)| {
        let mp = flow.mode(*n)?;
        let gap = verdicts.iter().find(|v| v.0 == *n).map(|v| v.1);
        solve_mode(p, &mp, s1, s2, g, gap)
    })?;
    let mut modes: Vec<ModeField> = Vec::with_capacity(sources.len());
    let mut residual = 0.0f64;
    for sol in &solved {
        residual = residual.max(sol.residual);
        modes.push(sol.field.clone());
    }
    for (n, _, _) in sources.iter().filter(|x| mirrored(x.0)) {
        let partner = solved.iter().find(|x| x.field.n == -n).map(|x| x.field.conjugate());
        modes.extend(partner);
    }
    modes.sort_by_key(|m| m.n);
    let out = SpectralState {
        nu: flow.nu,
        theta: flow.theta,
        n_max: flow.n_max,
        grid: GridMeta::of(g),
        zero: solve_zero_mode(flow.nu, &adv.flux, g)?,
        modes,
    };
    Ok((
        out,
        StepInfo { truncation_tail: adv.tail, truncation_warning: adv.tail > TRUNCATION_TOL, residual },
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct NonlinearSolution {
    pub state: SpectralState,
    /// `||u^{k+1} - u^k||_X` per iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
    /// Largest relative size of the dropped convolution modes.
    pub truncation_tail: f64,
    pub truncation_warning: bool,
    pub x_norm: XNorm,
}

/// Picard iteration of [`picard_step`] from zero until the increment in the
/// `X_nu` norm is at most `tol` times the norm of the iterate.
pub fn solve_nonlinear(
    p: &ShearProfile,
    flow: &FlowParams,
    f: &Forcing,
    g: &Grid,
    tol: f64,
    max_iter: usize,
) -> Result<NonlinearSolution> {
    let verdicts = flow_verdicts(p, flow, g)?;
    if let Some((n, _)) = verdicts.iter().find(|v| v.1 != GapVerdict::Open) {
        return Err(Error::SpectralConditionUnverified { theta: flow.mode(*n)?.theta });
    }
    let mut state = SpectralState::zeros(flow, g);
    let mut history = Vec::new();
    let mut tail = 0.0f64;
    for it in 1..=max_iter {
        let (next, info) = picard_step_with(p, &state, f, flow, g, &verdicts)?;
        tail = tail.max(info.truncation_tail);
        let inc = x_norm(&next.minus(&state), g).total;
        history.push(inc);
        state = next;
        if inc <= tol * x_norm(&state, g).total {
            let xn = x_norm(&state, g);
            return Ok(NonlinearSolution { state, history, iterations: it, truncation_tail: tail, truncation_warning: tail > TRUNCATION_TOL, x_norm: xn });
        }
        if !inc.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: history.len(),
        last: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// Per-mode diagnostics of a state against its own source `-v . grad v + f`;
/// at a fixed point these carry the energy identities of the full problem.
pub fn mode_checks(p: &ShearProfile, s: &SpectralState, f: &Forcing, g: &Grid) -> Result<Vec<ModeSolve>> {
    let adv = advection(s, g);
    s.modes
        .iter()
        .map(|m| {
            let mp = ModeParams::new(s.nu, s.theta, m.n)?;
            let (_, a1, a2) = adv.modes.iter().find(|x| x.0 == m.n).expect("mode present");
            let (mut s1, mut s2) = (-a1, -a2);
            if let Some(fm) = f.mode(m.n) {
                s1 += &fm.f1;
                s2 += &fm.f2;
            }
            Ok(diagnose(p, &mp, m.clone(), &s1, &s2, 0.0, g))
        })
        .collect()
}

/// Measured quadratic contraction constant
/// `K = ||Psi[v] - Psi[v']||_X / ((||v||_X + ||v'||_X) ||v - v'||_X)`.
#[derive(Debug, Clone, Serialize)]
pub struct Contraction {
    pub samples: Vec<f64>,
    pub k: f64,
    /// Spread of the sampled constants.
    pub spread: f64,
}

/// Random divergence-free no-slip state: modes from stream functions
/// `c_n Y^2 e^{-r Y}`, zero mode `a (1 - e^{-Y})`.
pub fn random_state(flow: &FlowParams, g: &Grid, rng: &mut impl Rng) -> SpectralState {
    let mut s = SpectralState::zeros(flow, g);
    let sq = flow.nu.sqrt();
    let a: f64 = rng.gen_range(-1.0..1.0);
    s.zero.u01 = g.sample_real(|y| a * (1.0 - (-y).exp()));
    s.zero.du01 = g.sample_real(|y| a * (-y).exp() / sq);
    s.zero.limit = a;
    for n in 1..=flow.n_max as i64 {
        let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (n * n) as f64;
        let r: f64 = rng.gen_range(0.5..2.0);
        let phi = g.sample(|y| c * y * y * (-r * y).exp());
        let alpha = n as f64 / flow.theta * sq;
        let m = ModeField { n, u1: g.diff(&phi), u2: &phi * C64::new(0.0, -alpha), phi: &phi * C64::new(sq, 0.0) };
        let mc = m.conjugate();
        for slot in s.modes.iter_mut() {
            if slot.n == n {
                *slot = m.clone();
            } else if slot.n == -n {
                *slot = mc.clone();
            }
        }
    }
    s
}

pub fn measure_contraction(p: &ShearProfile, flow: &FlowParams, g: &Grid, samples: usize, seed: u64) -> Result<Contraction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(SpectralState, SpectralState)> =
        (0..samples).map(|_| (random_state(flow, g, &mut rng), random_state(flow, g, &mut rng))).collect();
    let verdicts = flow_verdicts(p, flow, g)?;
    let zero = Forcing::zero();
    let ks = par::try_map(&pairs, |(v, w)| {
        let (pv, _) = picard_step_with(p, v, &zero, flow, g, &verdicts)?;
        let (pw, _) = picard_step_with(p, w, &zero, flow, g, &verdicts)?;
        let num = x_norm(&pv.minus(&pw), g).total;
        let den = (x_norm(v, g).total + x_norm(w, g).total) * x_norm(&v.minus(w), g).total;
        Ok(num / den)
    })?;
    let k = ks.iter().copied().fold(0.0, f64::max);
    Ok(Contraction { spread: crate::report::spread(&ks), samples: ks, k })
}

/// Forcing amplitude at `fraction` of the contraction margin: with
/// `x0 = ||Psi_f[0]||_X` for unit amplitude, the ball of radius `1/(2K)` is
/// invariant for amplitudes up to `1/(4 K x0)`.
pub fn margin_amplitude(p: &ShearProfile, flow: &FlowParams, unit: &Forcing, k: f64, fraction: f64, g: &Grid) -> Result<f64> {
    let (lin, _) = picard_step(p, &SpectralState::zeros(flow, g), unit, flow, g)?;
    let x0 = x_norm(&lin, g).total;
    if !(x0 > 0.0 && k > 0.0) {
        return Err(Error::InvalidParameter(format!("degenerate margin: K = {k}, x0 = {x0}")));
    }
    Ok(fraction / (4.0 * k * x0))
}

/// Damped Newton solve of the truncated system on the monolithic non-slip
/// collocation operators, for real forcing.
#[derive(Debug, Clone, Serialize)]
pub struct NewtonSolution {
    pub state: SpectralState,
    pub iterations: usize,
    /// Residual norm per iteration.
    pub history: Vec<f64>,
}

struct NewtonSystem<'a> {
    g: &'a Grid,
    flow: FlowParams,
    forcing: &'a Forcing,
    alphas: Vec<f64>,
    mats: Vec<DMatrix<C64>>,
    lus: Vec<nalgebra::linalg::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl<'a> NewtonSystem<'a> {
    fn state(&self, x: &[Field]) -> Result<SpectralState> {
        let n = self.g.len();
        let sq = C64::new(self.flow.nu.sqrt(), 0.0);
        let mut s = SpectralState::zeros(&self.flow, self.g);
        for (k, xk) in x.iter().enumerate() {
            let phi = xk.rows(0, n).into_owned();
            let m = ModeField {
                n: k as i64 + 1,
                u1: self.g.diff(&phi),
                u2: &phi * C64::new(0.0, -self.alphas[k]),
                phi: &phi * sq,
            };
            let mc = m.conjugate();
            for slot in s.modes.iter_mut() {
                if slot.n == m.n {
                    *slot = m.clone();
                } else if slot.n == -m.n {
                    *slot = mc.clone();
                }
            }
        }
        let adv = advection(&s, self.g);
        s.zero = solve_zero_mode(self.flow.nu, &adv.flux, self.g)?;
        Ok(s)
    }

    fn residual(&self, x: &[Field]) -> Result<Vec<Field>> {
        let n = self.g.len();
        let s = self.state(x)?;
        let adv = advection(&s, self.g);
        let sq = C64::new(self.flow.nu.sqrt(), 0.0);
        let mut out = Vec::with_capacity(x.len());
        for (k, xk) in x.iter().enumerate() {
            let mode = k as i64 + 1;
            let (_, a1, a2) = adv.modes.iter().find(|m| m.0 == mode).expect("mode present");
            let (mut s1, mut s2) = (-a1, -a2);
            if let Some(fm) = self.forcing.mode(mode) {
                s1 += &fm.f1;
                s2 += &fm.f2;
            }
            let rhs = os::full_rhs(self.g, &(s1 * sq), &(s2 * sq), self.alphas[k]);
            let mut r = &self.mats[k] * xk;
            for i in 1..n {
                r[i] -= rhs[i];
            }
            out.push(r);
        }
        Ok(out)
    }

    fn precondition(&self, v: &[Field]) -> Vec<Field> {
        v.iter().zip(&self.lus).map(|(vk, lu)| lu.solve(vk).unwrap_or_else(|| vk.clone())).collect()
    }

    /// Directional derivative by the five-point stencil, exact for the cubic
    /// residual up to roundoff.
    fn jacobian(&self, x: &[Field], v: &[Field]) -> Result<Vec<Field>> {
        let nv = norm(v);
        if nv == 0.0 {
            return Ok(v.to_vec());
        }
        let t = 1e-2 * (1.0 + norm(x)) / nv;
        let at = |c: f64| -> Result<Vec<Field>> {
            let y: Vec<Field> = x.iter().zip(v).map(|(a, b)| a + b * C64::new(c * t, 0.0)).collect();
            self.residual(&y)
        };
        let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
        let k = C64::new(12.0 * t, 0.0);
        Ok((0..x.len()).map(|i| ((&p1[i] - &m1[i]) * C64::new(8.0, 0.0) - (&p2[i] - &m2[i])) / k).collect())
    }
}

fn dot(a: &[Field], b: &[Field]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p * q.conj()).re).sum::<f64>()).sum()
}

fn norm(a: &[Field]) -> f64 {
    dot(a, a).max(0.0).sqrt()
}

fn axpy(y: &mut [Field], a: f64, x: &[Field]) {
    for (yk, xk) in y.iter_mut().zip(x) {
        *yk += xk * C64::new(a, 0.0);
    }
}

/// Restarted GMRES over the reals for `op z = b`, with `z` starting at zero.
fn gmres<F: Fn(&[Field]) -> Result<Vec<Field>>>(op: F, b: &[Field], tol: f64, restart: usize, max_outer: usize) -> Result<Vec<Field>> {
    let mut z: Vec<Field> = b.iter().map(|v| Field::zeros(v.len())).collect();
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(z);
    }
    for _ in 0..max_outer {
        let az = op(&z)?;
        let r: Vec<Field> = b.iter().zip(&az).map(|(a, c)| a - c).collect();
        let beta = norm(&r);
        if beta <= tol * bn {
            break;
        }
        let mut basis: Vec<Vec<Field>> = vec![r.iter().map(|v| v / C64::new(beta, 0.0)).collect()];
        let mut h = DMatrix::<f64>::zeros(restart + 1, restart);
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut e = vec![0.0; restart + 1];
        e[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            let mut w = op(&basis[j])?;
            for i in 0..=j {
                let hij = dot(&w, &basis[i]);
                h[(i, j)] = hij;
                axpy(&mut w, -hij, &basis[i]);
            }
            let wn = norm(&w);
            h[(j + 1, j)] = wn;
            for i in 0..j {
                let t = cs[i] * h[(i, j)] + sn[i] * h[(i + 1, j)];
                h[(i + 1, j)] = -sn[i] * h[(i, j)] + cs[i] * h[(i + 1, j)];
                h[(i, j)] = t;
            }
            let d = h[(j, j)].hypot(h[(j + 1, j)]);
            cs[j] = h[(j, j)] / d;
            sn[j] = h[(j + 1, j)] / d;
            h[(j, j)] = d;
            h[(j + 1, j)] = 0.0;
            e[j + 1] = -sn[j] * e[j];
            e[j] *= cs[j];
            used = j + 1;
            if e[j + 1].abs() <= tol * bn || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / C64::new(wn, 0.0)).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut acc = e[i];
            for k in i + 1..used {
                acc -= h[(i, k)] * y[k];
            }
            y[i] = acc / h[(i, i)];
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(&mut z, *yi, &basis[i]);
        }
    }
    Ok(z)
}

/// Damped Newton–GMRES on the truncated coupled system, preconditioned by
/// the per-mode linear operators.
pub fn newton_oracle(p: &ShearProfile, flow: &FlowParams, f: &Forcing, g: &Grid, max_iter: usize) -> Result<NewtonSolution> {
    let ps = p.on_grid(g);
    let n = g.len();
    let mut alphas = Vec::new();
    let mut mats = Vec::new();
    for k in 1..=flow.n_max as i64 {
        let mp = flow.mode(k)?;
        alphas.push(mp.alpha);
        mats.push(os::os_system(g, &ps, mp.alpha, mp.eps, Wall::NonSlip));
    }
    let lus = mats.iter().map(|m| m.clone().lu()).collect();
    let sys = NewtonSystem { g, flow: *flow, forcing: f, alphas, mats, lus };
    let mut x: Vec<Field> = (0..flow.n_max).map(|_| Field::zeros(2 * n)).collect();
    let mut r = sys.residual(&x)?;
    let mut history = vec![norm(&r)];
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let minus_r: Vec<Field> = r.iter().map(|v| -v).collect();
        let z = gmres(|v| sys.jacobian(&x, &sys.precondition(v)), &minus_r, 1e-12, 40, 10)?;
        let dx = sys.precondition(&z);
        let r0 = norm(&r);
        let mut lambda = 1.0;
        let (mut xn, mut rn);
        loop {
            xn = x.clone();
            axpy(&mut xn, lambda, &dx);
            rn = sys.residual(&xn)?;
            if norm(&rn) <= (1.0 - 1e-4 * lambda) * r0 || lambda < 1.0 / 64.0 {
                break;
            }
            lambda *= 0.5;
        }
        let step = lambda * norm(&dx);
        x = xn;
        r = rn;
        history.push(norm(&r));
        if step <= 1e-12 * norm(&x).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(NewtonSolution { state: sys.state(&x)?, iterations, history })
}

/// `x_norm(u) / (nu^{-1/4} |log nu|^{1/2} ||f||)`.
pub fn theorem_constant(x: f64, nu: f64, f_l2: f64) -> f64 {
    x / (nu.powf(-0.25) * nu.ln().abs().sqrt() * f_l2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_params_and_regimes() {
        let mp = ModeParams::new(1e-4, 0.05, 1).unwrap();
        assert!((mp.n_tilde - 20.0).abs() < 1e-12);
        assert!((mp.alpha - 0.2).abs() < 1e-12);
        assert!((mp.eps - 0.05).abs() < 1e-12);
        assert_eq!(mp.regime, ModeRegime::LowFreq);
        let nt = high_frequency_threshold(1e-4, DELTA0);
        let n_hf = (nt * 0.05).ceil() as i64;
        assert_eq!(ModeParams::new(1e-4, 0.05, n_hf).unwrap().regime, ModeRegime::HighFreq);
        assert_eq!(ModeParams::new(1e-4, 1.0, 1).unwrap().regime, ModeRegime::LargeTheta);
        assert!(ModeParams::new(1e-4, 0.05, 0).is_err());
    }

    #[test]
    fn zero_state_has_zero_norm() {
        let g = Grid::rational(32, 2.0).unwrap();
        let flow = FlowParams::new(1e-3, 0.05, 2).unwrap();
        assert_eq!(x_norm(&SpectralState::zeros(&flow, &g), &g).total, 0.0);
    }
}
