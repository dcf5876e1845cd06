//! Background shear profiles `U(Y)` with their first two derivatives.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Tanh,
    Exp,
    Table,
}

/// Profile description as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    #[serde(default)]
    pub params: Vec<f64>,
    /// Two-column CSV `(Y, U)` for table profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self { kind: ProfileKind::Tanh, params: vec![1.0], table: None }
    }
}

impl ProfileSpec {
    pub fn build(&self) -> Result<ShearProfile> {
        match self.kind {
            ProfileKind::Table => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Config("table profile needs a `table` path".into()))?;
                let decay = self.params.first().copied().unwrap_or(1.0);
                ShearProfile::from_csv(path, decay)
            }
            kind => make_profile(kind, &self.params),
        }
    }
}

#[derive(Debug, Clone)]
struct Pchip {
    y: Vec<f64>,
    u: Vec<f64>,
    slope: Vec<f64>,
}

impl Pchip {
    /// Fritsch–Carlson monotone slopes.
    fn new(y: Vec<f64>, u: Vec<f64>) -> Self {
        let n = y.len();
        let h: Vec<f64> = (0..n - 1).map(|i| y[i + 1] - y[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (u[i + 1] - u[i]) / h[i]).collect();
        let mut slope = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                slope[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slope[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        slope[0] = end_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], *delta.get(1).unwrap_or(&delta[0]));
        slope[n - 1] = end_slope(
            h[n - 2],
            if n > 2 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n > 2 { delta[n - 3] } else { delta[n - 2] },
        );
        Self { y, u, slope }
    }

    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let n = self.y.len();
        if t >= self.y[n - 1] {
            return (self.u[n - 1], 0.0, 0.0);
        }
        let i = match self.y.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.y[i + 1] - self.y[i];
        let s = (t - self.y[i]) / h;
        let (y0, y1, m0, m1) = (self.u[i], self.u[i + 1], self.slope[i] * h, self.slope[i + 1] * h);
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -6.0 * s * s + 6.0 * s;
        let d11 = 3.0 * s * s - 2.0 * s;
        let e00 = 12.0 * s - 6.0;
        let e10 = 6.0 * s - 4.0;
        let e01 = -12.0 * s + 6.0;
        let e11 = 6.0 * s - 2.0;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let dv = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
        let ddv = (e00 * y0 + e10 * m0 + e01 * y1 + e11 * m1) / (h * h);
        (v, dv, ddv)
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Tanh(f64),
    Exp(f64),
    Table(Pchip),
}

/// A shear profile. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ShearProfile {
    shape: Shape,
    decay_rate: f64,
    uprime0: f64,
}

/// Builds a closed-form profile: `tanh(sY)` or `1 - exp(-sY)`.
pub fn make_profile(kind: ProfileKind, params: &[f64]) -> Result<ShearProfile> {
    let s = params.first().copied().unwrap_or(1.0);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("steepness must be positive, got {s}")));
    }
    let shape = match kind {
        ProfileKind::Tanh => Shape::Tanh(s),
        ProfileKind::Exp => Shape::Exp(s),
        ProfileKind::Table => {
            return Err(Error::InvalidParameter("table profiles are built from data".into()))
        }
    };
    let decay_rate = match kind {
        ProfileKind::Tanh => 2.0 * s,
        _ => s,
    };
    Ok(ShearProfile { shape, decay_rate, uprime0: s })
}

impl ShearProfile {
    pub fn tanh(s: f64) -> Result<Self> {
        make_profile(ProfileKind::Tanh, &[s])
    }

    pub fn exp(s: f64) -> Result<Self> {
        make_profile(ProfileKind::Exp, &[s])
    }

    /// Monotone cubic interpolant of `(Y, U)` samples; `U(0)=0`, `U'(0)>0` and
    /// `U -> 1` are checked.
    pub fn from_table(y: Vec<f64>, u: Vec<f64>, decay_rate: f64) -> Result<Self> {
        let p = Self::from_table_unchecked(y, u, decay_rate)?;
        if p.uprime0 <= 0.0 {
            return Err(Error::InvalidParameter(format!("U'(0) = {} is not positive", p.uprime0)));
        }
        let last = p.value(f64::INFINITY);
        if (last - 1.0).abs() > 1e-3 {
            return Err(Error::InvalidParameter(format!("U tends to {last}, not 1")));
        }
        Ok(p)
    }

    /// Table profile without the structural checks; used to probe
    /// [`verify_structure`] on profiles that violate them.
    pub fn from_table_unchecked(y: Vec<f64>, u: Vec<f64>, decay_rate: f64) -> Result<Self> {
        if y.len() != u.len() || y.len() < 3 {
            return Err(Error::InvalidParameter("table needs at least 3 (Y, U) rows".into()));
        }
        if y[0] != 0.0 || u[0] != 0.0 {
            return Err(Error::InvalidParameter("table must start at (0, 0)".into()));
        }
        if y.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("table Y must increase strictly".into()));
        }
        if !(decay_rate > 0.0) {
            return Err(Error::InvalidParameter(format!("decay rate {decay_rate}")));
        }
        let pchip = Pchip::new(y, u);
        let uprime0 = pchip.eval(0.0).1;
        Ok(Self { shape: Shape::Table(pchip), decay_rate, uprime0 })
    }

    pub fn from_csv<P: AsRef<Path>>(path: P, decay_rate: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let (mut ys, mut us) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Config("table rows need two columns".into()))?
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number in table: {e}")))
            };
            match parse(0) {
                Ok(y) => {
                    ys.push(y);
                    us.push(parse(1)?);
                }
                // Header line.
                Err(_) if ys.is_empty() => continue,
                Err(e) => return Err(e),
            }
        }
        Self::from_table(ys, us, decay_rate)
    }

    pub fn kind(&self) -> ProfileKind {
        match self.shape {
            Shape::Tanh(_) => ProfileKind::Tanh,
            Shape::Exp(_) => ProfileKind::Exp,
            Shape::Table(_) => ProfileKind::Table,
        }
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn uprime0(&self) -> f64 {
        self.uprime0
    }

    /// `(U, U', U'')` at `y >= 0`.
    pub fn evaluate(&self, y: f64) -> (f64, f64, f64) {
        match &self.shape {
            Shape::Tanh(s) => {
                if !y.is_finite() {
                    return (1.0, 0.0, 0.0);
                }
                let t = (s * y).tanh();
                let sech2 = 1.0 - t * t;
                (t, s * sech2, -2.0 * s * s * t * sech2)
            }
            Shape::Exp(s) => {
                if !y.is_finite() {
                    return (1.0, 0.0, 0.0);
                }
                let e = (-s * y).exp();
                (-(-s * y).exp_m1(), s * e, -s * s * e)
            }
            Shape::Table(p) => p.eval(y),
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        self.evaluate(y).0
    }

    /// `U''(0) = 0`, so that `U''/U` is square integrable and the decaying
    /// Rayleigh mode lies in `H^2`.
    pub fn wall_curvature_vanishes(&self) -> bool {
        self.evaluate(0.0).2.abs() <= 1e-12 * self.uprime0.max(1.0)
    }

    /// `U`, `U'`, `U''` at the nodes of `g`.
    pub fn on_grid(&self, g: &Grid) -> ProfileSample {
        let n = g.len();
        let (mut u, mut du, mut ddu) = (DVector::zeros(n), DVector::zeros(n), DVector::zeros(n));
        for (i, &y) in g.nodes().iter().enumerate() {
            let (a, b, c) = self.evaluate(y);
            u[i] = a;
            du[i] = b;
            ddu[i] = c;
        }
        ProfileSample { u, du, ddu }
    }
}

/// Profile values at grid nodes.
#[derive(Debug, Clone)]
pub struct ProfileSample {
    pub u: DVector<f64>,
    pub du: DVector<f64>,
    pub ddu: DVector<f64>,
}

/// Outcome of [`verify_structure`].
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    /// `min U(Y)/min(1, Y)` over the positive sample points.
    pub lower_constant: f64,
    /// `max (1+Y)^3 (|U'| + |U''|)`.
    pub decay_bound: f64,
    /// `max (1+Y)^3 |U''|`.
    pub curvature_bound: f64,
    pub u_at_ymax: f64,
    pub uprime0: f64,
    pub y_max: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Evenly spaced sample of `[0, y_max]`.
pub fn dense_sample(y_max: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| y_max * i as f64 / (points - 1) as f64).collect()
}

/// Checks the structural assumptions on `U` over a sample of `[0, Y_max]`.
pub fn verify_structure(p: &ShearProfile, sample: &[f64], decay_limit: f64) -> StructureReport {
    let mut failures = Vec::new();
    let y_max = sample.iter().copied().fold(0.0, f64::max);
    if y_max < 30.0 {
        failures.push(format!("sample reaches only Y = {y_max}, need 30"));
    }
    let (u0, up0, _) = p.evaluate(0.0);
    if u0 != 0.0 {
        failures.push(format!("U(0) = {u0}"));
    }
    if up0 <= 0.0 {
        failures.push(format!("U'(0) = {up0}"));
    }
    let mut lower = f64::INFINITY;
    let mut decay: f64 = 0.0;
    let mut curv: f64 = 0.0;
    let mut nonpositive = 0usize;
    for &y in sample {
        let (u, du, ddu) = p.evaluate(y);
        let w = (1.0 + y).powi(3);
        decay = decay.max(w * (du.abs() + ddu.abs()));
        curv = curv.max(w * ddu.abs());
        if y > 0.0 {
            if u <= 0.0 {
                nonpositive += 1;
            }
            lower = lower.min(u / y.min(1.0));
        }
    }
    if nonpositive > 0 {
        failures.push(format!("U is not positive at {nonpositive} sample points"));
    }
    let u_end = p.value(y_max);
    if (u_end - 1.0).abs() > 1e-3 {
        failures.push(format!("U(Y_max) = {u_end}, expected limit 1"));
    }
    if decay > decay_limit {
        failures.push(format!("decay bound {decay} exceeds {decay_limit}"));
    }
    StructureReport {
        lower_constant: lower,
        decay_bound: decay,
        curvature_bound: curv,
        u_at_ymax: u_end,
        uprime0: up0,
        y_max,
        pass: failures.is_empty(),
        failures,
    }
}
