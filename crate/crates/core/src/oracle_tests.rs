//! Independent oracles for the building blocks and the mode solvers.

use crate::airy::{a0, a0_ratios, airy_ai};
use crate::grid::{Field, Grid};
use crate::helmholtz::{boundary_derivative, solve_dirichlet, solve_dirichlet_banded};
use crate::ns::{
    physical_nodes, picard_step, random_state, solve_mode, solve_nonlinear, solve_zero_mode, x_norm, FlowParams,
    Forcing, ForcingShape, ModeField, ModeParams, SpectralState,
};
use crate::os::{spectral_gap, GapVerdict, OsParams};
use crate::profile::{dense_sample, verify_structure, ShearProfile};
use crate::rayleigh::{admissible_data, operator_l, operator_l_collocation, solve_rayleigh, solve_rayleigh_direct};
use crate::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

fn rel(a: &Field, b: &Field) -> f64 {
    (a - b).camax() / b.camax()
}

/// `Ai` and `Ai'` from the two Maclaurin series with constants built from the
/// gamma function.
fn maclaurin_ai(z: C64) -> (C64, C64) {
    let c1 = 1.0 / (3f64.powf(2.0 / 3.0) * gamma(2.0 / 3.0));
    let c2 = 1.0 / (3f64.powf(1.0 / 3.0) * gamma(1.0 / 3.0));
    let z3 = z * z * z;
    let (mut f, mut gs) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    let (mut df, mut dg) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    let (mut tf, mut tg) = (C64::new(1.0, 0.0), z);
    for k in 0..200 {
        let k3 = 3.0 * k as f64;
        f += tf;
        gs += tg;
        if k > 0 {
            df += tf * k3 / z;
        }
        dg += tg * (k3 + 1.0) / z;
        tf *= z3 / ((k3 + 2.0) * (k3 + 3.0));
        tg *= z3 / ((k3 + 3.0) * (k3 + 4.0));
    }
    (f * c1 - gs * c2, df * c1 - dg * c2)
}

#[test]
fn profile_closed_forms() {
    let t = ShearProfile::tanh(1.0).unwrap();
    let e = ShearProfile::exp(2.0).unwrap();
    for &y in &[0.0, 0.3, 1.0, 4.5, 20.0] {
        let (u, du, ddu) = t.evaluate(y);
        let s2 = 1.0 / y.cosh().powi(2);
        assert!((u - y.tanh()).abs() < 1e-15);
        assert!((du - s2).abs() < 1e-15);
        assert!((ddu + 2.0 * s2 * y.tanh()).abs() < 1e-15);
        let (u, du, ddu) = e.evaluate(y);
        let x = (-2.0 * y).exp();
        assert!((u - (1.0 - x)).abs() < 1e-15);
        assert!((du - 2.0 * x).abs() < 1e-15);
        assert!((ddu + 4.0 * x).abs() < 1e-15);
    }
    assert_eq!(t.uprime0(), 1.0);
    assert_eq!(e.uprime0(), 2.0);
    assert!(t.wall_curvature_vanishes());
    assert!(!e.wall_curvature_vanishes());
}

#[test]
fn profile_derivatives_match_differences() {
    let p = ShearProfile::tanh(2.0).unwrap();
    let h = 1e-5;
    for i in 0..200 {
        let y = 0.01 + 0.05 * i as f64;
        let fd = (p.value(y + h) - p.value(y - h)) / (2.0 * h);
        assert!((fd - p.evaluate(y).1).abs() < 1e-8, "U' at {y}");
        let fd2 = (p.evaluate(y + h).1 - p.evaluate(y - h).1) / (2.0 * h);
        assert!((fd2 - p.evaluate(y).2).abs() < 1e-8, "U'' at {y}");
    }
}

#[test]
fn structure_checks() {
    let y = dense_sample(40.0, 4001);
    let e = verify_structure(&ShearProfile::exp(1.0).unwrap(), &y, 100.0);
    assert!(e.pass, "{:?}", e.failures);
    assert!(e.lower_constant >= 0.63);
    assert!(verify_structure(&ShearProfile::tanh(1.0).unwrap(), &y, 100.0).pass);
    let u: Vec<f64> = y.iter().map(|y| y * (-y).exp()).collect();
    let bad = ShearProfile::from_table_unchecked(y.clone(), u, 1.0).unwrap();
    assert!(!verify_structure(&bad, &y, 100.0).pass);
}

#[test]
fn quadrature_and_weighted_norms() {
    let g = Grid::rational(128, 2.0).unwrap();
    assert_eq!(g.nodes()[0], 0.0);
    assert!((g.integrate_real(|y| (-2.0 * y).exp()) - 0.5).abs() < 1e-10);
    assert!((g.integrate_real(|y| (1.0 + y).powi(2) * (-2.0 * y).exp()) - 1.25).abs() < 1e-9);
    let u = g.sample_real(|y| (-y).exp());
    assert!((g.l2(&u) - 0.5f64.sqrt()).abs() < 1e-10);
    assert!((g.weighted_norm(&u, 1) - 1.25f64.sqrt()).abs() < 1e-9);
}

#[test]
fn helmholtz_operator_on_exponentials() {
    let g = Grid::rational(128, 2.0).unwrap();
    let alpha = 0.7;
    for r in [1.0, 2.0] {
        let u = g.sample_real(|y| (-r * y).exp());
        let exact = g.sample_real(|y| (r * r - alpha * alpha) * (-r * y).exp());
        assert!(rel(&g.helm_apply(&u, alpha), &exact) < 1e-7);
    }
    let u = g.sample_real(|y| y * y * (-y).exp());
    let exact = g.sample_real(|y| (2.0 - 4.0 * y + y * y) * (-y).exp());
    assert!(rel(&g.helm_apply(&u, 0.0), &exact) < 1e-7);
}

#[test]
fn helmholtz_matches_numerov() {
    let g = Grid::rational(128, 4.0).unwrap();
    let alpha = 0.5;
    let w = g.sample_real(|y| (-y * y).exp());
    let phi = solve_dirichlet(&g, &w, alpha).unwrap();
    let banded = solve_dirichlet_banded(&g, |y| C64::new((-y * y).exp(), 0.0), alpha, 80.0, 2e-3).unwrap();
    for (i, &y) in g.nodes().iter().enumerate().filter(|(_, &y)| y <= 30.0) {
        assert!((phi[i] - banded[i]).norm() < 1e-7, "Y = {y}");
    }
    let d = g.diff(&phi)[0];
    assert!((boundary_derivative(&g, &w, alpha) - d).norm() < 1e-6);
}

#[test]
fn airy_against_series() {
    let ai1 = airy_ai(C64::new(1.0, 0.0)).unwrap().ai;
    assert!((ai1.re - 0.135_292_416_312_881_4).abs() < 1e-14);
    for z in [C64::new(1.0, 0.0), C64::new(-1.5, 0.3), C64::new(2.0, 0.5), C64::new(0.2, -3.0)] {
        let (ai, aip) = maclaurin_ai(z);
        let e = airy_ai(z).unwrap();
        assert!((e.ai - ai).norm() < 1e-12 * ai.norm().max(1e-3), "Ai({z})");
        assert!((e.ai_prime - aip).norm() < 1e-12 * aip.norm().max(1e-3), "Ai'({z})");
    }
}

#[test]
fn a0_ratios_match_differences() {
    assert!((a0(C64::new(0.0, 0.0)).unwrap() - 1.0 / 3.0).norm() < 1e-13);
    let h = 1e-4;
    for z in [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.05)] {
        let (r1, r2) = a0_ratios(z).unwrap();
        let (m, c, p) = (a0(z - h).unwrap(), a0(z).unwrap(), a0(z + h).unwrap());
        let d1 = (p - m) / (2.0 * h) / c;
        let d2 = (p - c * 2.0 + m) / (h * h) / c;
        assert!((r1 - d1).norm() < 1e-6 * r1.norm().max(1.0), "A0'/A0 at {z}");
        assert!((r2 - d2).norm() < 1e-5 * r2.norm().max(1.0), "A0''/A0 at {z}");
    }
}

#[test]
fn operator_l_routes_agree() {
    let p = ShearProfile::tanh(1.0).unwrap();
    let g = Grid::rational(128, 2.0).unwrap();
    // f'(0) = 0 keeps L[f] smooth at the wall.
    for f in [g.sample_real(|y| (1.0 + 2.0 * y) * (-2.0 * y).exp()), g.sample_real(|y| (1.0 + y) * (-y).exp())] {
        let a = operator_l(&p, &g, &f).unwrap();
        let b = operator_l_collocation(&p, &g, &f).unwrap();
        assert!(rel(&a, &b) < 1e-6);
    }
}

#[test]
fn rayleigh_routes_agree() {
    let p = ShearProfile::tanh(1.0).unwrap();
    let g = Grid::rational(128, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for alpha in [0.5, 1.0, 2.0] {
        let (f1, f2) = admissible_data(&g, alpha, &mut rng);
        let a = solve_rayleigh(&p, alpha, &f1, &f2, &g).unwrap();
        let b = solve_rayleigh_direct(&p, alpha, &f1, &f2, &g).unwrap();
        assert!(rel(&a.phi, &b) < 1e-6, "alpha = {alpha}");
    }
}

#[test]
fn spectral_gap_verdicts() {
    let p = ShearProfile::tanh(1.0).unwrap();
    let open = spectral_gap(&p, &OsParams::new(1.0, 1e-3).unwrap(), &[96, 128], 2.0).unwrap();
    assert_eq!(open.verdict, GapVerdict::Open);
    assert!(!open.evidence_only);
    let zero = spectral_gap(&p, &OsParams::new(0.0, 0.5).unwrap(), &[96, 128], 2.0).unwrap();
    assert_eq!(zero.verdict, GapVerdict::Open);
    assert!(!zero.evidence_only);
    assert!(spectral_gap(&p, &OsParams::new(1.0, 0.5).unwrap(), &[96, 128], 2.0).unwrap().evidence_only);
}

#[test]
fn zero_mode_closed_form() {
    let g = Grid::rational(128, 20.0).unwrap();
    let nu = 1e-2;
    let z = solve_zero_mode(nu, &g.zeros(), &g).unwrap();
    assert_eq!(g.sup(&z.u01), 0.0);
    assert_eq!(z.limit, 0.0);
    let y = physical_nodes(&g, nu);
    let f = Field::from_iterator(g.len(), y.iter().map(|y| C64::new((-y).exp(), 0.0)));
    let z = solve_zero_mode(nu, &f, &g).unwrap();
    assert!((z.limit - 1.0 / nu).abs() < 1e-8 / nu);
    let exact = Field::from_iterator(g.len(), y.iter().map(|y| C64::new((1.0 - (-y).exp()) / nu, 0.0)));
    assert!(rel(&z.u01, &exact) < 1e-8);
}

#[test]
fn x_norm_single_mode() {
    let g = Grid::rational(128, 20.0).unwrap();
    let nu = 1e-2;
    let flow = FlowParams::new(nu, 1.0, 1).unwrap();
    let mut s = SpectralState::zeros(&flow, &g);
    let y = physical_nodes(&g, nu);
    let u1 = Field::from_iterator(g.len(), y.iter().map(|y| C64::new((-y).exp(), 0.0)));
    s.modes = vec![ModeField { n: 1, u1, u2: g.zeros(), phi: g.zeros() }];
    let x = x_norm(&s, &g);
    let expected = 10f64.sqrt() * std::f64::consts::PI.sqrt();
    assert!((x.q0_l2 - expected).abs() < 1e-6 * expected);
    assert!((x.modes_sup - 1.0).abs() < 1e-12);
}

#[test]
fn picard_without_forcing_stays_at_zero() {
    let p = ShearProfile::tanh(1.0).unwrap();
    let g = Grid::rational(96, 8.0).unwrap();
    let flow = FlowParams::new(1e-3, 0.05, 1).unwrap();
    let sol = solve_nonlinear(&p, &flow, &Forcing::zero(), &g, 1e-10, 5).unwrap();
    assert_eq!(sol.iterations, 1);
    assert_eq!(sol.x_norm.total, 0.0);
}

#[test]
fn first_picard_step_is_the_linear_solve() {
    let p = ShearProfile::tanh(1.0).unwrap();
    let g = Grid::rational(96, 8.0).unwrap();
    let flow = FlowParams::new(1e-3, 0.05, 1).unwrap();
    let f = Forcing::single_mode(&g, flow.nu, 1, 0.1, ForcingShape::Mixed).unwrap();
    let (next, _) = picard_step(&p, &SpectralState::zeros(&flow, &g), &f, &flow, &g).unwrap();
    let fm = f.mode(1).unwrap();
    let mp = ModeParams::new(flow.nu, flow.theta, 1).unwrap();
    let lin = solve_mode(&p, &mp, &fm.f1, &fm.f2, &g, None).unwrap();
    let m = next.mode(1).unwrap();
    assert!(rel(&m.u1, &lin.field.u1) < 1e-12);
    assert!(rel(&m.u2, &lin.field.u2) < 1e-12);
    assert!(next.reality_defect() < 1e-12);
}

#[test]
fn state_json_round_trip() {
    let g = Grid::rational(32, 8.0).unwrap();
    let flow = FlowParams::new(1e-3, 0.05, 2).unwrap();
    let s = random_state(&flow, &g, &mut ChaCha8Rng::seed_from_u64(5));
    assert!(s.reality_defect() < 1e-14);
    let back = SpectralState::from_json(&s.to_json().unwrap()).unwrap();
    assert_eq!(back.modes.len(), s.modes.len());
    assert!(x_norm(&back.minus(&s), &g).total < 1e-12 * x_norm(&s, &g).total);
}


