//! Property tests for the structural invariants.

use crate::airy::airy_ai;
use crate::cli::Table;
use crate::grid::Grid;
use crate::helmholtz::solve_dirichlet;
use crate::ns::{solve_mode, ForcingShape, ModeParams};
use crate::profile::ShearProfile;
use crate::report::power_law_slope;
use crate::C64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn grid() -> &'static Grid {
    static G: OnceLock<Grid> = OnceLock::new();
    G.get_or_init(|| Grid::rational(128, 2.0).unwrap())
}

fn mode_grid() -> &'static Grid {
    static G: OnceLock<Grid> = OnceLock::new();
    G.get_or_init(|| Grid::rational(96, 8.0).unwrap())
}

proptest! {
    #[test]
    fn norms_are_homogeneous(a in 0.2f64..3.0, r in 0.5f64..3.0, cr in -4.0f64..4.0, ci in -4.0f64..4.0) {
        let g = grid();
        let u = g.sample_real(|y| (1.0 + a * y) * (-r * y).exp());
        let c = C64::new(cr, ci);
        let cu = &u * c;
        let k = c.norm();
        prop_assert!((g.l2(&cu) - k * g.l2(&u)).abs() <= 1e-12 * (1.0 + k * g.l2(&u)));
        prop_assert!((g.weighted_norm(&cu, 2) - k * g.weighted_norm(&u, 2)).abs() <= 1e-12 * (1.0 + k * g.weighted_norm(&u, 2)));
        prop_assert!((g.sup(&cu) - k * g.sup(&u)).abs() <= 1e-12 * (1.0 + k * g.sup(&u)));
    }

    #[test]
    fn profile_derivatives(s in 0.3f64..3.0, y in 0.01f64..10.0, exp in any::<bool>()) {
        let p = if exp { ShearProfile::exp(s) } else { ShearProfile::tanh(s) }.unwrap();
        let h = 1e-5;
        let (u, du, ddu) = p.evaluate(y);
        prop_assert!((0.0..=1.0).contains(&u));
        prop_assert!(du >= 0.0);
        prop_assert!(((p.value(y + h) - p.value(y - h)) / (2.0 * h) - du).abs() < 1e-7);
        prop_assert!(((p.evaluate(y + h).1 - p.evaluate(y - h).1) / (2.0 * h) - ddu).abs() < 1e-7);
    }

    #[test]
    fn quadrature_of_exponentials(r in 0.5f64..4.0) {
        prop_assert!((grid().integrate_real(|y| (-r * y).exp()) - 1.0 / r).abs() < 1e-9);
    }

    #[test]
    fn helmholtz_round_trip(alpha in 0.3f64..2.0, dr in 0.5f64..2.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let g = grid();
        let r = alpha + dr;
        let w = g.sample_real(|y| (a + b * y) * (-r * y).exp());
        let phi = solve_dirichlet(g, &w, alpha).unwrap();
        prop_assert_eq!(phi[0], C64::new(0.0, 0.0));
        let back = g.helm_apply(&phi, alpha);
        let scale = g.sup(&w).max(1e-3);
        for (i, &y) in g.nodes().iter().enumerate().filter(|(_, &y)| y <= 20.0) {
            prop_assert!((back[i] - w[i]).norm() < 1e-6 * scale, "Y = {}", y);
        }
    }

    #[test]
    fn power_law_slope_is_exact(c in 0.1f64..10.0, p in -3.0f64..3.0) {
        let x = [1e-1f64, 1e-2, 1e-3, 1e-4];
        let y: Vec<f64> = x.iter().map(|x| c * x.powf(p)).collect();
        prop_assert!((power_law_slope(&x, &y).unwrap() - p).abs() < 1e-10);
    }

    #[test]
    fn table_csv_round_trip(rows in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..20), note in -1e3f64..1e3) {
        let mut t = Table::new(&["a", "b"]);
        for (a, b) in &rows {
            t.push([format!("{a:e}"), format!("{b:e}")]);
        }
        t.note("residual", format!("{note:e}"));
        let back = Table::from_csv(&t.to_csv().unwrap()).unwrap();
        prop_assert_eq!(&back, &t);
        let a = back.column("a").unwrap();
        prop_assert_eq!(a, rows.iter().map(|r| r.0).collect::<Vec<_>>());
        prop_assert_eq!(back.trailer_value("residual").unwrap().parse::<f64>().unwrap(), note);
    }

    #[test]
    fn airy_equation(re in -6.0f64..10.0, im in -4.0f64..4.0) {
        let z = C64::new(re, im);
        let h = 1e-4;
        let e = airy_ai(z).unwrap();
        let d2 = (airy_ai(z + h).unwrap().ai_prime - airy_ai(z - h).unwrap().ai_prime) / (2.0 * h);
        prop_assert!((d2 - z * e.ai).norm() < 1e-6 * (1.0 + (z * e.ai).norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn mode_solves_are_divergence_free(lnu in -3.0f64..-2.0, n in 1i64..4, shape in 0usize..3) {
        let g = mode_grid();
        let p = ShearProfile::tanh(1.0).unwrap();
        let mp = ModeParams::new(10f64.powf(lnu), 0.05, n).unwrap();
        let shape = [ForcingShape::Streamwise, ForcingShape::Normal, ForcingShape::Mixed][shape];
        let (f1, f2) = shape.sample(g, mp.nu);
        let s = solve_mode(&p, &mp, &f1, &f2, g, None).unwrap();
        prop_assert!(s.divergence < 1e-8, "divergence {}", s.divergence);
        prop_assert!(s.wall < 1e-8 * g.sup(&s.field.u1).max(1e-8), "wall {}", s.wall);

        let mpc = ModeParams::new(mp.nu, 0.05, -n).unwrap();
        let c = solve_mode(&p, &mpc, &f1.map(|v| v.conj()), &f2.map(|v| v.conj()), g, None).unwrap();
        let scale = g.sup(&s.field.u1).max(g.sup(&s.field.u2));
        prop_assert!((c.field.u1 - s.field.u1.map(|v| v.conj())).camax() < 1e-10 * scale);
        prop_assert!((c.field.u2 - s.field.u2.map(|v| v.conj())).camax() < 1e-10 * scale);
    }
}
