//! Worked examples checked through the public API.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use toruslab::arithmetic::{
    dirichlet_approx, divisor_count_dyadic, divisor_tail_count, f2_hat, farey_atoms, in_major_arc, totient, Fraction,
    MajorArcParams,
};
use toruslab::dispersive::{dispersive_bound, dispersive_rhs, kernel_split, time_scales};
use toruslab::nls::{conservation_report, energy, free_trajectory, mass, nonlinearity, DataSpec, NlsProblem, Sign};
use toruslab::propagator::sample_spacetime;
use toruslab::strichartz::{spacetime_lp_norm, strichartz_ratio, norm_grid, scaling_exponent};
use toruslab::torus::lp_symbol;
use toruslab::{free_evolve, kernel_direct, kernel_grid, Budget, Dyadic, FrequencyField, LpMode, Sobolev, SpaceTimeGrid, TorusGeometry};

fn dy(n: u64) -> Dyadic {
    Dyadic::new(n).unwrap()
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

#[test]
fn littlewood_paley_symbols() {
    assert_eq!(lp_symbol(&[0, 0, 0], dy(1), LpMode::Leq), 1.0);
    assert_eq!(lp_symbol(&[2, 0], dy(1), LpMode::Leq), 0.0);
    assert_eq!(lp_symbol(&[1], dy(1), LpMode::Band), 1.0);
    let g = TorusGeometry::square(2).unwrap();
    let inside = FrequencyField::character(g.clone(), 16, &[4, -4], one()).unwrap();
    assert_eq!(inside.project(dy(4), LpMode::Leq).unwrap(), inside);
    let outside = FrequencyField::character(g, 16, &[8, 0], one()).unwrap();
    assert_eq!(outside.project(dy(4), LpMode::Leq).unwrap().l2_norm(), 0.0);
}

#[test]
fn synthesis_and_sobolev_norms() {
    let g = TorusGeometry::square(3).unwrap();
    let dc = FrequencyField::character(g.clone(), 1, &[0, 0, 0], one()).unwrap();
    assert!((dc.synthesize(&[0.3, 0.1, 0.7]).unwrap() - one()).norm() < 1e-15);
    let e1 = FrequencyField::character(g, 1, &[1, 0, 0], one()).unwrap();
    assert!((e1.synthesize(&[0.5, 0.0, 0.0]).unwrap() + one()).norm() < 1e-15);
    assert!((dc.sobolev_norm(Sobolev::H1) - 1.0).abs() < 1e-15);
    assert!((e1.sobolev_norm(Sobolev::H1) - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(e1.sobolev_norm(Sobolev::L2), e1.l2_norm());
}

#[test]
fn free_evolution_examples() {
    let g = TorusGeometry::square(1).unwrap();
    let e1 = FrequencyField::character(g.clone(), 2, &[1], Complex64::new(0.6, 0.8)).unwrap();
    assert_eq!(free_evolve(&e1, 0.0, &g).unwrap(), e1);
    let back = free_evolve(&e1, 1.0, &g).unwrap();
    assert!(back.sub(&e1).unwrap().l2_norm() < 1e-15);
}

#[test]
fn kernel_examples() {
    let g = TorusGeometry::square(1).unwrap();
    assert!((kernel_direct(0.0, &[0.0], dy(1), &g).unwrap() - 3.0).norm() < 1e-15);
    for x in [0.1, 0.25, 0.77] {
        let expect = 1.0 + 2.0 * (TAU * x).cos();
        assert!((kernel_direct(0.0, &[x], dy(1), &g).unwrap() - expect).norm() < 1e-14);
    }
    let a = kernel_direct(0.3, &[0.2], dy(8), &g).unwrap();
    let b = kernel_direct(1.3, &[0.2], dy(8), &g).unwrap();
    assert!((a - b).norm() < 1e-10);

    let g2 = TorusGeometry::new(vec![1.0, 0.5f64.sqrt()]).unwrap();
    let ev = kernel_grid(0.37, 33, dy(8), &g2, Budget::default()).unwrap();
    assert!((ev.mean() - 1.0).norm() < 1e-12);
    let at_zero = kernel_grid(0.0, 33, dy(8), &g2, Budget::default()).unwrap().value(&[0, 0]);
    let line = kernel_direct(0.0, &[0.0], dy(8), &TorusGeometry::square(1).unwrap()).unwrap();
    assert!((at_zero - line * line).norm() < 1e-10);
}

#[test]
fn space_time_rows_keep_the_l2_norm() {
    let g = TorusGeometry::square(2).unwrap();
    let f = DataSpec::Gaussian { amplitude: 1.0 }.build(&g, 3, 4).unwrap();
    let grid = SpaceTimeGrid::new(6, 8, 1.0).unwrap();
    let samples = sample_spacetime(&f, &grid, &g, Budget::default()).unwrap();
    for i in 0..grid.n_t {
        let row = samples.slice(i);
        let l2 = (row.iter().map(|z| z.norm_sqr()).sum::<f64>() / row.len() as f64).sqrt();
        assert!((l2 - f.l2_norm()).abs() < 1e-12);
    }
    let norm = spacetime_lp_norm(&samples, 2.0, 2.0).unwrap();
    assert!((norm - f.l2_norm()).abs() < 1e-6);
}

#[test]
fn dirichlet_examples() {
    let r = dirichlet_approx(0.0, 4).unwrap();
    assert_eq!((r.a, r.q, r.error()), (0, 1, 0.0));
    let r = dirichlet_approx(1.0 / 3.0, 10).unwrap();
    assert_eq!((r.a, r.q), (1, 3));
    assert!(r.error() < 1e-16);
    let r = dirichlet_approx(0.41421356, 5).unwrap();
    assert_eq!((r.a, r.q), (1, 2));
}

#[test]
fn farey_and_divisor_examples() {
    assert_eq!(farey_atoms(dy(1)), vec![Fraction { a: 0, q: 1 }]);
    let two: Vec<(u64, u64)> = farey_atoms(dy(2)).into_iter().map(|f| (f.a, f.q)).collect();
    assert_eq!(two, vec![(1, 3), (1, 2), (2, 3)]);
    for q in [2u64, 4, 8] {
        let expect: u64 = (q..2 * q).map(totient).sum();
        assert_eq!(farey_atoms(dy(q)).len() as u64, expect);
    }
    assert!((1..200).all(|n| divisor_count_dyadic(n, dy(1)).unwrap() == 1));
    assert_eq!(divisor_count_dyadic(12, dy(2)).unwrap(), 2);
    assert_eq!(divisor_count_dyadic(12, dy(4)).unwrap(), 2);
    assert_eq!(f2_hat(17, dy(1)), 1);
    assert_eq!(f2_hat(6, dy(2)), 5);
    assert_eq!(f2_hat(5, dy(4)), 5);
    assert_eq!(divisor_tail_count(100, dy(2), 1.0, Budget::default()).unwrap(), 16);
    assert_eq!(divisor_tail_count(100, dy(1), 0.0, Budget::default()).unwrap(), 100);
    assert_eq!(divisor_tail_count(100, dy(4), 4.0, Budget::default()).unwrap(), 0);
}

#[test]
fn major_arc_examples() {
    let g = TorusGeometry::square(1).unwrap();
    let params = MajorArcParams::new(0.25, dy(16)).unwrap();
    let w = in_major_arc(0.0, &params, &g).unwrap();
    assert_eq!((w.a, w.q), (0, 1));
    assert_eq!(in_major_arc(0.5, &params, &g).unwrap().q, 2);
    // Farthest point from every a/q with q <= 4.
    let worst = (0..=10_000)
        .map(|i| i as f64 / 10_000.0)
        .max_by(|&x, &y| {
            let dist = |t: f64| {
                (1..=4u64)
                    .flat_map(|q| (0..=q).map(move |a| (t - a as f64 / q as f64).abs()))
                    .fold(f64::MAX, f64::min)
            };
            dist(x).total_cmp(&dist(y))
        })
        .unwrap();
    assert!(in_major_arc(worst, &params, &g).is_none());
}

#[test]
fn dispersive_bound_examples() {
    let g = TorusGeometry::new(vec![1.0, 0.5f64.sqrt()]).unwrap();
    assert!((dispersive_bound(0.0, dy(8), &g) - 64.0).abs() < 1e-12);
    let g1 = TorusGeometry::square(1).unwrap();
    assert!((dispersive_bound(0.5, dy(8), &g1) - 8.0 / 2f64.sqrt()).abs() < 1e-12);
    let params = MajorArcParams::new(0.1, dy(16)).unwrap();
    let (tilde, rest) = kernel_split(0.0, &[0.3], &params, &g1).unwrap();
    assert_eq!(rest, Complex64::default());
    assert_eq!(tilde, kernel_direct(0.0, &[0.3], dy(16), &g1).unwrap());
}

#[test]
fn dispersive_rhs_examples() {
    let g = TorusGeometry::square(1).unwrap();
    let params = MajorArcParams::new(0.1, dy(64)).unwrap();
    let n = 64f64;
    let rhs = dispersive_rhs(0.0, &params, &g, 4.0).unwrap();
    assert!(rhs >= n.powf(1.0 - 2.0 / 4.0) * (1.0 - 1e-12));
    let scales = time_scales(&params, dy(1));
    assert!((scales[0] - 1.0 / (n * n)).abs() < 1e-18);
}

#[test]
fn strichartz_ratio_examples() {
    let g = TorusGeometry::square(1).unwrap();
    let n = dy(8);
    let p = 8.0;
    let grid = norm_grid(n, 2 * n.as_usize(), p, &g, 1.0).unwrap();
    let dc = FrequencyField::character(g.clone(), 1, &[0], one()).unwrap();
    let expect = n.as_f64().powf(-scaling_exponent(1, p));
    let r = strichartz_ratio(&dc, n, p, &grid, Budget::default()).unwrap();
    assert!((r - expect).abs() < 1e-12 * expect);
    let ch = FrequencyField::character(g, 4, &[3], one()).unwrap();
    let r = strichartz_ratio(&ch, n, p, &grid, Budget::default()).unwrap();
    assert!((r - expect).abs() < 1e-12 * expect);
}

#[test]
fn nls_examples() {
    let g = TorusGeometry::square(3).unwrap();
    let u = FrequencyField::character(g.clone(), 1, &[0, 0, 0], one()).unwrap();
    assert!((mass(&u) - 0.5).abs() < 1e-15);
    assert!((energy(&u, Sign::Defocusing).unwrap() - 1.0 / 6.0).abs() < 1e-14);
    let e1 = FrequencyField::character(g.clone(), 1, &[1, 0, 0], one()).unwrap();
    let e = energy(&e1, Sign::Defocusing).unwrap();
    assert!((e - (2.0 * PI * PI + 1.0 / 6.0)).abs() < 1e-12);
    let a = Complex64::new(0.5, 0.0);
    let c = FrequencyField::character(g.clone(), 2, &[0, 0, 0], a).unwrap();
    assert!((nonlinearity(&c, Sign::Defocusing).unwrap().coeff(&[0, 0, 0]) - a.powi(5)).norm() < 1e-15);

    // Linear flow conserves both quantities.
    let u0 = DataSpec::Gaussian { amplitude: 0.3 }.build(&g, 3, 2).unwrap();
    let p = NlsProblem::new(Sign::Defocusing, u0).unwrap().with_scale(0.0);
    let rep = conservation_report(&free_trajectory(&p, 0.25, 1.0 / 16.0).unwrap());
    assert!(rep.mass_drift <= 1e-10 && rep.energy_drift <= 1e-10);

    // Small data keeps (M + E) / ‖u‖²_{H^1} inside [1/4, 4].
    let u0 = DataSpec::Lowmode { amplitude: 0.01 }.build(&g, 2, 0).unwrap();
    let p = NlsProblem::new(Sign::Defocusing, u0).unwrap();
    let sol = toruslab::nls::picard_solve(&p, 0.25, 1.0 / 16.0, 20, 1e-14).unwrap();
    let rep = conservation_report(&sol.trajectory);
    assert!(rep.h1_equivalence_min >= 0.25 && rep.h1_equivalence_max <= 4.0, "{rep:?}");
}
