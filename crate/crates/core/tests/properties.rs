use std::sync::Arc;

use proptest::prelude::*;
use shrinker_core::analyticity::min_a3_at;
use shrinker_core::data::ClosedForm;
use shrinker_core::discrete::{Grid, GridField, LaplaceBeltrami, Topology};
use shrinker_core::heat::{solve_forward, time_taylor_coefficients, HeatTrajectory, Scheme};
use shrinker_core::heat::explicit_stability_limit;
use shrinker_core::inequality::{mean_value_check, ParabolicCylinder};
use shrinker_core::soliton::check_soliton_identities;
use shrinker_core::{Point, SolitonModel};

fn line() -> Arc<Grid> {
    let m = SolitonModel::gaussian(1).unwrap();
    Grid::build(&m, Topology::TruncatedLine { half_length: 3.0, spacing: 0.125 }).unwrap()
}

fn periodic() -> Arc<Grid> {
    let m = SolitonModel::gaussian(1).unwrap();
    Grid::build(&m, Topology::PeriodicLine { period: 8.0, spacing: 0.25 }).unwrap()
}

fn cylinder() -> Arc<Grid> {
    let m = SolitonModel::cylinder(2, 3).unwrap();
    Grid::build(&m, Topology::CylinderProduct { polar: 6, azimuthal: 8, axial_half_length: 4.0, axial_spacing: 0.5 })
        .unwrap()
}

fn grids() -> Vec<Arc<Grid>> {
    vec![line(), periodic(), cylinder()]
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n)
}

fn winner(seed: usize) -> Arc<Grid> {
    grids().swap_remove(seed % 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_is_self_adjoint_and_kills_constants(seed in 0usize..3, c in -5.0f64..5.0, raw in values(256)) {
        let g = winner(seed);
        let op = LaplaceBeltrami::new(g.clone());
        let n = g.len();
        let u: Vec<f64> = (0..n).map(|i| raw[i % raw.len()] * (1.0 + (i / raw.len()) as f64)).collect();
        let v: Vec<f64> = (0..n).map(|i| raw[(7 * i + 3) % raw.len()]).collect();
        let (mut au, mut av) = (vec![0.0; n], vec![0.0; n]);
        op.apply(&u, &mut au);
        op.apply(&v, &mut av);
        let w = g.weights();
        let lhs: f64 = (0..n).map(|i| w[i] * au[i] * v[i]).sum();
        let rhs: f64 = (0..n).map(|i| w[i] * u[i] * av[i]).sum();
        let scale: f64 = (0..n).map(|i| w[i] * au[i].abs() * v[i].abs()).sum::<f64>() + 1.0;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        let mut ac = vec![0.0; n];
        op.apply(&vec![c; n], &mut ac);
        prop_assert!(ac.iter().all(|x| x.abs() <= 1e-9 * c.abs().max(1.0)));
        prop_assert!(op.energy(&u) >= -1e-12 * scale);
    }

    #[test]
    fn cylinder_distance_triangle(a in proptest::collection::vec(0.0f64..1.0, 3),
                                  b in proptest::collection::vec(0.0f64..1.0, 3),
                                  c in proptest::collection::vec(0.0f64..1.0, 3)) {
        let m = SolitonModel::cylinder(2, 3).unwrap();
        let (p, q, r) = (m.point_from_unit(&a, 4.0), m.point_from_unit(&b, 4.0), m.point_from_unit(&c, 4.0));
        let d = |x: &Point, y: &Point| m.geodesic_distance(x, y).unwrap();
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() < 1e-12);
    }

    #[test]
    fn identities_at_random_points(u in proptest::collection::vec(0.0f64..1.0, 3), cyl in any::<bool>()) {
        let m = if cyl { SolitonModel::cylinder(2, 3).unwrap() } else { SolitonModel::gaussian(3).unwrap() };
        let rep = check_soliton_identities(&m, &[m.point_from_unit(&u, 10.0)]).unwrap();
        prop_assert!(rep.tensor_residual < 1e-10);
        prop_assert!(rep.normalization_residual < 1e-12);
    }

    #[test]
    fn taylor_recursion_is_bitwise(seed in 0usize..3, raw in values(64)) {
        let g = winner(seed);
        let op = LaplaceBeltrami::new(g.clone());
        let a = GridField::new(g.clone(), (0..g.len()).map(|i| raw[i % raw.len()]).collect()).unwrap();
        let s = time_taylor_coefficients(&op, &a, 6).unwrap();
        for j in 0..6 {
            let mut next = vec![0.0; g.len()];
            op.apply(&s.coefficients[j], &mut next);
            prop_assert_eq!(&next, &s.coefficients[j + 1]);
        }
    }

    #[test]
    fn explicit_scheme_obeys_maximum_principle(seed in 0usize..3, raw in values(64)) {
        let g = winner(seed);
        let op = LaplaceBeltrami::new(g.clone());
        let a = GridField::new(g.clone(), (0..g.len()).map(|i| raw[i % raw.len()]).collect()).unwrap();
        let dt = explicit_stability_limit(&op);
        let tr = solve_forward(&op, &a, 40.0 * dt, Scheme::Explicit { dt }).unwrap();
        let (lo, hi) = a.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        for s in &tr.snapshots {
            prop_assert!(s.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12));
        }
    }

    #[test]
    fn series_scale_covariance(k in -20i32..20) {
        let c = 2f64.powi(k);
        let g = line();
        let op = LaplaceBeltrami::new(g.clone());
        let a = ClosedForm::HeatKernel { shift: 1.0 }.sample(&g);
        let mut ca = a.clone();
        ca.values.iter_mut().for_each(|v| *v *= c);
        let s = time_taylor_coefficients(&op, &a, 8).unwrap();
        let t = time_taylor_coefficients(&op, &ca, 8).unwrap();
        for (x, y) in s.coefficients.iter().flatten().zip(t.coefficients.iter().flatten()) {
            prop_assert_eq!(c * x, *y);
        }
        prop_assert_eq!(s.radius.entire, t.radius.entire);
        prop_assert!(((s.radius.delta - t.radius.delta) / s.radius.delta).abs() < 1e-12);
    }

    #[test]
    fn a3_is_monotone_in_a4(lo in 0.0f64..0.5, step in 0.0f64..0.5) {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = line();
        let op = LaplaceBeltrami::new(g.clone());
        let s = time_taylor_coefficients(&op, &ClosedForm::HeatKernel { shift: 1.0 }.sample(&g), 8).unwrap();
        let p = Point::new(vec![0.0]);
        let a = min_a3_at(&s, &m, &p, lo, 0, 8).unwrap();
        let b = min_a3_at(&s, &m, &p, lo + step, 0, 8).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn mean_value_ratio_is_scale_free(c in 0.001f64..1000.0, r in 0.3f64..1.9, delta in 0.1f64..0.9) {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::TruncatedLine { half_length: 2.5, spacing: 0.125 }).unwrap();
        let times = HeatTrajectory::uniform_times(-4.0, 0.0, 0.03125).unwrap();
        let mut v = HeatTrajectory::from_closed_form(&g, &ClosedForm::HeatKernel { shift: 5.0 }, &times).unwrap();
        let cyl = ParabolicCylinder::new(Point::new(vec![0.0]), 0.0, r, delta).unwrap();
        let a = mean_value_check(&v, &cyl, 1.0).unwrap();
        v.snapshots.iter_mut().flatten().for_each(|x| *x *= c);
        let b = mean_value_check(&v, &cyl, 1.0).unwrap();
        prop_assert!(((a.rho - b.rho) / a.rho).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn tychonov_table_differentiates(t in 0.3f64..2.0) {
        let tab = shrinker_core::tychonov::TychonovTable::new(11);
        let h = 1e-5 * t;
        for k in 0..=10 {
            let fd = (tab.derivative(k, t + h) - tab.derivative(k, t - h)) / (2.0 * h);
            let exact = tab.derivative(k + 1, t);
            let scale = exact.abs().max(tab.derivative(k, t).abs() / t);
            prop_assert!((fd - exact).abs() <= 1e-6 * scale, "k={} fd={} exact={}", k, fd, exact);
        }
    }
}

#[test]
fn tychonov_polynomials_follow_the_recurrence() {
    // Q_{k+1} = 2 s^3 Q_k - s^2 Q_k', in i128 for k <= 10
    let tab = shrinker_core::tychonov::TychonovTable::new(10);
    let mut q: Vec<i128> = vec![1];
    for k in 0..=10 {
        let got: Vec<i128> = tab.poly(k).iter().map(|c| c.to_string().parse().unwrap()).collect();
        assert_eq!(got, q, "k={k}");
        let mut next = vec![0i128; q.len() + 3];
        for (d, c) in q.iter().enumerate() {
            next[d + 3] += 2 * c;
            if d > 0 {
                next[d + 1] -= d as i128 * c;
            }
        }
        while next.last() == Some(&0) {
            next.pop();
        }
        q = next;
    }
}
