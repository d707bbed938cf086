mod oracles;

use oracles::{random_matrix, random_point, rk4_flow, simpson, taylor_expm, M2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reach_core::geometry::AxisBox;
use reach_core::linalg::{compute_mu_x, expm, expm_integral, propagate_point, v_bar, FlowMap, Mat, Vector};
use reach_core::model::quadrant_model;
use reach_core::NumericsBudget;

fn mat(a: &M2) -> Mat {
    Mat::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])
}

fn max_diff(a: &Mat, b: &M2) -> f64 {
    (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - b[i][j]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn rotation_integral_matches_simpson() {
    let a = [[0.0, -1.0], [1.0, 0.0]];
    let t = std::f64::consts::PI;
    let rot = |s: f64| [[s.cos(), -s.sin()], [s.sin(), s.cos()]];
    let reference = simpson(rot, t, 1e-6);
    let got = expm_integral(&mat(&a), t).unwrap();
    assert!(max_diff(&got, &reference) < 1e-9, "{got} vs {reference:?}");
    // Closed form [[sin t, cos t − 1], [1 − cos t, sin t]] at t = π.
    assert!(max_diff(&got, &[[0.0, -2.0], [2.0, 0.0]]) < 1e-13);
}

#[test]
fn expm_matches_taylor_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let a = random_matrix(&mut rng, 4.0);
        let t = rng.gen_range(0.0..2.0);
        let reference = taylor_expm(&a, t);
        let scale = reference.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        let got = expm(&mat(&a), t).unwrap();
        assert!(max_diff(&got, &reference) <= 1e-12 * scale, "A = {a:?}, t = {t}");
    }
}

#[test]
fn integral_matches_simpson_of_taylor() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 2.0);
        let t = rng.gen_range(0.1..1.0);
        let reference = simpson(|s| taylor_expm(&a, s), t, 1e-3);
        let got = expm_integral(&mat(&a), t).unwrap();
        assert!(max_diff(&got, &reference) < 1e-10, "A = {a:?}, t = {t}");
    }
}

#[test]
fn expm_semigroup() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let a = mat(&random_matrix(&mut rng, 3.0));
        let (s, t) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let lhs = expm(&a, s + t).unwrap();
        let rhs = expm(&a, s).unwrap() * expm(&a, t).unwrap();
        let scale = lhs.amax().max(1.0);
        assert!((lhs - rhs).amax() < 1e-12 * scale);
    }
}

#[test]
fn propagate_matches_rk4_on_up_dynamics() {
    let model = quadrant_model();
    let up = &model.locations()[0];
    let x0 = Vector::from_row_slice(&[2.5, 6.0]);
    let got = propagate_point(&up.a, &up.u, 0.1, &x0).unwrap();
    let a = [[up.a[(0, 0)], up.a[(0, 1)]], [up.a[(1, 0)], up.a[(1, 1)]]];
    let reference = rk4_flow(&a, [up.u[0], up.u[1]], [2.5, 6.0], 0.1, 1e-7);
    let mu_x = compute_mu_x(&NumericsBudget::default(), model.state_box(), [&up.u]);
    for i in 0..2 {
        assert!((got[i] - reference[i]).abs() <= mu_x + 1e-9);
    }
}

#[test]
fn propagate_matches_rk4_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let bx = AxisBox::new(vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap();
    for _ in 0..100 {
        let a = random_matrix(&mut rng, 1.0);
        let u = random_point(&mut rng, 1.0);
        let x = random_point(&mut rng, 5.0);
        let t = rng.gen_range(0.0..1.0);
        let uv = Vector::from_row_slice(&u);
        let got = propagate_point(&mat(&a), &uv, t, &Vector::from_row_slice(&x)).unwrap();
        let reference = rk4_flow(&a, u, x, t, 1e-5);
        let mu_x = compute_mu_x(&NumericsBudget::default(), &bx, [&uv]);
        for i in 0..2 {
            assert!((got[i] - reference[i]).abs() <= mu_x + 1e-9, "A = {a:?}, t = {t}");
        }
    }
}

#[test]
fn flow_differences_are_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let bx = AxisBox::new(vec![-8.0, -8.0], vec![8.0, 8.0]).unwrap();
    for _ in 0..200 {
        let a = mat(&random_matrix(&mut rng, 1.0));
        let u = Vector::from_row_slice(&random_point(&mut rng, 1.0));
        let t = rng.gen_range(0.0..0.5);
        let x = Vector::from_row_slice(&random_point(&mut rng, 8.0));
        let y = Vector::from_row_slice(&random_point(&mut rng, 8.0));
        let flow = FlowMap::new(&a, &u, t).unwrap();
        let lhs = flow.apply(&x) - flow.apply(&y);
        let rhs = expm(&a, t).unwrap() * (&x - &y);
        let mu_x = compute_mu_x(&NumericsBudget::default(), &bx, [&u]);
        assert!((lhs - rhs).amax() <= 2.0 * mu_x);
    }
}

#[test]
fn speed_bound_of_the_quadrant_example() {
    let model = quadrant_model();
    assert!((v_bar(&model) - 25.9).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let vb = v_bar(&model);
    for _ in 0..1000 {
        let x = reach_core::Point::new(rng.gen_range(-8.0..=8.0), rng.gen_range(-8.0..=8.0));
        for loc in model.locations() {
            assert!(loc.field(&x).amax() <= vb);
        }
    }
}
