use alarmtaxis_core::matrices::det_a_closed_form;
use alarmtaxis_core::*;
use nalgebra::{Matrix2, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_b(rng: &mut ChaCha8Rng) -> ModelParams {
    let mut p = ModelParams::coexistence_example(0.0, 0.0);
    p.b1 = rng.gen_range(0.01..2.0);
    p.b2 = rng.gen_range(0.01..2.0);
    p.b3 = rng.gen_range(0.01..2.0);
    p
}

#[test]
fn det_a_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let p = random_b(&mut rng);
        let det = matrix_a(&p).determinant();
        let closed = det_a_closed_form(&p);
        assert!((det - closed).abs() <= 1e-12 * closed.abs(), "{p:?}: {det} vs {closed}");
        let stable = validate_hypothesis(&p).stability;
        assert_eq!(stable, closed > 0.0);
        assert_eq!(stable, matrix_a(&p).is_positive_definite());
    }
}

#[test]
fn definiteness_agrees_with_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut seen = [0usize; 2];
    for _ in 0..1000 {
        let p = random_b(&mut rng);
        let a = matrix_a(&p);
        let eig = Matrix2::from_fn(|i, j| a.m[i][j]).symmetric_eigenvalues();
        assert_eq!(a.is_positive_definite(), eig.iter().all(|l| *l > 0.0), "{p:?}");

        let mut q = ModelParams::coexistence_example(rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
        q.d1 = rng.gen_range(0.1..2.0);
        q.d2 = rng.gen_range(0.1..2.0);
        let ss = SteadyState {
            u_star: rng.gen_range(0.05..1.5),
            v_star: rng.gen_range(0.05..1.5),
            w_star: rng.gen_range(0.05..1.5),
            verified: false,
        };
        let b = matrix_b(&q, rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0), &ss);
        assert!(b.is_symmetric());
        let eig = Matrix3::from_fn(|i, j| b.m[i][j]).symmetric_eigenvalues();
        let pd = eig.iter().all(|l| *l > 0.0);
        assert_eq!(b.is_positive_definite(), pd, "{q:?} {ss:?} eigenvalues {eig}");
        seen[pd as usize] += 1;
    }
    // Both outcomes must actually occur for the comparison to mean anything.
    assert!(seen[0] > 50 && seen[1] > 50, "{seen:?}");
}

#[test]
fn energy_vanishes_only_at_steady_state() {
    let p = ModelParams::coexistence_example(0.05, 0.05);
    let ss = solve_steady_state(&p, 1e-13).unwrap();
    let g = Grid::rect(6, 5, 1.0, 1.0).unwrap();
    let base = StateField::at_steady_state(&g, &ss);
    assert_eq!(lyapunov_energy(&base, &ss, &p, &g).unwrap(), 0.0);

    for species in Species::ALL {
        for cell in 0..g.cells() {
            for delta in [1e-6, -1e-6, 0.3] {
                let mut dev = base.deviations().clone();
                dev[species.index()][cell] = delta * ss.level(species);
                let s = StateField::from_deviations(&g, *base.reference(), dev).unwrap();
                let e = lyapunov_energy(&s, &ss, &p, &g).unwrap();
                assert!(e > 0.0, "{species} cell {cell} delta {delta}");
            }
        }
    }
}

#[test]
fn energy_of_doubled_prey_matches_closed_form() {
    let p = ModelParams::coexistence_example(0.05, 0.05);
    let ss = solve_steady_state(&p, 1e-13).unwrap();
    let g = Grid::rect(4, 4, 1.0, 1.0).unwrap();
    let s = StateField::uniform(&g, [2.0 * ss.u_star, ss.v_star, ss.w_star]);
    let expected = ss.u_star * (1.0 - std::f64::consts::LN_2) / p.b3;
    let e = lyapunov_energy(&s, &ss, &p, &g).unwrap();
    assert!((e - expected).abs() < 1e-12 * expected);
}

#[test]
fn record_on_uniform_states() {
    let p = ModelParams::coexistence_example(0.05, 0.05);
    let ss = solve_steady_state(&p, 1e-13).unwrap();
    let g = Grid::line(10, 1.0).unwrap();
    let r = record(&StateField::uniform(&g, [1.0; 3]), &ss, &p, &g);
    assert!((r.mass_y1 - 3.7).abs() < 1e-12);
    assert_eq!([r.grad_l2_u, r.grad_l2_v, r.grad_linf_u, r.grad_linf_v], [0.0; 4]);
    assert!((r.l1_w - 1.0).abs() < 1e-12);

    let r = record(&StateField::at_steady_state(&g, &ss), &ss, &p, &g);
    assert_eq!([r.l2_dist_u, r.l2_dist_v, r.l2_dist_w, r.energy], [0.0; 4]);

    let mut u = vec![0.5; 10];
    u[3] = 0.0;
    let s = StateField::from_densities(&g, u, vec![0.5; 10], vec![0.5; 10]).unwrap();
    assert!(record(&s, &ss, &p, &g).energy.is_nan());
}

fn synthetic(d: impl Fn(f64) -> f64) -> Vec<DiagnosticsRecord> {
    (0..=60)
        .map(|k| {
            let t = k as f64 * 0.5;
            let mut a = [0.0; 19];
            a[0] = t;
            a[10] = d(t);
            DiagnosticsRecord::from_array(a)
        })
        .collect()
}

#[test]
fn fit_recovers_exact_exponential() {
    let fit = fit_decay(&synthetic(|t| 3.0 * (-0.7 * t).exp()), Window::new(0.0, 30.0)).unwrap();
    assert!((fit.c1 - 3.0).abs() < 1e-10);
    assert!((fit.c2 - 0.7).abs() < 1e-10);
    assert!((fit.r_squared - 1.0).abs() < 1e-10);
    assert_eq!(fit.samples, 61);

    let flat = fit_decay(&synthetic(|_| 0.25), Window::second_half(30.0)).unwrap();
    assert!(flat.c2.abs() < 1e-14);

    assert!(matches!(
        fit_decay(&synthetic(|_| 1.0), Window::new(0.0, 2.0)),
        Err(Error::InsufficientSamples { found: 5, .. })
    ));
    assert!(matches!(
        fit_decay(&synthetic(|t| if t > 20.0 { 0.0 } else { 1.0 }), Window::new(0.0, 30.0)),
        Err(Error::NonPositiveDistance { .. })
    ));
}
