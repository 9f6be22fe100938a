use phasescope::ld::{compute_grid, ld_point, LdConfig, LdDirection, SaddleRegion};
use phasescope::par::Execution;
use phasescope::*;
use proptest::prelude::*;

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn state2() -> impl Strategy<Value = PhaseState> {
    (-4.0..4.0f64, -4.0..4.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, px, py)| PhaseState::new(vec![x, y, px, py], 0.0))
}

fn state3() -> impl Strategy<Value = PhaseState> {
    prop::collection::vec(-3.0..3.0f64, 6).prop_map(|mut c| {
        c[0] += 9.0;
        c[1] += 5.0;
        c[2] += 2.5;
        for v in &mut c[3..] {
            *v /= 6.0;
        }
        PhaseState::new(c, 0.0)
    })
}

fn params2() -> impl Strategy<Value = Params2D> {
    (0.5..2.0f64, 0.5..2.0f64, 0.05..0.5f64, any::<bool>()).prop_map(|(omega_x, omega_y, d, neg)| Params2D {
        omega_x,
        omega_y,
        delta: if neg { -d } else { d },
    })
}

fn end(model: &SystemModel, s: &PhaseState, t: f64) -> PhaseState {
    integrate(model, s, t, &cfg()).unwrap().last().clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_is_conserved_2dof(s in state2(), t in 1.0..20.0f64) {
        let m = SystemModel::two_dof();
        let tr = integrate_sampled(&m, &s, t, Sampling::Steps, &cfg()).unwrap();
        let e0 = m.energy(&s.coords).unwrap();
        prop_assert!(tr.energy_drift(&m) < 1e-9 * e0.abs().max(1.0));
    }

    #[test]
    fn energy_is_conserved_3dof(s in state3(), t in 1.0..20.0f64) {
        let m = SystemModel::three_dof();
        let tr = integrate_sampled(&m, &s, -t, Sampling::Steps, &cfg()).unwrap();
        let e0 = m.energy(&s.coords).unwrap();
        prop_assert!(tr.energy_drift(&m) < 1e-9 * e0.abs().max(1.0));
    }

    #[test]
    fn stm_is_symplectic(s in state2(), s3 in state3(), t in 0.5..3.0f64) {
        for (m, x) in [(SystemModel::two_dof(), s), (SystemModel::three_dof(), s3)] {
            let (_, phi) = integrate_with_stm(&m, &x, t, &cfg()).unwrap();
            let scale = 1.0 + phi.0.abs().max().powi(2);
            prop_assert!(phi.symplectic_residual() < 1e-10 * scale);
            prop_assert!((phi.determinant() - 1.0).abs() < 1e-10 * scale * scale);
        }
    }

    #[test]
    fn reflection_commutes_with_flow(s in state2(), s3 in state3(), t in -8.0..8.0f64) {
        prop_assume!(t.abs() > 1e-3);
        for (m, x, sym) in [(SystemModel::two_dof(), s, Symmetry::Sy), (SystemModel::three_dof(), s3, Symmetry::Sx)] {
            let a = end(&m, &sym.apply(&x).unwrap(), t);
            let b = sym.apply(&end(&m, &x, t)).unwrap();
            prop_assert!(a.max_abs_diff(&b) < 1e-9, "{:?}: {}", sym, a.max_abs_diff(&b));
        }
    }

    #[test]
    fn time_reversal_conjugates_flow(s in state2(), s3 in state3(), t in 0.1..8.0f64) {
        for (m, x, sym) in [(SystemModel::two_dof(), s, Symmetry::St), (SystemModel::three_dof(), s3, Symmetry::St3)] {
            let a = end(&m, &sym.apply(&x).unwrap(), t).coords;
            let b = sym.apply(&end(&m, &x, -t)).unwrap().coords;
            let d = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            prop_assert!(d < 1e-9, "{:?}: {}", sym, d);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(s in state2(), s3 in state3()) {
        for (m, x) in [(SystemModel::two_dof(), s), (SystemModel::three_dof(), s3)] {
            let j = m.jacobian(&x).unwrap();
            let h = 1e-6;
            for k in 0..x.coords.len() {
                let mut a = x.clone();
                let mut b = x.clone();
                a.coords[k] += h;
                b.coords[k] -= h;
                let fa = m.vector_field(&a).unwrap();
                let fb = m.vector_field(&b).unwrap();
                for i in 0..x.coords.len() {
                    let fd = (fa[i] - fb[i]) / (2.0 * h);
                    prop_assert!((fd - j[(i, k)]).abs() < 1e-6 * (1.0 + j[(i, k)].abs()));
                }
            }
        }
    }

    #[test]
    fn saddle_eigenpairs_have_small_residuals(p in params2()) {
        let m = SystemModel::TwoDof(p);
        for choice in [SaddleChoice::Top, SaddleChoice::Bottom] {
            let eq = m.saddle(choice).unwrap();
            let es = m.saddle_eigensystem(&eq).unwrap();
            let j = m.jacobian(&eq.state).unwrap();
            let col = |v: &[f64]| nalgebra::DVector::from_column_slice(v);
            let r_plus = (&j * col(&es.u_plus) - col(&es.u_plus) * es.lambda).amax();
            let r_minus = (&j * col(&es.u_minus) + col(&es.u_minus) * es.lambda).amax();
            // J(w_r + i w_i) = iω(w_r + i w_i)
            let r_re = (&j * col(&es.w_real) + col(&es.w_imag) * es.omega).amax();
            let r_im = (&j * col(&es.w_imag) - col(&es.w_real) * es.omega).amax();
            for r in [r_plus, r_minus, r_re, r_im] {
                prop_assert!(r < 1e-10, "residual {r}");
            }
        }
    }

    #[test]
    fn on_shell_states_are_exact(x in -5.0..5.0f64, px in -5.0..5.0f64, de in -1.0..1.0f64) {
        let m = SystemModel::two_dof();
        let e = m.critical_energy() + de;
        let slice = SliceSpec::u_xpx_2dof(0.0, [-6.0, 6.0], [-6.0, 6.0]);
        if let Some(st) = momentum_on_shell(&m, &slice, [x, px], e) {
            prop_assert!((m.energy(&st.coords).unwrap() - e).abs() < 1e-12);
            prop_assert!(st.coords[3] > 0.0);
        }
    }

    #[test]
    fn hill_mask_grows_with_energy(e1 in 0.0..30.0f64, de in 0.0..5.0f64) {
        let m = SystemModel::two_dof();
        let w = ConfigWindow::xy([-10.0, 10.0], [-10.0, 10.0]);
        let a = m.hill_mask(e1, &w, [41, 41]).unwrap();
        let b = m.hill_mask(e1 + de, &w, [41, 41]).unwrap();
        prop_assert!(a.cells.iter().zip(&b.cells).all(|(x, y)| !x || *y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ld_time_reversal_and_monotonicity(s in state2(), tau in 1.0..10.0f64, p in 0.2..1.0f64) {
        let m = SystemModel::two_dof();
        let ld = LdConfig { p_exponent: p, ..LdConfig::fixed(tau) };
        let f = ld_point(&m, &s, &ld, LdDirection::Forward, &cfg()).unwrap();
        let b = ld_point(&m, &Symmetry::St.apply(&s).unwrap(), &ld, LdDirection::Backward, &cfg()).unwrap();
        prop_assert!((f.value - b.value).abs() <= 1e-8 * f.value.max(1.0));
        let longer = ld_point(&m, &s, &LdConfig { tau: 2.0 * tau, ..ld }, LdDirection::Forward, &cfg()).unwrap();
        prop_assert!(longer.value >= f.value);
        prop_assert!(f.value >= 0.0 && f.time <= tau);
    }

    #[test]
    fn grid_samples_are_additive(k in -7.3..-6.8f64, n in 4usize..9) {
        let m = SystemModel::two_dof();
        let slice = SliceSpec::u_xpx_2dof(k, [4.8, 6.3], [-0.6, 0.6]);
        let region = SaddleRegion::around(&m, SaddleChoice::Bottom, 2.0).unwrap();
        let g = compute_grid(&m, &slice, 15.25, &LdConfig::variable(20.0, region), &cfg(), [n, n], Execution::Sequential).unwrap();
        for s in g.samples.iter().flatten() {
            prop_assert_eq!(s.total, s.forward + s.backward);
            prop_assert!(s.forward >= 0.0 && s.backward >= 0.0);
            prop_assert!((0.0..=20.0).contains(&s.tau_plus) && (0.0..=20.0).contains(&s.tau_minus));
        }
    }
}

#[test]
fn grids_do_not_depend_on_scheduling() {
    let m = SystemModel::two_dof();
    let slice = SliceSpec::u_xpx_2dof(0.0, [-5.6, 5.6], [-5.6, 5.6]);
    let ld = LdConfig::fixed(10.0);
    let run = |exec| compute_grid(&m, &slice, 15.25, &ld, &cfg(), [40, 40], exec).unwrap();
    let seq = run(Execution::Sequential);
    for threads in [1, 3, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let par = pool.install(|| run(Execution::Parallel));
        assert_eq!(io::grid::encode(&par), io::grid::encode(&seq));
    }
}

#[test]
fn closed_bottleneck_has_no_escapes() {
    let m = SystemModel::two_dof();
    let slice = SliceSpec::u_xpx_2dof(0.0, [-5.6, 5.6], [-5.6, 5.6]);
    let g = compute_grid(&m, &slice, 15.0, &LdConfig::fixed(20.0), &cfg(), [30, 30], Execution::Parallel).unwrap();
    assert!(g.on_shell_count() > 0);
    assert!(g.samples.iter().flatten().all(|s| s.flags == 0));
}
