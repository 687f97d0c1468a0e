//! Drift, diffusion and drive for both setups, and time evolution of means
//! and covariances.

mod lyapunov;
mod modes;
mod propagator;
mod scenario;
mod trace;

pub use lyapunov::{integrate_lyapunov, LyapunovOptions};
pub use propagator::{
    build_oscillator_propagator, build_propagator, build_released_propagator, propagate_covariance,
    propagate_covariance_with, propagate_mean, Propagator,
};
pub use scenario::{DerivedRates, Scenario, Setup};
pub use trace::{
    entanglement_trace, linspace, EntanglementSeries, EvolvedState, Simulator, TraceSample,
};

pub use crate::expm::matrix_exponential;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{sphere_radius, CODATA, OSMIUM_DENSITY};
    use crate::cvcore::{thermal_squeezed_covariance, CovarianceMatrix, InitialStateSpec, Mat4, Vec4};
    use crate::error::Error;
    use crate::quadrature;
    use approx::assert_relative_eq;
    use nalgebra::SMatrix;
    use std::f64::consts::{LN_2, PI};

    fn osmium_oscillators(omega: f64) -> Scenario {
        Scenario::spheres(Setup::Oscillators, 1.0, omega, OSMIUM_DENSITY, 2.1)
    }

    fn released_osmium(nbar: f64) -> Scenario {
        Scenario::spheres(Setup::Released, 1e-7, 1e5, OSMIUM_DENSITY, 3.0)
            .with_initial(InitialStateSpec::thermal(nbar))
    }

    /// Van Loan: the exact damped covariance from one 8×8 exponential.
    fn van_loan_covariance(p: &Propagator, v0: &Mat4, t: f64) -> Mat4 {
        let k = p.drift();
        let mut c = SMatrix::<f64, 8, 8>::zeros();
        c.fixed_view_mut::<4, 4>(0, 0).copy_from(&(-k));
        c.fixed_view_mut::<4, 4>(0, 4).copy_from(p.diffusion());
        c.fixed_view_mut::<4, 4>(4, 4).copy_from(&k.transpose());
        let e = matrix_exponential(&c, t).unwrap();
        let f3: Mat4 = e.fixed_view::<4, 4>(4, 4).into_owned();
        let g2: Mat4 = e.fixed_view::<4, 4>(0, 4).into_owned();
        let w = f3.transpose();
        w * v0 * w.transpose() + f3.transpose() * g2
    }

    #[test]
    fn no_gravity_decouples_modes() {
        let sc = osmium_oscillators(0.1).with_constants(CODATA.with_overrides("G=0").unwrap());
        let p = build_oscillator_propagator(&sc).unwrap();
        let k = p.drift();
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(k[(i, j)], 0.0);
                assert_eq!(k[(j, i)], 0.0);
            }
        }
        assert_eq!(*p.drive(), Vec4::zeros());
    }

    #[test]
    fn oscillator_matrices() {
        let p = build_oscillator_propagator(&osmium_oscillators(0.1)).unwrap();
        assert!((p.eta() - 1.36e-4).abs() < 0.005e-4);
        let k = p.drift();
        assert_eq!(k[(0, 1)], 0.1);
        assert_relative_eq!(k[(1, 0)], -0.1 * (1.0 - p.eta()));
        assert_relative_eq!(k[(1, 2)], -0.1 * p.eta());

        let w = 0.1;
        let sc = osmium_oscillators(w)
            .with_quality_factor(1e6)
            .with_initial(InitialStateSpec::thermal(1.0));
        let p = build_oscillator_propagator(&sc).unwrap();
        let d = p.diffusion();
        assert_eq!(d[(0, 0)], 0.0);
        assert_eq!(d[(2, 2)], 0.0);
        assert_relative_eq!(d[(1, 1)], 3.0 * w * 1e-6, max_relative = 1e-14);
        assert_relative_eq!(d[(3, 3)], 3.0 * w * 1e-6, max_relative = 1e-14);
        assert_eq!(d[(1, 3)], 0.0);
        assert_relative_eq!(k[(1, 1)], 0.0);
        assert_relative_eq!(p.drift()[(1, 1)], -w * 1e-6, max_relative = 1e-14);
    }

    #[test]
    fn strong_coupling_rejected() {
        // η = 1.36e−6/ω² > 1 for ω = 1e−3.
        let err = build_oscillator_propagator(&osmium_oscillators(1e-3)).unwrap_err();
        assert!(matches!(err, Error::CouplingTooStrong { .. }));
    }

    #[test]
    fn released_matrices_and_guards() {
        let sc = released_osmium(0.0);
        let p = build_released_propagator(&sc).unwrap();
        let (w, e) = (1e5, p.eta());
        let k = p.drift();
        #[rustfmt::skip]
        let expected = Mat4::new(
            0.0, w, 0.0, 0.0,
            w * e, 0.0, -w * e, 0.0,
            0.0, 0.0, 0.0, w,
            -w * e, 0.0, w * e, 0.0,
        );
        assert_eq!(*k, expected);
        assert_eq!(*p.diffusion(), Mat4::zeros());
        let nu = sc.rates().nu;
        assert!(nu > 0.0 && nu.is_finite());
        assert_eq!(*p.drive(), Vec4::new(0.0, nu, 0.0, -nu));
        assert!(build_released_propagator(&sc.clone().with_gamma(1e-3)).is_err());
        assert!(matches!(
            build_released_propagator(&osmium_oscillators(0.1)),
            Err(Error::WrongSetup(_))
        ));

        // Mutual attraction: A is pushed towards +x, B towards −x.
        let u = propagate_mean(&p, &Vec4::zeros(), 1e-3).unwrap();
        assert!(u[1] > 0.0 && u[3] < 0.0);
        assert!(u[0] > 0.0 && u[2] < 0.0);
    }

    #[test]
    fn normal_modes_match_pade() {
        let cases = [
            build_oscillator_propagator(&osmium_oscillators(0.1)).unwrap(),
            build_released_propagator(
                &Scenario::new(Setup::Released, 1.0, 0.05, 0.1).with_initial(InitialStateSpec::ground()),
            )
            .unwrap(),
        ];
        for p in &cases {
            for &t in &[0.0, 0.3, 7.0, 40.0, 200.0] {
                let exact = p.transfer(t).unwrap();
                let pade = matrix_exponential(p.drift(), t).unwrap();
                assert!(
                    (exact - pade).amax() <= 1e-12 * exact.amax().max(1.0),
                    "t = {t}: {:e}",
                    (exact - pade).amax()
                );
            }
        }
    }

    #[test]
    fn released_relative_mode_grows_as_cosh() {
        // η ≈ 5e−3: visible instability within a few free-streaming times.
        let sc = Scenario::new(Setup::Released, 1.0, 0.05, 0.1);
        let p = build_released_propagator(&sc).unwrap();
        let rate = (2.0 * p.eta()).sqrt() * sc.omega;
        let t = 300.0;
        let w = p.transfer(t).unwrap();
        // X₋(t) for X₋(0) = 1, P₋(0) = 0.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x_rel = w * Vec4::new(h, 0.0, -h, 0.0);
        let x_minus = (x_rel[0] - x_rel[2]) * h;
        assert_relative_eq!(x_minus, (rate * t).cosh(), max_relative = 1e-12);
        let pade = matrix_exponential(p.drift(), t).unwrap() * Vec4::new(h, 0.0, -h, 0.0);
        assert_relative_eq!((pade[0] - pade[2]) * h, (rate * t).cosh(), max_relative = 1e-12);
    }

    #[test]
    fn drive_response_matches_quadrature() {
        for p in [
            build_oscillator_propagator(&osmium_oscillators(0.1)).unwrap(),
            build_released_propagator(&released_osmium(0.0)).unwrap(),
        ] {
            let t = 20.0 / p.omega();
            let analytic = p.drive_response(t).unwrap();
            let numeric = quadrature::integrate(|s| Ok(p.transfer(s)? * p.drive()), 0.0, t, 1e-20, 1e-13).unwrap();
            assert!((analytic - numeric).amax() <= 1e-10 * analytic.amax());
        }
    }

    #[test]
    fn zero_drive_zero_mean() {
        let p = build_oscillator_propagator(&osmium_oscillators(0.1)).unwrap().without_drive();
        for &t in &[0.0, 1.0, 1e3] {
            assert_eq!(propagate_mean(&p, &Vec4::zeros(), t).unwrap(), Vec4::zeros());
        }
    }

    #[test]
    fn covariance_basics() {
        let sc = osmium_oscillators(0.1).with_initial(InitialStateSpec::squeezed(0.0, 0.8));
        let p = build_oscillator_propagator(&sc).unwrap();
        let v0 = thermal_squeezed_covariance(&sc.initial).unwrap();
        assert_eq!(propagate_covariance(&p, &v0, 0.0).unwrap(), v0);
        assert!(propagate_covariance(&p, &v0, -1.0).is_err());

        // Without gravity each mode rotates rigidly.
        let free = build_oscillator_propagator(&sc.clone().with_constants(CODATA.with_overrides("G=0").unwrap()))
            .unwrap();
        let t = 7.3;
        let v = propagate_covariance(&free, &v0, t).unwrap();
        let (s, c) = (0.1 * t).sin_cos();
        let (x, pp) = (v0.as_matrix()[(0, 0)], v0.as_matrix()[(1, 1)]);
        assert_relative_eq!(v.as_matrix()[(0, 0)], c * c * x + s * s * pp, max_relative = 1e-12);
        assert!(v.as_matrix()[(0, 2)].abs() < 1e-15);
        assert_eq!(v.log_negativity().unwrap(), 0.0);
    }

    #[test]
    fn undamped_peak_law() {
        let sc = osmium_oscillators(0.1);
        let p = build_oscillator_propagator(&sc).unwrap();
        let eta = p.eta();
        let t_peak = PI / (2.0 * (1.0 - eta) * 0.1);
        let v = propagate_covariance(&p, &CovarianceMatrix::vacuum(), t_peak).unwrap();
        let nu = v.min_ptranspose_symplectic_eigenvalue().unwrap();
        assert!(nu < 0.5);
        assert_relative_eq!(v.log_negativity().unwrap(), eta / LN_2, max_relative = 1e-3);
        let nu_eig = v.min_ptranspose_symplectic_eigenvalue_eigen().unwrap();
        assert_relative_eq!(nu, nu_eig, max_relative = 1e-10);
    }

    #[test]
    fn undamped_flow_is_symplectic_and_composes() {
        let sc = osmium_oscillators(0.1).with_initial(InitialStateSpec { nbar: 0.7, s_a: 0.4, s_b: -0.9 });
        let p = build_oscillator_propagator(&sc).unwrap();
        let v0 = thermal_squeezed_covariance(&sc.initial).unwrap();
        let (t1, t2) = (13.0, 290.0);
        let v1 = propagate_covariance(&p, &v0, t1).unwrap();
        let v12 = propagate_covariance(&p, &v1, t2).unwrap();
        let direct = propagate_covariance(&p, &v0, t1 + t2).unwrap();
        assert!((v12.as_matrix() - direct.as_matrix()).amax() <= 1e-9 * direct.as_matrix().amax());
        assert_relative_eq!(direct.det(), v0.det(), max_relative = 1e-8);
    }

    #[test]
    fn drive_does_not_touch_covariance() {
        let sc = osmium_oscillators(0.1).with_quality_factor(1e3);
        let p = build_oscillator_propagator(&sc).unwrap();
        let v0 = CovarianceMatrix::vacuum();
        let a = propagate_covariance(&p, &v0, 30.0).unwrap();
        let b = propagate_covariance(&p.without_drive(), &v0, 30.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lyapunov_integration_matches_van_loan() {
        let sc = osmium_oscillators(0.1)
            .with_quality_factor(50.0)
            .with_initial(InitialStateSpec { nbar: 2.0, s_a: 1.0, s_b: 0.5 });
        let p = build_oscillator_propagator(&sc).unwrap();
        let v0 = thermal_squeezed_covariance(&sc.initial).unwrap();
        for &t in &[1.0, 30.0, 400.0] {
            let v = propagate_covariance(&p, &v0, t).unwrap();
            let exact = van_loan_covariance(&p, v0.as_matrix(), t);
            let err = (v.as_matrix() - exact).amax() / exact.amax();
            let budget = 1e-9 * (0.1 * t).max(1.0);
            assert!(err <= budget, "t = {t}: rel err {err:e} > {budget:e}");
        }
    }

    #[test]
    fn damped_states_stay_physical() {
        let sc = osmium_oscillators(0.1)
            .with_quality_factor(1e3)
            .with_initial(InitialStateSpec::squeezed(3.0, 1.73));
        let sim = Simulator::new(&sc).unwrap();
        let series = sim.trace(&linspace(0.0, 500.0, 60)).unwrap();
        assert!(series.is_complete());
        let p = sim.propagator();
        let v0 = thermal_squeezed_covariance(&sc.initial).unwrap();
        for s in &series.samples {
            let v = propagate_covariance(p, &v0, s.t).unwrap();
            let (nu, _) = v.symplectic_eigenvalues().unwrap();
            assert!(nu >= 0.5 - 1e-8);
        }
    }

    #[test]
    fn damped_mean_matches_augmented_exponential() {
        // ∫₀ᵗ e^{Kτ}κ dτ is the top-right column of exp([[K, κ], [0, 0]] t).
        let sc = osmium_oscillators(0.1).with_quality_factor(20.0);
        let p = build_oscillator_propagator(&sc).unwrap();
        let t = 90.0;
        let mut aug = SMatrix::<f64, 5, 5>::zeros();
        aug.fixed_view_mut::<4, 4>(0, 0).copy_from(p.drift());
        // Unit-norm drive keeps the augmented matrix well scaled.
        let scale = p.drive().amax();
        aug.fixed_view_mut::<4, 1>(0, 4).copy_from(&(p.drive() / scale));
        let e = matrix_exponential(&aug, t).unwrap();
        let u0 = Vec4::new(0.3, -0.1, 0.0, 0.2);
        let expected = e.fixed_view::<4, 4>(0, 0) * u0 + e.fixed_view::<4, 1>(0, 4) * scale;
        let got = propagate_mean(&p, &u0, t).unwrap();
        assert!((got - expected).amax() <= 1e-10 * expected.amax());
    }

    #[test]
    fn trace_validates_times() {
        let sim = Simulator::new(&released_osmium(0.0)).unwrap();
        assert!(sim.trace(&[1.0, 0.5]).is_err());
        assert!(sim.trace(&[-1.0]).is_err());
        assert!(sim.trace(&[]).unwrap().samples.is_empty());
    }

    #[test]
    fn released_crossings() {
        for &(nbar, expected) in &[(0.0, 0.8), (1.0, 4.5), (5.0, 7.5)] {
            let sim = Simulator::new(&released_osmium(nbar)).unwrap();
            let t = sim.crossing_time(0.01, &linspace(0.0, 12.0, 241)).unwrap().unwrap();
            assert!((t - expected).abs() <= 0.1 * expected, "n̄ = {nbar}: {t} vs {expected}");
        }
    }

    #[test]
    fn unsqueezed_pattern_period() {
        let sc = osmium_oscillators(0.1);
        let sim = Simulator::new(&sc).unwrap();
        let period = PI / ((1.0 - sim.propagator().eta()) * 0.1);
        assert!((period - 31.0).abs() < 0.5);
        for i in 0..20 {
            let t = 0.7 + 1.3 * i as f64;
            let a = sim.log_negativity_at(t).unwrap();
            let b = sim.log_negativity_at(t + period).unwrap();
            assert!((a - b).abs() <= 1e-3 * 1.96e-4, "t = {t}: {a} vs {b}");
        }
    }

    #[test]
    fn released_widths_follow_free_spreading() {
        let sim = Simulator::new(&released_osmium(0.0)).unwrap();
        let series = sim.trace(&linspace(0.0, 10.0, 21)).unwrap();
        for s in &series.samples {
            let free = crate::analytics::released_width(s.t, 1e-7, 1e5);
            assert!((s.width_a - free).abs() <= 0.01 * free);
            assert_relative_eq!(s.width_a, s.width_b, max_relative = 1e-12);
        }
        let r = sphere_radius(1e-7, OSMIUM_DENSITY);
        assert!((3.0 * r - 3.05e-4).abs() < 0.01e-4);
    }
}
