use dicke::meanfield::{
    coeff_a, coeff_c, critical_beta_closed, critical_beta_numeric, criticality_condition, denominator_dipole,
    denominator_full_dicke, gapped_mode_energy, spectrum_equation, CriticalBeta, CriticalMode,
};
use dicke::{ModelParams, Temperature};
use num_complex::Complex64;
use proptest::prelude::*;

/// Parameter sets with a finite critical temperature, kept away from the
/// quantum critical point (artanh argument at most 0.99).
fn finite_transition() -> impl Strategy<Value = ModelParams> {
    (0.2f64..5.0, 0.2f64..5.0, 0.0f64..1.0, 0.01f64..0.99).prop_map(|(omega0, omega, share, arg)| {
        let g = (omega0 * omega / arg).sqrt();
        ModelParams::new(omega0, omega, g * share, g * (1.0 - share))
    })
}

fn any_params() -> impl Strategy<Value = ModelParams> {
    (0.2f64..5.0, 0.2f64..5.0, 0.0f64..3.0, 0.0f64..3.0, 0.05f64..20.0)
        .prop_map(|(w0, w, g1, g2, beta)| ModelParams::new(w0, w, g1, g2).with_beta(beta))
}

proptest! {
    #[test]
    fn numeric_critical_beta_matches_closed_form(p in finite_transition()) {
        let closed = critical_beta_closed(&p, CriticalMode::General).beta_c.finite().unwrap();
        let numeric = critical_beta_numeric(&p).unwrap().beta_c.finite().unwrap();
        prop_assert!((numeric - closed).abs() <= 1e-10 * closed, "{numeric} vs {closed}");
        let residual = criticality_condition(&p, Temperature::Beta(closed)).unwrap();
        prop_assert!(residual.abs() < 1e-12);
    }

    #[test]
    fn no_transition_below_threshold(w0 in 0.2f64..5.0, w in 0.2f64..5.0, share in 0.0f64..1.0, arg in 1.01f64..50.0) {
        let g = (w0 * w / arg).sqrt();
        let p = ModelParams::new(w0, w, g * share, g * (1.0 - share));
        prop_assert_eq!(critical_beta_closed(&p, CriticalMode::General).beta_c, CriticalBeta::NoTransition);
        prop_assert_eq!(critical_beta_numeric(&p).unwrap().beta_c, CriticalBeta::NoTransition);
    }

    #[test]
    fn dipole_strength_never_changes_mean_field_outputs(p in any_params(), lambda in -5.0f64..5.0, w in -10.0f64..10.0) {
        let q = p.with_lambda(lambda);
        let z = Complex64::new(w, 0.0);
        prop_assert_eq!(coeff_a(&p, z).unwrap().value, coeff_a(&q, z).unwrap().value);
        prop_assert_eq!(coeff_c(&p, z).unwrap().value, coeff_c(&q, z).unwrap().value);
        prop_assert_eq!(denominator_dipole(&p, z).unwrap(), denominator_dipole(&q, z).unwrap());
        let cp = critical_beta_closed(&p, CriticalMode::General);
        let cq = critical_beta_closed(&q, CriticalMode::General);
        prop_assert_eq!(cp, cq);
    }

    #[test]
    fn denominator_is_even_and_models_agree(p in any_params(), w in 0.01f64..30.0) {
        let plus = denominator_full_dicke(&p, Complex64::new(w, 0.0)).unwrap();
        let minus = denominator_full_dicke(&p, Complex64::new(-w, 0.0)).unwrap();
        prop_assert!((plus - minus).norm() <= 1e-14 * plus.norm().max(1.0));
        prop_assert!(plus.im.abs() <= 1e-14 * plus.norm().max(1.0));
        let dip = denominator_dipole(&p, Complex64::new(w, 0.0)).unwrap();
        prop_assert!((plus - dip).norm() <= 1e-12 * plus.norm().max(1.0));
    }

    #[test]
    fn spectrum_equation_is_even(p in any_params(), e in 0.0f64..20.0) {
        prop_assume!((e - p.omega0).abs() > 1e-3 && (e - p.omega).abs() > 1e-3);
        let t = p.temperature;
        let plus = spectrum_equation(&p, e, t).unwrap();
        let minus = spectrum_equation(&p, -e, t).unwrap();
        prop_assert!((plus - minus).abs() <= 1e-12 * plus.abs().max(1.0));
    }

    #[test]
    fn gapped_mode_solves_the_critical_spectrum(p in finite_transition()) {
        let beta = critical_beta_closed(&p, CriticalMode::General).beta_c.finite().unwrap();
        let e2 = gapped_mode_energy(&p).unwrap();
        prop_assume!((e2 - p.omega0).abs() > 1e-3 && (e2 - p.omega).abs() > 1e-3);
        let r = spectrum_equation(&p, e2, Temperature::Beta(beta)).unwrap();
        prop_assert!(r.abs() < 1e-8, "residual {r} at E₂ = {e2}");
        let r0 = spectrum_equation(&p, 0.0, Temperature::Beta(beta)).unwrap();
        prop_assert!(r0.abs() < 1e-10);
    }
}
