use levy_expfunc::analysis::{empirical_cdf, ks_two_sample, real, CheckReport};
use levy_expfunc::cli::{parse_config, Report};
use levy_expfunc::expfunc::{trapezoid_exp, FunctionalSampler, FunctionalVariant};
use levy_expfunc::levy_model::{
    brownian_laplace_ref, exponent_summary, first_passage_prob, inverse_exponent, poisson_log_laplace_ref, psi,
    psi_conditioned, ProcessSpec,
};
use levy_expfunc::path_sim::RngStream;
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = ProcessSpec> {
    prop_oneof![
        (0.2f64..4.0, -2.0f64..2.0).prop_map(|(q, g)| ProcessSpec::brownian(q, g).unwrap()),
        (0.2f64..3.0, 1.1f64..1.95, -1.0f64..1.0).prop_map(|(c, a, d)| ProcessSpec::stable(c, a, d).unwrap()),
        (0.5f64..3.0, 0.1f64..2.0, 0.1f64..2.0).prop_map(|(g, r, m)| ProcessSpec::bv_drift_cpp(g, r, m).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponent_is_convex_and_vanishes_at_kappa(spec in spec_strategy(), a in 0.0f64..5.0, b in 0.0f64..5.0) {
        prop_assert_eq!(psi(&spec, 0.0).unwrap(), 0.0);
        let mid = psi(&spec, 0.5 * (a + b)).unwrap();
        let chord = 0.5 * (psi(&spec, a).unwrap() + psi(&spec, b).unwrap());
        prop_assert!(mid <= chord + 1e-9 * chord.abs().max(1.0));
        let s = exponent_summary(&spec).unwrap();
        prop_assert!(psi(&spec, s.kappa).unwrap().abs() <= 1e-9 * (1.0 + s.kappa));
        prop_assert!(s.psi_at_kappa_plus_1 > 0.0);
    }

    #[test]
    fn inverse_exponent_inverts(spec in spec_strategy(), log_x in -3.0f64..6.0) {
        let x = 10f64.powf(log_x);
        let back = psi_conditioned(&spec, inverse_exponent(&spec, x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 1e-9 * x, "{back} vs {x}");
    }

    #[test]
    fn exit_probability_is_monotone(spec in spec_strategy(), x in 0.05f64..2.0, gap in 0.05f64..2.0) {
        let p1 = first_passage_prob(&spec, x, x + gap).unwrap();
        let p2 = first_passage_prob(&spec, x, x + 2.0 * gap).unwrap();
        prop_assert!(p1 > 0.0 && p1 <= 1.0);
        prop_assert!(p2 <= p1 * (1.0 + 1e-9));
    }

    #[test]
    fn brownian_laplace_is_a_decreasing_transform(kappa in 0.0f64..4.0, l in 0.0f64..20.0) {
        let a = brownian_laplace_ref(kappa, l).unwrap();
        let b = brownian_laplace_ref(kappa, l + 0.5).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0 && b < a);
    }

    #[test]
    fn poisson_log_laplace_increases(alpha in 0.2f64..3.0, p in 0.2f64..3.0, l in 0.0f64..1e3) {
        let a = poisson_log_laplace_ref(alpha, p, l).unwrap().value;
        let b = poisson_log_laplace_ref(alpha, p, l * 2.0 + 1.0).unwrap().value;
        prop_assert!(a >= 0.0 && b > a);
    }

    #[test]
    fn shifting_a_path_scales_its_integral(values in prop::collection::vec(-3.0f64..3.0, 2..200), c in -2.0f64..2.0) {
        let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
        let (a, b) = (trapezoid_exp(&values, 0.01), trapezoid_exp(&shifted, 0.01));
        prop_assert!((b - (-c).exp() * a).abs() <= 1e-12 * b.abs().max(1e-300));
    }

    #[test]
    fn streams_are_deterministic(seed: u64, id: u64, tag in 1u64..1000) {
        let mut a = RngStream::new(seed, id).rng();
        let mut b = RngStream::new(seed, id).rng();
        let mut c = RngStream::new(seed, id).derive(tag).rng();
        let (x, y, z) = (a.uniform(), b.uniform(), c.uniform());
        prop_assert_eq!(x, y);
        prop_assert_ne!(x, z);
    }

    #[test]
    fn ecdf_is_a_distribution_function(samples in prop::collection::vec(-10.0f64..10.0, 100..400), x in -12.0f64..12.0, dx in 0.0f64..3.0) {
        let band = empirical_cdf(&samples).unwrap();
        let (f, g) = (band.cdf(x), band.cdf(x + dx));
        prop_assert!((0.0..=1.0).contains(&f) && f <= g);
        prop_assert!(band.lower(x, 0.05) <= f && f <= band.upper(x, 0.05));
        let (d, p) = ks_two_sample(&samples, &samples).unwrap();
        prop_assert_eq!(d, 0.0);
        prop_assert!(p > 0.99);
    }

    #[test]
    fn reals_round_trip(bits: u64) {
        let x = f64::from_bits(bits);
        let back = real::from_value(&real::to_value(x)).unwrap();
        prop_assert!(back == x || (x.is_nan() && back.is_nan()));
    }

    #[test]
    fn reports_round_trip(stat in prop::num::f64::ANY, thr in -1e6f64..1e6, pass: bool, extra in prop::num::f64::NORMAL) {
        prop_assume!(!stat.is_nan());
        let mut c = CheckReport::new("c", stat, thr, pass, "law");
        c.insert("extra", extra);
        let r = Report::new("suite", serde_json::json!({"seed": 1}), vec![c]);
        let back: Report = serde_json::from_str(&r.to_json_pretty()).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn config_echo_parses_back(seed: u64, y in 0.1f64..50.0, dt in 1e-4f64..0.1, n in 1u64..1_000_000, workers in 0usize..16) {
        let text = format!(
            r#"{{"process":{{"kind":"stable_sn","c":1,"alpha":1.5,"drift":0.2}},"seed":{seed},"y":{y},"dt":{dt},"n":{n},"workers":{workers},"variant":"I_V_up"}}"#
        );
        let cfg = parse_config(&text).unwrap();
        let again = parse_config(&cfg.echo().to_string()).unwrap();
        prop_assert_eq!(again.echo(), cfg.echo());
        prop_assert_eq!(again.workers, 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn samples_do_not_depend_on_workers(seed: u64, workers in 2usize..5) {
        let spec = ProcessSpec::brownian_kappa(1.0).unwrap();
        let s = FunctionalSampler::new(&spec, FunctionalVariant::I_V_up, 2.0, 0.02).unwrap();
        let a = s.sample_many(24, seed, 1).unwrap();
        let b = s.sample_many(24, seed, workers).unwrap();
        prop_assert_eq!(a, b);
    }
}
