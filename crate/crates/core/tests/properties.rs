use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use zeta_recurrence::complexfn::{build_domain, log_branch, Polynomial, TargetFn, TargetPair};
use zeta_recurrence::dioph::{dist_to_int, scan_tau, verify_phases, PhaseTarget};
use zeta_recurrence::eulerfit::{greedy_fit, FitConfig};
use zeta_recurrence::primes::first_primes;
use zeta_recurrence::zetaeval::{euler_product, zeta, PhaseAssignment};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn zeta_within_its_bound_on_oracle_rows() {
    let text = [include_str!("data/zeta_oracle.txt"), include_str!("data/zeta_oracle_high.txt")].concat();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let v: Vec<f64> = line.split_whitespace().map(|x| x.parse().unwrap()).collect();
        let z = zeta(c(v[0], v[1]), 1e-10).unwrap();
        let reference = c(v[2], v[3]);
        // the table carries 16 significant digits
        let rounding = 1e-15 * reference.norm();
        assert!((z.value - reference).norm() <= z.error_bound + rounding, "{line}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zeta_schwarz_reflection(sigma in 0.55f64..0.98, t in -2e4f64..2e4) {
        let z = zeta(c(sigma, t), 1e-11).unwrap();
        let w = zeta(c(sigma, -t), 1e-11).unwrap();
        prop_assert!((z.value - w.value.conj()).norm() < 1e-12);
    }

    #[test]
    fn euler_product_reflection_and_bounds(
        ks in proptest::collection::vec(0i64..24, 1..10),
        sigma in 0.55f64..1.5,
        t in -1e3f64..1e3,
    ) {
        let ph = PhaseAssignment::new(first_primes(ks.len()), ks, 24).unwrap();
        let s = c(sigma, t);
        let v = euler_product(s, &ph).unwrap();
        let w = euler_product(s.conj(), &ph.negated()).unwrap();
        prop_assert!((v - w.conj()).norm() <= 1e-12 * v.norm().max(1.0));
        let (lo, hi) = ph.primes().iter().fold((1.0, 1.0), |(lo, hi), &p| {
            let x = (p as f64).powf(-sigma);
            (lo / (1.0 + x), hi / (1.0 - x))
        });
        prop_assert!(v.norm() > 0.0);
        prop_assert!(v.norm() >= lo * (1.0 - 1e-12) && v.norm() <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn log_branch_inverts_exp(
        re in proptest::collection::vec(-3.0f64..3.0, 3),
        im in proptest::collection::vec(-3.0f64..3.0, 3),
    ) {
        let d = build_domain(0.6, 0.9, -0.4, 0.4, 10).unwrap();
        let g = Polynomial { center: d.k_centroid(), scale: 1.0, coeffs: (0..3).map(|i| c(re[i], im[i])).collect() };
        let samples: Vec<Complex64> = d.grid_nodes.iter().map(|&s| g.eval(s).exp()).collect();
        let logs = log_branch(&d, &samples).unwrap();
        let shift = logs[0] - g.eval(d.grid_nodes[0]);
        let turns = shift.im / (2.0 * PI);
        prop_assert!(shift.re.abs() < 1e-12 && (turns - turns.round()).abs() < 1e-12);
        for (l, &s) in logs.iter().zip(&d.grid_nodes) {
            prop_assert!((l - g.eval(s) - shift).norm() < 1e-11);
        }
    }

    #[test]
    fn midpoint_rule_exact_on_bilinear(a in -5.0f64..5.0, b in -5.0f64..5.0, e in -5.0f64..5.0, f in -5.0f64..5.0) {
        let d = build_domain(0.6, 0.9, -0.3, 0.5, 7).unwrap();
        let vals: Vec<Complex64> =
            d.grid_nodes.iter().map(|s| c(a + b * s.re + e * s.im + f * s.re * s.im, 0.0)).collect();
        let got = d.integrate(&vals).unwrap().re;
        let (x0, x1, y0, y1) = (d.u_sigma_lo, d.u_sigma_hi, d.u_t_lo, d.u_t_hi);
        let ix = |p: i32| (x1.powi(p + 1) - x0.powi(p + 1)) / (p + 1) as f64;
        let iy = |p: i32| (y1.powi(p + 1) - y0.powi(p + 1)) / (p + 1) as f64;
        let exact = a * ix(0) * iy(0) + b * ix(1) * iy(0) + e * ix(0) * iy(1) + f * ix(1) * iy(1);
        prop_assert!((got - exact).abs() < 1e-10);
    }

    #[test]
    fn distance_to_nearest_integer(x in -1e6f64..1e6, n in -1000i32..1000) {
        let dx = dist_to_int(x);
        prop_assert!((0.0..=0.5).contains(&dx));
        prop_assert_eq!(dx, dist_to_int(-x));
        prop_assert!((dx - dist_to_int(x + n as f64)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scan_candidates_verify(
        theta in proptest::collection::vec(0.0f64..1.0, 1..4),
        delta in 0.02f64..0.2,
    ) {
        let t = PhaseTarget::new(first_primes(theta.len()), theta, delta).unwrap();
        let step = t.max_step();
        let s = scan_tau(&t, 2000.0, step).unwrap();
        prop_assert_eq!(s.hits as usize, s.candidates.len());
        for cand in &s.candidates {
            let v = verify_phases(cand.tau, &t).unwrap();
            prop_assert!(v.pass);
            prop_assert_eq!(&v.deviations, &cand.deviations);
        }
    }

    #[test]
    fn fitted_phases_are_coherent_across_scales(re in 0.5f64..2.0, im in -1.0f64..1.0, b in 2i64..4) {
        let d = build_domain(0.72, 0.78, -0.05, 0.05, 8).unwrap();
        let t = TargetPair::new(&d, 1, b, TargetFn::constant(c(re, im)), TargetFn::constant(c(1.0, 0.0))).unwrap();
        let cfg = FitConfig { l: 8, y: 5.0, max_primes: 30, epsilon_fit: 1e-3, sweeps: 2 };
        let st = greedy_fit(&t, &d, &cfg).unwrap();
        prop_assert_eq!(st.phases.denominator(), 8);
        prop_assert!(st.phases.numerators().iter().all(|&k| k < 8));
        let (ra, rb) = st.recompute_residuals(&t, &d).unwrap();
        for i in 0..d.len() {
            prop_assert!((ra[i] - st.residual_a[i]).norm() < 1e-10);
            prop_assert!((rb[i] - st.residual_b[i]).norm() < 1e-10);
        }
        let again = greedy_fit(&t, &d, &cfg).unwrap();
        prop_assert_eq!(again.history, st.history);
    }
}
