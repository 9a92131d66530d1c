use inertial::manifold::graph_split;
use inertial::nonlin::scalar::{cutoff, smoothstep, smoothstep9, smoothstep9_deriv};
use inertial::nonlin::{lipschitz_estimate, LipschitzSampler, NonlinearityModel};
use inertial::spaces::{energy_norm, weighted_l2_norm, weighted_sup_norm, EnergyVector, TimeGrid, WeightedSignal};
use inertial::spectrum::{characteristic_roots, gap_report, projector_coefficients, EigenvalueSequence};
use proptest::prelude::*;

fn sorted_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..5.0, 4..10).prop_map(|steps| {
        let mut acc = 0.0;
        steps
            .into_iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn roots_satisfy_vieta(lambda in 1e-3f64..1e3, eps in 1e-4f64..1.0) {
        let r = characteristic_roots(lambda, eps).unwrap();
        let sum = r.mu_plus + r.mu_minus;
        let prod = r.mu_plus * r.mu_minus;
        prop_assert!((sum.re + 1.0 / eps).abs() <= 1e-9 * (1.0 / eps));
        prop_assert!(sum.im.abs() <= 1e-9 * (1.0 / eps));
        prop_assert!((prod.re - lambda / eps).abs() <= 1e-9 * (lambda / eps));
        prop_assert!(r.mu_plus.re >= r.mu_minus.re);
        prop_assert!(r.mu_plus.re < 0.0);
        if r.is_real() {
            prop_assert_eq!(r.mu_plus.im, 0.0);
            prop_assert!(r.mu_plus.re >= -2.0 * lambda - 1e-12);
            prop_assert!(r.mu_plus.re <= -lambda);
        }
    }

    #[test]
    fn theta_brackets_the_gap(values in sorted_values(), n_frac in 0.0f64..1.0, eps_frac in 0.01f64..1.0) {
        let seq = EigenvalueSequence::from_values(values.clone()).unwrap();
        let n = 1 + ((values.len() - 1) as f64 * n_frac) as usize;
        let n = n.min(values.len() - 1);
        let eps = eps_frac / (3.0 * values[n] + values[n - 1]);
        let r = gap_report(&seq, n, eps, 1e-3).unwrap();
        prop_assert!(r.eps_ok);
        let theta = r.theta.unwrap();
        let mu_n = r.mu_plus_n.unwrap();
        prop_assert!(-mu_n < theta, "-mu_N {} theta {}", -mu_n, theta);
        prop_assert!(theta < -r.mu_plus_n1_re, "theta {} -Re mu_N+1 {}", theta, -r.mu_plus_n1_re);
        prop_assert!(theta < 1.0 / (2.0 * eps));
    }

    #[test]
    fn energy_norm_is_a_norm(
        u in prop::collection::vec(-10.0f64..10.0, 6),
        v in prop::collection::vec(-10.0f64..10.0, 6),
        w in prop::collection::vec(-10.0f64..10.0, 6),
        c in -5.0f64..5.0,
    ) {
        let seq = EigenvalueSequence::dirichlet(1.0, 6).unwrap();
        let x = EnergyVector::new(u.clone(), v.clone(), 0.05).unwrap();
        let y = EnergyVector::new(w.clone(), u.clone(), 0.05).unwrap();
        let nx = energy_norm(&x, &seq).unwrap();
        let ny = energy_norm(&y, &seq).unwrap();
        let nsum = energy_norm(&x.add(&y), &seq).unwrap();
        prop_assert!(nsum <= nx + ny + 1e-12 * (nx + ny));
        let cx = EnergyVector::new(
            u.iter().map(|a| c * a).collect(),
            v.iter().map(|a| c * a).collect(),
            0.05,
        ).unwrap();
        let ncx = energy_norm(&cx, &seq).unwrap();
        prop_assert!((ncx - c.abs() * nx).abs() <= 1e-12 * (1.0 + nx * c.abs()));
        prop_assert_eq!(energy_norm(&x.sub(&x), &seq).unwrap(), 0.0);
    }

    #[test]
    fn weighted_norms_scale_and_order(a in -3.0f64..3.0, b in -3.0f64..3.0, theta in 0.1f64..3.0, c in -4.0f64..4.0) {
        let seq = EigenvalueSequence::dirichlet(1.0, 3).unwrap();
        let grid = TimeGrid::new(-4.0, 0.0, 400).unwrap();
        let f = WeightedSignal::from_fn(grid.clone(), 3, |k, t| (a * (k as f64 + 1.0) * t).sin() + b * t);
        let g = WeightedSignal::from_fn(grid, 3, |k, t| (b * t).cos() * (k as f64));
        let nf = weighted_l2_norm(&f, theta, 0.0, &seq).unwrap();
        let ng = weighted_l2_norm(&g, theta, 0.0, &seq).unwrap();
        let nfg = weighted_l2_norm(&f.add(&g).unwrap(), theta, 0.0, &seq).unwrap();
        prop_assert!(nfg <= nf + ng + 1e-12 * (1.0 + nf + ng));
        let ncf = weighted_l2_norm(&f.scaled(c), theta, 0.0, &seq).unwrap();
        prop_assert!((ncf - c.abs() * nf).abs() <= 1e-12 * (1.0 + nf));
        // H^1 dominates L^2 once lambda_1 >= 1.
        let nf1 = weighted_l2_norm(&f, theta, 1.0, &seq).unwrap();
        prop_assert!(nf1 >= nf * (1.0 - 1e-12));
        let sf = weighted_sup_norm(&f, theta, 0.0, &seq).unwrap();
        let sfc = weighted_sup_norm(&f.scaled(c), theta, 0.0, &seq).unwrap();
        prop_assert!((sfc - c.abs() * sf).abs() <= 1e-12 * (1.0 + sf));
    }

    #[test]
    fn projector_selects_slow_amplitude(
        p in prop::collection::vec(-5.0f64..5.0, 3),
        q in prop::collection::vec(-5.0f64..5.0, 3),
        eps in 1e-4f64..2.5e-3,
    ) {
        // u_k = p_k + q_k, v_k = mu+ p_k + mu- q_k: the projector returns p.
        let seq = EigenvalueSequence::dirichlet(1.0, 3).unwrap();
        let proj = projector_coefficients(&seq, 3, eps).unwrap();
        let mut u = vec![0.0; 3];
        let mut v = vec![0.0; 3];
        for k in 0..3 {
            let r = characteristic_roots(seq.lambda(k + 1), eps).unwrap();
            u[k] = p[k] + q[k];
            v[k] = r.mu_plus.re * p[k] + r.mu_minus.re * q[k];
        }
        let got = proj.apply(&u, &v);
        for k in 0..3 {
            prop_assert!((got[k] - p[k]).abs() <= 1e-9 * (1.0 + p[k].abs() + q[k].abs()));
        }
    }

    #[test]
    fn graph_split_is_a_projection(
        u in prop::collection::vec(-5.0f64..5.0, 5),
        v in prop::collection::vec(-50.0f64..50.0, 5),
        n in 1usize..4,
    ) {
        let seq = EigenvalueSequence::dirichlet(1.0, 5).unwrap();
        let eps = 0.002;
        let xi = EnergyVector::new(u.clone(), v.clone(), eps).unwrap();
        let (plus, minus) = graph_split(&xi, &seq, n, eps).unwrap();
        let sum = plus.add(&minus);
        for k in 0..5 {
            prop_assert!((sum.u[k] - u[k]).abs() <= 1e-12 * (1.0 + u[k].abs()));
            prop_assert!((sum.v[k] - v[k]).abs() <= 1e-12 * (1.0 + v[k].abs()));
        }
        let (pp, pm) = graph_split(&plus, &seq, n, eps).unwrap();
        let scale = 1.0 + energy_norm(&plus, &seq).unwrap();
        prop_assert!(energy_norm(&pp.sub(&plus), &seq).unwrap() <= 1e-10 * scale);
        prop_assert!(energy_norm(&pm, &seq).unwrap() <= 1e-10 * scale);
        let (mp, _) = graph_split(&minus, &seq, n, eps).unwrap();
        let scale = 1.0 + energy_norm(&minus, &seq).unwrap();
        prop_assert!(energy_norm(&mp, &seq).unwrap() <= 1e-10 * scale);
        for k in n..5 {
            prop_assert_eq!(plus.u[k], 0.0);
            prop_assert_eq!(plus.v[k], 0.0);
        }
    }

    #[test]
    fn smoothsteps_are_monotone_and_symmetric(s in -0.5f64..1.5, t in -0.5f64..1.5) {
        for f in [smoothstep as fn(f64) -> f64, smoothstep9] {
            let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
            prop_assert!(f(lo) <= f(hi) + 1e-15);
            prop_assert!((0.0..=1.0).contains(&f(s)));
            let c = s.clamp(0.0, 1.0);
            prop_assert!((f(c) + f(1.0 - c) - 1.0).abs() <= 1e-12);
        }
        prop_assert!(smoothstep9_deriv(s) >= 0.0);
        prop_assert!((0.0..=1.0).contains(&cutoff(s)));
        if s <= 0.0 {
            prop_assert_eq!(cutoff(s), 1.0);
        }
        if s >= 0.5 {
            prop_assert_eq!(cutoff(s), 0.0);
        }
    }

    #[test]
    fn diagonal_lipschitz_estimate_is_sharp(c in prop::collection::vec(-3.0f64..3.0, 4), seed in 0u64..1000) {
        let f = NonlinearityModel::diagonal_linear(c.clone());
        let est = lipschitz_estimate(&f, &LipschitzSampler::new(60, 2.0, seed));
        let exact = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        // Difference quotients with steps near 1e-3 of the base point lose about 1e-13.
        prop_assert!(est.value <= exact * (1.0 + 1e-10) + 1e-15, "{} vs {}", est.value, exact);
        // Single-coordinate pairs hit every diagonal entry.
        prop_assert!(est.value >= exact * (1.0 - 1e-9));
        prop_assert!((f.declared_l() - exact).abs() <= 1e-15);
    }
}
