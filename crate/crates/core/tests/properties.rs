use proptest::prelude::*;

use uwarma::dist::UwParams;
use uwarma::model::{filter_series, simulate, ModelSpec, ParamVector, SimOptions};
use uwarma::Link;

fn link() -> impl Strategy<Value = Link> {
    prop::sample::select(Link::ALL.to_vec())
}

proptest! {
    #[test]
    fn rho_quantile_is_mu(mu in 0.001..0.999f64, lambda in 0.1..100.0f64, rho in 0.01..0.99f64) {
        let d = UwParams::new(mu, lambda, rho).unwrap();
        prop_assert_eq!(d.quantile(rho).unwrap(), mu);
    }

    #[test]
    fn cdf_inverts_quantile(mu in 0.01..0.99f64, lambda in 0.3..50.0f64, rho in 0.05..0.95f64, u in 0.001..0.999f64) {
        let d = UwParams::new(mu, lambda, rho).unwrap();
        let y = d.quantile(u).unwrap();
        prop_assert!(y > 0.0 && y < 1.0);
        prop_assert!((d.cdf(y).unwrap() - u).abs() < 1e-12);
    }

    #[test]
    fn cdf_is_increasing(mu in 0.01..0.99f64, lambda in 0.3..50.0f64, rho in 0.05..0.95f64, a in 0.01..0.98f64, gap in 1e-3..0.01f64) {
        let d = UwParams::new(mu, lambda, rho).unwrap();
        let (lo, hi) = (d.cdf(a).unwrap(), d.cdf(a + gap).unwrap());
        prop_assert!(lo <= hi);
        // near 0 and 1 neighbouring values can round to the same double
        prop_assert!(lo < hi || lo < 1e-300 || hi > 1.0 - 1e-12);
    }

    #[test]
    fn links_invert_and_increase(l in link(), mu in 1e-6..(1.0 - 1e-6f64), step in 1e-4..0.1f64) {
        prop_assert!((l.inverse(l.apply(mu)) - mu).abs() < 1e-12);
        let up = (mu + step).min(1.0 - 1e-6);
        if up > mu {
            prop_assert!(l.apply(up) > l.apply(mu));
        }
    }

    #[test]
    fn simulated_series_lie_in_the_unit_interval_and_refilter_identically(
        l in link(),
        rho in 0.1..0.9f64,
        phi in -0.8..0.8f64,
        theta in -0.5..0.5f64,
        lambda in 1.0..30.0f64,
        seed in any::<u64>(),
    ) {
        let spec = ModelSpec::new(1, 1, rho, l, 0).unwrap();
        let gamma = ParamVector::new(0.1, vec![], vec![phi], vec![theta], lambda).unwrap();
        let sim = simulate(&spec, &gamma, None, 200, &SimOptions { burnin: 0, seed, ..Default::default() }).unwrap();
        prop_assert!(sim.data.y.iter().all(|&y| y > 0.0 && y < 1.0));
        let a = filter_series(&spec, &gamma, &sim.data).unwrap();
        let b = filter_series(&spec, &gamma, &sim.data).unwrap();
        prop_assert_eq!(&a.mu, &b.mu);
        prop_assert_eq!(&a.mu, &sim.mu);
    }
}
