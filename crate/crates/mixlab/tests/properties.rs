//! Property tests over seeded random instances: probability-mass
//! conservation, stationarity aggregation under lumping, and the
//! discrete/continuous two-speed identity.

use proptest::prelude::*;

use mixlab::chain::{build_chain, heat_kernel_row, Distribution};
use mixlab::constructions::{random_connected_network, random_partition};
use mixlab::distances::{evolve, tv_distance};
use mixlab::hitting::hitting_pmf;
use mixlab::transforms::lump;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hitting_pmf_conserves_mass(
        n in 3usize..12,
        extra in 0usize..5,
        seed in any::<u64>(),
        start in 0usize..12,
        target in 0usize..12,
        horizon in 0usize..80,
    ) {
        let net = random_connected_network(n, extra, 0.5, 2.0, seed).unwrap();
        let chain = build_chain(&net, 0.5).unwrap();
        let start = start % n;
        let target = target % n;
        let pmf = hitting_pmf(&chain, start, &[target], horizon).unwrap();
        prop_assert!(pmf.masses.iter().all(|&m| m >= 0.0));
        prop_assert!(pmf.residual >= -1e-15);
        prop_assert!((pmf.total_mass() + pmf.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lumped_stationary_aggregates(
        n in 4usize..20,
        extra in 1usize..6,
        k in 2usize..6,
        seed in any::<u64>(),
    ) {
        let net = random_connected_network(n, extra, 0.5, 3.0, seed).unwrap();
        let k = k.min(n);
        let part = random_partition(&net, k, seed ^ 0xabcd);
        let out = lump(&net, &part).unwrap();
        let pi = net.stationary();
        let pi_hat = out.network.stationary();
        for (b, block) in part.blocks.iter().enumerate() {
            let direct: f64 = block
                .iter()
                .map(|id| pi[net.index_of(id).unwrap()])
                .sum();
            let via_block = pi_hat[out.network.index_of(&out.block_names[b]).unwrap()];
            prop_assert!((direct - via_block).abs() < 1e-12);
        }
    }

    #[test]
    fn evolution_preserves_mass_and_tv_range(
        n in 3usize..10,
        seed in any::<u64>(),
        t in 0usize..50,
        holding in 0.0f64..0.9,
    ) {
        let net = random_connected_network(n, 2, 0.5, 2.0, seed).unwrap();
        let chain = build_chain(&net, holding).unwrap();
        let start = Distribution::point_mass(n, seed as usize % n);
        let evolved = evolve(&chain, &start, t).unwrap();
        prop_assert!((evolved.total_mass() - 1.0).abs() < 1e-12 * (t as f64 + 1.0));
        let pi = Distribution(chain.stationary().to_vec());
        let tv = tv_distance(&evolved, &pi).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&tv));
    }

    #[test]
    fn heat_kernel_two_speed_identity(
        n in 3usize..8,
        seed in any::<u64>(),
        t in 0.05f64..4.0,
    ) {
        let net = random_connected_network(n, 2, 0.5, 2.0, seed).unwrap();
        let p = build_chain(&net, 0.0).unwrap();
        let pl = build_chain(&net, 0.5).unwrap();
        let tol = 1e-10;
        let h = heat_kernel_row(&p, 0, t, tol).unwrap();
        let hl = heat_kernel_row(&pl, 0, 2.0 * t, tol).unwrap();
        for (a, b) in h.0.iter().zip(&hl.0) {
            prop_assert!((a - b).abs() < 2.0 * tol);
        }
    }
}
