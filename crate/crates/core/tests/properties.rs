use proptest::prelude::*;

use turbo_fourier::boolfn::{energy_profile, wht_forward, wht_inverse, FourierSpectrum, PseudoBooleanTable, SubsetMask};
use turbo_fourier::channel::DiscreteChannel;
use turbo_fourier::codec::{
    analytic_power, bcjr_constituent, brute_force_map, constrain_power, encode, Codeword, Interleaver, Trellis,
    TurboEncoderParams,
};
use turbo_fourier::metrics::{check_two_sided_bound, exact_discrete_bce_ber, h2, SmallEncoder};

fn table(max_w: usize) -> impl Strategy<Value = PseudoBooleanTable> {
    (1..=max_w).prop_flat_map(|w| {
        prop::collection::vec(-4.0f64..4.0, 1 << w).prop_map(move |v| PseudoBooleanTable::new(w, v).unwrap())
    })
}

fn params(w: usize) -> impl Strategy<Value = TurboEncoderParams> {
    prop::collection::vec(-2.0f64..2.0, 3 << w).prop_map(move |v| TurboEncoderParams::from_flat_entries(w, &v).unwrap())
}

fn permutation(k: usize) -> impl Strategy<Value = Interleaver> {
    Just((0..k).collect::<Vec<usize>>()).prop_shuffle().prop_map(|p| Interleaver::new(p).unwrap())
}

/// Column-stochastic matrix with `outputs` rows and `inputs` columns.
fn channel(inputs: usize, outputs: usize) -> impl Strategy<Value = DiscreteChannel> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, outputs), inputs).prop_map(move |cols| {
        let mut m = vec![vec![0.0; inputs]; outputs];
        for (x, col) in cols.iter().enumerate() {
            let s: f64 = col.iter().sum::<f64>() + 1e-9;
            let mut acc = 0.0;
            for y in 0..outputs - 1 {
                m[y][x] = (col[y] + 1e-9 / outputs as f64) / s;
                acc += m[y][x];
            }
            m[outputs - 1][x] = 1.0 - acc;
        }
        DiscreteChannel::new(m).unwrap()
    })
}

proptest! {
    #[test]
    fn wht_round_trip(t in table(8)) {
        let back = wht_inverse(&wht_forward(&t));
        for (a, b) in back.values().iter().zip(t.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * 4.0);
        }
    }

    #[test]
    fn parseval(t in table(8)) {
        let s = wht_forward(&t);
        prop_assert!((s.energy() - t.mean_square()).abs() <= 1e-12 * t.mean_square().max(1.0));
    }

    #[test]
    fn parity_has_single_coefficient(w in 1usize..8, m in any::<u16>()) {
        let mask = SubsetMask((m as u128) & ((1 << w) - 1));
        let s = wht_forward(&PseudoBooleanTable::parity(w, mask).unwrap());
        let supp = s.support(1e-12);
        prop_assert_eq!(supp.len(), 1);
        prop_assert_eq!(supp[0].0, mask);
        prop_assert!((supp[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_profile_is_minimal_prefix(t in table(6), frac in 0.05f64..1.0) {
        let s = wht_forward(&t);
        prop_assume!(s.energy() > 1e-9);
        let prof = energy_profile(&s, frac).unwrap();
        let e: f64 = prof.iter().map(|(_, w)| w).sum();
        prop_assert!(e >= frac * s.energy() * (1.0 - 1e-12));
        let without_last: f64 = prof[..prof.len() - 1].iter().map(|(_, w)| w).sum();
        prop_assert!(without_last < frac * s.energy());
        for w in prof.windows(2) {
            prop_assert!(w[0].1 >= w[1].1);
        }
    }

    #[test]
    fn spectrum_combination_is_linear(a in table(5), b in -2.0f64..2.0) {
        let s = wht_forward(&a);
        let twice = s.combine(b, &s, b).unwrap();
        let direct = wht_forward(&PseudoBooleanTable::new(a.arity(), a.values().iter().map(|v| 2.0 * b * v).collect()).unwrap());
        for (x, y) in twice.coeffs().iter().zip(direct.coeffs()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!(FourierSpectrum::new(a.arity(), s.coeffs().to_vec()).is_ok());
    }

    #[test]
    fn interleaver_round_trip(il in (1usize..64).prop_flat_map(permutation), seed in any::<u64>()) {
        let x: Vec<u64> = (0..il.len() as u64).map(|i| i.wrapping_mul(seed | 1)).collect();
        prop_assert_eq!(il.deinterleave(&il.interleave(&x)), x);
        for i in 0..il.len() {
            prop_assert_eq!(il.inverse()[il.perm()[i]], i);
        }
    }

    #[test]
    fn constrained_power_is_unit_and_idempotent(p in params(4), k in 4usize..120) {
        prop_assume!(p.flat_entries().iter().any(|&v| (v - p.flat_entries()[0]).abs() > 1e-3));
        let q = constrain_power(&p, k).unwrap();
        prop_assert!((analytic_power(&q, k) - 1.0).abs() < 1e-9);
        let r = constrain_power(&q, k).unwrap();
        for (a, b) in q.flat_entries().iter().zip(r.flat_entries()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_interleaver_equal_tables_give_equal_streams(p in params(3), bits in prop::collection::vec(0u8..2, 3..20)) {
        let t = p.tables();
        let q = TurboEncoderParams::new([t[0].clone(), t[1].clone(), t[1].clone()]).unwrap();
        let cw = encode(&q, &bits, &Interleaver::identity(bits.len())).unwrap();
        prop_assert_eq!(&cw.streams[1], &cw.streams[2]);
    }

    #[test]
    fn two_sided_bound(ch in (2usize..6, 2usize..6).prop_flat_map(|(i, o)| channel(i, o)), a in 0usize..6, b in 0usize..6) {
        let n = ch.num_inputs();
        let f = SmallEncoder::new(1, vec![a % n, b % n]).unwrap();
        let (c, e) = exact_discrete_bce_ber(&f, &ch).unwrap();
        prop_assert!(check_two_sided_bound(c, e, 1e-12), "C = {c}, B = {e}, H2 = {}", h2(e));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bcjr_matches_brute_force_single_constituent(
        w in 2usize..5,
        k in 5usize..10,
        seed in any::<u64>(),
        sigma in 0.4f64..2.0,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut tbl = || PseudoBooleanTable::from_fn(w, |_| rng.random::<f64>() * 2.0 - 1.0).unwrap();
        let p = TurboEncoderParams::new([tbl(), tbl(), PseudoBooleanTable::constant(w, 0.0).unwrap()]).unwrap();
        let il = Interleaver::random(k, &mut rng);
        let y: Vec<f64> = (0..3 * k).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let cw = Codeword::from_flat(&y).unwrap();
        let bf = brute_force_map(&p, &il, &cw, sigma).unwrap();
        let out = bcjr_constituent(&Trellis::new(&p, &[0, 1]), &[&cw.streams[0], &cw.streams[1]], &vec![0.0; k], sigma).unwrap();
        for (l, q) in out.posterior.iter().zip(bf.probs()) {
            prop_assert!((1.0 / (1.0 + (-l).exp()) - q).abs() < 1e-9);
        }
    }
}
