mod support;

use archtrace_core::constraints::{check_trace_assertion, trace_holds, Mode, Monitor, TraceAssertion, VerdictValue};
use archtrace_core::diagrams::{check_full_homomorphism, desugar_minmax, desugar_required_conn, desugar_rigid};
use archtrace_core::model::ComponentUniverse;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;

fn verdict(x: Option<bool>) -> VerdictValue {
    match x {
        Some(true) => VerdictValue::Satisfied,
        Some(false) => VerdictValue::Violated,
        None => VerdictValue::Inconclusive,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn subsets_of_healthy_universes_are_healthy(seed in any::<u64>(), mask in any::<u16>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snaps = healthy_universe(&mut rng, 8, 5);
        prop_assert!(ComponentUniverse::new(snaps.clone()).check_healthy().is_ok());
        let sub = snaps.into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| s);
        prop_assert!(ComponentUniverse::new(sub).check_healthy().is_ok());
    }

    #[test]
    fn trace_holds_matches_expansion(f in trace_formula(4), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_world(&mut rng, 1, 4, 3, 5, None);
        for env in environments(&w) {
            for mode in [Mode::Open, Mode::Closed] {
                let reference = Expansion { alg: &w.alg, j: &w.j, steps: w.trace.steps(), mode };
                for n in 0..w.trace.len() {
                    let got = trace_holds(&w.alg, &w.j, &env, &w.trace, n, &f, mode).unwrap();
                    prop_assert_eq!(got.value, verdict(reference.eval(&f, n, &env)), "{} at {} in {:?}", f, n, mode);
                }
            }
        }
    }

    #[test]
    fn open_verdicts_survive_extension(f in trace_formula(4), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_world(&mut rng, 1, 4, 3, 6, None);
        let cut = rng.gen_range(1..=w.trace.len());
        let prefix = w.trace.prefix(cut).unwrap();
        for env in environments(&w) {
            let before = trace_holds(&w.alg, &w.j, &env, &prefix, 0, &f, Mode::Open).unwrap();
            let after = trace_holds(&w.alg, &w.j, &env, &w.trace, 0, &f, Mode::Open).unwrap();
            if before.is_final() {
                prop_assert_eq!(before.value, after.value, "{}", f);
            }
        }
    }

    #[test]
    fn monitor_agrees_with_open_mode_until_decided(f in trace_formula(3), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_world(&mut rng, 1, 3, 2, 5, None);
        let closed = close(&f);
        let a = TraceAssertion::closed("m", closed);
        let mut m = Monitor::new(&w.alg, &w.j, a.clone()).unwrap();
        let mut decided: Option<VerdictValue> = None;
        for n in 1..=w.trace.len() {
            let v = m.step(w.trace.steps()[n - 1].clone()).unwrap();
            let direct = check_trace_assertion(&w.alg, &w.j, &w.trace.prefix(n).unwrap(), &a, Mode::Open, 1_000_000).unwrap();
            match decided {
                Some(d) => prop_assert_eq!(v.value, d),
                None => prop_assert_eq!(v.value, direct.value),
            }
            if v.is_final() {
                decided.get_or_insert(v.value);
            }
        }
    }

    #[test]
    fn minmax_desugaring_counts_components(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let w = random_world(&mut rng, n, 4, 2, 5, None);
        let ann = random_minmax(&mut rng, n);
        let v = check_trace_assertion(&w.alg, &w.j, &w.trace, &desugar_minmax(&ann), Mode::Closed, 1_000_000).unwrap();
        prop_assert_eq!(v.value == VerdictValue::Satisfied, minmax_direct(&w, &ann));
    }

    #[test]
    fn rigid_desugaring_covers_active_components(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let w = random_world(&mut rng, n, 4, 2, 5, None);
        let ann = random_rigid(&mut rng, n);
        let v = check_trace_assertion(&w.alg, &w.j, &w.trace, &desugar_rigid(&ann).unwrap(), Mode::Closed, 1_000_000).unwrap();
        prop_assert_eq!(v.value == VerdictValue::Satisfied, rigid_direct(&w, &ann));
    }

    #[test]
    fn required_desugaring_is_a_full_homomorphism(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let ann = random_required(&mut rng, n);
        let w = random_world(&mut rng, n, 4, 2, 5, Some(&ann));
        let a = desugar_required_conn(&ann, &w.spec).unwrap();
        let v = check_trace_assertion(&w.alg, &w.j, &w.trace, &a, Mode::Closed, 1_000_000).unwrap();
        let direct = check_full_homomorphism(&w.trace, &ann, &w.spec, &w.j).unwrap();
        prop_assert_eq!(v.value == VerdictValue::Satisfied, direct);
    }

    #[test]
    fn well_founded_on_five_elements(bits in 0u64..(1 << 25)) {
        let rel = relation_from_bits(5, bits);
        prop_assert_eq!(relation_algebra(5, &rel).check_well_founded("r").unwrap(), well_founded_by_chains(5, &rel));
    }
}

/// Binds the free variables `v`, `w`, `u` universally over `I0`.
fn close(f: &archtrace_core::TraceFormula) -> archtrace_core::TraceFormula {
    use archtrace_core::syntax::{Binder, Quantifier};
    let mut out = f.clone();
    for v in FREE.iter().rev() {
        out = archtrace_core::TraceFormula::Quant(Quantifier::Forall, Binder::interface(v, "I0"), Box::new(out));
    }
    out
}

#[test]
fn well_founded_exhaustive_up_to_four() {
    for n in 1..=4usize {
        for bits in 0..(1u64 << (n * n)) {
            let rel = relation_from_bits(n, bits);
            assert_eq!(
                relation_algebra(n, &rel).check_well_founded("r").unwrap(),
                well_founded_by_chains(n, &rel),
                "{rel:?}"
            );
        }
    }
}
