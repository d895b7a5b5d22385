use pik_core::binding::{alpha_equiv, uniquify};
use pik_core::congruence::{normalize, struct_congruent};
use pik_core::corpus::check_both;
use pik_core::duality::{dual, session_subtype};
use pik_core::encode::{decode_type, encode_type};
use pik_core::gen::{self, TypeShape};
use pik_core::parse::{parse_process, parse_session_type};
use pik_core::types::pi_equiv;
use pik_core::{Calculus, FreshSupply, SessionType};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ty(seed: u64, recursion: bool) -> SessionType {
    let shape = TypeShape {
        depth: 4,
        recursion,
        ..TypeShape::default()
    };
    gen::session_type(&mut ChaCha8Rng::seed_from_u64(seed), shape)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dual_is_an_involution(seed in any::<u64>()) {
        let s = ty(seed, true);
        prop_assert_eq!(dual(&dual(&s)), s);
    }

    #[test]
    fn dual_encodes_to_swapped_capabilities(seed in any::<u64>()) {
        let s = ty(seed, true);
        prop_assert!(pi_equiv(&encode_type(&dual(&s)), &encode_type(&s).swap_capabilities()));
    }

    #[test]
    fn decode_inverts_encode(seed in any::<u64>()) {
        let s = ty(seed, false);
        prop_assert_eq!(decode_type(&encode_type(&s)).unwrap(), s);
    }

    #[test]
    fn subtyping_is_reflexive(seed in any::<u64>()) {
        let s = ty(seed, true);
        prop_assert!(session_subtype(&s, &s).holds);
    }

    #[test]
    fn session_types_print_and_parse_back(seed in any::<u64>()) {
        let s = ty(seed, true);
        prop_assert_eq!(parse_session_type(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn unfolding_preserves_encoded_type(seed in any::<u64>()) {
        let t = encode_type(&ty(seed, true));
        prop_assert!(pi_equiv(&t, &t.head()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn processes_print_and_parse_back(seed in any::<u64>()) {
        let s = gen::well_typed(&mut ChaCha8Rng::seed_from_u64(seed));
        let q = parse_process(&s.process.to_string(), Calculus::Session).unwrap();
        prop_assert!(alpha_equiv(&q, &s.process));
    }

    #[test]
    fn renaming_binders_apart_is_alpha_equivalent(seed in any::<u64>()) {
        let s = gen::well_typed(&mut ChaCha8Rng::seed_from_u64(seed));
        let q = uniquify(&s.process, &mut FreshSupply::new("u"));
        prop_assert!(alpha_equiv(&q, &s.process));
    }

    #[test]
    fn normal_form_is_congruent_and_idempotent(seed in any::<u64>()) {
        let s = gen::well_typed(&mut ChaCha8Rng::seed_from_u64(seed));
        let n = normalize(&s.process);
        prop_assert!(struct_congruent(&s.process, &n));
        prop_assert_eq!(normalize(&n), n);
    }

    #[test]
    fn typing_agrees_with_the_encoding(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = if seed % 2 == 0 { gen::well_typed(&mut rng) } else { gen::mutated(&mut rng) };
        let (a, b) = check_both(&s.env, &s.process);
        prop_assert_eq!(a.is_ok(), b.is_ok(), "{}: {:?} / {:?}", s.process, a, b);
    }
}
