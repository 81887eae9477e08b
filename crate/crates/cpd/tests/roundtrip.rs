//! Property tests for the text format: serialization round-trips through
//! the parser for arbitrary generated models, and enumeration agrees with
//! the oracle after a round-trip.

use proptest::prelude::*;

use cpd::dsl;
use cpd::enumerate::{count_scenarios, EnumOptions};
use cpd::families;
use cpd::oracle;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_parse_is_identity(seed in 0u64..10_000) {
        let m = families::random_acyclic(seed, 4);
        let text = dsl::serialize(&m);
        let back = dsl::parse(&text).expect("serialized model parses");
        prop_assert_eq!(&m, &back);
        prop_assert_eq!(text, dsl::serialize(&back));
    }

    #[test]
    fn round_tripped_model_counts_identically(seed in 0u64..10_000) {
        let m = families::random_acyclic(seed, 3);
        let back = dsl::parse(&dsl::serialize(&m)).unwrap();
        let (a, _) = count_scenarios(&m, &EnumOptions::default()).unwrap();
        let (b, _) = count_scenarios(&back, &EnumOptions::default()).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(a, oracle::oracle_count(&back).unwrap());
    }
}
