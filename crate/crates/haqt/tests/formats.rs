use haqt::counts::{counts_csv, parse_counts_csv};
use haqt::formats::{parse_state, to_json_string, StateDoc};
use haqt_core::bases::{build_basis_set, rotate_basis_set};
use haqt_core::measurement::simulate_measurement;
use haqt_core::state::{eigendecompose, random_full_rank};
use haqt_core::SeedStream;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn state_files_round_trip_bit_for_bit(d in 2usize..8, seed in any::<u64>()) {
        let rho = random_full_rank(d, &mut SeedStream::new(seed).rng()).unwrap();
        let back = parse_state(&to_json_string(&StateDoc::from_state(&rho))).unwrap();
        prop_assert_eq!(back, rho);
    }

    #[test]
    fn count_files_round_trip(d in 2usize..7, shots in 0u64..20_000, seed in any::<u64>(), rotate in any::<bool>()) {
        let mut set = build_basis_set(d).unwrap();
        let rho = random_full_rank(d, &mut SeedStream::new(seed).rng()).unwrap();
        if rotate {
            set = rotate_basis_set(&set, &eigendecompose(&rho)).unwrap();
        }
        let shots = shots.max(set.len() as u64);
        let data = simulate_measurement(&rho, &set, shots, SeedStream::new(seed ^ 3)).unwrap();
        let back = parse_counts_csv(&counts_csv(&data, &set), &set).unwrap();
        prop_assert_eq!(back, data);
    }
}
