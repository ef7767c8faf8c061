use dgpc::generate::{DatasetSpec, Generator};
use dgpc::{
    decode, decode_waves, encode, representative_points, BoundsSpec, CodecConfig, RepresentativePolicy, Schedule,
    Traversal, WaveDecoder,
};

#[test]
fn waves_conserve_counts_and_nest() {
    let bounds = BoundsSpec::new(&[6, 5, 4]).unwrap();
    let set = DatasetSpec::new(Generator::mixture(), 700, bounds, 11).generate().unwrap();
    for prediction in [false, true] {
        let bytes = encode(&set, &CodecConfig::default().with_prediction(prediction)).unwrap();
        let waves = decode_waves(&bytes).unwrap();
        assert_eq!(waves.len(), 16);
        for pair in waves.windows(2) {
            assert_eq!(pair[1].total_count(), 700);
            assert_eq!(pair[1].level, pair[0].level + 1);
            for (child, _) in &pair[1].cells {
                assert!(pair[0].cells.iter().any(|(parent, _)| parent.contains_box(child)));
            }
        }
        let last = waves.last().unwrap();
        assert!(last.is_final());
        let full = decode(&bytes).unwrap();
        let from_wave = representative_points(last, RepresentativePolicy::Center, 0);
        assert!(from_wave.same_multiset(&full) && full.same_multiset(&set));
    }
}

#[test]
fn prefix_at_six_of_ten_bits_stays_near_the_data() {
    let bounds = BoundsSpec::new(&[10, 10]).unwrap();
    let set = DatasetSpec::new(Generator::Uniform, 3000, bounds.clone(), 5).generate().unwrap();
    let bytes = encode(&set, &CodecConfig::default()).unwrap();
    let level = Schedule::new(&bounds, Default::default()).level_for_precision(&bounds, &[6, 6]);
    let snap = WaveDecoder::new(&bytes).unwrap().decode_to_level(level).unwrap();
    assert_eq!(snap.precision, vec![6, 6]);
    for policy in [RepresentativePolicy::Center, RepresentativePolicy::UniformRandom, RepresentativePolicy::RegularGrid] {
        let reps = representative_points(&snap, policy, 9);
        assert_eq!(reps.len(), set.len());
        for r in reps.iter() {
            // some true point lies in the same 16x16 cell
            let near = set.iter().any(|p| p.iter().zip(r).all(|(&a, &b)| a >> 4 == b >> 4));
            assert!(near, "{r:?}");
            let linf = snap.cell_of(r).map(|c| (0..2).map(|a| c.side(a)).max().unwrap()).unwrap();
            assert!(linf <= 16);
        }
    }
}

#[test]
fn depth_first_has_no_waves() {
    let bounds = BoundsSpec::new(&[4, 4]).unwrap();
    let set = DatasetSpec::new(Generator::Uniform, 10, bounds, 0).generate().unwrap();
    let bytes = encode(&set, &CodecConfig::default().with_traversal(Traversal::DepthFirst)).unwrap();
    assert!(matches!(WaveDecoder::new(&bytes), Err(dgpc::Error::Unsupported(_))));
}
