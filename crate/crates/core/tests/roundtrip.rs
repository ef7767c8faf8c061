use dgpc::generate::{DatasetSpec, Generator};
use dgpc::{decode, decode_traced, encode, encode_traced, BoundsSpec, CodecConfig, QuantizedPointSet, Traversal};
use proptest::prelude::*;

fn point_set() -> impl Strategy<Value = QuantizedPointSet> {
    (prop::sample::select(vec![1usize, 2, 3, 5]), prop::sample::select(vec![1u8, 4, 8, 16]))
        .prop_flat_map(|(d, b)| {
            let coord = 0u32..(1u32 << b);
            let pts = prop::collection::vec(prop::collection::vec(coord, d), 0..120);
            (Just(d), Just(b), pts, 0usize..40)
        })
        .prop_map(|(d, b, mut pts, dups)| {
            // inject duplicates
            if !pts.is_empty() {
                for i in 0..dups {
                    let p = pts[i * 7 % pts.len()].clone();
                    pts.push(p);
                }
            }
            QuantizedPointSet::from_points(BoundsSpec::uniform(d, b).unwrap(), &pts).unwrap()
        })
}

fn configs() -> impl Strategy<Value = CodecConfig> {
    (any::<bool>(), any::<bool>(), 0u8..3).prop_map(|(prediction, depth_first, policy)| CodecConfig {
        prediction,
        traversal: if depth_first { Traversal::DepthFirst } else { Traversal::BreadthFirst },
        axis_policy: dgpc::AxisPolicy::from_id(policy).unwrap(),
        ..Default::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn multiset_roundtrip(set in point_set(), config in configs()) {
        let bytes = encode(&set, &config).unwrap();
        prop_assert!(decode(&bytes).unwrap().same_multiset(&set));
    }

    #[test]
    fn coder_and_decoder_agree_event_by_event(set in point_set(), config in configs()) {
        let (bytes, enc) = encode_traced(&set, &config).unwrap();
        let (_, dec) = decode_traced(&bytes).unwrap();
        prop_assert_eq!(enc, dec);
    }

    #[test]
    fn encoding_is_order_independent(set in point_set(), seed in any::<u64>(), prediction in any::<bool>()) {
        let mut rows = set.sorted_points();
        let k = rows.len().max(1);
        rows.rotate_left(seed as usize % k);
        let shuffled = QuantizedPointSet::from_points(set.bounds().clone(), &rows).unwrap();
        let config = CodecConfig::default().with_prediction(prediction);
        prop_assert_eq!(encode(&set, &config).unwrap(), encode(&shuffled, &config).unwrap());
    }
}

#[test]
fn large_sets_roundtrip() {
    for (d, b) in [(1usize, 16u8), (2, 8), (3, 4), (5, 16)] {
        let bounds = BoundsSpec::uniform(d, b).unwrap();
        let set = DatasetSpec::new(Generator::Uniform, 4096, bounds, 3).generate().unwrap();
        for config in [CodecConfig::default(), CodecConfig::default().with_prediction(true)] {
            assert!(decode(&encode(&set, &config).unwrap()).unwrap().same_multiset(&set), "d={d} b={b}");
        }
    }
}

#[test]
fn concentrated_data_costs_less_than_uniform() {
    let bounds = BoundsSpec::uniform(2, 12).unwrap();
    for seed in 0..3 {
        let uniform = DatasetSpec::new(Generator::Uniform, 2000, bounds.clone(), seed).generate().unwrap();
        let quadrant = DatasetSpec::new(Generator::Quadrant, 2000, bounds.clone(), seed).generate().unwrap();
        let c = CodecConfig::default();
        assert!(encode(&quadrant, &c).unwrap().len() < encode(&uniform, &c).unwrap().len());
    }
}

#[test]
fn one_bit_axes_with_every_point_present() {
    let bounds = BoundsSpec::uniform(3, 1).unwrap();
    let pts: Vec<Vec<u32>> = (0..8u32).map(|i| vec![i & 1, (i >> 1) & 1, i >> 2]).collect();
    let set = QuantizedPointSet::from_points(bounds, &pts).unwrap();
    let bytes = encode(&set, &CodecConfig::default()).unwrap();
    assert!(decode(&bytes).unwrap().same_multiset(&set));
}
