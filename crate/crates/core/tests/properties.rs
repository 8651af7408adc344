use std::collections::BTreeSet;

use geek_core::centers::partial_centers;
use geek_core::engine::message::{decode_groups, encode_groups, Message, MessageKind};
use geek_core::engine::split_data;
use geek_core::io::artifact::{
    decode_buckets, decode_seed_groups, encode_buckets, encode_seed_groups,
};
use geek_core::{
    dist_euclidean, dist_jaccard, seeds_to_centers, Bucket, DataSet, DenseData, SeedGroup, Silk,
    SilkParams,
};
use proptest::collection::{btree_set, vec};
use proptest::prelude::*;

fn id_set(max: u32, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<u32>> {
    btree_set(0..max, len).prop_map(|s| s.into_iter().collect())
}

fn buckets(max: u32) -> impl Strategy<Value = Vec<Bucket>> {
    vec((0u32..6, 0u32..50, id_set(max, 1..20)), 1..40).prop_map(|v| {
        v.into_iter()
            .map(|(t, s, m)| Bucket::new(t, s, m).unwrap())
            .collect()
    })
}

proptest! {
    #[test]
    fn bucket_artifact_round_trip(b in buckets(1000)) {
        prop_assert_eq!(decode_buckets(&encode_buckets(&b)).unwrap(), b);
    }

    #[test]
    fn seed_group_round_trip(groups in vec(id_set(500, 1..30), 0..20)) {
        let groups: Vec<SeedGroup> = groups.into_iter().map(|g| SeedGroup::new(g).unwrap()).collect();
        prop_assert_eq!(&decode_seed_groups(&encode_seed_groups(&groups)).unwrap(), &groups);
        prop_assert_eq!(&decode_groups(&encode_groups(&groups)).unwrap(), &groups);
    }

    #[test]
    fn message_round_trip(kind in 0usize..4, sender in 0usize..64, payload in vec(any::<u8>(), 0..200)) {
        let m = Message::new(MessageKind::ALL[kind], sender, payload);
        prop_assert_eq!(Message::decode(&m.encode()).unwrap(), m);
    }

    #[test]
    fn jaccard_is_a_bounded_symmetric_distance(a in id_set(60, 1..20), b in id_set(60, 1..20)) {
        let d = dist_jaccard(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, dist_jaccard(&b, &a));
        prop_assert_eq!(dist_jaccard(&a, &a), 0.0);
        prop_assert_eq!(d == 0.0, a == b);
        let disjoint = a.iter().all(|x| !b.contains(x));
        prop_assert_eq!(d == 1.0, disjoint);
    }

    #[test]
    fn euclidean_is_symmetric(a in vec(-1e3f32..1e3, 1..8)) {
        let b: Vec<f32> = a.iter().map(|x| x * 0.5 + 1.0).collect();
        prop_assert_eq!(dist_euclidean(&a, &b).unwrap(), dist_euclidean(&b, &a).unwrap());
        prop_assert_eq!(dist_euclidean(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn dedup_is_idempotent(b in buckets(60), seed in 0u64..50) {
        let silk = Silk::new(&SilkParams { k: 1, l: 4, delta: 1, seed, dedup_l: 1 }, 60).unwrap();
        let once = silk.run(&b).unwrap_or_default();
        let twice = silk.dedup(once.clone()).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn raising_delta_never_adds_groups(b in buckets(60), seed in 0u64..50, delta in 1usize..6, extra in 1usize..6) {
        let params = |delta| SilkParams { k: 1, l: 4, delta, seed, dedup_l: 1 };
        let low: BTreeSet<SeedGroup> = Silk::new(&params(delta), 60).unwrap().collect_groups(&b).unwrap().into_iter().collect();
        let high = Silk::new(&params(delta + extra), 60).unwrap().collect_groups(&b).unwrap();
        prop_assert!(high.iter().all(|g| low.contains(g) && g.len() >= delta + extra));
    }

    #[test]
    fn groups_have_a_majority_witness(b in buckets(60), seed in 0u64..50) {
        let silk = Silk::new(&SilkParams { k: 1, l: 3, delta: 1, seed, dedup_l: 1 }, 60).unwrap();
        for e in silk.collect_traced(&b).unwrap() {
            for id in e.group.members() {
                let hits = e.bin.buckets.iter().filter(|&&i| b[i].members.contains(id)).count();
                prop_assert!(2 * hits > e.bin.buckets.len());
            }
        }
    }

    #[test]
    fn split_covers_everything(n in 1usize..500, g in 1usize..16) {
        prop_assume!(g <= n);
        let parts = split_data(n, g).unwrap();
        prop_assert_eq!(parts.len(), g);
        prop_assert_eq!(parts[0].start, 0);
        prop_assert_eq!(parts[g - 1].end, n);
        for w in parts.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
            prop_assert!(w[0].len() >= w[1].len() && w[0].len() - w[1].len() <= 1);
        }
    }

    #[test]
    fn shard_reduction_is_exact(rows in vec(vec(-1e4f32..1e4, 3), 8..60), g in 1usize..5) {
        let data = DataSet::Dense(DenseData::from_rows(&rows).unwrap());
        let n = data.len();
        let groups = vec![
            SeedGroup::new((0..n as u32).step_by(2).collect()).unwrap(),
            SeedGroup::new((0..n as u32).filter(|i| i % 3 == 1).collect()).unwrap(),
        ];
        let whole = seeds_to_centers(&groups, &data).unwrap();
        let mut merged: Option<Vec<geek_core::PartialCenter>> = None;
        for r in split_data(n, g).unwrap() {
            let part = partial_centers(&groups, &data.slice(r.clone()), r.start).unwrap();
            merged = Some(match merged {
                None => part,
                Some(mut acc) => {
                    for (a, p) in acc.iter_mut().zip(&part) {
                        a.merge(p).unwrap();
                    }
                    acc
                }
            });
        }
        let got: Vec<_> = merged.unwrap().iter().filter_map(|p| p.finish()).collect();
        prop_assert_eq!(got, whole);
    }
}
