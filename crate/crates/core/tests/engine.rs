use geek_core::engine::{plan_loads, run_pipeline, run_pipeline_mixed, split_data, EngineConfig};
use geek_core::io::{gen_synthetic, SynthKind, SynthSpec};
use geek_core::{seeds_to_centers, Bucket, Column, DataSet, Error, MixedData};

fn gaussian(n: usize, seed: u64) -> DataSet {
    gen_synthetic(&SynthSpec::new(
        SynthKind::GaussianMixture,
        n,
        8,
        10,
        10.0,
        seed,
    ))
    .unwrap()
    .data
}

fn dense_cfg(g: usize) -> EngineConfig {
    EngineConfig {
        g,
        m: 8,
        t: 40,
        silk_k: 2,
        silk_l: 10,
        delta: 5,
        seed: 11,
        ..EngineConfig::default()
    }
}

fn all_buckets(out: &geek_core::engine::PipelineOutput) -> Vec<Bucket> {
    let mut b: Vec<Bucket> = out.workers.iter().flat_map(|w| w.buckets.clone()).collect();
    b.sort_by_key(|b| (b.id.table, b.id.slot));
    b
}

#[test]
fn worker_count_does_not_change_results() {
    let data = gen_synthetic(&SynthSpec::new(
        SynthKind::GaussianMixture,
        4000,
        16,
        5,
        10.0,
        1,
    ))
    .unwrap()
    .data;
    let cfg = |g| EngineConfig {
        m: 16,
        t: 16,
        ..dense_cfg(g)
    };
    let one = run_pipeline(&data, &cfg(1)).unwrap();
    for g in [2, 4] {
        let out = run_pipeline(&data, &cfg(g)).unwrap();
        assert_eq!(all_buckets(&out), all_buckets(&one), "g = {g}");
        // local voting sees only owned tables, so seeds may differ from g = 1;
        // the reduced centers must still equal the central computation
        assert_eq!(
            out.clustering.centers,
            seeds_to_centers(&out.seeds, &data).unwrap()
        );
        let (r1, rg) = (one.clustering.mean_radius(), out.clustering.mean_radius());
        assert!((rg - r1).abs() <= 0.1 * r1, "g = {g}: {rg} vs {r1}");
        for w in &out.workers {
            assert_eq!(w.synced_ids, 4000 * 16 / g as u64);
            assert_eq!(w.seeds, out.seeds);
        }
        assert!(out.bytes["bucket_shard"] > 0);
    }
}

#[test]
fn small_budget_gives_same_seeds() {
    let data = gaussian(1500, 2);
    let whole = run_pipeline(&data, &dense_cfg(2)).unwrap();
    let cfg = EngineConfig {
        memory_budget: 7000,
        ..dense_cfg(2)
    };
    let chunked = run_pipeline(&data, &cfg).unwrap();
    assert!(chunked.workers.iter().all(|w| w.loads > 1));
    assert_eq!(chunked.seeds, whole.seeds);
    assert_eq!(chunked.clustering, whole.clustering);

    let tiny = EngineConfig {
        memory_budget: 100,
        ..dense_cfg(2)
    };
    let err = run_pipeline(&data, &tiny).unwrap_err();
    assert!(
        matches!(
            err,
            Error::Stage {
                stage: "seeding",
                ..
            }
        ),
        "{err}"
    );
}

#[test]
fn plan_loads_keeps_whole_tables() {
    assert_eq!(plan_loads(&[3, 3, 3], 6).unwrap(), vec![0..2, 2..3]);
    assert_eq!(plan_loads(&[3, 3, 3], 100).unwrap(), vec![0..3]);
    assert!(plan_loads(&[3, 9], 6).is_err());
}

#[test]
fn split_sizes() {
    let sizes = |n, g| {
        split_data(n, g)
            .unwrap()
            .iter()
            .map(|r| r.len())
            .collect::<Vec<_>>()
    };
    assert_eq!(split_data(10, 2).unwrap(), vec![0..5, 5..10]);
    assert_eq!(sizes(7, 3), vec![3, 2, 2]);
    assert_eq!(sizes(4, 1), vec![4]);
    assert!(split_data(3, 4).is_err());
}

#[test]
fn categorical_and_sparse_payloads() {
    let cat = gen_synthetic(&SynthSpec::new(
        SynthKind::CategoricalPatterns,
        600,
        12,
        3,
        5.0,
        4,
    ))
    .unwrap();
    let cfg = EngineConfig {
        g: 2,
        transform_k: 2,
        transform_l: 8,
        delta: 5,
        ..EngineConfig::default()
    };
    let out = run_pipeline(&cat.data, &cfg).unwrap();
    assert!(out.k_star() >= 3, "k* = {}", out.k_star());
    assert_eq!(out.clustering.assignment.len(), 600);

    let sparse = gen_synthetic(&SynthSpec {
        set_size: 60,
        ..SynthSpec::new(SynthKind::SparseOverlap, 400, 1 << 20, 4, 2.0, 5)
    })
    .unwrap();
    let cfg = EngineConfig {
        g: 2,
        transform_k: 2,
        transform_l: 8,
        doph_dims: 200,
        delta: 5,
        ..EngineConfig::default()
    };
    let out = run_pipeline(&sparse.data, &cfg).unwrap();
    assert!(out.k_star() >= 1);
    assert!(out.clustering.radii.iter().all(|r| (0.0..=1.0).contains(r)));
}

#[test]
fn mixed_columns_are_discretized() {
    let n = 300;
    let mixed = MixedData::new(vec![
        Column::Numeric(
            (0..n)
                .map(|i| (i % 3) as f64 * 100.0 + (i % 7) as f64)
                .collect(),
        ),
        Column::Categorical((0..n).map(|i| (i % 3) as u32).collect()),
        Column::Categorical((0..n).map(|i| (i % 3) as u32 + 10).collect()),
    ])
    .unwrap();
    let cfg = EngineConfig {
        t_disc: 3,
        transform_k: 1,
        transform_l: 4,
        delta: 5,
        ..EngineConfig::default()
    };
    let (out, cat) = run_pipeline_mixed(&mixed, &cfg).unwrap();
    assert_eq!(cat.len(), n);
    assert_eq!(out.k_star(), 3);
    assert_eq!(out.clustering.max_radius(), 0.0);
}

#[test]
fn bad_settings_are_config_errors() {
    let data = gaussian(100, 0);
    let cases = [
        EngineConfig {
            g: 3,
            ..dense_cfg(1)
        },
        EngineConfig {
            t: 101,
            ..dense_cfg(1)
        },
        EngineConfig {
            g: 0,
            ..dense_cfg(1)
        },
        EngineConfig {
            metric: Some(geek_core::Metric::Jaccard),
            ..dense_cfg(1)
        },
    ];
    for cfg in cases {
        assert!(
            matches!(run_pipeline(&data, &cfg), Err(Error::Config(_))),
            "{cfg:?}"
        );
    }
}

#[test]
fn no_groups_falls_back_to_random_objects() {
    let data = gaussian(400, 3);
    let cfg = EngineConfig {
        delta: 10_000,
        ..dense_cfg(2)
    };
    let out = run_pipeline(&data, &cfg).unwrap();
    assert!(out.fallback);
    assert_eq!(out.seeds.len(), 2);
    assert_eq!(out.clustering.centers.len(), 2);
}

#[test]
fn metrics_record_is_well_formed() {
    let data = gaussian(1000, 5);
    let cfg = dense_cfg(2);
    let out = run_pipeline(&data, &cfg).unwrap();
    let rec = out.metrics(&cfg);
    rec.validate().unwrap();
    assert_eq!(rec.k_star, out.k_star());
    for stage in ["transform", "sync", "seeding", "centers", "assign", "total"] {
        assert!(rec.timings.contains_key(stage), "{stage}");
    }
    let json = serde_json::to_string(&rec).unwrap();
    assert!(json.contains("\"k_star\""));
}
