use lcorpp_core::dataset::*;
use lcorpp_core::reasoner::default_kb;
use lcorpp_core::rng_from_seed;
use proptest::prelude::*;

// chi-square critical values at alpha = 0.01
const CHI2_DF1: f64 = 6.635;
const CHI2_DF2: f64 = 9.210;

fn chi2(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

fn quiet() -> GenConfig {
    GenConfig {
        heading_noise: 0.0,
        position_noise: 0.0,
        overlap: 0.0,
        ..GenConfig::default()
    }
}

fn line(n: usize, start: (f64, f64), step: (f64, f64)) -> Trajectory {
    Trajectory {
        points: (0..n)
            .map(|i| (start.0 + step.0 * i as f64, start.1 + step.1 * i as f64))
            .collect(),
        label: Intention::Interested,
    }
}

#[test]
fn degenerate_intention_table_is_always_interested() {
    let gt = GroundTruth::new(
        [0.3, 0.3, 0.4],
        [[0.2, 0.3, 0.5]; 3],
        [[0.5, 0.5]; 3],
        [1.0, 1.0, 1.0],
    )
    .unwrap();
    let mut rng = rng_from_seed(1);
    for _ in 0..1000 {
        assert_eq!(sample_world(&gt, &mut rng).intention, Intention::Interested);
    }
}

#[test]
fn visitors_show_up_in_the_afternoon() {
    let gt = GroundTruth::from_kb(&default_kb()).unwrap();
    let mut rng = rng_from_seed(2);
    let (mut visitors, mut afternoon) = (0u64, 0u64);
    while visitors < 100_000 {
        let s = sample_world(&gt, &mut rng);
        if s.identity == Identity::Visitor {
            visitors += 1;
            if s.time == TimeOfDay::Afternoon {
                afternoon += 1;
            }
        }
    }
    let f = afternoon as f64 / visitors as f64;
    assert!((f - 0.7).abs() < 0.01, "{f}");
}

#[test]
fn uniform_identity_prior_gives_equal_thirds() {
    let third = 1.0 / 3.0;
    let gt = GroundTruth::new(
        [third, third, 1.0 - 2.0 * third],
        [[0.2, 0.3, 0.5]; 3],
        [[0.5, 0.5]; 3],
        [0.5, 0.5, 0.5],
    )
    .unwrap();
    let mut rng = rng_from_seed(3);
    let mut counts = [0u64; 3];
    for _ in 0..100_000 {
        counts[sample_world(&gt, &mut rng).identity.index()] += 1;
    }
    for c in counts {
        assert!((c as f64 / 1e5 - third).abs() < 0.01);
    }
    assert!(chi2(&counts, &[third; 3]) < CHI2_DF2);
}

#[test]
fn sampled_marginals_pass_chi_square() {
    let gt = GroundTruth::from_kb(&default_kb()).unwrap();
    let mut rng = rng_from_seed(4);
    let n = 100_000;
    let mut id = [0u64; 3];
    let mut time = [[0u64; 3]; 3];
    let mut loc = [[0u64; 2]; 3];
    let mut int = [[0u64; 2]; 3];
    for _ in 0..n {
        let s = sample_world(&gt, &mut rng);
        let i = s.identity.index();
        id[i] += 1;
        time[i][s.time.index()] += 1;
        loc[i][s.location.index()] += 1;
        int[i][s.intention.index()] += 1;
    }
    assert!(chi2(&id, &gt.identity_prior()) < CHI2_DF2);
    for who in Identity::ALL {
        let i = who.index();
        assert!(chi2(&time[i], &gt.time_given(*who)) < CHI2_DF2, "time | {who}");
        assert!(chi2(&loc[i], &gt.location_given(*who)) < CHI2_DF1, "location | {who}");
        let q = gt.interested_given(*who);
        assert!(chi2(&int[i], &[q, 1.0 - q]) < CHI2_DF1, "intention | {who}");
    }
}

#[test]
fn malformed_tables_are_rejected() {
    let bad = GroundTruth::new([0.5, 0.5, 0.5], [[0.2, 0.3, 0.5]; 3], [[0.5, 0.5]; 3], [0.5; 3]);
    assert!(matches!(bad, Err(DatasetError::Distribution { table: "identity", .. })));
    let bad = GroundTruth::new([0.2, 0.3, 0.5], [[0.2, 0.3, 0.5]; 3], [[0.5, 0.6]; 3], [0.5; 3]);
    assert!(matches!(bad, Err(DatasetError::Distribution { table: "location", .. })));
    let bad = GroundTruth::new([0.2, 0.3, 0.5], [[0.2, 0.3, 0.5]; 3], [[0.5, 0.5]; 3], [0.5, 1.5, 0.5]);
    assert!(bad.is_err());
}

#[test]
fn ground_truth_from_kb_matches_tables() {
    let gt = GroundTruth::from_kb(&default_kb()).unwrap();
    let id = gt.identity_prior();
    assert!((id.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((gt.time_given(Identity::Visitor)[TimeOfDay::Afternoon.index()] - 0.7).abs() < 1e-12);
    assert!((gt.location_given(Identity::Professor)[Location::Library.index()] - 0.1).abs() < 1e-12);
    let total: f64 = Identity::ALL
        .iter()
        .flat_map(|&i| TimeOfDay::ALL.iter().map(move |&t| (i, t)))
        .flat_map(|(i, t)| Location::ALL.iter().map(move |&l| (i, t, l)))
        .flat_map(|(i, t, l)| {
            Intention::ALL.iter().map(move |&n| WorldState {
                identity: i,
                time: t,
                location: l,
                intention: n,
            })
        })
        .map(|s| gt.probability(&s))
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn noise_free_geometry_separates_classes() {
    let cfg = quiet();
    let mut rng = rng_from_seed(5);
    for _ in 0..500 {
        let t = synthesize_trajectory(Intention::Interested, &mut rng, &cfg).unwrap();
        assert!(t.points.len() >= SEQ_LEN);
        assert!(terminal_distance(&t, &cfg.arena) <= cfg.approach_radius);
        let t = synthesize_trajectory(Intention::NotInterested, &mut rng, &cfg).unwrap();
        assert!(terminal_distance(&t, &cfg.arena) > cfg.approach_radius);
    }
}

#[test]
fn distance_threshold_separates_overlap_free_data() {
    let cfg = GenConfig {
        overlap: 0.0,
        ..GenConfig::default()
    };
    let mut rng = rng_from_seed(6);
    let mut correct = 0;
    for label in [Intention::Interested, Intention::NotInterested] {
        for _ in 0..1000 {
            let t = synthesize_trajectory(label, &mut rng, &cfg).unwrap();
            let guess = Intention::from_interested(terminal_distance(&t, &cfg.arena) <= cfg.approach_radius);
            if guess == label {
                correct += 1;
            }
        }
    }
    let acc = correct as f64 / 2000.0;
    assert!(acc >= 0.99, "{acc}");
}

#[test]
fn overlap_bounds_threshold_accuracy() {
    let cfg = GenConfig::default();
    let mut rng = rng_from_seed(7);
    let mut correct = 0;
    let n = 4000;
    for k in 0..n {
        let label = Intention::from_interested(k % 2 == 0);
        let t = synthesize_trajectory(label, &mut rng, &cfg).unwrap();
        if Intention::from_interested(terminal_distance(&t, &cfg.arena) <= cfg.approach_radius) == label {
            correct += 1;
        }
    }
    let acc = correct as f64 / n as f64;
    let ceiling = 1.0 - cfg.overlap / 2.0;
    assert!((acc - ceiling).abs() < 0.03, "{acc} vs {ceiling}");
}

#[test]
fn invalid_generator_settings() {
    let mut rng = rng_from_seed(8);
    let bad = [
        GenConfig { points: 0, ..GenConfig::default() },
        GenConfig { speed: (0.0, 10.0), ..GenConfig::default() },
        GenConfig { heading_noise: -1.0, ..GenConfig::default() },
        GenConfig { overlap: 1.5, ..GenConfig::default() },
        GenConfig { start_radius: f64::NAN, ..GenConfig::default() },
    ];
    for cfg in bad {
        assert!(matches!(
            synthesize_trajectory(Intention::Interested, &mut rng, &cfg),
            Err(DatasetError::Config(_))
        ));
    }
}

#[test]
fn featurize_shapes_and_scaling() {
    let arena = ArenaBounds::default();
    let t = line(30, (0.0, 0.0), (100.0, 200.0));
    let inst = featurize(&t, &arena).unwrap();
    assert_eq!(inst.features().len(), FEATURES);
    assert_eq!(inst.step(1), &[0.01, 0.02]);

    let c = arena.center();
    let still = Trajectory {
        points: vec![c; 30],
        label: Intention::NotInterested,
    };
    assert!(featurize(&still, &arena).unwrap().features().iter().all(|v| *v == 0.5));

    let long = line(45, (1000.0, 2000.0), (50.0, -20.0));
    let prefix = Trajectory {
        points: long.points[..30].to_vec(),
        label: long.label,
    };
    assert_eq!(featurize(&long, &arena).unwrap(), featurize(&prefix, &arena).unwrap());

    let short = line(3, (1000.0, 1000.0), (1000.0, 0.0));
    let f = featurize(&short, &arena).unwrap();
    for k in 2..SEQ_LEN {
        assert_eq!(f.step(k), &[0.3, 0.1]);
    }

    let empty = Trajectory {
        points: vec![],
        label: Intention::Interested,
    };
    assert_eq!(featurize(&empty, &arena), Err(DatasetError::EmptyTrajectory));
}

#[test]
fn truncation_examples() {
    let t40 = line(40, (0.0, 0.0), (1.0, 1.0));
    assert_eq!(truncate(&t40, 1.0).unwrap(), t40);
    assert_eq!(truncate(&t40, 0.25).unwrap().points.len(), 10);
    let t30 = line(30, (0.0, 0.0), (1.0, 1.0));
    assert_eq!(truncate(&t30, 0.25).unwrap().points.len(), 8);
    for f in [0.0, -0.5, 1.01, f64::NAN] {
        assert!(matches!(truncate(&t30, f), Err(DatasetError::Fraction(_))));
    }
}

fn labeled(n: usize, positives: usize) -> Dataset {
    let arena = ArenaBounds::default();
    Dataset::new(
        (0..n)
            .map(|i| {
                let t = line(30, (i as f64, 0.0), (1.0, 1.0));
                (featurize(&t, &arena).unwrap(), Intention::from_interested(i < positives))
            })
            .collect(),
    )
}

#[test]
fn split_examples() {
    let mut rng = rng_from_seed(9);
    let (a, b) = split(&labeled(100, 30), 0.7, &mut rng).unwrap();
    assert_eq!((a.len(), b.len()), (70, 30));
    assert_eq!(a.count(Intention::Interested), 21);

    let (a, b) = split(&labeled(2286, 63), 0.7, &mut rng).unwrap();
    let p = a.count(Intention::Interested);
    assert!(p == 44 || p == 45, "{p}");
    assert_eq!(a.len() + b.len(), 2286);

    let doubled = {
        let mut d = labeled(40, 10);
        let copy = d.items.clone();
        d.items.extend(copy);
        d
    };
    let (a, b) = split(&doubled, 0.5, &mut rng).unwrap();
    assert_eq!(a.count(Intention::Interested), b.count(Intention::Interested));

    let (a, _) = split(&labeled(10, 0), 0.5, &mut rng).unwrap();
    assert_eq!(a.count(Intention::Interested), 0);
    assert!(matches!(split(&Dataset::default(), 0.7, &mut rng), Err(DatasetError::EmptyDataset)));
    assert!(matches!(split(&labeled(10, 5), 1.0, &mut rng), Err(DatasetError::Ratio(_))));
}

#[test]
fn generated_dataset_has_exact_positive_count() {
    let cfg = GenConfig {
        positive_rate: 0.027,
        ..GenConfig::default()
    };
    let mut rng = rng_from_seed(10);
    let ds = generate_dataset(2286, &cfg, &mut rng).unwrap();
    assert_eq!(ds.len(), 2286);
    assert_eq!(ds.count(Intention::Interested), 62);
}

#[test]
fn generation_is_deterministic() {
    let cfg = GenConfig::default();
    let a = generate_dataset(50, &cfg, &mut rng_from_seed(11)).unwrap();
    let b = generate_dataset(50, &cfg, &mut rng_from_seed(11)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn symbolic_names_round_trip() {
    for id in Identity::ALL {
        assert_eq!(Identity::from_name(id.name()), Some(*id));
    }
    for t in TimeOfDay::ALL {
        assert_eq!(TimeOfDay::from_index(t.index()), Some(*t));
    }
    assert_eq!(Location::from_name("library"), Some(Location::Library));
    assert_eq!(Intention::from_name("interested"), Some(Intention::Interested));
    assert_eq!(Intention::from_name("bored"), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn features_always_sixty_in_unit_range(
        pts in prop::collection::vec((-5000.0f64..15000.0, -5000.0f64..15000.0), 1..80)
    ) {
        let t = Trajectory { points: pts, label: Intention::Interested };
        let f = featurize(&t, &ArenaBounds::default()).unwrap();
        prop_assert_eq!(f.features().len(), FEATURES);
        prop_assert!(f.features().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn truncated_length_is_ceiling(n in 1usize..100, f in 0.001f64..=1.0) {
        let t = line(n, (0.0, 0.0), (1.0, 0.0));
        let k = truncate(&t, f).unwrap().points.len();
        prop_assert_eq!(k, (f * n as f64).ceil() as usize);
        prop_assert_eq!(truncate(&t, 1.0).unwrap(), t);
    }

    #[test]
    fn split_is_a_stratified_partition(n in 1usize..200, pos_frac in 0.0f64..=1.0, ratio in 0.05f64..0.95, seed in any::<u64>()) {
        let positives = (pos_frac * n as f64) as usize;
        let ds = labeled(n, positives);
        let (a, b) = split(&ds, ratio, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(a.len() + b.len(), n);
        let mut all: Vec<f64> = a.items.iter().chain(&b.items).map(|(i, _)| i.features()[0]).collect();
        all.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = ds.items.iter().map(|(i, _)| i.features()[0]).collect();
        want.sort_by(f64::total_cmp);
        prop_assert_eq!(all, want);
        for label in [Intention::Interested, Intention::NotInterested] {
            let exact = ratio * ds.count(label) as f64;
            prop_assert!((a.count(label) as f64 - exact).abs() <= 1.0);
        }
    }
}
