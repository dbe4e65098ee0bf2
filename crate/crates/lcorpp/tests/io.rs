use lcorpp::io::*;
use lcorpp_core::classifier::{Classifier, ConfusionMatrix, TrainConfig};
use lcorpp_core::dataset::{generate_dataset, ArenaBounds, Dataset, GenConfig, Instance, Intention, FEATURES};
use lcorpp_core::metrics::Metrics;
use lcorpp_core::planner::{build_intention_pomdp, IntentionPomdpConfig};
use lcorpp_core::rng_from_seed;
use proptest::prelude::*;

fn small_dataset() -> Dataset {
    let gen = GenConfig {
        positive_rate: 0.5,
        ..GenConfig::default()
    };
    generate_dataset(12, &gen, &mut rng_from_seed(1)).unwrap()
}

fn model_file() -> ModelFile {
    ModelFile {
        classifier: Classifier::random(3, 9),
        train: TrainConfig {
            hidden: 3,
            seed: 42,
            ..TrainConfig::default()
        },
        confusion: ConfusionMatrix::new([[0.8, 0.2], [0.29, 0.71]]).unwrap(),
    }
}

#[test]
fn dataset_round_trip_is_exact() {
    let ds = small_dataset();
    let text = write_dataset(&ds);
    assert_eq!(text.lines().count(), 12);
    assert_eq!(parse_dataset(&text).unwrap(), ds);
    for (line, (_, label)) in text.lines().zip(&ds.items) {
        let want = if label.is_interested() { "1," } else { "0," };
        assert!(line.starts_with(want));
        assert_eq!(line.split(',').count(), FEATURES + 1);
    }
    assert_eq!(parse_dataset("").unwrap(), Dataset::default());
}

#[test]
fn dataset_errors_carry_line_numbers() {
    let good = write_dataset(&small_dataset());
    let mut lines: Vec<String> = good.lines().map(String::from).collect();
    lines[2] = format!("2{}", &lines[2][1..]);
    let e = parse_dataset(&lines.join("\n")).unwrap_err();
    assert_eq!(e.line, 3);

    let short = format!("{}\n1,0.5,0.5\n", good.lines().next().unwrap());
    let e = parse_dataset(&short).unwrap_err();
    assert_eq!(e.line, 2);
    assert!(e.message.contains("60"), "{e}");

    let mut nan = vec!["0".to_string()];
    nan.extend(std::iter::repeat_n("0.5".to_string(), FEATURES - 1));
    nan.push("NaN".into());
    assert_eq!(parse_dataset(&nan.join(",")).unwrap_err().line, 1);
}

#[test]
fn model_round_trip_is_exact() {
    let m = model_file();
    let text = write_model(&m);
    let back = parse_model(&text).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.classifier.params().as_slice(), m.classifier.params().as_slice());
    let inst = Instance::new(vec![0.3; FEATURES]).unwrap();
    assert_eq!(
        back.classifier.probability(&inst).unwrap().to_bits(),
        m.classifier.probability(&inst).unwrap().to_bits()
    );
}

#[test]
fn model_hash_is_checked() {
    let text = write_model(&model_file());
    let tampered = text.replace("seed=42", "seed=43");
    let e = parse_model(&tampered).unwrap_err();
    assert_eq!(e.line, 5);
    assert!(e.message.contains("hash"));
    assert_eq!(train_config_hash(&model_file().train).len(), 64);
    assert_ne!(
        train_config_hash(&model_file().train),
        train_config_hash(&TrainConfig::default())
    );
}

#[test]
fn model_shape_errors() {
    let text = write_model(&model_file());
    assert_eq!(parse_model("nonsense").unwrap_err().line, 1);
    let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
    assert!(parse_model(&truncated).is_err());
    let extra = format!("{text}0.5\n");
    assert!(parse_model(&extra).unwrap_err().message.contains("trailing"));
    let wrong_hidden = text.replacen("hidden 3", "hidden 4", 1);
    assert_eq!(parse_model(&wrong_hidden).unwrap_err().line, 7);
    let bad_conf = text.replace("confusion 0.8 0.2", "confusion 0.8 0.3");
    assert_eq!(parse_model(&bad_conf).unwrap_err().line, 6);
}

#[test]
fn pomdp_round_trip_matches_builder() {
    let m = build_intention_pomdp(&IntentionPomdpConfig::default()).unwrap();
    let text = write_pomdp(&m);
    let back = parse_pomdp(&text).unwrap();
    assert_eq!(back, m);
    assert!(text.starts_with("states: "));
}

#[test]
fn pomdp_parse_validates() {
    let src = "\
# two-state toy
states: a b
actions: stay
observations: x y
gamma: 0.9
T: a stay a 1
T: b stay b 1
O: a stay x 0.75
O: a stay y 0.25
O: b stay y 1
R: a stay 1.5
";
    let m = parse_pomdp(src).unwrap();
    assert_eq!(m.o(0, 0, 0), 0.75);
    assert_eq!(m.r(0, 0), 1.5);
    assert_eq!(m.r(1, 0), 0.0);

    let e = parse_pomdp(&src.replace("T: b stay b 1", "T: b stay c 1")).unwrap_err();
    assert_eq!(e.line, 7);
    let e = parse_pomdp(&src.replace("O: b stay y 1", "O: b stay y 0.9")).unwrap_err();
    assert!(e.message.contains("invalid") || e.message.contains("sum"), "{e}");
    assert!(parse_pomdp(&src.replace("gamma: 0.9\n", "")).is_err());
    assert_eq!(parse_pomdp(&src.replace("R: a stay 1.5", "R: a stay")).unwrap_err().line, 11);
    assert_eq!(parse_pomdp(&src.replace("gamma", "discount")).unwrap_err().line, 5);
    // within tolerance
    let src2 = src.replace("O: a stay y 0.25", "O: a stay y 0.2500000000001");
    assert!(parse_pomdp(&src2).is_ok());
}

#[test]
fn history_lines_round_trip() {
    let ep = HistoryLine::Episode {
        trial: 7,
        truth: Intention::Interested,
        reported: Intention::NotInterested,
        stored: Intention::NotInterested,
        steps: 4,
        cost: 5.0,
    };
    assert_eq!(ep.to_string(), "episode 7 interested not_interested not_interested 4 5");
    let batch = HistoryLine::Batch {
        batch: 2,
        trials: 1000,
        dataset_size: 1000,
        confusion: [[0.8351822503961965, 0.1648177496038035], [0.1, 0.9]],
        divergence: 1.1957,
        metrics: Metrics {
            tp: 3,
            fp: 1,
            fn_: 0,
            tn: 9,
            total_cost: 0.1 + 0.2,
        },
    };
    for line in [ep, batch] {
        assert_eq!(line.to_string().parse::<HistoryLine>().unwrap(), line);
    }
    let text = "episode 0 interested interested interested 1 0\n\nbatch x\n";
    assert_eq!(parse_history(text).unwrap_err().line, 3);
}

#[test]
fn gen_config_reads_known_keys() {
    let f = parse_gen_config(
        "arena_bounds = [0, 0, 8000.0, 6000]\noverlap = 0.1\npositive_rate = 0.5\nseed = 12\n",
    )
    .unwrap();
    assert_eq!(
        f.gen.arena,
        ArenaBounds {
            min: (0.0, 0.0),
            max: (8000.0, 6000.0)
        }
    );
    assert_eq!(f.gen.overlap, 0.1);
    assert_eq!(f.gen.positive_rate, 0.5);
    assert_eq!(f.seed, Some(12));
    let empty = parse_gen_config("").unwrap();
    assert_eq!(empty.gen, GenConfig::default());
    assert_eq!(empty.seed, None);
}

#[test]
fn gen_config_errors() {
    assert!(parse_gen_config("speed = 3").unwrap_err().message.contains("unknown key"));
    assert!(parse_gen_config("overlap = 1.5").is_err());
    assert!(parse_gen_config("overlap = \"high\"").is_err());
    assert!(parse_gen_config("arena_bounds = [1, 2, 3]").is_err());
    assert!(parse_gen_config("arena_bounds = [10, 0, 0, 10]").is_err());
    assert!(parse_gen_config("seed = -1").is_err());
    let e = parse_gen_config("overlap = 0.1\nseed = = 3\n").unwrap_err();
    assert_eq!(e.line, 2);
}

proptest! {
    #[test]
    fn features_survive_text(values in prop::collection::vec(-1e6f64..1e6, FEATURES), interested in any::<bool>()) {
        let ds = Dataset::new(vec![(Instance::new(values).unwrap(), Intention::from_interested(interested))]);
        prop_assert_eq!(parse_dataset(&write_dataset(&ds)).unwrap(), ds);
    }

    #[test]
    fn train_configs_survive_text(epochs in 1usize..1000, hidden in 1usize..64, lr in 1e-6f64..1.0, dropout in 0.0f64..0.99, seed in any::<u64>()) {
        let mut m = model_file();
        m.train = TrainConfig { epochs, dropout, seed, ..m.train };
        m.train.adam.learning_rate = lr;
        m.train.hidden = hidden;
        let back = parse_model(&write_model(&m)).unwrap();
        prop_assert_eq!(back.train, m.train);
    }
}
