use std::sync::OnceLock;

use lcorpp_core::classifier::{AdamConfig, Classifier, ConfusionMatrix, Predictor, TrainConfig};
use lcorpp_core::dataset::*;
use lcorpp_core::metrics::{f1_score, Metrics};
use lcorpp_core::pipeline::*;
use lcorpp_core::pipeline::Strategy;
use lcorpp_core::planner::*;
use lcorpp_core::reasoner::{self, attach_classifier_evidence, default_kb, KnowledgeBase};
use lcorpp_core::rng_from_seed;
use lcorpp_core::simworld::*;
use proptest::prelude::*;
use rand::Rng;

fn model() -> PomdpModel {
    build_intention_pomdp(&IntentionPomdpConfig::default()).unwrap()
}

fn policy() -> &'static Policy {
    static P: OnceLock<Policy> = OnceLock::new();
    P.get_or_init(|| solve(&model(), &intention_solver_config()).unwrap().policy)
}

struct Always(Intention);

impl Predictor for Always {
    fn predict_label(&self, _: &Instance) -> Intention {
        self.0
    }
}

fn example_confusion() -> ConfusionMatrix {
    ConfusionMatrix::new([[0.8, 0.2], [0.29, 0.71]]).unwrap()
}

fn example_facts(kb: &KnowledgeBase) -> Vec<reasoner::Fact> {
    vec![
        kb.literal(reasoner::TIME, "afternoon").unwrap(),
        kb.literal(reasoner::LOCATION, "classroom").unwrap(),
    ]
}

fn any_instance() -> Instance {
    Instance::new(vec![0.5; FEATURES]).unwrap()
}

fn tiny_train() -> TrainConfig {
    TrainConfig {
        epochs: 2,
        batch_size: 16,
        dropout: 0.0,
        hidden: 3,
        adam: AdamConfig::default(),
        seed: 1,
    }
}

fn factory(seed: u64) -> TrialFactory {
    TrialFactory {
        truth: GroundTruth::from_kb(&default_kb()).unwrap(),
        gen: GenConfig::default(),
        noise: 0.3,
        fraction: 1.0,
        seed,
    }
}

fn scenario(classifier: Classifier, seed: u64) -> Scenario {
    Scenario {
        trials: factory(seed),
        kb: default_kb(),
        classifier,
        confusion: example_confusion(),
        model: model(),
        policy: policy().clone(),
        step_cap: 20,
    }
}

#[test]
fn ssub_examples() {
    let a = ConfusionMatrix::new([[0.9, 0.1], [0.2, 0.8]]).unwrap();
    assert!((ssub(&a, &ConfusionMatrix::uniform()) - 1.4).abs() < 1e-12);
    assert_eq!(ssub(&a, &a), 0.0);
    let flipped = ConfusionMatrix::new([[0.0, 1.0], [1.0, 0.0]]).unwrap();
    assert_eq!(ssub(&ConfusionMatrix::identity(), &flipped), MAX_SSUB);
}

#[test]
fn all_positive_feedback_recovers_from_a_false_negative() {
    let kb = attach_classifier_evidence(&default_kb(), &example_confusion()).unwrap();
    let mut human = Scripted::new(vec![], Observation::Pos);
    let (label, trace) = dt_control(
        &Always(Intention::NotInterested),
        &any_instance(),
        &model(),
        policy(),
        &kb,
        &example_facts(&kb),
        &mut human,
        20,
    )
    .unwrap();
    assert_eq!(label, Intention::Interested);
    assert!((trace.prior[0] - 0.2219).abs() < 5e-4, "{:?}", trace.prior);
    assert_eq!(trace.classifier_label, Some(Intention::NotInterested));
    assert!(!trace.truncated && !trace.reasoner_fallback);
    assert_eq!(trace.steps.last().unwrap().action, IntentionAction::ReportInterested);
    assert_eq!(trace.steps[0].action, IntentionAction::Turn);
    assert!(trace.cost() > 0.0);
}

#[test]
fn certain_prior_reports_at_once() {
    for (prior, want) in [([1.0, 0.0], Intention::Interested), ([0.0, 1.0], Intention::NotInterested)] {
        let mut human = Scripted::new(vec![], Observation::Neg);
        let (label, trace) = run_episode(&model(), policy(), prior, &mut human, 20).unwrap();
        assert_eq!(label, want);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.cost(), 0.0);
    }
}

#[test]
fn uninformative_feedback_reports_the_prior_argmax() {
    let cfg = IntentionPomdpConfig {
        reliability_turned: 0.5,
        reliability_not_turned: 0.5,
        ..IntentionPomdpConfig::default()
    };
    let m = build_intention_pomdp(&cfg).unwrap();
    let pol = solve(&m, &intention_solver_config()).unwrap().policy;
    let mut rng = rng_from_seed(3);
    let n = 1000;
    let mut matches = 0;
    for i in 0..n {
        let p: f64 = rng.random();
        let truth = Intention::from_interested(rng.random::<f64>() < p);
        let mut human = SimulatedHuman::new(truth, 0.5, i);
        let (label, _) = run_episode(&m, &pol, [p, 1.0 - p], &mut human, 20).unwrap();
        if label == Intention::from_interested(p >= 0.5) {
            matches += 1;
        }
    }
    assert!(matches as f64 / n as f64 >= 0.95, "{matches}/{n}");
}

#[test]
fn step_cap_forces_a_report() {
    // alternating feedback keeps the belief near the prior
    let script: Vec<Observation> = (0..40).map(|i| if i % 2 == 0 { Observation::Pos } else { Observation::Neg }).collect();
    for cap in [1, 2, 5, 20] {
        let mut human = Scripted::new(script.clone(), Observation::Pos);
        let (label, trace) = run_episode(&model(), policy(), [0.5, 0.5], &mut human, cap).unwrap();
        assert!(trace.steps.len() <= cap);
        assert!(trace.steps.last().unwrap().action.is_report());
        assert_eq!(trace.steps.last().unwrap().action.reported_label(), Some(label));
        if cap <= 5 {
            assert!(trace.truncated);
        }
    }
}

#[test]
fn inconsistent_facts_fall_back_to_uniform() {
    let kb = attach_classifier_evidence(&default_kb(), &ConfusionMatrix::identity()).unwrap();
    let mut facts = example_facts(&kb);
    facts.push(kb.literal(reasoner::INTENTION, "interested").unwrap());
    let mut human = Scripted::new(vec![], Observation::Pos);
    let (_, trace) = dt_control(
        &Always(Intention::NotInterested),
        &any_instance(),
        &model(),
        policy(),
        &kb,
        &facts,
        &mut human,
        20,
    )
    .unwrap();
    assert!(trace.reasoner_fallback);
    assert_eq!(trace.prior, [0.5, 0.5]);
}

#[test]
fn action_costs() {
    let m = model();
    assert_eq!(action_cost(&m, IntentionAction::Turn), 1.0);
    assert_eq!(action_cost(&m, IntentionAction::Greet), 2.0);
    assert_eq!(action_cost(&m, IntentionAction::MoveForward), 3.0);
    assert_eq!(action_cost(&m, IntentionAction::ReportInterested), 0.0);
}

#[test]
fn strategy_names() {
    let names: Vec<&str> = Strategy::ALL.iter().map(|s| s.name()).collect();
    assert_eq!(names, ["L", "R", "P", "L+R", "R+P", "LCORPP"]);
    for s in Strategy::ALL {
        assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        assert_eq!(s.to_string(), s.name());
    }
    assert_eq!("lcorpp".parse::<Strategy>().unwrap(), Strategy::Lcorpp);
    assert!(matches!("Q".parse::<Strategy>(), Err(StrategyError::Unknown(_))));
    let planning: Vec<Strategy> = Strategy::ALL.into_iter().filter(|s| s.plans()).collect();
    assert_eq!(planning, [Strategy::P, Strategy::RP, Strategy::Lcorpp]);
}

#[test]
fn strategies_share_trials_and_costs_follow_planning() {
    let sc = scenario(Classifier::random(4, 1), 11);
    let kb_ev = attach_classifier_evidence(&sc.kb, &sc.confusion).unwrap();
    for i in 0..30 {
        let outs: Vec<TrialOutcome> = Strategy::ALL.iter().map(|s| run_trial(*s, &sc, &kb_ev, i).unwrap()).collect();
        assert!(outs.iter().all(|o| o.truth == outs[0].truth));
        for (s, o) in Strategy::ALL.iter().zip(&outs) {
            if s.plans() {
                assert!(o.trace.steps.last().unwrap().action.is_report());
                assert!(o.trace.steps.len() <= sc.step_cap);
            } else {
                assert!(o.trace.steps.is_empty());
            }
        }
        // both classifier strategies saw the same label
        assert_eq!(outs[0].trace.classifier_label, outs[5].trace.classifier_label);
    }
    for s in [Strategy::L, Strategy::R, Strategy::LR] {
        assert_eq!(run_strategy(s, &sc, 50).unwrap().mean_cost(), 0.0);
    }
    let p = run_strategy(Strategy::P, &sc, 50).unwrap();
    assert!(p.mean_cost() > 0.0);
    assert_eq!(p.trials(), 50);
}

#[test]
fn run_strategy_is_deterministic() {
    let sc = scenario(Classifier::random(4, 2), 12);
    for s in Strategy::ALL {
        assert_eq!(run_strategy(s, &sc, 40).unwrap(), run_strategy(s, &sc, 40).unwrap());
    }
}

#[test]
fn reasoning_strategies_use_the_right_evidence() {
    let sc = scenario(Classifier::random(4, 3), 13);
    let kb_ev = attach_classifier_evidence(&sc.kb, &sc.confusion).unwrap();
    for i in 0..10 {
        let staged = sc.trials.stage(i).unwrap();
        let facts = staged.trial.facts(&sc.kb).unwrap();
        let r = run_trial(Strategy::R, &sc, &kb_ev, i).unwrap();
        assert_eq!(r.trace.prior, reasoner::intention_marginal(&sc.kb, &facts).unwrap());
        let rp = run_trial(Strategy::RP, &sc, &kb_ev, i).unwrap();
        assert_eq!(rp.trace.prior, r.trace.prior);
        let p = run_trial(Strategy::P, &sc, &kb_ev, i).unwrap();
        assert_eq!(p.trace.prior, [0.5, 0.5]);
        let lr = run_trial(Strategy::LR, &sc, &kb_ev, i).unwrap();
        let mut all = facts.clone();
        all.push(reasoner::classifier_fact(&kb_ev, lr.trace.classifier_label.unwrap()).unwrap());
        assert_eq!(lr.trace.prior, reasoner::intention_marginal(&kb_ev, &all).unwrap());
        let full = run_trial(Strategy::Lcorpp, &sc, &kb_ev, i).unwrap();
        assert_eq!(full.trace.prior, lr.trace.prior);
    }
}

fn loop_cfg(batch: usize, max_trials: usize) -> PipelineConfig {
    PipelineConfig {
        epsilon: 0.05,
        batch_size: batch,
        max_trials,
        step_cap: 20,
        folds: 3,
        train: tiny_train(),
        ground_truth_labels: false,
    }
}

#[test]
fn loop_not_entered_when_threshold_dominates() {
    let cfg = PipelineConfig {
        epsilon: MAX_SSUB,
        ..loop_cfg(5, 100)
    };
    let mut src = FactorySource::new(factory(1));
    let mut seen = 0;
    let out = lcorpp_loop(Dataset::default(), &default_kb(), &cfg, &model(), policy(), &mut src, |_, _, _, _| seen += 1).unwrap();
    assert_eq!(out.stop, StopReason::Converged);
    assert!(out.episodes.is_empty());
    assert_eq!(src.next_index, 0);
    assert_eq!(seen, 1);
    assert_eq!(out.confusion, ConfusionMatrix::uniform());
    assert_eq!(out.classifier, Classifier::random(3, 1));
}

#[test]
fn loop_grows_the_dataset_and_respects_the_cap() {
    let omega0 = generate_dataset(9, &GenConfig { positive_rate: 0.5, ..GenConfig::default() }, &mut rng_from_seed(2)).unwrap();
    let cfg = PipelineConfig {
        epsilon: 1e-300,
        ..loop_cfg(5, 12)
    };
    let mut src = FactorySource::new(factory(2));
    let mut records = Vec::new();
    let out = lcorpp_loop(omega0, &default_kb(), &cfg, &model(), policy(), &mut src, |r, _, c, kb| {
        assert_eq!(&r.confusion, c);
        assert!(kb.var_index(reasoner::S_LRN).is_some());
        records.push(r.clone());
    })
    .unwrap();
    assert_eq!(out.episodes.len(), 12);
    assert_eq!(out.dataset.len(), 9 + 12);
    assert_eq!(out.stop, StopReason::TrialCap);
    assert_eq!(out.batches, records);
    assert_eq!(out.batches.iter().map(|b| b.trials).collect::<Vec<_>>(), [0, 5, 10]);
    assert_eq!(out.batches.iter().map(|b| b.dataset_size).collect::<Vec<_>>(), [9, 14, 19]);
    assert!((out.batches[0].divergence - ssub(&ConfusionMatrix::uniform(), &out.batches[0].confusion)).abs() < 1e-15);
    assert!((out.batches[2].divergence - ssub(&out.batches[2].confusion, &out.batches[1].confusion)).abs() < 1e-15);
    for (k, e) in out.episodes.iter().enumerate() {
        assert_eq!(e.trial, k);
        assert_eq!(e.stored, e.reported);
        assert!(e.trace.steps.len() <= cfg.step_cap);
        assert_eq!(e.trace.steps.last().unwrap().action.reported_label(), Some(e.reported));
        assert_eq!(out.dataset.items[9 + k].1, e.stored);
    }
    assert_eq!(out.batches[1].metrics.trials(), 5);
}

#[test]
fn loop_can_store_true_labels() {
    let cfg = PipelineConfig {
        ground_truth_labels: true,
        ..loop_cfg(4, 8)
    };
    let mut src = FactorySource::new(factory(3));
    let out = lcorpp_loop(Dataset::default(), &default_kb(), &cfg, &model(), policy(), &mut src, |_, _, _, _| ()).unwrap();
    assert!(out.episodes.iter().all(|e| e.stored == e.truth));
}

struct Finite(Vec<SourcedTrial<Scripted>>);

impl TrialSource for Finite {
    type Feedback = Scripted;

    fn next_trial(&mut self, _: &KnowledgeBase) -> Option<SourcedTrial<Scripted>> {
        self.0.pop()
    }
}

#[test]
fn loop_stops_when_the_source_runs_dry() {
    let kb = default_kb();
    let trials = (0..3)
        .map(|_| SourcedTrial {
            instance: any_instance(),
            facts: example_facts(&kb),
            truth: Intention::Interested,
            feedback: Scripted::new(vec![], Observation::Pos),
        })
        .collect();
    let mut src = Finite(trials);
    let out = lcorpp_loop(Dataset::default(), &kb, &loop_cfg(10, 100), &model(), policy(), &mut src, |_, _, _, _| ()).unwrap();
    assert_eq!(out.stop, StopReason::Exhausted);
    assert_eq!(out.episodes.len(), 3);
    assert_eq!(out.batches.len(), 1);
}

#[test]
fn loop_is_deterministic_and_validates() {
    let run = || {
        let mut src = FactorySource::new(factory(4));
        lcorpp_loop(Dataset::default(), &default_kb(), &loop_cfg(6, 12), &model(), policy(), &mut src, |_, _, _, _| ()).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.episodes, b.episodes);
    assert_eq!(a.batches, b.batches);
    assert_eq!(a.classifier, b.classifier);

    for bad in [
        PipelineConfig { epsilon: 0.0, ..loop_cfg(5, 5) },
        PipelineConfig { batch_size: 0, ..loop_cfg(5, 5) },
        PipelineConfig { folds: 1, ..loop_cfg(5, 5) },
        PipelineConfig { step_cap: 0, ..loop_cfg(5, 5) },
    ] {
        let mut src = FactorySource::new(factory(4));
        let res = lcorpp_loop(Dataset::default(), &default_kb(), &bad, &model(), policy(), &mut src, |_, _, _, _| ());
        assert!(matches!(res, Err(PipelineError::Config(_))));
    }
}

#[test]
fn retraining_rounds_settle() {
    let mut settled = 0;
    for seed in 0..5 {
        let cfg = PipelineConfig {
            epsilon: 1e-9,
            train: TrainConfig {
                epochs: 15,
                hidden: 6,
                batch_size: 16,
                adam: AdamConfig {
                    learning_rate: 0.01,
                    ..AdamConfig::default()
                },
                seed,
                ..tiny_train()
            },
            ..loop_cfg(80, 240)
        };
        let mut src = FactorySource::new(factory(100 + seed));
        let out = lcorpp_loop(Dataset::default(), &default_kb(), &cfg, &model(), policy(), &mut src, |_, _, _, _| ()).unwrap();
        let d: Vec<f64> = out.batches.iter().map(|b| b.divergence).collect();
        if d[3] < d[1] {
            settled += 1;
        }
    }
    assert!(settled >= 4, "{settled}/5");
}

#[test]
fn f1_examples() {
    use Intention::{Interested as I, NotInterested as N};
    assert_eq!(f1_score([(I, I), (N, N)]).unwrap(), 1.0);
    assert_eq!(f1_score([(I, N), (N, N)]).unwrap(), 0.0);
    let got = f1_score([(I, I), (I, I), (N, I), (I, N), (N, N)]).unwrap();
    assert!((got - 2.0 / 3.0).abs() < 1e-15);
    assert!(f1_score(std::iter::empty()).is_err());

    let mut m = Metrics::default();
    m.record(I, I, 3.0);
    m.record(N, I, 1.0);
    assert_eq!(m.precision(), 0.5);
    assert_eq!(m.recall(), 1.0);
    assert_eq!(m.mean_cost(), 2.0);
    assert_eq!(m.accuracy(), 0.5);
    assert_eq!(Metrics::default().mean_cost(), 0.0);
}

proptest! {
    #[test]
    fn ssub_is_a_symmetric_bounded_distance(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, d in 0.0f64..1.0) {
        let x = ConfusionMatrix::new([[a, 1.0 - a], [b, 1.0 - b]]).unwrap();
        let y = ConfusionMatrix::new([[c, 1.0 - c], [d, 1.0 - d]]).unwrap();
        prop_assert_eq!(ssub(&x, &y), ssub(&y, &x));
        prop_assert!(ssub(&x, &y) >= 0.0 && ssub(&x, &y) <= MAX_SSUB + 1e-12);
        prop_assert_eq!(ssub(&x, &x), 0.0);
    }

    #[test]
    fn episodes_end_in_a_report_within_the_cap(
        p in 0.0f64..1.0,
        cap in 1usize..30,
        script in prop::collection::vec(prop::bool::ANY, 0..30),
    ) {
        let obs = script.into_iter().map(|b| if b { Observation::Pos } else { Observation::Neg }).collect();
        let mut human = Scripted::new(obs, Observation::Neg);
        let (label, trace) = run_episode(&model(), policy(), [p, 1.0 - p], &mut human, cap).unwrap();
        prop_assert!(trace.steps.len() <= cap);
        let last = trace.steps.last().unwrap().action;
        prop_assert_eq!(last.reported_label(), Some(label));
        prop_assert!(trace.steps[..trace.steps.len() - 1].iter().all(|s| !s.action.is_report()));
    }

    #[test]
    fn f1_lies_in_unit_interval(pairs in prop::collection::vec((prop::bool::ANY, prop::bool::ANY), 1..50)) {
        let f = f1_score(pairs.into_iter().map(|(t, r)| (Intention::from_interested(t), Intention::from_interested(r)))).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }
}
