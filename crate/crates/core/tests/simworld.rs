use lcorpp_core::dataset::*;
use lcorpp_core::pipeline::{Feedback, TrialSource};
use lcorpp_core::planner::{IntentionAction, Observation};
use lcorpp_core::reasoner::{self, default_kb, intention_marginal, parse_kb, KnowledgeBase};
use lcorpp_core::rng_from_seed;
use lcorpp_core::simworld::*;

// Tables of the bundled knowledge base, restated by hand.
const PRIOR: [f64; 3] = [0.25, 0.6, 0.15];
const TIME: [[f64; 3]; 3] = [[0.1, 0.25, 0.65], [0.2, 0.7, 0.1], [0.4, 0.25, 0.35]];
const CLASSROOM: [f64; 3] = [0.65, 0.15, 0.9];
const INTERESTED: [f64; 3] = [0.3, 0.85, 0.1];

fn bayes(time: usize, classroom: bool, interested: [f64; 3]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..3 {
        let loc = if classroom { CLASSROOM[i] } else { 1.0 - CLASSROOM[i] };
        let w = PRIOR[i] * TIME[i][time] * loc;
        num += w * interested[i];
        den += w;
    }
    num / den
}

fn facts(kb: &KnowledgeBase, time: TimeOfDay, loc: Location) -> Vec<reasoner::Fact> {
    vec![
        kb.literal(reasoner::TIME, time.name()).unwrap(),
        kb.literal(reasoner::LOCATION, loc.name()).unwrap(),
    ]
}

fn factory(noise: f64, seed: u64) -> TrialFactory {
    TrialFactory {
        truth: GroundTruth::from_kb(&default_kb()).unwrap(),
        gen: GenConfig::default(),
        noise,
        fraction: 1.0,
        seed,
    }
}

#[test]
fn feedback_complies_at_one_minus_noise() {
    let mut rng = rng_from_seed(1);
    for (intention, agree) in [(Intention::Interested, Observation::Pos), (Intention::NotInterested, Observation::Neg)] {
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| observe(0.3, intention, IntentionAction::Greet, &mut rng) == agree)
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.7).abs() < 0.02, "{intention}: {rate}");
    }
}

#[test]
fn feedback_ignores_the_action() {
    let n = 10_000;
    for action in [IntentionAction::Turn, IntentionAction::Greet, IntentionAction::MoveForward] {
        let mut rng = rng_from_seed(2);
        let pos = (0..n)
            .filter(|_| observe(0.3, Intention::Interested, action, &mut rng) == Observation::Pos)
            .count();
        // same stream, same draws
        let mut again = rng_from_seed(2);
        let greet = (0..n)
            .filter(|_| observe(0.3, Intention::Interested, IntentionAction::Greet, &mut again) == Observation::Pos)
            .count();
        assert_eq!(pos, greet);
    }
}

#[test]
fn noiseless_feedback_and_reports() {
    let mut rng = rng_from_seed(3);
    for _ in 0..100 {
        assert_eq!(observe(0.0, Intention::Interested, IntentionAction::Greet, &mut rng), Observation::Pos);
        assert_eq!(observe(0.0, Intention::NotInterested, IntentionAction::Turn, &mut rng), Observation::Neg);
        assert_eq!(observe(1.0, Intention::Interested, IntentionAction::Greet, &mut rng), Observation::Neg);
        for r in [IntentionAction::ReportInterested, IntentionAction::ReportNotInterested] {
            assert_eq!(observe(0.3, Intention::Interested, r, &mut rng), Observation::None);
        }
    }
    let mut human = SimulatedHuman::new(Intention::NotInterested, 0.0, 4);
    assert_eq!(human.observe(IntentionAction::MoveForward), Observation::Neg);
    assert_eq!(human.observe(IntentionAction::ReportInterested), Observation::None);
}

#[test]
fn environment_base_rate_matches_tables() {
    let truth = GroundTruth::from_kb(&default_kb()).unwrap();
    let analytic: f64 = (0..3).map(|i| PRIOR[i] * INTERESTED[i]).sum();
    assert!((truth.interested_rate() - analytic).abs() < 1e-12);
    let mut env = Environment::new(truth, 0.3, GenConfig::default(), 5).unwrap();
    let n = 10_000;
    let mut interested = 0;
    for _ in 0..n {
        let trial = env.new_trial().unwrap();
        if trial.world.intention == Intention::Interested {
            interested += 1;
        }
        assert!(trial.trajectory.points.len() >= SEQ_LEN);
    }
    let rate = interested as f64 / n as f64;
    assert!((rate - analytic).abs() < 0.02, "{rate} vs {analytic}");
}

#[test]
fn facts_hide_identity_and_intention() {
    let kb = default_kb();
    let staged = factory(0.3, 6).stage(0).unwrap();
    let facts = staged.trial.facts(&kb).unwrap();
    let names: Vec<String> = facts.iter().map(|f| kb.describe(*f)).collect();
    assert_eq!(names.len(), 2);
    assert!(names[0].starts_with("time="));
    assert!(names[1].starts_with("location="));
}

#[test]
fn environment_rejects_bad_noise() {
    let truth = GroundTruth::from_kb(&default_kb()).unwrap();
    assert_eq!(
        Environment::new(truth.clone(), 1.5, GenConfig::default(), 0).err(),
        Some(SimError::Noise(1.5))
    );
    let bad_gen = GenConfig {
        overlap: -0.1,
        ..GenConfig::default()
    };
    assert!(Environment::new(truth, 0.3, bad_gen, 0).is_err());
}

#[test]
fn staged_trials_are_reproducible() {
    let f = factory(0.3, 7);
    let a = f.stage(3).unwrap();
    let b = f.stage(3).unwrap();
    assert_eq!(a.trial, b.trial);
    assert_eq!(a.instance, b.instance);
    let (mut ha, mut hb) = (a.human, b.human);
    for _ in 0..50 {
        assert_eq!(ha.observe(IntentionAction::Greet), hb.observe(IntentionAction::Greet));
    }
    let other = f.stage(4).unwrap();
    assert_ne!(other.instance, a.instance);
    let reseeded = factory(0.3, 8).stage(3).unwrap();
    assert_ne!(reseeded.instance, a.instance);
}

#[test]
fn staged_instance_respects_truncation() {
    let mut f = factory(0.3, 9);
    let full = f.stage(0).unwrap();
    f.fraction = 0.25;
    let part = f.stage(0).unwrap();
    assert_eq!(part.trial, full.trial);
    let shown = truncate(&full.trial.trajectory, 0.25).unwrap();
    assert_eq!(part.instance, featurize(&shown, &f.gen.arena).unwrap());
    assert_ne!(part.instance, full.instance);
}

#[test]
fn factory_source_walks_indices() {
    let kb = default_kb();
    let f = factory(0.3, 10);
    let mut src = FactorySource::new(f.clone());
    for i in 0..5 {
        let t = src.next_trial(&kb).unwrap();
        let staged = f.stage(i).unwrap();
        assert_eq!(t.instance, staged.instance);
        assert_eq!(t.truth, staged.trial.world.intention);
        assert_eq!(t.facts, staged.trial.facts(&kb).unwrap());
    }
    assert_eq!(src.next_index, 5);
}

#[test]
fn high_kb_matches_bayes_on_ground_truth() {
    let kb = kb_variant(&default_kb(), KbAccuracy::High).unwrap();
    assert_eq!(kb, default_kb());
    let truth = GroundTruth::from_kb(&kb).unwrap();
    for time in TimeOfDay::ALL {
        for loc in Location::ALL {
            let p = intention_marginal(&kb, &facts(&kb, *time, *loc)).unwrap();
            let want = bayes(time.index(), *loc == Location::Classroom, INTERESTED);
            assert!((p[0] - want).abs() < 1e-9, "{time} {loc}: {} vs {want}", p[0]);
            assert!((truth.interested_given_facts(*time, *loc) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn low_kb_swaps_visitors_and_professors() {
    let kb = kb_variant(&default_kb(), KbAccuracy::Low).unwrap();
    let swapped = [INTERESTED[0], INTERESTED[2], INTERESTED[1]];
    for time in TimeOfDay::ALL {
        for loc in Location::ALL {
            let p = intention_marginal(&kb, &facts(&kb, *time, *loc)).unwrap();
            let want = bayes(time.index(), *loc == Location::Classroom, swapped);
            assert!((p[0] - want).abs() < 1e-9);
        }
    }
    // afternoon in the library is typical of visitors
    let high = default_kb();
    let ph = intention_marginal(&high, &facts(&high, TimeOfDay::Afternoon, Location::Library)).unwrap();
    let pl = intention_marginal(&kb, &facts(&kb, TimeOfDay::Afternoon, Location::Library)).unwrap();
    assert!(ph[0] > 0.5 && pl[0] < 0.5, "high {ph:?}, low {pl:?}");
    // priors on time and location are untouched
    assert_eq!(
        kb.atoms().iter().filter(|a| kb.variables()[a.head.var].name != reasoner::INTENTION).count(),
        high.atoms().iter().filter(|a| high.variables()[a.head.var].name != reasoner::INTENTION).count()
    );
}

#[test]
fn medium_kb_is_uninformative_about_intention() {
    let kb = kb_variant(&default_kb(), KbAccuracy::Medium).unwrap();
    for time in TimeOfDay::ALL {
        for loc in Location::ALL {
            let p = intention_marginal(&kb, &facts(&kb, *time, *loc)).unwrap();
            assert!((p[0] - 0.5).abs() < 1e-12, "{time} {loc}: {p:?}");
        }
    }
    assert_eq!(intention_marginal(&kb, &[]).unwrap(), [0.5, 0.5]);
}

#[test]
fn variants_are_legal_programs() {
    for level in KbAccuracy::ALL {
        let kb = kb_variant(&default_kb(), level).unwrap();
        assert_eq!(parse_kb(&kb.to_string()).unwrap(), kb);
        assert_eq!(KbAccuracy::from_name(level.name()), Some(level));
    }
    assert_eq!(KbAccuracy::from_name("LOW"), Some(KbAccuracy::Low));
    assert_eq!(KbAccuracy::from_name("perfect"), None);
}
