//! World states, synthetic trajectories and labeled datasets.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::reasoner::{self, InferenceError, KnowledgeBase};

/// Number of (x, y) points fed to the classifier.
pub const SEQ_LEN: usize = 30;
/// Coordinates per point.
pub const POINT_DIM: usize = 2;
/// Length of a featurized instance.
pub const FEATURES: usize = SEQ_LEN * POINT_DIM;
/// Nominal time between trajectory samples.
pub const SAMPLE_PERIOD_MS: u32 = 33;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("{table} row {row} sums to {sum}, expected 1")]
    Distribution {
        table: &'static str,
        row: usize,
        sum: f64,
    },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("fraction {0} outside (0, 1]")]
    Fraction(f64),
    #[error("train ratio {0} outside (0, 1)")]
    Ratio(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("knowledge base is not a ground-truth model: {0}")]
    NotGroundTruth(&'static str),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

macro_rules! symbolic {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn index(self) -> usize {
                self as usize
            }

            pub fn from_index(i: usize) -> Option<Self> {
                Self::ALL.get(i).copied()
            }

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn from_name(s: &str) -> Option<Self> {
                Self::ALL.iter().copied().find(|v| v.name() == s)
            }
        }

        impl core::fmt::Display for $name {
            fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

symbolic!(Identity {
    Student => "student",
    Visitor => "visitor",
    Professor => "professor",
});

symbolic!(TimeOfDay {
    Morning => "morning",
    Afternoon => "afternoon",
    Evening => "evening",
});

symbolic!(Location {
    Classroom => "classroom",
    Library => "library",
});

symbolic!(Intention {
    Interested => "interested",
    NotInterested => "not_interested",
});

impl Intention {
    pub fn is_interested(self) -> bool {
        self == Intention::Interested
    }

    pub fn from_interested(interested: bool) -> Self {
        if interested {
            Intention::Interested
        } else {
            Intention::NotInterested
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorldState {
    pub identity: Identity,
    pub time: TimeOfDay,
    pub location: Location,
    pub intention: Intention,
}

/// Identity prior plus identity-conditioned tables for the other variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    identity: [f64; 3],
    time: [[f64; 3]; 3],
    location: [[f64; 2]; 3],
    interested: [f64; 3],
}

fn check_row(table: &'static str, row: usize, probs: &[f64]) -> Result<(), DatasetError> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(DatasetError::Distribution { table, row, sum });
    }
    Ok(())
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding: fall back to the last value with positive mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

impl GroundTruth {
    /// `interested[i]` is P(intention = interested | identity = i).
    pub fn new(
        identity: [f64; 3],
        time: [[f64; 3]; 3],
        location: [[f64; 2]; 3],
        interested: [f64; 3],
    ) -> Result<Self, DatasetError> {
        check_row("identity", 0, &identity)?;
        for i in 0..3 {
            check_row("time", i, &time[i])?;
            check_row("location", i, &location[i])?;
            check_row("intention", i, &[interested[i], 1.0 - interested[i]])?;
            if !(0.0..=1.0).contains(&interested[i]) {
                return Err(DatasetError::Distribution {
                    table: "intention",
                    row: i,
                    sum: interested[i],
                });
            }
        }
        Ok(Self {
            identity,
            time,
            location,
            interested,
        })
    }

    /// Reads the tables off a knowledge base over identity, time, location
    /// and intention. The joint must factor through identity.
    pub fn from_kb(kb: &KnowledgeBase) -> Result<Self, DatasetError> {
        use reasoner::{IDENTITY, INTENTION, LOCATION, TIME};
        let lit = |var: &str, value: &str| {
            kb.literal(var, value)
                .map_err(|_| DatasetError::NotGroundTruth("missing domain variable or value"))
        };
        for id in Identity::ALL {
            lit(IDENTITY, id.name())?;
        }
        for t in TimeOfDay::ALL {
            lit(TIME, t.name())?;
        }
        for l in Location::ALL {
            lit(LOCATION, l.name())?;
        }
        for i in Intention::ALL {
            lit(INTENTION, i.name())?;
        }
        let card = |v: &str| kb.var_index(v).map(|i| kb.variables()[i].values.len());
        if card(IDENTITY) != Some(3) || card(TIME) != Some(3) || card(LOCATION) != Some(2) || card(INTENTION) != Some(2) {
            return Err(DatasetError::NotGroundTruth("unexpected variable ranges"));
        }

        let marginal = |facts: &[reasoner::Fact], var: &str, values: &[&str]| -> Result<Vec<f64>, DatasetError> {
            let belief = reasoner::infer_named(kb, facts, &[var])?;
            values
                .iter()
                .map(|v| Ok(belief.probs()[lit(var, v)?.value]))
                .collect()
        };
        let id_names: Vec<&str> = Identity::ALL.iter().map(|v| v.name()).collect();
        let time_names: Vec<&str> = TimeOfDay::ALL.iter().map(|v| v.name()).collect();
        let loc_names: Vec<&str> = Location::ALL.iter().map(|v| v.name()).collect();
        let int_names: Vec<&str> = Intention::ALL.iter().map(|v| v.name()).collect();

        let prior = marginal(&[], IDENTITY, &id_names)?;
        let mut gt = Self {
            identity: [prior[0], prior[1], prior[2]],
            time: [[0.0; 3]; 3],
            location: [[0.0; 2]; 3],
            interested: [0.0; 3],
        };
        for id in Identity::ALL {
            let i = id.index();
            if gt.identity[i] <= 0.0 {
                gt.time[i] = [1.0 / 3.0; 3];
                gt.location[i] = [0.5; 2];
                gt.interested[i] = 0.5;
                continue;
            }
            let given = [lit(IDENTITY, id.name())?];
            let t = marginal(&given, TIME, &time_names)?;
            let l = marginal(&given, LOCATION, &loc_names)?;
            let n = marginal(&given, INTENTION, &int_names)?;
            gt.time[i] = [t[0], t[1], t[2]];
            gt.location[i] = [l[0], l[1]];
            gt.interested[i] = n[0];
        }

        // the KB must not encode dependencies the tables cannot express
        let joint = reasoner::infer_named(kb, &[], &[IDENTITY, TIME, LOCATION, INTENTION])?;
        for (idx, p) in joint.probs().iter().enumerate() {
            let a = joint.assignment(idx);
            let value_of = |pos: usize, var: &str, names: &[&str]| -> Result<usize, DatasetError> {
                let name = &kb.variables()[kb.var_index(var).unwrap_or(0)].values[a[pos]];
                names
                    .iter()
                    .position(|n| n == name)
                    .ok_or(DatasetError::NotGroundTruth("unexpected value"))
            };
            let state = WorldState {
                identity: Identity::ALL[value_of(0, IDENTITY, &id_names)?],
                time: TimeOfDay::ALL[value_of(1, TIME, &time_names)?],
                location: Location::ALL[value_of(2, LOCATION, &loc_names)?],
                intention: Intention::ALL[value_of(3, INTENTION, &int_names)?],
            };
            if (gt.probability(&state) - p).abs() > 1e-9 {
                return Err(DatasetError::NotGroundTruth(
                    "time, location and intention are not independent given identity",
                ));
            }
        }
        Self::new(gt.identity, gt.time, gt.location, gt.interested)
    }

    pub fn identity_prior(&self) -> [f64; 3] {
        self.identity
    }

    pub fn time_given(&self, id: Identity) -> [f64; 3] {
        self.time[id.index()]
    }

    pub fn location_given(&self, id: Identity) -> [f64; 2] {
        self.location[id.index()]
    }

    pub fn interested_given(&self, id: Identity) -> f64 {
        self.interested[id.index()]
    }

    /// Joint probability of a complete world state.
    pub fn probability(&self, s: &WorldState) -> f64 {
        let i = s.identity.index();
        let p_int = match s.intention {
            Intention::Interested => self.interested[i],
            Intention::NotInterested => 1.0 - self.interested[i],
        };
        self.identity[i] * self.time[i][s.time.index()] * self.location[i][s.location.index()] * p_int
    }

    /// P(intention = interested).
    pub fn interested_rate(&self) -> f64 {
        (0..3).map(|i| self.identity[i] * self.interested[i]).sum()
    }

    /// P(intention = interested | time, location).
    pub fn interested_given_facts(&self, time: TimeOfDay, location: Location) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..3 {
            let w = self.identity[i] * self.time[i][time.index()] * self.location[i][location.index()];
            num += w * self.interested[i];
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            0.5
        }
    }
}

/// Samples identity from its prior, then the remaining variables from their
/// identity-conditioned tables.
pub fn sample_world<R: Rng + ?Sized>(gt: &GroundTruth, rng: &mut R) -> WorldState {
    let id = Identity::ALL[draw(&gt.identity, rng)];
    let i = id.index();
    let time = TimeOfDay::ALL[draw(&gt.time[i], rng)];
    let location = Location::ALL[draw(&gt.location[i], rng)];
    let interested = rng.random::<f64>() < gt.interested[i];
    WorldState {
        identity: id,
        time,
        location,
        intention: Intention::from_interested(interested),
    }
}

/// Axis-aligned arena in millimeters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArenaBounds {
    pub min: (f64, f64),
    pub max: (f64, f64),
}

impl ArenaBounds {
    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.min.0 + self.max.0),
            0.5 * (self.min.1 + self.max.1),
        )
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let ok = [self.min.0, self.min.1, self.max.0, self.max.1]
            .iter()
            .all(|v| v.is_finite());
        if !ok || self.max.0 <= self.min.0 || self.max.1 <= self.min.1 {
            return Err(DatasetError::Config("arena bounds must be finite with max > min"));
        }
        Ok(())
    }
}

impl Default for ArenaBounds {
    fn default() -> Self {
        Self {
            min: (0.0, 0.0),
            max: (10_000.0, 10_000.0),
        }
    }
}

/// Parameters of the trajectory generator.
///
/// People start on a circle around the robot and walk as if to pass it.
/// At a random decision step, interested people turn toward the robot and
/// stop near it; the others veer away.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub arena: ArenaBounds,
    pub points: usize,
    pub start_radius: f64,
    /// Walking speed range, millimeters per sample.
    pub speed: (f64, f64),
    /// Initial lateral aim offset range.
    pub pass_offset: (f64, f64),
    /// Extra heading away from the robot after deciding not to engage (rad).
    pub veer: f64,
    /// Decision step range as fractions of `points`.
    pub decision: (f64, f64),
    pub max_turn: f64,
    pub approach_radius: f64,
    pub stop_radius: f64,
    /// Per-step heading noise std (rad).
    pub heading_noise: f64,
    /// Measurement noise std on recorded points (mm).
    pub position_noise: f64,
    /// Probability that a trajectory's motion ignores its label.
    pub overlap: f64,
    /// Fraction of interested instances in generated datasets.
    pub positive_rate: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            arena: ArenaBounds::default(),
            points: SEQ_LEN,
            start_radius: 3500.0,
            speed: (150.0, 200.0),
            pass_offset: (1500.0, 2500.0),
            veer: 0.3,
            decision: (0.15, 0.45),
            max_turn: 0.3,
            approach_radius: 1000.0,
            stop_radius: 400.0,
            heading_noise: 0.05,
            position_noise: 30.0,
            overlap: 0.4,
            positive_rate: 0.027,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        self.arena.validate()?;
        let finite = [
            self.start_radius,
            self.speed.0,
            self.speed.1,
            self.pass_offset.0,
            self.pass_offset.1,
            self.veer,
            self.decision.0,
            self.decision.1,
            self.max_turn,
            self.approach_radius,
            self.stop_radius,
            self.heading_noise,
            self.position_noise,
            self.overlap,
            self.positive_rate,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(DatasetError::Config("parameters must be finite"));
        }
        if self.points == 0 {
            return Err(DatasetError::Config("points must be positive"));
        }
        if self.start_radius <= 0.0 || self.speed.0 <= 0.0 || self.speed.1 < self.speed.0 {
            return Err(DatasetError::Config("radius and speed must be positive"));
        }
        if self.pass_offset.0 < 0.0 || self.pass_offset.1 < self.pass_offset.0 {
            return Err(DatasetError::Config("pass offset range invalid"));
        }
        if !(0.0..=1.0).contains(&self.decision.0) || !(self.decision.0..=1.0).contains(&self.decision.1) {
            return Err(DatasetError::Config("decision range must lie in [0, 1]"));
        }
        if self.max_turn <= 0.0 || self.approach_radius <= 0.0 || self.stop_radius < 0.0 {
            return Err(DatasetError::Config("turn rate and radii must be positive"));
        }
        if self.heading_noise < 0.0 || self.position_noise < 0.0 {
            return Err(DatasetError::Config("noise must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.overlap) || !(0.0..=1.0).contains(&self.positive_rate) {
            return Err(DatasetError::Config("overlap and positive rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<(f64, f64)>,
    pub label: Intention,
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a < -PI {
        a += 2.0 * PI;
    }
    a
}

fn normal<R: Rng + ?Sized>(std: f64, rng: &mut R) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, std).map(|n| n.sample(rng)).unwrap_or(0.0)
}

/// Generates a walking trajectory for a person with the given intention.
pub fn synthesize_trajectory<R: Rng + ?Sized>(
    intention: Intention,
    rng: &mut R,
    cfg: &GenConfig,
) -> Result<Trajectory, DatasetError> {
    cfg.validate()?;
    let robot = cfg.arena.center();
    let engages = if rng.random::<f64>() < cfg.overlap {
        rng.random::<bool>()
    } else {
        intention.is_interested()
    };

    let phi = rng.random_range(0.0..2.0 * PI);
    let mut pos = (
        robot.0 + cfg.start_radius * libm::cos(phi),
        robot.1 + cfg.start_radius * libm::sin(phi),
    );
    let inward = (-libm::cos(phi), -libm::sin(phi));
    let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let offset = rng.random_range(cfg.pass_offset.0..=cfg.pass_offset.1);
    let aim = (
        robot.0 - side * offset * inward.1,
        robot.1 + side * offset * inward.0,
    );
    let cruise = libm::atan2(aim.1 - pos.1, aim.0 - pos.0);
    let speed = rng.random_range(cfg.speed.0..=cfg.speed.1);
    let decide_at = libm::floor(rng.random_range(cfg.decision.0..=cfg.decision.1) * cfg.points as f64) as usize;
    // the robot lies on the `-side` side of the cruise heading
    let veered = cruise + side * cfg.veer;

    let mut heading = cruise + normal(cfg.heading_noise, rng);
    let mut raw = Vec::with_capacity(cfg.points);
    raw.push(pos);
    for k in 1..cfg.points {
        let to_robot = (robot.0 - pos.0, robot.1 - pos.1);
        let dist = libm::hypot(to_robot.0, to_robot.1);
        let desired = if k < decide_at {
            cruise
        } else if engages {
            libm::atan2(to_robot.1, to_robot.0)
        } else {
            veered
        };
        let turn = wrap_angle(desired - heading).clamp(-cfg.max_turn, cfg.max_turn);
        heading = wrap_angle(heading + turn + normal(cfg.heading_noise, rng));
        let step = if k >= decide_at && engages {
            speed.min((dist - cfg.stop_radius).max(0.0))
        } else {
            speed
        };
        pos = (pos.0 + step * libm::cos(heading), pos.1 + step * libm::sin(heading));
        raw.push(pos);
    }

    let points = raw
        .into_iter()
        .map(|(x, y)| {
            (
                x + normal(cfg.position_noise, rng),
                y + normal(cfg.position_noise, rng),
            )
        })
        .collect();
    Ok(Trajectory {
        points,
        label: intention,
    })
}

/// Keeps the first `ceil(fraction * len)` points.
pub fn truncate(traj: &Trajectory, fraction: f64) -> Result<Trajectory, DatasetError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DatasetError::Fraction(fraction));
    }
    let keep = libm::ceil(fraction * traj.points.len() as f64) as usize;
    Ok(Trajectory {
        points: traj.points[..keep.min(traj.points.len())].to_vec(),
        label: traj.label,
    })
}

/// A featurized trajectory: `SEQ_LEN` interleaved (x, y) pairs in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    features: Vec<f64>,
}

impl Instance {
    /// Wraps a raw feature vector. Fails unless it has exactly `FEATURES`
    /// finite entries.
    pub fn new(features: Vec<f64>) -> Option<Self> {
        (features.len() == FEATURES && features.iter().all(|v| v.is_finite())).then_some(Self { features })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Point `t` as `[x, y]`.
    pub fn step(&self, t: usize) -> &[f64] {
        &self.features[t * POINT_DIM..(t + 1) * POINT_DIM]
    }
}

/// Takes the first `SEQ_LEN` points, padding short trajectories with their
/// last point, and min-max scales each coordinate by the arena bounds.
pub fn featurize(traj: &Trajectory, arena: &ArenaBounds) -> Result<Instance, DatasetError> {
    let last = *traj.points.last().ok_or(DatasetError::EmptyTrajectory)?;
    arena.validate()?;
    let scale = |v: f64, lo: f64, hi: f64| ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    let mut features = Vec::with_capacity(FEATURES);
    for t in 0..SEQ_LEN {
        let (x, y) = traj.points.get(t).copied().unwrap_or(last);
        features.push(scale(x, arena.min.0, arena.max.0));
        features.push(scale(y, arena.min.1, arena.max.1));
    }
    Instance::new(features).ok_or(DatasetError::Config("trajectory coordinates must be finite"))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub items: Vec<(Instance, Intention)>,
}

impl Dataset {
    pub fn new(items: Vec<(Instance, Intention)>) -> Self {
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, instance: Instance, label: Intention) {
        self.items.push((instance, label));
    }

    pub fn count(&self, label: Intention) -> usize {
        self.items.iter().filter(|(_, l)| *l == label).count()
    }
}

/// Generates `n` labeled instances with `round(n * positive_rate)`
/// positives, in shuffled order.
pub fn generate_dataset<R: Rng + ?Sized>(
    n: usize,
    cfg: &GenConfig,
    rng: &mut R,
) -> Result<Dataset, DatasetError> {
    generate_dataset_with(n, cfg, 1.0, rng)
}

/// Like [`generate_dataset`], but each trajectory is truncated to `fraction`
/// before featurization.
pub fn generate_dataset_with<R: Rng + ?Sized>(
    n: usize,
    cfg: &GenConfig,
    fraction: f64,
    rng: &mut R,
) -> Result<Dataset, DatasetError> {
    cfg.validate()?;
    let positives = libm::round(n as f64 * cfg.positive_rate) as usize;
    let mut labels: Vec<Intention> = (0..n)
        .map(|i| Intention::from_interested(i < positives))
        .collect();
    labels.shuffle(rng);
    let mut ds = Dataset::default();
    for label in labels {
        let traj = truncate(&synthesize_trajectory(label, rng, cfg)?, fraction)?;
        ds.push(featurize(&traj, &cfg.arena)?, label);
    }
    Ok(ds)
}

/// Stratified split. The first partition gets `round(ratio * n)` items,
/// apportioned across classes by largest remainder so that each class is
/// within one item of exact stratification.
pub fn split<R: Rng + ?Sized>(
    ds: &Dataset,
    train_ratio: f64,
    rng: &mut R,
) -> Result<(Dataset, Dataset), DatasetError> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(DatasetError::Ratio(train_ratio));
    }
    if ds.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let classes: Vec<Vec<usize>> = Intention::ALL
        .iter()
        .map(|label| (0..ds.len()).filter(|&i| ds.items[i].1 == *label).collect())
        .collect();
    let exact: Vec<f64> = classes.iter().map(|c| train_ratio * c.len() as f64).collect();
    let mut take: Vec<usize> = exact.iter().map(|e| libm::floor(*e) as usize).collect();
    let target = libm::round(train_ratio * ds.len() as f64) as usize;
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - take[a] as f64;
        let rb = exact[b] - take[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(take.iter().sum());
    for &c in order.iter().cycle().take(2 * classes.len()) {
        if missing == 0 {
            break;
        }
        if take[c] < classes[c].len() {
            take[c] += 1;
            missing -= 1;
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (mut idx, k) in classes.into_iter().zip(take) {
        idx.shuffle(rng);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.shuffle(rng);
    test.shuffle(rng);
    let pick = |ix: &[usize]| Dataset::new(ix.iter().map(|&i| ds.items[i].clone()).collect());
    Ok((pick(&train), pick(&test)))
}

/// Distance from the last recorded point to the robot.
pub fn terminal_distance(traj: &Trajectory, arena: &ArenaBounds) -> f64 {
    let c = arena.center();
    traj.points
        .last()
        .map(|p| libm::hypot(p.0 - c.0, p.1 - c.1))
        .unwrap_or(f64::INFINITY)
}
