//! Text file formats: datasets, trained models, POMDP models, loop history
//! and generator configs.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use lcorpp_core::classifier::{AdamConfig, Classifier, ConfusionMatrix, LstmParams, TrainConfig};
use lcorpp_core::dataset::{ArenaBounds, Dataset, GenConfig, Instance, Intention, FEATURES, POINT_DIM};
use lcorpp_core::metrics::Metrics;
use lcorpp_core::pipeline::{BatchRecord, EpisodeRecord};
use lcorpp_core::planner::PomdpModel;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// A malformed file, with the 1-based line at fault (0 when the problem is
/// not tied to a line).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn bad(line: usize, message: impl Into<String>) -> FormatError {
    FormatError {
        line,
        message: message.into(),
    }
}

fn num(line: usize, s: &str) -> Result<f64, FormatError> {
    let v: f64 = s.trim().parse().map_err(|_| bad(line, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(bad(line, format!("`{s}` is not finite")));
    }
    Ok(v)
}

fn int<T: FromStr>(line: usize, s: &str) -> Result<T, FormatError> {
    s.trim().parse().map_err(|_| bad(line, format!("`{s}` is not a non-negative integer")))
}

// Skips blank lines and `#` comments.
fn content_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

// ---- datasets ----

/// One instance per line: `1` (interested) or `0`, then the features, all
/// comma separated.
pub fn write_dataset(ds: &Dataset) -> String {
    let mut out = String::new();
    for (inst, label) in &ds.items {
        out.push(if label.is_interested() { '1' } else { '0' });
        for x in inst.features() {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_dataset(src: &str) -> Result<Dataset, FormatError> {
    let mut ds = Dataset::default();
    for (n, line) in content_lines(src) {
        let mut fields = line.split(',');
        let label = match fields.next().map(str::trim) {
            Some("1") => Intention::Interested,
            Some("0") => Intention::NotInterested,
            other => return Err(bad(n, format!("label must be 0 or 1, got `{}`", other.unwrap_or("")))),
        };
        let features = fields.map(|f| num(n, f)).collect::<Result<Vec<_>, _>>()?;
        if features.len() != FEATURES {
            return Err(bad(n, format!("expected {FEATURES} features, found {}", features.len())));
        }
        let inst = Instance::new(features).ok_or_else(|| bad(n, "bad instance"))?;
        ds.push(inst, label);
    }
    Ok(ds)
}

// ---- trained models ----

const MODEL_MAGIC: &str = "lcorpp-model 1";

/// A trained classifier with the configuration that produced it and its
/// cross-validated confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub classifier: Classifier,
    pub train: TrainConfig,
    pub confusion: ConfusionMatrix,
}

/// Canonical one-line form of a training configuration.
pub fn train_config_string(cfg: &TrainConfig) -> String {
    format!(
        "epochs={} batch_size={} dropout={} hidden={} learning_rate={} beta1={} beta2={} epsilon={} seed={}",
        cfg.epochs,
        cfg.batch_size,
        cfg.dropout,
        cfg.hidden,
        cfg.adam.learning_rate,
        cfg.adam.beta1,
        cfg.adam.beta2,
        cfg.adam.epsilon,
        cfg.seed
    )
}

pub fn train_config_hash(cfg: &TrainConfig) -> String {
    Sha256::digest(train_config_string(cfg).as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
}

fn parse_train_config(line: usize, s: &str) -> Result<TrainConfig, FormatError> {
    let mut cfg = TrainConfig {
        adam: AdamConfig::default(),
        ..TrainConfig::default()
    };
    let mut seen = 0;
    for pair in s.split_whitespace() {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| bad(line, format!("expected key=value, got `{pair}`")))?;
        match k {
            "epochs" => cfg.epochs = int(line, v)?,
            "batch_size" => cfg.batch_size = int(line, v)?,
            "dropout" => cfg.dropout = num(line, v)?,
            "hidden" => cfg.hidden = int(line, v)?,
            "learning_rate" => cfg.adam.learning_rate = num(line, v)?,
            "beta1" => cfg.adam.beta1 = num(line, v)?,
            "beta2" => cfg.adam.beta2 = num(line, v)?,
            "epsilon" => cfg.adam.epsilon = num(line, v)?,
            "seed" => cfg.seed = int(line, v)?,
            _ => return Err(bad(line, format!("unknown training key `{k}`"))),
        }
        seen += 1;
    }
    if seen != 9 {
        return Err(bad(line, "training configuration is incomplete"));
    }
    Ok(cfg)
}

pub fn write_model(m: &ModelFile) -> String {
    let p = m.classifier.params();
    let c = m.confusion.rows();
    let mut out = String::new();
    writeln!(out, "{MODEL_MAGIC}").unwrap();
    writeln!(out, "input {}", p.input()).unwrap();
    writeln!(out, "hidden {}", p.hidden()).unwrap();
    writeln!(out, "train {}", train_config_string(&m.train)).unwrap();
    writeln!(out, "train_sha256 {}", train_config_hash(&m.train)).unwrap();
    writeln!(out, "confusion {} {} {} {}", c[0][0], c[0][1], c[1][0], c[1][1]).unwrap();
    writeln!(out, "params {}", p.len()).unwrap();
    for x in p.as_slice() {
        writeln!(out, "{x}").unwrap();
    }
    out
}

pub fn parse_model(src: &str) -> Result<ModelFile, FormatError> {
    let mut lines = src.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| bad(0, format!("unexpected end of file, expected {what}")))
    };
    let (n, magic) = next("header")?;
    if magic != MODEL_MAGIC {
        return Err(bad(n, format!("not a model file (expected `{MODEL_MAGIC}`)")));
    }
    let field = |(n, l): (usize, &str), key: &str| -> Result<(usize, String), FormatError> {
        l.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .map(|r| (n, r.trim().to_string()))
            .ok_or_else(|| bad(n, format!("expected `{key}`")))
    };
    let (n, v) = field(next("input")?, "input")?;
    let input: usize = int(n, &v)?;
    if input != POINT_DIM {
        return Err(bad(n, format!("input size {input}, expected {POINT_DIM}")));
    }
    let (n, v) = field(next("hidden")?, "hidden")?;
    let hidden: usize = int(n, &v)?;
    let (n, v) = field(next("train")?, "train")?;
    let train = parse_train_config(n, &v)?;
    let (n, hash) = field(next("train_sha256")?, "train_sha256")?;
    if hash != train_config_hash(&train) {
        return Err(bad(n, "training configuration hash mismatch"));
    }
    let (n, v) = field(next("confusion")?, "confusion")?;
    let c = v.split_whitespace().map(|x| num(n, x)).collect::<Result<Vec<_>, _>>()?;
    if c.len() != 4 {
        return Err(bad(n, "confusion needs four entries"));
    }
    let confusion =
        ConfusionMatrix::new([[c[0], c[1]], [c[2], c[3]]]).map_err(|e| bad(n, e.to_string()))?;
    let (n, v) = field(next("params")?, "params")?;
    let count: usize = int(n, &v)?;
    if count != LstmParams::len_for(input, hidden) {
        return Err(bad(n, format!("{count} parameters do not fit hidden size {hidden}")));
    }
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, l) = next("parameter")?;
        data.push(num(n, l)?);
    }
    if let Some((n, l)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(bad(n, format!("trailing content `{l}`")));
    }
    let params = LstmParams::from_vec(input, hidden, data).map_err(|e| bad(0, e.to_string()))?;
    let classifier = Classifier::new(params).map_err(|e| bad(0, e.to_string()))?;
    Ok(ModelFile {
        classifier,
        train,
        confusion,
    })
}

// ---- POMDP models ----

pub fn write_pomdp(m: &PomdpModel) -> String {
    let mut out = String::new();
    writeln!(out, "states: {}", m.states.join(" ")).unwrap();
    writeln!(out, "actions: {}", m.actions.join(" ")).unwrap();
    writeln!(out, "observations: {}", m.observations.join(" ")).unwrap();
    writeln!(out, "gamma: {}", m.gamma).unwrap();
    for (a, an) in m.actions.iter().enumerate() {
        for (s, sn) in m.states.iter().enumerate() {
            for (s2, s2n) in m.states.iter().enumerate() {
                let p = m.t(s, a, s2);
                if p != 0.0 {
                    writeln!(out, "T: {sn} {an} {s2n} {p}").unwrap();
                }
            }
        }
    }
    for (a, an) in m.actions.iter().enumerate() {
        for (s2, s2n) in m.states.iter().enumerate() {
            for (z, zn) in m.observations.iter().enumerate() {
                let p = m.o(s2, a, z);
                if p != 0.0 {
                    writeln!(out, "O: {s2n} {an} {zn} {p}").unwrap();
                }
            }
        }
    }
    for (s, sn) in m.states.iter().enumerate() {
        for (a, an) in m.actions.iter().enumerate() {
            writeln!(out, "R: {sn} {an} {}", m.r(s, a)).unwrap();
        }
    }
    out
}

/// Parses the POMDP text format. Entries not listed are zero. The result
/// passes [`PomdpModel::validate`].
pub fn parse_pomdp(src: &str) -> Result<PomdpModel, FormatError> {
    let mut names: [Option<Vec<String>>; 3] = [None, None, None];
    let mut gamma = None;
    let mut entries = Vec::new();
    for (n, line) in content_lines(src) {
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| bad(n, "expected `key: value`"))?;
        let rest = rest.trim();
        let slot = match key.trim() {
            "states" => Some(0),
            "actions" => Some(1),
            "observations" => Some(2),
            "gamma" => {
                gamma = Some(num(n, rest)?);
                None
            }
            k @ ("T" | "O" | "R") => {
                entries.push((n, k.to_string(), rest.to_string()));
                None
            }
            other => return Err(bad(n, format!("unknown key `{other}`"))),
        };
        if let Some(i) = slot {
            if names[i].is_some() {
                return Err(bad(n, format!("`{}` declared twice", key.trim())));
            }
            let list: Vec<String> = rest.split_whitespace().map(String::from).collect();
            if list.is_empty() {
                return Err(bad(n, "empty name list"));
            }
            names[i] = Some(list);
        }
    }
    let [Some(states), Some(actions), Some(observations)] = names else {
        return Err(bad(0, "states, actions and observations must all be declared"));
    };
    let gamma = gamma.ok_or_else(|| bad(0, "gamma is missing"))?;
    fn refs(v: &[String]) -> Vec<&str> {
        v.iter().map(String::as_str).collect()
    }
    let mut m = PomdpModel::empty(&refs(&states), &refs(&actions), &refs(&observations), gamma);
    for (n, kind, rest) in entries {
        let f: Vec<&str> = rest.split_whitespace().collect();
        let want = if kind == "R" { 3 } else { 4 };
        if f.len() != want {
            return Err(bad(n, format!("{kind} expects {want} fields")));
        }
        let lookup = |name: &str, idx: Option<usize>, what: &str| {
            idx.ok_or_else(|| bad(n, format!("unknown {what} `{name}`")))
        };
        match kind.as_str() {
            "T" => {
                let s = lookup(f[0], m.state_index(f[0]), "state")?;
                let a = lookup(f[1], m.action_index(f[1]), "action")?;
                let s2 = lookup(f[2], m.state_index(f[2]), "state")?;
                m.transition[a][s][s2] = num(n, f[3])?;
            }
            "O" => {
                let s2 = lookup(f[0], m.state_index(f[0]), "state")?;
                let a = lookup(f[1], m.action_index(f[1]), "action")?;
                let z = lookup(f[2], m.observation_index(f[2]), "observation")?;
                m.observation[a][s2][z] = num(n, f[3])?;
            }
            _ => {
                let s = lookup(f[0], m.state_index(f[0]), "state")?;
                let a = lookup(f[1], m.action_index(f[1]), "action")?;
                m.reward[s][a] = num(n, f[2])?;
            }
        }
    }
    m.validate().map_err(|e| bad(0, e.to_string()))?;
    Ok(m)
}

// ---- loop history ----

/// One line of a loop history file.
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryLine {
    Episode {
        trial: usize,
        truth: Intention,
        reported: Intention,
        stored: Intention,
        steps: usize,
        cost: f64,
    },
    Batch {
        batch: usize,
        trials: usize,
        dataset_size: usize,
        confusion: [[f64; 2]; 2],
        divergence: f64,
        metrics: Metrics,
    },
}

impl From<&EpisodeRecord> for HistoryLine {
    fn from(r: &EpisodeRecord) -> Self {
        HistoryLine::Episode {
            trial: r.trial,
            truth: r.truth,
            reported: r.reported,
            stored: r.stored,
            steps: r.trace.steps.len(),
            cost: r.trace.cost(),
        }
    }
}

impl From<&BatchRecord> for HistoryLine {
    fn from(r: &BatchRecord) -> Self {
        HistoryLine::Batch {
            batch: r.batch,
            trials: r.trials,
            dataset_size: r.dataset_size,
            confusion: r.confusion.rows(),
            divergence: r.divergence,
            metrics: r.metrics,
        }
    }
}

impl fmt::Display for HistoryLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryLine::Episode {
                trial,
                truth,
                reported,
                stored,
                steps,
                cost,
            } => write!(f, "episode {trial} {truth} {reported} {stored} {steps} {cost}"),
            HistoryLine::Batch {
                batch,
                trials,
                dataset_size,
                confusion: c,
                divergence,
                metrics: m,
            } => write!(
                f,
                "batch {batch} {trials} {dataset_size} {} {} {} {} {divergence} {} {} {} {} {}",
                c[0][0], c[0][1], c[1][0], c[1][1], m.tp, m.fp, m.fn_, m.tn, m.total_cost
            ),
        }
    }
}

impl FromStr for HistoryLine {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let f: Vec<&str> = s.split_whitespace().collect();
        let label = |x: &str| Intention::from_name(x).ok_or_else(|| bad(0, format!("unknown label `{x}`")));
        match f.first().copied() {
            Some("episode") if f.len() == 7 => Ok(HistoryLine::Episode {
                trial: int(0, f[1])?,
                truth: label(f[2])?,
                reported: label(f[3])?,
                stored: label(f[4])?,
                steps: int(0, f[5])?,
                cost: num(0, f[6])?,
            }),
            Some("batch") if f.len() == 14 => Ok(HistoryLine::Batch {
                batch: int(0, f[1])?,
                trials: int(0, f[2])?,
                dataset_size: int(0, f[3])?,
                confusion: [[num(0, f[4])?, num(0, f[5])?], [num(0, f[6])?, num(0, f[7])?]],
                divergence: num(0, f[8])?,
                metrics: Metrics {
                    tp: int(0, f[9])?,
                    fp: int(0, f[10])?,
                    fn_: int(0, f[11])?,
                    tn: int(0, f[12])?,
                    total_cost: num(0, f[13])?,
                },
            }),
            _ => Err(bad(0, format!("malformed history line `{s}`"))),
        }
    }
}

pub fn parse_history(src: &str) -> Result<Vec<HistoryLine>, FormatError> {
    content_lines(src)
        .map(|(n, l)| l.parse().map_err(|e: FormatError| bad(n, e.message)))
        .collect()
}

// ---- generator configs ----

/// Generator settings read from TOML, plus an optional seed.
#[derive(Debug, Clone, PartialEq)]
pub struct GenFile {
    pub gen: GenConfig,
    pub seed: Option<u64>,
}

/// Reads a generator config. Recognized keys are `arena_bounds`
/// (`[min_x, min_y, max_x, max_y]` in millimeters), `overlap`,
/// `positive_rate` and `seed`; anything else is an error.
pub fn parse_gen_config(src: &str) -> Result<GenFile, FormatError> {
    let table: toml::Table = src.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map_or(0, |r| src[..r.start].lines().count().max(1));
        bad(line, e.message().to_string())
    })?;
    let mut out = GenFile {
        gen: GenConfig::default(),
        seed: None,
    };
    let float = |k: &str, v: &toml::Value| {
        v.as_float()
            .or_else(|| v.as_integer().map(|i| i as f64))
            .ok_or_else(|| bad(0, format!("`{k}` must be a number")))
    };
    for (k, v) in &table {
        match k.as_str() {
            "arena_bounds" => {
                let arr = v
                    .as_array()
                    .filter(|a| a.len() == 4)
                    .ok_or_else(|| bad(0, "`arena_bounds` must be an array of four numbers"))?;
                let b = arr.iter().map(|x| float(k, x)).collect::<Result<Vec<_>, _>>()?;
                out.gen.arena = ArenaBounds {
                    min: (b[0], b[1]),
                    max: (b[2], b[3]),
                };
            }
            "overlap" => out.gen.overlap = float(k, v)?,
            "positive_rate" => out.gen.positive_rate = float(k, v)?,
            "seed" => {
                let s = v
                    .as_integer()
                    .filter(|s| *s >= 0)
                    .ok_or_else(|| bad(0, "`seed` must be a non-negative integer"))?;
                out.seed = Some(s as u64);
            }
            other => return Err(bad(0, format!("unknown key `{other}`"))),
        }
    }
    out.gen.validate().map_err(|e| bad(0, e.to_string()))?;
    Ok(out)
}
