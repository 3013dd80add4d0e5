//! Flat `key = value` experiment files.
//!
//! Keys are dotted (`loss.kind`, `train.epochs`), one per line; `#` starts a
//! comment. Every key is optional except `task.name`. Lists are
//! comma-separated, and seeds also accept a half-open range such as `0..10`.
//!
//! | key | values | default |
//! |-----|--------|---------|
//! | `task.name` | `aloha`, `edit_distance`, `ehrlich` | required |
//! | `task.vocab` | symbol string (edit distance) | `A..Z` |
//! | `task.target` | target string (edit distance) | `ALOHA` |
//! | `task.length`, `task.motifs`, `task.motif_length`, `task.quantization` | Ehrlich shape | 15, 2, 4, 4 |
//! | `task.instance_seed` | Ehrlich construction seed | 0 |
//! | `task.instance_path` | JSON Ehrlich instance, overrides the seed | none |
//! | `task.noise_sigma` | Gaussian observation noise | 0 |
//! | `experiment.methods` | `genbo`, `random_mutation` | `genbo,random_mutation` |
//! | `experiment.rounds`, `experiment.batch_size`, `experiment.init_size` | T, B, initial design | task preset |
//! | `experiment.seeds` | `0,1,2` or `0..10` | `0..10` |
//! | `experiment.init_min_edit_distance` | initial design constraint (edit distance) | 4 for `aloha`, none otherwise |
//! | `experiment.mutations` | positions re-drawn by the baseline | 3 |
//! | `utility.kind` | `pi`, `ei`, `sei`, `sr` | `sei` |
//! | `utility.sharpness` | sEI scale | 1.0 |
//! | `loss.kind` | `pl`, `rpl`, `fkl`, `bfkl` | `rpl` |
//! | `loss.temperature`, `loss.p_flip` | preference loss settings | 1.0, 0.1 |
//! | `loss.importance_weights` | `logits` variant: p0 / q_sampled weights | false |
//! | `prior.kind` | `noprior`, `prior` | `noprior` |
//! | `prior.smoothing` | pseudo-count for the fitted prior | 1.0 |
//! | `reg.kind` | `quadratic`, `exp` | `quadratic` |
//! | `reg.lambda0` | base regularization factor | 0.1 |
//! | `train.learning_rate`, `train.epochs` | Adam settings | 0.05, 200 |
//! | `train.adam_beta1`, `train.adam_beta2`, `train.adam_eps` | Adam settings | 0.9, 0.999, 1e-8 |
//! | `train.grad_clip_norm`, `train.warm_start`, `train.init_scale` | | 10, true, 0.01 |
//! | `threshold.p_start`, `threshold.p_end` | quantile schedule | 0.5, 0.99 |
//! | `genbo.cbas_last_batch_only` | train on the previous batch only | false |
//! | `genbo.label` | method name in outputs | derived from the settings |

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use genbo_core::blackbox::EhrlichConfig;
use genbo_core::rng::{rng_stream, tags};
use genbo_core::{
    BlackBox, EditDistanceTask, EhrlichFunction, ExperimentConfig, LossKind, LossSpec, Method, PriorMode,
    RegularizerKind, Task, UtilityKind, Vocab,
};

/// A config problem, anchored to a line when one is to blame.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

const KEYS: &[&str] = &[
    "task.name",
    "task.vocab",
    "task.target",
    "task.length",
    "task.motifs",
    "task.motif_length",
    "task.quantization",
    "task.instance_seed",
    "task.instance_path",
    "task.noise_sigma",
    "experiment.methods",
    "experiment.rounds",
    "experiment.batch_size",
    "experiment.init_size",
    "experiment.seeds",
    "experiment.init_min_edit_distance",
    "experiment.mutations",
    "utility.kind",
    "utility.sharpness",
    "loss.kind",
    "loss.temperature",
    "loss.p_flip",
    "loss.importance_weights",
    "prior.kind",
    "prior.smoothing",
    "reg.kind",
    "reg.lambda0",
    "train.learning_rate",
    "train.epochs",
    "train.adam_beta1",
    "train.adam_beta2",
    "train.adam_eps",
    "train.grad_clip_norm",
    "train.warm_start",
    "train.init_scale",
    "threshold.p_start",
    "threshold.p_end",
    "genbo.cbas_last_batch_only",
    "genbo.label",
];

/// One method to run on every seed.
#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub label: String,
    pub config: ExperimentConfig,
}

/// A parsed experiment file.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub methods: Vec<MethodSpec>,
    pub seeds: Vec<u64>,
}

impl RunPlan {
    pub fn blackbox(&self) -> &BlackBox {
        &self.methods[0].config.blackbox
    }

    /// Adds `offset` to every seed.
    pub fn shift_seeds(&mut self, offset: u64) {
        for s in &mut self.seeds {
            *s = s.wrapping_add(offset);
        }
    }
}

/// Raw `key -> (value, line)` table.
struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, found `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::at(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("`{key}` has no value")));
            }
            if let Some((_, first)) = map.get(key) {
                return Err(ConfigError::at(line, format!("`{key}` already set on line {first}")));
            }
            map.insert(key.to_string(), (value.to_string(), line));
        }
        Ok(Self { map })
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.map.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::at(line, format!("cannot parse `{v}` for `{key}`"))),
        }
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)], default: T) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => options.iter().find(|(name, _)| *name == v).map(|(_, t)| *t).ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                ConfigError::at(line, format!("`{key}` must be one of {}, found `{v}`", names.join(", ")))
            }),
        }
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.raw(key).map(|(_, l)| l)
    }
}

fn parse_seeds(value: &str, line: usize) -> Result<Vec<u64>, ConfigError> {
    let bad = || ConfigError::at(line, format!("cannot parse seeds `{value}`; use `0,1,2` or `0..10`"));
    let seeds: Vec<u64> = if let Some((a, b)) = value.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..b).collect()
    } else {
        value
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(ConfigError::at(line, "seed list is empty"));
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        return Err(ConfigError::at(line, "seed list has duplicates"));
    }
    Ok(seeds)
}

/// Reads an Ehrlich instance written by [`write_ehrlich`](crate::run::write_ehrlich).
pub fn load_ehrlich(path: &Path) -> Result<EhrlichFunction, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("bad Ehrlich instance {}: {e}", path.display()))
}

fn build_task(e: &Entries, base_dir: &Path) -> Result<Task, ConfigError> {
    let (name, name_line) = e
        .raw("task.name")
        .ok_or_else(|| ConfigError::general("missing required key `task.name`"))?;
    match name {
        "aloha" | "edit_distance" => {
            let vocab = match e.raw("task.vocab") {
                Some((v, line)) => Vocab::new(v).map_err(|err| ConfigError::at(line, err.to_string()))?,
                None => Vocab::english_upper(),
            };
            let (target, line) = e.raw("task.target").unwrap_or(("ALOHA", name_line));
            let task = EditDistanceTask::new(vocab, target).map_err(|err| ConfigError::at(line, err.to_string()))?;
            Ok(Task::EditDistance(task))
        }
        "ehrlich" => {
            if let Some((p, line)) = e.raw("task.instance_path") {
                let path = base_dir.join(p);
                return load_ehrlich(&path).map(Task::Ehrlich).map_err(|m| ConfigError::at(line, m));
            }
            let cfg = EhrlichConfig::new(
                e.get_or("task.length", 15)?,
                e.get_or("task.motifs", 2)?,
                e.get_or("task.motif_length", 4)?,
                e.get_or("task.quantization", 4)?,
            );
            let seed: u64 = e.get_or("task.instance_seed", 0)?;
            EhrlichFunction::new(&cfg, &mut rng_stream(seed, tags::EHRLICH, 0))
                .map(Task::Ehrlich)
                .map_err(|err| ConfigError::at(e.line("task.length").unwrap_or(name_line), err.to_string()))
        }
        other => Err(ConfigError::at(
            name_line,
            format!("unknown task `{other}`; expected aloha, edit_distance or ehrlich"),
        )),
    }
}

/// Parses a config file body. Relative instance paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunPlan, ConfigError> {
    let e = Entries::parse(text)?;
    let task = build_task(&e, base_dir)?;
    let sigma: f64 = e.get_or("task.noise_sigma", 0.0)?;
    let blackbox =
        BlackBox::new(task, sigma).map_err(|err| ConfigError::at(e.line("task.noise_sigma").unwrap_or(1), err.to_string()))?;

    let mut utility = e.choice(
        "utility.kind",
        &[
            ("pi", UtilityKind::Pi),
            ("ei", UtilityKind::Ei),
            ("sei", UtilityKind::soft_ei()),
            ("sr", UtilityKind::Sr),
        ],
        UtilityKind::soft_ei(),
    )?;
    if let UtilityKind::SoftEi { sharpness } = &mut utility {
        *sharpness = e.get_or("utility.sharpness", 1.0)?;
    }
    let mut loss = LossSpec::new(e.choice(
        "loss.kind",
        &[
            ("pl", LossKind::Pl),
            ("rpl", LossKind::Rpl),
            ("fkl", LossKind::Fkl),
            ("bfkl", LossKind::Bfkl),
        ],
        LossKind::Rpl,
    )?);
    loss.temperature = e.get_or("loss.temperature", loss.temperature)?;
    loss.p_flip = e.get_or("loss.p_flip", loss.p_flip)?;
    loss.use_importance_weights = e.get_or("loss.importance_weights", false)?;

    let mut cfg = match e.raw("task.name").map(|(n, _)| n) {
        Some("ehrlich") => ExperimentConfig::ehrlich(blackbox, loss, utility),
        Some("aloha") => ExperimentConfig::aloha(blackbox, loss, utility),
        _ => ExperimentConfig {
            init_max_value: None,
            ..ExperimentConfig::aloha(blackbox, loss, utility)
        },
    };
    cfg.prior = e.choice(
        "prior.kind",
        &[("noprior", PriorMode::NoPrior), ("prior", PriorMode::Prior)],
        PriorMode::NoPrior,
    )?;
    cfg.prior_smoothing = e.get_or("prior.smoothing", cfg.prior_smoothing)?;
    cfg.cbas_last_batch_only = e.get_or("genbo.cbas_last_batch_only", false)?;
    cfg.rounds = e.get_or("experiment.rounds", cfg.rounds)?;
    cfg.batch_size = e.get_or("experiment.batch_size", cfg.batch_size)?;
    cfg.init_size = e.get_or("experiment.init_size", cfg.init_size)?;
    cfg.mutations = e.get_or("experiment.mutations", cfg.mutations)?;
    if let Some(d) = e.get::<u32>("experiment.init_min_edit_distance")? {
        if matches!(cfg.blackbox.task(), Task::Ehrlich(_)) {
            return Err(ConfigError::at(
                e.line("experiment.init_min_edit_distance").unwrap_or(1),
                "init_min_edit_distance only applies to edit-distance tasks",
            ));
        }
        cfg.init_max_value = (d > 0).then_some(-(d as f64));
    }
    cfg.p_start = e.get_or("threshold.p_start", cfg.p_start)?;
    cfg.p_end = e.get_or("threshold.p_end", cfg.p_end)?;
    cfg.init_scale = e.get_or("train.init_scale", cfg.init_scale)?;
    let t = &mut cfg.train;
    t.learning_rate = e.get_or("train.learning_rate", t.learning_rate)?;
    t.epochs = e.get_or("train.epochs", t.epochs)?;
    t.adam_beta1 = e.get_or("train.adam_beta1", t.adam_beta1)?;
    t.adam_beta2 = e.get_or("train.adam_beta2", t.adam_beta2)?;
    t.adam_eps = e.get_or("train.adam_eps", t.adam_eps)?;
    t.grad_clip_norm = e.get_or("train.grad_clip_norm", t.grad_clip_norm)?;
    t.warm_start = e.get_or("train.warm_start", t.warm_start)?;
    t.regularizer = e.choice(
        "reg.kind",
        &[("quadratic", RegularizerKind::Quadratic), ("exp", RegularizerKind::Exponential)],
        RegularizerKind::Quadratic,
    )?;
    t.lambda0 = e.get_or("reg.lambda0", t.lambda0)?;

    let seeds = match e.raw("experiment.seeds") {
        Some((v, line)) => parse_seeds(v, line)?,
        None => (0..10).collect(),
    };

    let (methods_raw, methods_line) = e.raw("experiment.methods").unwrap_or(("genbo,random_mutation", 1));
    let mut methods = Vec::new();
    for name in methods_raw.split(',').map(str::trim) {
        let method = match name {
            "genbo" => Method::GenBo,
            "random_mutation" => Method::RandomMutation,
            other => {
                return Err(ConfigError::at(
                    methods_line,
                    format!("unknown method `{other}`; expected genbo or random_mutation"),
                ))
            }
        };
        if methods.iter().any(|m: &MethodSpec| m.config.method == method) {
            return Err(ConfigError::at(methods_line, format!("method `{name}` listed twice")));
        }
        let config = ExperimentConfig { method, ..cfg.clone() };
        config
            .validate()
            .map_err(|err| ConfigError::general(format!("invalid {name} settings: {err}")))?;
        let label = match (method, e.raw("genbo.label")) {
            (Method::GenBo, Some((l, _))) => l.to_string(),
            _ => config.label(),
        };
        methods.push(MethodSpec { label, config });
    }
    Ok(RunPlan { methods, seeds })
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<RunPlan, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::general(format!("cannot read config {}: {e}", path.display())))?;
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunPlan, ConfigError> {
        parse_config(text, Path::new("."))
    }

    #[test]
    fn aloha_defaults() {
        let plan = parse("task.name = aloha\n").unwrap();
        assert_eq!(plan.seeds, (0..10).collect::<Vec<_>>());
        assert_eq!(plan.methods.len(), 2);
        let g = &plan.methods[0];
        assert_eq!(g.label, "genbo_rpl_sei_noprior");
        assert_eq!((g.config.rounds, g.config.batch_size, g.config.init_size), (10, 8, 64));
        assert_eq!(g.config.init_max_value, Some(-4.0));
        assert_eq!(plan.methods[1].label, "random_mutation");
    }

    #[test]
    fn settings_acronyms_map_to_keys() {
        let plan = parse(
            "task.name = aloha  # text task\n\
             experiment.methods = genbo\n\
             loss.kind = fkl\nutility.kind = ei\n\
             prior.kind = prior\nreg.kind = exp\nreg.lambda0 = 0.1\n\
             loss.importance_weights = true\n\
             experiment.seeds = 3..6\n",
        )
        .unwrap();
        let c = &plan.methods[0].config;
        assert_eq!(c.prior, PriorMode::Prior);
        assert_eq!(c.train.regularizer, RegularizerKind::Exponential);
        assert!(c.loss.use_importance_weights);
        assert_eq!(plan.methods[0].label, "genbo_fkl_ei_prior");
        assert_eq!(plan.seeds, vec![3, 4, 5]);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse("task.name = aloha\n\nloss.kind = dpo\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.to_string().starts_with("line 3:"), "{err}");
        assert_eq!(parse("task.name = aloha\nfoo.bar = 1\n").unwrap_err().line, Some(2));
        assert_eq!(parse("task.name = aloha\ntrain.epochs = many\n").unwrap_err().line, Some(2));
        assert_eq!(parse("task.name = aloha\ntask.name = aloha\n").unwrap_err().line, Some(2));
        assert_eq!(parse("just words\n").unwrap_err().line, Some(1));
        assert_eq!(parse("task.name = ehrlich\nexperiment.seeds = 1,x\n").unwrap_err().line, Some(2));
        assert!(parse("loss.kind = pl\n").is_err());
    }

    #[test]
    fn invalid_combinations_rejected() {
        assert!(parse("task.name = aloha\ntrain.epochs = 0\n").is_err());
        assert!(parse("task.name = aloha\nexperiment.rounds = 0\n").is_err());
        assert!(parse("task.name = aloha\nutility.kind = sr\nloss.kind = bfkl\n").is_err());
        assert!(parse("task.name = aloha\nexperiment.init_size = 1\n").is_err());
        assert!(parse("task.name = aloha\nexperiment.methods = genbo,genbo\n").is_err());
        assert!(parse("task.name = ehrlich\nexperiment.init_min_edit_distance = 4\n").is_err());
    }

    #[test]
    fn ehrlich_instance_is_seeded() {
        let a = parse("task.name = ehrlich\ntask.instance_seed = 7\n").unwrap();
        let b = parse("task.name = ehrlich\ntask.instance_seed = 7\n").unwrap();
        assert_eq!(a.blackbox(), b.blackbox());
        let c = &a.methods[0].config;
        assert_eq!((c.rounds, c.batch_size, c.init_size), (32, 128, 128));
        assert_eq!(a.blackbox().length(), 15);
    }

    #[test]
    fn seed_offset_shifts() {
        let mut plan = parse("task.name = aloha\nexperiment.seeds = 0,5\n").unwrap();
        plan.shift_seeds(100);
        assert_eq!(plan.seeds, vec![100, 105]);
    }
}
