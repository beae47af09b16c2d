use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::gradient::TransitionContext;
use crate::margin::{Family, LossSpec};
use crate::noise::ToySpec;

/// Environment variable consulted when no `output_dir` is configured.
pub const OUTPUT_DIR_ENV: &str = "EXPFACE_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_GRID_SIZE: usize = 1001;
pub const DEFAULT_FAMILIES: [Family; 4] =
    [Family::ExpFace, Family::CosFace, Family::ArcFace, Family::SphereFace];

const GLOBAL_KEYS: [&str; 8] =
    ["families", "scale", "b", "class_count", "grid_size", "output_dir", "emit_svg", "seed"];

const TOY_KEYS: [&str; 10] = [
    "toy_input_dim",
    "toy_embed_dim",
    "toy_class_count",
    "toy_samples_per_class",
    "toy_type1_fraction",
    "toy_type2_pair_count",
    "toy_dispersion",
    "toy_learning_rate",
    "toy_epochs",
    "toy_batch_size",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Curves,
    Gradients,
    Transition,
    MarginField,
    Gradcheck,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Curves => "curves",
            Command::Gradients => "gradients",
            Command::Transition => "transition",
            Command::MarginField => "margin-field",
            Command::Gradcheck => "gradcheck",
            Command::Simulate => "simulate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub losses: Vec<LossSpec>,
    pub context: TransitionContext,
    pub grid_size: usize,
    /// Present only for `simulate`; its `loss` is replaced per entry of `losses`.
    pub toy: Option<ToySpec>,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
}

/// Config-file key prefix of a family: `expface-naive` becomes `expface_naive`.
pub fn family_key(family: Family) -> String {
    family.name().replace('-', "_")
}

fn known_key(key: &str) -> bool {
    GLOBAL_KEYS.contains(&key)
        || TOY_KEYS.contains(&key)
        || Family::ALL.iter().any(|&f| {
            let p = family_key(f);
            key == format!("{p}_margin") || key == format!("{p}_scale")
        })
}

fn message(e: Error) -> String {
    match e {
        Error::Config(m) | Error::Domain(m) | Error::Precondition(m) => m,
        other => other.to_string(),
    }
}

fn config_err(key: &str, msg: impl fmt::Display) -> Error {
    Error::Config(format!("key `{key}`: {msg}"))
}

fn get_f64(table: &Table, key: &str) -> Result<Option<f64>> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Float(v)) => Ok(Some(*v)),
        Some(Value::Integer(v)) => Ok(Some(*v as f64)),
        Some(other) => Err(config_err(key, format!("expected a number, got {}", other.type_str()))),
    }
}

fn get_usize(table: &Table, key: &str) -> Result<Option<usize>> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Integer(v)) => usize::try_from(*v)
            .map(Some)
            .map_err(|_| config_err(key, format!("expected a non-negative integer, got {v}"))),
        Some(other) => Err(config_err(key, format!("expected an integer, got {}", other.type_str()))),
    }
}

fn get_bool(table: &Table, key: &str) -> Result<Option<bool>> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Boolean(v)) => Ok(Some(*v)),
        Some(other) => Err(config_err(key, format!("expected a boolean, got {}", other.type_str()))),
    }
}

fn get_string(table: &Table, key: &str) -> Result<Option<String>> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::String(v)) => Ok(Some(v.clone())),
        Some(other) => Err(config_err(key, format!("expected a string, got {}", other.type_str()))),
    }
}

/// A number or an array of numbers.
fn get_f64_list(table: &Table, key: &str) -> Result<Option<Vec<f64>>> {
    let one = |v: &Value| match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(x) => Ok(*x as f64),
        other => Err(config_err(key, format!("expected a number, got {}", other.type_str()))),
    };
    match table.get(key) {
        None => Ok(None),
        Some(Value::Array(items)) if items.is_empty() => Err(config_err(key, "empty array")),
        Some(Value::Array(items)) => items.iter().map(one).collect::<Result<_>>().map(Some),
        Some(v) => one(v).map(|x| Some(vec![x])),
    }
}

fn get_families(table: &Table) -> Result<Option<Vec<Family>>> {
    let key = "families";
    let parse = |v: &Value| match v {
        Value::String(s) => s.parse::<Family>().map_err(|e| config_err(key, e)),
        other => Err(config_err(key, format!("expected a string, got {}", other.type_str()))),
    };
    match table.get(key) {
        None => Ok(None),
        Some(Value::Array(items)) if items.is_empty() => Err(config_err(key, "empty array")),
        Some(Value::Array(items)) => items.iter().map(parse).collect::<Result<_>>().map(Some),
        Some(v) => parse(v).map(|f| Some(vec![f])),
    }
}

fn build_losses(table: &Table) -> Result<Vec<LossSpec>> {
    let families = get_families(table)?.unwrap_or_else(|| DEFAULT_FAMILIES.to_vec());
    for &f in Family::ALL.iter().filter(|f| !families.contains(f)) {
        for suffix in ["margin", "scale"] {
            let key = format!("{}_{suffix}", family_key(f));
            if table.contains_key(&key) {
                return Err(config_err(&key, format!("family {f} is not listed in `families`")));
            }
        }
    }

    let mut losses = Vec::new();
    for family in families {
        let (default_m, default_s) = family.default_margin_and_scale();
        let margin_key = format!("{}_margin", family_key(family));
        let scale_key = format!("{}_scale", family_key(family));
        let scale = get_f64(table, &scale_key)?.unwrap_or(default_s);
        if !(scale.is_finite() && scale > 0.0) {
            return Err(config_err(&scale_key, format!("scale must be > 0, got {scale}")));
        }
        for m in get_f64_list(table, &margin_key)?.unwrap_or_else(|| vec![default_m]) {
            losses.push(LossSpec::new(family, m, scale).map_err(|e| config_err(&margin_key, message(e)))?);
        }
    }
    Ok(losses)
}

fn build_context(table: &Table) -> Result<TransitionContext> {
    let default = TransitionContext::default();
    let b = get_f64(table, "b")?.unwrap_or(default.b().radians());
    if !(b > 0.0 && b < PI) {
        return Err(config_err("b", format!("must lie in (0, pi), got {b}")));
    }
    let class_count = get_usize(table, "class_count")?.unwrap_or(default.class_count());
    if class_count < 2 {
        return Err(config_err("class_count", format!("must be >= 2, got {class_count}")));
    }
    let scale = get_f64(table, "scale")?.unwrap_or(default.scale());
    if !(scale.is_finite() && scale > 0.0) {
        return Err(config_err("scale", format!("must be > 0, got {scale}")));
    }
    TransitionContext::new(b, class_count, scale)
}

fn build_toy(table: &Table) -> Result<ToySpec> {
    let d = ToySpec::default();
    let toy = ToySpec {
        input_dim: get_usize(table, "toy_input_dim")?.unwrap_or(d.input_dim),
        embed_dim: get_usize(table, "toy_embed_dim")?.unwrap_or(d.embed_dim),
        class_count: get_usize(table, "toy_class_count")?.unwrap_or(d.class_count),
        samples_per_class: get_usize(table, "toy_samples_per_class")?.unwrap_or(d.samples_per_class),
        type1_fraction: get_f64(table, "toy_type1_fraction")?.unwrap_or(d.type1_fraction),
        type2_pair_count: get_usize(table, "toy_type2_pair_count")?.unwrap_or(d.type2_pair_count),
        dispersion: get_f64(table, "toy_dispersion")?.unwrap_or(d.dispersion),
        loss: d.loss,
        learning_rate: get_f64(table, "toy_learning_rate")?.unwrap_or(d.learning_rate),
        epochs: get_usize(table, "toy_epochs")?.unwrap_or(d.epochs),
        batch_size: get_usize(table, "toy_batch_size")?.unwrap_or(d.batch_size),
        seed: match table.get("seed") {
            None => d.seed,
            Some(Value::Integer(v)) => u64::try_from(*v)
                .map_err(|_| config_err("seed", format!("expected a non-negative integer, got {v}")))?,
            Some(other) => {
                return Err(config_err("seed", format!("expected an integer, got {}", other.type_str())))
            }
        },
    };
    // validation messages start with the field name
    toy.validate().map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("key `toy_{msg}")),
        other => other,
    })?;
    Ok(toy)
}

/// Builds a validated [`RunConfig`] from config-file text, flag overrides
/// (same keys, applied on top of the file) and the output-directory
/// environment fallback.
pub fn parse_config(
    command: Command,
    file_text: &str,
    overrides: &Table,
    env_output_dir: Option<&str>,
) -> Result<RunConfig> {
    let mut table: Table = file_text
        .parse()
        .map_err(|e| Error::Config(format!("config file is not valid TOML: {e}")))?;
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    if let Some(key) = table.keys().find(|k| !known_key(k)) {
        return Err(Error::Config(format!("unknown key `{key}`")));
    }

    let losses = build_losses(&table)?;
    let context = build_context(&table)?;
    let grid_size = get_usize(&table, "grid_size")?.unwrap_or(DEFAULT_GRID_SIZE);
    let min_grid = if command == Command::Gradcheck { 3 } else { 2 };
    if grid_size < min_grid {
        return Err(config_err("grid_size", format!("must be >= {min_grid}, got {grid_size}")));
    }
    let toy = if command == Command::Simulate { Some(build_toy(&table)?) } else { None };
    let output_dir = get_string(&table, "output_dir")?
        .or_else(|| env_output_dir.map(str::to_owned))
        .unwrap_or_else(|| DEFAULT_OUTPUT_DIR.to_owned());
    if output_dir.is_empty() {
        return Err(config_err("output_dir", "must not be empty"));
    }
    let emit_svg = get_bool(&table, "emit_svg")?.unwrap_or(false);

    Ok(RunConfig {
        command,
        losses,
        context,
        grid_size,
        toy,
        output_dir: PathBuf::from(output_dir),
        emit_svg,
    })
}
