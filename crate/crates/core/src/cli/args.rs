use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use super::config::Command;

#[derive(Debug, Parser)]
#[command(name = "expface", version, about = "Angular-margin loss analysis and toy noisy-label training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Similarity curves T(theta) over [0, pi]
    Curves(Flags),
    /// Gradient curves dL/dtheta of the single-sample loss
    Gradients(Flags),
    /// Transition angles, closed form against bisection
    Transition(Flags),
    /// Decision-boundary angular margin along the diagonal
    MarginField(Flags),
    /// Analytic gradient against central finite differences
    Gradcheck(Flags),
    /// Toy noisy-label training with per-sample angle trajectories
    Simulate(Flags),
}

impl Sub {
    pub fn split(&self) -> (Command, &Flags) {
        match self {
            Sub::Curves(f) => (Command::Curves, f),
            Sub::Gradients(f) => (Command::Gradients, f),
            Sub::Transition(f) => (Command::Transition, f),
            Sub::MarginField(f) => (Command::MarginField, f),
            Sub::Gradcheck(f) => (Command::Gradcheck, f),
            Sub::Simulate(f) => (Command::Simulate, f),
        }
    }
}

/// Every config-file key as a flag; flags win over the file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Flat TOML config file
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<String>>,

    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub plain_margin: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub sphereface_margin: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub cosface_margin: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub arcface_margin: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub expface_naive_margin: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub expface_margin: Option<Vec<f64>>,

    #[arg(long, allow_negative_numbers = true)]
    pub plain_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sphereface_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub cosface_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub arcface_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub expface_naive_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub expface_scale: Option<f64>,

    /// Scale of the single-sample loss context
    #[arg(long, allow_negative_numbers = true)]
    pub scale: Option<f64>,
    /// Mean negative angle of the single-sample loss context
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub class_count: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_size: Option<i64>,
    #[arg(long, value_name = "DIR")]
    pub output_dir: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub emit_svg: Option<bool>,
    #[arg(long, allow_negative_numbers = true)]
    pub seed: Option<i64>,

    #[arg(long, allow_negative_numbers = true)]
    pub toy_input_dim: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub toy_embed_dim: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub toy_class_count: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub toy_samples_per_class: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub toy_type1_fraction: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub toy_type2_pair_count: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub toy_dispersion: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub toy_learning_rate: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub toy_epochs: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub toy_batch_size: Option<i64>,
}

impl Flags {
    /// The flags that were given, keyed exactly like the config file.
    pub fn overrides(&self) -> Table {
        let mut t = Table::new();
        let mut put = |key: &str, v: Option<Value>| {
            if let Some(v) = v {
                t.insert(key.to_owned(), v);
            }
        };
        let reals = |v: &Option<Vec<f64>>| {
            v.as_ref().map(|xs| Value::Array(xs.iter().map(|&x| Value::Float(x)).collect()))
        };
        let real = |v: Option<f64>| v.map(Value::Float);
        let int = |v: Option<i64>| v.map(Value::Integer);

        put(
            "families",
            self.families
                .as_ref()
                .map(|fs| Value::Array(fs.iter().map(|f| Value::String(f.clone())).collect())),
        );
        put("plain_margin", reals(&self.plain_margin));
        put("sphereface_margin", reals(&self.sphereface_margin));
        put("cosface_margin", reals(&self.cosface_margin));
        put("arcface_margin", reals(&self.arcface_margin));
        put("expface_naive_margin", reals(&self.expface_naive_margin));
        put("expface_margin", reals(&self.expface_margin));
        put("plain_scale", real(self.plain_scale));
        put("sphereface_scale", real(self.sphereface_scale));
        put("cosface_scale", real(self.cosface_scale));
        put("arcface_scale", real(self.arcface_scale));
        put("expface_naive_scale", real(self.expface_naive_scale));
        put("expface_scale", real(self.expface_scale));
        put("scale", real(self.scale));
        put("b", real(self.b));
        put("class_count", int(self.class_count));
        put("grid_size", int(self.grid_size));
        put("output_dir", self.output_dir.clone().map(Value::String));
        put("emit_svg", self.emit_svg.map(Value::Boolean));
        put("seed", int(self.seed));
        put("toy_input_dim", int(self.toy_input_dim));
        put("toy_embed_dim", int(self.toy_embed_dim));
        put("toy_class_count", int(self.toy_class_count));
        put("toy_samples_per_class", int(self.toy_samples_per_class));
        put("toy_type1_fraction", real(self.toy_type1_fraction));
        put("toy_type2_pair_count", int(self.toy_type2_pair_count));
        put("toy_dispersion", real(self.toy_dispersion));
        put("toy_learning_rate", real(self.toy_learning_rate));
        put("toy_epochs", int(self.toy_epochs));
        put("toy_batch_size", int(self.toy_batch_size));
        t
    }
}
