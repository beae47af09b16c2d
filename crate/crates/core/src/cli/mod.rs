//! Command-line front end: configuration, dispatch, and CSV/SVG artifacts.

mod args;
mod config;
mod svg;
mod table;

pub use args::{Cli, Flags};
pub use config::{
    family_key, parse_config, Command, RunConfig, DEFAULT_FAMILIES, DEFAULT_GRID_SIZE,
    DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV,
};
pub use svg::{line_chart, Series};
pub use table::{format_real, Cell, CsvTable};

use std::path::PathBuf;

use crate::analysis::{
    margin_field, sweep_gradient, sweep_similarity, transition_angle,
    transition_angle_by_bisection,
};
use crate::error::{Error, Result};
use crate::gradient::finite_diff_check;
use crate::margin::LossSpec;
use crate::noise::{drift_statistics, train, NoiseLabel, ToySpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        Error::Diverged { .. } => EXIT_DIVERGED,
        Error::Domain(_) | Error::NonDifferentiable { .. } | Error::Precondition(_) => EXIT_INTERNAL,
    }
}

/// A written file plus the one-line summary printed for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: PathBuf,
    pub summary: String,
}

struct Chart {
    title: String,
    x_label: &'static str,
    y_label: &'static str,
    series: Vec<(String, Vec<(f64, f64)>)>,
}

struct Output {
    stem: String,
    table: CsvTable,
    chart: Option<Chart>,
    note: String,
}

fn stem(command: Command, spec: &LossSpec) -> String {
    format!("{}_{}_m{}", command.name(), spec.family().name(), spec.margin())
}

fn label(spec: &LossSpec) -> String {
    format!("{} m={}", spec.family(), spec.margin())
}

fn curves(cfg: &RunConfig, spec: &LossSpec) -> Result<Output> {
    let samples = sweep_similarity(spec, cfg.grid_size)?;
    let mut table = CsvTable::new(&["theta", "similarity"]);
    for s in &samples {
        table.push(vec![s.theta.radians().into(), s.value.into()])?;
    }
    Ok(Output {
        stem: stem(cfg.command, spec),
        table,
        chart: Some(Chart {
            title: format!("similarity, {}", label(spec)),
            x_label: "theta",
            y_label: "T(theta)",
            series: vec![(label(spec), samples.iter().map(|s| (s.theta.radians(), s.value)).collect())],
        }),
        note: format!("{} points", samples.len()),
    })
}

fn gradients(cfg: &RunConfig, spec: &LossSpec) -> Result<Output> {
    let curve = sweep_gradient(spec, &cfg.context, cfg.grid_size)?;
    let mut table = CsvTable::new(&["theta", "dloss_dtheta", "substituted"]);
    for (i, s) in curve.samples.iter().enumerate() {
        let sub = curve.substituted.contains(&i);
        table.push(vec![s.theta.radians().into(), s.value.into(), sub.into()])?;
    }
    let peak = curve
        .samples
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .map(|s| s.theta.radians())
        .unwrap_or(f64::NAN);
    Ok(Output {
        stem: stem(cfg.command, spec),
        table,
        chart: Some(Chart {
            title: format!("dL/dtheta, {}", label(spec)),
            x_label: "theta",
            y_label: "dL/dtheta",
            series: vec![(label(spec), curve.samples.iter().map(|s| (s.theta.radians(), s.value)).collect())],
        }),
        note: format!("{} points, argmax theta {:.6}", curve.samples.len(), peak),
    })
}

fn margins(cfg: &RunConfig, spec: &LossSpec) -> Result<Output> {
    let field = margin_field(spec, cfg.grid_size)?;
    let mut table = CsvTable::new(&["theta_neg", "theta_pos_boundary", "angular_margin", "pinned"]);
    for p in &field {
        table.push(vec![
            p.theta_neg.radians().into(),
            p.theta_pos_boundary.radians().into(),
            p.angular_margin.into(),
            p.pinned.into(),
        ])?;
    }
    Ok(Output {
        stem: stem(cfg.command, spec),
        table,
        chart: Some(Chart {
            title: format!("boundary margin, {}", label(spec)),
            x_label: "theta_neg",
            y_label: "angular margin",
            series: vec![(label(spec), field.iter().map(|p| (p.theta_neg.radians(), p.angular_margin)).collect())],
        }),
        note: format!("{} of {} points reachable", field.len(), cfg.grid_size),
    })
}

fn transitions(cfg: &RunConfig) -> Result<Output> {
    let ctx = &cfg.context;
    let mut table = CsvTable::new(&[
        "family",
        "margin",
        "s",
        "b",
        "C",
        "theta_trans_closed",
        "theta_trans_bisect",
        "abs_diff",
    ]);
    let mut worst: f64 = 0.0;
    for spec in &cfg.losses {
        let closed = transition_angle(spec, ctx).map(|a| a.radians());
        let bisect = transition_angle_by_bisection(spec, ctx).map(|a| a.radians());
        let diff = match (closed, bisect) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            (None, None) => None,
            _ => {
                return Err(Error::Precondition(format!(
                    "closed form and bisection disagree on existence for {}",
                    label(spec)
                )))
            }
        };
        worst = worst.max(diff.unwrap_or(0.0));
        table.push(vec![
            spec.family().name().into(),
            spec.margin().into(),
            ctx.scale().into(),
            ctx.b().radians().into(),
            ctx.class_count().into(),
            closed.into(),
            bisect.into(),
            diff.into(),
        ])?;
    }
    Ok(Output {
        stem: cfg.command.name().to_owned(),
        table,
        chart: None,
        note: format!("{} specs, max abs_diff {:.3e}", cfg.losses.len(), worst),
    })
}

fn gradchecks(cfg: &RunConfig) -> Result<Output> {
    let ctx = &cfg.context;
    let mut table = CsvTable::new(&[
        "family",
        "margin",
        "s",
        "b",
        "C",
        "points",
        "max_rel_err",
        "max_abs_err",
    ]);
    let mut worst: f64 = 0.0;
    for spec in &cfg.losses {
        let report = finite_diff_check(spec, ctx, cfg.grid_size)?;
        worst = worst.max(report.max_rel_err);
        table.push(vec![
            spec.family().name().into(),
            spec.margin().into(),
            ctx.scale().into(),
            ctx.b().radians().into(),
            ctx.class_count().into(),
            report.grid.len().into(),
            report.max_rel_err.into(),
            report.max_abs_err.into(),
        ])?;
    }
    Ok(Output {
        stem: cfg.command.name().to_owned(),
        table,
        chart: None,
        note: format!("{} specs, max rel err {:.3e}", cfg.losses.len(), worst),
    })
}

fn simulation(cfg: &RunConfig, toy: &ToySpec, spec: &LossSpec) -> Result<Output> {
    let toy = ToySpec { loss: *spec, ..toy.clone() };
    let run = train(&toy)?;
    let mut table = CsvTable::new(&["sample_id", "noise", "epoch", "theta_pos", "theta_neg_mean"]);
    for (t, init) in run.trajectories.iter().zip(&run.initial) {
        let epochs = std::iter::once(init).chain(&t.per_epoch);
        for (epoch, (p, n)) in epochs.enumerate() {
            table.push(vec![
                t.sample_id.into(),
                t.noise.name().into(),
                epoch.into(),
                p.radians().into(),
                n.radians().into(),
            ])?;
        }
    }

    let mut series = Vec::new();
    for noise in NoiseLabel::ALL {
        let members: Vec<_> = run.trajectories.iter().filter(|t| t.noise == noise).collect();
        if members.is_empty() {
            continue;
        }
        let points = (0..toy.epochs)
            .map(|e| {
                let mean = members.iter().map(|t| t.per_epoch[e].0.radians()).sum::<f64>()
                    / members.len() as f64;
                ((e + 1) as f64, mean)
            })
            .collect();
        series.push((format!("{noise} mean theta_pos"), points));
    }

    let rows = drift_statistics(&run.trajectories)?;
    let note = rows
        .iter()
        .map(|r| {
            format!(
                "{} n={} median theta_pos {:.4} mean theta_neg {:.4}",
                r.noise, r.count, r.median_theta_pos, r.mean_theta_neg_mean
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Output {
        stem: stem(cfg.command, spec),
        table,
        chart: Some(Chart {
            title: format!("toy training, {}", label(spec)),
            x_label: "epoch",
            y_label: "theta_pos",
            series,
        }),
        note: format!("final loss {:.4}; {note}", run.epoch_losses.last().copied().unwrap_or(f64::NAN)),
    })
}

fn outputs(cfg: &RunConfig) -> Result<Vec<Output>> {
    match cfg.command {
        Command::Transition => Ok(vec![transitions(cfg)?]),
        Command::Gradcheck => Ok(vec![gradchecks(cfg)?]),
        Command::Simulate => {
            let toy = cfg
                .toy
                .as_ref()
                .ok_or_else(|| Error::Config("simulate requires a toy spec".into()))?;
            cfg.losses.iter().map(|s| simulation(cfg, toy, s)).collect()
        }
        Command::Curves => cfg.losses.iter().map(|s| curves(cfg, s)).collect(),
        Command::Gradients => cfg.losses.iter().map(|s| gradients(cfg, s)).collect(),
        Command::MarginField => cfg.losses.iter().map(|s| margins(cfg, s)).collect(),
    }
}

/// Runs the configured command and writes its artifacts in config order.
pub fn run(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let results = outputs(cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", cfg.output_dir.display())))?;

    let mut artifacts = Vec::new();
    for out in results {
        let path = cfg.output_dir.join(format!("{}.csv", out.stem));
        out.table.write(&path)?;
        artifacts.push(Artifact {
            summary: format!("{}: {} rows, {}", path.display(), out.table.rows().len(), out.note),
            path,
        });
        if let (true, Some(chart)) = (cfg.emit_svg, out.chart) {
            let path = cfg.output_dir.join(format!("{}.svg", out.stem));
            let series: Vec<Series<'_>> = chart
                .series
                .iter()
                .map(|(name, points)| Series { name, points: points.clone() })
                .collect();
            let svg = line_chart(&chart.title, chart.x_label, chart.y_label, &series);
            std::fs::write(&path, svg).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            artifacts.push(Artifact { summary: format!("{}: svg chart", path.display()), path });
        }
    }
    Ok(artifacts)
}
