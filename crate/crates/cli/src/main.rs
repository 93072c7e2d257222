//! Command-line front end: validate -> plan -> simulate -> render -> slim.
//!
//! Exit codes: 0 success/compliant, 1 findings (rule errors, unplaced pods,
//! incomplete discovery, broken paths), 2 input or usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use roskube_core::model::{derive_pods, load_app_spec, load_cluster_spec, AppSpec, ClusterSpec};
use roskube_core::netsim::{
    simulate_dataplane, simulate_discovery, ReachabilityReport, SimError, SimParams, TrafficReport,
};
use roskube_core::placer::{plan_placement, Placement};
use roskube_core::render::{render_all, RenderError};
use roskube_core::rules::{validate, Severity, Violation};
use roskube_core::slim::{
    compute_keep_set, format_mb, load_image_model, load_trace, slim_report, RuntimeTrace,
};

#[derive(Parser)]
#[command(
    name = "roskube",
    version,
    about = "Validate, place, simulate and render ROS 2 pub/sub applications for \
             device-edge-cloud clusters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check an application/cluster pair against the rule catalog (R1-R7)
    Validate {
        /// Application document (JSON)
        #[arg(short = 'f', long = "app")]
        app: PathBuf,
        /// Cluster document (JSON)
        #[arg(short = 'c', long = "cluster")]
        cluster: PathBuf,
        /// Report style on standard output
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Assign pods to cluster nodes and classify migratability
    Plan {
        /// Application document (JSON)
        #[arg(short = 'f', long = "app")]
        app: PathBuf,
        /// Cluster document (JSON)
        #[arg(short = 'c', long = "cluster")]
        cluster: PathBuf,
        /// Also write the placement JSON to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate multicast discovery and topic traffic over a placement
    Simulate {
        /// Application document (JSON)
        #[arg(short = 'f', long = "app")]
        app: PathBuf,
        /// Cluster document (JSON)
        #[arg(short = 'c', long = "cluster")]
        cluster: PathBuf,
        /// Placement JSON from `plan`; computed on the fly when omitted
        #[arg(short = 'p', long = "placement")]
        placement: Option<PathBuf>,
        /// Simulated wall-clock span in milliseconds
        #[arg(long, default_value_t = 5000)]
        duration_ms: u64,
        /// Participant announcement period in milliseconds
        #[arg(long, default_value_t = 1000)]
        announce_period_ms: u64,
        /// Event-ordering seed; never changes results
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report style on standard output
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Write the manifest bundle (pods, exposure routes, values.yaml)
    Render {
        /// Application document (JSON)
        #[arg(short = 'f', long = "app")]
        app: PathBuf,
        /// Cluster document (JSON)
        #[arg(short = 'c', long = "cluster")]
        cluster: PathBuf,
        /// Placement JSON from `plan`; computed on the fly when omitted
        #[arg(short = 'p', long = "placement")]
        placement: Option<PathBuf>,
        /// Directory the bundle is written into
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Dependency-closure image minimization report
    Slim {
        /// Image document (JSON: files, deps, entrypoints)
        image: PathBuf,
        /// Runtime access trace (JSON: accessed)
        trace: Option<PathBuf>,
        /// Report style on standard output
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Validate {
            app,
            cluster,
            format,
        } => cmd_validate(&app, &cluster, format),
        Command::Plan { app, cluster, out } => cmd_plan(&app, &cluster, out.as_deref()),
        Command::Simulate {
            app,
            cluster,
            placement,
            duration_ms,
            announce_period_ms,
            seed,
            format,
        } => cmd_simulate(
            &app,
            &cluster,
            placement.as_deref(),
            duration_ms,
            announce_period_ms,
            seed,
            format,
        ),
        Command::Render {
            app,
            cluster,
            placement,
            out_dir,
        } => cmd_render(&app, &cluster, placement.as_deref(), &out_dir),
        Command::Slim {
            image,
            trace,
            format,
        } => cmd_slim(&image, trace.as_deref(), format),
    }
}

fn read_to_string(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_pair(app_path: &Path, cluster_path: &Path) -> anyhow::Result<(AppSpec, ClusterSpec)> {
    let app = load_app_spec(&read_to_string(app_path)?)
        .with_context(|| format!("loading {}", app_path.display()))?;
    let cluster = load_cluster_spec(&read_to_string(cluster_path)?)
        .with_context(|| format!("loading {}", cluster_path.display()))?;
    Ok((app, cluster))
}

fn load_placement(path: &Path) -> anyhow::Result<Placement> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).with_context(|| format!("loading {}", path.display()))
}

fn obtain_placement(
    app: &AppSpec,
    cluster: &ClusterSpec,
    placement_path: Option<&Path>,
) -> anyhow::Result<Placement> {
    match placement_path {
        Some(path) => load_placement(path),
        None => Ok(plan_placement(&derive_pods(app), app, cluster)),
    }
}

fn print_violations_text(violations: &[Violation]) {
    if violations.is_empty() {
        println!("no findings: deployment is compliant");
        return;
    }
    let subject_width = violations
        .iter()
        .map(|v| v.subject.len())
        .max()
        .unwrap_or(0)
        .max("SUBJECT".len());
    println!(
        "{:<4}  {:<7}  {:<subject_width$}  MESSAGE",
        "RULE", "LEVEL", "SUBJECT"
    );
    for v in violations {
        println!(
            "{:<4}  {:<7}  {:<subject_width$}  {}",
            v.rule_id.to_string(),
            v.severity.to_string(),
            v.subject,
            v.message
        );
    }
    let errors = violations
        .iter()
        .filter(|v| v.severity == Severity::Error)
        .count();
    let warnings = violations.len() - errors;
    println!(
        "{} finding(s): {errors} error(s), {warnings} warning(s)",
        violations.len()
    );
}

fn cmd_validate(app_path: &Path, cluster_path: &Path, format: Format) -> anyhow::Result<ExitCode> {
    let (app, cluster) = load_pair(app_path, cluster_path)?;
    let pods = derive_pods(&app);
    let violations = validate(&app, &pods, &cluster);
    match format {
        Format::Text => print_violations_text(&violations),
        Format::Json => println!("{}", serde_json::to_string_pretty(&violations)?),
    }
    let has_errors = violations.iter().any(|v| v.severity == Severity::Error);
    Ok(if has_errors {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_plan(app_path: &Path, cluster_path: &Path, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let (app, cluster) = load_pair(app_path, cluster_path)?;
    let placement = plan_placement(&derive_pods(&app), &app, &cluster);
    let json = serde_json::to_string_pretty(&placement)?;
    println!("{json}");
    if let Some(path) = out {
        fs::write(path, format!("{json}\n"))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    for unplaced in &placement.unplaced {
        eprintln!("unplaced: {} ({})", unplaced.pod, unplaced.reason);
    }
    Ok(if placement.is_fully_placed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn print_simulation_text(reachability: &ReachabilityReport, traffic: &TrafficReport) {
    let n = reachability.participants.len();
    println!(
        "discovery: {n} participant(s), {} of {} directed pairs discovered{}",
        reachability.discovered.len(),
        n * n,
        if reachability.is_complete() {
            " (complete)"
        } else {
            ""
        }
    );
    println!("multicast packets per node:");
    for (node, count) in &reachability.mcast_packets_per_node {
        println!("  {node}: {count}");
    }
    if !reachability.drops.is_empty() {
        println!("dropped announcements: {}", reachability.drops.len());
    }
    println!("matched edges:");
    if traffic.per_edge.is_empty() {
        println!("  (none)");
    }
    for edge in &traffic.per_edge {
        let status = match edge.drop_reason {
            Some(reason) => format!("DROPPED ({reason:?})"),
            None => format!("{} fragment(s)/message", edge.fragments_per_message),
        };
        println!(
            "  {} -> {} [{}]: {} delivered, {} dropped, {status}",
            edge.publisher,
            edge.subscriber,
            edge.topic,
            edge.messages_delivered,
            edge.messages_dropped
        );
    }
    if traffic.broken_paths.is_empty() {
        println!("broken paths: none");
    } else {
        println!("broken paths:");
        for broken in &traffic.broken_paths {
            println!(
                "  topic \"{}\" has no live publisher for {}",
                broken.topic, broken.subscriber
            );
        }
    }
}

fn cmd_simulate(
    app_path: &Path,
    cluster_path: &Path,
    placement_path: Option<&Path>,
    duration_ms: u64,
    announce_period_ms: u64,
    seed: u64,
    format: Format,
) -> anyhow::Result<ExitCode> {
    let (app, cluster) = load_pair(app_path, cluster_path)?;
    let placement = obtain_placement(&app, &cluster, placement_path)?;
    let mut params = SimParams::new(duration_ms, seed);
    params.announce_period_ms = announce_period_ms;

    let reachability = match simulate_discovery(&placement, &app, &cluster, &params) {
        Ok(report) => report,
        Err(err @ SimError::UnplacedPod(_)) => {
            eprintln!("{err}");
            return Ok(ExitCode::from(1));
        }
        Err(err) => return Err(err.into()),
    };
    let traffic = simulate_dataplane(&placement, &app, &cluster, &params)?;

    match format {
        Format::Text => print_simulation_text(&reachability, &traffic),
        Format::Json => {
            let combined = serde_json::json!({
                "reachability": reachability,
                "traffic": traffic,
            });
            println!("{}", serde_json::to_string_pretty(&combined)?);
        }
    }
    let healthy = reachability.is_complete() && !traffic.has_broken_paths();
    Ok(if healthy {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_render(
    app_path: &Path,
    cluster_path: &Path,
    placement_path: Option<&Path>,
    out_dir: &Path,
) -> anyhow::Result<ExitCode> {
    let (app, cluster) = load_pair(app_path, cluster_path)?;
    let placement = obtain_placement(&app, &cluster, placement_path)?;
    let bundle = match render_all(&app, &cluster, &placement) {
        Ok(bundle) => bundle,
        Err(err @ RenderError::PodNotPlaced(_)) => {
            eprintln!("{err}");
            return Ok(ExitCode::from(1));
        }
    };
    for file in &bundle.files {
        let target = out_dir.join(&file.path);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&target, &file.content)
            .with_context(|| format!("writing {}", target.display()))?;
        println!("{}", file.path);
    }
    eprintln!(
        "wrote {} file(s) to {} (inputs digest {})",
        bundle.files.len(),
        out_dir.display(),
        bundle.values_digest
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_slim(
    image_path: &Path,
    trace_path: Option<&Path>,
    format: Format,
) -> anyhow::Result<ExitCode> {
    let image = load_image_model(&read_to_string(image_path)?)
        .with_context(|| format!("loading {}", image_path.display()))?;
    let trace = match trace_path {
        Some(path) => load_trace(&read_to_string(path)?)
            .with_context(|| format!("loading {}", path.display()))?,
        None => RuntimeTrace::default(),
    };
    let keep = compute_keep_set(&image, &trace);
    let report = slim_report(&image, &keep, &trace)?;
    match format {
        Format::Text => {
            println!(
                "original size     {:>14} bytes  ({})",
                report.original_size,
                format_mb(report.original_size)
            );
            println!(
                "slimmed size      {:>14} bytes  ({})",
                report.slimmed_size,
                format_mb(report.slimmed_size)
            );
            println!("reduction         {:>13.1}%", report.reduction_percent);
            println!("kept files        {:>14}", report.kept.len());
            println!("removed files     {:>14}", report.removed.len());
            if !report.unknown_trace_paths.is_empty() {
                println!("traced paths not in the image:");
                for path in &report.unknown_trace_paths {
                    println!("  {path}");
                }
            }
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(ExitCode::SUCCESS)
}
