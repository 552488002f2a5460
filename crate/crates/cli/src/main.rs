//! `motionkit` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::{Arc, Mutex};

use clap::{Parser, Subcommand};
use motionkit::dataset::Dataset;
use motionkit::formats::{self, Format};
use motionkit::models::{self, EvalReport, Model};
use motionkit::protocol::{self, PlayOptions, Server};
use motionkit::{Error, MotionClip, Skeleton};

#[derive(Parser)]
#[command(name = "motionkit", version, about = "Skeleton animation toolkit: formats, datasets, AR models and live streaming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the joint tree, frame count and frame rate of a clip.
    Inspect {
        file: PathBuf,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Convert a clip between formats (chosen by extension unless given).
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        format_in: Option<Format>,
        #[arg(long)]
        format_out: Option<Format>,
        /// Replace the frame rate.
        #[arg(long, value_parser = positive)]
        fps: Option<f64>,
    },
    /// Compute normalization statistics over a dataset's training windows.
    Stats {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an AR model (per label when the dataset has labels).
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, required_unless_present = "orders", conflicts_with = "orders")]
        order: Option<usize>,
        /// Comma-separated orders; the best on validation is saved.
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a clip continuing a seed clip.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        seed_clip: PathBuf,
        #[arg(long)]
        frames: usize,
        #[arg(long)]
        label: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format_out: Option<Format>,
        /// Stream the result to a receiver once written.
        #[arg(long, requires = "namespace")]
        then_play: Option<String>,
        #[arg(long, requires = "then_play")]
        namespace: Option<String>,
    },
    /// Stream a clip to a receiver in real time.
    Play {
        #[arg(long)]
        clip: PathBuf,
        #[arg(long)]
        connect: String,
        #[arg(long)]
        namespace: String,
        #[arg(long, value_parser = positive)]
        fps: Option<f64>,
        #[arg(long = "loop")]
        looping: bool,
    },
    /// Run the reference receiver until interrupted.
    Serve {
        #[arg(long, default_value_t = format!("127.0.0.1:{}", protocol::DEFAULT_PORT))]
        addr: String,
        /// Write each session's namespaces here as canonical clips.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Parse { .. } | Error::Io { .. } => 2,
        Error::Protocol { .. } | Error::Network(_) => 3,
        Error::Numerical(_) => 4,
    }
}

fn print_tree(skeleton: &Skeleton) {
    for (i, j) in skeleton.joints().iter().enumerate() {
        let indent = "  ".repeat(skeleton.depth(i));
        if j.is_end_site {
            println!("{indent}{} (end site)", j.name);
        } else {
            let chans: Vec<&str> = j.channels.iter().map(|c| c.name()).collect();
            println!("{indent}{} [{}]", j.name, chans.join(" "));
        }
    }
}

fn inspect(file: &Path, format: Option<Format>) -> CliResult {
    let clip = formats::load_clip(file, format, None)?;
    let s = clip.skeleton();
    println!("skeleton: {} ({} joints, {} channels)", s.name(), s.len(), s.channel_count());
    print_tree(s);
    println!("frames: {}", clip.len());
    println!("frame time: {} s ({:.3} fps)", clip.frame_time(), clip.fps());
    if let Some(l) = clip.label() {
        println!("label: {l}");
    }
    Ok(())
}

fn train(config: &Path, orders: &[usize], out: &Path) -> CliResult {
    let data = Dataset::from_config(config)?;
    let prepared = data.prepare()?;
    let conditioned = !prepared.train.labels().is_empty();
    let eval_set = if prepared.val.is_empty() { &prepared.train } else { &prepared.val };
    let split = if prepared.val.is_empty() { "train" } else { "val" };
    println!(
        "dataset {}: {} clips, {} train windows, {} val windows",
        data.descriptor.name,
        data.clips.len(),
        prepared.train.len(),
        prepared.val.len()
    );
    let mut candidates: Vec<(Model, EvalReport)> = Vec::new();
    for &k in orders {
        let model: Model = if conditioned {
            models::fit_conditioned(&prepared.train, k)?.into()
        } else {
            models::fit(&prepared.train, k)?.into()
        };
        let report = models::evaluate(&model, eval_set)?;
        println!(
            "order {k}: {split} one_step_mse={:.6e} joint_position_error={:.6e}",
            report.one_step_mse, report.joint_position_error
        );
        for (label, r) in &report.per_label {
            println!("  {label}: one_step_mse={:.6e} joint_position_error={:.6e}", r.one_step_mse, r.joint_position_error);
        }
        candidates.push((model, report));
    }
    let best = models::select_best(&candidates)?;
    let (model, report) = &candidates[best];
    model.save(out)?;
    println!(
        "selected order {} ({} model), one_step_mse={:.6e}; saved to {}",
        model.order(),
        model.kind(),
        report.one_step_mse,
        out.display()
    );
    Ok(())
}

fn check_namespace(ns: &str) -> CliResult {
    if protocol::valid_namespace(ns) {
        Ok(())
    } else {
        Err(Failure::Usage(format!("invalid namespace `{ns}`: expected 1-64 characters from [A-Za-z0-9_]")))
    }
}

fn play_clip(clip: &MotionClip, addr: &str, ns: &str, opts: &PlayOptions) -> CliResult {
    let summary = protocol::play(clip, addr, ns, opts)?;
    println!(
        "played {} frames to {addr} as `{ns}` in {:.3} s",
        summary.frames_sent,
        summary.duration.as_secs_f64()
    );
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Inspect { file, format } => inspect(&file, format),
        Command::Convert { input, output, format_in, format_out, fps } => {
            let clip = formats::load_clip(&input, format_in, fps)?;
            formats::save_clip(&output, &clip, format_out)?;
            println!("wrote {} frames to {}", clip.len(), output.display());
            Ok(())
        }
        Command::Stats { config, out } => {
            let prepared = Dataset::from_config(&config)?.prepare()?;
            std::fs::write(&out, prepared.stats.to_json()).map_err(|e| Error::io(&out, e))?;
            println!("wrote statistics for {} channels to {}", prepared.stats.len(), out.display());
            Ok(())
        }
        Command::Train { config, order, orders, out } => {
            let orders = orders.unwrap_or_else(|| order.into_iter().collect());
            if orders.is_empty() || orders.contains(&0) {
                return Err(Failure::Usage("orders must be positive integers".into()));
            }
            train(&config, &orders, &out)
        }
        Command::Sample {
            model,
            seed_clip,
            frames,
            label,
            temperature,
            rng_seed,
            out,
            format_out,
            then_play,
            namespace,
        } => {
            if !(temperature.is_finite() && temperature >= 0.0) {
                return Err(Failure::Usage(format!("temperature must be >= 0, got {temperature}")));
            }
            if let Some(ns) = &namespace {
                check_namespace(ns)?;
            }
            let model = Model::load(&model)?;
            let seed = formats::load_clip(&seed_clip, None, None)?;
            let clip = models::sample(&model, &seed, frames, temperature, rng_seed, label.as_deref())?;
            formats::save_clip(&out, &clip, format_out)?;
            println!("sampled {} frames to {}", clip.len(), out.display());
            match (then_play, namespace) {
                (Some(addr), Some(ns)) => play_clip(&clip, &addr, &ns, &PlayOptions::default()),
                _ => Ok(()),
            }
        }
        Command::Play { clip, connect, namespace, fps, looping } => {
            check_namespace(&namespace)?;
            let clip = formats::load_clip(&clip, None, None)?;
            play_clip(&clip, &connect, &namespace, &PlayOptions { fps, looping, stop: None })
        }
        Command::Serve { addr, record } => {
            let server = Server::bind(addr.as_str(), record)?;
            println!("listening on {}", server.local_addr());
            server.run(Arc::new(AtomicBool::new(false)), Arc::new(Mutex::new(Vec::new())))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid usage");
            eprintln!("error: E_USAGE: {}", first.trim_start_matches("error: "));
            for line in rendered.lines().skip(1).filter(|l| !l.trim().is_empty()) {
                eprintln!("{line}");
            }
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: E_USAGE: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::from(exit_code(&e))
        }
    }
}
