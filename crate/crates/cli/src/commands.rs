use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use boardsim::gesture::{read_events, run_engine, to_hid, write_events, write_hid, ActionKind};
use boardsim::sensor::{
    add_noise, gen_jump_trace, gen_lean_trace, gen_push_cycle_trace_on, load_trace, save_trace,
    LeanDirection, SensorTrace, Source,
};
use boardsim::sim::{load_course, run_episode, EpisodeReport};
use boardsim::stats::{
    ks_test, load_survey, mean_diff_table, read_counts_pair, read_summary_pair, CategoryCounts,
    LikertDataset,
};
use boardsim::wire::{
    decode, encode, packetize_trace, reassemble, simulate_channel, write_capture, LinkStats,
};
use rayon::prelude::*;

use crate::config::{ChannelParams, RunConfig};
use crate::{
    ChannelCmd, Cli, Command, Direction, Foot, GesturesCmd, LinkArgs, PipelineCmd, SimCmd,
    StatsCmd, TraceCmd, TraceGenArgs, TraceKind,
};

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let out = Output::new(&cli.out_dir)?;
    match &cli.command {
        Command::Trace(TraceCmd::Gen(args)) => trace_gen(args, cli.seed, &out),
        Command::Trace(TraceCmd::Validate { trace }) => {
            require_files(&[trace])?;
            let t = load_trace(trace)?;
            t.validate()
                .with_context(|| format!("{} failed validation", trace.display()))?;
            println!("{}: {} samples, valid", trace.display(), t.len());
            Ok(())
        }
        Command::Gestures(GesturesCmd::Run { trace }) => {
            require_files(&[trace])?;
            let t = load_trace(trace)?;
            let events = run_engine(&t, &cfg.thresholds)?;
            let hid = to_hid(&events)?;
            write_events(&events, out.create("events.csv")?)?;
            write_hid(&hid, out.create("hid.csv")?)?;
            println!("{}", describe_events(&events));
            Ok(())
        }
        Command::Channel(ChannelCmd::Simulate { trace, link }) => {
            require_files(&[trace])?;
            let params = link_params(&cfg.channel, link)?;
            let t = load_trace(trace)?;
            let result = run_link(&t, &params, cli.seed)?;
            write_capture(&result.frames, out.create("capture.bin")?)?;
            save_trace(&result.received, out.path("received.csv"))?;
            result.stats.write_csv(out.create("link_stats.csv")?)?;
            println!(
                "{} of {} packets delivered, {} gaps",
                result.frames.len(),
                result.sent,
                result.stats.total_gaps()
            );
            Ok(())
        }
        Command::Sim(SimCmd::Run {
            events,
            course,
            workers,
        }) => sim_run(events, course, *workers, &cfg, &out),
        Command::Pipeline(PipelineCmd::Run {
            trace,
            course,
            no_channel,
            link,
        }) => pipeline(trace, course, *no_channel, link, cli.seed, &cfg, &out),
        Command::Stats(cmd) => stats(cmd, &out),
    }
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
        })
    }

    fn path(&self, name: impl AsRef<Path>) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: impl AsRef<Path>) -> Result<BufWriter<File>> {
        let path = self.path(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }
}

fn require_files(paths: &[&PathBuf]) -> Result<()> {
    for p in paths {
        ensure!(p.is_file(), "input file {} does not exist", p.display());
    }
    Ok(())
}

fn describe_events(events: &[boardsim::gesture::ActionEvent]) -> String {
    let pushes = events.iter().filter(|e| e.kind == ActionKind::Push).count();
    let jumps = events.iter().filter(|e| e.kind == ActionKind::Jump).count();
    format!("{} events ({pushes} pushes, {jumps} jumps)", events.len())
}

fn trace_gen(args: &TraceGenArgs, seed: u64, out: &Output) -> Result<()> {
    let trace = match args.kind {
        TraceKind::Lean => {
            let direction = match args.direction.expect("clap requires --direction") {
                Direction::Left => LeanDirection::Left,
                Direction::Right => LeanDirection::Right,
                Direction::Neutral => LeanDirection::Neutral,
            };
            gen_lean_trace(
                direction,
                args.duration_ms,
                args.rest.unwrap_or(150.0),
                args.delta.unwrap_or(60.0),
                args.rate_hz,
            )?
        }
        TraceKind::Jump => gen_jump_trace(
            args.duration_ms,
            args.rest.unwrap_or(120.0),
            args.delta.unwrap_or(80.0),
            args.rate_hz,
        )?,
        TraceKind::Push => {
            let source = match args.foot {
                Foot::Left => Source::LeftShoe,
                Foot::Right => Source::RightShoe,
            };
            let rest = args.rest.unwrap_or(160.0);
            gen_push_cycle_trace_on(
                source,
                args.cycles.expect("clap requires --cycles"),
                args.cadence_hz,
                rest,
                rest - args.delta.unwrap_or(60.0),
                args.rate_hz,
            )?
        }
    };
    let trace = add_noise(&trace, args.noise_sigma, seed)?;
    let path = out.path(&args.out);
    save_trace(&trace, &path)?;
    println!("{} samples written to {}", trace.len(), path.display());
    Ok(())
}

fn link_params(base: &ChannelParams, link: &LinkArgs) -> Result<ChannelParams> {
    let params = ChannelParams {
        loss_rate: link.loss_rate.unwrap_or(base.loss_rate),
        reorder_window: link.reorder_window.unwrap_or(base.reorder_window),
    };
    ensure!(
        (0.0..=1.0).contains(&params.loss_rate),
        "loss rate must lie in [0, 1], got {}",
        params.loss_rate
    );
    Ok(params)
}

struct LinkResult {
    sent: usize,
    frames: Vec<Vec<u8>>,
    /// Board channels as recorded, shoe channels as received.
    received: SensorTrace,
    stats: LinkStats,
}

fn run_link(trace: &SensorTrace, params: &ChannelParams, seed: u64) -> Result<LinkResult> {
    let packets = packetize_trace(trace)?;
    let delivered = simulate_channel(&packets, params.loss_rate, params.reorder_window, seed)?;
    let frames = delivered
        .iter()
        .map(encode)
        .collect::<boardsim::Result<Vec<_>>>()?;
    let decoded = frames
        .iter()
        .map(|f| decode(f))
        .collect::<boardsim::Result<Vec<_>>>()?;
    let (shoe_samples, stats) = reassemble(&decoded);

    let mut board = SensorTrace::new(trace.sample_rate_hz, trace.label.clone());
    board.samples = trace
        .samples
        .iter()
        .filter(|s| !s.source.is_shoe())
        .copied()
        .collect();
    let mut shoes = SensorTrace::new(trace.sample_rate_hz, "");
    shoes.samples = shoe_samples;
    let received = SensorTrace::merge(&[board, shoes])?;
    received.check_ordering()?;
    Ok(LinkResult {
        sent: packets.len(),
        frames,
        received,
        stats,
    })
}

fn sim_run(
    events: &[PathBuf],
    course: &PathBuf,
    workers: usize,
    cfg: &RunConfig,
    out: &Output,
) -> Result<()> {
    ensure!(workers >= 1, "--workers must be at least 1");
    let mut inputs: Vec<&PathBuf> = events.iter().collect();
    inputs.push(course);
    require_files(&inputs)?;
    let course = load_course(course)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("starting worker threads")?;
    let reports: Vec<EpisodeReport> = pool.install(|| {
        events
            .par_iter()
            .map(|path| -> Result<EpisodeReport> {
                let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
                let ev = read_events(BufReader::new(f))
                    .with_context(|| format!("reading {}", path.display()))?;
                run_episode(&ev, &course, &cfg.sim, cfg.run.timeout_ms)
                    .with_context(|| format!("simulating {}", path.display()))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    if let [report] = reports.as_slice() {
        report.write_csv(out.create("report.csv")?)?;
        println!("{report}");
    } else {
        let mut w = out.create("reports.csv")?;
        writeln!(w, "events,{}", EpisodeReport::CSV_HEADER)?;
        for (path, report) in events.iter().zip(&reports) {
            writeln!(w, "{},{report}", path.display())?;
            println!("{}: {report}", path.display());
        }
        w.flush()?;
    }
    Ok(())
}

fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().with_context(|| format!("pipeline stage `{name}` failed"))
}

fn pipeline(
    trace_path: &PathBuf,
    course_path: &PathBuf,
    no_channel: bool,
    link: &LinkArgs,
    seed: u64,
    cfg: &RunConfig,
    out: &Output,
) -> Result<()> {
    let (trace, course) = stage("load", || {
        require_files(&[trace_path, course_path])?;
        let trace = load_trace(trace_path)?;
        trace.check_ordering()?;
        Ok((trace, load_course(course_path)?))
    })?;

    let input = if no_channel {
        trace
    } else {
        let result = stage("channel", || {
            let params = link_params(&cfg.channel, link)?;
            let result = run_link(&trace, &params, seed)?;
            write_capture(&result.frames, out.create("capture.bin")?)?;
            result.stats.write_csv(out.create("link_stats.csv")?)?;
            Ok(result)
        })?;
        println!(
            "link: {} of {} packets delivered, {} gaps",
            result.frames.len(),
            result.sent,
            result.stats.total_gaps()
        );
        result.received
    };

    let events = stage("gestures", || {
        let events = run_engine(&input, &cfg.thresholds)?;
        write_events(&events, out.create("events.csv")?)?;
        Ok(events)
    })?;
    println!("gestures: {}", describe_events(&events));

    stage("hid", || {
        let hid = to_hid(&events)?;
        write_hid(&hid, out.create("hid.csv")?)?;
        Ok(())
    })?;

    let report = stage("sim", || {
        let report = run_episode(&events, &course, &cfg.sim, cfg.run.timeout_ms)?;
        report.write_csv(out.create("report.csv")?)?;
        Ok(report)
    })?;
    println!("report: {report}");
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    ensure!(
        path.is_file(),
        "input file {} does not exist",
        path.display()
    );
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn load_surveys(paths: &[PathBuf]) -> Result<Vec<LikertDataset>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(load_survey(open(p)?).with_context(|| format!("in {}", p.display()))?);
    }
    Ok(all)
}

/// The two controllers to compare: the named ones, or the first two seen.
fn pick_pair<'a>(
    sets: &'a [LikertDataset],
    names: &[String],
) -> Result<(&'a LikertDataset, &'a LikertDataset)> {
    if let [a, b] = names {
        let find = |name: &str| {
            sets.iter()
                .find(|d| d.controller_label == name)
                .ok_or_else(|| anyhow!("no responses for controller {name:?}"))
        };
        return Ok((find(a)?, find(b)?));
    }
    match sets {
        [a, b] => Ok((a, b)),
        [_] | [] => bail!("need responses for two controllers, found {}", sets.len()),
        _ => bail!(
            "survey holds {} controllers; choose two with --controllers",
            sets.len()
        ),
    }
}

fn stats(cmd: &StatsCmd, out: &Output) -> Result<()> {
    match cmd {
        StatsCmd::Items { survey } => {
            let sets = load_surveys(std::slice::from_ref(survey))?;
            let mut w = out.create("items.csv")?;
            writeln!(w, "controller,question,n,mean,sd")?;
            for ds in &sets {
                let table = ds.summarize()?;
                println!("{}", ds.controller_label);
                for (q, s) in table.questions.iter().zip(&table.items) {
                    writeln!(
                        w,
                        "{},\"{}\",{},{:.6},{:.6}",
                        ds.controller_label, q, s.n, s.mean, s.sd
                    )?;
                    println!("  {:>5.2} {:>5.2}  {q}", s.mean, s.sd);
                }
            }
            w.flush()?;
            Ok(())
        }
        StatsCmd::Diff {
            survey,
            summary,
            controllers,
            label_a,
            label_b,
        } => {
            let table = match summary {
                Some(path) => {
                    let (a, b) = read_summary_pair(open(path)?, label_a, label_b)
                        .with_context(|| format!("in {}", path.display()))?;
                    mean_diff_table(&a, &b)?
                }
                None => {
                    let sets = load_surveys(survey)?;
                    let (a, b) = pick_pair(&sets, controllers)?;
                    mean_diff_table(&a.summarize()?, &b.summarize()?)?
                }
            };
            table.write_csv(out.create("diff.csv")?)?;
            print!("{}", table.render_text());
            Ok(())
        }
        StatsCmd::Ks {
            counts,
            survey,
            question,
            controllers,
        } => {
            let (a, b) = match (counts, survey) {
                (Some(path), _) => read_counts_pair(open(path)?)
                    .with_context(|| format!("in {}", path.display()))?,
                (None, Some(path)) => {
                    let sets = load_surveys(std::slice::from_ref(path))?;
                    let (a, b) = pick_pair(&sets, controllers)?;
                    let q = question.as_deref().expect("clap requires --question");
                    let idx = a
                        .question_index(q)
                        .or_else(|| q.parse::<usize>().ok().and_then(|i| i.checked_sub(1)))
                        .filter(|&i| i < a.question_labels.len())
                        .ok_or_else(|| anyhow!("no question {q:?} in the survey"))?;
                    (
                        CategoryCounts::from_responses(a.column(idx))?,
                        CategoryCounts::from_responses(b.column(idx))?,
                    )
                }
                (None, None) => unreachable!("clap requires --counts or --survey"),
            };
            let result = ks_test(&a, &b)?;
            result.write_csv(out.create("ks.csv")?)?;
            print!("{}", result.render_text());
            Ok(())
        }
    }
}
