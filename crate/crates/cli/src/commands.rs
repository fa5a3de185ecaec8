use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rirabs::baselines::{band_curves, classify_schroeder, estimate_from_curves, Method, Unavailable};
use rirabs::dataset::{self, Dataset, DatasetMeta};
use rirabs::dsp::{self, INPUT_LEN, INPUT_RATE};
use rirabs::eval::{self, ClassicalInput, ExperimentConfig, MethodSpec};
use rirabs::nn::{self, ModelSpec, OutputHead, TrainConfig};
use rirabs::sampler::{sample_room, SamplingStrategy, StrategyKind};
use rirabs::sim::{self, simulate_echogram};
use rirabs::wav::{read_wav, write_wav};
use rirabs::{RoomGeometry, RoomSpec, SimConfig, BAND_CENTERS, N_BANDS};

use crate::{
    AnalyzeArgs, Arch, Cli, Command, DatasetArgs, EvalArgs, Head, InferArgs, SimulateArgs, Strategy,
    TrainArgs,
};

/// Settings that differ between the desk-scale and full-scale profiles.
struct Profile {
    name: &'static str,
    sim: SimConfig,
    epochs: usize,
    batch_size: usize,
    test_rooms: usize,
}

impl Profile {
    fn of(cli: &Cli) -> Profile {
        if cli.paper {
            Profile {
                name: "paper",
                sim: SimConfig::paper(),
                epochs: 400,
                batch_size: 1000,
                test_rooms: 500,
            }
        } else {
            Profile {
                name: "fast",
                sim: SimConfig::fast(),
                epochs: 100,
                batch_size: 32,
                test_rooms: 100,
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let profile = Profile::of(cli);
    match &cli.command {
        Command::Simulate(a) => simulate(cli, &profile, a),
        Command::Dataset(a) => make_datasets(cli, &profile, a),
        Command::Analyze(a) => analyze(a),
        Command::Train(a) => train(cli, &profile, a),
        Command::Eval(a) => evaluate(cli, &profile, a),
        Command::Infer(a) => infer(a),
    }
}

/// Prints the resolved configuration to stderr and returns it as a one-line
/// JSON string for output-file headers.
fn echo(command: &str, config: Value) -> String {
    let line = json!({ "command": command, "config": config }).to_string();
    eprintln!("# {line}");
    line
}

fn strategy_of(s: Strategy) -> SamplingStrategy {
    SamplingStrategy::of_kind(match s {
        Strategy::Rb => StrategyKind::Rb,
        Strategy::Unif => StrategyKind::Unif,
    })
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::Rb => "rb",
        Strategy::Unif => "unif",
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn simulate(cli: &Cli, profile: &Profile, a: &SimulateArgs) -> Result<()> {
    let room = match (&a.room, a.random) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RoomSpec::from_json(&text)?
        }
        (None, Some(s)) => sample_room(&mut ChaCha8Rng::seed_from_u64(cli.seed), &strategy_of(s))?,
        (None, None) => unreachable!("clap requires a room source"),
    };
    let config = SimConfig {
        max_time: a.time,
        n_rays: a.rays.unwrap_or(profile.sim.n_rays),
        max_image_order: a.max_order.or(profile.sim.max_image_order),
        ..profile.sim.clone()
    };
    let header = echo(
        "simulate",
        json!({ "profile": profile.name, "seed": cli.seed, "sim": config, "room": room }),
    );
    let rir = sim::simulate(&room, &config, cli.seed)?;
    write_wav(&a.out, &rir)?;
    let side = with_suffix(&a.out, ".json");
    fs::write(&side, format!("{header}\n")).with_context(|| format!("writing {}", side.display()))?;
    if let Some(path) = &a.echogram {
        let echogram = simulate_echogram(&room, &config, cli.seed)?;
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(w, "# {header}")?;
        echogram.write_table(&mut w)?;
        w.flush()?;
    }
    println!(
        "wrote {} ({} samples at {} Hz)",
        a.out.display(),
        rir.samples.len(),
        rir.sample_rate
    );
    Ok(())
}

/// Seed of the `k`-th split, so train, dev and test rooms never coincide.
fn split_seed(seed: u64, k: u64) -> u64 {
    if k == 0 {
        seed
    } else {
        seed ^ k.wrapping_mul(0xd1b5_4a32_d192_ed03)
    }
}

fn make_datasets(cli: &Cli, profile: &Profile, a: &DatasetArgs) -> Result<()> {
    let sim_config = SimConfig {
        n_rays: if a.specular_only { 0 } else { a.rays.unwrap_or(profile.sim.n_rays) },
        ..profile.sim.clone()
    };
    let snr_db = (!a.noiseless).then_some(a.snr);
    let mut strategy_label = strategy_name(a.strategy).to_string();
    if a.specular_only {
        strategy_label.push_str("_specular");
    }
    echo(
        "dataset",
        json!({
            "profile": profile.name, "seed": cli.seed, "strategy": strategy_label,
            "train": a.train, "dev": a.dev, "test": a.test, "snr_db": snr_db, "sim": sim_config,
        }),
    );
    let strategy = strategy_of(a.strategy);
    for (k, (split, count)) in [("train", a.train), ("dev", a.dev), ("test", a.test)].into_iter().enumerate() {
        if count == 0 && split == "test" {
            continue;
        }
        let dir = a.out.join(split);
        let meta = DatasetMeta {
            name: format!("{strategy_label}_{split}"),
            seed: split_seed(cli.seed, k as u64),
            strategy: strategy_label.clone(),
            sim_config: sim_config.clone(),
            snr_db,
        };
        let progress = |done: usize| eprintln!("{split}: {done}/{count}");
        let manifest = dataset::generate(&dir, &meta, &strategy, count, &progress)?;
        println!("{}: {} items, fingerprint {}", dir.display(), manifest.count, manifest.fingerprint);
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("NA".into(), |x| format!("{x:.4}"))
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let geometry = RoomGeometry::new(a.lx, a.ly, a.lz)?;
    let header = echo("analyze", json!({ "geometry": geometry, "depth_db": a.depth }));
    let rir = read_wav(&a.wav)?;
    let curves = band_curves(&rir)?;
    let sabine = estimate_from_curves(&curves, &geometry, a.depth, Method::Sabine);
    let eyring = estimate_from_curves(&curves, &geometry, a.depth, Method::Eyring);
    println!("# {header}");
    println!("band_hz\trt_s\tfit_r2\tscreening\tsabine\teyring");
    for b in 0..N_BANDS {
        let screening = curves[b]
            .as_ref()
            .map_or("NA".to_string(), |c| format!("{:?}", classify_schroeder(c)));
        let (rt, r2) = match &sabine.bands[b] {
            Ok(s) => (Some(s.rt.rt), Some(s.rt.fit_quality)),
            Err(_) => (None, None),
        };
        let eyring_text = match &eyring.bands[b] {
            Ok(e) => format!("{:.4}", e.alpha),
            Err(Unavailable::EyringDomain(_)) => "NA(domain)".into(),
            Err(_) => "NA".into(),
        };
        println!(
            "{}\t{}\t{}\t{screening}\t{}\t{eyring_text}",
            BAND_CENTERS[b],
            fmt_opt(rt),
            fmt_opt(r2),
            fmt_opt(sabine.alpha(b)),
        );
    }
    Ok(())
}

fn train(cli: &Cli, profile: &Profile, a: &TrainArgs) -> Result<()> {
    let head = match a.head {
        Head::Alpha => OutputHead::Alpha,
        Head::Inverse => OutputHead::InverseAlpha,
        Head::AlphaScattering => OutputHead::AlphaAndScattering,
    };
    let spec = match a.arch {
        Arch::Mlp => ModelSpec::mlp(head),
        Arch::Cnn => ModelSpec::cnn(head),
    };
    let config = TrainConfig {
        batch_size: a.batch_size.unwrap_or(profile.batch_size),
        learning_rate: a.lr,
        epochs: a.epochs.unwrap_or(profile.epochs),
        seed: cli.seed,
        ..TrainConfig::default()
    };
    let train_set = Dataset::open(&a.train)?;
    let dev_set = Dataset::open(&a.dev)?;
    let header = echo(
        "train",
        json!({
            "profile": profile.name, "model": spec, "train_config": config,
            "train_fingerprint": train_set.manifest.fingerprint,
            "dev_fingerprint": dev_set.manifest.fingerprint,
        }),
    );
    let train_examples = train_set.load_examples()?;
    let dev_examples = dev_set.load_examples()?;
    let (model, curve) = nn::train(
        &spec,
        &train_examples,
        &dev_examples,
        &config,
        &train_set.manifest.fingerprint,
        |r| eprintln!("epoch {:>4}  train {:.6}  dev {:.6}", r.epoch, r.train_loss, r.dev_loss),
    )?;
    nn::save_model(&model, &a.out)?;
    let curve_path = a.curve.clone().unwrap_or_else(|| with_suffix(&a.out, ".curve.csv"));
    let mut w = BufWriter::new(
        File::create(&curve_path).with_context(|| format!("creating {}", curve_path.display()))?,
    );
    writeln!(w, "# {header}")?;
    curve.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "wrote {} (best epoch {}, dev loss {:.6}) and {}",
        a.out.display(),
        model.provenance.best_epoch,
        model.provenance.dev_loss,
        curve_path.display()
    );
    Ok(())
}

/// Method description for headers: learned models by their provenance, not their path.
fn describe_method(m: &MethodSpec) -> Result<Value> {
    Ok(match m {
        MethodSpec::Classical(_) => json!(m.name()),
        MethodSpec::Learned { name, path } => {
            let model = nn::load_model(path).with_context(|| format!("loading model {name}"))?;
            json!({ "name": name, "model": model.spec(), "provenance": model.provenance })
        }
    })
}

fn evaluate(cli: &Cli, profile: &Profile, a: &EvalArgs) -> Result<()> {
    let mut config = ExperimentConfig {
        n_rooms: a.n_rooms.unwrap_or(profile.test_rooms),
        seed: cli.seed,
        sim: profile.sim.clone(),
        classical_input: match a.analysis_time {
            Some(time) => ClassicalInput::Full {
                time,
                image_order: a.analysis_order,
            },
            None => ClassicalInput::Excerpt,
        },
        snr_db: if a.noiseless { f64::INFINITY } else { a.snr },
        aggregate_over_bands: a.aggregate,
        ..ExperimentConfig::default()
    };
    let methods = a.methods.iter().map(describe_method).collect::<Result<Vec<_>>>()?;
    let dataset_rooms = match &a.rooms_from {
        Some(dir) => {
            let set = Dataset::open(dir)?;
            let mut rooms = set.rooms()?;
            rooms.truncate(a.n_rooms.unwrap_or(rooms.len()));
            config.n_rooms = rooms.len();
            Some((set, rooms))
        }
        None => None,
    };
    let source = match (&a.family, &dataset_rooms) {
        (Some(f), _) => json!({ "family": f.name() }),
        (None, Some((set, _))) => json!({ "dataset": set.manifest.fingerprint }),
        (None, None) => unreachable!("clap requires a room source"),
    };
    let header = echo(
        "eval",
        json!({ "profile": profile.name, "rooms": source, "methods": methods, "experiment": config }),
    );
    let report = match (&a.family, &dataset_rooms) {
        (Some(family), _) => eval::run_experiment(*family, &a.methods, &config)?,
        (None, Some((set, rooms))) => {
            eval::evaluate_rooms(&set.manifest.name, rooms, &a.methods, &[config.snr_db], &config)?
        }
        (None, None) => unreachable!("clap requires a room source"),
    };
    let written = report.write(&a.out, &header)?;
    let summary = written
        .iter()
        .find(|p| p.to_string_lossy().ends_with("_summary.txt"))
        .context("report has no summary")?;
    print!("{}", fs::read_to_string(summary)?);
    Ok(())
}

/// Network input from a WAV: 48 kHz responses go through the training-time
/// preprocessing; 16 kHz ones are truncated or padded and peak-normalised.
fn network_input(rir: &sim::Rir, snr_db: Option<f64>) -> Result<Vec<f32>> {
    let x = if (rir.sample_rate - INPUT_RATE).abs() < 0.5 {
        if snr_db.is_some() {
            bail!("--snr applies to 48 kHz inputs only");
        }
        let mut x = rir.samples.clone();
        x.resize(INPUT_LEN, 0.0);
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak <= 0.0 {
            bail!("input is silent");
        }
        x.iter().map(|v| v / peak).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        dsp::preprocess(rir, snr_db.unwrap_or(f64::INFINITY), &mut rng)?
    };
    Ok(x.into_iter().map(|v| v as f32).collect())
}

fn infer(a: &InferArgs) -> Result<()> {
    let model = nn::load_model_expecting(&a.model, INPUT_LEN)?;
    let header = echo(
        "infer",
        json!({ "model": model.spec(), "provenance": model.provenance, "snr_db": a.snr }),
    );
    let rir = read_wav(&a.wav)?;
    let x = network_input(&rir, a.snr)?;
    let y = nn::predict(&model, &x)?;
    println!("# {header}");
    match &y.s_bar {
        Some(s) => {
            println!("band_hz\talpha\tscattering");
            for b in 0..N_BANDS {
                println!("{}\t{:.4}\t{:.4}", BAND_CENTERS[b], y.alpha_bar.0[b], s.0[b]);
            }
        }
        None => {
            println!("band_hz\talpha");
            for b in 0..N_BANDS {
                println!("{}\t{:.4}", BAND_CENTERS[b], y.alpha_bar.0[b]);
            }
        }
    }
    Ok(())
}
