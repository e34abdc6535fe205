use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ndarray::{Array2, Axis};
use serde_json::json;

use sdrkit::datagen::{
    apply_cubic, generate_gaussian_pair, generate_linear_model, random_features_embed, replicate_embed,
    simulate_pendulum, spread_information_pair, DataMatrixPair, GaussianPairSpec, LinearModelSpec, PendulumSpec,
};
use sdrkit::harness::{emit_results, run_sweep, ExperimentConfig};
use sdrkit::ibgraph::{
    compile_loss, parse_graph, run_dynamics, select_rows, train_composite, ArchConfig, CompositeConfig,
    DynamicsConfig, NodeData,
};
use sdrkit::io::{read_matrix, read_pair, write_matrix, write_matrix_csv, write_pair};
use sdrkit::lindr::{self, Method, RccaConfig};
use sdrkit::metrics::{gaussian_mi_from_data, latent_dim_diagnostic, rc_prime, DiagnosticConfig, DEFAULT_MI_THRESHOLD};
use sdrkit::miest::{
    embedding_sweep, guidelines_protocol, split_indices, summarize_levels, train_estimator, CriticKind, CriticSpec,
    DataSource, EstimatorConfig, GuidelinesConfig, ObjectiveKind, StaircaseSpec, Verdict,
};
use sdrkit::{Error, Result};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_UNRELIABLE: u8 = 3;

#[derive(Parser)]
#[command(name = "sdrkit", version, about = "Simultaneous dimensionality reduction and MI estimation toolkit")]
struct Cli {
    /// Output directory for every artifact.
    #[arg(long, global = true, env = "SDRKIT_OUT", default_value = "sdrkit-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Linear,
    Gaussian,
    Spread,
    Pendulum,
}

#[derive(Clone, Copy, ValueEnum)]
enum Heuristic {
    MaxTest,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic dataset.
    Generate {
        #[arg(long, value_enum, default_value = "linear")]
        kind: GenKind,
        #[arg(long, default_value = "data")]
        stem: String,
        /// Samples (rows).
        #[arg(long, default_value_t = 300)]
        t: usize,
        /// Features per view (linear), or ambient dimension (spread).
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m_shared: usize,
        #[arg(long, default_value_t = 1)]
        m_self: usize,
        #[arg(long, default_value_t = 5.0)]
        gamma_self: f64,
        #[arg(long, default_value_t = 5.0)]
        gamma_shared: f64,
        /// Correlated dimensions (gaussian, spread).
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Total true MI in nats (gaussian, spread).
        #[arg(long, default_value_t = 1.0)]
        mi: f64,
        /// Pendulum experiments.
        #[arg(long, default_value_t = 1100)]
        experiments: usize,
        /// Pendulum observation dimension.
        #[arg(long, default_value_t = 784)]
        obs_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace Y by Y³.
        #[arg(long)]
        cubic: bool,
        /// Embed each view as this many stacked copies.
        #[arg(long)]
        replicate: Option<usize>,
        /// Embed each view through a frozen random network of this width.
        #[arg(long)]
        random_features: Option<usize>,
        /// Also write headerless CSV copies.
        #[arg(long)]
        csv: bool,
    },
    /// Fit a linear reduction and write the basis and projections.
    Reduce {
        #[arg(long)]
        method: Method,
        #[arg(long)]
        k: usize,
        /// rCCA regularization, used for both views.
        #[arg(long, default_value_t = 0.1)]
        c: f64,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: Option<PathBuf>,
        #[arg(long, default_value = "basis")]
        stem: String,
    },
    /// RC′ of given projections, or the held-out latent-dimension diagnostic.
    Evaluate {
        #[arg(long, requires = "zy")]
        zx: Option<PathBuf>,
        #[arg(long)]
        zy: Option<PathBuf>,
        #[arg(long, requires = "y", conflicts_with = "zx")]
        x: Option<PathBuf>,
        #[arg(long)]
        y: Option<PathBuf>,
        /// Held-out views; without them the rows are split in half.
        #[arg(long, requires = "y_test")]
        x_test: Option<PathBuf>,
        #[arg(long)]
        y_test: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,8,10")]
        k_grid: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        m_shared: usize,
        #[arg(long, default_value_t = 0.1)]
        c: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Singular-value cutoff of the Gaussian MI determinant.
        #[arg(long, default_value_t = DEFAULT_MI_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a neural MI estimator.
    Mi {
        #[arg(long, requires = "y", conflicts_with = "staircase")]
        x: Option<PathBuf>,
        #[arg(long)]
        y: Option<PathBuf>,
        /// Comma-separated true MI levels of a streaming Gaussian staircase.
        #[arg(long, value_delimiter = ',')]
        staircase: Option<Vec<f64>>,
        /// Dimension of the staircase Gaussians.
        #[arg(long, default_value_t = 20)]
        dim: usize,
        #[arg(long)]
        cubic: bool,
        #[arg(long, default_value = "infonce")]
        objective: ObjectiveKind,
        #[arg(long, default_value = "separable")]
        critic: CriticKind,
        /// Critic embedding sizes; several values run a sweep.
        #[arg(long, value_delimiter = ',', default_value = "16")]
        kz: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        hidden_layers: usize,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        batch: usize,
        /// Steps per staircase level.
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        /// Epochs on finite data.
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        /// SMILE clip; `inf` disables clipping.
        #[arg(long, default_value = "5")]
        tau: f64,
        #[arg(long, default_value_t = 5e-4)]
        lr: f64,
        #[arg(long, value_enum, default_value = "max-test")]
        heuristic: Heuristic,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a loss graph written in the graph DSL.
    Ib {
        #[arg(long)]
        graph: PathBuf,
        /// Overrides the graph's beta.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 2)]
        kz: usize,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 128)]
        batch: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        /// Hidden widths of encoders and decoders.
        #[arg(long, value_delimiter = ',', default_value = "256,256")]
        hidden: Vec<usize>,
        /// Observed node data, NAME=PATH to a matrix file; repeatable.
        #[arg(long = "data", value_parser = parse_binding, required = true)]
        data: Vec<(String, PathBuf)>,
        #[arg(long, default_value_t = 0.1)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a parameter sweep from a JSON config.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Print the default config and exit.
        #[arg(long)]
        print_default: bool,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the MI reliability procedure; exits 3 when no estimate is reliable.
    Guidelines {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// JSON overrides of the procedure settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Learn pendulum coordinates from simulated observation windows.
    Dynamics {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        train_experiments: Option<usize>,
        #[arg(long)]
        test_experiments: Option<usize>,
        #[arg(long)]
        obs_dim: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_binding(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or_else(|| format!("expected NAME=PATH, got `{s}`"))?;
    Ok((name.trim().to_string(), PathBuf::from(path.trim())))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Array2<f64>> {
    Ok(read_matrix(path)?.0)
}

fn embed_views(mut d: DataMatrixPair, cubic: bool, replicate: Option<usize>, rf: Option<usize>, seed: u64) -> Result<DataMatrixPair> {
    if cubic {
        d = apply_cubic(&d);
    }
    if let Some(c) = replicate {
        d = replicate_embed(&d, c)?;
    }
    if let Some(w) = rf {
        d = random_features_embed(&d, w, w.max(64), seed ^ 0x5eed)?;
    }
    Ok(d)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out = cli.out;
    match cli.command {
        Command::Generate {
            kind, stem, t, n, m_shared, m_self, gamma_self, gamma_shared, k, mi, experiments, obs_dim, seed, cubic,
            replicate, random_features, csv,
        } => {
            let pair = match kind {
                GenKind::Linear => generate_linear_model(&LinearModelSpec::from_snr(
                    n, t, m_shared, m_self, gamma_self, gamma_shared, seed, seed.wrapping_add(1),
                ))?,
                GenKind::Gaussian => generate_gaussian_pair(&GaussianPairSpec::uniform(k, mi, t, seed))?,
                GenKind::Spread => spread_information_pair(n, k, mi, t, seed)?,
                GenKind::Pendulum => {
                    let spec = PendulumSpec { n_experiments: experiments, obs_dim, seed, ..Default::default() };
                    let sim = simulate_pendulum(&spec)?;
                    let w = sim.windows(0..experiments);
                    let meta = json!({ "spec": spec, "max_energy_drift": sim.max_energy_drift });
                    write_matrix(&out.join(format!("{stem}_x.bin")), &w.x, meta.clone())?;
                    write_matrix(&out.join(format!("{stem}_y.bin")), &w.y, meta.clone())?;
                    let state = ndarray::stack(Axis(1), &[w.theta.view(), w.omega.view()]).expect("equal lengths");
                    write_matrix(&out.join(format!("{stem}_state.bin")), &state, meta)?;
                    if csv {
                        write_matrix_csv(&out.join(format!("{stem}_x.csv")), &w.x)?;
                        write_matrix_csv(&out.join(format!("{stem}_y.csv")), &w.y)?;
                        write_matrix_csv(&out.join(format!("{stem}_state.csv")), &state)?;
                    }
                    println!("wrote {} window pairs to {}", w.x.nrows(), out.display());
                    return Ok(ExitCode::SUCCESS);
                }
            };
            let pair = embed_views(pair, cubic, replicate, random_features, seed)?;
            let (px, py) = write_pair(&out, &stem, &pair)?;
            if csv {
                write_matrix_csv(&px.with_extension("csv"), &pair.x)?;
                write_matrix_csv(&py.with_extension("csv"), &pair.y)?;
            }
            println!("wrote {}x{} and {}x{} to {}", pair.x.nrows(), pair.x.ncols(), pair.y.nrows(), pair.y.ncols(), out.display());
            if let Some(mi) = pair.true_mi {
                println!("true MI {mi:.6} nats");
            }
        }
        Command::Reduce { method, k, c, x, y, stem } => {
            let xm = load(&x)?;
            let ym = y.as_deref().map(load).transpose()?;
            let basis = match (&ym, method) {
                (Some(ym), _) => lindr::fit(method, xm.view(), ym.view(), k, &RccaConfig::with_c(c))?,
                (None, Method::Pca) => lindr::pca_fit(xm.view(), k)?,
                (None, _) => return Err(Error::Config(format!("{method} needs --y"))),
            };
            let meta = json!({ "method": method, "k": k, "c": c, "criterion": basis.criterion, "diagnostics": basis.diagnostics });
            write_matrix(&out.join(format!("{stem}_wx.bin")), &basis.w_x, meta.clone())?;
            let (zx, zy) = lindr::project(&basis, xm.view(), ym.as_ref().map(|m| m.view()))?;
            write_matrix(&out.join(format!("{stem}_zx.bin")), &zx, meta.clone())?;
            if let Some(w) = &basis.w_y {
                write_matrix(&out.join(format!("{stem}_wy.bin")), w, meta.clone())?;
            }
            if let Some(zy) = zy {
                write_matrix(&out.join(format!("{stem}_zy.bin")), &zy, meta)?;
            }
            println!("{method} k={k} criterion {:?}", basis.criterion);
        }
        Command::Evaluate { zx, zy, x, y, x_test, y_test, k_grid, m_shared, c, trials, threshold, seed } => {
            if let (Some(zx), Some(zy)) = (zx, zy) {
                let (a, b) = (load(&zx)?, load(&zy)?);
                let report = rc_prime(a.view(), b.view(), m_shared, trials, seed)?;
                let gmi = gaussian_mi_from_data(a.view(), b.view(), threshold)?;
                let path = out.join("rc_report.json");
                write_json(&path, &json!({ "report": report, "gaussian_mi": gmi }))?;
                println!("RC' = {:.6} (RC {:.6}, RC0 {:.6} ± {:.6}); Gaussian MI {gmi:.6}", report.rc_prime, report.rc, report.rc0, report.rc0_std);
            } else if let (Some(x), Some(y)) = (x, y) {
                let pair = read_pair(&x, &y)?;
                let (train, test) = match (x_test, y_test) {
                    (Some(xt), Some(yt)) => (pair, read_pair(&xt, &yt)?),
                    _ => {
                        let (tr, te) = split_indices(pair.samples(), 0.5, seed);
                        (pair.select_rows(&tr), pair.select_rows(&te))
                    }
                };
                let cfg = DiagnosticConfig { rcca: RccaConfig::with_c(c), m_shared, trials, seed };
                let report = latent_dim_diagnostic((train.x.view(), train.y.view()), (test.x.view(), test.y.view()), &k_grid, &cfg)?;
                let mut w = String::from("k,rc_prime_pca,rc_prime_rcca,rc0,rc0_std\n");
                for r in &report.rows {
                    w.push_str(&format!("{},{},{},{},{}\n", r.k, r.rc_prime_pca, r.rc_prime_rcca, r.rc0, r.rc0_std));
                }
                std::fs::create_dir_all(&out)?;
                std::fs::write(out.join("diagnostic.csv"), w)?;
                write_json(&out.join("diagnostic.json"), &report)?;
                println!("peak k: pca {}, rcca {}", report.peak_pca, report.peak_rcca);
            } else {
                return Err(Error::Config("give --zx/--zy or --x/--y".into()));
            }
        }
        Command::Mi {
            x, y, staircase, dim, cubic, objective, critic, kz, hidden_layers, width, batch, steps, epochs, tau, lr,
            heuristic: Heuristic::MaxTest, repeats, seed,
        } => {
            let tau = if tau.is_infinite() { None } else { Some(tau) };
            let cfg = EstimatorConfig { objective, tau, batch_size: batch, epochs, lr, seed, ..Default::default() };
            let spec_for = |k: usize| CriticSpec { kind: critic, hidden_layers, hidden_width: width, embed_dim: k };
            std::fs::create_dir_all(&out)?;
            if let Some(levels) = staircase {
                let stairs = StaircaseSpec { k: dim, levels, steps_per_level: steps, cubic };
                let rec = train_estimator(DataSource::Staircase(stairs.clone()), &spec_for(kz[0]), &cfg)?;
                write_json(&out.join("run_record.json"), &rec)?;
                for l in summarize_levels(&rec, &stairs, 200) {
                    println!("level {:.3}: smoothed {:.4}, tail mean {:.4}, tail var {:.4}", l.level, l.smoothed_end, l.tail_mean, l.tail_var);
                }
            } else if let (Some(x), Some(y)) = (x, y) {
                let (xm, ym) = (load(&x)?, load(&y)?);
                if kz.len() == 1 && repeats == 1 {
                    let rec = train_estimator(DataSource::Finite { x: xm.view(), y: ym.view() }, &spec_for(kz[0]), &cfg)?;
                    write_json(&out.join("run_record.json"), &rec)?;
                    println!("reported MI {:.6} at step {:?}", rec.reported, rec.step_of_max_test);
                } else {
                    let table = embedding_sweep(xm.view(), ym.view(), &kz, &spec_for(kz[0]), &cfg, repeats)?;
                    std::fs::write(out.join("mi_sweep.csv"), table.to_csv())?;
                    for s in &table.summary {
                        println!("k_z {:>3}: {:.4} ± {:.4}", s.k_z, s.mean, s.std);
                    }
                }
            } else {
                return Err(Error::Config("give --x/--y or --staircase".into()));
            }
        }
        Command::Ib { graph, beta, kz, epochs, batch, lr, hidden, data, test_fraction, seed } => {
            let mut spec = parse_graph(&std::fs::read_to_string(&graph)?)?;
            if let Some(b) = beta {
                spec.beta = b;
            }
            let mut all = NodeData::new();
            for (name, path) in data {
                all.insert(name, load(&path)?);
            }
            let rows = all.values().next().map(|m| m.nrows()).unwrap_or(0);
            if all.values().any(|m| m.nrows() != rows) {
                return Err(Error::Config("all --data matrices need the same row count".into()));
            }
            let (tr, te) = split_indices(rows, test_fraction, seed);
            let (train, test) = (select_rows(&all, &tr), select_rows(&all, &te));
            let arch = ArchConfig { k_z: kz, encoder_hidden: hidden.clone(), decoder_hidden: hidden, seed, ..Default::default() }
                .with_data_widths(&all);
            let mut loss = compile_loss(&spec, &arch)?;
            let cfg = CompositeConfig { epochs, batch_size: batch, lr, seed, ..Default::default() };
            let record = train_composite(&mut loss, &train, &test, &cfg)?;
            loss.save(&out.join("checkpoint"))?;
            for name in loss.latent_names() {
                let z = loss.embed(name, &all)?;
                write_matrix(&out.join(format!("embedding_{name}.bin")), &z, json!({ "latent": name }))?;
            }
            std::fs::write(out.join("mi_trace.csv"), record.mi_trace_csv())?;
            write_json(&out.join("ib_record.json"), &record)?;
            if let Some(last) = record.epochs.last() {
                println!("final test loss {:.4}, test MI {:?}", last.test_loss, last.test_mi);
            }
            if record.collapsed {
                eprintln!("warning: {}", record.collapse_reason.as_deref().unwrap_or("posterior collapse"));
            }
        }
        Command::Sweep { config, print_default, name, trials, seed, workers } => {
            if print_default {
                println!("{}", serde_json::to_string_pretty(&ExperimentConfig::default())?);
                return Ok(ExitCode::SUCCESS);
            }
            let mut cfg: ExperimentConfig = match config {
                Some(p) => read_json(&p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(v) = name {
                cfg.name = v;
            }
            if let Some(v) = trials {
                cfg.trials = v;
            }
            if let Some(v) = seed {
                cfg.master_seed = v;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            let dir = cfg.output_dir.clone().unwrap_or_else(|| out.join(&cfg.name));
            cfg.output_dir = Some(dir.clone());
            let result = run_sweep(&cfg)?;
            let (csv, js) = emit_results(&result, &dir)?;
            println!("{} cells run, {} cached; wrote {} and {}", result.cells_run, result.cells_skipped, csv.display(), js.display());
        }
        Command::Guidelines { x, y, config, epochs, repeats, seed } => {
            let mut cfg: GuidelinesConfig = match config {
                Some(p) => read_json(&p)?,
                None => GuidelinesConfig::default(),
            };
            if let Some(v) = epochs {
                cfg.estimator.epochs = v;
            }
            if let Some(v) = repeats {
                cfg.repeats = v;
            }
            if let Some(v) = seed {
                cfg.estimator.seed = v;
            }
            let (xm, ym) = (load(&x)?, load(&y)?);
            let report = guidelines_protocol(xm.view(), ym.view(), &cfg)?;
            write_json(&out.join("guidelines.json"), &report)?;
            if let Some(t) = &report.neural {
                std::fs::write(out.join("guidelines_sweep.csv"), t.to_csv())?;
            }
            for n in &report.notes {
                println!("{n}");
            }
            match (report.verdict, report.estimate) {
                (Verdict::Unreliable, _) | (_, None) => {
                    println!("verdict: unreliable; no estimate reported");
                    return Ok(ExitCode::from(EXIT_UNRELIABLE));
                }
                (v, Some(e)) => println!("verdict: {v:?}; MI {e:.4} nats (sigma {:.4})", report.sigma.unwrap_or(0.0)),
            }
        }
        Command::Dynamics { config, epochs, train_experiments, test_experiments, obs_dim, hidden, seed } => {
            let mut cfg: DynamicsConfig = match config {
                Some(p) => read_json(&p)?,
                None => DynamicsConfig::default(),
            };
            if let Some(v) = epochs {
                cfg.training.epochs = v;
            }
            if let Some(v) = train_experiments {
                cfg.train_experiments = v;
            }
            if let Some(v) = test_experiments {
                cfg.test_experiments = v;
            }
            if let Some(v) = obs_dim {
                cfg.pendulum.obs_dim = v;
            }
            if let Some(v) = hidden {
                cfg.encoder_hidden = v;
            }
            if let Some(v) = seed {
                cfg.training.seed = v;
                cfg.pendulum.seed = v;
            }
            let (report, loss) = run_dynamics(&cfg)?;
            loss.save(&out.join("checkpoint"))?;
            write_matrix(&out.join("test_embedding.bin"), &report.test_embedding, json!({ "latent": "Zx" }))?;
            let state = ndarray::stack(Axis(1), &[report.test_theta.view(), report.test_omega.view()]).expect("equal lengths");
            write_matrix(&out.join("test_state.bin"), &state, json!({ "columns": ["theta", "omega"] }))?;
            std::fs::write(out.join("mi_trace.csv"), report.record.mi_trace_csv())?;
            write_json(
                &out.join("dynamics.json"),
                &json!({
                    "final_train_mi": report.final_train_mi,
                    "final_test_mi": report.final_test_mi,
                    "r2_angle_from_embedding": report.r2_angle_from_embedding,
                    "r2_embedding_from_state": report.r2_embedding_from_state,
                    "max_energy_drift": report.max_energy_drift,
                    "collapsed": report.record.collapsed,
                }),
            )?;
            println!(
                "MI train {:.3} / test {:.3} nats; R² angle {:.3}, R² embedding {:.3}",
                report.final_train_mi, report.final_test_mi, report.r2_angle_from_embedding, report.r2_embedding_from_state
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse { .. } | Error::Graph(_) => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::from(EXIT_RUNTIME),
            }
        }
    }
}
