//! Command-line front end: builds pipelines from fixtures or space files,
//! runs the property suites, and emits JSON/CSV reports. Exit code 0 on
//! success, 1 when an assertion suite fails, 2 on configuration errors;
//! machine-readable error JSON goes to stderr. All file output is atomic.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use wavespace::dyadic::{build_cubes, build_nets, verify_cubes, DyadicSystem, TieBreak};
use wavespace::error::Error as CoreError;
use wavespace::experiment::{boundedness_experiment, records_to_csv, ExperimentConfig};
use wavespace::io;
use wavespace::mra::{build_splines, spline_checks, SplineBasis, SplineMode};
use wavespace::norms::{
    bmo_norm, bmo_plus_norm, carleson_norm, grand_maximal, llog_norm, lp_norm, validate_atom,
    wavelet_h1_norms, RadiusGrid,
};
use wavespace::paraproduct::paraproducts;
use wavespace::space::{doubling_report, MetricMeasureSpace};
use wavespace::wavelet::{build_wavelets, wavelet_checks, WaveletBasis};

#[derive(Parser)]
#[command(
    name = "wavespace",
    version,
    about = "dyadic systems, wavelets and paraproducts on finite metric measure spaces"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Space file (JSON, space/v1 schema).
    #[arg(long, conflicts_with = "fixture")]
    space: Option<PathBuf>,
    /// Built-in fixture: line4 | ring:N | cantor:D | cloud:N,DIM,SEED.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Args, Clone)]
struct BuildArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Scale ratio in (0, 1/2].
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Spline mode: haar | smoothed.
    #[arg(long, default_value = "haar")]
    mode: String,
    /// Replica count for smoothed mode.
    #[arg(long, default_value_t = 8)]
    samples: u32,
    /// Seed for smoothed replicas / randomized tie-breaking.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Truncate the coarse end of the scale range.
    #[arg(long)]
    kmin: Option<i32>,
    /// Extend the fine end of the scale range (must not cut below the
    /// natural finest level).
    #[arg(long)]
    kmax: Option<i32>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a fixture as a space file.
    GenSpace {
        #[arg(long)]
        fixture: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the net hierarchy and cube partition as CSV.
    DumpDyadic {
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        out: PathBuf,
        /// Randomized parent tie-breaking with the given --seed.
        #[arg(long, default_value_t = false)]
        randomized: bool,
    },
    /// Build the full pipeline and write summaries and dumps.
    Build {
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suites of every module; exit 1 on failure.
    Check {
        #[command(flatten)]
        build: BuildArgs,
        /// Random probe pairs for the decomposition checks.
        #[arg(long, default_value_t = 20)]
        probes: usize,
        /// Tolerance overrides NAME=VALUE (ortho, decomp, moment).
        #[arg(long = "tol")]
        tol: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wavelet analysis (function CSV -> coefficient CSV) or synthesis.
    Transform {
        #[command(flatten)]
        build: BuildArgs,
        /// Input function CSV (`point_id,value`).
        #[arg(long = "fn", conflicts_with = "coeffs")]
        function: Option<PathBuf>,
        /// Input coefficient CSV for the inverse transform.
        #[arg(long)]
        coeffs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a norm of a function given as CSV.
    Norms {
        #[command(flatten)]
        build: BuildArgs,
        /// bmo | bmo_plus | lp:P | linf | llog | carleson | h1 | maximal
        #[arg(long)]
        norm: String,
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paraproduct decomposition of two function CSVs.
    Decompose {
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the boundedness experiment from a config file.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge run outputs in a directory into one consolidated report.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct ErrorJson {
    schema: &'static str,
    code: i32,
    message: String,
}

fn exit_code_for(err: &CoreError) -> i32 {
    match err {
        CoreError::GeometryCheck { .. }
        | CoreError::SplineCheck { .. }
        | CoreError::WaveletConstruction { .. }
        | CoreError::RankDeficient { .. }
        | CoreError::NotMeanZero(_) => 1,
        _ => 2,
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            let code = exit_code_for(&err);
            let e = ErrorJson {
                schema: "error/v1",
                code,
                message: err.to_string(),
            };
            eprintln!("{}", serde_json::to_string(&e).expect("error json"));
            std::process::exit(code);
        }
    }
}

struct Tolerances {
    ortho: f64,
    decomp: f64,
    moment: f64,
}

impl Tolerances {
    fn from_flags(flags: &[String]) -> Result<Tolerances, CoreError> {
        let mut t = Tolerances {
            ortho: wavespace::tol::ORTHO,
            decomp: wavespace::tol::DECOMP_REL,
            moment: wavespace::tol::HAND,
        };
        for flag in flags {
            let (name, value) = flag.split_once('=').ok_or_else(|| {
                CoreError::InvalidArgument(format!("tolerance `{flag}` is not NAME=VALUE"))
            })?;
            let v: f64 = value.parse().map_err(|_| {
                CoreError::InvalidArgument(format!("tolerance value `{value}` is not a number"))
            })?;
            if !(v >= f64::EPSILON) {
                return Err(CoreError::InvalidArgument(format!(
                    "tolerance {name} = {v} below machine epsilon"
                )));
            }
            match name {
                "ortho" => t.ortho = v,
                "decomp" => t.decomp = v,
                "moment" => t.moment = v,
                other => {
                    return Err(CoreError::InvalidArgument(format!(
                        "unknown tolerance `{other}`"
                    )))
                }
            }
        }
        Ok(t)
    }
}

fn load_source(source: &SourceArgs) -> Result<Arc<MetricMeasureSpace>, CoreError> {
    match (&source.space, &source.fixture) {
        (Some(path), None) => Ok(Arc::new(io::load_space_path(path)?)),
        (None, Some(spec)) => io::space_from_source(spec),
        _ => Err(CoreError::InvalidArgument(
            "exactly one of --space and --fixture is required".into(),
        )),
    }
}

fn parse_mode(args: &BuildArgs) -> Result<SplineMode, CoreError> {
    match args.mode.as_str() {
        "haar" => Ok(SplineMode::Haar),
        "smoothed" => Ok(SplineMode::Smoothed {
            replicas: args.samples,
            seed: args.seed,
        }),
        other => Err(CoreError::InvalidArgument(format!(
            "mode `{other}` (expected haar | smoothed)"
        ))),
    }
}

fn build_system(args: &BuildArgs, tiebreak: TieBreak) -> Result<Arc<DyadicSystem>, CoreError> {
    let space = load_source(&args.source)?;
    let nets = build_nets(space, args.delta)?;
    let system = build_cubes(&nets, tiebreak)?;
    Ok(Arc::new(system.restrict(args.kmin, args.kmax)?))
}

fn build_splines_from(args: &BuildArgs) -> Result<Arc<SplineBasis>, CoreError> {
    let system = build_system(args, TieBreak::Deterministic)?;
    Ok(Arc::new(build_splines(system, parse_mode(args)?)?))
}

fn build_wavelets_from(
    args: &BuildArgs,
) -> Result<(Arc<SplineBasis>, Arc<WaveletBasis>), CoreError> {
    let splines = build_splines_from(args)?;
    let wavelets = Arc::new(build_wavelets(Arc::clone(&splines))?);
    Ok((splines, wavelets))
}

fn write_meta(dir: &Path, argv: &[String]) -> Result<(), CoreError> {
    // timestamps live here and only here; every other output is
    // byte-deterministic in the config
    #[derive(Serialize)]
    struct Meta<'a> {
        schema: &'static str,
        argv: &'a [String],
        unix_time: u64,
    }
    io::write_json(
        &dir.join("run_meta.json"),
        &Meta {
            schema: "run-meta/v1",
            argv,
            unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
    )
}

fn run(cli: Cli) -> Result<i32, CoreError> {
    let argv: Vec<String> = std::env::args().collect();
    match cli.cmd {
        Cmd::GenSpace { fixture, out } => {
            let space = io::space_from_source(&fixture)?;
            io::write_json(&out, &io::space_to_file(&space))?;
            Ok(0)
        }
        Cmd::DumpDyadic {
            build,
            out,
            randomized,
        } => {
            let tiebreak = if randomized {
                TieBreak::randomized(build.seed)
            } else {
                TieBreak::Deterministic
            };
            let system = build_system(&build, tiebreak)?;
            io::write_atomic(&out.join("cubes.csv"), io::cubes_to_csv(&system).as_bytes())?;
            io::write_atomic(&out.join("nets.csv"), io::nets_to_csv(&system).as_bytes())?;
            write_meta(&out, &argv)?;
            Ok(0)
        }
        Cmd::Build { build, out } => {
            let splines = build_splines_from(&build)?;
            let system = Arc::clone(&splines.system);
            let geometry = verify_cubes(&system)?;
            let spline_report = spline_checks(&splines)?;
            io::write_atomic(&out.join("cubes.csv"), io::cubes_to_csv(&system).as_bytes())?;
            io::write_atomic(&out.join("nets.csv"), io::nets_to_csv(&system).as_bytes())?;
            io::write_atomic(
                &out.join("splines.csv"),
                io::splines_to_csv(&splines).as_bytes(),
            )?;
            let mut grams = Vec::new();
            for k in system.levels() {
                grams.push(io::GramReportJson::new(&splines.gram(k)?));
            }
            io::write_json(&out.join("gram.json"), &grams)?;

            let mut wavelet_report = None;
            if splines.mode.is_haar() {
                let wavelets = build_wavelets(Arc::clone(&splines))?;
                wavelet_report = Some(wavelet_checks(&wavelets, None)?);
                // decay scatter for plotting
                let mut decay =
                    String::from("level,beta_id,dist_over_scale,log_abs_psi_sqrt_vol\n");
                let space = &system.space;
                for k in wavelets.levels() {
                    let sep = system.scale(k);
                    for &beta in wavelets.labels(k) {
                        let psi = wavelets.wavelet_fn(k, beta)?;
                        let vol = space.volume(beta, sep).sqrt();
                        for x in 0..space.len() {
                            let v = psi.value(x).abs();
                            if v > 0.0 {
                                decay.push_str(&format!(
                                    "{},{},{},{}\n",
                                    k,
                                    space.id(beta),
                                    space.dist(beta, x) / sep,
                                    (v * vol).ln()
                                ));
                            }
                        }
                    }
                }
                io::write_atomic(&out.join("decay_samples.csv"), decay.as_bytes())?;
            }

            #[derive(Serialize)]
            struct BuildSummary<'a> {
                schema: &'static str,
                points: usize,
                delta: f64,
                k_min: i32,
                k_max: i32,
                net_sizes: Vec<usize>,
                geometry: &'a wavespace::dyadic::GeometryReport,
                splines: &'a wavespace::mra::SplineCheckReport,
                wavelets: Option<wavespace::wavelet::WaveletCheckReport>,
                doubling: wavespace::space::DoublingReport,
            }
            io::write_json(
                &out.join("build_summary.json"),
                &BuildSummary {
                    schema: "build-summary/v1",
                    points: system.space.len(),
                    delta: system.delta,
                    k_min: system.k_min,
                    k_max: system.k_max,
                    net_sizes: system.levels().map(|k| system.net(k).len()).collect(),
                    geometry: &geometry,
                    splines: &spline_report,
                    wavelets: wavelet_report,
                    doubling: doubling_report(&system.space, None),
                },
            )?;
            write_meta(&out, &argv)?;
            Ok(0)
        }
        Cmd::Check {
            build,
            probes,
            tol,
            out,
        } => {
            let tols = Tolerances::from_flags(&tol)?;
            let rows = run_check(&build, probes, &tols)?;
            let failed = rows.iter().filter(|r| !r.pass).count();
            #[derive(Serialize)]
            struct CheckReport<'a> {
                schema: &'static str,
                invariants: &'a [CheckRow],
                failed: usize,
            }
            let doc = CheckReport {
                schema: "check-report/v1",
                invariants: &rows,
                failed,
            };
            match out {
                Some(path) => io::write_json(&path, &doc)?,
                None => println!("{}", serde_json::to_string_pretty(&doc)?),
            }
            Ok(if failed > 0 { 1 } else { 0 })
        }
        Cmd::Transform {
            build,
            function,
            coeffs,
            out,
        } => {
            let (_, wavelets) = build_wavelets_from(&build)?;
            let space = &wavelets.splines.system.space;
            match (function, coeffs) {
                (Some(path), None) => {
                    let f = io::read_function_csv(space, &std::fs::read_to_string(path)?)?;
                    let c = wavelets.analyze(&f)?;
                    io::write_atomic(&out, io::coeffs_to_csv(&wavelets, &c).as_bytes())?;
                }
                (None, Some(path)) => {
                    let c = io::read_coeffs_csv(&wavelets, &std::fs::read_to_string(path)?)?;
                    let f = wavelets.synthesize(&c)?;
                    io::write_atomic(&out, io::function_to_csv(space, &f)?.as_bytes())?;
                }
                _ => {
                    return Err(CoreError::InvalidArgument(
                        "exactly one of --fn and --coeffs is required".into(),
                    ))
                }
            }
            Ok(0)
        }
        Cmd::Norms {
            build,
            norm,
            function,
            out,
        } => {
            let space = load_source(&build.source)?;
            let g = io::read_function_csv(&space, &std::fs::read_to_string(&function)?)?;
            let report = match norm.as_str() {
                "bmo" => {
                    let r = bmo_norm(&space, &g)?;
                    io::NormReport::new(
                        "bmo",
                        r.value,
                        serde_json::to_value(&r.witness)?,
                        serde_json::json!({}),
                    )
                }
                "bmo_plus" => {
                    let r = bmo_plus_norm(&space, &g, space.base_point())?;
                    io::NormReport::new(
                        "bmo_plus",
                        r.value,
                        serde_json::json!({"bmo": r.bmo, "local_term": r.local_term}),
                        serde_json::json!({"local_radius": r.local_radius}),
                    )
                }
                "linf" => io::NormReport::new(
                    "linf",
                    lp_norm(&space, &g, f64::INFINITY)?,
                    serde_json::json!({}),
                    serde_json::json!({}),
                ),
                "llog" => io::NormReport::new(
                    "llog",
                    llog_norm(&space, &g, space.base_point())?,
                    serde_json::json!({}),
                    serde_json::json!({"x0": space.id(space.base_point())}),
                ),
                "carleson" => {
                    let (_, wavelets) = build_wavelets_from(&build)?;
                    let c = wavelets.analyze(&g)?;
                    io::NormReport::new(
                        "carleson",
                        carleson_norm(&wavelets.splines.system, &c)?,
                        serde_json::json!({}),
                        serde_json::json!({"delta": build.delta}),
                    )
                }
                "h1" => {
                    let (_, wavelets) = build_wavelets_from(&build)?;
                    let r = wavelet_h1_norms(&wavelets, &g)?;
                    io::NormReport::new(
                        "h1",
                        r.norm_iv,
                        serde_json::json!({
                            "norm_iii": r.norm_iii,
                            "norm_iv": r.norm_iv,
                            "norm_v": r.norm_v,
                            "not_mean_zero": r.not_mean_zero
                        }),
                        serde_json::json!({"delta": build.delta}),
                    )
                }
                "maximal" => {
                    let m = grand_maximal(&space, &g, 0.5, 0.5, &RadiusGrid::Critical)?;
                    io::NormReport::new(
                        "maximal_l1",
                        lp_norm(&space, &m, 1.0)?,
                        serde_json::json!({}),
                        serde_json::json!({"beta": 0.5, "gamma": 0.5, "grid": "critical"}),
                    )
                }
                other if other.starts_with("lp:") => {
                    let p: f64 = other[3..].parse().map_err(|_| {
                        CoreError::InvalidArgument(format!("bad lp exponent in `{other}`"))
                    })?;
                    io::NormReport::new(
                        other,
                        lp_norm(&space, &g, p)?,
                        serde_json::json!({}),
                        serde_json::json!({"p": p}),
                    )
                }
                other => {
                    return Err(CoreError::InvalidArgument(format!(
                        "unknown norm `{other}`"
                    )))
                }
            };
            match out {
                Some(path) => io::write_json(&path, &report)?,
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
            Ok(0)
        }
        Cmd::Decompose { build, f, g, out } => {
            let splines = build_splines_from(&build)?;
            let space = &splines.system.space;
            let ff = io::read_function_csv(space, &std::fs::read_to_string(&f)?)?;
            let gg = io::read_function_csv(space, &std::fs::read_to_string(&g)?)?;
            let r = paraproducts(&splines, &ff, &gg)?;
            #[derive(Serialize)]
            struct DecomposeJson {
                schema: &'static str,
                residual: f64,
                pi1: BTreeMap<String, f64>,
                pi2: BTreeMap<String, f64>,
                pi3: BTreeMap<String, f64>,
                coarse: BTreeMap<String, f64>,
            }
            let to_map = |f: &wavespace::space::PointFn| -> BTreeMap<String, f64> {
                (0..space.len())
                    .map(|i| (space.id(i).to_string(), f.value(i)))
                    .collect()
            };
            io::write_json(
                &out,
                &DecomposeJson {
                    schema: "paraproduct/v1",
                    residual: r.residual,
                    pi1: to_map(&r.pi1),
                    pi2: to_map(&r.pi2),
                    pi3: to_map(&r.pi3),
                    coarse: to_map(&r.coarse),
                },
            )?;
            Ok(0)
        }
        Cmd::Experiment { config, out } => {
            let cfg: ExperimentConfig = match config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => ExperimentConfig::default(),
            };
            let report = boundedness_experiment(&cfg)?;
            io::write_json(&out.join("experiment.json"), &report)?;
            io::write_atomic(
                &out.join("experiment.csv"),
                records_to_csv(&report).as_bytes(),
            )?;
            write_meta(&out, &argv)?;
            Ok(0)
        }
        Cmd::Report { dir, out } => {
            let mut runs: BTreeMap<String, serde_json::Value> = BTreeMap::new();
            if dir.is_dir() {
                let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| {
                        p.extension().map_or(false, |e| e == "json")
                            && p.file_name().map_or(true, |n| n != "run_meta.json")
                    })
                    .collect();
                entries.sort();
                for path in entries {
                    let name = path
                        .file_name()
                        .map(|n| n.to_string_lossy().to_string())
                        .unwrap_or_default();
                    let value: serde_json::Value =
                        serde_json::from_str(&std::fs::read_to_string(&path)?)?;
                    runs.insert(name, value);
                }
            }
            let warning = if runs.is_empty() {
                Some("no run files found".to_string())
            } else {
                None
            };
            // ratio-vs-size plot rows from any experiment reports present
            let mut plot = String::from("space,points,quantile,r1,r2,r3\n");
            for value in runs.values() {
                if value.get("schema").and_then(|s| s.as_str()) == Some("experiment-report/v1") {
                    if let Some(summaries) = value.get("summaries").and_then(|s| s.as_array()) {
                        for s in summaries {
                            for q in ["max", "p50", "p95"] {
                                plot.push_str(&format!(
                                    "{},{},{},{},{},{}\n",
                                    s["space"].as_str().unwrap_or("?"),
                                    s["points"],
                                    q,
                                    s["r1"][q],
                                    s["r2"][q],
                                    s["r3"][q],
                                ));
                            }
                        }
                    }
                }
            }
            #[derive(Serialize)]
            struct Consolidated {
                schema: &'static str,
                warning: Option<String>,
                runs: BTreeMap<String, serde_json::Value>,
            }
            io::write_json(
                &out.join("consolidated.json"),
                &Consolidated {
                    schema: "consolidated/v1",
                    warning: warning.clone(),
                    runs,
                },
            )?;
            io::write_atomic(&out.join("ratios_vs_n.csv"), plot.as_bytes())?;
            if let Some(w) = warning {
                eprintln!(
                    "{}",
                    serde_json::to_string(&ErrorJson {
                        schema: "error/v1",
                        code: 0,
                        message: w,
                    })?
                );
            }
            Ok(0)
        }
    }
}

#[derive(Serialize)]
struct CheckRow {
    name: String,
    pass: bool,
    value: f64,
    detail: String,
}

fn row(name: &str, pass: bool, value: f64, detail: String) -> CheckRow {
    CheckRow {
        name: name.to_string(),
        pass,
        value,
        detail,
    }
}

/// The `check` suite: hard invariants of every built module plus seeded
/// random decomposition probes.
fn run_check(
    build: &BuildArgs,
    probes: usize,
    tols: &Tolerances,
) -> Result<Vec<CheckRow>, CoreError> {
    use rand::{Rng, SeedableRng};
    let mut rows = Vec::new();

    let splines = build_splines_from(build)?;
    let system = Arc::clone(&splines.system);
    let space = &system.space;

    let doubling = doubling_report(space, None);
    rows.push(row(
        "doubling-measured",
        doubling.c_hat >= 1.0,
        doubling.c_hat,
        format!(
            "witness {} r={}",
            doubling.witness_point, doubling.witness_radius
        ),
    ));

    match verify_cubes(&system) {
        Ok(geom) => rows.push(row(
            "dyadic-geometry",
            true,
            geom.inner_containment_c,
            format!(
                "child ratio {:.3}, outer ratio {:.3}, cover gap {:.3}",
                geom.max_child_distance_ratio,
                geom.max_outer_radius_ratio,
                geom.max_cover_gap_ratio
            ),
        )),
        Err(e) => rows.push(row("dyadic-geometry", false, f64::NAN, e.to_string())),
    }

    match spline_checks(&splines) {
        Ok(rep) => rows.push(row(
            "spline-exactness",
            rep.partition_exact && rep.interpolation_exact,
            rep.max_support_ratio,
            format!(
                "holder eta {:.3}, mass defect {:.1e}",
                rep.holder_eta, rep.mass_defect
            ),
        )),
        Err(e) => rows.push(row("spline-exactness", false, f64::NAN, e.to_string())),
    }

    if !splines.mode.is_haar() {
        return Ok(rows);
    }

    let wavelets = Arc::new(build_wavelets(Arc::clone(&splines))?);
    match wavelet_checks(&wavelets, None) {
        Ok(rep) => {
            rows.push(row(
                "wavelet-orthonormality",
                rep.orthonormality_max_dev <= tols.ortho,
                rep.orthonormality_max_dev,
                format!("{} wavelets + {} coarse", rep.count, rep.coarse_count),
            ));
            rows.push(row(
                "wavelet-moments",
                rep.moment_max_abs <= tols.moment,
                rep.moment_max_abs,
                String::new(),
            ));
            rows.push(row(
                "wavelet-span",
                rep.span_max_dev <= tols.ortho,
                rep.span_max_dev,
                String::new(),
            ));
        }
        Err(e) => rows.push(row("wavelet-checks", false, f64::NAN, e.to_string())),
    }

    // seeded random probes: Parseval, telescoping, decomposition
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(build.seed);
    let n = space.len();
    let mut worst_parseval = 0.0f64;
    let mut worst_telescope = 0.0f64;
    let mut worst_decomp = 0.0f64;
    for _ in 0..probes.max(1) {
        let f = space.point_fn((0..n).map(|_| rng.random_range(-2.0..2.0)).collect())?;
        let g = space.point_fn((0..n).map(|_| rng.random_range(-2.0..2.0)).collect())?;
        let c = wavelets.analyze(&f)?;
        let n2 = space.inner(&f, &f)?;
        worst_parseval = worst_parseval.max((n2 - c.sum_squares()).abs() / n2.max(1e-30));
        worst_telescope = worst_telescope
            .max(splines.telescope_residual(&f, splines.k_min())? / f.linf().max(1e-30));
        let r = paraproducts(&splines, &f, &g)?;
        worst_decomp = worst_decomp.max(r.residual / (f.linf() * g.linf()).max(1e-30));
    }
    rows.push(row(
        "parseval",
        worst_parseval <= tols.ortho,
        worst_parseval,
        String::new(),
    ));
    rows.push(row(
        "telescoping",
        worst_telescope <= tols.decomp,
        worst_telescope,
        String::new(),
    ));
    rows.push(row(
        "decomposition",
        worst_decomp <= tols.decomp,
        worst_decomp,
        String::new(),
    ));

    // atom identities: validity and Pi_2(a, 1) = a with a vanishing coarse
    // term
    let mut worst_atom = 0.0f64;
    let mut atoms_valid = true;
    let one = space.constant_fn(1.0);
    for s in 0..5u64 {
        let atom = wavespace::experiment::sample_atom(space, build.seed.wrapping_add(s))?;
        let v = validate_atom(space, &atom)?;
        atoms_valid &= v.pass;
        let r = paraproducts(&splines, &atom.function, &one)?;
        worst_atom = worst_atom.max(r.pi2.sub(&atom.function).linf());
        worst_atom = worst_atom.max(r.coarse.linf());
    }
    rows.push(row("atom-validity", atoms_valid, 0.0, String::new()));
    rows.push(row(
        "atom-times-one",
        worst_atom <= 1e-12,
        worst_atom,
        String::new(),
    ));

    Ok(rows)
}
