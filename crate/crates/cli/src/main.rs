//! `spt-mbqc`: build resource tensors, calibrate them, compile and run gates,
//! decide gate-group reachability and sweep error/cost tables.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use spt_mbqc::cohomology::projective_irrep;
use spt_mbqc::lie::{
    canonical_labels, fill_grid, fill_grid_scheduled, generator_set_from_labels, grid_init, reachability_report,
};
use spt_mbqc::mbqc::{
    calibrate_nu, compile_rotation, error_scan, operational_nu, program_error, scan_to_csv,
};
use spt_mbqc::mps::{
    aklt_logical_ops, aklt_tensor, full_correlation, random_primitive_junk, spt_tensor, symmetry_check,
    MPSTensor,
};
use spt_mbqc::serialize::Header;
use spt_mbqc::{Error, Execution};

use config::{parse_characters, Preset, RunConfig};

const CHARACTER_ORDER: &str = "characters are indexed in lexicographic order of their exponent vectors";

#[derive(Parser)]
#[command(name = "spt-mbqc", version, about = "MBQC on symmetry-protected matrix product states")]
struct Cli {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true, env = "SPT_MBQC_CONFIG")]
    config: Option<PathBuf>,
    /// Run inner loops on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct SymmetryArgs {
    /// `aklt` or `weyl-D`.
    #[arg(long)]
    preset: Option<String>,
    /// Cyclic factor orders, e.g. `2,2`.
    #[arg(long, value_delimiter = ',')]
    group: Option<Vec<u32>>,
    /// `weyl` or `trivial`.
    #[arg(long)]
    cocycle: Option<String>,
    /// `all`, `nontrivial`, or exponent vectors such as `1,0;0,1`.
    #[arg(long)]
    characters: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a resource tensor and write it as JSON.
    Build {
        #[command(flatten)]
        sym: SymmetryArgs,
        #[arg(long)]
        kappa: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Calibrate the nu matrix of a tensor, spectrally and operationally.
    ///
    /// CSV columns: i,j,re,im,modulus,phase,ratio,dead.
    Calibrate {
        tensor: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Steps of the operational estimator; 0 skips it.
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0.002)]
        amp: f64,
    },
    /// Compile a rotation exp(theta K(phi)/2) in the (i, j) direction and run it.
    Gate {
        tensor: PathBuf,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        j: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Decide which gate group the measurement directions generate.
    Closure {
        #[command(flatten)]
        sym: SymmetryArgs,
        /// Also close the generators of b-site blocks.
        #[arg(long)]
        block: Option<usize>,
        /// Run the grid directly on the canonical triple (0,0), (1,0), (0,r).
        #[arg(long)]
        canonical_r: Option<u32>,
        #[arg(long, value_enum, default_value_t = Strategy::Saturate)]
        strategy: Strategy,
    },
    /// Sweep rotation error over step counts and pump lengths.
    ///
    /// CSV columns: N,m,physical_angle,cost,error; `#` footer lines hold
    /// the fitted log-log slopes.
    Scan {
        tensor: PathBuf,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        j: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        m: Vec<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    /// Row-major saturation.
    Saturate,
    /// Row/column schedule with milestones.
    Schedule,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_numerical));
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::parse(&read(p)?)?,
        None => RunConfig::default(),
    };
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match cli.command {
        Command::Build { sym, kappa, seed, out } => {
            apply(&mut cfg, &sym);
            cfg.kappa = kappa.or(cfg.kappa);
            cfg.seed = seed.or(cfg.seed);
            let out = out.or(cfg.output.tensor.as_ref().map(PathBuf::from));
            build(&cfg, out.as_deref())
        }
        Command::Calibrate { tensor, csv, steps, amp } => calibrate(&cfg, &tensor, csv.as_deref(), steps, amp),
        Command::Gate { tensor, i, j, phi, theta, epsilon, out } => {
            let out = out.or(cfg.output.program.as_ref().map(PathBuf::from));
            gate(&cfg, &tensor, (i, j, phi, theta), epsilon, out.as_deref())
        }
        Command::Closure { sym, block, canonical_r, strategy } => {
            apply(&mut cfg, &sym);
            closure(&cfg, block, canonical_r, strategy)
        }
        Command::Scan { tensor, i, j, phi, theta, n, m, out } => {
            if n.is_empty() || m.is_empty() {
                return Err(Error::InvalidInput("scan needs non-empty --n and --m lists".into()).into());
            }
            let t = load_tensor(&tensor)?;
            let rows = error_scan(&t, i, j, phi, theta, &n, &m, exec)?;
            let body = scan_to_csv(&rows);
            let footer = format!("# config {} version {}\n", cfg.hash(), env!("CARGO_PKG_VERSION"));
            emit(out.as_deref(), &(body + &footer))
        }
    }
}

fn apply(cfg: &mut RunConfig, sym: &SymmetryArgs) {
    if sym.preset.is_some() {
        cfg.preset = sym.preset.clone();
    }
    if sym.group.is_some() {
        cfg.group = sym.group.clone();
    }
    if sym.cocycle.is_some() {
        cfg.cocycle = sym.cocycle.clone();
        cfg.cocycle_table = None;
    }
    if let Some(c) = &sym.characters {
        cfg.characters = Some(parse_characters(c));
    }
}

fn read(p: &Path) -> anyhow::Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn load_tensor(p: &Path) -> anyhow::Result<MPSTensor> {
    Ok(MPSTensor::from_json(&read(p)?).with_context(|| format!("parsing {}", p.display()))?)
}

fn file_hash(p: &Path) -> anyhow::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(p)?)))
}

fn emit(out: Option<&Path>, s: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, s).with_context(|| format!("writing {}", p.display())),
        None => {
            let _ = std::io::stdout().write_all(s.as_bytes());
            Ok(())
        }
    }
}

fn report(kind: &str, cfg: &RunConfig, mut body: Value) -> Value {
    let obj = body.as_object_mut().expect("report body is an object");
    obj.insert("header".into(), serde_json::to_value(Header::new(kind)).expect("header"));
    obj.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    obj.insert("config_hash".into(), json!(cfg.hash()));
    body
}

fn print_json(v: &Value) {
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn build(cfg: &RunConfig, out: Option<&Path>) -> anyhow::Result<()> {
    let group = cfg.group()?;
    let omega = cfg.cocycle(&group)?;
    let irrep = projective_irrep(&group, &omega)?;
    let tensor = match cfg.preset()? {
        Some(Preset::Aklt) if cfg.group.is_none() => {
            if cfg.kappa() == 1 {
                aklt_tensor()
            } else {
                spt_tensor(&aklt_logical_ops(), &random_primitive_junk(3, cfg.kappa(), cfg.seed())?)?
            }
        }
        _ => {
            let chars = cfg.characters(&group)?;
            let ops = spt_mbqc::cohomology::logical_ops_for_rep(&irrep, &chars)?;
            spt_tensor(&ops, &random_primitive_junk(chars.len(), cfg.kappa(), cfg.seed())?)?
        }
    };
    let violation = symmetry_check(&tensor, &irrep)?;
    let (lambda1, xi) = full_correlation(&tensor);
    let json = tensor.to_json()?;
    match out {
        Some(p) => fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?,
        None => {
            let _ = writeln!(std::io::stdout(), "{json}");
        }
    }
    let summary = report(
        "build-report",
        cfg,
        json!({
            "group": group.orders(),
            "characters": tensor.characters().map(|c| c.iter().map(|c| c.exponents.clone()).collect::<Vec<_>>()),
            "character_order": CHARACTER_ORDER,
            "phys_dim": tensor.phys_dim(),
            "logical_dim": tensor.logical_dim(),
            "junk_dim": tensor.junk_dim(),
            "symmetry_violation": violation,
            "lambda1": lambda1,
            "correlation_length": xi,
        }),
    );
    if out.is_some() {
        print_json(&summary);
    } else {
        eprintln!("{}", serde_json::to_string_pretty(&summary)?);
    }
    Ok(())
}

fn calibrate(cfg: &RunConfig, path: &Path, csv: Option<&Path>, steps: usize, amp: f64) -> anyhow::Result<()> {
    let t = load_tensor(path)?;
    let nu = calibrate_nu(&t)?;
    if let Some(p) = csv {
        fs::write(p, nu.to_csv())?;
    }
    let d = nu.dim();
    let mut operational = Vec::new();
    if steps > 0 {
        for i in 0..d {
            for j in i + 1..d {
                if nu.is_dead(i, j) {
                    continue;
                }
                let o = operational_nu(&t, i, j, steps, amp)?;
                operational.push(json!({
                    "i": i, "j": j,
                    "estimate": [o.estimate.re, o.estimate.im],
                    "spectral_ratio": o.spectral_ratio,
                    "relative_error": o.relative_error,
                }));
            }
        }
    }
    let matrix: Vec<Vec<[f64; 2]>> =
        (0..d).map(|i| (0..d).map(|j| [nu.nu[(i, j)].re, nu.nu[(i, j)].im]).collect()).collect();
    let ratios: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| nu.ratio(i, j)).collect()).collect();
    print_json(&report(
        "calibration",
        cfg,
        json!({
            "tensor_sha256": file_hash(path)?,
            "character_order": CHARACTER_ORDER,
            "nu": matrix,
            "ratio": ratios,
            "hermiticity_deviation": nu.hermiticity_deviation(),
            "dead_pairs": nu.dead_pairs(),
            "operational": operational,
        }),
    ));
    Ok(())
}

fn gate(
    cfg: &RunConfig,
    path: &Path,
    (i, j, phi, theta): (usize, usize, f64, f64),
    epsilon: f64,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let t = load_tensor(path)?;
    let nu = calibrate_nu(&t)?;
    let p = compile_rotation(&t, &nu, i, j, phi, theta, epsilon)?;
    let error = program_error(&p, &t)?;
    if let Some(o) = out {
        fs::write(o, p.to_json()?)?;
    }
    print_json(&report(
        "gate-report",
        cfg,
        json!({
            "tensor_sha256": file_hash(path)?,
            "target": p.target,
            "epsilon": epsilon,
            "n_steps": p.n_steps,
            "pump_length": p.pump_length,
            "cost": p.n_steps * (p.pump_length + 1),
            "physical_angle": p.physical_angle,
            "basis_phase": p.basis_phase,
            "error": error,
        }),
    ));
    Ok(())
}

fn closure(
    cfg: &RunConfig,
    block: Option<usize>,
    canonical_r: Option<u32>,
    strategy: Strategy,
) -> anyhow::Result<()> {
    let group = cfg.group()?;
    if let Some(r) = canonical_r {
        let d = match group.orders() {
            [a, b] if a == b => *a,
            o => bail!(Error::InvalidInput(format!("canonical grid needs Z_D x Z_D, got {o:?}"))),
        };
        return canonical_grid(cfg, d, r, strategy);
    }
    let omega = cfg.cocycle(&group)?;
    let chars = match (cfg.preset()?, &cfg.characters) {
        (Some(Preset::Aklt), None) if cfg.group.is_none() => {
            group.characters().into_iter().filter(|c| !c.is_trivial()).collect()
        }
        _ => cfg.characters(&group)?,
    };
    let rep = reachability_report(&group, &omega, &chars, block, cfg.closure_tol())?;
    for b in &rep.blocks {
        let grid = match b.grid_complete {
            Some(true) => "grid ok",
            Some(false) => "grid incomplete",
            None => "grid abstains",
        };
        let oracle = if b.contains_su { "oracle ok" } else { "oracle sub" };
        eprintln!("block {}: su({}), {grid}, {oracle}", b.prime_power, b.block_dim);
        if let Some(art) = &b.grid_art {
            eprintln!("{art}");
        }
    }
    let mut v = serde_json::to_value(&rep)?;
    v.as_object_mut().expect("object").remove("header");
    print_json(&report("reachability", cfg, v));
    Ok(())
}

fn canonical_grid(cfg: &RunConfig, d: u32, r: u32, strategy: Strategy) -> anyhow::Result<()> {
    let gs = generator_set_from_labels(d, &canonical_labels(d, r));
    let g0 = grid_init(&gs, r)?;
    let (complete, fin, milestones) = match strategy {
        Strategy::Saturate => {
            let (c, s) = fill_grid(&g0);
            (c, s, Vec::new())
        }
        Strategy::Schedule => fill_grid_scheduled(&g0),
    };
    eprintln!("initial\n{}", g0.art());
    for m in &milestones {
        eprintln!("{}\n{}", m.label, m.state.art());
    }
    eprintln!("final ({})\n{}", if complete { "complete" } else { "incomplete" }, fin.art());
    print_json(&report(
        "grid",
        cfg,
        json!({
            "d": d,
            "r": r,
            "complete": complete,
            "marked": fin.count(),
            "moves": fin.move_log().len(),
            "milestones": milestones.iter().map(|m| json!({"label": m.label, "marked": m.state.count()})).collect::<Vec<_>>(),
        }),
    ));
    Ok(())
}
