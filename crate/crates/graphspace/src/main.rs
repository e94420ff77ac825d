//! `graphspace` — reproducible experiments on countable graph space.
//!
//! One binary, subcommand style. Summary JSON (with an embedded run
//! manifest) goes to stdout; bulk data goes to files. Exit codes:
//! 0 success, 1 assertion-style disagreement, 2 usage error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use graphspace::dyadic::DyadicValue;
use graphspace::expectations::{
    change_of_variables, mc_expect, norm1_moments, psi_k_expect, Statistic, TransferFn,
};
use graphspace::graph::{BallKind, CylinderSet, GraphRepr};
use graphspace::harmonic::{
    gram_check, FiniteSupportMeasure, WalshSpectrum, wht_forward, wht_inverse,
};
use graphspace::manifest::RunManifest;
use graphspace::measures::{
    atom_mass_profile, ball_measure_haar, cylinder_measure, parse_rational, rational_report,
    sample, ProbabilityAssignment,
};
use graphspace::metrics::{DecaySequence, MultWeightSequence, WeightSequence};

#[derive(Parser)]
#[command(name = "graphspace", version, about = "measure theory and harmonic analysis on countable graph space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw seeded truncated samples from a product measure
    Sample(SampleArgs),
    /// Closed-form vs Monte Carlo expectation of a registry statistic
    Expect(ExpectArgs),
    /// Two-sided change-of-variables integral onto [0,1]
    Transfer(TransferArgs),
    /// Exact measure queries
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Fast Walsh-Hadamard transform of a value file
    Wht(WhtArgs),
    /// Bochner positive-definiteness check of a synthesized function
    PdCheck(PdCheckArgs),
}

#[derive(Args)]
struct ProbArgs {
    /// constant edge probability, e.g. "1/2" or "0.3"
    #[arg(long)]
    p: Option<String>,
    /// per-edge probabilities for the first indices, comma separated;
    /// later indices fall back to --default (or 1/2)
    #[arg(long)]
    table: Option<String>,
    #[arg(long)]
    default: Option<String>,
}

impl ProbArgs {
    fn build(&self) -> Result<ProbabilityAssignment, String> {
        match (&self.p, &self.table) {
            (Some(_), Some(_)) => Err("--p and --table are mutually exclusive".into()),
            (Some(p), None) => {
                ProbabilityAssignment::constant(parse_rational(p)?).map_err(|e| e.to_string())
            }
            (None, Some(t)) => {
                let entries = t
                    .split(',')
                    .map(parse_rational)
                    .collect::<Result<Vec<_>, _>>()?;
                let default = match &self.default {
                    Some(d) => parse_rational(d)?,
                    None => parse_rational("1/2")?,
                };
                ProbabilityAssignment::table(entries, default).map_err(|e| e.to_string())
            }
            (None, None) => Ok(ProbabilityAssignment::haar()),
        }
    }

    fn record(&self, mut m: RunManifest) -> RunManifest {
        if let Some(p) = &self.p {
            m = m.param("p", p);
        }
        if let Some(t) = &self.table {
            m = m.param("table", t);
        }
        if let Some(d) = &self.default {
            m = m.param("default", d);
        }
        m
    }
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    prob: ProbArgs,
    #[arg(long)]
    depth: u32,
    #[arg(long)]
    count: u64,
    #[arg(long)]
    seed: u64,
    /// output file for the binary sample frame
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ExpectArgs {
    /// statistic name: psi_k | norm1 | norminf | normx | heart2
    #[arg(long)]
    stat: String,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// weight family, e.g. "geometric:2"
    #[arg(long)]
    phi: Option<String>,
    #[command(flatten)]
    prob: ProbArgs,
    #[arg(long, default_value_t = 64)]
    depth: u32,
    #[arg(long, default_value_t = 200_000)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// closed | mc | both
    #[arg(long, default_value = "both")]
    mode: String,
}

#[derive(Args)]
struct TransferArgs {
    /// function name: identity | square | neg-floor-log2 | indicator:LO:HI | poly:c0,c1,...
    #[arg(long)]
    f: String,
    #[arg(long, default_value_t = 64)]
    depth: u32,
    #[arg(long, default_value_t = 200_000)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// require the exact cylinder-measure path (indicators only)
    #[arg(long)]
    exact: bool,
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Haar measure of a metric ball with dyadic radius
    Ball(BallArgs),
    /// Product measure of a cylinder set
    Cylinder(CylinderArgs),
    /// Point-mass profile pi_n of a product measure
    Atoms(AtomsArgs),
}

#[derive(Args)]
struct BallArgs {
    /// radius as a binary expansion "0.011" or a rational "3/8"
    #[arg(long)]
    radius: String,
    /// open | closed
    #[arg(long, default_value = "open")]
    kind: String,
}

#[derive(Args)]
struct CylinderArgs {
    /// forbidden edge indices, comma separated
    #[arg(long, value_delimiter = ',')]
    forbidden: Vec<u64>,
    /// required edge indices, comma separated
    #[arg(long, value_delimiter = ',')]
    required: Vec<u64>,
    #[command(flatten)]
    prob: ProbArgs,
}

#[derive(Args)]
struct AtomsArgs {
    #[command(flatten)]
    prob: ProbArgs,
    #[arg(long)]
    depth: u32,
}

#[derive(Args)]
struct WhtArgs {
    #[arg(long)]
    depth: u32,
    /// input file: 2^depth little-endian f64 values (or a spectrum file
    /// with --inverse)
    #[arg(long = "in", value_name = "FILE")]
    input: String,
    #[arg(long)]
    out: String,
    /// apply the inverse transform to a spectrum file
    #[arg(long)]
    inverse: bool,
}

#[derive(Args)]
struct PdCheckArgs {
    /// JSON file with {"support": [graphs], "weights": [floats]}
    #[arg(long)]
    measure: String,
    /// JSON file with an array of graphs to probe the Gram matrix at
    #[arg(long)]
    graphs: String,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn main() -> ExitCode {
    // GRAPHSPACE_THREADS caps the worker pool; results are independent of
    // it by the library determinism contract.
    if let Ok(threads) = std::env::var("GRAPHSPACE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(report: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Expect(args) => cmd_expect(args),
        Command::Transfer(args) => cmd_transfer(args),
        Command::Measure(cmd) => cmd_measure(cmd),
        Command::Wht(args) => cmd_wht(args),
        Command::PdCheck(args) => cmd_pd_check(args),
    }
}

fn cmd_sample(args: SampleArgs) -> Result<ExitCode, String> {
    let p = args.prob.build()?;
    let batch = sample(&p, args.depth, args.seed, args.count).map_err(|e| e.to_string())?;
    let mut manifest = RunManifest::new("sample")
        .param("depth", args.depth)
        .param("count", args.count)
        .seed(args.seed);
    manifest = args.prob.record(manifest);
    let mut ones = 0u64;
    for atom in &batch.atoms {
        ones += atom.count_ones() as u64;
    }
    let mut out_path = None;
    if let Some(path) = &args.out {
        std::fs::write(path, batch.to_frame()).map_err(|e| e.to_string())?;
        manifest = manifest.output(path);
        out_path = Some(path.clone());
    }
    emit(json!({
        "manifest": manifest,
        "count": args.count,
        "depth": args.depth,
        "total_edges_present": ones,
        "mean_edges_per_sample": ones as f64 / args.count.max(1) as f64,
        "out": out_path,
    }));
    Ok(ExitCode::SUCCESS)
}

fn parse_weight(spec: &str) -> Result<WeightSequence, String> {
    match spec.split_once(':') {
        Some(("geometric", a)) => {
            let a: f64 = a.parse().map_err(|_| "bad weight base")?;
            WeightSequence::geometric(a).map_err(|e| e.to_string())
        }
        _ => Err(format!("unknown weight family '{spec}'")),
    }
}

fn cmd_expect(args: ExpectArgs) -> Result<ExitCode, String> {
    let p = args.prob.build()?;
    let p_f64 = p.p_f64(1);
    let mut manifest = RunManifest::new("expect")
        .param("stat", &args.stat)
        .param("depth", args.depth)
        .param("count", args.count)
        .param("mode", &args.mode)
        .seed(args.seed);
    manifest = args.prob.record(manifest);

    let (stat, closed_form): (Statistic, Result<f64, String>) = match args.stat.as_str() {
        "psi_k" => {
            manifest = manifest.param("k", args.k);
            let cf = psi_k_expect(args.k, p_f64).map_err(|e| e.to_string());
            (Statistic::PsiK { k: args.k }, cf)
        }
        "norm1" => {
            let spec = args.phi.as_deref().unwrap_or("geometric:2");
            manifest = manifest.param("phi", spec);
            let phi = parse_weight(spec)?;
            let cf = Ok(norm1_moments(&phi, &p).mean);
            (Statistic::Norm1 { phi }, cf)
        }
        "norminf" => {
            let spec = args.phi.as_deref().unwrap_or("geometric:2");
            manifest = manifest.param("phi", spec);
            let zeta = match spec.split_once(':') {
                Some(("geometric", a)) => DecaySequence::geometric(
                    a.parse().map_err(|_| "bad weight base")?,
                )
                .map_err(|e| e.to_string())?,
                _ => return Err(format!("unknown weight family '{spec}'")),
            };
            let (v, _) =
                graphspace::expectations::norminf_expect(&zeta, |t| t, p_f64, 512, zeta.weight(1));
            (Statistic::NormInf { zeta }, Ok(v))
        }
        "normx" => {
            let spec = args.phi.as_deref().unwrap_or("one-plus-geometric:2:1");
            manifest = manifest.param("phi", spec);
            let parts: Vec<&str> = spec.split(':').collect();
            let phi = match parts.as_slice() {
                ["one-plus-geometric", a, c] => MultWeightSequence::one_plus_geometric(
                    a.parse().map_err(|_| "bad base")?,
                    c.parse().map_err(|_| "bad scale")?,
                )
                .map_err(|e| e.to_string())?,
                _ => return Err(format!("unknown weight family '{spec}'")),
            };
            let cf = graphspace::expectations::normx_expect(&phi, p_f64).value;
            (Statistic::NormXPow { phi }, Ok(cf))
        }
        "heart2" => {
            // E[heart2] = sum P(n) 2^-n; for constant p this is p.
            let mut cf = 0.0;
            for n in 1..=128u64 {
                cf += p.p_f64(n) * 2.0f64.powi(-(n as i32));
            }
            (Statistic::Heart2, Ok(cf))
        }
        other => return Err(format!("unknown statistic '{other}'")),
    };

    let closed_form = match closed_form {
        Ok(v) => v,
        Err(e) => return Err(e),
    };

    if args.mode == "closed" {
        emit(json!({ "manifest": manifest, "closed_form": closed_form }));
        return Ok(ExitCode::SUCCESS);
    }

    let est = mc_expect(|atom| stat.eval(atom), &p, args.depth, args.seed, args.count)
        .map_err(|e| e.to_string())?;
    let agree = est.agrees_4sigma(closed_form);
    emit(json!({
        "manifest": manifest,
        "closed_form": closed_form,
        "mc": { "mean": est.mean, "std_error": est.std_error,
                "count": est.count, "undefined": est.undefined },
        "agree_4sigma": agree,
    }));
    Ok(if agree || args.mode == "mc" {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn parse_transfer(spec: &str) -> Result<TransferFn, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["identity"] => Ok(TransferFn::Identity),
        ["square"] => Ok(TransferFn::Square),
        ["neg-floor-log2"] => Ok(TransferFn::NegFloorLog2),
        ["indicator", lo, hi] => Ok(TransferFn::Indicator {
            lo: lo.parse().map_err(|_| "bad indicator bound")?,
            hi: hi.parse().map_err(|_| "bad indicator bound")?,
        }),
        ["poly", coeffs] => Ok(TransferFn::Poly {
            coeffs: coeffs
                .split(',')
                .map(|c| c.parse().map_err(|_| "bad coefficient".to_string()))
                .collect::<Result<Vec<f64>, String>>()?,
        }),
        _ => Err(format!("unknown transfer function '{spec}'")),
    }
}

fn cmd_transfer(args: TransferArgs) -> Result<ExitCode, String> {
    let f = parse_transfer(&args.f)?;
    if args.exact && !matches!(f, TransferFn::Indicator { .. }) {
        return Err("--exact is only available for indicator functions".into());
    }
    let manifest = RunManifest::new("transfer")
        .param("f", &args.f)
        .param("depth", args.depth)
        .param("count", args.count)
        .param("exact", args.exact)
        .seed(args.seed);
    let report = change_of_variables(&f, args.depth, args.seed, args.count)
        .map_err(|e| e.to_string())?;
    let diff = (report.graph_side.mean - report.interval_side).abs();
    let agree = report.graph_side.agrees_4sigma(report.interval_side);
    let exact_ok = report.exact_equal;
    emit(json!({
        "manifest": manifest,
        "graph_side": { "mean": report.graph_side.mean,
                        "std_error": report.graph_side.std_error,
                        "nonfinite_excluded": report.nonfinite_hits },
        "interval_side": report.interval_side,
        "abs_difference": diff,
        "agree_4sigma": agree,
        "exact_graph_side": report.exact_graph_side,
        "exact_interval_side": report.exact_interval_side,
        "exact_equal": exact_ok,
    }));
    let failed = !agree || (args.exact && exact_ok != Some(true));
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn parse_radius(s: &str) -> Result<DyadicValue, String> {
    if s.starts_with("0.") || s.starts_with("1.") || s == "0" || s == "1" {
        DyadicValue::parse_binary(s).map_err(|e| e.to_string())
    } else {
        let r = parse_rational(s)?;
        DyadicValue::from_rational(&r).map_err(|e| e.to_string())
    }
}

fn cmd_measure(cmd: MeasureCmd) -> Result<ExitCode, String> {
    match cmd {
        MeasureCmd::Ball(args) => {
            let radius = parse_radius(&args.radius)?;
            let kind = match args.kind.as_str() {
                "open" => BallKind::Open,
                "closed" => BallKind::Closed,
                other => return Err(format!("unknown ball kind '{other}'")),
            };
            let manifest = RunManifest::new("measure ball")
                .param("radius", &args.radius)
                .param("kind", &args.kind);
            let m = ball_measure_haar(&GraphRepr::zero(), &radius, kind)
                .map_err(|e| e.to_string())?;
            let (exact, approx) = rational_report(&m);
            emit(json!({
                "manifest": manifest,
                "measure": { "exact": exact, "decimal": approx },
            }));
            Ok(ExitCode::SUCCESS)
        }
        MeasureCmd::Cylinder(args) => {
            let p = args.prob.build()?;
            let cyl = CylinderSet::new(args.forbidden.clone(), args.required.clone())
                .map_err(|e| e.to_string())?;
            let mut manifest = RunManifest::new("measure cylinder")
                .param("forbidden", format_indices(&args.forbidden))
                .param("required", format_indices(&args.required));
            manifest = args.prob.record(manifest);
            let m = cylinder_measure(&cyl, &p);
            let (exact, approx) = rational_report(&m);
            emit(json!({
                "manifest": manifest,
                "measure": { "exact": exact, "decimal": approx },
            }));
            Ok(ExitCode::SUCCESS)
        }
        MeasureCmd::Atoms(args) => {
            let p = args.prob.build()?;
            let mut manifest = RunManifest::new("measure atoms").param("depth", args.depth);
            manifest = args.prob.record(manifest);
            let (pis, prefix) = atom_mass_profile(&p, args.depth);
            let profile: Vec<serde_json::Value> = pis
                .iter()
                .map(|r| {
                    let (exact, approx) = rational_report(r);
                    json!({ "exact": exact, "decimal": approx })
                })
                .collect();
            let prefix: String = prefix.iter().map(|&b| if b { '1' } else { '0' }).collect();
            emit(json!({
                "manifest": manifest,
                "pi": profile,
                "max_atom_prefix": prefix,
            }));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn format_indices(v: &[u64]) -> String {
    v.iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_wht(args: WhtArgs) -> Result<ExitCode, String> {
    let manifest = RunManifest::new("wht")
        .param("depth", args.depth)
        .param("in", &args.input)
        .param("inverse", args.inverse)
        .output(&args.out);
    if args.inverse {
        let file = File::open(&args.input).map_err(|e| e.to_string())?;
        let spec = WalshSpectrum::read_from(BufReader::new(file)).map_err(|e| e.to_string())?;
        if spec.depth != args.depth {
            return Err(format!(
                "spectrum depth {} does not match --depth {}",
                spec.depth, args.depth
            ));
        }
        let values = wht_inverse(&spec).map_err(|e| e.to_string())?;
        let mut w = BufWriter::new(File::create(&args.out).map_err(|e| e.to_string())?);
        for v in &values {
            w.write_all(&v.to_le_bytes()).map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())?;
        emit(json!({ "manifest": manifest, "values": values.len() }));
    } else {
        let bytes = std::fs::read(&args.input).map_err(|e| e.to_string())?;
        let n = 1usize << args.depth;
        if bytes.len() != n * 8 {
            return Err(format!(
                "expected {} bytes ({} f64 values) in {}, found {}",
                n * 8,
                n,
                args.input,
                bytes.len()
            ));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let spec = wht_forward(&values, args.depth).map_err(|e| e.to_string())?;
        let file = File::create(&args.out).map_err(|e| e.to_string())?;
        spec.write_to(BufWriter::new(file)).map_err(|e| e.to_string())?;
        let nonzero = spec.coeffs.iter().filter(|c| c.abs() > 1e-15).count();
        emit(json!({ "manifest": manifest, "coefficients": spec.coeffs.len(),
                     "nonzero": nonzero }));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_pd_check(args: PdCheckArgs) -> Result<ExitCode, String> {
    let manifest = RunManifest::new("pd-check")
        .param("measure", &args.measure)
        .param("graphs", &args.graphs)
        .param("tol", args.tol);
    let measure_text = std::fs::read_to_string(&args.measure).map_err(|e| e.to_string())?;
    let raw: serde_json::Value = serde_json::from_str(&measure_text).map_err(|e| e.to_string())?;
    let support: Vec<GraphRepr> =
        serde_json::from_value(raw["support"].clone()).map_err(|e| e.to_string())?;
    let weights: Vec<f64> =
        serde_json::from_value(raw["weights"].clone()).map_err(|e| e.to_string())?;
    let mu = FiniteSupportMeasure::new(support, weights).map_err(|e| e.to_string())?;
    let graphs_text = std::fs::read_to_string(&args.graphs).map_err(|e| e.to_string())?;
    let points: Vec<GraphRepr> = serde_json::from_str(&graphs_text).map_err(|e| e.to_string())?;
    let f = mu.synthesize();
    let report = gram_check(&f, &points, args.tol);
    let f0 = f.eval(&GraphRepr::zero());
    emit(json!({
        "manifest": manifest,
        "size": report.size,
        "min_eigenvalue": report.min_eigenvalue,
        "psd": report.psd,
        "tolerance": report.tolerance,
        "f_at_zero": f0,
    }));
    Ok(if report.psd {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
