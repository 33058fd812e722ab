//! Command-line front end: sweeps, single evaluations, training, dimension
//! estimates, bound checks and robustness probes. All output is CSV.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use infobottle::dist::parse_scenario;
use infobottle::ibcost::{evaluate, random_bound_trial, BoundTrial, CostReport, CostSpec, DecisionRule, Quantizer, Variant};
use infobottle::info::{dimension_slopes, QuantizerSpec};
use infobottle::net::{as_scalar_pwl, parse_network, pushforward, to_network_text, ActivationKind, Network, NoiseSpec};
use infobottle::scenarios::{
    by_name, fig2_scenario, fig2_training, fig3_scenario, grid, ramp_network, robustness_probe, sweep, Scenario,
    SCENARIO_NAMES,
};
use infobottle::train::{kink_init_network, train_sgd};
use infobottle::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;

#[derive(Parser)]
#[command(name = "infobottle", version, about = "Information-bottleneck costs of small networks on toy problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a cost over the ramp family clip(x - a, 0, b) on a grid of a.
    #[command(after_help = "CSV columns: param,compression,precision,total (infinite values are written as `inf`)")]
    Sweep(SweepArgs),
    /// Evaluate one cost for one network.
    #[command(after_help = "CSV columns: variant,beta,compression,precision,total,comp_se,prec_se")]
    Eval(EvalArgs),
    /// Train a network with plain SGD on the cross-entropy surrogate.
    #[command(
        after_help = "CSV columns: step,loss,compression,precision,total (cost columns only on evaluation steps)"
    )]
    Train(TrainArgs),
    /// Quantized Shannon and collision entropy slopes H([V]_m) / log2 m.
    #[command(after_help = "CSV columns: m,shannon_slope,renyi2_slope")]
    Dims(DimsArgs),
    /// Check the variational precision bound chain on random finite joints.
    #[command(
        after_help = "CSV columns: trial,i_y_l,i_y_ytilde,h_y,cross_entropy_l,cross_entropy_ytilde,lower_bound,deterministic,violation"
    )]
    BoundCheck(BoundArgs),
    /// Monte-Carlo misclassification rate under input noise.
    #[command(after_help = "CSV columns: encoder,noise,rate,se,n")]
    Probe(ProbeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Args)]
struct Common {
    /// Built-in scenario (fig1-discrete, fig1-dataset, fig1-continuous, fig2, fig3) or a scenario file.
    #[arg(long, default_value = "fig1-discrete")]
    scenario: String,
    /// Input coordinate used by ramp networks and scalar projections of a scenario file.
    #[arg(long)]
    coord: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum CostKind {
    Raw,
    Decision,
    Probabilistic,
    Quantized,
    Noisy,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, value_enum, default_value = "raw")]
    cost: CostKind,
    /// Trade-off parameter; must exceed 1.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Decision rule: `threshold:L`, `threshold:L:C` or `argmax`.
    #[arg(long, default_value = "threshold:0.5")]
    rule: String,
    /// Quantizer of X: `identity`, `grid:M` or `threshold:L`.
    #[arg(long, default_value = "grid:4")]
    qx: String,
    /// Quantizer of L for the compression term.
    #[arg(long, default_value = "grid:4")]
    ql: String,
    /// Quantizer of L for the precision term; defaults to --ql.
    #[arg(long)]
    ql_prime: Option<String>,
    /// Noise for the compression term: `uniform:W` or `gaussian:S`.
    #[arg(long)]
    noise: Option<String>,
    /// Noise for the precision term; defaults to --noise.
    #[arg(long)]
    noise_prime: Option<String>,
    /// Samples for Monte-Carlo entropy estimates.
    #[arg(long, default_value_t = 10_000)]
    n_mc: usize,
    /// Use the representation after this many layers.
    #[arg(long)]
    layer: Option<usize>,
    /// Seed for sampling paths.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    cost: CostArgs,
    /// Grid of a as lo:hi:step.
    #[arg(long, default_value = "0:5:0.05")]
    grid: String,
    /// Ramp height.
    #[arg(long, default_value_t = 0.25)]
    b: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    cost: CostArgs,
    #[command(flatten)]
    net: NetChoice,
}

#[derive(Args)]
#[group(multiple = false)]
struct NetChoice {
    /// Network file.
    #[arg(long)]
    net: Option<PathBuf>,
    /// Built-in encoder: f1_disc, f2_disc, f3_disc, f1_cont, f2_cont, f3_cont (fig2) or f_i, f_ii (fig3).
    #[arg(long)]
    encoder: Option<String>,
    /// Ramp offset a of clip(x - a, 0, b).
    #[arg(long)]
    param: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: u64,
    /// Starting network file; a noisy 1-4-1 leaky-ReLU net otherwise.
    #[arg(long)]
    net: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    steps: usize,
    #[arg(long, default_value_t = 0.02)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 1)]
    noise_samples: usize,
    /// Evaluate the threshold-0.5 decision cost every this many steps.
    #[arg(long, default_value_t = 500)]
    eval_every: usize,
    /// Write the trained network here.
    #[arg(long)]
    net_out: Option<PathBuf>,
}

#[derive(Args)]
struct DimsArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated increasing resolutions.
    #[arg(long, default_value = "2,4,8,16,32,64,128,256,512,1024")]
    m: String,
    /// Measure the law of this scalar network's output instead of X.
    #[arg(long)]
    net: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderKind {
    Deterministic,
    Stochastic,
    /// Even trials deterministic, odd trials stochastic.
    Mixed,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "mixed")]
    decoder: DecoderKind,
    /// Tolerance for inequality checks.
    #[arg(long, default_value_t = 1e-9)]
    slack: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    net: NetChoice,
    #[arg(long)]
    seed: u64,
    /// Ramp height when --param is used.
    #[arg(long, default_value_t = 0.25)]
    b: f64,
    #[arg(long, default_value = "threshold:0.5")]
    rule: String,
    /// Input noise added to every coordinate: `uniform:W` or `gaussian:S`.
    #[arg(long)]
    noise: String,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
}

/// A bad flag value found after clap parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn load_scenario(c: &Common) -> Result<Scenario> {
    if SCENARIO_NAMES.contains(&c.scenario.as_str()) {
        let mut s = by_name(&c.scenario)?;
        if let Some(k) = c.coord {
            s.coordinate = k;
        }
        return Ok(s);
    }
    let path = PathBuf::from(&c.scenario);
    if !path.exists() {
        return Err(usage(format!(
            "unknown scenario `{}` (expected one of {} or an existing file)",
            c.scenario,
            SCENARIO_NAMES.join(", ")
        )));
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let joint = parse_scenario(&text).with_context(|| format!("parsing {}", path.display()))?;
    let coordinate = c.coord.unwrap_or(0);
    if coordinate >= joint.dim() {
        return Err(usage(format!("--coord {coordinate} exceeds the scenario dimension {}", joint.dim())));
    }
    Ok(Scenario {
        name: c.scenario.clone(),
        joint,
        coordinate,
        doc: String::new(),
    })
}

fn load_network(path: &PathBuf) -> Result<Network> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_network(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_noise(s: &str) -> Result<NoiseSpec> {
    let (family, value) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("noise `{s}` must look like uniform:W or gaussian:S")))?;
    let v: f64 = value.parse().map_err(|_| usage(format!("invalid noise parameter `{value}`")))?;
    let noise = match family {
        "uniform" => NoiseSpec::Uniform { width: v },
        "gaussian" => NoiseSpec::Gaussian { std: v },
        _ => return Err(usage(format!("unknown noise family `{family}`"))),
    };
    noise.validate().map_err(|e| usage(e.to_string()))?;
    Ok(noise)
}

fn parse_quantizer(s: &str) -> Result<Quantizer> {
    let bad = || usage(format!("quantizer `{s}` must be identity, grid:M or threshold:L"));
    if s == "identity" {
        return Ok(Quantizer::Identity);
    }
    let (kind, value) = s.split_once(':').ok_or_else(bad)?;
    match kind {
        "grid" => Ok(Quantizer::Grid(QuantizerSpec::new(value.parse().map_err(|_| bad())?).map_err(|e| usage(e.to_string()))?)),
        "threshold" => Ok(Quantizer::Threshold {
            level: value.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

fn parse_rule(s: &str) -> Result<DecisionRule> {
    s.parse().map_err(|e: Error| usage(e.to_string()))
}

fn cost_spec(a: &CostArgs) -> Result<CostSpec> {
    let variant = match a.cost {
        CostKind::Raw => Variant::Raw,
        CostKind::Decision => Variant::Decision(parse_rule(&a.rule)?),
        CostKind::Probabilistic => Variant::Probabilistic,
        CostKind::Quantized => Variant::Quantized {
            qx: parse_quantizer(&a.qx)?,
            ql: parse_quantizer(&a.ql)?,
            ql_prime: parse_quantizer(a.ql_prime.as_deref().unwrap_or(&a.ql))?,
        },
        CostKind::Noisy => {
            let eta = parse_noise(a.noise.as_deref().ok_or_else(|| usage("--cost noisy needs --noise"))?)?;
            let eta_prime = match &a.noise_prime {
                Some(s) => parse_noise(s)?,
                None => eta,
            };
            Variant::Noisy {
                eta,
                eta_prime,
                n_mc: a.n_mc,
            }
        }
    };
    let spec = CostSpec::new(variant, a.beta).map_err(|e| usage(e.to_string()))?;
    Ok(match a.layer {
        Some(l) => spec.at_layer(l),
        None => spec,
    })
}

fn builtin_encoder(scenario: &Scenario, name: &str) -> Result<Network> {
    match scenario.name.as_str() {
        "fig2" => Ok(fig2_scenario().encoder(name).map_err(|e| usage(e.to_string()))?.clone()),
        "fig3" => {
            let f = fig3_scenario();
            match name {
                "f_i" => Ok(f.f_i),
                "f_ii" => Ok(f.f_ii),
                _ => Err(usage(format!("unknown fig3 encoder `{name}` (f_i, f_ii)"))),
            }
        }
        other => Err(usage(format!("scenario `{other}` has no built-in encoders"))),
    }
}

fn choose_network(scenario: &Scenario, n: &NetChoice, b: f64) -> Result<Network> {
    if let Some(path) = &n.net {
        load_network(path)
    } else if let Some(name) = &n.encoder {
        builtin_encoder(scenario, name)
    } else if let Some(a) = n.param {
        Ok(ramp_network(a, b, scenario.joint.dim(), scenario.coordinate)?)
    } else {
        Err(usage("one of --net, --encoder or --param is required"))
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn parse_grid(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("grid `{s}` must be lo:hi:step")))?;
    let [lo, hi, step] = parts[..] else {
        return Err(usage(format!("grid `{s}` must be lo:hi:step")));
    };
    grid(lo, hi, step).map_err(|e| usage(e.to_string()))?;
    Ok((lo, hi, step))
}

fn run_sweep(a: &SweepArgs) -> Result<()> {
    let scenario = load_scenario(&a.common)?;
    let spec = cost_spec(&a.cost)?;
    let g = parse_grid(&a.grid)?;
    if !(a.b > 0.0) {
        return Err(usage("--b must be positive"));
    }
    let (dim, coord) = (scenario.joint.dim(), scenario.coordinate);
    let result = sweep(&scenario, |p| ramp_network(p, a.b, dim, coord), g, &spec, a.cost.seed)?;
    write_output(&a.common.out, &result.to_csv())
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let scenario = load_scenario(&a.common)?;
    let spec = cost_spec(&a.cost)?;
    let net = choose_network(&scenario, &a.net, 0.25)?;
    let report = evaluate(&scenario.joint, &net, &spec, a.cost.seed)?;
    write_output(&a.common.out, &format!("{}\n{}\n", CostReport::CSV_HEADER, report.csv_row()))
}

fn run_train(a: &TrainArgs) -> Result<()> {
    let scenario = load_scenario(&a.common)?;
    let (joint, mut net, mut cfg) = if scenario.name == "fig2" {
        fig2_training(a.seed)?
    } else {
        let joint = scenario.joint.project(&[scenario.coordinate])?;
        let (lo, hi) = joint.marginal().support_bounds()[0];
        let net = kink_init_network(
            lo,
            hi,
            4,
            36.0 / (hi - lo).max(f64::EPSILON),
            ActivationKind::LeakyRelu(0.1),
            NoiseSpec::Uniform { width: 0.05 },
            a.seed,
        )?;
        let cfg = fig2_training(a.seed)?.2;
        (joint, net, cfg)
    };
    if let Some(path) = &a.net {
        net = load_network(path)?;
    }
    cfg.steps = a.steps;
    cfg.learning_rate = a.lr;
    cfg.batch_size = a.batch;
    cfg.noise_samples = a.noise_samples;
    cfg.seed = a.seed;
    if let Some((every, _)) = cfg.eval.as_mut() {
        *every = a.eval_every;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let (trained, trace) = train_sgd(&joint, &net, &cfg)?;
    if let Some(path) = &a.net_out {
        fs::write(path, to_network_text(&trained)).with_context(|| format!("writing {}", path.display()))?;
    }
    write_output(&a.common.out, &trace.to_csv())
}

fn run_dims(a: &DimsArgs) -> Result<()> {
    let scenario = load_scenario(&a.common)?;
    let ms: Vec<u32> = a
        .m
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("--m `{}` must be comma-separated integers", a.m)))?;
    let marginal = scenario.joint.marginal();
    let mu = match &a.net {
        Some(path) => {
            let net = load_network(path)?;
            let x = marginal.project(&[scenario.coordinate])?;
            let (lo, hi) = x.support_bounds()[0];
            pushforward(&as_scalar_pwl(&net, scenario.coordinate, (lo, hi))?, &x)?
        }
        None => marginal,
    };
    let rep = dimension_slopes(&mu, &ms).map_err(|e| match e {
        Error::InvalidParameter(m) => usage(m),
        e => e.into(),
    })?;
    let mut s = String::from("m,shannon_slope,renyi2_slope\n");
    for r in &rep.rows {
        s.push_str(&format!("{},{:.6},{:.6}\n", r.m, r.shannon_slope, r.renyi2_slope));
    }
    write_output(&a.common.out, &s)
}

fn run_bound(a: &BoundArgs) -> Result<()> {
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let trials: Vec<BoundTrial> = (0..a.trials)
        .map(|i| {
            let deterministic = match a.decoder {
                DecoderKind::Deterministic => true,
                DecoderKind::Stochastic => false,
                DecoderKind::Mixed => i % 2 == 0,
            };
            random_bound_trial(a.seed.wrapping_add(i as u64), deterministic)
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut s = String::from(BoundTrial::CSV_HEADER);
    s.push('\n');
    let mut violations = 0;
    for (i, t) in trials.iter().enumerate() {
        violations += usize::from(t.violation(a.slack));
        s.push_str(&t.csv_row(i));
        s.push('\n');
    }
    write_output(&a.out, &s)?;
    eprintln!("{} trials, {violations} violations", a.trials);
    Ok(())
}

fn run_probe(a: &ProbeArgs) -> Result<()> {
    let scenario = load_scenario(&a.common)?;
    let net = choose_network(&scenario, &a.net, a.b)?;
    let rule = parse_rule(&a.rule)?;
    let noise = parse_noise(&a.noise)?;
    if a.n < 1000 {
        return Err(usage("--n must be at least 1000"));
    }
    let r = robustness_probe(&scenario, &net, &rule, noise, a.n, a.seed)?;
    let label = a
        .net
        .encoder
        .clone()
        .or(a.net.param.map(|p| format!("ramp:{p}")))
        .unwrap_or_else(|| "file".into());
    write_output(
        &a.common.out,
        &format!("encoder,noise,rate,se,n\n{label},{},{:.6},{:.6},{}\n", a.noise, r.rate, r.se, r.n),
    )
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sweep(a) => run_sweep(a),
        Command::Eval(a) => run_eval(a),
        Command::Train(a) => run_train(a),
        Command::Dims(a) => run_dims(a),
        Command::BoundCheck(a) => run_bound(a),
        Command::Probe(a) => run_probe(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return EXIT_USAGE;
    }
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Parse { .. }) => EXIT_PARSE,
        Some(Error::MissingSeed) => EXIT_USAGE,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_and_quantizer_forms() {
        assert_eq!(parse_noise("uniform:0.2").unwrap(), NoiseSpec::Uniform { width: 0.2 });
        assert_eq!(parse_noise("gaussian:0.05").unwrap(), NoiseSpec::Gaussian { std: 0.05 });
        assert!(parse_noise("uniform").is_err());
        assert!(parse_noise("uniform:-1").is_err());
        assert_eq!(parse_quantizer("identity").unwrap(), Quantizer::Identity);
        assert!(matches!(parse_quantizer("grid:4").unwrap(), Quantizer::Grid(_)));
        assert_eq!(parse_quantizer("threshold:0.5").unwrap(), Quantizer::Threshold { level: 0.5 });
        assert!(parse_quantizer("grid:x").is_err());
    }

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:5:0.05").unwrap(), (0.0, 5.0, 0.05));
        assert!(parse_grid("0:5").is_err());
        assert!(parse_grid("5:0:1").is_err());
    }

    #[test]
    fn usage_errors_map_to_two() {
        assert_eq!(exit_code(&usage("x")), EXIT_USAGE);
        let parse: anyhow::Error = Error::Parse {
            line: 3,
            message: "bad".into(),
        }
        .into();
        assert_eq!(exit_code(&parse.context("parsing f")), EXIT_PARSE);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 1);
    }
}
