//! Built-in toy problems, the parameter sweep and the robustness probe.
//!
//! Red points carry label 0 and black points label 1 throughout.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist::{empirical_joint, sample, ClassConditional, Dataset, HybridMeasure, LabeledJoint, UniformPiece};
use crate::error::{Error, Result};
use crate::ibcost::{evaluate, CostReport, CostSpec, DecisionRule, Variant};
use crate::net::{ActivationKind, LayerParams, Network, NoiseSpec};
use crate::train::{kink_init_network, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub joint: LabeledJoint,
    /// Input coordinate the scenario's encoders read.
    pub coordinate: usize,
    pub doc: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig1Kind {
    Discrete,
    Dataset,
    Continuous,
}

impl FromStr for Fig1Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(Self::Discrete),
            "dataset" => Ok(Self::Dataset),
            "continuous" => Ok(Self::Continuous),
            _ => Err(Error::InvalidParameter(format!("unknown scenario kind `{s}`"))),
        }
    }
}

impl fmt::Display for Fig1Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Discrete => "discrete",
            Self::Dataset => "dataset",
            Self::Continuous => "continuous",
        })
    }
}

const FIG1_DATASET_RED: [f64; 10] = [0.1, 0.15, 0.2, 0.5, 1.7, 1.8, 1.85, 1.9, 2.2, 2.3];
const FIG1_DATASET_BLACK: [f64; 8] = [3.0, 3.1, 3.15, 3.3, 4.2, 4.3, 4.35, 4.4];

fn class(label: u32, prior: f64, conditional: HybridMeasure) -> ClassConditional {
    ClassConditional {
        label,
        prior,
        conditional,
    }
}

fn boxes(parts: &[(Vec<(f64, f64)>, f64)]) -> HybridMeasure {
    HybridMeasure::new(
        vec![],
        parts
            .iter()
            .map(|(bounds, mass)| UniformPiece {
                bounds: bounds.clone(),
                mass: *mass,
            })
            .collect(),
    )
    .expect("built-in boxes are valid")
}

/// One-dimensional problems on [0, 5]: four weighted points, an 18-point
/// dataset, or four intervals carrying the same masses as the points.
pub fn fig1_scenario(kind: Fig1Kind) -> Scenario {
    let joint = match kind {
        Fig1Kind::Discrete => {
            let pts = |xs: &[(f64, f64)]| {
                HybridMeasure::new(
                    xs.iter()
                        .map(|&(x, m)| crate::dist::PointMass {
                            location: vec![x],
                            mass: m,
                        })
                        .collect(),
                    vec![],
                )
                .expect("built-in points are valid")
            };
            LabeledJoint::new(vec![
                class(0, 0.6, pts(&[(0.3, 0.2 / 0.6), (1.7, 0.4 / 0.6)])),
                class(1, 0.4, pts(&[(3.1, 0.75), (4.5, 0.25)])),
            ])
        }
        Fig1Kind::Dataset => {
            let samples = FIG1_DATASET_RED
                .iter()
                .map(|&x| (vec![x], 0))
                .chain(FIG1_DATASET_BLACK.iter().map(|&x| (vec![x], 1)))
                .collect();
            Ok(empirical_joint(&Dataset::new(samples).expect("built-in dataset is valid")))
        }
        Fig1Kind::Continuous => LabeledJoint::new(vec![
            class(
                0,
                0.6,
                boxes(&[(vec![(0.0, 1.0)], 0.2 / 0.6), (vec![(1.5, 2.5)], 0.4 / 0.6)]),
            ),
            class(1, 0.4, boxes(&[(vec![(3.0, 3.5)], 0.75), (vec![(4.0, 4.75)], 0.25)])),
        ]),
    }
    .expect("built-in joint is valid");
    let doc = match kind {
        Fig1Kind::Discrete => "points 0.3, 1.7 (red) and 3.1, 4.5 (black) with masses 0.2, 0.4, 0.3, 0.1",
        Fig1Kind::Dataset => "18 equally weighted points, 10 red and 8 black",
        Fig1Kind::Continuous => "uniform on [0,1], [1.5,2.5] (red) and [3,3.5], [4,4.75] (black) with masses 0.2, 0.4, 0.3, 0.1",
    };
    Scenario {
        name: format!("fig1-{kind}"),
        joint,
        coordinate: 0,
        doc: doc.to_string(),
    }
}

/// Two ReLU units and a linear readout computing clip(x - a, 0, b).
pub fn fig1_network(a: f64, b: f64) -> Result<Network> {
    ramp_network(a, b, 1, 0)
}

/// clip(x[coord] - a, 0, b) on `input_dim` inputs.
pub fn ramp_network(a: f64, b: f64, input_dim: usize, coord: usize) -> Result<Network> {
    if !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("ramp needs finite a and b > 0, got a={a}, b={b}")));
    }
    if coord >= input_dim {
        return Err(Error::InvalidParameter(format!("coordinate {coord} out of range")));
    }
    let mut weights = vec![vec![0.0, 0.0]; input_dim];
    weights[coord] = vec![1.0, 1.0];
    Network::new(vec![
        LayerParams::new(weights, vec![-a, -a - b], ActivationKind::Relu, NoiseSpec::None)?,
        LayerParams::new(vec![vec![1.0], vec![-1.0]], vec![0.0], ActivationKind::Identity, NoiseSpec::None)?,
    ])
}

/// Continuous piecewise-linear interpolation of `knots` (strictly increasing in x)
/// along input coordinate `coord`, constant beyond the outer knots.
pub fn knot_network(knots: &[(f64, f64)], input_dim: usize, coord: usize) -> Result<Network> {
    if knots.len() < 2 || knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidParameter("need at least two knots with increasing x".into()));
    }
    if coord >= input_dim {
        return Err(Error::InvalidParameter(format!("coordinate {coord} out of range")));
    }
    let k = knots.len();
    let slope = |i: usize| -> f64 {
        // Slope right of knot i; zero outside the knot range.
        if i + 1 >= k {
            0.0
        } else {
            (knots[i + 1].1 - knots[i].1) / (knots[i + 1].0 - knots[i].0)
        }
    };
    let mut weights = vec![vec![0.0; k]; input_dim];
    weights[coord] = vec![1.0; k];
    let biases: Vec<f64> = knots.iter().map(|&(x, _)| -x).collect();
    let out: Vec<Vec<f64>> = (0..k)
        .map(|i| vec![slope(i) - if i == 0 { 0.0 } else { slope(i - 1) }])
        .collect();
    Network::new(vec![
        LayerParams::new(weights, biases, ActivationKind::Relu, NoiseSpec::None)?,
        LayerParams::new(out, vec![knots[0].1], ActivationKind::Identity, NoiseSpec::None)?,
    ])
}

pub const FIG2_BANDS: [(f64, f64); 4] = [(1.0, 1.9), (2.5, 3.6), (4.2, 4.8), (5.9, 7.1)];

pub const FIG2_ENCODERS: [&str; 6] = ["f1_disc", "f2_disc", "f3_disc", "f1_cont", "f2_cont", "f3_cont"];

fn fig2_knots(name: &str) -> Option<Vec<(f64, f64)>> {
    Some(match name {
        // Red bands to 0.2 and 0.4, black bands to 0.6 and 0.8.
        "f1_disc" => vec![(1.0, 0.2), (1.9, 0.2), (2.5, 0.6), (3.6, 0.6), (4.2, 0.4), (4.8, 0.4), (5.9, 0.8), (7.1, 0.8)],
        // Bands in order to 0.2, 0.4, 0.6, 0.8.
        "f2_disc" => vec![(1.0, 0.2), (1.9, 0.2), (2.5, 0.4), (3.6, 0.4), (4.2, 0.6), (4.8, 0.6), (5.9, 0.8), (7.1, 0.8)],
        // f1_disc on the bands with ramps of width 0.01 just outside each band.
        "f3_disc" => vec![
            (0.99, 0.8),
            (1.0, 0.2),
            (1.9, 0.2),
            (1.91, 0.8),
            (2.49, 0.2),
            (2.5, 0.6),
            (3.6, 0.6),
            (3.61, 0.2),
            (4.19, 0.8),
            (4.2, 0.4),
            (4.8, 0.4),
            (4.81, 0.8),
            (5.89, 0.2),
            (5.9, 0.8),
            (7.1, 0.8),
            (7.11, 0.2),
        ],
        // Red bands onto [0,1/4] and [1/4,1/2], black onto [1/2,3/4] and [3/4,1].
        "f1_cont" => vec![(1.0, 0.0), (1.9, 0.25), (2.5, 0.5), (3.6, 0.75), (4.2, 0.25), (4.8, 0.5), (5.9, 0.75), (7.1, 1.0)],
        // Bands in order onto consecutive quarters.
        "f2_cont" => vec![(1.0, 0.0), (1.9, 0.25), (2.5, 0.25), (3.6, 0.5), (4.2, 0.5), (4.8, 0.75), (5.9, 0.75), (7.1, 1.0)],
        // Red into [0,1/4], black into [3/4,1], joined by steep ramps.
        "f3_cont" => vec![
            (1.0, 0.0),
            (1.9, 0.125),
            (1.91, 0.75),
            (2.5, 0.75),
            (3.6, 0.875),
            (3.61, 0.125),
            (4.2, 0.125),
            (4.8, 0.25),
            (4.81, 0.875),
            (5.9, 0.875),
            (7.1, 1.0),
        ],
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2 {
    pub scenario: Scenario,
    pub encoders: Vec<(String, Network)>,
}

impl Fig2 {
    pub fn encoder(&self, name: &str) -> Result<&Network> {
        self.encoders
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, net)| net)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown encoder `{name}`")))
    }
}

/// Four bands along x1 with x2 uniform on [0, 2]; bands alternate red and
/// black and each carries probability 1/4.
pub fn fig2_scenario() -> Fig2 {
    let band = |i: usize| (vec![FIG2_BANDS[i], (0.0, 2.0)], 0.5);
    let joint = LabeledJoint::new(vec![
        class(0, 0.5, boxes(&[band(0), band(2)])),
        class(1, 0.5, boxes(&[band(1), band(3)])),
    ])
    .expect("built-in joint is valid");
    let encoders = FIG2_ENCODERS
        .iter()
        .map(|&name| {
            let knots = fig2_knots(name).expect("listed encoder");
            (name.to_string(), knot_network(&knots, 2, 0).expect("built-in knots are valid"))
        })
        .collect();
    Fig2 {
        scenario: Scenario {
            name: "fig2".into(),
            joint,
            coordinate: 0,
            doc: "bands [1,1.9], [4.2,4.8] red and [2.5,3.6], [5.9,7.1] black along x1, x2 uniform on [0,2]".into(),
        },
        encoders,
    }
}

/// Training problem on the Fig. 2 bands: the x1 projection of the joint, a
/// 1-4-1 network with a noisy leaky-ReLU bottleneck and sigmoid output, and
/// SGD on cross-entropy with decision-rule evaluations every 500 steps.
pub fn fig2_training(seed: u64) -> Result<(LabeledJoint, Network, TrainConfig)> {
    let joint = fig2_scenario().scenario.joint.project(&[0])?;
    let net = kink_init_network(1.0, 7.0, 4, 6.0, ActivationKind::LeakyRelu(0.1), NoiseSpec::Uniform { width: 0.05 }, seed)?;
    let mut cfg = TrainConfig::new(5000, FIG2_LEARNING_RATE, 32, seed);
    cfg.eval = Some((500, CostSpec::new(Variant::Decision(DecisionRule::threshold(0.5)), 2.0)?));
    Ok((joint, net, cfg))
}

const FIG2_LEARNING_RATE: f64 = 0.02;

pub const FIG3_EPS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3 {
    pub scenario: Scenario,
    /// relu(x1 + x2)
    pub f_i: Network,
    /// relu(x2)
    pub f_ii: Network,
    /// Input near both classes that the two encoders label differently.
    pub probe: Vec<f64>,
    pub probe_label: u32,
    pub threshold_i: f64,
    pub threshold_ii: f64,
    /// Alternative threshold for f_ii, midway between 1/4 and 1/2.
    pub threshold_ii_alt: f64,
}

/// Thin horizontal (label 0) and vertical (label 1) strips in the unit square.
pub fn fig3_scenario() -> Fig3 {
    let e = FIG3_EPS;
    let joint = LabeledJoint::new(vec![
        class(0, 0.5, boxes(&[(vec![(0.0, 0.5 - e), (0.0, e)], 1.0)])),
        class(1, 0.5, boxes(&[(vec![(0.0, e), (0.5, 1.0)], 1.0)])),
    ])
    .expect("built-in joint is valid");
    let single = |w: Vec<Vec<f64>>| {
        Network::new(vec![LayerParams::new(w, vec![0.0], ActivationKind::Relu, NoiseSpec::None).unwrap()]).unwrap()
    };
    Fig3 {
        scenario: Scenario {
            name: "fig3".into(),
            joint,
            coordinate: 1,
            doc: format!("label 0 uniform on [0,{}]x[0,{e}], label 1 uniform on [0,{e}]x[0.5,1]", 0.5 - e),
        },
        f_i: single(vec![vec![1.0], vec![1.0]]),
        f_ii: single(vec![vec![0.0], vec![1.0]]),
        probe: vec![0.05, 0.45],
        probe_label: 1,
        threshold_i: 0.5,
        threshold_ii: 0.25,
        threshold_ii_alt: 0.375,
    }
}

/// Scenario by CLI name: `fig1-discrete`, `fig1-dataset`, `fig1-continuous`, `fig2`, `fig3`.
pub fn by_name(name: &str) -> Result<Scenario> {
    match name {
        "fig2" => Ok(fig2_scenario().scenario),
        "fig3" => Ok(fig3_scenario().scenario),
        _ => name
            .strip_prefix("fig1-")
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario `{name}`")))?
            .parse()
            .map(fig1_scenario),
    }
}

pub const SCENARIO_NAMES: [&str; 5] = ["fig1-discrete", "fig1-dataset", "fig1-continuous", "fig2", "fig3"];

/// lo, lo + step, ..., hi with values rounded to 12 decimals.
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(Error::InvalidParameter(format!("bad grid {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<(f64, CostReport)>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "param,compression,precision,total";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (a, r) in &self.rows {
            s.push_str(&format!("{a:.6},{},{},{}\n", r.compression, r.precision, r.total));
        }
        s
    }
}

/// Evaluates `spec` for the network `family(a)` at every grid value of a.
/// Grid points run in parallel; rows come back in grid order.
pub fn sweep<F>(scenario: &Scenario, family: F, grid_spec: (f64, f64, f64), spec: &CostSpec, seed: Option<u64>) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<Network> + Sync,
{
    let params = grid(grid_spec.0, grid_spec.1, grid_spec.2)?;
    let rows = params
        .par_iter()
        .map(|&a| Ok((a, evaluate(&scenario.joint, &family(a)?, spec, seed)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    pub rate: f64,
    pub se: f64,
    pub n: usize,
}

/// Monte-Carlo misclassification rate of rule(encoder(X + noise)) against Y,
/// with the noise added to every input coordinate. The rule's output index is
/// read as a position in the sorted label list.
pub fn robustness_probe(
    scenario: &Scenario,
    encoder: &Network,
    rule: &DecisionRule,
    noise: NoiseSpec,
    n: usize,
    seed: u64,
) -> Result<ProbeResult> {
    if n < 1000 {
        return Err(Error::InvalidParameter("robustness probe needs n >= 1000".into()));
    }
    noise.validate()?;
    rule.validate(encoder.output_dim())?;
    let labels = scenario.joint.labels();
    let data = sample(&scenario.joint, n, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let enc = encoder.without_noise();
    let mut errors = 0usize;
    for (x, y) in data.samples() {
        let xn: Vec<f64> = x.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let k = rule.apply(&enc.output(&xn));
        if labels.get(k) != Some(y) {
            errors += 1;
        }
    }
    let rate = errors as f64 / n as f64;
    Ok(ProbeResult {
        rate,
        se: (rate * (1.0 - rate) / n as f64).sqrt(),
        n,
    })
}
