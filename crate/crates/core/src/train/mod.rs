//! Finite-difference diagnostics, Monte-Carlo cost estimates and plain SGD.
//!
//! The optimizer has no momentum, schedule or adaptive step; every default
//! hyperparameter here is an implementation choice.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist::{sample, Dataset, LabeledJoint};
use crate::error::{Error, Result};
use crate::ibcost::{
    check_beta, class_laws, class_mixtures, evaluate, mean_se, output_probabilities, CostReport, CostSpec, Variant,
};
use crate::info::{entropy_of, InfoValue};
use crate::net::{backward, flatten_grads, ActivationKind, LayerParams, Network, NoiseSpec};

/// Central differences of `cost` around `theta`, one parameter at a time.
pub fn finite_diff_grad<F>(cost: F, theta: &[f64], epsilon: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<InfoValue>,
{
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
    }
    let mut probe = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        probe[i] = theta[i] + epsilon;
        let up = cost(&probe)?.finite().ok_or(Error::InfiniteCost)?;
        probe[i] = theta[i] - epsilon;
        let down = cost(&probe)?.finite().ok_or(Error::InfiniteCost)?;
        probe[i] = theta[i];
        grad.push((up - down) / (2.0 * epsilon));
    }
    Ok(grad)
}

/// [`finite_diff_grad`] over the flattened parameters of `net`.
pub fn finite_diff_net_grad<F>(cost: F, net: &Network, epsilon: f64) -> Result<Vec<f64>>
where
    F: Fn(&Network) -> Result<InfoValue>,
{
    finite_diff_grad(|theta| cost(&net.with_params(theta)?), &net.params(), epsilon)
}

const INNER_DRAWS: usize = 32;

/// Per-sample compression and precision contributions; their means are the estimates.
struct McTerms {
    compression: Vec<f64>,
    precision: Vec<f64>,
}

fn noise_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d)
}

fn mc_terms(joint: &LabeledJoint, net: &Network, spec: &CostSpec, n: usize, seed: u64) -> Result<McTerms> {
    check_beta(spec.beta)?;
    if n < 100 {
        return Err(Error::InvalidParameter("Monte-Carlo cost needs n >= 100".into()));
    }
    let net = match spec.layer {
        Some(l) => net.truncated(l)?,
        None => net.clone(),
    };
    let data = sample(joint, n, seed)?;
    match &spec.variant {
        Variant::Noisy { eta, eta_prime, .. } => noisy_terms(joint, &net, *eta, *eta_prime, &data, seed),
        Variant::Probabilistic => probabilistic_terms(joint, &net, &data, seed),
        v => Err(Error::Unsupported(format!("Monte-Carlo estimate of the {} cost", v.name()))),
    }
}

/// The layer noise of `net` is ignored; the noise of `spec` is added to the clean representation.
fn noisy_terms(
    joint: &LabeledJoint,
    net: &Network,
    eta: NoiseSpec,
    eta_prime: NoiseSpec,
    data: &Dataset,
    seed: u64,
) -> Result<McTerms> {
    let net = net.without_noise();
    let laws = class_laws(joint, &net)?;
    let (_, marg) = class_mixtures(joint, &laws, eta)?;
    let (classes_p, marg_p) = class_mixtures(joint, &laws, eta_prime)?;
    let labels = joint.labels();
    let mut rng = noise_rng(seed);
    let mut compression = Vec::with_capacity(data.len());
    let mut precision = Vec::with_capacity(data.len());
    for (x, y) in data.samples() {
        let l = net.output(x)[0];
        let e = eta.sample(&mut rng);
        let e_p = eta_prime.sample(&mut rng);
        compression.push(eta.density(e).log2() - marg.density(l + e).log2());
        let k = labels.iter().position(|v| v == y).expect("sampled label");
        precision.push(classes_p[k].density(l + e_p).log2() - marg_p.density(l + e_p).log2());
    }
    Ok(McTerms {
        compression,
        precision,
    })
}

fn neg_log2(p: f64) -> f64 {
    -p.max(1e-300).log2()
}

/// Plug-in estimate written as a mean of influence terms, so its mean equals
/// H(pbar) - mean H(p_i) (compression) and H(pbar) - sum_y w_y H(pbar_y) (precision).
fn probabilistic_terms(joint: &LabeledJoint, net: &Network, data: &Dataset, seed: u64) -> Result<McTerms> {
    let labels = joint.labels();
    let mut rng = noise_rng(seed);
    let probs = data
        .samples()
        .iter()
        .map(|(x, _)| {
            if !net.is_stochastic() {
                return output_probabilities(&net.output(x));
            }
            let mut acc: Vec<f64> = Vec::new();
            for _ in 0..INNER_DRAWS {
                let p = output_probabilities(net.forward_with_rng(x, &mut rng)?.output())?;
                acc.resize(p.len(), 0.0);
                for (a, v) in acc.iter_mut().zip(p) {
                    *a += v / INNER_DRAWS as f64;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = probs[0].len();
    let ys: Vec<usize> = data
        .samples()
        .iter()
        .map(|(_, y)| labels.iter().position(|v| v == y).expect("sampled label"))
        .collect();
    let mut pbar = vec![0.0; k];
    let mut class_bar = vec![vec![0.0; k]; labels.len()];
    let mut counts = vec![0usize; labels.len()];
    for (p, &y) in probs.iter().zip(&ys) {
        counts[y] += 1;
        for j in 0..k {
            pbar[j] += p[j];
            class_bar[y][j] += p[j];
        }
    }
    pbar.iter_mut().for_each(|v| *v /= probs.len() as f64);
    for (row, &c) in class_bar.iter_mut().zip(&counts) {
        row.iter_mut().for_each(|v| *v /= c.max(1) as f64);
    }
    let cross = |p: &[f64], q: &[f64]| p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * neg_log2(*b)).sum::<f64>();
    let mut compression = Vec::with_capacity(probs.len());
    let mut precision = Vec::with_capacity(probs.len());
    for (p, &y) in probs.iter().zip(&ys) {
        let to_marginal = cross(p, &pbar);
        compression.push(to_marginal - entropy_of(p.iter().copied()));
        precision.push(to_marginal - cross(p, &class_bar[y]));
    }
    Ok(McTerms {
        compression,
        precision,
    })
}

/// Monte-Carlo estimate of a noisy or probabilistic cost with standard errors.
///
/// Deterministic given `seed`. For the noisy variant the representation is
/// the noise-free network output and the noise of `spec` is added to it.
pub fn mc_cost(joint: &LabeledJoint, net: &Network, spec: &CostSpec, n: usize, seed: u64) -> Result<CostReport> {
    let t = mc_terms(joint, net, spec, n, seed)?;
    let (c, c_se) = mean_se(&t.compression);
    let (p, p_se) = mean_se(&t.precision);
    let total: Vec<f64> = t
        .compression
        .iter()
        .zip(&t.precision)
        .map(|(c, p)| c - spec.beta * p)
        .collect();
    let (tot, _) = mean_se(&total);
    Ok(CostReport {
        variant: spec.variant.name().to_string(),
        beta: spec.beta,
        compression: InfoValue::Finite(c),
        precision: InfoValue::Finite(p),
        total: InfoValue::Finite(tot),
        comp_se: Some(c_se),
        prec_se: Some(p_se),
    })
}

/// Central-difference gradient of the Monte-Carlo total cost of `build(theta)`,
/// using the same samples on both sides of every difference. Returns
/// (gradient, standard error) per coordinate.
pub fn mc_finite_diff_grad<F>(
    joint: &LabeledJoint,
    build: F,
    theta: &[f64],
    spec: &CostSpec,
    epsilon: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>>
where
    F: Fn(&[f64]) -> Result<Network>,
{
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
    }
    let totals = |t: &[f64]| -> Result<Vec<f64>> {
        let terms = mc_terms(joint, &build(t)?, spec, n, seed)?;
        Ok(terms
            .compression
            .iter()
            .zip(&terms.precision)
            .map(|(c, p)| c - spec.beta * p)
            .collect())
    };
    let mut probe = theta.to_vec();
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        probe[i] = theta[i] + epsilon;
        let up = totals(&probe)?;
        probe[i] = theta[i] - epsilon;
        let down = totals(&probe)?;
        probe[i] = theta[i];
        let diffs: Vec<f64> = up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * epsilon)).collect();
        out.push(mean_se(&diffs));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainObjective {
    /// Cross-entropy in bits between the label and the output probabilities.
    CrossEntropy,
    /// Batch plug-in estimate of a cost; only the probabilistic variant is differentiable here.
    Cost(CostSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    /// Zero is allowed and leaves the parameters untouched.
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Independent noise draws per input in every batch.
    pub noise_samples: usize,
    pub seed: u64,
    pub objective: TrainObjective,
    /// Evaluate this spec on the noise-free network every `eval_every` steps and after the last.
    pub eval: Option<(usize, CostSpec)>,
}

impl TrainConfig {
    pub fn new(steps: usize, learning_rate: f64, batch_size: usize, seed: u64) -> Self {
        Self {
            steps,
            learning_rate,
            batch_size,
            noise_samples: 1,
            seed,
            objective: TrainObjective::CrossEntropy,
            eval: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch_size == 0 || self.noise_samples == 0 {
            return Err(Error::InvalidParameter("steps, batch size and noise samples must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning rate {} must be >= 0", self.learning_rate)));
        }
        if let Some((every, spec)) = &self.eval {
            if *every == 0 {
                return Err(Error::InvalidParameter("eval interval must be at least 1".into()));
            }
            check_beta(spec.beta)?;
        }
        if let TrainObjective::Cost(spec) = &self.objective {
            check_beta(spec.beta)?;
            if spec.variant != Variant::Probabilistic {
                return Err(Error::Unsupported(format!("training on the {} cost", spec.variant.name())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    /// Surrogate loss of every step's batch, in bits.
    pub losses: Vec<f64>,
    pub evals: Vec<(usize, CostReport)>,
}

impl TrainTrace {
    pub const CSV_HEADER: &'static str = "step,loss,compression,precision,total";

    /// One row per step; cost columns are empty where no evaluation ran.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        let mut evals = self.evals.iter().peekable();
        for (i, loss) in self.losses.iter().enumerate() {
            let step = i + 1;
            match evals.next_if(|(s, _)| *s == step) {
                Some((_, r)) => writeln!(s, "{step},{loss:.6},{},{},{}", r.compression, r.precision, r.total),
                None => writeln!(s, "{step},{loss:.6},,,"),
            }
            .expect("writing to a String");
        }
        s
    }
}

const DIVERGENCE_LOSS: f64 = 1e6;
const PROB_FLOOR: f64 = 1e-12;

struct Draw {
    trace: crate::net::LayerTrace,
    label: usize,
}

/// Gradient of the loss with respect to each draw's network output.
fn output_grads(objective: &TrainObjective, draws: &[Draw], n_labels: usize) -> Result<(f64, Vec<Vec<f64>>)> {
    let probs = draws
        .iter()
        .map(|d| {
            let o = d.trace.output();
            if o.len() == 1 {
                Ok(vec![1.0 - o[0], o[0]])
            } else {
                output_probabilities(o)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let n = draws.len() as f64;
    // d loss / d p, then chained to the raw output.
    let dp: Vec<Vec<f64>> = match objective {
        TrainObjective::CrossEntropy => probs
            .iter()
            .zip(draws)
            .map(|(p, d)| {
                let mut g = vec![0.0; p.len()];
                g[d.label] = -1.0 / (p[d.label].max(PROB_FLOOR) * std::f64::consts::LN_2 * n);
                g
            })
            .collect(),
        TrainObjective::Cost(spec) => {
            let k = probs[0].len();
            let mut pbar = vec![0.0; k];
            let mut class_bar = vec![vec![0.0; k]; n_labels];
            let mut counts = vec![0usize; n_labels];
            for (p, d) in probs.iter().zip(draws) {
                counts[d.label] += 1;
                for j in 0..k {
                    pbar[j] += p[j] / n;
                    class_bar[d.label][j] += p[j];
                }
            }
            for (row, &c) in class_bar.iter_mut().zip(&counts) {
                row.iter_mut().for_each(|v| *v /= c.max(1) as f64);
            }
            let lg = |v: f64| v.max(PROB_FLOOR).log2();
            probs
                .iter()
                .zip(draws)
                .map(|(p, d)| {
                    (0..k)
                        .map(|j| {
                            ((spec.beta - 1.0) * lg(pbar[j]) + lg(p[j]) - spec.beta * lg(class_bar[d.label][j])) / n
                        })
                        .collect()
                })
                .collect()
        }
    };
    let loss = match objective {
        TrainObjective::CrossEntropy => probs
            .iter()
            .zip(draws)
            .map(|(p, d)| neg_log2(p[d.label].max(PROB_FLOOR)))
            .sum::<f64>()
            / n,
        TrainObjective::Cost(spec) => {
            let h = |v: &[f64]| entropy_of(v.iter().map(|x| x.clamp(0.0, 1.0)));
            let k = probs[0].len();
            let mut pbar = vec![0.0; k];
            let mut class_sum = vec![vec![0.0; k]; n_labels];
            let mut counts = vec![0usize; n_labels];
            for (p, d) in probs.iter().zip(draws) {
                counts[d.label] += 1;
                for j in 0..k {
                    pbar[j] += p[j] / n;
                    class_sum[d.label][j] += p[j];
                }
            }
            let h_bar = h(&pbar);
            let comp = h_bar - probs.iter().map(|p| h(p)).sum::<f64>() / n;
            let cond: f64 = class_sum
                .iter()
                .zip(&counts)
                .filter(|(_, &c)| c > 0)
                .map(|(s, &c)| c as f64 / n * h(&s.iter().map(|v| v / c as f64).collect::<Vec<_>>()))
                .sum();
            comp - spec.beta * (h_bar - cond)
        }
    };
    let grads = dp
        .into_iter()
        .zip(draws)
        .map(|(g, d)| {
            if d.trace.output().len() == 1 {
                vec![g[1] - g[0]]
            } else {
                g
            }
        })
        .collect();
    Ok((loss, grads))
}

/// Plain minibatch SGD with a fixed rate. Layer noise enters through the
/// additive reparameterization: each draw's noise is held fixed while
/// differentiating.
pub fn train_sgd(joint: &LabeledJoint, net: &Network, cfg: &TrainConfig) -> Result<(Network, TrainTrace)> {
    cfg.validate()?;
    if net.has_step() {
        return Err(Error::NonDifferentiable);
    }
    if net.input_dim() != joint.dim() {
        return Err(Error::DimensionMismatch {
            expected: joint.dim(),
            got: net.input_dim(),
        });
    }
    let labels = joint.labels();
    let mut net = net.clone();
    let mut trace = TrainTrace::default();
    let mut seeder = ChaCha8Rng::seed_from_u64(cfg.seed);
    for step in 1..=cfg.steps {
        let batch = sample(joint, cfg.batch_size, seeder.random())?;
        let noise_seed: u64 = seeder.random();
        let draws = batch
            .samples()
            .par_iter()
            .enumerate()
            .map(|(i, (x, y))| {
                let mut rng = ChaCha8Rng::seed_from_u64(noise_seed.wrapping_add(i as u64));
                let label = labels.iter().position(|v| v == y).expect("sampled label");
                (0..cfg.noise_samples)
                    .map(|_| {
                        Ok(Draw {
                            trace: net.forward_with_rng(x, &mut rng)?,
                            label,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect::<Vec<_>>();
        let (loss, upstream) = output_grads(&cfg.objective, &draws, labels.len())?;
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Diverged { step, loss });
        }
        let per_draw = draws
            .par_iter()
            .zip(&upstream)
            .map(|(d, u)| Ok(flatten_grads(&backward(&net, &d.trace, u)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut grad = vec![0.0; net.num_params()];
        for g in &per_draw {
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        if cfg.learning_rate > 0.0 {
            let theta: Vec<f64> = net
                .params()
                .iter()
                .zip(&grad)
                .map(|(t, g)| t - cfg.learning_rate * g)
                .collect();
            if theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::Diverged { step, loss });
            }
            net.set_params(&theta)?;
        }
        trace.losses.push(loss);
        if let Some((every, spec)) = &cfg.eval {
            if step % every == 0 || step == cfg.steps {
                let report = evaluate(joint, &net.without_noise(), spec, Some(cfg.seed))?;
                trace.evals.push((step, report));
            }
        }
    }
    Ok((net, trace))
}

/// Scalar-input network with one noisy hidden layer and a sigmoid output unit.
/// Hidden kinks start spread over [lo, hi] with input weight +-`slope` of random sign.
pub fn kink_init_network(
    lo: f64,
    hi: f64,
    hidden: usize,
    slope: f64,
    act: ActivationKind,
    noise: NoiseSpec,
    seed: u64,
) -> Result<Network> {
    if !(hi > lo) || hidden == 0 || !(slope > 0.0) {
        return Err(Error::InvalidParameter("need hi > lo, slope > 0 and at least one hidden unit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = slope;
    let mut w = Vec::with_capacity(hidden);
    let mut b = Vec::with_capacity(hidden);
    for k in 0..hidden {
        let t = lo + (hi - lo) * (k as f64 + rng.random::<f64>()) / hidden as f64;
        let s = if rng.random::<bool>() { scale } else { -scale };
        w.push(s);
        b.push(-s * t);
    }
    let out: Vec<Vec<f64>> = (0..hidden).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
    Network::new(vec![
        LayerParams::new(vec![w], b, act, noise)?,
        LayerParams::new(out, vec![0.0], ActivationKind::Sigmoid, NoiseSpec::None)?,
    ])
}
