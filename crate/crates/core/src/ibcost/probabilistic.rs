use super::{check_beta, is_atomic, reduce, require_deterministic, CostReport};
use crate::dist::LabeledJoint;
use crate::error::{Error, Result};
use crate::info::{entropy_of, InfoValue};
use crate::net::Network;
use crate::quad::integrate_split;

const PROB_TOL: f64 = 1e-9;

/// Reads a network output as P(Yhat = i | x). A single output o stands for (1 - o, o).
pub(crate) fn output_probabilities(y: &[f64]) -> Result<Vec<f64>> {
    let p = if y.len() == 1 {
        vec![1.0 - y[0], y[0]]
    } else {
        y.to_vec()
    };
    let total: f64 = p.iter().sum();
    if p.iter().any(|&v| !(v >= -PROB_TOL && v <= 1.0 + PROB_TOL)) || (total - 1.0).abs() > PROB_TOL {
        return Err(Error::NonProbabilisticOutput(format!("{y:?}")));
    }
    Ok(p.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
}

/// Per-class E[p(X)] and E[H(p(X))].
struct ClassMoments {
    mean: Vec<f64>,
    mean_entropy: f64,
}

/// Yhat is drawn from the output probabilities; X -> p(X) -> Yhat is Markov.
pub fn ib_probabilistic(joint: &LabeledJoint, net: &Network, beta: f64) -> Result<CostReport> {
    check_beta(beta)?;
    require_deterministic(net)?;
    let moments = if is_atomic(joint) {
        atomic_moments(joint, net)?
    } else {
        continuous_moments(joint, net)?
    };
    let priors = joint.priors();
    let k = moments[0].mean.len();
    let mut pbar = vec![0.0; k];
    for (pi, m) in priors.iter().zip(&moments) {
        for (acc, v) in pbar.iter_mut().zip(&m.mean) {
            *acc += pi * v;
        }
    }
    let h_bar = entropy_of(pbar.iter().copied());
    let h_given_x: f64 = priors.iter().zip(&moments).map(|(pi, m)| pi * m.mean_entropy).sum();
    let h_given_y: f64 = priors
        .iter()
        .zip(&moments)
        .map(|(pi, m)| pi * entropy_of(m.mean.iter().copied()))
        .sum();
    let h_y = entropy_of(priors.iter().copied());
    Ok(CostReport::exact(
        "probabilistic",
        beta,
        InfoValue::bits((h_bar - h_given_x).max(0.0)),
        InfoValue::bits((h_bar - h_given_y).clamp(0.0, h_y)),
    ))
}

fn atomic_moments(joint: &LabeledJoint, net: &Network) -> Result<Vec<ClassMoments>> {
    let outs = super::atomic_outputs(joint, net)?;
    outs.into_iter()
        .map(|atoms| {
            let mut mean: Vec<f64> = Vec::new();
            let mut mean_entropy = 0.0;
            for (y, m) in atoms {
                let p = output_probabilities(&y)?;
                mean.resize(p.len(), 0.0);
                for (acc, v) in mean.iter_mut().zip(&p) {
                    *acc += m * v;
                }
                mean_entropy += m * entropy_of(p);
            }
            Ok(ClassMoments { mean, mean_entropy })
        })
        .collect()
}

fn continuous_moments(joint: &LabeledJoint, net: &Network) -> Result<Vec<ClassMoments>> {
    let r = reduce(joint, net)?;
    let g = |z: f64| r.reduction.net.output(&[z]);
    // Kinks of the pre-final map; smooth hidden layers just get no split hints.
    let mut cuts: Vec<f64> = match r.reduction.pwls(r.domain, true) {
        Ok(fs) => fs.iter().flat_map(|f| f.interior_breakpoints()).collect(),
        Err(Error::SmoothActivation(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let width = output_probabilities(&g(r.domain.0))?.len();
    r.laws
        .iter()
        .map(|law| {
            let mut mean = vec![0.0; width];
            let mut mean_entropy = 0.0;
            for &(z, m) in &law.atoms {
                let p = output_probabilities(&g(z))?;
                for (acc, v) in mean.iter_mut().zip(&p) {
                    *acc += m * v;
                }
                mean_entropy += m * entropy_of(p);
            }
            for part in &law.parts {
                let (lo, hi) = part.support();
                let mut split = cuts.clone();
                split.extend(part.kinks());
                split.sort_by(f64::total_cmp);
                for i in 0..=32 {
                    output_probabilities(&g(lo + (hi - lo) * i as f64 / 32.0))?;
                }
                let probs = |z: f64| output_probabilities(&g(z)).unwrap_or_else(|_| vec![0.0; width]);
                let m = part.mass();
                for (i, acc) in mean.iter_mut().enumerate() {
                    *acc += m * integrate_split(&|z| part.pdf(z) * probs(z)[i], lo, hi, &split, 1e-12);
                }
                mean_entropy += m * integrate_split(&|z| part.pdf(z) * entropy_of(probs(z)), lo, hi, &split, 1e-12);
            }
            Ok(ClassMoments { mean, mean_entropy })
        })
        .collect()
}
