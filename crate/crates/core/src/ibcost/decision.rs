use std::fmt;
use std::str::FromStr;

use super::{atomic_outputs, is_atomic, reduce, require_deterministic, CostReport};
use crate::dist::LabeledJoint;
use crate::error::{Error, Result};
use crate::info::{entropy, mi_discrete, InfoValue, Pmf};
use crate::net::{ActivationKind, Network, PiecewiseLinear};

/// Fixed map from the network output to a class index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecisionRule {
    /// Index 1 when output coordinate `coord` exceeds `level`, else 0.
    Threshold { coord: usize, level: f64 },
    /// Index of the largest coordinate; ties go to the lowest index.
    Argmax,
}

impl DecisionRule {
    pub fn threshold(level: f64) -> Self {
        Self::Threshold { coord: 0, level }
    }

    pub fn validate(&self, width: usize) -> Result<()> {
        match *self {
            Self::Threshold { coord, level } => {
                if !level.is_finite() {
                    return Err(Error::InvalidParameter(format!("threshold level {level}")));
                }
                if coord >= width {
                    return Err(Error::DimensionMismatch {
                        expected: width,
                        got: coord + 1,
                    });
                }
                Ok(())
            }
            Self::Argmax => Ok(()),
        }
    }

    pub fn apply(&self, y: &[f64]) -> usize {
        match *self {
            Self::Threshold { coord, level } => usize::from(y[coord] > level),
            Self::Argmax => {
                let mut best = 0;
                for (i, &v) in y.iter().enumerate() {
                    if v > y[best] {
                        best = i;
                    }
                }
                best
            }
        }
    }
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Threshold { coord: 0, level } => write!(f, "threshold:{level}"),
            Self::Threshold { coord, level } => write!(f, "threshold:{level}:{coord}"),
            Self::Argmax => f.write_str("argmax"),
        }
    }
}

/// `argmax`, `threshold:<level>` or `threshold:<level>:<coord>`.
impl FromStr for DecisionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "argmax" {
            return Ok(Self::Argmax);
        }
        let bad = || Error::InvalidParameter(format!("unknown decision rule `{s}`"));
        let mut it = s.split(':');
        if it.next() != Some("threshold") {
            return Err(bad());
        }
        let level: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let coord: usize = match it.next() {
            Some(t) => t.parse().map_err(|_| bad())?,
            None => 0,
        };
        if it.next().is_some() || !level.is_finite() {
            return Err(bad());
        }
        Ok(Self::Threshold { coord, level })
    }
}

/// Cost of the discrete decision Yhat = rule(network output).
pub fn ib_decision(joint: &LabeledJoint, net: &Network, rule: &DecisionRule, beta: f64) -> Result<CostReport> {
    super::check_beta(beta)?;
    require_deterministic(net)?;
    rule.validate(net.output_dim())?;
    let priors = joint.priors();
    let per_class: Vec<Pmf<usize>> = if is_atomic(joint) {
        atomic_outputs(joint, net)?
            .into_iter()
            .map(|atoms| Pmf::from_weights(atoms.iter().map(|(y, m)| (rule.apply(y), *m)).collect()))
            .collect::<Result<_>>()?
    } else {
        continuous_decisions(joint, net, rule)?
    };
    let mut marginal: Vec<(usize, f64)> = Vec::new();
    for (p, pmf) in priors.iter().zip(&per_class) {
        marginal.extend(pmf.entries().iter().map(|(a, m)| (*a, p * m)));
    }
    let compression = entropy(&Pmf::from_weights(marginal)?);
    let terms: Vec<(usize, f64, Pmf<usize>)> = per_class
        .into_iter()
        .enumerate()
        .map(|(c, pmf)| (c, priors[c], pmf))
        .collect();
    let precision = mi_discrete(&terms);
    Ok(CostReport::exact(
        "decision",
        beta,
        InfoValue::bits(compression),
        InfoValue::bits(precision),
    ))
}

/// Splits the scalar input line into cells on which the rule is constant and
/// returns the per-class law of the decision.
fn continuous_decisions(joint: &LabeledJoint, net: &Network, rule: &DecisionRule) -> Result<Vec<Pmf<usize>>> {
    let r = reduce(joint, net)?;
    let final_act = net.layers().last().expect("nonempty network").activation;
    let strip = final_act.is_smooth_monotone() || final_act == ActivationKind::Softmax;
    if let (ActivationKind::Softmax, DecisionRule::Threshold { .. }) = (final_act, rule) {
        if net.output_dim() > 1 {
            return Err(Error::Unsupported("threshold on a softmax layer".into()));
        }
    }
    let pre = r.reduction.pwls(r.domain, strip)?;
    let (lo, hi) = r.domain;
    let mut cuts: Vec<f64> = Vec::new();
    for f in &pre {
        cuts.extend(f.interior_breakpoints());
    }
    match *rule {
        DecisionRule::Threshold { coord, level } => {
            // A width-one softmax is constant, so it needs no level cut.
            let level = if strip { final_act.inverse(level) } else { Some(level) };
            if let Some(level) = level {
                cuts.extend(pre[coord].level_cuts(level, lo, hi));
            }
        }
        DecisionRule::Argmax => {
            for i in 0..pre.len() {
                for j in i + 1..pre.len() {
                    let d = PiecewiseLinear::linear_combination(&[(1.0, &pre[i]), (-1.0, &pre[j])], 0.0);
                    cuts.extend(d.level_cuts(0.0, lo, hi));
                }
            }
        }
    }
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let decide = |z: f64| rule.apply(&r.reduction.net.output(&[z]));
    let cell_labels: Vec<(f64, f64, usize)> = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1], decide(0.5 * (w[0] + w[1]))))
        .collect();
    r.laws
        .iter()
        .map(|law| {
            let mut w: Vec<(usize, f64)> = law.atoms.iter().map(|&(z, m)| (decide(z), m)).collect();
            for part in &law.parts {
                for &(a, b, label) in &cell_labels {
                    let m = part.mass_between(a, b);
                    if m > 0.0 {
                        w.push((label, m));
                    }
                }
            }
            Pmf::from_weights(w)
        })
        .collect()
}
