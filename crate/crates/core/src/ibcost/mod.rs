//! The information-bottleneck cost I(X;L) - beta I(Y;L) and its remedied variants.

mod bound;
mod decision;
mod noisy;
mod probabilistic;
mod quantized;
mod raw;

pub use bound::{divergences, precision_bound_report, random_bound_trial, BoundReport, BoundTrial};
pub use decision::{ib_decision, DecisionRule};
pub use noisy::{ib_noisy, NoisyMixture, EXACT_COMPONENT_LIMIT};
pub(crate) use noisy::{class_laws, class_mixtures, mean_se};
pub(crate) use probabilistic::output_probabilities;
pub use probabilistic::ib_probabilistic;
pub use quantized::{ib_quantized, quantized_joint_mi, Quantizer};
pub use raw::{hybrid_precision, ib_raw};

use std::fmt;

use crate::dist::LabeledJoint;
use crate::error::{Error, Result};
use crate::info::InfoValue;
use crate::net::{reduce_rank_one, Network, NoiseSpec, OutputLaw, RankOneReduction, ScalarLaw};

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Raw,
    Decision(DecisionRule),
    Probabilistic,
    Quantized {
        qx: Quantizer,
        ql: Quantizer,
        ql_prime: Quantizer,
    },
    Noisy {
        eta: NoiseSpec,
        eta_prime: NoiseSpec,
        n_mc: usize,
    },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Raw => "raw",
            Variant::Decision(_) => "decision",
            Variant::Probabilistic => "probabilistic",
            Variant::Quantized { .. } => "quantized",
            Variant::Noisy { .. } => "noisy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub variant: Variant,
    pub beta: f64,
    /// Number of layers forming the encoder of L; `None` means the whole network.
    pub layer: Option<usize>,
}

impl CostSpec {
    pub fn new(variant: Variant, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            variant,
            beta,
            layer: None,
        })
    }

    pub fn at_layer(mut self, layer: usize) -> Self {
        self.layer = Some(layer);
        self
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 1.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("beta {beta} must exceed 1")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub variant: String,
    pub beta: f64,
    pub compression: InfoValue,
    pub precision: InfoValue,
    pub total: InfoValue,
    pub comp_se: Option<f64>,
    pub prec_se: Option<f64>,
}

impl CostReport {
    pub(crate) fn exact(variant: &str, beta: f64, compression: InfoValue, precision: InfoValue) -> Self {
        Self {
            variant: variant.to_string(),
            beta,
            compression,
            precision,
            total: compression.minus_scaled(beta, precision),
            comp_se: None,
            prec_se: None,
        }
    }

    pub const CSV_HEADER: &'static str = "variant,beta,compression,precision,total,comp_se,prec_se";

    pub fn csv_row(&self) -> String {
        let se = |s: Option<f64>| s.map(|v| format!("{v:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.variant,
            self.beta,
            self.compression,
            self.precision,
            self.total,
            se(self.comp_se),
            se(self.prec_se)
        )
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.csv_row())
    }
}

/// Evaluates any variant. `seed` is only used by sampling paths.
pub fn evaluate(
    joint: &LabeledJoint,
    net: &Network,
    spec: &CostSpec,
    seed: Option<u64>,
) -> Result<CostReport> {
    check_beta(spec.beta)?;
    let net = match spec.layer {
        Some(l) => net.truncated(l)?,
        None => net.clone(),
    };
    match &spec.variant {
        Variant::Raw => ib_raw(joint, &net, spec),
        Variant::Decision(rule) => ib_decision(joint, &net, rule, spec.beta),
        Variant::Probabilistic => ib_probabilistic(joint, &net, spec.beta),
        Variant::Quantized { qx, ql, ql_prime } => {
            ib_quantized(joint, &net, qx, ql, ql_prime, spec.beta)
        }
        Variant::Noisy {
            eta,
            eta_prime,
            n_mc,
        } => ib_noisy(joint, &net, *eta, *eta_prime, spec.beta, *n_mc, seed),
    }
}

pub(crate) fn is_atomic(joint: &LabeledJoint) -> bool {
    joint.classes().iter().all(|c| c.conditional.is_atomic())
}

pub(crate) fn require_deterministic(net: &Network) -> Result<()> {
    if net.is_stochastic() {
        Err(Error::StochasticLayer)
    } else {
        Ok(())
    }
}

/// Network outputs for every atom, per class, with conditional masses.
pub(crate) fn atomic_outputs(joint: &LabeledJoint, net: &Network) -> Result<Vec<Vec<(Vec<f64>, f64)>>> {
    if joint.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: joint.dim(),
        });
    }
    Ok(joint
        .classes()
        .iter()
        .map(|c| {
            c.conditional
                .points()
                .iter()
                .map(|p| (net.output(&p.location), p.mass))
                .collect()
        })
        .collect())
}

/// Per-class laws of the scalar projection the network reads, plus the reduced network.
pub(crate) struct Reduced {
    pub laws: Vec<ScalarLaw>,
    pub domain: (f64, f64),
    pub reduction: RankOneReduction,
}

pub(crate) fn reduce(joint: &LabeledJoint, net: &Network) -> Result<Reduced> {
    if joint.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: joint.dim(),
        });
    }
    let reduction = reduce_rank_one(net)?;
    let laws: Vec<ScalarLaw> = joint
        .classes()
        .iter()
        .map(|c| reduction.law(&c.conditional))
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for l in &laws {
        let (a, b) = l.support();
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if lo == hi {
        lo -= 1.0;
        hi += 1.0;
    }
    Ok(Reduced {
        laws,
        domain: (lo, hi),
        reduction,
    })
}

/// Per-class exact laws of a scalar representation.
pub(crate) fn scalar_output_laws(joint: &LabeledJoint, net: &Network) -> Result<Vec<OutputLaw>> {
    if net.output_dim() != 1 {
        return Err(Error::Unsupported(format!(
            "representation of width {} over a continuous input",
            net.output_dim()
        )));
    }
    let r = reduce(joint, net)?;
    let f = r.reduction.pwls(r.domain, false)?.remove(0);
    Ok(r.laws.iter().map(|l| l.push(&f)).collect())
}

/// Clusters pooled scalar atoms (value, class, weighted mass) by the atom tolerance
/// and returns per-cluster per-class masses.
pub(crate) fn cluster_scalar_atoms(mut pooled: Vec<(f64, usize, f64)>, n_classes: usize) -> Vec<Vec<f64>> {
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (v, c, m) in pooled {
        if out.is_empty() || v - last > crate::tol::ATOM_TOL {
            out.push(vec![0.0; n_classes]);
        }
        out.last_mut().unwrap()[c] += m;
        last = v;
    }
    out
}

/// Clusters pooled vector atoms by max-norm tolerance after lexicographic sorting.
pub(crate) fn cluster_vector_atoms(mut pooled: Vec<(Vec<f64>, usize, f64)>, n_classes: usize) -> Vec<Vec<f64>> {
    pooled.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut last: Option<Vec<f64>> = None;
    for (v, c, m) in pooled {
        let close = last.as_ref().is_some_and(|l| {
            l.iter()
                .zip(&v)
                .all(|(a, b)| (a - b).abs() <= crate::tol::ATOM_TOL)
        });
        if !close {
            out.push(vec![0.0; n_classes]);
        }
        out.last_mut().unwrap()[c] += m;
        last = Some(v);
    }
    out
}

/// H(L) and I(Y;L) from per-cluster per-class joint masses.
pub(crate) fn discrete_terms(clusters: &[Vec<f64>], priors: &[f64]) -> (f64, f64) {
    use crate::info::entropy_of;
    let h_l = entropy_of(clusters.iter().map(|c| c.iter().sum::<f64>()));
    let h_y = entropy_of(priors.iter().copied());
    let h_y_given_l: f64 = clusters
        .iter()
        .map(|c| {
            let m: f64 = c.iter().sum();
            if m > 0.0 {
                m * entropy_of(c.iter().map(|v| v / m))
            } else {
                0.0
            }
        })
        .sum();
    (h_l, (h_y - h_y_given_l).clamp(0.0, h_y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_row_formats() {
        let r = CostReport::exact("raw", 2.0, InfoValue::Infinite, InfoValue::Finite(0.5));
        assert_eq!(r.csv_row(), "raw,2,inf,0.500000,inf,,");
        let r = CostReport::exact("raw", 2.0, InfoValue::Finite(1.0), InfoValue::Finite(1.0));
        assert_eq!(r.csv_row(), "raw,2,1.000000,1.000000,-1.000000,,");
    }

    #[test]
    fn beta_must_exceed_one() {
        assert!(CostSpec::new(Variant::Raw, 1.0).is_err());
        assert!(CostSpec::new(Variant::Raw, 2.0).is_ok());
    }
}
