use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{atomic_outputs, check_beta, is_atomic, scalar_output_laws, CostReport};
use crate::dist::LabeledJoint;
use crate::error::{Error, Result};
use crate::info::{entropy_of, InfoValue};
use crate::net::{merge_atoms, Network, NoiseSpec, OutputLaw};
use crate::quad::integrate_split;

/// Above this many mixture components the entropies are estimated by sampling.
pub const EXACT_COMPONENT_LIMIT: usize = 10_000;

const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Component {
    lo: f64,
    /// Equal to `lo` for an atom.
    hi: f64,
    mass: f64,
}

/// Law of L + eta for a scalar L made of atoms and uniform pieces, with
/// independent additive noise eta.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyMixture {
    noise: NoiseSpec,
    /// Sorted by `lo`.
    components: Vec<Component>,
    cumulative: Vec<f64>,
    max_width: f64,
}

fn std_normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

impl NoisyMixture {
    pub fn from_law(law: &OutputLaw, noise: NoiseSpec) -> Result<Self> {
        if noise.is_none() {
            return Err(Error::InvalidParameter("noisy cost needs a noise family".into()));
        }
        noise.validate()?;
        let mut components: Vec<Component> = law
            .atoms
            .iter()
            .map(|&(v, m)| Component { lo: v, hi: v, mass: m })
            .collect();
        for p in &law.parts {
            if !p.has_constant_density() {
                return Err(Error::Unsupported(
                    "noisy cost over a non-uniform representation density".into(),
                ));
            }
            let (lo, hi) = p.image();
            components.push(Component { lo, hi, mass: p.mass });
        }
        Ok(Self::build(noise, components))
    }

    fn build(noise: NoiseSpec, mut components: Vec<Component>) -> Self {
        components.retain(|c| c.mass > 0.0);
        components.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        components.dedup_by(|b, a| {
            let same = a.lo == b.lo && a.hi == b.hi;
            if same {
                a.mass += b.mass;
            }
            same
        });
        let max_width = components.iter().map(|c| c.hi - c.lo).fold(0.0, f64::max);
        let cumulative = components
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c.mass;
                Some(*acc)
            })
            .collect();
        Self {
            noise,
            components,
            cumulative,
            max_width,
        }
    }

    /// Weighted mixture of mixtures sharing one noise law.
    pub fn mixture(parts: &[(f64, &NoisyMixture)]) -> Result<Self> {
        let noise = parts
            .first()
            .map(|p| p.1.noise)
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        if parts.iter().any(|p| p.1.noise != noise) {
            return Err(Error::InvalidParameter("mixtures with different noise".into()));
        }
        let components = parts
            .iter()
            .flat_map(|&(w, m)| m.components.iter().map(move |c| Component { mass: w * c.mass, ..*c }))
            .collect();
        Ok(Self::build(noise, components))
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Distance beyond which a component's noisy density is negligible.
    fn reach(&self) -> f64 {
        match self.noise {
            NoiseSpec::Uniform { width } => 0.5 * width,
            NoiseSpec::Gaussian { std } => 8.0 * std,
            NoiseSpec::None => 0.0,
        }
    }

    fn component_density(&self, c: &Component, y: f64) -> f64 {
        if c.hi == c.lo {
            return c.mass * self.noise.density(y - c.lo);
        }
        let width = c.hi - c.lo;
        match self.noise {
            NoiseSpec::Uniform { width: w } => {
                let overlap = (y + 0.5 * w).min(c.hi) - (y - 0.5 * w).max(c.lo);
                c.mass * overlap.max(0.0) / (width * w)
            }
            NoiseSpec::Gaussian { std } => {
                let p = std_normal_cdf((y - c.lo) / std) - std_normal_cdf((y - c.hi) / std);
                c.mass * p.max(0.0) / width
            }
            NoiseSpec::None => 0.0,
        }
    }

    pub fn density(&self, y: f64) -> f64 {
        let r = self.reach();
        let start = self
            .components
            .partition_point(|c| c.lo < y - r - self.max_width);
        self.components[start..]
            .iter()
            .take_while(|c| c.lo <= y + r)
            .filter(|c| c.hi >= y - r)
            .map(|c| self.component_density(c, y))
            .sum()
    }

    fn cuts(&self) -> Vec<f64> {
        let r = self.reach();
        let mut cuts: Vec<f64> = Vec::with_capacity(4 * self.components.len());
        for c in &self.components {
            cuts.extend([c.lo - r, c.lo + r, c.hi - r, c.hi + r]);
            if c.hi > c.lo {
                cuts.extend([c.lo, c.hi]);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }

    /// Differential entropy in bits, by quadrature. A single atom gives h(eta).
    pub fn entropy_bits(&self) -> f64 {
        if self.components.len() == 1 && self.components[0].hi == self.components[0].lo {
            return self.noise.entropy_bits();
        }
        let cuts = self.cuts();
        let (lo, hi) = (cuts[0], cuts[cuts.len() - 1]);
        let integrand = |y: f64| {
            let p = self.density(y);
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        };
        integrate_split(&integrand, lo, hi, &cuts, QUAD_TOL)
    }

    /// Draws L, without the noise.
    pub fn sample_signal<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.cumulative.last().copied().unwrap_or(0.0);
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.components.len() - 1);
        let c = &self.components[i];
        c.lo + (c.hi - c.lo) * rng.random::<f64>()
    }

    /// Draws L + eta.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_signal(rng) + self.noise.sample(rng)
    }

    /// Sample mean of -log2 p(L + eta) and its standard error.
    fn entropy_mc<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (f64, f64) {
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                let z = self.sample(rng);
                -self.density(z).log2()
            })
            .collect();
        mean_se(&vals)
    }
}

pub(crate) fn mean_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Per-class laws of a scalar deterministic representation.
pub(crate) fn class_laws(joint: &LabeledJoint, net: &Network) -> Result<Vec<OutputLaw>> {
    if is_atomic(joint) {
        if net.output_dim() != 1 {
            return Err(Error::Unsupported(format!(
                "noisy cost on a representation of width {}",
                net.output_dim()
            )));
        }
        Ok(atomic_outputs(joint, net)?
            .into_iter()
            .map(|atoms| OutputLaw {
                atoms: merge_atoms(atoms.into_iter().map(|(v, m)| (v[0], m)).collect()),
                parts: Vec::new(),
            })
            .collect())
    } else {
        scalar_output_laws(joint, net)
    }
}

/// Per-class noisy laws and the marginal, all with the given noise.
pub(crate) fn class_mixtures(
    joint: &LabeledJoint,
    laws: &[OutputLaw],
    noise: NoiseSpec,
) -> Result<(Vec<NoisyMixture>, NoisyMixture)> {
    let classes = laws
        .iter()
        .map(|l| NoisyMixture::from_law(l, noise))
        .collect::<Result<Vec<_>>>()?;
    let priors = joint.priors();
    let parts: Vec<(f64, &NoisyMixture)> = priors.iter().copied().zip(&classes).collect();
    let marginal = NoisyMixture::mixture(&parts)?;
    Ok((classes, marginal))
}

/// I(X; L + eta) and I(Y; L + eta') for the noise-free representation L.
///
/// Entropies come from quadrature of the exact mixture densities; beyond
/// [`EXACT_COMPONENT_LIMIT`] components they are estimated from `n_mc` draws
/// and reported with standard errors.
pub fn ib_noisy(
    joint: &LabeledJoint,
    net: &Network,
    eta: NoiseSpec,
    eta_prime: NoiseSpec,
    beta: f64,
    n_mc: usize,
    seed: Option<u64>,
) -> Result<CostReport> {
    check_beta(beta)?;
    let net = net.without_noise();
    let laws = class_laws(joint, &net)?;
    let priors = joint.priors();
    let (_, marg) = class_mixtures(joint, &laws, eta)?;
    let (classes_p, marg_p) = class_mixtures(joint, &laws, eta_prime)?;

    if marg.len().max(marg_p.len()) <= EXACT_COMPONENT_LIMIT {
        let compression = if marg.len() == 1 && single_atom(&marg) {
            0.0
        } else {
            marg.entropy_bits() - eta.entropy_bits()
        };
        let h_cond: f64 = priors
            .iter()
            .zip(&classes_p)
            .map(|(p, m)| p * m.entropy_bits())
            .sum();
        let h_y = entropy_of(priors.iter().copied());
        let precision = (marg_p.entropy_bits() - h_cond).clamp(0.0, h_y);
        return Ok(CostReport::exact(
            "noisy",
            beta,
            InfoValue::bits(compression.max(0.0)),
            InfoValue::bits(precision),
        ));
    }

    let seed = seed.ok_or(Error::MissingSeed)?;
    if n_mc < 2 {
        return Err(Error::InvalidParameter("n_mc must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, h_se) = marg.entropy_mc(n_mc, &mut rng);
    let (hp, hp_se) = marg_p.entropy_mc(n_mc, &mut rng);
    let mut h_cond = 0.0;
    let mut var_cond = 0.0;
    for (p, m) in priors.iter().zip(&classes_p) {
        let (hc, se) = m.entropy_mc(n_mc, &mut rng);
        h_cond += p * hc;
        var_cond += (p * se).powi(2);
    }
    let mut report = CostReport::exact(
        "noisy",
        beta,
        InfoValue::Finite(h - eta.entropy_bits()),
        InfoValue::Finite(hp - h_cond),
    );
    report.comp_se = Some(h_se);
    report.prec_se = Some((hp_se * hp_se + var_cond).sqrt());
    Ok(report)
}

fn single_atom(m: &NoisyMixture) -> bool {
    m.components.len() == 1 && m.components[0].lo == m.components[0].hi
}
