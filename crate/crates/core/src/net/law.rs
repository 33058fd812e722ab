//! Laws of scalar projections z = v.X and their images under piecewise-linear maps.

use super::pwl::{network_pwls, Affine, PiecewiseLinear};
use super::{LayerParams, Network};
use crate::dist::{HybridMeasure, PointMass, UniformPiece};
use crate::error::{Error, Result};
use crate::tol::{ATOM_TOL, GEOM_TOL, SLOPE_TOL};

/// Absolutely continuous component of a scalar law, carrying `mass`.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousPart {
    Uniform { lo: f64, hi: f64, mass: f64 },
    /// offset + U[0,w_1] + ... + U[0,w_k] with independent summands, k >= 2.
    Sum { offset: f64, widths: Vec<f64>, mass: f64 },
}

impl ContinuousPart {
    pub fn mass(&self) -> f64 {
        match self {
            Self::Uniform { mass, .. } | Self::Sum { mass, .. } => *mass,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Uniform { lo, hi, .. } => (*lo, *hi),
            Self::Sum { offset, widths, .. } => (*offset, offset + widths.iter().sum::<f64>()),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Self::Uniform { .. })
    }

    /// Fraction of this part's mass below t.
    pub fn cdf(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t <= lo {
            return 0.0;
        }
        if t >= hi {
            return 1.0;
        }
        match self {
            Self::Uniform { .. } => (t - lo) / (hi - lo),
            Self::Sum { offset, widths, .. } => {
                let mid = 0.5 * (lo + hi);
                if t > mid {
                    1.0 - sum_cdf(2.0 * mid - t - offset, widths)
                } else {
                    sum_cdf(t - offset, widths)
                }
            }
        }
    }

    /// Normalized density.
    pub fn pdf(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t < lo || t > hi {
            return 0.0;
        }
        match self {
            Self::Uniform { .. } => 1.0 / (hi - lo),
            Self::Sum { offset, widths, .. } => sum_pdf(t - offset, widths),
        }
    }

    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.mass() * (self.cdf(b) - self.cdf(a)).max(0.0)
    }

    /// Points where the density is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::Uniform { lo, hi, .. } => vec![*lo, *hi],
            Self::Sum { offset, widths, .. } => {
                let mut out: Vec<f64> = subset_sums(widths)
                    .into_iter()
                    .map(|(s, _)| offset + s)
                    .collect();
                out.sort_by(f64::total_cmp);
                out.dedup();
                out
            }
        }
    }
}

fn subset_sums(widths: &[f64]) -> Vec<(f64, usize)> {
    let k = widths.len();
    (0..1usize << k)
        .map(|mask| {
            let s = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| widths[i]).sum();
            (s, mask.count_ones() as usize)
        })
        .collect()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn sum_cdf(u: f64, widths: &[f64]) -> f64 {
    let k = widths.len();
    let norm = factorial(k) * widths.iter().product::<f64>();
    let s: f64 = subset_sums(widths)
        .into_iter()
        .map(|(c, n)| {
            let d = (u - c).max(0.0);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sign * d.powi(k as i32)
        })
        .sum();
    (s / norm).clamp(0.0, 1.0)
}

fn sum_pdf(u: f64, widths: &[f64]) -> f64 {
    let k = widths.len();
    let norm = factorial(k - 1) * widths.iter().product::<f64>();
    let s: f64 = subset_sums(widths)
        .into_iter()
        .map(|(c, n)| {
            let d = (u - c).max(0.0);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sign * d.powi(k as i32 - 1)
        })
        .sum();
    (s / norm).max(0.0)
}

/// Law of a scalar random variable: atoms plus continuous parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarLaw {
    pub atoms: Vec<(f64, f64)>,
    pub parts: Vec<ContinuousPart>,
}

impl ScalarLaw {
    /// Law of the only coordinate of a one-dimensional measure.
    pub fn from_measure(mu: &HybridMeasure) -> Result<Self> {
        if mu.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: mu.dim(),
            });
        }
        Ok(Self::projection(mu, &[1.0]))
    }

    /// Law of v.X; boxes touching a single active coordinate stay uniform.
    pub fn projection(mu: &HybridMeasure, v: &[f64]) -> Self {
        let atoms = mu
            .points()
            .iter()
            .map(|p| (dot(v, &p.location), p.mass))
            .collect();
        let mut out = Self {
            atoms,
            parts: Vec::new(),
        };
        for piece in mu.pieces() {
            let mut offset = 0.0;
            let mut widths = Vec::new();
            for (&(lo, hi), &vc) in piece.bounds.iter().zip(v) {
                if vc == 0.0 {
                    continue;
                }
                let (a, b) = if vc == 1.0 {
                    (lo, hi)
                } else if vc > 0.0 {
                    (vc * lo, vc * hi)
                } else {
                    (vc * hi, vc * lo)
                };
                offset += a;
                widths.push(b - a);
            }
            match widths.len() {
                0 => out.atoms.push((offset, piece.mass)),
                1 => out.parts.push(ContinuousPart::Uniform {
                    lo: offset,
                    hi: offset + widths[0],
                    mass: piece.mass,
                }),
                _ => out.parts.push(ContinuousPart::Sum {
                    offset,
                    widths,
                    mass: piece.mass,
                }),
            }
        }
        out
    }

    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(a, _) in &self.atoms {
            lo = lo.min(a);
            hi = hi.max(a);
        }
        for p in &self.parts {
            let (a, b) = p.support();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    /// Image under `f`. Flat or vanishingly short stretches become atoms.
    pub fn push(&self, f: &PiecewiseLinear) -> OutputLaw {
        let mut atoms: Vec<(f64, f64)> = self.atoms.iter().map(|&(z, m)| (f.eval(z), m)).collect();
        let mut parts = Vec::new();
        for part in &self.parts {
            let (lo, hi) = part.support();
            for (s0, s1, seg) in f.pieces_on(lo, hi) {
                let mass = part.mass_between(s0, s1);
                if !(mass > 0.0) {
                    continue;
                }
                let mid = 0.5 * (s0 + s1);
                let (y0, y1) = {
                    let (a, b) = (seg.at(s0), seg.at(s1));
                    (a.min(b), a.max(b))
                };
                let flat = seg.slope.abs() <= SLOPE_TOL
                    || s1 - s0 <= GEOM_TOL
                    || y1 - y0 <= 1e-15 * y0.abs().max(1.0);
                if flat {
                    atoms.push((seg.at(mid), mass));
                } else {
                    parts.push(MappedPart {
                        source: part.clone(),
                        window: (s0, s1),
                        map: seg,
                        mass,
                    });
                }
            }
        }
        OutputLaw {
            atoms: merge_atoms(atoms),
            parts,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sorts atoms and merges those within the atom tolerance of their neighbour.
pub(crate) fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    let mut last_value = f64::NEG_INFINITY;
    for (v, m) in atoms {
        match out.last_mut() {
            Some(last) if v - last_value <= ATOM_TOL => last.1 += m,
            _ => out.push((v, m)),
        }
        last_value = v;
    }
    out
}

/// A continuous part restricted to `window` and mapped through an affine piece.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedPart {
    pub source: ContinuousPart,
    pub window: (f64, f64),
    pub map: Affine,
    pub mass: f64,
}

impl MappedPart {
    pub fn image(&self) -> (f64, f64) {
        let a = self.map.at(self.window.0);
        let b = self.map.at(self.window.1);
        (a.min(b), a.max(b))
    }

    fn preimage(&self, y: f64) -> f64 {
        (y - self.map.intercept) / self.map.slope
    }

    /// Density (in mass per unit) of the image at y.
    pub fn density(&self, y: f64) -> f64 {
        let (lo, hi) = self.image();
        if y < lo || y > hi {
            return 0.0;
        }
        let x = self.preimage(y);
        self.source.mass() * self.source.pdf(x) / self.map.slope.abs()
    }

    pub fn has_constant_density(&self) -> bool {
        self.source.is_uniform()
    }

    /// Images of the source's kinks inside the window.
    pub fn image_kinks(&self) -> Vec<f64> {
        let (w0, w1) = self.window;
        self.source
            .kinks()
            .into_iter()
            .filter(|&k| k > w0 && k < w1)
            .map(|k| self.map.at(k))
            .collect()
    }

    /// Mass of the image inside (a, b).
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.image();
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            return 0.0;
        }
        let (xa, xb) = (self.preimage(a), self.preimage(b));
        let (x0, x1) = (xa.min(xb), xa.max(xb));
        let (x0, x1) = (x0.max(self.window.0), x1.min(self.window.1));
        self.source.mass_between(x0, x1)
    }
}

/// Law of a scalar representation: merged atoms plus mapped continuous parts.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputLaw {
    pub atoms: Vec<(f64, f64)>,
    pub parts: Vec<MappedPart>,
}

impl OutputLaw {
    pub fn is_atomic(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() + self.parts.iter().map(|p| p.mass).sum::<f64>()
    }

    /// Continuous density at y.
    pub fn density(&self, y: f64) -> f64 {
        self.parts.iter().map(|p| p.density(y)).sum()
    }

    pub fn to_measure(&self) -> Result<HybridMeasure> {
        let points = self
            .atoms
            .iter()
            .map(|&(v, m)| PointMass {
                location: vec![v],
                mass: m,
            })
            .collect();
        let pieces = self
            .parts
            .iter()
            .map(|p| {
                let (lo, hi) = p.image();
                UniformPiece {
                    bounds: vec![(lo, hi)],
                    mass: p.mass,
                }
            })
            .collect();
        HybridMeasure::from_overlapping(points, pieces)
    }
}

/// Pushforward of a one-dimensional measure through a scalar map.
pub fn pushforward(f: &PiecewiseLinear, mu: &HybridMeasure) -> Result<HybridMeasure> {
    let law = ScalarLaw::from_measure(mu)?;
    let (lo, hi) = law.support();
    let (dom_lo, dom_hi) = f.domain();
    let slack = 1e-12 * (1.0 + dom_lo.abs().max(dom_hi.abs()));
    if lo < dom_lo - slack || hi > dom_hi + slack {
        return Err(Error::SupportOutsideDomain {
            lo,
            hi,
            dom_lo,
            dom_hi,
        });
    }
    let out = law.push(f);
    if out.parts.iter().any(|p| !p.has_constant_density()) {
        return Err(Error::Unsupported("non-uniform image density".into()));
    }
    out.to_measure()
}

/// A network whose first layer reads X only through one direction v.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneReduction {
    pub direction: Vec<f64>,
    /// Set when v is a coordinate axis.
    pub axis: Option<usize>,
    /// Equivalent network on the scalar input z = v.x.
    pub net: Network,
}

/// Finds v with every first-layer weight column a multiple of v.
pub fn reduce_rank_one(net: &Network) -> Result<RankOneReduction> {
    let first = &net.layers()[0];
    let n = first.input_width();
    let h = first.output_width();
    let active: Vec<usize> = (0..n)
        .filter(|&i| first.weights[i].iter().any(|&w| w != 0.0))
        .collect();
    let (direction, axis, lambdas) = if active.len() <= 1 {
        let c = active.first().copied().unwrap_or(0);
        let mut v = vec![0.0; n];
        v[c] = 1.0;
        (v, Some(c), first.weights[c].clone())
    } else {
        let col = |j: usize| -> Vec<f64> { (0..n).map(|i| first.weights[i][j]).collect() };
        let v = (0..h)
            .map(col)
            .find(|c| c.iter().any(|&w| w != 0.0))
            .expect("some column is nonzero");
        let vv = dot(&v, &v);
        let mut lambdas = Vec::with_capacity(h);
        for j in 0..h {
            let w = col(j);
            let lam = dot(&w, &v) / vv;
            let scale = w.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            if w.iter().zip(&v).any(|(wi, vi)| (wi - lam * vi).abs() > 1e-12 * scale) {
                return Err(Error::MultivariateDependence);
            }
            lambdas.push(lam);
        }
        (v, None, lambdas)
    };
    let mut layers = net.layers().to_vec();
    layers[0] = LayerParams {
        weights: vec![lambdas],
        biases: first.biases.clone(),
        activation: first.activation,
        noise: first.noise,
    };
    Ok(RankOneReduction {
        direction,
        axis,
        net: Network::new(layers)?,
    })
}

impl RankOneReduction {
    pub fn law(&self, mu: &HybridMeasure) -> ScalarLaw {
        match self.axis {
            Some(c) => {
                let mut v = vec![0.0; mu.dim()];
                v[c] = 1.0;
                ScalarLaw::projection(mu, &v)
            }
            None => ScalarLaw::projection(mu, &self.direction),
        }
    }

    /// Piecewise-linear outputs on z; the final activation is left off if asked.
    pub fn pwls(&self, domain: (f64, f64), skip_final_activation: bool) -> Result<Vec<PiecewiseLinear>> {
        network_pwls(&self.net, 0, domain, skip_final_activation)
    }
}
