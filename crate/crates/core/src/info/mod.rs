//! Entropies, mutual information and quantization over exact measures.
//!
//! All logarithms are base 2.

mod pmf;

pub use pmf::{InfoValue, Pmf};

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dist::HybridMeasure;
use crate::error::{Error, Result};
use crate::net::{pushforward, PiecewiseLinear};

pub fn entropy<A: Ord + Clone>(p: &Pmf<A>) -> f64 {
    entropy_of(p.probs())
}

/// Shannon entropy of raw masses; zero entries are skipped.
pub fn entropy_of<I: IntoIterator<Item = f64>>(masses: I) -> f64 {
    let h: f64 = masses
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Collision (order-2 Rényi) entropy.
pub fn renyi2<A: Ord + Clone>(p: &Pmf<A>) -> f64 {
    let s: f64 = p.probs().map(|q| q * q).sum();
    (-s.log2()).max(0.0)
}

/// Cube quantizer x -> floor(m (x - origin)).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec {
    pub m: u32,
    /// Per-coordinate origin; empty means all zeros.
    pub origin: Vec<f64>,
}

impl QuantizerSpec {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("quantizer resolution must be >= 1".into()));
        }
        Ok(Self { m, origin: Vec::new() })
    }

    pub fn with_origin(m: u32, origin: Vec<f64>) -> Result<Self> {
        let mut q = Self::new(m)?;
        q.origin = origin;
        Ok(q)
    }

    pub fn origin_at(&self, coord: usize) -> f64 {
        self.origin.get(coord).copied().unwrap_or(0.0)
    }

    /// Scaled coordinate m (x - o), snapped to an integer when within rounding noise.
    fn scaled(&self, x: f64, coord: usize) -> f64 {
        let t = self.m as f64 * (x - self.origin_at(coord));
        let r = t.round();
        if (t - r).abs() <= 1e-9 * t.abs().max(1.0) {
            r
        } else {
            t
        }
    }

    pub fn cell(&self, x: f64, coord: usize) -> i64 {
        self.scaled(x, coord).floor() as i64
    }

    /// Cells met by [lo, hi] with the fraction of the interval in each.
    pub fn interval_cells(&self, lo: f64, hi: f64, coord: usize) -> Vec<(i64, f64)> {
        let t0 = self.scaled(lo, coord);
        let t1 = self.scaled(hi, coord);
        if t1 <= t0 {
            return vec![(t0.floor() as i64, 1.0)];
        }
        let k0 = t0.floor() as i64;
        let k1 = t1.ceil() as i64;
        let width = t1 - t0;
        (k0..k1)
            .filter_map(|k| {
                let a = t0.max(k as f64);
                let b = t1.min((k + 1) as f64);
                (b > a).then(|| (k, (b - a) / width))
            })
            .collect()
    }
}

/// Exact cell probabilities of a measure under a cube quantizer.
pub fn quantize_measure(mu: &HybridMeasure, q: &QuantizerSpec) -> Result<Pmf<Vec<i64>>> {
    let dim = mu.dim();
    let mut entries: Vec<(Vec<i64>, f64)> = Vec::new();
    for p in mu.points() {
        let key = (0..dim).map(|c| q.cell(p.location[c], c)).collect();
        entries.push((key, p.mass));
    }
    for piece in mu.pieces() {
        let per_coord: Vec<Vec<(i64, f64)>> = piece
            .bounds
            .iter()
            .enumerate()
            .map(|(c, &(lo, hi))| q.interval_cells(lo, hi, c))
            .collect();
        let mut idx = vec![0usize; dim];
        'cells: loop {
            let mut key = Vec::with_capacity(dim);
            let mut frac = piece.mass;
            for c in 0..dim {
                let (k, f) = per_coord[c][idx[c]];
                key.push(k);
                frac *= f;
            }
            entries.push((key, frac));
            let mut c = 0;
            loop {
                if c == dim {
                    break 'cells;
                }
                idx[c] += 1;
                if idx[c] < per_coord[c].len() {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
        }
    }
    Pmf::new(entries)
}

/// I(Y;L) for finite L given per-class conditional pmfs and priors.
pub fn mi_discrete<Y, A: Ord + Clone>(joint: &[(Y, f64, Pmf<A>)]) -> f64 {
    let mut marginal: BTreeMap<&A, f64> = BTreeMap::new();
    for (_, prior, p) in joint {
        for (a, q) in p.entries() {
            *marginal.entry(a).or_insert(0.0) += prior * q;
        }
    }
    let mut mi = 0.0;
    for (_, prior, p) in joint {
        for (a, q) in p.entries() {
            mi += prior * q * (q / marginal[a]).log2();
        }
    }
    let h_y = entropy_of(joint.iter().map(|j| j.1));
    mi.clamp(0.0, h_y)
}

/// I(X; f(X)) for a deterministic scalar map: H(f(X)) if the image is atomic,
/// otherwise Infinite.
pub fn mi_input_representation(mu_x: &HybridMeasure, f: &PiecewiseLinear) -> Result<InfoValue> {
    let image = pushforward(f, mu_x)?;
    if image.is_atomic() {
        Ok(InfoValue::bits(entropy_of(image.points().iter().map(|p| p.mass))))
    } else {
        Ok(InfoValue::Infinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionRow {
    pub m: u32,
    pub shannon_slope: f64,
    pub renyi2_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    pub rows: Vec<DimensionRow>,
}

/// Quantized Shannon and collision entropies divided by log2 m.
pub fn dimension_slopes(mu: &HybridMeasure, m_list: &[u32]) -> Result<DimensionReport> {
    if m_list.iter().any(|&m| m < 2) {
        return Err(Error::InvalidParameter("resolutions must be >= 2".into()));
    }
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("resolutions must be increasing".into()));
    }
    let rows = m_list
        .par_iter()
        .map(|&m| {
            let p = quantize_measure(mu, &QuantizerSpec::new(m)?)?;
            let lm = (m as f64).log2();
            Ok(DimensionRow {
                m,
                shannon_slope: entropy(&p) / lm,
                renyi2_slope: renyi2(&p) / lm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DimensionReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{PointMass, UniformPiece};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pmf(ps: &[f64]) -> Pmf<usize> {
        Pmf::new(ps.iter().copied().enumerate().collect()).unwrap()
    }

    fn binary_entropy(p: f64) -> f64 {
        -(p * p.log2()) - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&pmf(&[0.2, 0.8])), 0.721928, epsilon = 1e-6);
        assert_eq!(entropy(&pmf(&[1.0])), 0.0);
        assert_abs_diff_eq!(entropy(&pmf(&[0.2, 0.4, 0.4])), 1.521928, epsilon = 1e-6);
    }

    #[test]
    fn renyi_examples() {
        assert_abs_diff_eq!(renyi2(&pmf(&[0.25; 4])), 2.0, epsilon = 1e-15);
        assert_eq!(renyi2(&pmf(&[1.0])), 0.0);
        let expected = -(0.04f64 + 0.16 + 0.09 + 0.01).log2();
        assert_abs_diff_eq!(renyi2(&pmf(&[0.2, 0.4, 0.3, 0.1])), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 1.737, epsilon = 1e-3);
    }

    #[test]
    fn quantize_point_and_uniform() {
        let q10 = QuantizerSpec::new(10).unwrap();
        let p = quantize_measure(&HybridMeasure::point(vec![0.37]).unwrap(), &q10).unwrap();
        assert_eq!(p.entries(), &[(vec![3], 1.0)]);
        let u = HybridMeasure::uniform(vec![(0.0, 1.0)]).unwrap();
        let p = quantize_measure(&u, &QuantizerSpec::new(4).unwrap()).unwrap();
        assert_eq!(p.len(), 4);
        for (_, q) in p.entries() {
            assert_abs_diff_eq!(*q, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn quantize_piecewise_uniform_by_intersection() {
        let bands = [(0.0, 1.0, 0.2), (1.5, 2.5, 0.4), (3.0, 3.5, 0.3), (4.0, 4.75, 0.1)];
        let mu = HybridMeasure::new(
            vec![],
            bands
                .iter()
                .map(|&(lo, hi, mass)| UniformPiece {
                    bounds: vec![(lo, hi)],
                    mass,
                })
                .collect(),
        )
        .unwrap();
        let p = quantize_measure(&mu, &QuantizerSpec::new(2).unwrap()).unwrap();
        // Oracle: mass times overlap length of each band with each half-unit cell.
        let mut expected = BTreeMap::new();
        for &(lo, hi, mass) in &bands {
            for k in 0..10i64 {
                let (a, b) = (k as f64 / 2.0, (k + 1) as f64 / 2.0);
                let overlap = (hi.min(b) - lo.max(a)).max(0.0);
                if overlap > 0.0 {
                    *expected.entry(k).or_insert(0.0) += mass * overlap / (hi - lo);
                }
            }
        }
        assert_eq!(p.len(), expected.len());
        for (k, q) in p.entries() {
            assert_abs_diff_eq!(*q, expected[&k[0]], epsilon = 1e-15);
        }
        let masses: Vec<f64> = p.probs().collect();
        let by_hand = [0.1, 0.1, 0.2, 0.2, 0.3, 0.1 * 2.0 / 3.0, 0.1 / 3.0];
        assert_eq!(masses.len(), by_hand.len());
        for (a, b) in masses.iter().zip(by_hand) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn quantizer_snaps_rounding_noise() {
        let q = QuantizerSpec::new(100).unwrap();
        assert_eq!(q.cell(0.29, 0), 29);
        assert_eq!(q.cell(0.57, 0), 57);
    }

    #[test]
    fn mi_examples() {
        let same = vec![(0u32, 0.5, pmf(&[0.3, 0.7])), (1, 0.5, pmf(&[0.3, 0.7]))];
        assert_abs_diff_eq!(mi_discrete(&same), 0.0, epsilon = 1e-15);
        let ident = vec![
            (0u32, 0.5, Pmf::new(vec![(0usize, 1.0)]).unwrap()),
            (1, 0.5, Pmf::new(vec![(1usize, 1.0)]).unwrap()),
        ];
        assert_abs_diff_eq!(mi_discrete(&ident), 1.0, epsilon = 1e-15);
        let bsc = vec![
            (0u32, 0.5, pmf(&[0.8, 0.2])),
            (1, 0.5, pmf(&[0.2, 0.8])),
        ];
        assert_abs_diff_eq!(mi_discrete(&bsc), 1.0 - binary_entropy(0.2), epsilon = 1e-12);
    }

    #[test]
    fn dimension_of_square_and_atom() {
        let sq = HybridMeasure::uniform(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let ms: Vec<u32> = (1..=6).map(|k| 1 << k).collect();
        for row in dimension_slopes(&sq, &ms).unwrap().rows {
            assert_abs_diff_eq!(row.shannon_slope, 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(row.renyi2_slope, 2.0, epsilon = 1e-12);
        }
        let atom = HybridMeasure::new(
            vec![PointMass {
                location: vec![0.3, 0.9],
                mass: 1.0,
            }],
            vec![],
        )
        .unwrap();
        for row in dimension_slopes(&atom, &ms).unwrap().rows {
            assert_eq!(row.shannon_slope, 0.0);
            assert_eq!(row.renyi2_slope, 0.0);
        }
        assert!(dimension_slopes(&atom, &[1, 2]).is_err());
        assert!(dimension_slopes(&atom, &[4, 2]).is_err());
    }

    fn weights() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, 1..12)
    }

    fn normalized(w: &[f64]) -> Pmf<usize> {
        Pmf::from_weights(w.iter().copied().enumerate().collect()).unwrap()
    }

    proptest! {
        #[test]
        fn renyi_below_shannon(w in weights()) {
            let p = normalized(&w);
            prop_assert!(renyi2(&p) <= entropy(&p) + 1e-12);
        }

        #[test]
        fn mi_bounded_and_invariant(
            a in weights(), seed in 0usize..1000, prior in 0.05f64..0.95
        ) {
            let n = a.len();
            let b: Vec<f64> = (0..n).map(|i| ((i * 7 + seed) % 11 + 1) as f64).collect();
            let joint = vec![(0u32, prior, normalized(&a)), (1u32, 1.0 - prior, normalized(&b))];
            let mi = mi_discrete(&joint);
            let h_y = binary_entropy(prior);
            let marginal: Vec<f64> = (0..n)
                .map(|i| prior * joint[0].2.prob(&i) + (1.0 - prior) * joint[1].2.prob(&i))
                .collect();
            prop_assert!(mi >= 0.0);
            prop_assert!(mi <= h_y.min(entropy_of(marginal)) + 1e-12);

            // Injective relabeling leaves MI unchanged.
            let relabeled: Vec<_> = joint
                .iter()
                .map(|(y, p, q)| (*y, *p, q.map_atoms(|&i| 1000 - 3 * i as i64)))
                .collect();
            prop_assert!((mi_discrete(&relabeled) - mi).abs() < 1e-12);

            // Coarsening never increases MI.
            let coarse: Vec<_> = joint
                .iter()
                .map(|(y, p, q)| (*y, *p, q.map_atoms(|&i| (i + seed) % 3)))
                .collect();
            prop_assert!(mi_discrete(&coarse) <= mi + 1e-12);
        }

        #[test]
        fn quantization_mass_and_refinement(
            lo in -2.0f64..2.0, width in 0.01f64..3.0, m in 1u32..20, k in 2u32..4
        ) {
            let mu = HybridMeasure::uniform(vec![(lo, lo + width)]).unwrap();
            let coarse = quantize_measure(&mu, &QuantizerSpec::new(m).unwrap()).unwrap();
            let fine = quantize_measure(&mu, &QuantizerSpec::new(m * k).unwrap()).unwrap();
            let total: f64 = coarse.probs().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(entropy(&fine) >= entropy(&coarse) - 1e-12);
        }
    }
}
