use super::{
    atomic_outputs, cluster_scalar_atoms, cluster_vector_atoms, discrete_terms, is_atomic,
    require_deterministic, scalar_output_laws, CostReport, CostSpec,
};
use crate::dist::LabeledJoint;
use crate::error::Result;
use crate::info::{entropy_of, InfoValue};
use crate::net::{MappedPart, Network, OutputLaw};
use crate::quad::integrate_split;

/// Unremedied cost of a deterministic network: I(X;L) = H(L) when L is atomic,
/// Infinite as soon as L has a continuous component.
pub fn ib_raw(joint: &LabeledJoint, net: &Network, spec: &CostSpec) -> Result<CostReport> {
    require_deterministic(net)?;
    let priors = joint.priors();
    let n = priors.len();
    if is_atomic(joint) {
        let outputs = atomic_outputs(joint, net)?;
        let pooled = outputs
            .into_iter()
            .enumerate()
            .flat_map(|(c, atoms)| {
                let p = priors[c];
                atoms.into_iter().map(move |(v, m)| (v, c, p * m))
            })
            .collect();
        let clusters = cluster_vector_atoms(pooled, n);
        let (h_l, mi) = discrete_terms(&clusters, &priors);
        return Ok(CostReport::exact(
            "raw",
            spec.beta,
            InfoValue::bits(h_l),
            InfoValue::bits(mi),
        ));
    }
    let laws = scalar_output_laws(joint, net)?;
    let compression = if laws.iter().all(|l| l.is_atomic()) {
        let pooled = pooled_atoms(&laws, &priors);
        let clusters = cluster_scalar_atoms(pooled, n);
        InfoValue::bits(entropy_of(clusters.iter().map(|c| c.iter().sum::<f64>())))
    } else {
        InfoValue::Infinite
    };
    let precision = InfoValue::bits(hybrid_precision(&priors, &laws));
    Ok(CostReport::exact("raw", spec.beta, compression, precision))
}

fn pooled_atoms(laws: &[OutputLaw], priors: &[f64]) -> Vec<(f64, usize, f64)> {
    laws.iter()
        .enumerate()
        .flat_map(|(c, l)| l.atoms.iter().map(move |&(v, m)| (v, c, priors[c] * m)))
        .collect()
}

/// I(Y;L) for a scalar L with atoms and continuous parts, per-class laws given.
///
/// Atoms and the absolutely continuous part are handled separately; only
/// stretches where at least two classes have density contribute to H(Y|L).
pub fn hybrid_precision(priors: &[f64], laws: &[OutputLaw]) -> f64 {
    let n = priors.len();
    let h_y = entropy_of(priors.iter().copied());
    let clusters = cluster_scalar_atoms(pooled_atoms(laws, priors), n);
    let mut h_cond: f64 = clusters
        .iter()
        .map(|c| {
            let m: f64 = c.iter().sum();
            m * entropy_of(c.iter().map(|v| v / m))
        })
        .sum();

    let parts: Vec<(usize, &MappedPart)> = laws
        .iter()
        .enumerate()
        .flat_map(|(c, l)| l.parts.iter().map(move |p| (c, p)))
        .collect();
    if !parts.is_empty() {
        let mut edges: Vec<f64> = Vec::new();
        for (_, p) in &parts {
            let (a, b) = p.image();
            edges.push(a);
            edges.push(b);
            edges.extend(p.image_kinks());
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        for w in edges.windows(2) {
            let (e0, e1) = (w[0], w[1]);
            if !(e1 > e0) {
                continue;
            }
            let active: Vec<&(usize, &MappedPart)> = parts
                .iter()
                .filter(|(_, p)| {
                    let (a, b) = p.image();
                    a <= e0 && b >= e1
                })
                .collect();
            let first = match active.first() {
                Some(a) => a.0,
                None => continue,
            };
            if active.iter().all(|a| a.0 == first) {
                continue;
            }
            let integrand = |y: f64| {
                let mut d = vec![0.0; n];
                for (c, p) in &active {
                    d[*c] += priors[*c] * p.density(y);
                }
                let total: f64 = d.iter().sum();
                if total > 0.0 {
                    total * entropy_of(d.iter().map(|v| v / total))
                } else {
                    0.0
                }
            };
            if active.iter().all(|a| a.1.has_constant_density()) {
                h_cond += (e1 - e0) * integrand(0.5 * (e0 + e1));
            } else {
                h_cond += integrate_split(&integrand, e0, e1, &[], 1e-12);
            }
        }
    }
    (h_y - h_cond).clamp(0.0, h_y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{ClassConditional, HybridMeasure, PointMass, UniformPiece};
    use crate::ibcost::Variant;
    use crate::net::{ActivationKind, LayerParams, NoiseSpec, PiecewiseLinear};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec() -> CostSpec {
        CostSpec::new(Variant::Raw, 2.0).unwrap()
    }

    fn clip_net(a: f64, b: f64) -> Network {
        Network::new(vec![
            LayerParams::new(
                vec![vec![1.0, 1.0]],
                vec![-a, -a - b],
                ActivationKind::Relu,
                NoiseSpec::None,
            )
            .unwrap(),
            LayerParams::new(
                vec![vec![1.0], vec![-1.0]],
                vec![0.0],
                ActivationKind::Identity,
                NoiseSpec::None,
            )
            .unwrap(),
        ])
        .unwrap()
    }

    fn class(label: u32, prior: f64, m: HybridMeasure) -> ClassConditional {
        ClassConditional {
            label,
            prior,
            conditional: m,
        }
    }

    fn pts(xs: &[(f64, f64)]) -> HybridMeasure {
        HybridMeasure::new(
            xs.iter()
                .map(|&(x, m)| PointMass {
                    location: vec![x],
                    mass: m,
                })
                .collect(),
            vec![],
        )
        .unwrap()
    }

    fn bands(xs: &[(f64, f64, f64)]) -> HybridMeasure {
        HybridMeasure::new(
            vec![],
            xs.iter()
                .map(|&(lo, hi, m)| UniformPiece {
                    bounds: vec![(lo, hi)],
                    mass: m,
                })
                .collect(),
        )
        .unwrap()
    }

    fn discrete_joint() -> LabeledJoint {
        LabeledJoint::new(vec![
            class(0, 0.6, pts(&[(0.3, 0.2 / 0.6), (1.7, 0.4 / 0.6)])),
            class(1, 0.4, pts(&[(3.1, 0.3 / 0.4), (4.5, 0.1 / 0.4)])),
        ])
        .unwrap()
    }

    #[test]
    fn discrete_compression_at_known_offset() {
        let r = ib_raw(&discrete_joint(), &clip_net(3.1, 0.25), &spec()).unwrap();
        assert_abs_diff_eq!(r.compression.finite().unwrap(), 0.468996, epsilon = 1e-6);
    }

    #[test]
    fn continuous_ramp_is_infinite() {
        let joint = LabeledJoint::new(vec![
            class(0, 0.6, bands(&[(0.0, 1.0, 0.2 / 0.6), (1.5, 2.5, 0.4 / 0.6)])),
            class(1, 0.4, bands(&[(3.0, 3.5, 0.75), (4.0, 4.75, 0.25)])),
        ])
        .unwrap();
        let r = ib_raw(&joint, &clip_net(2.0, 0.25), &spec()).unwrap();
        assert_eq!(r.compression, InfoValue::Infinite);
        assert_eq!(r.total, InfoValue::Infinite);
        assert!(r.precision.is_finite());
    }

    #[test]
    fn constant_network_costs_nothing() {
        let net = Network::new(vec![LayerParams::new(
            vec![vec![0.0]],
            vec![0.7],
            ActivationKind::Relu,
            NoiseSpec::None,
        )
        .unwrap()])
        .unwrap();
        let joint = LabeledJoint::new(vec![
            class(0, 0.5, bands(&[(0.0, 1.0, 1.0)])),
            class(1, 0.5, bands(&[(2.0, 3.0, 1.0)])),
        ])
        .unwrap();
        let r = ib_raw(&joint, &net, &spec()).unwrap();
        assert_eq!(r.compression, InfoValue::Finite(0.0));
        assert_eq!(r.precision, InfoValue::Finite(0.0));
        assert_eq!(r.total, InfoValue::Finite(0.0));
    }

    #[test]
    fn overlapping_uniform_classes() {
        // Class 0 on [0,2], class 1 on [1,3], priors 1/2: H(Y|L) is 1 bit on [1,2].
        let net = Network::new(vec![LayerParams::new(
            vec![vec![1.0]],
            vec![0.0],
            ActivationKind::Identity,
            NoiseSpec::None,
        )
        .unwrap()])
        .unwrap();
        let joint = LabeledJoint::new(vec![
            class(0, 0.5, bands(&[(0.0, 2.0, 1.0)])),
            class(1, 0.5, bands(&[(1.0, 3.0, 1.0)])),
        ])
        .unwrap();
        let r = ib_raw(&joint, &net, &spec()).unwrap();
        assert_abs_diff_eq!(r.precision.finite().unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn triangular_overlap_matches_quadrature() {
        // L = X1 + X2 with class boxes whose sums overlap on [0.5, 1].
        let unit = HybridMeasure::uniform(vec![(0.0, 0.5), (0.0, 0.5)]).unwrap();
        let shifted = HybridMeasure::uniform(vec![(0.25, 0.75), (0.25, 0.75)]).unwrap();
        let joint = LabeledJoint::new(vec![class(0, 0.5, unit), class(1, 0.5, shifted)]).unwrap();
        let net = Network::new(vec![LayerParams::new(
            vec![vec![1.0], vec![1.0]],
            vec![0.0],
            ActivationKind::Identity,
            NoiseSpec::None,
        )
        .unwrap()])
        .unwrap();
        let r = ib_raw(&joint, &net, &spec()).unwrap();
        // Oracle: triangle densities on [0,1] and [0.5,1.5] with peak 2.
        let tri = |t: f64, a: f64| {
            let u = t - a;
            if u <= 0.0 || u >= 1.0 {
                0.0
            } else {
                4.0 * u.min(1.0 - u)
            }
        };
        let mut h = 0.0;
        let steps = 200_000;
        for i in 0..steps {
            let t = 0.5 + (i as f64 + 0.5) / steps as f64 * 0.5;
            let (d0, d1) = (0.5 * tri(t, 0.0), 0.5 * tri(t, 0.5));
            let s = d0 + d1;
            h += 0.5 / steps as f64 * s * entropy_of([d0 / s, d1 / s]);
        }
        assert_abs_diff_eq!(r.precision.finite().unwrap(), 1.0 - h, epsilon = 1e-8);
    }

    fn increasing_knots() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.1f64..1.5, 0.1f64..3.0), 1..6).prop_map(|steps| {
            let mut knots = vec![(-1.0, -2.0)];
            for (dx, s) in steps {
                let (x, y) = *knots.last().unwrap();
                knots.push((x + dx, y + s * dx));
            }
            knots
        })
    }

    /// Appends g(u) = y0 + (u - x0) + sum_k (s_k - s_{k-1}) relu(u - x_k), the
    /// increasing interpolation of `knots` with slope 1 outside them. The first
    /// hidden unit carries u itself through relu(u + BIG) - BIG.
    fn compose_increasing(inner: &Network, knots: &[(f64, f64)]) -> Network {
        const BIG: f64 = 1e3;
        let mut slopes = vec![1.0];
        for w in knots.windows(2) {
            slopes.push((w[1].1 - w[0].1) / (w[1].0 - w[0].0));
        }
        slopes.push(1.0);
        let mut w_in = vec![1.0];
        let mut bias_hidden = vec![BIG];
        let mut w_out = vec![vec![1.0]];
        for (i, &(x, _)) in knots.iter().enumerate() {
            w_in.push(1.0);
            bias_hidden.push(-x);
            w_out.push(vec![slopes[i + 1] - slopes[i]]);
        }
        let mut layers = inner.layers().to_vec();
        layers.push(LayerParams::new(vec![w_in], bias_hidden, ActivationKind::Relu, NoiseSpec::None).unwrap());
        layers.push(
            LayerParams::new(
                w_out,
                vec![knots[0].1 - knots[0].0 - BIG],
                ActivationKind::Identity,
                NoiseSpec::None,
            )
            .unwrap(),
        );
        Network::new(layers).unwrap()
    }

    proptest! {
        #[test]
        fn increasing_reparameterization_preserves_cost(
            knots in increasing_knots(), a in 0.0f64..4.0
        ) {
            let inner = clip_net(a, 0.25);
            let outer = compose_increasing(&inner, &knots);
            // Sanity: the composed net is the increasing map of the inner output.
            let g = PiecewiseLinear::from_knots((-10.0, 10.0), &knots).unwrap();
            let u = inner.output(&[1.0])[0];
            if u >= knots[0].0 && u <= knots[knots.len() - 1].0 {
                prop_assert!((outer.output(&[1.0])[0] - g.eval(u)).abs() < 1e-9);
            }
            for joint in [discrete_joint(), LabeledJoint::new(vec![
                class(0, 0.6, bands(&[(0.0, 1.0, 0.2 / 0.6), (1.5, 2.5, 0.4 / 0.6)])),
                class(1, 0.4, bands(&[(3.0, 3.5, 0.75), (4.0, 4.75, 0.25)])),
            ]).unwrap()] {
                let r0 = ib_raw(&joint, &inner, &spec()).unwrap();
                let r1 = ib_raw(&joint, &outer, &spec()).unwrap();
                match (r0.compression, r1.compression) {
                    (InfoValue::Finite(x), InfoValue::Finite(y)) => prop_assert!((x - y).abs() < 1e-9),
                    (x, y) => prop_assert_eq!(x, y),
                }
                let (p0, p1) = (r0.precision.finite().unwrap(), r1.precision.finite().unwrap());
                prop_assert!((p0 - p1).abs() < 1e-9);
            }
        }

        #[test]
        fn precision_never_exceeds_label_entropy(a in -1.0f64..5.0, b in 0.05f64..3.0) {
            let joint = LabeledJoint::new(vec![
                class(0, 0.6, bands(&[(0.0, 1.0, 0.2 / 0.6), (1.5, 2.5, 0.4 / 0.6)])),
                class(1, 0.4, bands(&[(3.0, 3.5, 0.75), (4.0, 4.75, 0.25)])),
            ]).unwrap();
            let r = ib_raw(&joint, &clip_net(a, b), &spec()).unwrap();
            let h_y = entropy_of([0.6, 0.4]);
            let p = r.precision.finite().unwrap();
            prop_assert!(p >= 0.0 && p <= h_y + 1e-9);
        }
    }
}
