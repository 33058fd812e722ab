use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::info::{entropy_of, Pmf};

/// (D(p||q), C(p||q)) in bits for pmfs over the same alphabet.
pub fn divergences<A: Ord + Clone>(p: &Pmf<A>, q: &Pmf<A>) -> Result<(f64, f64)> {
    let mut kl = 0.0;
    let mut ce = 0.0;
    for (i, (a, pa)) in p.entries().iter().enumerate() {
        let qa = q.prob(a);
        if !(qa > 0.0) {
            return Err(Error::AbsoluteContinuityViolation(i));
        }
        kl += pa * (pa / qa).log2();
        ce -= pa * qa.log2();
    }
    Ok((kl.max(0.0), ce))
}

/// Every quantity of the variational chain for a finite (Y, L) joint, a decoder
/// L -> Ytilde and a rule q(y | ytilde).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub i_y_l: f64,
    pub i_y_ytilde: f64,
    pub h_y: f64,
    /// C(P_{Y|L} || Q_{Y|L}) with Q_{Y|L} = sum_t P(t|l) q(y|t).
    pub cross_entropy_l: f64,
    /// Expected -log q(Y | Ytilde).
    pub cross_entropy_ytilde: f64,
    pub lower_bound: f64,
    pub deterministic: bool,
}

impl BoundReport {
    /// I(Y;L) >= I(Y;Ytilde) >= H(Y) - C_L, each up to `slack`.
    pub fn chain_holds(&self, slack: f64) -> bool {
        self.i_y_l + slack >= self.i_y_ytilde && self.i_y_ytilde + slack >= self.lower_bound
    }

    /// C_Ytilde - C_L; nonnegative, and zero for deterministic decoders.
    pub fn jensen_gap(&self) -> f64 {
        self.cross_entropy_ytilde - self.cross_entropy_l
    }

    pub const CSV_HEADER: &'static str =
        "i_y_l,i_y_ytilde,h_y,cross_entropy_l,cross_entropy_ytilde,lower_bound,deterministic";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            self.i_y_l,
            self.i_y_ytilde,
            self.h_y,
            self.cross_entropy_l,
            self.cross_entropy_ytilde,
            self.lower_bound,
            self.deterministic
        )
    }
}

fn mutual_information(joint: &[Vec<f64>]) -> f64 {
    let rows: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..joint[0].len()).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let h_xy = entropy_of(joint.iter().flatten().copied());
    (entropy_of(rows) + entropy_of(cols.iter().copied()) - h_xy).max(0.0)
}

fn check_stochastic(m: &[Vec<f64>], what: &str) -> Result<()> {
    for row in m {
        let s: f64 = row.iter().sum();
        if row.iter().any(|&v| !(v >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("{what} rows must be distributions")));
        }
    }
    Ok(())
}

/// `p_yl[y][l]` is the joint pmf, `decoder[l][t]` = P(Ytilde = t | L = l) and
/// `q_rule[t][y]` = q(y | t).
pub fn precision_bound_report(p_yl: &[Vec<f64>], decoder: &[Vec<f64>], q_rule: &[Vec<f64>]) -> Result<BoundReport> {
    let ny = p_yl.len();
    let nl = p_yl.first().map_or(0, Vec::len);
    let nt = decoder.first().map_or(0, Vec::len);
    if ny == 0 || nl == 0 || nt == 0 {
        return Err(Error::InvalidJoint("empty alphabet".into()));
    }
    if p_yl.iter().any(|r| r.len() != nl) || decoder.len() != nl || q_rule.len() != nt {
        return Err(Error::DimensionMismatch {
            expected: nl,
            got: decoder.len(),
        });
    }
    if decoder.iter().any(|r| r.len() != nt) || q_rule.iter().any(|r| r.len() != ny) {
        return Err(Error::DimensionMismatch { expected: ny, got: nt });
    }
    let total: f64 = p_yl.iter().flatten().sum();
    if p_yl.iter().flatten().any(|&v| !(v >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidJoint("joint masses must be nonnegative and sum to 1".into()));
    }
    check_stochastic(decoder, "decoder")?;
    check_stochastic(q_rule, "q_rule")?;

    let p_yt: Vec<Vec<f64>> = (0..ny)
        .map(|y| {
            (0..nt)
                .map(|t| (0..nl).map(|l| p_yl[y][l] * decoder[l][t]).sum())
                .collect()
        })
        .collect();
    let h_y = entropy_of(p_yl.iter().map(|r| r.iter().sum::<f64>()));

    let mut cross_entropy_l = 0.0;
    for l in 0..nl {
        let pl: f64 = (0..ny).map(|y| p_yl[y][l]).sum();
        if pl <= 0.0 {
            continue;
        }
        let post = Pmf::new((0..ny).map(|y| (y, p_yl[y][l] / pl)).collect())?;
        let qyl = Pmf::from_weights(
            (0..ny)
                .map(|y| (y, (0..nt).map(|t| decoder[l][t] * q_rule[t][y]).sum::<f64>()))
                .collect(),
        )?;
        let (_, ce) = divergences(&post, &qyl)?;
        cross_entropy_l += pl * ce;
    }
    let mut cross_entropy_ytilde = 0.0;
    for t in 0..nt {
        let pt: f64 = (0..ny).map(|y| p_yt[y][t]).sum();
        if pt <= 0.0 {
            continue;
        }
        let post = Pmf::new((0..ny).map(|y| (y, p_yt[y][t] / pt)).collect())?;
        let q = Pmf::from_weights((0..ny).map(|y| (y, q_rule[t][y])).collect())?;
        let (_, ce) = divergences(&post, &q)?;
        cross_entropy_ytilde += pt * ce;
    }
    let deterministic = decoder.iter().all(|r| r.iter().all(|&v| v == 0.0 || v == 1.0));
    Ok(BoundReport {
        i_y_l: mutual_information(p_yl),
        i_y_ytilde: mutual_information(&p_yt),
        h_y,
        cross_entropy_l,
        cross_entropy_ytilde,
        lower_bound: h_y - cross_entropy_l,
        deterministic,
    })
}

/// One seeded random instance of the bound report.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTrial {
    pub seed: u64,
    pub report: BoundReport,
}

impl BoundTrial {
    pub const CSV_HEADER: &'static str =
        "trial,i_y_l,i_y_ytilde,h_y,cross_entropy_l,cross_entropy_ytilde,lower_bound,deterministic,violation";

    /// Violations checked: the chain for deterministic decoders, the Jensen
    /// inequality and I(Y;L) >= I(Y;Ytilde) >= H(Y) - C_Ytilde for stochastic ones.
    pub fn violation(&self, slack: f64) -> bool {
        let r = &self.report;
        if r.deterministic {
            !r.chain_holds(slack) || r.jensen_gap().abs() > slack
        } else {
            r.jensen_gap() < -slack
                || r.i_y_l + slack < r.i_y_ytilde
                || r.i_y_ytilde + slack < r.h_y - r.cross_entropy_ytilde
                || r.i_y_l + slack < r.lower_bound
        }
    }

    pub fn csv_row(&self, trial: usize) -> String {
        format!("{trial},{},{}", self.report.csv_row(), self.violation(1e-9))
    }
}

fn random_pmf<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Random joint with |Y| in 2..=4, |L| in 2..=6 and |Ytilde| in 2..=5, a random
/// decoder (0/1 rows when `deterministic`) and a strictly positive random q.
pub fn random_bound_trial(seed: u64, deterministic: bool) -> Result<BoundTrial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ny = rng.random_range(2..=4);
    let nl = rng.random_range(2..=6);
    let nt = rng.random_range(2..=5);
    let flat = random_pmf(&mut rng, ny * nl, 0.0);
    let p_yl: Vec<Vec<f64>> = flat.chunks(nl).map(<[f64]>::to_vec).collect();
    let decoder: Vec<Vec<f64>> = (0..nl)
        .map(|_| {
            if deterministic {
                let t = rng.random_range(0..nt);
                (0..nt).map(|j| if j == t { 1.0 } else { 0.0 }).collect()
            } else {
                random_pmf(&mut rng, nt, 0.0)
            }
        })
        .collect();
    let q_rule: Vec<Vec<f64>> = (0..nt).map(|_| random_pmf(&mut rng, ny, 0.05)).collect();
    Ok(BoundTrial {
        seed,
        report: precision_bound_report(&p_yl, &decoder, &q_rule)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pmf(v: &[f64]) -> Pmf<usize> {
        Pmf::new(v.iter().copied().enumerate().collect()).unwrap()
    }

    #[test]
    fn divergence_examples() {
        let (kl, ce) = divergences(&pmf(&[0.3, 0.7]), &pmf(&[0.3, 0.7])).unwrap();
        assert_abs_diff_eq!(kl, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ce, entropy_of([0.3, 0.7]), epsilon = 1e-15);
        let (kl, ce) = divergences(&pmf(&[1.0, 0.0]), &pmf(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(kl, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ce, 1.0, epsilon = 1e-15);
        let (kl, _) = divergences(&pmf(&[0.75, 0.25]), &pmf(&[0.5, 0.5])).unwrap();
        let direct = 0.75 * (1.5f64).log2() + 0.25 * (0.5f64).log2();
        assert_abs_diff_eq!(kl, direct, epsilon = 1e-15);
        assert_abs_diff_eq!(kl, 0.188722, epsilon = 1e-6);
    }

    #[test]
    fn support_violation() {
        let q = Pmf::new(vec![(0usize, 1.0)]).unwrap();
        assert!(matches!(
            divergences(&pmf(&[0.5, 0.5]), &q),
            Err(Error::AbsoluteContinuityViolation(1))
        ));
    }

    #[test]
    fn true_posterior_makes_bound_tight() {
        let p_yl = vec![vec![0.3, 0.1, 0.05], vec![0.05, 0.2, 0.3]];
        // Decoder merges l = 1 and l = 2.
        let decoder = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        let p_t = [0.35, 0.65];
        let q = vec![vec![0.3 / p_t[0], 0.05 / p_t[0]], vec![0.15 / p_t[1], 0.5 / p_t[1]]];
        let r = precision_bound_report(&p_yl, &decoder, &q).unwrap();
        assert!(r.deterministic);
        assert_abs_diff_eq!(r.lower_bound, r.i_y_ytilde, epsilon = 1e-12);
        assert_abs_diff_eq!(r.cross_entropy_l, r.cross_entropy_ytilde, epsilon = 1e-12);
        assert!(r.chain_holds(1e-12));
    }

    /// Brute force over all (y, l, t) triples, independent of the report code.
    fn brute(p_yl: &[Vec<f64>], d: &[Vec<f64>], q: &[Vec<f64>]) -> (f64, f64, f64) {
        let (ny, nl, nt) = (p_yl.len(), d.len(), q.len());
        let mut p_yt = vec![vec![0.0; nt]; ny];
        let mut c_t = 0.0;
        let mut c_l = 0.0;
        for y in 0..ny {
            for l in 0..nl {
                let qyl: f64 = (0..nt).map(|t| d[l][t] * q[t][y]).sum();
                c_l -= p_yl[y][l] * qyl.log2();
                for t in 0..nt {
                    let w = p_yl[y][l] * d[l][t];
                    p_yt[y][t] += w;
                    if w > 0.0 {
                        c_t -= w * q[t][y].log2();
                    }
                }
            }
        }
        let mut i = 0.0;
        for y in 0..ny {
            let py: f64 = p_yt[y].iter().sum();
            for t in 0..nt {
                let pt: f64 = (0..ny).map(|k| p_yt[k][t]).sum();
                if p_yt[y][t] > 0.0 {
                    i += p_yt[y][t] * (p_yt[y][t] / (py * pt)).log2();
                }
            }
        }
        (i, c_l, c_t)
    }

    #[test]
    fn matches_brute_force() {
        for seed in 0..50 {
            for det in [true, false] {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let ny = rng.random_range(2..=4);
                let nl = rng.random_range(2..=6);
                let nt = rng.random_range(2..=5);
                let flat = random_pmf(&mut rng, ny * nl, 0.0);
                let p: Vec<Vec<f64>> = flat.chunks(nl).map(<[f64]>::to_vec).collect();
                let d: Vec<Vec<f64>> = (0..nl)
                    .map(|_| {
                        if det {
                            let t = rng.random_range(0..nt);
                            (0..nt).map(|j| if j == t { 1.0 } else { 0.0 }).collect()
                        } else {
                            random_pmf(&mut rng, nt, 0.0)
                        }
                    })
                    .collect();
                let q: Vec<Vec<f64>> = (0..nt).map(|_| random_pmf(&mut rng, ny, 0.05)).collect();
                let r = precision_bound_report(&p, &d, &q).unwrap();
                let (i, c_l, c_t) = brute(&p, &d, &q);
                assert_abs_diff_eq!(r.i_y_ytilde, i, epsilon = 1e-12);
                assert_abs_diff_eq!(r.cross_entropy_l, c_l, epsilon = 1e-12);
                assert_abs_diff_eq!(r.cross_entropy_ytilde, c_t, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn thousand_trials_without_violation() {
        for seed in 0..1000 {
            for det in [true, false] {
                let t = random_bound_trial(seed, det).unwrap();
                assert!(!t.violation(1e-9), "seed {seed} det {det}: {:?}", t.report);
            }
        }
    }

    proptest! {
        #[test]
        fn deterministic_chain(seed in any::<u64>()) {
            let t = random_bound_trial(seed, true).unwrap();
            prop_assert!(t.report.chain_holds(1e-9));
            prop_assert!(t.report.jensen_gap().abs() <= 1e-9);
        }

        #[test]
        fn stochastic_jensen(seed in any::<u64>()) {
            let t = random_bound_trial(seed, false).unwrap();
            prop_assert!(t.report.jensen_gap() >= -1e-9);
            prop_assert!(t.report.i_y_l + 1e-9 >= t.report.i_y_ytilde);
        }
    }
}
