use std::collections::BTreeMap;

use super::{check_beta, require_deterministic, CostReport};
use crate::dist::{HybridMeasure, LabeledJoint, UniformPiece};
use crate::error::{Error, Result};
use crate::info::{entropy_of, mi_discrete, InfoValue, Pmf, QuantizerSpec};
use crate::net::{reduce_rank_one, ContinuousPart, Network, OutputLaw, ScalarLaw};
use crate::tol::ATOM_TOL;

/// Map to a finite alphabet applied to X or to L.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantizer {
    /// Leaves atoms as they are; only valid where the variable is atomic.
    Identity,
    Grid(QuantizerSpec),
    /// Index 1 when the first coordinate exceeds `level`, else 0.
    Threshold { level: f64 },
}

impl Quantizer {
    pub fn grid(m: u32) -> Result<Self> {
        Ok(Self::Grid(QuantizerSpec::new(m)?))
    }
}

/// Quantized symbol; raw values are clustered into ids once everything is collected.
#[derive(Debug, Clone)]
enum Sym {
    Cells(Vec<i64>),
    Raw(Vec<f64>),
}

fn bin_value(q: &Quantizer, v: &[f64]) -> Sym {
    match q {
        Quantizer::Identity => Sym::Raw(v.to_vec()),
        Quantizer::Grid(spec) => Sym::Cells(v.iter().enumerate().map(|(c, &x)| spec.cell(x, c)).collect()),
        Quantizer::Threshold { level } => Sym::Cells(vec![i64::from(v[0] > *level)]),
    }
}

fn bin_law(q: &Quantizer, law: &OutputLaw) -> Result<Vec<(Sym, f64)>> {
    let mut out: Vec<(Sym, f64)> = law.atoms.iter().map(|&(v, m)| (bin_value(q, &[v]), m)).collect();
    for part in &law.parts {
        match q {
            Quantizer::Identity => {
                return Err(Error::Unsupported(
                    "identity quantizer on a continuous representation".into(),
                ))
            }
            Quantizer::Grid(spec) => {
                let (lo, hi) = part.image();
                let (m, o) = (spec.m as f64, spec.origin_at(0));
                for k in spec.cell(lo, 0)..=spec.cell(hi, 0) {
                    let mass = part.mass_in(o + k as f64 / m, o + (k + 1) as f64 / m);
                    if mass > 0.0 {
                        out.push((Sym::Cells(vec![k]), mass));
                    }
                }
            }
            Quantizer::Threshold { level } => {
                for (k, mass) in [
                    (0, part.mass_in(f64::NEG_INFINITY, *level)),
                    (1, part.mass_in(*level, f64::INFINITY)),
                ] {
                    if mass > 0.0 {
                        out.push((Sym::Cells(vec![k]), mass));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Sub-intervals of [lo, hi] along `coord` cut by the quantizer: (cell, start, end, fraction).
fn coord_cells(q: &Quantizer, lo: f64, hi: f64, coord: usize) -> Vec<(i64, f64, f64, f64)> {
    match q {
        Quantizer::Grid(spec) => {
            let (m, o) = (spec.m as f64, spec.origin_at(coord));
            spec.interval_cells(lo, hi, coord)
                .into_iter()
                .map(|(k, frac)| {
                    let a = lo.max(o + k as f64 / m);
                    let b = hi.min(o + (k + 1) as f64 / m);
                    (k, a, b, frac)
                })
                .collect()
        }
        Quantizer::Threshold { level } if coord == 0 && *level > lo && *level < hi => {
            let f = (level - lo) / (hi - lo);
            vec![(0, lo, *level, f), (1, *level, hi, 1.0 - f)]
        }
        Quantizer::Threshold { level } if coord == 0 => vec![(i64::from(lo > *level), lo, hi, 1.0)],
        _ => vec![(0, lo, hi, 1.0)],
    }
}

/// Per-coordinate symbol of an input point, laid out like the box cells.
fn x_symbol(q: &Quantizer, x: &[f64]) -> Vec<i64> {
    match q {
        Quantizer::Identity => x.iter().map(|f| f.to_bits() as i64).collect(),
        Quantizer::Grid(spec) => x.iter().enumerate().map(|(c, &v)| spec.cell(v, c)).collect(),
        Quantizer::Threshold { level } => {
            let mut key = vec![0; x.len()];
            key[0] = i64::from(x[0] > *level);
            key
        }
    }
}

/// Rows (Q_X symbol, Q_L symbol, mass) for one input measure. With an identity
/// Q_X the X symbol of a continuous piece is left empty and must not be used.
fn joint_rows(mu: &HybridMeasure, net: &Network, qx: &Quantizer, ql: &Quantizer) -> Result<Vec<(Vec<i64>, Sym, f64)>> {
    require_deterministic(net)?;
    if mu.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: mu.dim(),
        });
    }
    let mut rows: Vec<(Vec<i64>, Sym, f64)> = mu
        .points()
        .iter()
        .map(|p| (x_symbol(qx, &p.location), bin_value(ql, &net.output(&p.location)), p.mass))
        .collect();
    if mu.is_atomic() {
        return Ok(rows);
    }
    if net.output_dim() != 1 {
        return Err(Error::Unsupported(format!(
            "quantizing a representation of width {} over a continuous input",
            net.output_dim()
        )));
    }
    let red = reduce_rank_one(net)?;
    let (mut lo, mut hi) = red.law(mu).support();
    if lo == hi {
        lo -= 1.0;
        hi += 1.0;
    }
    let f = red.pwls((lo, hi), false)?.remove(0);
    for piece in mu.pieces() {
        if *qx == Quantizer::Identity {
            let single = HybridMeasure::new(
                vec![],
                vec![UniformPiece {
                    bounds: piece.bounds.clone(),
                    mass: 1.0,
                }],
            )?;
            let law = red.law(&single).push(&f);
            for (s, m) in bin_law(ql, &law)? {
                rows.push((Vec::new(), s, piece.mass * m));
            }
            continue;
        }
        let axis = red.axis.ok_or_else(|| {
            Error::Unsupported("grid-quantized input read along an oblique direction".into())
        })?;
        // Cells of the other coordinates are independent of L within the box.
        let mut others: Vec<(Vec<i64>, f64)> = vec![(Vec::new(), 1.0)];
        for (c, &(a, b)) in piece.bounds.iter().enumerate() {
            let cells: Vec<(i64, f64)> = if c == axis {
                vec![(0, 1.0)]
            } else {
                coord_cells(qx, a, b, c).into_iter().map(|(k, _, _, fr)| (k, fr)).collect()
            };
            others = others
                .into_iter()
                .flat_map(|(key, w)| {
                    cells.iter().map(move |&(k, fr)| {
                        let mut key = key.clone();
                        key.push(k);
                        (key, w * fr)
                    })
                })
                .collect();
        }
        let (a, b) = piece.bounds[axis];
        for (k, s0, s1, frac) in coord_cells(qx, a, b, axis) {
            // On an axis reduction z is the coordinate itself.
            let law = ScalarLaw {
                atoms: vec![],
                parts: vec![ContinuousPart::Uniform {
                    lo: s0,
                    hi: s1,
                    mass: 1.0,
                }],
            };
            let bins = bin_law(ql, &law.push(&f))?;
            for (key, w) in &others {
                let mut key = key.clone();
                key[axis] = k;
                for (s, m) in &bins {
                    rows.push((key.clone(), s.clone(), piece.mass * frac * w * m));
                }
            }
        }
    }
    Ok(rows)
}

/// Replaces raw symbols by cluster ids shared across all groups.
fn resolve(groups: Vec<Vec<(Vec<i64>, Sym, f64)>>) -> Vec<Vec<(Vec<i64>, Vec<i64>, f64)>> {
    let mut raw: Vec<(Vec<f64>, usize, usize)> = Vec::new();
    for (g, rows) in groups.iter().enumerate() {
        for (i, r) in rows.iter().enumerate() {
            if let Sym::Raw(v) = &r.1 {
                raw.push((v.clone(), g, i));
            }
        }
    }
    raw.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut ids: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let mut id = -1i64;
    let mut last: Option<&Vec<f64>> = None;
    for (v, g, i) in &raw {
        let close = last.is_some_and(|l| l.iter().zip(v).all(|(a, b)| (a - b).abs() <= ATOM_TOL));
        if !close {
            id += 1;
        }
        ids.insert((*g, *i), id);
        last = Some(v);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(g, rows)| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (x, s, m))| {
                    let l = match s {
                        Sym::Cells(c) => c,
                        Sym::Raw(_) => vec![ids[&(g, i)]],
                    };
                    (x, l, m)
                })
                .collect()
        })
        .collect()
}

/// I(Q_X(X); Q_L(L)) for L = net(X) with X ~ mu.
pub fn quantized_joint_mi(mu: &HybridMeasure, net: &Network, qx: &Quantizer, ql: &Quantizer) -> Result<f64> {
    let rows = resolve(vec![joint_rows(mu, net, qx, ql)?]).remove(0);
    let total: f64 = rows.iter().map(|r| r.2).sum();
    let mut pl: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (_, l, m) in &rows {
        *pl.entry(l.clone()).or_default() += m / total;
    }
    let h_l = entropy_of(pl.values().copied());
    if *qx == Quantizer::Identity {
        return Ok(h_l);
    }
    let mut px: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut pxl: BTreeMap<(Vec<i64>, Vec<i64>), f64> = BTreeMap::new();
    for (x, l, m) in rows {
        *px.entry(x.clone()).or_default() += m / total;
        *pxl.entry((x, l)).or_default() += m / total;
    }
    let h_x = entropy_of(px.values().copied());
    let h_xl = entropy_of(pxl.values().copied());
    Ok((h_x + h_l - h_xl).clamp(0.0, h_l.min(h_x)))
}

/// Compression I(Q_X(X); Q_L(L)) and precision I(Y; Q'_L(L)).
pub fn ib_quantized(
    joint: &LabeledJoint,
    net: &Network,
    qx: &Quantizer,
    ql: &Quantizer,
    ql_prime: &Quantizer,
    beta: f64,
) -> Result<CostReport> {
    check_beta(beta)?;
    let compression = quantized_joint_mi(&joint.marginal(), net, qx, ql)?;
    let groups = joint
        .classes()
        .iter()
        .map(|c| joint_rows(&c.conditional, net, &Quantizer::Identity, ql_prime))
        .collect::<Result<Vec<_>>>()?;
    let terms: Vec<(usize, f64, Pmf<Vec<i64>>)> = resolve(groups)
        .into_iter()
        .zip(joint.classes())
        .enumerate()
        .map(|(i, (rows, c))| {
            let pmf = Pmf::from_weights(rows.into_iter().map(|(_, l, m)| (l, m)).collect())?;
            Ok((i, c.prior, pmf))
        })
        .collect::<Result<_>>()?;
    let precision = mi_discrete(&terms);
    Ok(CostReport::exact(
        "quantized",
        beta,
        InfoValue::bits(compression),
        InfoValue::bits(precision),
    ))
}
