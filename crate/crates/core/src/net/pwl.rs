use super::{ActivationKind, Network};
use crate::error::{Error, Result};
use crate::tol::SLOPE_TOL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub slope: f64,
    pub intercept: f64,
}

impl Affine {
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    fn scaled(&self, c: f64) -> Affine {
        Affine {
            slope: c * self.slope,
            intercept: c * self.intercept,
        }
    }

    fn is_constant(&self) -> bool {
        self.slope.abs() <= SLOPE_TOL
    }
}

/// Scalar piecewise-affine function on a closed domain.
///
/// Segment `k` is active on the open interval between breakpoints `k-1` and
/// `k`; at a breakpoint the stored point value is used, which lets step
/// activations jump.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    domain: (f64, f64),
    breakpoints: Vec<f64>,
    point_values: Vec<f64>,
    segments: Vec<Affine>,
}

impl PiecewiseLinear {
    pub fn new(
        domain: (f64, f64),
        breakpoints: Vec<f64>,
        point_values: Vec<f64>,
        segments: Vec<Affine>,
    ) -> Result<Self> {
        if !(domain.0 <= domain.1) {
            return Err(Error::InvalidParameter(format!("empty domain {domain:?}")));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("breakpoints must increase strictly".into()));
        }
        if point_values.len() != breakpoints.len() || segments.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidParameter("inconsistent segment counts".into()));
        }
        Ok(Self {
            domain,
            breakpoints,
            point_values,
            segments,
        })
    }

    pub fn affine(domain: (f64, f64), slope: f64, intercept: f64) -> Self {
        Self {
            domain,
            breakpoints: Vec::new(),
            point_values: Vec::new(),
            segments: vec![Affine { slope, intercept }],
        }
    }

    /// Continuous interpolation of knots, constant beyond the outer knots.
    pub fn from_knots(domain: (f64, f64), knots: &[(f64, f64)]) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter("no knots".into()));
        }
        let breakpoints: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let point_values: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let mut segments = vec![Affine {
            slope: 0.0,
            intercept: knots[0].1,
        }];
        for w in knots.windows(2) {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            segments.push(Affine {
                slope,
                intercept: w[0].1 - slope * w[0].0,
            });
        }
        segments.push(Affine {
            slope: 0.0,
            intercept: knots[knots.len() - 1].1,
        });
        Self::new(domain, breakpoints, point_values, segments)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn point_values(&self) -> &[f64] {
        &self.point_values
    }

    pub fn segments(&self) -> &[Affine] {
        &self.segments
    }

    pub fn with_domain(mut self, domain: (f64, f64)) -> Self {
        self.domain = domain;
        self
    }

    /// Index of the segment active at `x` (for x not a breakpoint).
    pub fn segment_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b < x);
        if k < self.breakpoints.len() && self.breakpoints[k] == x {
            self.point_values[k]
        } else {
            self.segments[k].at(x)
        }
    }

    /// A point strictly inside segment `k` (unbounded outer segments included).
    fn sample_point(&self, k: usize) -> f64 {
        let n = self.breakpoints.len();
        match (k, n) {
            (_, 0) => 0.5 * (self.domain.0 + self.domain.1),
            (0, _) => self.breakpoints[0] - 1.0,
            (k, n) if k == n => self.breakpoints[n - 1] + 1.0,
            (k, _) => 0.5 * (self.breakpoints[k - 1] + self.breakpoints[k]),
        }
    }

    /// Breakpoints where the left limit, right limit and value are not all equal.
    pub fn jumps(&self) -> Vec<f64> {
        self.breakpoints
            .iter()
            .enumerate()
            .filter(|&(k, &b)| {
                let left = self.segments[k].at(b);
                let right = self.segments[k + 1].at(b);
                let v = self.point_values[k];
                let tol = 1e-12 * (1.0 + v.abs());
                (left - v).abs() > tol || (right - v).abs() > tol
            })
            .map(|(_, &b)| b)
            .collect()
    }

    /// sum_i c_i f_i + constant over the union of breakpoints.
    pub fn linear_combination(terms: &[(f64, &PiecewiseLinear)], constant: f64) -> Self {
        let domain = terms.first().map(|t| t.1.domain).unwrap_or((0.0, 0.0));
        let mut bps: Vec<f64> = terms
            .iter()
            .filter(|t| t.0 != 0.0)
            .flat_map(|t| t.1.breakpoints.iter().copied())
            .collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let point_values = bps
            .iter()
            .map(|&b| constant + terms.iter().map(|(c, f)| c * f.eval(b)).sum::<f64>())
            .collect();
        let mut out = Self {
            domain,
            breakpoints: bps,
            point_values,
            segments: Vec::new(),
        };
        out.segments = (0..=out.breakpoints.len())
            .map(|k| {
                let x = out.sample_point(k);
                let mut acc = Affine {
                    slope: 0.0,
                    intercept: constant,
                };
                for (c, f) in terms {
                    if *c == 0.0 {
                        continue;
                    }
                    let s = f.segments[f.segment_index(x)].scaled(*c);
                    acc.slope += s.slope;
                    acc.intercept += s.intercept;
                }
                acc
            })
            .collect();
        out
    }

    /// Composes with a piecewise-linear activation, splitting at zero crossings.
    pub fn apply(&self, act: ActivationKind) -> Result<Self> {
        if !act.is_piecewise_linear() {
            return Err(Error::SmoothActivation(act.to_string()));
        }
        if act == ActivationKind::Identity {
            return Ok(self.clone());
        }
        let n = self.breakpoints.len();
        let mut bps = Vec::with_capacity(2 * n + 1);
        let mut vals = Vec::with_capacity(2 * n + 1);
        let mut segs = Vec::with_capacity(2 * n + 2);
        for k in 0..=n {
            let seg = self.segments[k];
            let left = if k == 0 {
                f64::NEG_INFINITY
            } else {
                self.breakpoints[k - 1]
            };
            let right = if k == n {
                f64::INFINITY
            } else {
                self.breakpoints[k]
            };
            let crossing = if seg.slope != 0.0 {
                let r = -seg.intercept / seg.slope;
                (r > left && r < right).then_some(r)
            } else {
                None
            };
            match crossing {
                Some(r) => {
                    segs.push(activate_affine(seg, act, seg.at(0.5 * (r + left.max(r - 1.0)))));
                    bps.push(r);
                    vals.push(act.scalar(0.0));
                    segs.push(activate_affine(seg, act, seg.at(0.5 * (r + right.min(r + 1.0)))));
                }
                None => {
                    let x = self.sample_point(k);
                    segs.push(activate_affine(seg, act, seg.at(x)));
                }
            }
            if k < n {
                bps.push(self.breakpoints[k]);
                vals.push(act.scalar(self.point_values[k]));
            }
        }
        Ok(Self {
            domain: self.domain,
            breakpoints: bps,
            point_values: vals,
            segments: segs,
        })
    }

    /// Drops breakpoints where nothing changes.
    pub fn simplify(&self) -> Self {
        let mut bps = Vec::new();
        let mut vals = Vec::new();
        let mut segs = vec![self.segments[0]];
        for (k, &b) in self.breakpoints.iter().enumerate() {
            let prev = *segs.last().unwrap();
            let next = self.segments[k + 1];
            let v = self.point_values[k];
            let same_seg = (prev.slope - next.slope).abs() <= 1e-14 * (1.0 + prev.slope.abs())
                && (prev.at(b) - next.at(b)).abs() <= 1e-14 * (1.0 + v.abs());
            let continuous = (prev.at(b) - v).abs() <= 1e-14 * (1.0 + v.abs());
            if same_seg && continuous {
                continue;
            }
            bps.push(b);
            vals.push(v);
            segs.push(next);
        }
        Self {
            domain: self.domain,
            breakpoints: bps,
            point_values: vals,
            segments: segs,
        }
    }

    /// Breakpoints strictly inside the domain.
    pub fn interior_breakpoints(&self) -> Vec<f64> {
        self.breakpoints
            .iter()
            .copied()
            .filter(|&b| b > self.domain.0 && b < self.domain.1)
            .collect()
    }

    /// Affine pieces meeting the domain, as (start, end, segment) with
    /// zero-width pieces omitted.
    pub fn pieces_on(&self, lo: f64, hi: f64) -> Vec<(f64, f64, Affine)> {
        let mut out = Vec::new();
        let mut start = lo;
        let k0 = self.segment_index(lo);
        let mut k = if k0 < self.breakpoints.len() && self.breakpoints[k0] == lo {
            k0 + 1
        } else {
            k0
        };
        loop {
            let end = if k < self.breakpoints.len() {
                self.breakpoints[k].min(hi)
            } else {
                hi
            };
            if end > start {
                out.push((start, end, self.segments[k]));
            }
            if end >= hi || k >= self.breakpoints.len() {
                break;
            }
            start = end;
            k += 1;
        }
        out
    }

    /// x values in the open interval (lo, hi) where the function crosses `level`
    /// within a segment, plus breakpoints (where it may jump across it).
    pub fn level_cuts(&self, level: f64, lo: f64, hi: f64) -> Vec<f64> {
        let mut cuts: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|&b| b > lo && b < hi)
            .collect();
        if level.is_finite() {
            for (a, b, seg) in self.pieces_on(lo, hi) {
                if seg.slope != 0.0 {
                    let r = (level - seg.intercept) / seg.slope;
                    if r > a && r < b {
                        cuts.push(r);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }

    pub fn is_constant_on(&self, lo: f64, hi: f64) -> bool {
        let v = self.eval(lo);
        let close = |w: f64| (w - v).abs() <= 1e-12 * (1.0 + v.abs());
        self.pieces_on(lo, hi)
            .iter()
            .all(|p| p.2.is_constant() && close(p.2.at(p.0)))
            && self
                .breakpoints
                .iter()
                .zip(&self.point_values)
                .filter(|(&b, _)| b >= lo && b <= hi)
                .all(|(_, &w)| close(w))
    }
}

fn activate_affine(seg: Affine, act: ActivationKind, sample_value: f64) -> Affine {
    let zero = Affine {
        slope: 0.0,
        intercept: 0.0,
    };
    match act {
        ActivationKind::Relu => {
            if sample_value > 0.0 {
                seg
            } else {
                zero
            }
        }
        ActivationKind::LeakyRelu(a) => {
            if sample_value >= 0.0 {
                seg
            } else {
                seg.scaled(a)
            }
        }
        ActivationKind::Step => Affine {
            slope: 0.0,
            intercept: if sample_value >= 0.0 { 1.0 } else { 0.0 },
        },
        _ => seg,
    }
}

/// Exact representation of every output coordinate of a network whose first
/// layer reads only `coord`; no activation is applied after the last layer if
/// `skip_final_activation` is set.
pub(crate) fn network_pwls(
    net: &Network,
    coord: usize,
    domain: (f64, f64),
    skip_final_activation: bool,
) -> Result<Vec<PiecewiseLinear>> {
    if coord >= net.input_dim() {
        return Err(Error::InvalidParameter(format!(
            "coordinate {coord} out of range for input width {}",
            net.input_dim()
        )));
    }
    let n_layers = net.layers().len();
    for (i, l) in net.layers().iter().enumerate() {
        if !l.noise.is_none() {
            return Err(Error::StochasticLayer);
        }
        let last = i + 1 == n_layers;
        if !(last && skip_final_activation) && !l.activation.is_piecewise_linear() {
            return Err(Error::SmoothActivation(l.activation.to_string()));
        }
    }
    let first = &net.layers()[0];
    for (i, row) in first.weights.iter().enumerate() {
        if i != coord && row.iter().any(|&w| w != 0.0) {
            return Err(Error::MultivariateDependence);
        }
    }
    let x = PiecewiseLinear::affine(domain, 1.0, 0.0);
    let mut h: Vec<PiecewiseLinear> = Vec::new();
    for (i, l) in net.layers().iter().enumerate() {
        let z: Vec<PiecewiseLinear> = (0..l.output_width())
            .map(|j| {
                let terms: Vec<(f64, &PiecewiseLinear)> = if i == 0 {
                    vec![(l.weights[coord][j], &x)]
                } else {
                    h.iter().zip(&l.weights).map(|(f, row)| (row[j], f)).collect()
                };
                PiecewiseLinear::linear_combination(&terms, l.biases[j]).simplify()
            })
            .collect();
        let last = i + 1 == n_layers;
        h = if last && skip_final_activation {
            z
        } else {
            z.iter()
                .map(|f| Ok(f.apply(l.activation)?.simplify()))
                .collect::<Result<_>>()?
        };
    }
    Ok(h.into_iter().map(|f| f.with_domain(domain)).collect())
}

/// Exact piecewise-linear form of a scalar-output network along one input coordinate.
pub fn as_scalar_pwl(
    net: &Network,
    input_coordinate: usize,
    domain: (f64, f64),
) -> Result<PiecewiseLinear> {
    if net.output_dim() != 1 {
        return Err(Error::InvalidNetwork(format!(
            "output width {} is not 1",
            net.output_dim()
        )));
    }
    let mut v = network_pwls(net, input_coordinate, domain, false)?;
    Ok(v.remove(0))
}
