use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Identifier of a null generator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RayId(pub String);

impl RayId {
    pub fn new(id: impl Into<String>) -> Self {
        RayId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RayId {
    fn from(s: &str) -> Self {
        RayId(s.to_owned())
    }
}

impl From<String> for RayId {
    fn from(s: String) -> Self {
        RayId(s)
    }
}

/// Gauge domain of one ray. `b` may be `+inf` (future complete ray).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeInterval {
    pub a: f64,
    pub b: f64,
    pub has_initial_point: bool,
    pub has_final_point: bool,
}

impl GaugeInterval {
    pub fn new(a: f64, b: f64, has_initial_point: bool, has_final_point: bool) -> Result<Self> {
        if !a.is_finite() {
            return Err(invalid(format!("left gauge value must be finite, got {a}")));
        }
        if b.is_nan() || b == f64::NEG_INFINITY || a >= b {
            return Err(invalid(format!(
                "gauge interval needs a < b, got [{a}, {b}]"
            )));
        }
        if has_final_point && b.is_infinite() {
            return Err(invalid("a final point requires a finite right gauge value"));
        }
        Ok(GaugeInterval {
            a,
            b,
            has_initial_point,
            has_final_point,
        })
    }

    /// `[a, +inf)` with an initial point.
    pub fn future_complete(a: f64) -> Self {
        GaugeInterval {
            a,
            b: f64::INFINITY,
            has_initial_point: true,
            has_final_point: false,
        }
    }

    pub fn is_future_complete(&self) -> bool {
        self.b == f64::INFINITY
    }

    /// Closed-interval membership.
    pub fn contains(&self, g: f64) -> bool {
        g >= self.a && g <= self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Density of the conditional measure on a ray with respect to gauge
/// Lebesgue measure, of the form `h = φ^m` with `φ` piecewise linear through
/// the knot values `h_k^{1/m}`. The exponent `m` is 1 (plain linear
/// interpolation) unless chosen otherwise; `m = N - 2` makes
/// `h^{1/(N-2)}` exactly piecewise linear.
///
/// Beyond the last knot the last linear piece of `φ` is extrapolated and
/// clamped at zero; below the first knot the density is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RayDensity {
    knots: Vec<f64>,
    values: Vec<f64>,
    exponent: f64,
    roots: Vec<f64>,
}

impl RayDensity {
    /// Knots must be finite and strictly increasing. Values are not required to
    /// be non-negative here; [`crate::measures::disintegration_check`] reports
    /// negative knots.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::with_exponent(knots, values, 1.0)
    }

    /// Density interpolating `h^{1/exponent}` linearly. Values must be
    /// non-negative unless `exponent == 1`.
    pub fn with_exponent(knots: Vec<f64>, values: Vec<f64>, exponent: f64) -> Result<Self> {
        if knots.len() < 2 {
            return Err(invalid("a density needs at least two knots"));
        }
        if knots.len() != values.len() {
            return Err(invalid(format!(
                "density has {} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("density knots and values must be finite"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("density knots must be strictly increasing"));
        }
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(invalid(format!(
                "density exponent must be positive, got {exponent}"
            )));
        }
        let roots = if exponent == 1.0 {
            values.clone()
        } else {
            if values.iter().any(|v| *v < 0.0) {
                return Err(invalid(
                    "a density with exponent other than 1 needs non-negative values",
                ));
            }
            values.iter().map(|v| v.powf(1.0 / exponent)).collect()
        };
        Ok(RayDensity {
            knots,
            values,
            exponent,
            roots,
        })
    }

    /// Samples `f` at the given knots.
    pub fn sample(knots: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::sample_with_exponent(knots, 1.0, f)
    }

    pub fn sample_with_exponent(
        knots: Vec<f64>,
        exponent: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = knots.iter().map(|&k| f(k)).collect();
        Self::with_exponent(knots, values, exponent)
    }

    pub fn constant(a: f64, end: f64, value: f64) -> Result<Self> {
        Self::new(vec![a, end], vec![value, value])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Knot values of `φ = h^{1/m}`.
    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    /// Same knots and exponent, values multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::with_exponent(
            self.knots.clone(),
            self.values.iter().map(|v| v * factor).collect(),
            self.exponent,
        )
    }

    pub fn first_knot(&self) -> f64 {
        self.knots[0]
    }

    pub fn last_knot(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Slope of `φ` on the last piece.
    pub fn tail_slope(&self) -> f64 {
        let n = self.knots.len();
        (self.roots[n - 1] - self.roots[n - 2]) / (self.knots[n - 1] - self.knots[n - 2])
    }

    fn power(&self, phi: f64) -> f64 {
        if self.exponent == 1.0 {
            phi
        } else {
            phi.max(0.0).powf(self.exponent)
        }
    }

    /// Index `i` such that `knots[i] <= g < knots[i + 1]`, clamped to the
    /// valid piece range.
    fn piece_index(&self, g: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.partial_cmp(&g).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// `φ = h^{1/m}` at `g`.
    pub fn eval_root(&self, g: f64) -> f64 {
        if g < self.knots[0] {
            return 0.0;
        }
        let n = self.knots.len();
        if g >= self.knots[n - 1] {
            let v = self.roots[n - 1] + self.tail_slope() * (g - self.knots[n - 1]);
            return v.max(0.0);
        }
        let i = self.piece_index(g);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        if g == x0 {
            return self.roots[i];
        }
        let s = (g - x0) / (x1 - x0);
        self.roots[i] + s * (self.roots[i + 1] - self.roots[i])
    }

    pub fn eval(&self, g: f64) -> f64 {
        if g >= self.knots[0] {
            if let Ok(i) = self.knots.binary_search_by(|k| k.partial_cmp(&g).unwrap()) {
                return self.values[i];
            }
        }
        self.power(self.eval_root(g))
    }

    /// Right derivative of `h` at `g`.
    pub fn right_slope(&self, g: f64) -> f64 {
        let n = self.knots.len();
        let phi = self.eval_root(g);
        let dphi = if g >= self.knots[n - 1] {
            if phi > 0.0 || self.tail_slope() > 0.0 {
                self.tail_slope()
            } else {
                0.0
            }
        } else {
            let i = self.piece_index(g.max(self.knots[0]));
            (self.roots[i + 1] - self.roots[i]) / (self.knots[i + 1] - self.knots[i])
        };
        if self.exponent == 1.0 || dphi == 0.0 {
            dphi
        } else {
            self.exponent * phi.max(0.0).powf(self.exponent - 1.0) * dphi
        }
    }

    /// Linear pieces `(x0, x1, φ0, φ1)` of the root `φ = h^{1/m}` covering
    /// `[lo, hi]`, including the clamped extrapolation beyond the last knot.
    /// Parts below the first knot (where the density vanishes) are omitted.
    pub fn pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::new();
        self.for_each_piece(lo, hi, |p| out.push(p));
        out
    }

    pub(crate) fn for_each_piece(&self, lo: f64, hi: f64, mut f: impl FnMut((f64, f64, f64, f64))) {
        let lo = lo.max(self.knots[0]);
        if hi <= lo {
            return;
        }
        let n = self.knots.len();
        let last = self.knots[n - 1];
        if lo < last {
            let mut i = self.piece_index(lo);
            let mut x = lo;
            let mut vx = self.eval_root(lo);
            while i < n - 1 && x < hi {
                let x1 = self.knots[i + 1].min(hi);
                let v1 = if x1 == self.knots[i + 1] {
                    self.roots[i + 1]
                } else {
                    self.eval_root(x1)
                };
                if x1 > x {
                    f((x, x1, vx, v1));
                }
                x = x1;
                vx = v1;
                i += 1;
            }
        }
        if hi > last {
            let start = lo.max(last);
            let v_start = self.eval_root(start);
            let slope = self.tail_slope();
            if slope >= 0.0 {
                f((start, hi, v_start, self.eval_root(hi)));
            } else {
                let zero = start + v_start / -slope;
                if zero > start {
                    let z = zero.min(hi);
                    f((start, z, v_start, self.eval_root(z)));
                }
                if hi > zero {
                    f((zero.max(start), hi, 0.0, 0.0));
                }
            }
        }
    }

    /// Exact integral of the density over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let m = self.exponent;
        let mut acc = 0.0;
        self.for_each_piece(lo, hi, |(x0, x1, v0, v1)| {
            acc += power_linear_integral(x0, x1, v0, v1, m)
        });
        acc
    }

    /// Exact integral of `log h` over `[lo, hi]`; `-inf` when the density
    /// vanishes identically on a sub-piece or `[lo, hi]` reaches below the
    /// first knot.
    pub fn log_integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        if lo < self.knots[0] {
            return f64::NEG_INFINITY;
        }
        let mut acc = 0.0;
        self.for_each_piece(lo, hi, |(x0, x1, v0, v1)| {
            acc += log_linear_integral(x0, x1, v0, v1);
        });
        self.exponent * acc
    }
}

/// `∫_{x0}^{x1} φ(x)^m dx` for `φ >= 0` linear from `v0` to `v1`.
pub(crate) fn power_linear_integral(x0: f64, x1: f64, v0: f64, v1: f64, m: f64) -> f64 {
    let len = x1 - x0;
    if m == 1.0 {
        return 0.5 * (v0 + v1) * len;
    }
    let (v0, v1) = (v0.max(0.0), v1.max(0.0));
    let spread = (v1 - v0).abs();
    if spread > 1e-3 * v0.max(v1) {
        len * (v1.powf(m + 1.0) - v0.powf(m + 1.0)) / ((m + 1.0) * (v1 - v0))
    } else {
        const NODES: [f64; 3] = [0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
        const WEIGHTS: [f64; 3] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
        ];
        let mid = 0.5 * (v0 + v1);
        let half = 0.5 * (v1 - v0);
        let mut acc = WEIGHTS[0] * mid.powf(m);
        for k in 1..3 {
            acc += WEIGHTS[k] * ((mid + half * NODES[k]).powf(m) + (mid - half * NODES[k]).powf(m));
        }
        0.5 * len * acc
    }
}

/// `∫_{x0}^{x1} log(v(x)) dx` for `v` linear from `v0` to `v1`.
pub(crate) fn log_linear_integral(x0: f64, x1: f64, v0: f64, v1: f64) -> f64 {
    let len = x1 - x0;
    if len <= 0.0 {
        return 0.0;
    }
    if v0 < 0.0 || v1 < 0.0 || (v0 == 0.0 && v1 == 0.0) {
        return f64::NEG_INFINITY;
    }
    let m = 0.5 * (v0 + v1);
    let r = (v1 - v0).abs() / (v0 + v1);
    len * (m.ln() + log_mean_correction(r))
}

/// Mean of `log(1 + s)` for `s` uniform on `[-r, r]`, `0 <= r <= 1`.
fn log_mean_correction(r: f64) -> f64 {
    if r < 1e-3 {
        let r2 = r * r;
        // -sum r^{2k} / (2k (2k + 1))
        -(r2 / 6.0 + r2 * r2 / 20.0 + r2 * r2 * r2 / 42.0 + r2 * r2 * r2 * r2 / 72.0)
    } else if r >= 1.0 {
        std::f64::consts::LN_2 - 1.0
    } else {
        ((1.0 + r) * r.ln_1p() - (1.0 - r) * (-r).ln_1p()) / (2.0 * r) - 1.0
    }
}

/// Ambient coordinates sampled at the density knots; evaluated by linear
/// interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    points: Vec<Vec<f64>>,
}

impl Embedding {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(invalid("embedding points must share a positive dimension"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("embedding coordinates must be finite"));
        }
        Ok(Embedding { points })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

/// One null generator with its quotient weight and conditional density.
#[derive(Clone, Debug, PartialEq)]
pub struct Ray {
    pub id: RayId,
    pub weight: f64,
    pub interval: GaugeInterval,
    pub density: RayDensity,
    pub embedding: Option<Embedding>,
}

impl Ray {
    /// Checks the structural invariants tying the density and embedding to the
    /// interval. Weights and density signs are checked at hypersurface level.
    pub fn new(
        id: impl Into<RayId>,
        weight: f64,
        interval: GaugeInterval,
        density: RayDensity,
        embedding: Option<Embedding>,
    ) -> Result<Self> {
        let id = id.into();
        if !weight.is_finite() {
            return Err(invalid(format!("ray {id}: weight must be finite")));
        }
        if density.first_knot() != interval.a {
            return Err(invalid(format!(
                "ray {id}: first density knot {} differs from interval start {}",
                density.first_knot(),
                interval.a
            )));
        }
        if interval.b.is_finite() && density.last_knot() != interval.b {
            return Err(invalid(format!(
                "ray {id}: density must span the bounded interval up to {}",
                interval.b
            )));
        }
        if let Some(e) = &embedding {
            if e.points().len() != density.knots().len() {
                return Err(invalid(format!(
                    "ray {id}: embedding has {} points for {} knots",
                    e.points().len(),
                    density.knots().len()
                )));
            }
            let pts = e.points();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    if pts[i] == pts[j] {
                        return Err(invalid(format!(
                            "ray {id}: embedding is not injective on knots {i} and {j}"
                        )));
                    }
                }
            }
        }
        Ok(Ray {
            id,
            weight,
            interval,
            density,
            embedding,
        })
    }

    /// End of the gauge range on which the density is tabulated.
    pub fn truncation(&self) -> f64 {
        self.density.last_knot()
    }

    /// Ambient point at gauge `g`, interpolated between knots and clamped to
    /// the tabulated range.
    pub fn embed(&self, g: f64) -> Option<Vec<f64>> {
        let e = self.embedding.as_ref()?;
        let knots = self.density.knots();
        let n = knots.len();
        if g <= knots[0] {
            return Some(e.points[0].clone());
        }
        if g >= knots[n - 1] {
            return Some(e.points[n - 1].clone());
        }
        let i = knots.partition_point(|&k| k <= g) - 1;
        let s = (g - knots[i]) / (knots[i + 1] - knots[i]);
        Some(
            e.points[i]
                .iter()
                .zip(&e.points[i + 1])
                .map(|(p, q)| p + s * (q - p))
                .collect(),
        )
    }
}
