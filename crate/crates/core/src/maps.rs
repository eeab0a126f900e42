//! Strictly increasing piecewise-linear gauge maps between rays.

use crate::error::{invalid, Result};
use crate::measures::RayMeasureSlice;

/// A strictly increasing piecewise-linear map, extended affinely beyond its
/// first and last knots.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl MonotoneMap {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(invalid(
                "a monotone map needs matching knot lists of length >= 2",
            ));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(invalid("monotone map knots must be finite"));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) || ys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("monotone map must be strictly increasing"));
        }
        Ok(MonotoneMap { xs, ys })
    }

    pub fn identity(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![lo, hi])
    }

    /// Samples a strictly increasing function at the given knots.
    pub fn sample(xs: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    fn locate(knots: &[f64], x: f64) -> usize {
        let n = knots.len();
        knots
            .partition_point(|k| *k <= x)
            .saturating_sub(1)
            .min(n - 2)
    }

    fn eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        let i = Self::locate(xs, x);
        if x == xs[i] {
            return ys[i];
        }
        ys[i] + (x - xs[i]) * (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
    }

    pub fn apply(&self, x: f64) -> f64 {
        Self::eval(&self.xs, &self.ys, x)
    }

    pub fn inverse_apply(&self, y: f64) -> f64 {
        Self::eval(&self.ys, &self.xs, y)
    }

    pub fn inverse(&self) -> MonotoneMap {
        MonotoneMap {
            xs: self.ys.clone(),
            ys: self.xs.clone(),
        }
    }

    /// Slope of the piece to the right of `x`.
    pub fn slope(&self, x: f64) -> f64 {
        let i = Self::locate(&self.xs, x);
        (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])
    }

    /// `self ∘ other`, exact on the union of breakpoints.
    pub fn compose(&self, other: &MonotoneMap) -> MonotoneMap {
        let mut xs: Vec<f64> = other.xs.clone();
        xs.extend(self.xs.iter().map(|&y| other.inverse_apply(y)));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let ys: Vec<f64> = xs.iter().map(|&x| self.apply(other.apply(x))).collect();
        MonotoneMap { xs, ys }
    }

    /// Pushforward of a piecewise-constant slice; stays piecewise constant
    /// because the map is affine between its knots.
    pub fn push_slice(&self, s: &RayMeasureSlice) -> RayMeasureSlice {
        let mut knots = Vec::new();
        let mut values = Vec::new();
        if let (Some(&lo), Some(&hi)) = (s.knots().first(), s.knots().last()) {
            let mut pts: Vec<f64> = s.knots().to_vec();
            pts.extend(self.xs.iter().copied().filter(|x| *x > lo && *x < hi));
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let density = |x: f64| {
                let i = s.knots().partition_point(|k| *k <= x).saturating_sub(1);
                s.values()[i.min(s.values().len() - 1)]
            };
            knots.push(self.apply(pts[0]));
            for w in pts.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                values.push(density(mid) / self.slope(mid));
                knots.push(self.apply(w[1]));
            }
        }
        let atoms = s.atoms().iter().map(|&(g, m)| (self.apply(g), m)).collect();
        RayMeasureSlice::from_raw(s.ray().clone(), knots, values, atoms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_inverse_round_trip() {
        let m = MonotoneMap::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0]).unwrap();
        for x in [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0, 4.0] {
            assert!((m.inverse_apply(m.apply(x)) - x).abs() < 1e-14);
        }
        assert_eq!(m.apply(0.5), 1.0);
        assert_eq!(m.slope(2.0), 0.5);
    }

    #[test]
    fn push_preserves_mass() {
        let m = MonotoneMap::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0]).unwrap();
        let s = RayMeasureSlice::uniform("r", 0.0, 2.0, 1.0).unwrap();
        let p = m.push_slice(&s);
        assert!((p.mass() - 1.0).abs() < 1e-15);
        assert_eq!(p.knots(), &[0.0, 2.0, 2.5]);
        assert_eq!(p.values(), &[0.25, 1.0]);
    }

    #[test]
    fn composition_with_inverse_is_identity() {
        let m = MonotoneMap::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 5.0]).unwrap();
        let id = m.inverse().compose(&m);
        for x in [0.0, 0.3, 2.2, 3.0] {
            assert!((id.apply(x) - x).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_increasing() {
        assert!(MonotoneMap::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
    }
}
