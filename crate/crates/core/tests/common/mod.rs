#![allow(dead_code)]

use synthnull::measures::{HMeasure, RayMeasureSlice};
use synthnull::ray::{GaugeInterval, Ray, RayDensity};
use synthnull::SyntheticNullHypersurface;

pub fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + (b - a) * i as f64 / n as f64
            }
        })
        .collect()
}

pub fn bounded(id: &str, weight: f64, a: f64, b: f64, density: RayDensity) -> Ray {
    Ray::new(
        id,
        weight,
        GaugeInterval::new(a, b, true, true).unwrap(),
        density,
        None,
    )
    .unwrap()
}

pub fn single(density: RayDensity) -> SyntheticNullHypersurface {
    let a = density.first_knot();
    let b = density.last_knot();
    SyntheticNullHypersurface::new(vec![bounded("r", 1.0, a, b, density)], None, None).unwrap()
}

pub fn unit_ray() -> SyntheticNullHypersurface {
    single(RayDensity::constant(0.0, 1.0, 1.0).unwrap())
}

pub fn block(ray: &str, lo: f64, hi: f64) -> HMeasure {
    HMeasure::uniform_on(ray, lo, hi).unwrap()
}

/// Piecewise-constant unit-mass measure on one ray from relative weights.
pub fn steps(ray: &str, knots: Vec<f64>, weights: &[f64]) -> HMeasure {
    let mass: f64 = weights
        .iter()
        .zip(knots.windows(2))
        .map(|(w, k)| w * (k[1] - k[0]))
        .sum();
    let values = weights.iter().map(|w| w / mass).collect();
    HMeasure::new(
        vec![RayMeasureSlice::new(ray, knots, values, vec![]).unwrap()],
        0.0,
    )
    .unwrap()
}

/// Composite Gauss-Legendre oracle for `∫ f` on `[a, b]` with `cells` cells.
pub fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, cells: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / cells as f64;
    let mut acc = 0.0;
    for c in 0..cells {
        let m = a + h * (c as f64 + 0.5);
        for k in 0..5 {
            acc += W[k] * f(m + 0.5 * h * X[k]);
        }
    }
    0.5 * h * acc
}
