//! Hypersurfaces generated from smooth model spacetimes, and null geodesics
//! of the warped product `(-∞, 0) ×_f S¹` with metric `dt² - f(t)² dr²`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypersurface::SyntheticNullHypersurface;
use crate::ray::{Embedding, GaugeInterval, Ray, RayDensity, RayId};
use crate::rng::sub_rng;

/// Default number of generators sampled from a sphere of directions.
pub const DEFAULT_RAYS: usize = 64;
/// Knot spacing of generated densities on unbounded rays.
pub const KNOT_SPACING: f64 = 1.0 / 16.0;
const DIRECTION_SEED: u64 = 0x5eed;

/// Unit vectors in `R^d` spread over the sphere: equally spaced on the
/// circle, a Fibonacci lattice on `S²`, normalised Gaussians otherwise.
pub fn sphere_directions(d: usize, k: usize) -> Vec<Vec<f64>> {
    match d {
        1 => (0..k)
            .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }])
            .collect(),
        2 => (0..k)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / k as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..k)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / k as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    vec![rho * a.cos(), rho * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = sub_rng(DIRECTION_SEED, d as u64);
            (0..k)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.into_iter().map(|x| x / norm).collect()
                })
                .collect()
        }
    }
}

fn uniform_knots(a: f64, end: f64, spacing: f64) -> Vec<f64> {
    let n = ((end - a) / spacing).ceil() as usize;
    let mut ks: Vec<f64> = (0..n).map(|i| a + spacing * i as f64).collect();
    ks.push(end);
    ks
}

fn ray_id(prefix: &str, i: usize) -> RayId {
    RayId::new(format!("{prefix}{i:03}"))
}

/// Future light cone of the origin in `n`-dimensional Minkowski space with
/// `k` generators: density `t^{n-2}`, weight `1/k`, unbounded rays
/// tabulated up to `horizon`, embedding `g -> (g, g ω)` and a shared tip.
pub fn cone_hypersurface_with(
    n: usize,
    horizon: f64,
    k: usize,
) -> Result<SyntheticNullHypersurface> {
    if n < 3 {
        return Err(Error::Parameter(format!(
            "the cone needs dimension n >= 3, got {n}"
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) || k == 0 {
        return Err(Error::Parameter(
            "the cone needs a positive horizon and at least one ray".into(),
        ));
    }
    let knots = uniform_knots(0.0, horizon, KNOT_SPACING);
    let p = (n - 2) as i32;
    let exponent = (n - 2) as f64;
    let mut rays = Vec::with_capacity(k);
    for (i, w) in sphere_directions(n - 1, k).into_iter().enumerate() {
        let density = RayDensity::sample_with_exponent(knots.clone(), exponent, |t| t.powi(p))?;
        let emb = knots
            .iter()
            .map(|&g| std::iter::once(g).chain(w.iter().map(|x| g * x)).collect())
            .collect();
        rays.push(Ray::new(
            ray_id("c", i),
            1.0 / k as f64,
            GaugeInterval::future_complete(0.0),
            density,
            Some(Embedding::new(emb)?),
        )?);
    }
    let tip = rays.iter().map(|r| r.id.clone()).collect();
    SyntheticNullHypersurface::new(rays, Some(tip), Some(n as f64))
}

pub fn cone_hypersurface(n: usize, horizon: f64) -> Result<SyntheticNullHypersurface> {
    cone_hypersurface_with(n, horizon, DEFAULT_RAYS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Congruence {
    /// Expanding: density `((R + t)/R)²` on `[0, ∞)`.
    Outgoing,
    /// Focusing: density `((R - t)/R)²` on `[0, R]`.
    Ingoing,
}

fn sphere_knots(r: f64) -> Vec<f64> {
    (0..=64).map(|i| r * i as f64 / 64.0).collect()
}

/// Null congruence orthogonal to a round 2-sphere of `radius` in 4-d
/// Minkowski space, with densities normalised to one at the sphere.
pub fn sphere_boundary_hypersurface_with(
    radius: f64,
    horizon: f64,
    congruence: Congruence,
    k: usize,
) -> Result<SyntheticNullHypersurface> {
    if !(radius > 0.0 && radius.is_finite()) || k == 0 {
        return Err(Error::Parameter(
            "the sphere needs a positive radius and at least one ray".into(),
        ));
    }
    let (knots, interval, sign) = match congruence {
        Congruence::Outgoing => {
            if !(horizon > 0.0 && horizon.is_finite()) {
                return Err(Error::Parameter(
                    "the outgoing congruence needs a positive horizon".into(),
                ));
            }
            (
                uniform_knots(0.0, horizon, KNOT_SPACING),
                GaugeInterval::future_complete(0.0),
                1.0,
            )
        }
        Congruence::Ingoing => (
            sphere_knots(radius),
            GaugeInterval::new(0.0, radius, true, true)?,
            -1.0,
        ),
    };
    let mut rays = Vec::with_capacity(k);
    for (i, w) in sphere_directions(3, k).into_iter().enumerate() {
        let density = RayDensity::sample_with_exponent(knots.clone(), 2.0, |t| {
            let g = 1.0 + sign * t / radius;
            g * g
        })?;
        let emb = knots
            .iter()
            .map(|&t| {
                let rr = radius + sign * t;
                vec![t, rr * w[0], rr * w[1], rr * w[2]]
            })
            .collect();
        rays.push(Ray::new(
            ray_id("s", i),
            1.0 / k as f64,
            interval,
            density,
            Some(Embedding::new(emb)?),
        )?);
    }
    SyntheticNullHypersurface::new(rays, None, Some(4.0))
}

pub fn sphere_boundary_hypersurface(
    radius: f64,
    horizon: f64,
    congruence: Congruence,
) -> Result<SyntheticNullHypersurface> {
    sphere_boundary_hypersurface_with(radius, horizon, congruence, DEFAULT_RAYS)
}

/// Warping function of the product metric, defined for `t < 0`.
pub trait Warp: Send + Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
}

/// `f(t) = scale · (-t)^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerWarp {
    pub scale: f64,
    pub exponent: f64,
}

impl PowerWarp {
    pub fn sqrt() -> Self {
        PowerWarp {
            scale: 1.0,
            exponent: 0.5,
        }
    }
}

impl Warp for PowerWarp {
    fn value(&self, t: f64) -> f64 {
        self.scale * (-t).powf(self.exponent)
    }

    fn derivative(&self, t: f64) -> f64 {
        -self.scale * self.exponent * (-t).powf(self.exponent - 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalType {
    Null,
    Timelike,
}

/// Initial data `(t0, ṫ0, ṙ0)` of a geodesic in `(-∞, 0) ×_f S¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpedProductSpec<W: Warp> {
    pub warp: W,
    pub t0: f64,
    pub tdot0: f64,
    pub rdot0: f64,
    pub causal_type: CausalType,
}

impl<W: Warp> WarpedProductSpec<W> {
    pub fn new(warp: W, t0: f64, tdot0: f64, rdot0: f64, causal_type: CausalType) -> Result<Self> {
        if !(t0 < 0.0 && t0.is_finite()) {
            return Err(Error::Parameter(format!(
                "initial time must be negative, got {t0}"
            )));
        }
        let f = warp.value(t0);
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Model(format!(
                "warp must be positive, f({t0}) = {f}"
            )));
        }
        let norm = tdot0 * tdot0 - f * f * rdot0 * rdot0;
        match causal_type {
            CausalType::Null if norm.abs() > 1e-12 * tdot0.abs().max(1.0).powi(2) => {
                return Err(Error::Parameter(format!(
                    "initial data is not null: |γ'|² = {norm}"
                )))
            }
            CausalType::Timelike if norm <= 0.0 => {
                return Err(Error::Parameter(format!(
                    "initial data is not timelike: |γ'|² = {norm}"
                )))
            }
            _ => {}
        }
        if !(tdot0 > 0.0) {
            return Err(Error::Parameter(
                "the geodesic must be future directed".into(),
            ));
        }
        Ok(WarpedProductSpec {
            warp,
            t0,
            tdot0,
            rdot0,
            causal_type,
        })
    }

    /// Future-directed null data with fiber speed `±ṫ0/f(t0)`.
    pub fn null(warp: W, t0: f64, tdot0: f64, positive: bool) -> Result<Self> {
        let f = warp.value(t0);
        let r = tdot0 / f;
        Self::new(
            warp,
            t0,
            tdot0,
            if positive { r } else { -r },
            CausalType::Null,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeodesicSample {
    pub s: f64,
    pub t: f64,
    pub tdot: f64,
    pub r: f64,
    pub rdot: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// `t` came within `10 · step` of the singularity at `t = 0`.
    BlowUp,
    /// `ṫ` exceeded `1 / step`: the affine parameter is close to its end.
    Horizon,
    Steps,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicTrace {
    pub samples: Vec<GeodesicSample>,
    /// Final affine parameter extrapolated from runs with steps `h` and `2h`.
    pub b_estimate: f64,
    /// Final affine parameter of the coarse run with step `2h`.
    pub b_coarse: f64,
    pub terminated: Termination,
    pub step: f64,
    /// `|γ'|²` at the start.
    pub norm_initial: f64,
    /// Largest `|norm - norm_initial|` along the samples.
    pub max_norm_drift: f64,
    /// Largest `|norm - norm_initial| / (1 + ṫ²)`.
    pub max_scaled_drift: f64,
}

impl GeodesicTrace {
    pub fn final_sample(&self) -> &GeodesicSample {
        self.samples.last().expect("trace has samples")
    }

    /// Total fiber angle travelled.
    pub fn winding(&self) -> f64 {
        (self.final_sample().r - self.samples[0].r).abs()
    }
}

struct Run {
    samples: Vec<GeodesicSample>,
    terminated: Termination,
}

fn integrate_run<W: Warp>(spec: &WarpedProductSpec<W>, step: f64, max_steps: usize) -> Result<Run> {
    let f0 = spec.warp.value(spec.t0);
    let c = spec.rdot0 * f0 * f0;
    let warp = &spec.warp;
    let accel = |t: f64| -> Result<(f64, f64)> {
        let f = warp.value(t);
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Model(format!(
                "warp became non-positive: f({t}) = {f}"
            )));
        }
        let rdot = c / (f * f);
        Ok((-rdot * rdot * f * warp.derivative(t), rdot))
    };
    let (mut s, mut t, mut v, mut r) = (0.0, spec.t0, spec.tdot0, 0.0);
    let mut samples = vec![GeodesicSample {
        s,
        t,
        tdot: v,
        r,
        rdot: accel(t)?.1,
    }];
    let guard = -10.0 * step;
    let mut terminated = Termination::Steps;
    for _ in 0..max_steps {
        if t >= guard {
            terminated = Termination::BlowUp;
            break;
        }
        if v > 1.0 / step {
            terminated = Termination::Horizon;
            break;
        }
        let ds = step * (t.abs() / v.abs().max(f64::MIN_POSITIVE)).min(1.0);
        let (a1, w1) = accel(t)?;
        let (a2, w2) = accel(t + 0.5 * ds * v)?;
        let (a3, w3) = accel(t + 0.5 * ds * (v + 0.5 * ds * a1))?;
        let (a4, w4) = accel(t + ds * (v + 0.5 * ds * a2))?;
        let k_t = [v, v + 0.5 * ds * a1, v + 0.5 * ds * a2, v + ds * a3];
        t += ds / 6.0 * (k_t[0] + 2.0 * k_t[1] + 2.0 * k_t[2] + k_t[3]);
        v += ds / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        r += ds / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4);
        s += ds;
        samples.push(GeodesicSample {
            s,
            t,
            tdot: v,
            r,
            rdot: accel(t)?.1,
        });
    }
    Ok(Run {
        samples,
        terminated,
    })
}

/// Integrates the reduced geodesic equations
/// `ẗ = -ṙ² f f'`, `ṙ = C / f²`, `C = ṙ0 f(t0)²` with classical RK4 and
/// affine step `step · min(1, |t| / ṫ)`.
pub fn integrate_geodesic<W: Warp>(
    spec: &WarpedProductSpec<W>,
    step: f64,
    max_steps: usize,
) -> Result<GeodesicTrace> {
    if !(step > 0.0 && step.is_finite()) || max_steps == 0 {
        return Err(Error::Parameter(
            "integration needs step > 0 and max_steps >= 1".into(),
        ));
    }
    let fine = integrate_run(spec, step, max_steps)?;
    let coarse = integrate_run(spec, 2.0 * step, max_steps)?;
    let s_fine = fine.samples.last().expect("samples").s;
    let b_coarse = coarse.samples.last().expect("samples").s;
    let norm = |x: &GeodesicSample| {
        let f = spec.warp.value(x.t);
        x.tdot * x.tdot - f * f * x.rdot * x.rdot
    };
    let norm_initial = norm(&fine.samples[0]);
    let mut max_norm_drift: f64 = 0.0;
    let mut max_scaled_drift: f64 = 0.0;
    for x in &fine.samples {
        let d = (norm(x) - norm_initial).abs();
        max_norm_drift = max_norm_drift.max(d);
        max_scaled_drift = max_scaled_drift.max(d / (1.0 + x.tdot * x.tdot));
    }
    Ok(GeodesicTrace {
        samples: fine.samples,
        b_estimate: 2.0 * s_fine - b_coarse,
        b_coarse,
        terminated: fine.terminated,
        step,
        norm_initial,
        max_norm_drift,
        max_scaled_drift,
    })
}

/// Proper embedding coordinate of the base `(-∞, 0)`: diverges at both ends.
fn base_coordinate(t: f64) -> f64 {
    1.0 / (t * t) - t * t
}

/// The two null generators leaving `(t0, r = 0)` with `ṫ0 = 1`, as a
/// hypersurface gauged by their affine parameter. Each ray ends at the
/// extrapolated parameter `b` without a final point; the embedding
/// `(t^-2 - t^2, cos r, sin r)` is sampled at up to `max_knots` knots.
pub fn warped_cone_hypersurface<W: Warp + Clone>(
    warp: W,
    t0: f64,
    step: f64,
    max_steps: usize,
    max_knots: usize,
) -> Result<(SyntheticNullHypersurface, [GeodesicTrace; 2])> {
    let mut rays = Vec::with_capacity(2);
    let mut traces = Vec::with_capacity(2);
    for (i, positive) in [true, false].into_iter().enumerate() {
        let spec = WarpedProductSpec::null(warp.clone(), t0, 1.0, positive)?;
        let trace = integrate_geodesic(&spec, step, max_steps)?;
        let b = trace.b_estimate;
        let body: Vec<&GeodesicSample> = trace.samples.iter().filter(|x| x.s < b).collect();
        let stride = body.len().div_ceil(max_knots.max(2) - 1).max(1);
        let mut picked: Vec<&GeodesicSample> = body.iter().step_by(stride).copied().collect();
        let last = *body.last().expect("trace has samples");
        if picked.last().map(|x| x.s) != Some(last.s) {
            picked.push(last);
        }
        let mut knots: Vec<f64> = picked.iter().map(|x| x.s).collect();
        let emb: Vec<Vec<f64>> = picked
            .iter()
            .map(|x| vec![base_coordinate(x.t), x.r.cos(), x.r.sin()])
            .collect();
        // The final knot sits at the extrapolated end and reuses the last
        // sampled point.
        *knots.last_mut().expect("knots") = b;
        let values = vec![1.0; knots.len()];
        rays.push(Ray::new(
            ray_id("w", i),
            0.5,
            GaugeInterval::new(0.0, b, true, false)?,
            RayDensity::new(knots, values)?,
            Some(Embedding::new(emb)?),
        )?);
        traces.push(trace);
    }
    let h = SyntheticNullHypersurface::new(rays, None, None)?;
    let [a, b]: [GeodesicTrace; 2] = traces.try_into().expect("two traces");
    Ok((h, [a, b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nec::cd_check;

    #[test]
    fn cone_density_is_power_of_gauge() {
        let h = cone_hypersurface(4, 4.0).unwrap();
        assert_eq!(h.rays().len(), DEFAULT_RAYS);
        let r = &h.rays()[0];
        assert_eq!(r.density.eval(2.0), 4.0);
        assert!(cd_check(r, 4.0).unwrap().pass);
        let h3 = cone_hypersurface(3, 4.0).unwrap();
        assert_eq!(h3.rays()[5].density.eval(1.5), 1.5);
        assert!(cd_check(&h3.rays()[5], 3.0).unwrap().pass);
        assert!((h.total_weight() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cone_directions_are_unit() {
        for d in 1..6 {
            for w in sphere_directions(d, 17) {
                let n: f64 = w.iter().map(|x| x * x).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ingoing_first_slope_is_exact_for_power_of_two_radius() {
        let h = sphere_boundary_hypersurface(2.0, 0.0, Congruence::Ingoing).unwrap();
        let r = &h.rays()[0];
        assert_eq!(r.density.right_slope(0.0), -1.0);
        assert_eq!(r.interval.b, 2.0);
        assert!(cd_check(r, 4.0).unwrap().pass);
    }

    #[test]
    fn radial_timelike_geodesic_is_affine() {
        let spec = WarpedProductSpec::new(PowerWarp::sqrt(), -1.0, 2.0, 0.0, CausalType::Timelike)
            .unwrap();
        let tr = integrate_geodesic(&spec, 1e-3, 1_000_000).unwrap();
        assert!(tr.samples.iter().all(|x| (x.tdot - 2.0).abs() < 1e-12));
        assert!((tr.b_estimate - 0.5).abs() < 1e-4, "{}", tr.b_estimate);
    }

    #[test]
    fn non_null_data_is_rejected() {
        assert!(
            WarpedProductSpec::new(PowerWarp::sqrt(), -1.0, 1.0, 0.5, CausalType::Null).is_err()
        );
    }
}
