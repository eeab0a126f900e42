//! Seeded random instances: concave and convex-bump rays for the
//! localization cross-check, future complete instances for area
//! monotonicity, and sections at the start of bounded rays for the ray
//! length bound.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::CrossSection;
use crate::hypersurface::SyntheticNullHypersurface;
use crate::ray::{GaugeInterval, Ray, RayDensity, RayId};
use crate::rng::sub_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Concave,
    Bump,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusInstance {
    pub index: usize,
    pub kind: InstanceKind,
    pub n: f64,
    pub surface: SyntheticNullHypersurface,
    pub bump_ray: Option<RayId>,
}

type Profile = Box<dyn Fn(f64) -> f64>;

fn ray_id(i: usize) -> RayId {
    RayId::new(format!("r{i}"))
}

fn weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln() + 0.05)
        .collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = w[..k - 1].iter().sum();
    w[k - 1] = 1.0 - head;
    w
}

fn uniform_knots(rng: &mut ChaCha8Rng, a: f64, len: f64) -> Vec<f64> {
    let m = rng.gen_range(9..=13);
    (0..m)
        .map(|i| {
            if i == m - 1 {
                a + len
            } else {
                a + len * i as f64 / (m - 1) as f64
            }
        })
        .collect()
}

/// A concave profile on `[0, len]` bounded below by a positive constant:
/// either a concave quadratic or a minimum of two or three affine maps.
fn concave_profile(rng: &mut ChaCha8Rng, len: f64) -> Profile {
    if rng.gen_bool(0.5) {
        let c0 = rng.gen_range(0.5..2.0);
        let c1 = rng.gen_range(-c0 / (3.0 * len)..c0 / len);
        let c2 = rng.gen_range(0.0..c0 / (3.0 * len * len));
        Box::new(move |t| c0 + c1 * t - c2 * t * t)
    } else {
        let m = rng.gen_range(2..=3);
        let lines: Vec<(f64, f64)> = (0..m)
            .map(|_| {
                let c0 = rng.gen_range(0.5..2.0);
                (c0, rng.gen_range(-c0 / (2.0 * len)..2.0 / len))
            })
            .collect();
        Box::new(move |t| {
            lines
                .iter()
                .map(|(c, s)| c + s * t)
                .fold(f64::INFINITY, f64::min)
        })
    }
}

/// `c0 + c1 t + κ (t - s)²` with `κ len² / c0` in `[0.3, 2]`.
fn bump_profile(rng: &mut ChaCha8Rng, len: f64) -> Profile {
    let c0 = rng.gen_range(0.5..2.0);
    let c1 = rng.gen_range(-c0 / (3.0 * len)..c0 / len);
    let s = rng.gen_range(0.0..len);
    let kappa = rng.gen_range(0.3..2.0) * c0 / (len * len);
    Box::new(move |t| c0 + c1 * t + kappa * (t - s) * (t - s))
}

fn bounded_ray(
    id: RayId,
    weight: f64,
    knots: Vec<f64>,
    g: &dyn Fn(f64) -> f64,
    n: f64,
) -> Result<Ray> {
    let a = knots[0];
    let b = *knots.last().expect("knots");
    let density =
        RayDensity::sample_with_exponent(knots, n - 2.0, |t| g(t - a).max(0.0).powf(n - 2.0))?;
    Ray::new(
        id,
        weight,
        GaugeInterval::new(a, b, true, true)?,
        density,
        None,
    )
}

/// Instance `index` of the localization corpus: even indices have concave
/// `h^{1/(N-2)}` on every ray, odd indices carry one convex bump on a ray of
/// positive weight. One to three rays, nine to thirteen knots, `N` in
/// `[3, 5]`.
pub fn localization_instance(seed: u64, index: usize) -> Result<CorpusInstance> {
    let mut rng = sub_rng(seed, index as u64);
    let kind = if index.is_multiple_of(2) {
        InstanceKind::Concave
    } else {
        InstanceKind::Bump
    };
    let n = rng.gen_range(3.0..5.0);
    let k = rng.gen_range(1..=3);
    let w = weights(&mut rng, k);
    let bump_at = (kind == InstanceKind::Bump).then(|| rng.gen_range(0..k));
    let mut rays = Vec::with_capacity(k);
    for (i, wi) in w.iter().enumerate() {
        let a = rng.gen_range(-1.0..1.0);
        let len = rng.gen_range(0.5..3.0);
        let knots = uniform_knots(&mut rng, a, len);
        let g = if bump_at == Some(i) {
            bump_profile(&mut rng, len)
        } else {
            concave_profile(&mut rng, len)
        };
        rays.push(bounded_ray(ray_id(i), *wi, knots, &g, n)?);
    }
    let surface = SyntheticNullHypersurface::new(rays, None, Some(n))?;
    Ok(CorpusInstance {
        index,
        kind,
        n,
        surface,
        bump_ray: bump_at.map(ray_id),
    })
}

pub fn localization_corpus(seed: u64, count: usize) -> Result<Vec<CorpusInstance>> {
    (0..count).map(|i| localization_instance(seed, i)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectionPairInstance {
    pub index: usize,
    pub n: f64,
    pub surface: SyntheticNullHypersurface,
    pub first: CrossSection,
    pub second: CrossSection,
}

/// Future complete instance with non-decreasing concave profiles (one in
/// ten carries a convex bump instead) and two ordered sections.
pub fn hawking_instance(seed: u64, index: usize) -> Result<SectionPairInstance> {
    let mut rng = sub_rng(seed, index as u64);
    let n = rng.gen_range(3.0..5.0);
    let k = rng.gen_range(1..=3);
    let w = weights(&mut rng, k);
    let bumpy = rng.gen_bool(0.1);
    let mut rays = Vec::with_capacity(k);
    let mut first = std::collections::BTreeMap::new();
    let mut second = std::collections::BTreeMap::new();
    for (i, wi) in w.iter().enumerate() {
        let a = rng.gen_range(-1.0..1.0);
        let len = rng.gen_range(1.0..3.0);
        let knots = uniform_knots(&mut rng, a, len);
        let g: Profile = if bumpy && i == 0 {
            bump_profile(&mut rng, len)
        } else {
            let m = rng.gen_range(1..=3);
            let lines: Vec<(f64, f64)> = (0..m)
                .map(|_| (rng.gen_range(0.2..2.0), rng.gen_range(0.0..2.0 / len)))
                .collect();
            Box::new(move |t| {
                lines
                    .iter()
                    .map(|(c, s)| c + s * t)
                    .fold(f64::INFINITY, f64::min)
            })
        };
        let density = RayDensity::sample_with_exponent(knots, n - 2.0, |t| g(t - a).powf(n - 2.0))?;
        rays.push(Ray::new(
            ray_id(i),
            *wi,
            GaugeInterval::future_complete(a),
            density,
            None,
        )?);
        let s1 = a + rng.gen_range(0.0..len);
        first.insert(ray_id(i), s1);
        second.insert(ray_id(i), s1 + rng.gen_range(0.0..len));
    }
    let surface = SyntheticNullHypersurface::new(rays, None, Some(n))?;
    Ok(SectionPairInstance {
        index,
        n,
        first: CrossSection::new(first, &surface)?,
        second: CrossSection::new(second, &surface)?,
        surface,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectionInstance {
    pub index: usize,
    pub n: f64,
    pub surface: SyntheticNullHypersurface,
    pub section: CrossSection,
}

/// Bounded rays starting at gauge 0 with profiles `c0 - c1 t - c2 t²` (or a
/// convex bump) cut at a random fraction of the first zero, which may
/// overshoot it. Sections sit at gauge 0.
pub fn penrose_instance(seed: u64, index: usize) -> Result<SectionInstance> {
    let mut rng = sub_rng(seed, index as u64);
    let n = rng.gen_range(3.0..5.0);
    let k = rng.gen_range(1..=3);
    let w = weights(&mut rng, k);
    let mut rays = Vec::with_capacity(k);
    let mut section = std::collections::BTreeMap::new();
    for (i, wi) in w.iter().enumerate() {
        let c0: f64 = rng.gen_range(0.5..2.0);
        let c1 = c0 * rng.gen_range(0.05..1.0);
        let c2 = c0 * rng.gen_range(0.0..1.0);
        let root = if c2 > 0.0 {
            (-c1 + (c1 * c1 + 4.0 * c2 * c0).sqrt()) / (2.0 * c2)
        } else {
            c0 / c1
        };
        let b = root * rng.gen_range(0.3..1.1);
        let g: Profile = if rng.gen_bool(0.15) {
            bump_profile(&mut rng, b)
        } else {
            Box::new(move |t| c0 - c1 * t - c2 * t * t)
        };
        let knots = uniform_knots(&mut rng, 0.0, b);
        rays.push(bounded_ray(ray_id(i), *wi, knots, &g, n)?);
        section.insert(ray_id(i), 0.0);
    }
    let surface = SyntheticNullHypersurface::new(rays, None, Some(n))?;
    Ok(SectionInstance {
        index,
        n,
        section: CrossSection::new(section, &surface)?,
        surface,
    })
}
