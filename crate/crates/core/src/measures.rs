//! Probability measures on `H` in gauge coordinates, relative entropy and
//! entropy power.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::hypersurface::{SyntheticNullHypersurface, TransversePair};
use crate::ray::RayId;

/// Tolerance on total masses.
pub const MASS_TOL: f64 = 1e-12;

/// Restriction of a measure to one ray: piecewise-constant density with
/// respect to gauge Lebesgue measure plus point masses.
#[derive(Clone, Debug, PartialEq)]
pub struct RayMeasureSlice {
    ray: RayId,
    mass: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
    atoms: Vec<(f64, f64)>,
}

impl RayMeasureSlice {
    /// `values[i]` is the density on `[knots[i], knots[i + 1]]`. The mass is
    /// computed from the data.
    pub fn new(
        ray: impl Into<RayId>,
        knots: Vec<f64>,
        values: Vec<f64>,
        mut atoms: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let ray = ray.into();
        if knots.is_empty() {
            if !values.is_empty() {
                return Err(invalid(format!("slice {ray}: values without knots")));
            }
        } else if values.len() + 1 != knots.len() {
            return Err(invalid(format!(
                "slice {ray}: {} knots need {} piece values, got {}",
                knots.len(),
                knots.len() - 1,
                values.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "slice {ray}: knots must be finite and increasing"
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid(format!(
                "slice {ray}: densities must be finite and non-negative"
            )));
        }
        if atoms
            .iter()
            .any(|(g, m)| !(g.is_finite() && m.is_finite() && *m >= 0.0))
        {
            return Err(invalid(format!(
                "slice {ray}: atoms need finite gauge and mass >= 0"
            )));
        }
        atoms.retain(|(_, m)| *m > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mass = values
            .iter()
            .zip(knots.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum::<f64>()
            + atoms.iter().map(|a| a.1).sum::<f64>();
        Ok(RayMeasureSlice {
            ray,
            mass,
            knots,
            values,
            atoms,
        })
    }

    /// Uniform density of total `mass` on `[lo, hi]`.
    pub fn uniform(ray: impl Into<RayId>, lo: f64, hi: f64, mass: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(invalid(format!(
                "uniform block needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Self::new(ray, vec![lo, hi], vec![mass / (hi - lo)], vec![])
    }

    pub fn atom(ray: impl Into<RayId>, gauge: f64, mass: f64) -> Result<Self> {
        Self::new(ray, vec![], vec![], vec![(gauge, mass)])
    }

    pub fn ray(&self) -> &RayId {
        &self.ray
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    /// Smallest and largest gauge carrying the slice data.
    pub fn support(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let (Some(a), Some(b)) = (self.knots.first(), self.knots.last()) {
            lo = lo.min(*a);
            hi = hi.max(*b);
        }
        for (g, _) in &self.atoms {
            lo = lo.min(*g);
            hi = hi.max(*g);
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Positive-mass density pieces `(x0, x1, density)`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.knots
            .windows(2)
            .zip(&self.values)
            .filter(|(_, v)| **v > 0.0)
            .map(|(w, v)| (w[0], w[1], *v))
    }

    /// Affine change of gauge `g -> shift + scale g` carrying the mass along.
    pub(crate) fn reparametrized(&self, shift: f64, scale: f64) -> Self {
        RayMeasureSlice {
            ray: self.ray.clone(),
            mass: self.mass,
            knots: self.knots.iter().map(|k| shift + scale * k).collect(),
            values: self.values.iter().map(|v| v / scale).collect(),
            atoms: self
                .atoms
                .iter()
                .map(|(g, m)| (shift + scale * g, *m))
                .collect(),
        }
    }

    pub(crate) fn from_raw(
        ray: RayId,
        knots: Vec<f64>,
        values: Vec<f64>,
        atoms: Vec<(f64, f64)>,
    ) -> Self {
        let mass = values
            .iter()
            .zip(knots.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum::<f64>()
            + atoms.iter().map(|a| a.1).sum::<f64>();
        RayMeasureSlice {
            ray,
            mass,
            knots,
            values,
            atoms,
        }
    }
}

/// Probability measure on `H`: one slice per charged ray plus mass at the
/// shared tip.
#[derive(Clone, Debug, PartialEq)]
pub struct HMeasure {
    slices: Vec<RayMeasureSlice>,
    tip_mass: f64,
}

impl HMeasure {
    /// Total mass must be one within [`MASS_TOL`].
    pub fn new(slices: Vec<RayMeasureSlice>, tip_mass: f64) -> Result<Self> {
        let m = Self::new_sub_probability(slices, tip_mass)?;
        if (m.total_mass() - 1.0).abs() > MASS_TOL {
            return Err(invalid(format!(
                "measure has total mass {}, expected 1",
                m.total_mass()
            )));
        }
        Ok(m)
    }

    /// Like [`HMeasure::new`] without the normalisation requirement; used for
    /// restrictions such as the part of a measure off the tip.
    pub fn new_sub_probability(mut slices: Vec<RayMeasureSlice>, tip_mass: f64) -> Result<Self> {
        if !(tip_mass.is_finite() && tip_mass >= 0.0) {
            return Err(invalid("tip mass must be finite and non-negative"));
        }
        slices.sort_by(|a, b| a.ray.cmp(&b.ray));
        if let Some(w) = slices.windows(2).find(|w| w[0].ray == w[1].ray) {
            return Err(invalid(format!("two slices for ray {}", w[0].ray)));
        }
        Ok(HMeasure { slices, tip_mass })
    }

    pub(crate) fn from_sorted(slices: Vec<RayMeasureSlice>, tip_mass: f64) -> Self {
        HMeasure { slices, tip_mass }
    }

    /// Single uniform block of unit mass.
    pub fn uniform_on(ray: impl Into<RayId>, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![RayMeasureSlice::uniform(ray, lo, hi, 1.0)?], 0.0)
    }

    pub fn slices(&self) -> &[RayMeasureSlice] {
        &self.slices
    }

    pub fn slice(&self, ray: &RayId) -> Option<&RayMeasureSlice> {
        self.slices
            .binary_search_by(|s| s.ray.cmp(ray))
            .ok()
            .map(|i| &self.slices[i])
    }

    pub fn ray_mass(&self, ray: &RayId) -> f64 {
        self.slice(ray).map_or(0.0, |s| s.mass)
    }

    pub fn tip_mass(&self) -> f64 {
        self.tip_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.tip_mass + self.slices.iter().map(|s| s.mass).sum::<f64>()
    }

    /// True when the measure has no density part at all.
    pub fn is_singular(&self) -> bool {
        self.slices.iter().all(|s| s.pieces().next().is_none())
    }

    pub fn has_atoms(&self) -> bool {
        self.tip_mass > 0.0 || self.slices.iter().any(|s| s.has_atoms())
    }

    /// Every slice lies on a ray of `h`, inside its closed interval.
    pub fn check_support(&self, h: &SyntheticNullHypersurface) -> Result<()> {
        if self.tip_mass > 0.0 && h.shared_tip().is_none() {
            return Err(invalid(
                "measure charges a tip the hypersurface does not have",
            ));
        }
        for s in &self.slices {
            let ray = h.ray(&s.ray)?;
            if let Some((lo, hi)) = s.support() {
                if !(ray.interval.contains(lo) && ray.interval.contains(hi)) {
                    return Err(invalid(format!(
                        "measure support [{lo}, {hi}] leaves the interval of ray {}",
                        s.ray
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Relative entropy value; `Infinite` is `+inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Entropy {
    Finite(f64),
    Infinite,
}

impl Entropy {
    pub fn is_finite(&self) -> bool {
        matches!(self, Entropy::Finite(_))
    }

    pub fn value(&self) -> f64 {
        match self {
            Entropy::Finite(v) => *v,
            Entropy::Infinite => f64::INFINITY,
        }
    }

    /// `exp(-Ent / m)`, exactly zero at infinite entropy.
    pub fn power(&self, m: f64) -> f64 {
        match self {
            Entropy::Finite(v) => (-v / m).exp(),
            Entropy::Infinite => 0.0,
        }
    }
}

/// Contribution of one slice to `Ent(mu | m)`.
///
/// With `m = sum_a w_a h_a dg` the relative density on ray `a` is
/// `rho = p / (w_a h_a)`, so the contribution is
/// `sum_pieces p L log(p / w_a) - p ∫ log h_a`.
fn slice_entropy(s: &RayMeasureSlice, h: &SyntheticNullHypersurface) -> Result<Entropy> {
    let ray = h.ray(&s.ray)?;
    if s.has_atoms() {
        return Ok(Entropy::Infinite);
    }
    if let Some((lo, hi)) = s.support() {
        if !(ray.interval.contains(lo) && ray.interval.contains(hi)) {
            return Err(invalid(format!(
                "measure support [{lo}, {hi}] leaves the interval of ray {}",
                s.ray
            )));
        }
        if hi > ray.truncation() {
            return Err(Error::Precondition(format!(
                "entropy on ray {} needs the density tabulated up to {hi}, truncation is {}",
                s.ray,
                ray.truncation()
            )));
        }
    }
    let w = ray.weight;
    let mut acc = 0.0;
    for (x0, x1, p) in s.pieces() {
        let log_h = ray.density.log_integral(x0, x1);
        if log_h == f64::NEG_INFINITY {
            return Ok(Entropy::Infinite);
        }
        acc += p * (x1 - x0) * (p / w).ln() - p * log_h;
    }
    Ok(Entropy::Finite(acc))
}

/// Per-ray `(ray, mass, entropy contribution)`.
pub fn entropy_contributions(
    mu: &HMeasure,
    h: &SyntheticNullHypersurface,
) -> Result<Vec<(RayId, f64, Entropy)>> {
    mu.slices
        .iter()
        .map(|s| Ok((s.ray.clone(), s.mass, slice_entropy(s, h)?)))
        .collect()
}

/// `Ent(mu | m) = ∫ rho log rho dm`; infinite when `mu` has atoms (tip
/// included) or charges a set where the density vanishes.
pub fn entropy(mu: &HMeasure, h: &SyntheticNullHypersurface) -> Result<Entropy> {
    mu.check_support(h)?;
    let mut total = 0.0;
    let mut infinite = mu.tip_mass > 0.0;
    for s in &mu.slices {
        match slice_entropy(s, h)? {
            Entropy::Finite(v) => total += v,
            Entropy::Infinite => infinite = true,
        }
    }
    Ok(if infinite {
        Entropy::Infinite
    } else {
        Entropy::Finite(total)
    })
}

/// Shannon entropy power `exp(-Ent(mu | m) / m_dim)`.
pub fn entropy_power(mu: &HMeasure, h: &SyntheticNullHypersurface, m_dim: f64) -> Result<f64> {
    if !(m_dim > 0.0) {
        return Err(Error::Parameter(format!(
            "entropy power needs M > 0, got {m_dim}"
        )));
    }
    Ok(entropy(mu, h)?.power(m_dim))
}

/// `∫ phi dmu` for a transverse (ray-constant) function `phi`.
pub fn integrate_transverse(mu: &HMeasure, phi: impl Fn(&RayId) -> f64) -> Result<f64> {
    if mu.tip_mass > 0.0 {
        return Err(Error::Precondition(
            "transverse integrals need a measure off the tip".into(),
        ));
    }
    Ok(mu.slices.iter().map(|s| phi(&s.ray) * s.mass).sum())
}

/// Pushes `mu` through the gauge change of `tp`; ray masses are unchanged.
pub fn transform_measure(mu: &HMeasure, tp: &TransversePair) -> Result<HMeasure> {
    let slices = mu
        .slices
        .iter()
        .map(|s| Ok(s.reparametrized(tp.shift(&s.ray)?, tp.scale(&s.ray)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(HMeasure::from_sorted(slices, mu.tip_mass))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisintegrationIssue {
    pub ray: Option<RayId>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisintegrationReport {
    pub pass: bool,
    pub total_weight: f64,
    pub issues: Vec<DisintegrationIssue>,
}

impl DisintegrationReport {
    pub fn offending_rays(&self) -> Vec<&RayId> {
        self.issues.iter().filter_map(|i| i.ray.as_ref()).collect()
    }

    pub fn summary(&self) -> String {
        if self.pass {
            return "disintegration consistent".into();
        }
        self.issues
            .iter()
            .map(|i| match &i.ray {
                Some(r) => format!("ray {r}: {}", i.reason),
                None => i.reason.clone(),
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Consistency of the stored disintegration: probability quotient weights,
/// non-negative densities with finite mass on the tabulated range.
/// Endpoint atoms cannot be represented by a density, so they are absent by
/// construction.
pub fn disintegration_check(h: &SyntheticNullHypersurface) -> DisintegrationReport {
    let mut issues = Vec::new();
    let total = h.total_weight();
    if !((total - 1.0).abs() <= MASS_TOL) {
        issues.push(DisintegrationIssue {
            ray: None,
            reason: format!("quotient not probability (total weight {total})"),
        });
    }
    for r in h.rays() {
        if !(r.weight > 0.0) {
            issues.push(DisintegrationIssue {
                ray: Some(r.id.clone()),
                reason: format!("non-positive weight {}", r.weight),
            });
        }
        if let Some((k, v)) = r
            .density
            .knots()
            .iter()
            .zip(r.density.values())
            .find(|(_, v)| **v < 0.0)
        {
            issues.push(DisintegrationIssue {
                ray: Some(r.id.clone()),
                reason: format!("negative density {v} at gauge {k}"),
            });
        }
        let mass = r.density.integral(r.interval.a, r.truncation());
        if !mass.is_finite() {
            issues.push(DisintegrationIssue {
                ray: Some(r.id.clone()),
                reason: "infinite mass on the tabulated range".into(),
            });
        }
    }
    DisintegrationReport {
        pass: issues.is_empty(),
        total_weight: total,
        issues,
    }
}

/// Masses per ray, in ray order.
pub fn ray_masses(mu: &HMeasure) -> BTreeMap<RayId, f64> {
    mu.slices.iter().map(|s| (s.ray.clone(), s.mass)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::{GaugeInterval, Ray, RayDensity};

    fn unit_ray(density: RayDensity) -> SyntheticNullHypersurface {
        let end = density.last_knot();
        let r = Ray::new(
            "r",
            1.0,
            GaugeInterval::new(0.0, end, true, true).unwrap(),
            density,
            None,
        )
        .unwrap();
        SyntheticNullHypersurface::new(vec![r], Some(vec!["r".into()]), None).unwrap()
    }

    #[test]
    fn uniform_measure_on_uniform_ray_has_zero_entropy() {
        let h = unit_ray(RayDensity::constant(0.0, 1.0, 1.0).unwrap());
        let mu = HMeasure::uniform_on("r", 0.0, 1.0).unwrap();
        assert_eq!(entropy(&mu, &h).unwrap(), Entropy::Finite(0.0));
        assert_eq!(entropy_power(&mu, &h, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn half_block_has_entropy_log_two() {
        let h = unit_ray(RayDensity::constant(0.0, 1.0, 1.0).unwrap());
        let mu = HMeasure::uniform_on("r", 0.0, 0.5).unwrap();
        let e = entropy(&mu, &h).unwrap().value();
        assert!((e - 2f64.ln()).abs() < 1e-15);
        let u = entropy_power(&mu, &h, 3.0).unwrap();
        assert!((u - 2f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        assert!((u - 0.793700).abs() < 1e-6);
    }

    #[test]
    fn tip_atom_gives_infinite_entropy_and_zero_power() {
        let h = unit_ray(RayDensity::constant(0.0, 1.0, 1.0).unwrap());
        let mu = HMeasure::new(
            vec![RayMeasureSlice::uniform("r", 0.0, 1.0, 0.5).unwrap()],
            0.5,
        )
        .unwrap();
        assert_eq!(entropy(&mu, &h).unwrap(), Entropy::Infinite);
        assert_eq!(entropy_power(&mu, &h, 3.0).unwrap(), 0.0);
        assert!(integrate_transverse(&mu, |_| 1.0).is_err());
    }

    #[test]
    fn charging_a_zero_density_region_is_infinite() {
        let h = unit_ray(RayDensity::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 2.0]).unwrap());
        let mu = HMeasure::uniform_on("r", 0.1, 0.4).unwrap();
        assert_eq!(entropy(&mu, &h).unwrap(), Entropy::Infinite);
    }

    #[test]
    fn support_outside_ray_is_input_error() {
        let h = unit_ray(RayDensity::constant(0.0, 1.0, 1.0).unwrap());
        let mu = HMeasure::uniform_on("r", 0.5, 1.5).unwrap();
        assert!(matches!(entropy(&mu, &h), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn transverse_integral_is_weighted_sum() {
        let mu = HMeasure::new(
            vec![
                RayMeasureSlice::uniform("a", 0.0, 1.0, 0.25).unwrap(),
                RayMeasureSlice::uniform("b", 0.0, 1.0, 0.75).unwrap(),
            ],
            0.0,
        )
        .unwrap();
        assert_eq!(integrate_transverse(&mu, |_| 1.0).unwrap(), 1.0);
        let v = integrate_transverse(&mu, |r| if r.as_str() == "a" { 2.0 } else { 4.0 }).unwrap();
        assert!((v - 3.5).abs() < 1e-15);
    }

    #[test]
    fn disintegration_flags_weights_and_negative_knots() {
        let mk = |id: &str, w: f64, v: f64| {
            Ray::new(
                id,
                w,
                GaugeInterval::new(0.0, 1.0, true, true).unwrap(),
                RayDensity::new(vec![0.0, 1.0], vec![1.0, v]).unwrap(),
                None,
            )
            .unwrap()
        };
        let bad_weights = SyntheticNullHypersurface::new_unchecked(
            vec![mk("a", 0.45, 1.0), mk("b", 0.45, 1.0)],
            None,
            None,
        )
        .unwrap();
        let rep = disintegration_check(&bad_weights);
        assert!(!rep.pass);
        assert!(rep.issues[0].reason.starts_with("quotient not probability"));

        let neg = SyntheticNullHypersurface::new_unchecked(
            vec![mk("a", 0.5, 1.0), mk("b", 0.5, -0.1)],
            None,
            None,
        )
        .unwrap();
        let rep = disintegration_check(&neg);
        assert!(!rep.pass);
        assert_eq!(rep.offending_rays(), vec![&RayId::from("b")]);
        assert!(SyntheticNullHypersurface::new(
            vec![mk("a", 0.5, 1.0), mk("b", 0.5, -0.1)],
            None,
            None
        )
        .is_err());
    }
}
