use std::collections::{BTreeMap, BTreeSet};

use crate::error::{invalid, Error, Result};
use crate::measures::disintegration_check;
use crate::ray::{GaugeInterval, Ray, RayDensity, RayId};

/// The triple `(H, G, m)` in ray-decomposed form: quotient weights, gauge
/// intervals and conditional densities per ray, plus an optional initial
/// point shared by a subset of rays (a cone vertex).
///
/// Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticNullHypersurface {
    rays: Vec<Ray>,
    index: BTreeMap<RayId, usize>,
    shared_tip: Option<BTreeSet<RayId>>,
    dimension_hint: Option<f64>,
}

impl SyntheticNullHypersurface {
    /// Builds an instance and rejects it unless
    /// [`disintegration_check`](crate::measures::disintegration_check) passes.
    pub fn new(
        rays: Vec<Ray>,
        shared_tip: Option<Vec<RayId>>,
        dimension_hint: Option<f64>,
    ) -> Result<Self> {
        let h = Self::new_unchecked(rays, shared_tip, dimension_hint)?;
        let report = disintegration_check(&h);
        if !report.pass {
            return Err(invalid(report.summary()));
        }
        Ok(h)
    }

    /// Structural checks only (unique ids, tip references, dimension hint).
    /// Weight normalisation and density signs are left to
    /// [`disintegration_check`](crate::measures::disintegration_check).
    pub fn new_unchecked(
        rays: Vec<Ray>,
        shared_tip: Option<Vec<RayId>>,
        dimension_hint: Option<f64>,
    ) -> Result<Self> {
        if rays.is_empty() {
            return Err(invalid("a hypersurface needs at least one ray"));
        }
        let mut index = BTreeMap::new();
        for (i, r) in rays.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(invalid(format!("duplicate ray id {}", r.id)));
            }
        }
        let shared_tip = match shared_tip {
            Some(ids) => {
                let set: BTreeSet<RayId> = ids.into_iter().collect();
                if let Some(bad) = set.iter().find(|id| !index.contains_key(*id)) {
                    return Err(invalid(format!("tip refers to unknown ray {bad}")));
                }
                for id in &set {
                    if !rays[index[id]].interval.has_initial_point {
                        return Err(invalid(format!(
                            "tip-attached ray {id} must have an initial point"
                        )));
                    }
                }
                Some(set)
            }
            None => None,
        };
        if let Some(n) = dimension_hint {
            if !(n.is_finite() && n > 0.0) {
                return Err(invalid(format!("dimension hint must be positive, got {n}")));
            }
        }
        Ok(SyntheticNullHypersurface {
            rays,
            index,
            shared_tip,
            dimension_hint,
        })
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn ray(&self, id: &RayId) -> Result<&Ray> {
        self.index
            .get(id)
            .map(|&i| &self.rays[i])
            .ok_or_else(|| invalid(format!("unknown ray id {id}")))
    }

    pub fn contains_ray(&self, id: &RayId) -> bool {
        self.index.contains_key(id)
    }

    pub fn shared_tip(&self) -> Option<&BTreeSet<RayId>> {
        self.shared_tip.as_ref()
    }

    pub fn tip_attached(&self, id: &RayId) -> bool {
        self.shared_tip.as_ref().is_some_and(|s| s.contains(id))
    }

    pub fn dimension_hint(&self) -> Option<f64> {
        self.dimension_hint
    }

    pub fn total_weight(&self) -> f64 {
        self.rays.iter().map(|r| r.weight).sum()
    }

    /// Returns a copy with every ray passed through `f`; ids, tip and hint are
    /// kept.
    pub fn map_rays(&self, f: impl Fn(&Ray) -> Result<Ray>) -> Result<Self> {
        let rays = self.rays.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new_unchecked(
            rays,
            self.shared_tip
                .as_ref()
                .map(|s| s.iter().cloned().collect()),
            self.dimension_hint,
        )
    }
}

/// A point of `H`: the shared tip or a gauge value on a ray.
#[derive(Clone, Debug, PartialEq)]
pub enum PointOnH {
    Tip,
    OnRay { ray: RayId, gauge: f64 },
}

impl PointOnH {
    pub fn on(ray: impl Into<RayId>, gauge: f64) -> Self {
        PointOnH::OnRay {
            ray: ray.into(),
            gauge,
        }
    }
}

fn validate_point(x: &PointOnH, h: &SyntheticNullHypersurface) -> Result<()> {
    match x {
        PointOnH::Tip => {
            if h.shared_tip.is_none() {
                return Err(invalid("hypersurface has no shared tip"));
            }
        }
        PointOnH::OnRay { ray, gauge } => {
            let r = h.ray(ray)?;
            if !r.interval.contains(*gauge) {
                return Err(invalid(format!(
                    "gauge {gauge} outside the interval of ray {ray}"
                )));
            }
        }
    }
    Ok(())
}

/// Causal order on `H`: points on the same ray are ordered by gauge, the tip
/// precedes every point of a tip-attached ray, distinct rays are unrelated.
pub fn causal_leq(x: &PointOnH, y: &PointOnH, h: &SyntheticNullHypersurface) -> Result<bool> {
    validate_point(x, h)?;
    validate_point(y, h)?;
    Ok(match (x, y) {
        (PointOnH::Tip, PointOnH::Tip) => true,
        (PointOnH::Tip, PointOnH::OnRay { ray, .. }) => h.tip_attached(ray),
        (PointOnH::OnRay { .. }, PointOnH::Tip) => false,
        (PointOnH::OnRay { ray: r1, gauge: g1 }, PointOnH::OnRay { ray: r2, gauge: g2 }) => {
            r1 == r2 && g1 <= g2
        }
    })
}

/// Gauge flow: moves `x` by `t` along its ray.
pub fn psi_flow(x: &PointOnH, t: f64, h: &SyntheticNullHypersurface) -> Result<PointOnH> {
    let PointOnH::OnRay { ray, gauge } = x else {
        return Err(Error::Precondition(
            "the gauge flow is not defined at the tip".into(),
        ));
    };
    let r = h.ray(ray)?;
    let iv = r.interval;
    if !iv.contains(*gauge) {
        return Err(invalid(format!(
            "gauge {gauge} outside the interval of ray {ray}"
        )));
    }
    let target = gauge + t;
    if !iv.contains(target) {
        return Err(Error::Domain {
            gauge: target,
            range: (iv.a - gauge, iv.b - gauge),
        });
    }
    Ok(PointOnH::OnRay {
        ray: ray.clone(),
        gauge: target,
    })
}

/// Transverse functions `(f, h)` acting by `G -> f + h G`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransversePair {
    f: BTreeMap<RayId, f64>,
    h: BTreeMap<RayId, f64>,
}

impl TransversePair {
    pub fn new(f: BTreeMap<RayId, f64>, h: BTreeMap<RayId, f64>) -> Result<Self> {
        if let Some((id, v)) = h.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!(
                "transverse scale for ray {id} must be positive, got {v}"
            )));
        }
        if let Some((id, _)) = f.iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid(format!(
                "transverse shift for ray {id} must be finite"
            )));
        }
        Ok(TransversePair { f, h })
    }

    /// The same `(f, h)` on every ray of `surface`.
    pub fn uniform(surface: &SyntheticNullHypersurface, f: f64, h: f64) -> Result<Self> {
        let ids = surface.rays().iter().map(|r| r.id.clone());
        Self::new(
            ids.clone().map(|id| (id, f)).collect(),
            ids.map(|id| (id, h)).collect(),
        )
    }

    pub fn identity(surface: &SyntheticNullHypersurface) -> Self {
        Self::uniform(surface, 0.0, 1.0).expect("identity pair is valid")
    }

    pub fn shift(&self, id: &RayId) -> Result<f64> {
        self.f
            .get(id)
            .copied()
            .ok_or_else(|| invalid(format!("transverse pair has no shift for ray {id}")))
    }

    pub fn scale(&self, id: &RayId) -> Result<f64> {
        self.h
            .get(id)
            .copied()
            .ok_or_else(|| invalid(format!("transverse pair has no scale for ray {id}")))
    }

    /// The pair undoing `self`: `(-f/h, 1/h)`.
    pub fn inverse(&self) -> Self {
        TransversePair {
            f: self
                .f
                .iter()
                .map(|(id, f)| (id.clone(), -f / self.h.get(id).copied().unwrap_or(1.0)))
                .collect(),
            h: self.h.iter().map(|(id, h)| (id.clone(), 1.0 / h)).collect(),
        }
    }

    /// New gauge value of `g` on ray `id`.
    pub fn apply(&self, id: &RayId, g: f64) -> Result<f64> {
        Ok(self.shift(id)? + self.scale(id)? * g)
    }
}

fn reparametrize(ray: &Ray, tp: &TransversePair, density_factor: f64) -> Result<Ray> {
    let f = tp.shift(&ray.id)?;
    let s = tp.scale(&ray.id)?;
    let iv = ray.interval;
    let b = if iv.b.is_finite() { f + s * iv.b } else { iv.b };
    let interval = GaugeInterval::new(f + s * iv.a, b, iv.has_initial_point, iv.has_final_point)?;
    let knots: Vec<f64> = ray.density.knots().iter().map(|k| f + s * k).collect();
    let values = ray
        .density
        .values()
        .iter()
        .map(|v| v * density_factor)
        .collect();
    let density = RayDensity::with_exponent(knots, values, ray.density.exponent())?;
    Ray::new(
        ray.id.clone(),
        ray.weight,
        interval,
        density,
        ray.embedding.clone(),
    )
}

/// Applies `G' = f + h G` together with `m' = m / h`.
///
/// Per ray the interval and knots are mapped affinely and the density becomes
/// `h'(f + h g) = h(g) / h^2`, so each conditional measure has total mass
/// scaled by `1/h`. Quotient weights are unchanged.
pub fn gauge_measure_transform(
    surface: &SyntheticNullHypersurface,
    tp: &TransversePair,
) -> Result<SyntheticNullHypersurface> {
    surface.map_rays(|r| {
        let s = tp.scale(&r.id)?;
        reparametrize(r, tp, 1.0 / (s * s))
    })
}

/// Applies `G' = f + h G` together with `m' = h m`, the pairing under which
/// Minkowski contents are invariant: density values are carried along
/// unchanged, `h'(f + h g) = h(g)`.
pub fn covariant_area_transform(
    surface: &SyntheticNullHypersurface,
    tp: &TransversePair,
) -> Result<SyntheticNullHypersurface> {
    surface.map_rays(|r| reparametrize(r, tp, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::GaugeInterval;

    fn two_rays(tip: bool) -> SyntheticNullHypersurface {
        let mk = |id: &str| {
            Ray::new(
                id,
                0.5,
                GaugeInterval::new(0.0, 1.0, true, true).unwrap(),
                RayDensity::constant(0.0, 1.0, 1.0).unwrap(),
                None,
            )
            .unwrap()
        };
        SyntheticNullHypersurface::new(
            vec![mk("r"), mk("s")],
            tip.then(|| vec![RayId::from("r")]),
            None,
        )
        .unwrap()
    }

    #[test]
    fn same_ray_order() {
        let h = two_rays(false);
        assert!(causal_leq(&PointOnH::on("r", 0.2), &PointOnH::on("r", 0.7), &h).unwrap());
        assert!(!causal_leq(&PointOnH::on("r", 0.7), &PointOnH::on("r", 0.2), &h).unwrap());
    }

    #[test]
    fn distinct_rays_unrelated() {
        let h = two_rays(false);
        assert!(!causal_leq(&PointOnH::on("r", 0.2), &PointOnH::on("s", 0.9), &h).unwrap());
    }

    #[test]
    fn tip_precedes_attached_rays_only() {
        let h = two_rays(true);
        assert!(causal_leq(&PointOnH::Tip, &PointOnH::on("r", 0.1), &h).unwrap());
        assert!(!causal_leq(&PointOnH::Tip, &PointOnH::on("s", 0.1), &h).unwrap());
        assert!(!causal_leq(&PointOnH::on("r", 0.1), &PointOnH::Tip, &h).unwrap());
        assert!(causal_leq(&PointOnH::Tip, &PointOnH::Tip, &h).unwrap());
    }

    #[test]
    fn unknown_ray_is_input_error() {
        let h = two_rays(false);
        let r = causal_leq(&PointOnH::on("zz", 0.1), &PointOnH::on("r", 0.1), &h);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn flow_translates_and_reports_range() {
        let h = two_rays(false);
        let x = PointOnH::on("r", 0.3);
        let y = psi_flow(&x, 0.5, &h).unwrap();
        assert_eq!(y, PointOnH::on("r", 0.8));
        assert_eq!(psi_flow(&x, 0.0, &h).unwrap(), x);
        match psi_flow(&x, 0.9, &h) {
            Err(Error::Domain { range, .. }) => {
                assert!((range.0 + 0.3).abs() < 1e-15);
                assert!((range.1 - 0.7).abs() < 1e-15);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn transform_single_ray_halves_mass() {
        let ray = Ray::new(
            "r",
            1.0,
            GaugeInterval::new(0.0, 1.0, true, true).unwrap(),
            RayDensity::constant(0.0, 1.0, 1.0).unwrap(),
            None,
        )
        .unwrap();
        let h = SyntheticNullHypersurface::new(vec![ray], None, None).unwrap();
        let tp = TransversePair::uniform(&h, 0.0, 2.0).unwrap();
        let t = gauge_measure_transform(&h, &tp).unwrap();
        let r = &t.rays()[0];
        assert_eq!((r.interval.a, r.interval.b), (0.0, 2.0));
        assert_eq!(r.density.values(), &[0.25, 0.25]);
        assert!((r.density.integral(0.0, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_transform_is_noop() {
        let h = two_rays(true);
        let t = gauge_measure_transform(&h, &TransversePair::identity(&h)).unwrap();
        assert_eq!(t, h);
    }
}
