//! Minkowski contents of cross sections, area monotonicity, the
//! future-convergence estimator, the ray-length bound for converging
//! sections and gauge properness.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::hypersurface::{covariant_area_transform, SyntheticNullHypersurface, TransversePair};
use crate::nec::cd_check;
use crate::ray::RayId;
use crate::rng::sub_rng;
use crate::verdict::Verdict;

/// Default decreasing grid of section thicknesses.
pub const DEFAULT_EPS_GRID: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Tolerance of the content comparisons.
pub const CONTENT_TOL: f64 = 1e-9;
/// Tolerance on the ray-length bound.
pub const PENROSE_TOL: f64 = 1e-9;
/// Number of random ray subsets used by the numeric convergence estimator.
pub const THETA_SUBSETS: usize = 32;
const THETA_SEED: u64 = 0x7e7a;
/// Norm beyond which an embedded generator is considered to have escaped
/// every compact set.
pub const ESCAPE_RADIUS: f64 = 1e3;

/// One gauge value per ray in the section; rays absent from the map are not
/// met by the section.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSection {
    points: BTreeMap<RayId, f64>,
}

impl CrossSection {
    /// Each value must lie in `[a, b)` of its ray.
    pub fn new(points: BTreeMap<RayId, f64>, h: &SyntheticNullHypersurface) -> Result<Self> {
        for (id, g) in &points {
            let iv = h.ray(id)?.interval;
            if !(g.is_finite() && *g >= iv.a && *g < iv.b) {
                return Err(invalid(format!(
                    "section point {g} on ray {id} outside [{}, {})",
                    iv.a, iv.b
                )));
            }
        }
        Ok(CrossSection { points })
    }

    /// The section `{G = g}` meeting every ray.
    pub fn at_gauge(h: &SyntheticNullHypersurface, g: f64) -> Result<Self> {
        Self::new(h.rays().iter().map(|r| (r.id.clone(), g)).collect(), h)
    }

    /// The section through the initial point of every ray.
    pub fn at_start(h: &SyntheticNullHypersurface) -> Result<Self> {
        Self::new(
            h.rays()
                .iter()
                .map(|r| (r.id.clone(), r.interval.a))
                .collect(),
            h,
        )
    }

    pub fn points(&self) -> &BTreeMap<RayId, f64> {
        &self.points
    }

    pub fn get(&self, id: &RayId) -> Option<f64> {
        self.points.get(id).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Image under `G' = f + hG`.
    pub fn transformed(&self, tp: &TransversePair) -> Result<CrossSection> {
        let points = self
            .points
            .iter()
            .map(|(id, g)| Ok((id.clone(), tp.apply(id, *g)?)))
            .collect::<Result<_>>()?;
        Ok(CrossSection { points })
    }
}

fn validate_eps_grid(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Parameter(
            "eps grid must be non-empty and positive".into(),
        ));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter(
            "eps grid must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContentEstimate {
    pub numeric: f64,
    pub closed_form: f64,
    pub relative_gap: f64,
    /// Thicknesses actually used (after any shrinking).
    pub eps_used: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Rays of the section restricted to `subset`, each with its section gauge.
fn section_rays<'a>(
    s: &'a CrossSection,
    subset: Option<&'a BTreeSet<RayId>>,
) -> impl Iterator<Item = (&'a RayId, f64)> + 'a {
    s.points
        .iter()
        .filter(move |(id, _)| subset.is_none_or(|a| a.contains(*id)))
        .map(|(id, g)| (id, *g))
}

/// `Σ w_a h_a(a_a)` over the section rays in `subset`.
pub fn content_closed_form(
    s: &CrossSection,
    h: &SyntheticNullHypersurface,
    subset: Option<&BTreeSet<RayId>>,
) -> Result<f64> {
    section_rays(s, subset)
        .map(|(id, g)| {
            let r = h.ray(id)?;
            Ok(r.weight * r.density.eval(g))
        })
        .sum()
}

/// `m(S_eps^+ ∩ R(A))`, integrated exactly.
fn thickened_mass(
    s: &CrossSection,
    h: &SyntheticNullHypersurface,
    subset: Option<&BTreeSet<RayId>>,
    eps: f64,
) -> Result<f64> {
    section_rays(s, subset)
        .map(|(id, g)| {
            let r = h.ray(id)?;
            Ok(r.weight * r.density.integral(g, g + eps))
        })
        .sum()
}

/// Halves grid values until every thickened section stays inside its rays.
fn fit_eps_grid(
    s: &CrossSection,
    h: &SyntheticNullHypersurface,
    subset: Option<&BTreeSet<RayId>>,
    eps: &[f64],
    warnings: &mut Vec<String>,
) -> Result<Vec<f64>> {
    let mut room = f64::INFINITY;
    for (id, g) in section_rays(s, subset) {
        room = room.min(h.ray(id)?.interval.b - g);
    }
    let mut out = Vec::with_capacity(eps.len());
    for &e in eps {
        let mut e2 = e;
        while e2 > room {
            e2 *= 0.5;
        }
        if e2 != e {
            warnings.push(format!("eps {e} exceeds the interval; shrunk to {e2}"));
        }
        out.push(e2);
    }
    Ok(out)
}

/// Future Minkowski content of `s` relative to the rays in `subset` (all
/// rays by default): numeric limsup over the two smallest grid values and
/// the closed form `Σ w h(a)`.
pub fn minkowski_content(
    s: &CrossSection,
    h: &SyntheticNullHypersurface,
    eps_grid: &[f64],
    subset: Option<&BTreeSet<RayId>>,
) -> Result<ContentEstimate> {
    validate_eps_grid(eps_grid)?;
    let mut warnings = Vec::new();
    let eps_used = fit_eps_grid(s, h, subset, eps_grid, &mut warnings)?;
    let closed_form = content_closed_form(s, h, subset)?;
    let tail = &eps_used[eps_used.len().saturating_sub(2)..];
    let mut numeric = f64::NEG_INFINITY;
    for &e in tail {
        numeric = numeric.max(thickened_mass(s, h, subset, e)? / e);
    }
    let relative_gap = if closed_form != 0.0 {
        (numeric - closed_form).abs() / closed_form.abs()
    } else {
        numeric.abs()
    };
    Ok(ContentEstimate {
        numeric,
        closed_form,
        relative_gap,
        eps_used,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HawkingReport {
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub content_first: f64,
    pub content_second: f64,
    pub tolerance: f64,
}

fn ordered_sections(s1: &CrossSection, s2: &CrossSection) -> Result<()> {
    for (id, g1) in &s1.points {
        match s2.get(id) {
            Some(g2) if *g1 <= g2 => {}
            Some(g2) => {
                return Err(Error::Precondition(format!(
                    "first section lies after the second on ray {id} ({g1} > {g2})"
                )))
            }
            None => {
                return Err(Error::Precondition(format!(
                    "ray {id} meets the first section but not the second"
                )))
            }
        }
    }
    Ok(())
}

/// Area monotonicity between two ordered sections of a future complete
/// hypersurface whose rays satisfy `CD(0, N-1)`.
pub fn hawking_check(
    s1: &CrossSection,
    s2: &CrossSection,
    h: &SyntheticNullHypersurface,
    n: f64,
) -> Result<HawkingReport> {
    ordered_sections(s1, s2)?;
    let content_first = content_closed_form(s1, h, None)?;
    let content_second = content_closed_form(s2, h, None)?;
    let gate = |reason: String| HawkingReport {
        verdict: Verdict::Inapplicable,
        reason: Some(reason),
        content_first,
        content_second,
        tolerance: CONTENT_TOL,
    };
    for r in h.rays() {
        if !r.interval.is_future_complete() {
            return Ok(gate(format!("ray {} is not future complete", r.id)));
        }
        let cd = cd_check(r, n)?;
        if !cd.pass {
            return Ok(gate(format!(
                "ray {} violates CD(0, N-1) near gauge {}",
                r.id,
                cd.witness.unwrap_or(f64::NAN)
            )));
        }
        if r.density.values()[1..].iter().any(|v| *v <= 0.0) {
            return Ok(gate(format!("density of ray {} is not positive", r.id)));
        }
    }
    let pass = content_first <= content_second + CONTENT_TOL;
    Ok(HawkingReport {
        verdict: Verdict::from_pass(pass),
        reason: (!pass).then(|| "content decreased".to_string()),
        content_first,
        content_second,
        tolerance: CONTENT_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub verdict: Verdict,
    pub before: f64,
    pub after: f64,
    pub difference: f64,
    pub tolerance: f64,
}

/// Compares the closed-form content of `s` before and after the gauge
/// change `G' = f + hG` with the measure carried as `m' = h m`.
pub fn content_covariance(
    s: &CrossSection,
    h: &SyntheticNullHypersurface,
    tp: &TransversePair,
) -> Result<CovarianceReport> {
    let before = content_closed_form(s, h, None)?;
    let h2 = covariant_area_transform(h, tp)?;
    let after = content_closed_form(&s.transformed(tp)?, &h2, None)?;
    let difference = (after - before).abs();
    let verdict = if !(before.is_finite() && after.is_finite()) {
        Verdict::Inapplicable
    } else {
        Verdict::from_pass(difference <= CONTENT_TOL)
    };
    Ok(CovarianceReport {
        verdict,
        before,
        after,
        difference,
        tolerance: CONTENT_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaEstimate {
    /// Largest `h'(a+) / h(a)` over the section rays.
    pub closed_form: f64,
    /// Largest second-order content defect over the sampled ray subsets.
    pub numeric: f64,
    pub subsets: usize,
    pub eps_used: Vec<f64>,
}

/// Numeric `[m(S_eps^+ ∩ R(A)) - eps content] / (eps^2/2 content)` for one
/// subset, maximised over the two smallest thicknesses.
fn theta_for_subset(
    s: &CrossSection,
    h: &SyntheticNullHypersurface,
    subset: &BTreeSet<RayId>,
    eps: &[f64],
) -> Result<Option<f64>> {
    let content = content_closed_form(s, h, Some(subset))?;
    if content <= 0.0 {
        return Ok(None);
    }
    let mut best = f64::NEG_INFINITY;
    for &e in &eps[eps.len().saturating_sub(2)..] {
        let m = thickened_mass(s, h, Some(subset), e)?;
        best = best.max((m - e * content) / (0.5 * e * e * content));
    }
    Ok(Some(best))
}

/// Future-convergence constant of a section: the smallest `θ` with
/// `m(S_eps^+ ∩ R(A)) <= eps content_A + θ eps^2/2 content_A + o(eps^2)`
/// for every ray union `A`.
pub fn theta_estimate(
    s: &CrossSection,
    h: &SyntheticNullHypersurface,
    eps_grid: &[f64],
) -> Result<ThetaEstimate> {
    validate_eps_grid(eps_grid)?;
    if s.is_empty() {
        return Err(Error::Precondition(
            "theta needs a non-empty section".into(),
        ));
    }
    let mut closed_form = f64::NEG_INFINITY;
    for (id, g) in &s.points {
        let r = h.ray(id)?;
        if r.weight <= 0.0 {
            continue;
        }
        let v = r.density.eval(*g);
        if v <= 0.0 {
            return Err(Error::Precondition(format!(
                "degenerate section: density vanishes at gauge {g} on ray {id}"
            )));
        }
        closed_form = closed_form.max(r.density.right_slope(*g) / v);
    }
    let mut warnings = Vec::new();
    let eps_used = fit_eps_grid(s, h, None, eps_grid, &mut warnings)?;
    let ids: Vec<&RayId> = s.points.keys().collect();
    let mut family: Vec<BTreeSet<RayId>> = ids
        .iter()
        .map(|id| BTreeSet::from([(*id).clone()]))
        .collect();
    let mut rng = sub_rng(THETA_SEED, 0);
    for _ in 0..THETA_SUBSETS {
        let set: BTreeSet<RayId> = ids
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .map(|id| (*id).clone())
            .collect();
        if !set.is_empty() {
            family.push(set);
        }
    }
    let mut numeric = f64::NEG_INFINITY;
    for a in &family {
        if let Some(v) = theta_for_subset(s, h, a, &eps_used)? {
            numeric = numeric.max(v);
        }
    }
    Ok(ThetaEstimate {
        closed_form,
        numeric,
        subsets: family.len(),
        eps_used,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenroseRow {
    pub ray: RayId,
    pub b: f64,
    pub bound: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenroseReport {
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub theta: f64,
    pub bound: f64,
    pub max_b: f64,
    pub min_slack: f64,
    pub compact: bool,
    pub rows: Vec<PenroseRow>,
    pub tolerance: f64,
}

/// Ray-length bound `b <= (N - 2) / (-θ)` for a future converging section
/// at the start of every ray.
pub fn penrose_check(
    h: &SyntheticNullHypersurface,
    n: f64,
    s: &CrossSection,
    theta: f64,
) -> Result<PenroseReport> {
    if !(n > 2.0) {
        return Err(Error::Parameter(format!(
            "the ray-length bound needs N > 2, got {n}"
        )));
    }
    let bound = if theta < 0.0 {
        (n - 2.0) / -theta
    } else {
        f64::INFINITY
    };
    let mut report = PenroseReport {
        verdict: Verdict::Inapplicable,
        reason: None,
        theta,
        bound,
        max_b: f64::NAN,
        min_slack: f64::NAN,
        compact: false,
        rows: vec![],
        tolerance: PENROSE_TOL,
    };
    let gate = |mut r: PenroseReport, reason: String| {
        r.reason = Some(reason);
        Ok(r)
    };
    if !(theta < 0.0) {
        return gate(report, "not future converging".into());
    }
    for r in h.rays().iter().filter(|r| r.weight > 0.0) {
        let cd = cd_check(r, n)?;
        if !cd.pass {
            return gate(report, format!("ray {} violates CD(0, N-1)", r.id));
        }
        if r.interval.a != 0.0 || s.get(&r.id) != Some(0.0) {
            return gate(
                report,
                format!("ray {} does not start on the section at gauge 0", r.id),
            );
        }
        let vs = r.density.values();
        let interior = if r.interval.b.is_finite() {
            &vs[..vs.len() - 1]
        } else {
            vs
        };
        if interior.iter().any(|v| *v <= 0.0) {
            return gate(
                report,
                format!("density of ray {} vanishes inside the ray", r.id),
            );
        }
    }
    let mut max_b = f64::NEG_INFINITY;
    let mut min_slack = f64::INFINITY;
    let mut pass = true;
    for r in h.rays().iter().filter(|r| r.weight > 0.0) {
        let b = r.interval.b;
        let slack = bound - b;
        pass &= b <= bound + PENROSE_TOL;
        max_b = max_b.max(b);
        min_slack = min_slack.min(slack);
        report.rows.push(PenroseRow {
            ray: r.id.clone(),
            b,
            bound,
            slack,
        });
    }
    report.verdict = Verdict::from_pass(pass);
    report.reason = (!pass).then(|| "a ray exceeds the length bound".to_string());
    report.max_b = max_b;
    report.min_slack = min_slack;
    report.compact = pass && max_b.is_finite();
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropernessReport {
    pub proper: bool,
    /// A ray whose bounded sublevel set escapes in the ambient space.
    pub witness: Option<RayId>,
    pub horizon: f64,
}

/// Decides from the embedded knots whether gauge sublevel sets up to
/// `horizon` are precompact: a ray that ends at finite gauge below the
/// horizon without a final point must stay in a bounded region.
pub fn is_proper(h: &SyntheticNullHypersurface, horizon: f64) -> Result<PropernessReport> {
    if h.rays().iter().any(|r| r.embedding.is_none()) {
        return Err(Error::Precondition(
            "properness is undecidable without embedding".into(),
        ));
    }
    for r in h.rays() {
        let e = r.embedding.as_ref().expect("checked above");
        let escapes = r
            .density
            .knots()
            .iter()
            .zip(e.points())
            .filter(|(g, _)| **g <= horizon)
            .any(|(_, p)| p.iter().map(|x| x * x).sum::<f64>().sqrt() > ESCAPE_RADIUS);
        let open_end =
            r.interval.b.is_finite() && r.interval.b <= horizon && !r.interval.has_final_point;
        if open_end && escapes {
            return Ok(PropernessReport {
                proper: false,
                witness: Some(r.id.clone()),
                horizon,
            });
        }
    }
    Ok(PropernessReport {
        proper: true,
        witness: None,
        horizon,
    })
}
