//! Approximating sequences of hypersurfaces with gauge maps to a limit,
//! checks of the approximation hypotheses, and the passage of
//! entropy-power concavity to the limit.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::hypersurface::SyntheticNullHypersurface;
use crate::maps::MonotoneMap;
use crate::nec::{
    cd_check, localization_crosscheck_with, nce_search_with, CdReport, SearchConfig, SearchReport,
};
use crate::ray::{Ray, RayDensity, RayId};
use crate::smooth::cone_hypersurface_with;
use crate::verdict::Verdict;

/// Interior sample points per curve in the ε-causal check.
pub const CURVE_SAMPLES: usize = 32;
/// Consecutive segments per ray in the ε-causal check.
pub const CURVE_SEGMENTS: usize = 32;
/// Longest segment used by the ε-causal check.
pub const MAX_SEGMENT: f64 = 0.25;
/// Uniform bound on map slopes standing in for precompactness of curve
/// families.
pub const SPEED_BOUND: f64 = 10.0;
/// Fraction of a finite family ignored before the tail in
/// [`kuratowski_limsup`].
pub const TAIL_FRACTION: f64 = 0.8;
const SIGMA_TOL: f64 = 1e-12;

/// One element `H_n` of an approximating sequence with its gauge maps to
/// and from the limit.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproximationStep {
    pub index: usize,
    pub surface: SyntheticNullHypersurface,
    /// `h_n : H_n -> H_∞`, per ray.
    pub to_limit: BTreeMap<RayId, MonotoneMap>,
    /// `g_n : H_∞ -> H_n`, per ray.
    pub from_limit: BTreeMap<RayId, MonotoneMap>,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproximationSequence {
    pub limit: SyntheticNullHypersurface,
    pub steps: Vec<ApproximationStep>,
}

/// A curve on one ray, affine in the gauge of `H_n`, to be checked after
/// post-composition with a gauge map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonCausalCurve {
    pub ray: RayId,
    pub g0: f64,
    pub g1: f64,
    pub eps: f64,
}

impl EpsilonCausalCurve {
    /// Largest `|ΔG/Δt - total| / total` over all pairs among the end points
    /// and `samples` interior points of `t -> map((1 - t) g0 + t g1)`.
    pub fn max_deviation(&self, map: &MonotoneMap, samples: usize) -> f64 {
        let m = samples + 2;
        let pts: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                let t = i as f64 / (m - 1) as f64;
                (t, map.apply((1.0 - t) * self.g0 + t * self.g1))
            })
            .collect();
        let total = pts[m - 1].1 - pts[0].1;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                let speed = (pts[j].1 - pts[i].1) / (pts[j].0 - pts[i].0);
                worst = worst.max((speed - total).abs() / total);
            }
        }
        worst
    }

    pub fn is_causal_under(&self, map: &MonotoneMap) -> bool {
        self.max_deviation(map, CURVE_SAMPLES) <= self.eps
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepReport {
    pub index: usize,
    pub eps: f64,
    pub sigma_max: f64,
    pub sigma_pass: bool,
    pub sigma_witness: Option<(RayId, f64)>,
    pub compatibility_error: f64,
    pub compatibility_pass: bool,
    pub curve_deviation: f64,
    pub curve_pass: bool,
    pub curve_witness: Option<EpsilonCausalCurve>,
    pub max_speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub pass: bool,
    pub steps: Vec<StepReport>,
    pub speed_bound: f64,
    pub speed_pass: bool,
}

fn check_bijection(limit: &SyntheticNullHypersurface, step: &ApproximationStep) -> Result<()> {
    let ids: Vec<&RayId> = limit.rays().iter().map(|r| &r.id).collect();
    if step.surface.rays().len() != ids.len() {
        return Err(invalid(format!(
            "step {} has a different number of rays",
            step.index
        )));
    }
    for id in ids {
        if !step.surface.contains_ray(id)
            || !step.to_limit.contains_key(id)
            || !step.from_limit.contains_key(id)
        {
            return Err(invalid(format!(
                "step {} lacks ray {id} or its maps",
                step.index
            )));
        }
    }
    Ok(())
}

/// Gauge window `[a, truncation]` of a ray.
fn window(r: &Ray) -> (f64, f64) {
    (r.interval.a, r.truncation())
}

fn clip(points: impl Iterator<Item = f64>, lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = points.filter(|x| *x >= lo && *x <= hi).collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Largest `d((g_n)_# m_∞) / d m_n` over the knots of both densities and
/// the breakpoints of `g_n`, with one-sided slopes at map breakpoints.
fn sigma_on_ray(lim: &Ray, cur: &Ray, g: &MonotoneMap) -> (f64, Option<f64>) {
    let (la, lb) = window(lim);
    let (ca, cb) = window(cur);
    let lo = ca.max(g.apply(la));
    let hi = cb.min(g.apply(lb));
    let ys = clip(
        cur.density
            .knots()
            .iter()
            .copied()
            .chain(lim.density.knots().iter().map(|&x| g.apply(x)))
            .chain(g.values().iter().copied()),
        lo,
        hi,
    );
    let mut worst = f64::NEG_INFINITY;
    let mut arg = None;
    for y in ys {
        let x = g.inverse_apply(y);
        let num = lim.weight * lim.density.eval(x);
        let den_h = cur.weight * cur.density.eval(y);
        let eps_x = 1e-12 * (1.0 + x.abs());
        for slope in [g.slope(x - eps_x), g.slope(x)] {
            let sigma = if den_h > 0.0 {
                num / (slope * den_h)
            } else if num > 0.0 {
                f64::INFINITY
            } else {
                continue;
            };
            if sigma > worst {
                worst = sigma;
                arg = Some(y);
            }
        }
    }
    (worst, arg)
}

/// `sup |h_n(g_n(x)) - x|` on the limit window; exact at the breakpoints of
/// the composition.
fn compatibility_on_ray(lim: &Ray, g: &MonotoneMap, h: &MonotoneMap) -> f64 {
    let (lo, hi) = window(lim);
    let xs = clip(
        g.knots()
            .iter()
            .copied()
            .chain(h.knots().iter().map(|&y| g.inverse_apply(y))),
        lo,
        hi,
    );
    xs.iter()
        .map(|&x| (h.apply(g.apply(x)) - x).abs())
        .fold(0.0, f64::max)
}

fn curves_on_ray(cur: &Ray, eps: f64) -> Vec<EpsilonCausalCurve> {
    let (lo, hi) = window(cur);
    let len = ((hi - lo) / CURVE_SEGMENTS as f64).min(MAX_SEGMENT);
    (0..CURVE_SEGMENTS)
        .map(|i| EpsilonCausalCurve {
            ray: cur.id.clone(),
            g0: lo + len * i as f64,
            g1: lo + len * (i + 1) as f64,
            eps,
        })
        .collect()
}

fn max_slope(m: &MonotoneMap) -> f64 {
    m.knots()
        .windows(2)
        .zip(m.values().windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .fold(0.0, f64::max)
}

fn verify_step(limit: &SyntheticNullHypersurface, step: &ApproximationStep) -> Result<StepReport> {
    check_bijection(limit, step)?;
    let mut rep = StepReport {
        index: step.index,
        eps: step.eps,
        sigma_max: f64::NEG_INFINITY,
        sigma_pass: true,
        sigma_witness: None,
        compatibility_error: 0.0,
        compatibility_pass: true,
        curve_deviation: 0.0,
        curve_pass: true,
        curve_witness: None,
        max_speed: 0.0,
    };
    for lim in limit.rays() {
        let cur = step.surface.ray(&lim.id)?;
        let g = &step.from_limit[&lim.id];
        let h = &step.to_limit[&lim.id];
        let (sigma, at) = sigma_on_ray(lim, cur, g);
        if sigma > rep.sigma_max {
            rep.sigma_max = sigma;
            rep.sigma_witness = at.map(|y| (lim.id.clone(), y));
        }
        rep.compatibility_error = rep.compatibility_error.max(compatibility_on_ray(lim, g, h));
        for c in curves_on_ray(cur, step.eps) {
            let d = c.max_deviation(h, CURVE_SAMPLES);
            if d > rep.curve_deviation {
                rep.curve_deviation = d;
                if d > step.eps && rep.curve_witness.is_none() {
                    rep.curve_witness = Some(c);
                }
            }
        }
        rep.max_speed = rep.max_speed.max(max_slope(g)).max(max_slope(h));
    }
    rep.sigma_pass = rep.sigma_max <= 1.0 + step.eps + SIGMA_TOL;
    rep.compatibility_pass = rep.compatibility_error <= step.eps;
    rep.curve_pass = rep.curve_deviation <= step.eps;
    Ok(rep)
}

/// Checks the density-ratio bound, the compatibility of the maps and the
/// ε-causality of post-composed curves for every step, plus a uniform bound
/// on map slopes across the sequence.
pub fn verify_hypotheses(seq: &ApproximationSequence) -> Result<HypothesisReport> {
    if seq.steps.is_empty() {
        return Err(Error::Precondition("the sequence has no steps".into()));
    }
    if seq.steps.iter().any(|s| !(s.eps > 0.0)) || seq.steps.windows(2).any(|w| w[1].eps > w[0].eps)
    {
        return Err(Error::Precondition(
            "eps_n must be positive and non-increasing".into(),
        ));
    }
    let steps = seq
        .steps
        .iter()
        .map(|s| verify_step(&seq.limit, s))
        .collect::<Result<Vec<_>>>()?;
    let speed = steps.iter().map(|s| s.max_speed).fold(0.0, f64::max);
    let speed_pass = speed.is_finite() && speed <= SPEED_BOUND;
    let pass = speed_pass
        && steps
            .iter()
            .all(|s| s.sigma_pass && s.compatibility_pass && s.curve_pass);
    Ok(HypothesisReport {
        pass,
        steps,
        speed_bound: SPEED_BOUND,
        speed_pass,
    })
}

/// `∫ |F_n - F_∞|` over the limit window, where `F_n` is the cumulative
/// mass of `(h_n)_# m_n` and `F_∞` that of `m_∞`, summed over rays.
pub fn pushforward_distance(
    limit: &SyntheticNullHypersurface,
    step: &ApproximationStep,
) -> Result<f64> {
    const CELLS: usize = 4096;
    check_bijection(limit, step)?;
    let mut total = 0.0;
    for lim in limit.rays() {
        let cur = step.surface.ray(&lim.id)?;
        let h = &step.to_limit[&lim.id];
        let (lo, hi) = window(lim);
        let ca = cur.interval.a;
        let dx = (hi - lo) / CELLS as f64;
        let mut acc = 0.0;
        for i in 0..CELLS {
            let x = lo + dx * (i as f64 + 0.5);
            let fn_ = cur.weight * cur.density.integral(ca, h.inverse_apply(x));
            let fi = lim.weight * lim.density.integral(lo, x);
            acc += (fn_ - fi).abs() * dx;
        }
        total += acc;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitReport {
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub hypotheses: HypothesisReport,
    pub step_verdicts: Vec<Verdict>,
    pub limit_cd: Vec<CdReport>,
    pub limit_search: Option<SearchReport>,
    /// Pushforward distance per step, then divided by `eps_n`.
    pub distances: Vec<(f64, f64)>,
}

/// Gates on the hypotheses and on localized concavity of every `H_n`, then
/// tests the limit: the entropy-power search and the knot-wise concavity of
/// `h_∞^{1/(N-2)}`.
pub fn limit_nce(
    seq: &ApproximationSequence,
    n: f64,
    trials: usize,
    seed: u64,
) -> Result<LimitReport> {
    let hypotheses = verify_hypotheses(seq)?;
    let distances = seq
        .steps
        .iter()
        .map(|s| {
            Ok((
                pushforward_distance(&seq.limit, s)?,
                pushforward_distance(&seq.limit, s)? / s.eps,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = LimitReport {
        verdict: Verdict::Inapplicable,
        reason: None,
        hypotheses,
        step_verdicts: vec![],
        limit_cd: vec![],
        limit_search: None,
        distances,
    };
    if !report.hypotheses.pass {
        report.reason = Some("approximation hypotheses fail".into());
        return Ok(report);
    }
    let cfg = SearchConfig::new(trials, seed);
    for s in &seq.steps {
        let loc = localization_crosscheck_with(&s.surface, n, &cfg)?;
        let ok = loc.agree && loc.cd_verdict == Verdict::Pass;
        report.step_verdicts.push(Verdict::from_pass(ok));
        if !ok {
            report.reason = Some(format!(
                "step {} does not satisfy the concavity condition",
                s.index
            ));
            return Ok(report);
        }
    }
    report.limit_cd = seq
        .limit
        .rays()
        .iter()
        .map(|r| cd_check(r, n))
        .collect::<Result<Vec<_>>>()?;
    let search = nce_search_with(&seq.limit, n, &cfg)?;
    let pass = report.limit_cd.iter().all(|c| c.pass) && search.verdict != Verdict::Fail;
    report.verdict = Verdict::from_pass(pass);
    if !pass {
        report.reason = Some("the limit violates the concavity condition".into());
    }
    report.limit_search = Some(search);
    Ok(report)
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Finite surrogate of the Kuratowski upper limit: points of the tail sets
/// (indices `>= floor(0.8 n)`) lying within `tol` of at least two tail sets
/// (of the only tail set when the tail has one element), deduplicated
/// greedily within `tol` in index order.
pub fn kuratowski_limsup(sets: &[Vec<Vec<f64>>], tol: f64) -> Vec<Vec<f64>> {
    if sets.is_empty() {
        return vec![];
    }
    let start = ((sets.len() as f64) * TAIL_FRACTION).floor() as usize;
    let tail = &sets[start.min(sets.len() - 1)..];
    let needed = tail.len().min(2);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for set in tail {
        for p in set {
            let hits = tail
                .iter()
                .filter(|s| {
                    s.iter()
                        .any(|q| q.len() == p.len() && sup_distance(p, q) <= tol)
                })
                .count();
            if hits >= needed
                && !out
                    .iter()
                    .any(|q| q.len() == p.len() && sup_distance(p, q) <= tol)
            {
                out.push(p.clone());
            }
        }
    }
    out
}

fn two_pow(n: usize) -> f64 {
    0.5f64.powi(n as i32)
}

fn identity_maps(h: &SyntheticNullHypersurface) -> Result<BTreeMap<RayId, MonotoneMap>> {
    h.rays()
        .iter()
        .map(|r| {
            let (lo, hi) = window(r);
            Ok((r.id.clone(), MonotoneMap::identity(lo, hi)?))
        })
        .collect()
}

/// Replaces each ray density of `h` by `f(ray, knots)` sampled on the same
/// knots.
fn with_densities(
    h: &SyntheticNullHypersurface,
    f: impl Fn(&Ray, f64) -> f64,
) -> Result<SyntheticNullHypersurface> {
    h.map_rays(|r| {
        let density = RayDensity::sample_with_exponent(
            r.density.knots().to_vec(),
            r.density.exponent(),
            |t| f(r, t),
        )?;
        Ray::new(
            r.id.clone(),
            r.weight,
            r.interval,
            density,
            r.embedding.clone(),
        )
    })
}

/// `H_n = H_∞` with identity maps and `eps_n = 2^-n`, `n = 1..=steps`.
pub fn constant_sequence(
    limit: &SyntheticNullHypersurface,
    steps: usize,
) -> Result<ApproximationSequence> {
    let maps = identity_maps(limit)?;
    Ok(ApproximationSequence {
        limit: limit.clone(),
        steps: (1..=steps)
            .map(|n| ApproximationStep {
                index: n,
                surface: limit.clone(),
                to_limit: maps.clone(),
                from_limit: maps.clone(),
                eps: two_pow(n),
            })
            .collect(),
    })
}

/// Densities `h (1 + 2^-n ψ)` with `0 <= ψ <= 1`, identity maps.
pub fn density_perturbation_sequence(
    limit: &SyntheticNullHypersurface,
    steps: usize,
    psi: impl Fn(f64) -> f64,
) -> Result<ApproximationSequence> {
    let maps = identity_maps(limit)?;
    let mut out = Vec::with_capacity(steps);
    for n in 1..=steps {
        let d = two_pow(n);
        let surface = with_densities(limit, |r, t| r.density.eval(t) * (1.0 + d * psi(t)))?;
        out.push(ApproximationStep {
            index: n,
            surface,
            to_limit: maps.clone(),
            from_limit: maps.clone(),
            eps: d,
        });
    }
    Ok(ApproximationSequence {
        limit: limit.clone(),
        steps: out,
    })
}

/// Gauge warp `g_n(x) = x + 2^-n sin x` from the limit, with `H_n` carrying
/// the pushed-forward densities and `h_n = g_n^{-1}`.
pub fn gauge_warp_sequence(
    limit: &SyntheticNullHypersurface,
    steps: usize,
) -> Result<ApproximationSequence> {
    const REFINE: usize = 8;
    let mut out = Vec::with_capacity(steps);
    for n in 1..=steps {
        let d = two_pow(n);
        let mut from = BTreeMap::new();
        let mut to = BTreeMap::new();
        let surface = limit.map_rays(|r| {
            let ks = r.density.knots();
            let mut xs = Vec::with_capacity(ks.len() * REFINE);
            for w in ks.windows(2) {
                xs.extend((0..REFINE).map(|j| w[0] + (w[1] - w[0]) * j as f64 / REFINE as f64));
            }
            xs.push(*ks.last().expect("knots"));
            let g = MonotoneMap::sample(xs.clone(), |x| x + d * x.sin())?;
            let ys = g.values().to_vec();
            let values: Vec<f64> = xs
                .iter()
                .map(|&x| r.density.eval(x) / (1.0 + d * x.cos()))
                .collect();
            let a = ys[0];
            let b = if r.interval.b.is_finite() {
                *ys.last().expect("values")
            } else {
                r.interval.b
            };
            let interval = crate::ray::GaugeInterval::new(
                a,
                b,
                r.interval.has_initial_point,
                r.interval.has_final_point,
            )?;
            Ray::new(
                r.id.clone(),
                r.weight,
                interval,
                RayDensity::with_exponent(ys, values, r.density.exponent())?,
                None,
            )
        })?;
        for r in limit.rays() {
            let ks = surface.ray(&r.id)?.density.knots();
            let g = MonotoneMap::new(ks.iter().map(|&y| invert_warp(y, d)).collect(), ks.to_vec())?;
            to.insert(r.id.clone(), g.inverse());
            from.insert(r.id.clone(), g);
        }
        out.push(ApproximationStep {
            index: n,
            surface,
            to_limit: to,
            from_limit: from,
            eps: d,
        });
    }
    Ok(ApproximationSequence {
        limit: limit.clone(),
        steps: out,
    })
}

/// Solves `x + d sin x = y` by Newton iteration (`d < 1`).
fn invert_warp(y: f64, d: f64) -> f64 {
    let mut x = y;
    for _ in 0..60 {
        let fx = x + d * x.sin() - y;
        let step = fx / (1.0 + d * x.cos());
        x -= step;
        if step.abs() <= 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// The 2^-n perturbed light cone in dimension 4: `h_n = (t + 2^-n (1 -
/// e^-t) / 3)²`, each `CD(0, 3)`, converging to `t²`. Identity maps.
pub fn perturbed_cone_sequence(
    steps: usize,
    horizon: f64,
    rays: usize,
) -> Result<ApproximationSequence> {
    let limit = cone_hypersurface_with(4, horizon, rays)?;
    let maps = identity_maps(&limit)?;
    let mut out = Vec::with_capacity(steps);
    for n in 1..=steps {
        let d = two_pow(n);
        let surface = with_densities(&limit, |_, t| {
            let g = t + d * (1.0 - (-t).exp()) / 3.0;
            g * g
        })?;
        out.push(ApproximationStep {
            index: n,
            surface,
            to_limit: maps.clone(),
            from_limit: maps.clone(),
            eps: d,
        });
    }
    Ok(ApproximationSequence { limit, steps: out })
}

/// A sequence with density ratio `σ_n = 1.5`: `h_n = h / 1.5`, identity
/// maps. It must be rejected by the hypothesis gate.
pub fn adversarial_sigma_sequence(
    limit: &SyntheticNullHypersurface,
    steps: usize,
) -> Result<ApproximationSequence> {
    let maps = identity_maps(limit)?;
    let surface = with_densities(limit, |r, t| r.density.eval(t) / 1.5)?;
    Ok(ApproximationSequence {
        limit: limit.clone(),
        steps: (1..=steps)
            .map(|n| ApproximationStep {
                index: n,
                surface: surface.clone(),
                to_limit: maps.clone(),
                from_limit: maps.clone(),
                eps: two_pow(n),
            })
            .collect(),
    })
}

/// Single ray on `[0, 2]` with concave profiles
/// `g_n = (a + b)/2 - sqrt((a - b)²/4 + δ²/4) + δ/2`, `a = 1 + t`, `b = 2`,
/// `δ = 2^-n`, converging to the kinked profile `min(1 + t, 2)`;
/// densities `g^{N-2}`.
pub fn kink_sequence(steps: usize, n_dim: f64) -> Result<ApproximationSequence> {
    if !(n_dim > 2.0) {
        return Err(Error::Parameter(format!(
            "profiles need N > 2, got {n_dim}"
        )));
    }
    let knots: Vec<f64> = (0..=64).map(|i| 2.0 * i as f64 / 64.0).collect();
    let mk = |g: &dyn Fn(f64) -> f64| -> Result<SyntheticNullHypersurface> {
        let density = RayDensity::sample_with_exponent(knots.clone(), n_dim - 2.0, |t| {
            g(t).powf(n_dim - 2.0)
        })?;
        let ray = Ray::new(
            "k000",
            1.0,
            crate::ray::GaugeInterval::new(0.0, 2.0, true, true)?,
            density,
            None,
        )?;
        SyntheticNullHypersurface::new(vec![ray], None, Some(n_dim))
    };
    let limit = mk(&|t: f64| (1.0 + t).min(2.0))?;
    let maps = identity_maps(&limit)?;
    let mut out = Vec::with_capacity(steps);
    for n in 1..=steps {
        let d = two_pow(n);
        let g = move |t: f64| {
            let (a, b) = (1.0 + t, 2.0);
            0.5 * (a + b) - (0.25 * (a - b) * (a - b) + 0.25 * d * d).sqrt() + 0.5 * d
        };
        out.push(ApproximationStep {
            index: n,
            surface: mk(&g)?,
            to_limit: maps.clone(),
            from_limit: maps.clone(),
            eps: d,
        });
    }
    Ok(ApproximationSequence { limit, steps: out })
}
