//! Entropy-power concavity along G-causal interpolations, the per-ray
//! `CD(0, N-1)` certificate, and their cross-validation.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypersurface::{gauge_measure_transform, SyntheticNullHypersurface, TransversePair};
use crate::measures::{entropy, transform_measure, Entropy, HMeasure, RayMeasureSlice};
use crate::ray::{Ray, RayId};
use crate::rng::sub_rng;
use crate::transport::{monotone_plan, DynamicalPlan};
use crate::verdict::Verdict;

/// Tolerance on chord-minus-value of the entropy power profile.
pub const CONCAVITY_TOL: f64 = 1e-8;
/// Tolerance of the three-point knot test, relative to `max(1, max g)`.
pub const CD_TOL: f64 = 1e-12;
/// Default number of grid intervals on `[0, 1]`.
pub const DEFAULT_GRID: usize = 64;
/// Tolerance on the constancy of entropy differences under gauge changes.
pub const INVARIANCE_TOL: f64 = 1e-9;

/// Result of the knot-wise concavity test of `h^{1/(N-2)}` on one ray.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdReport {
    pub ray: RayId,
    pub pass: bool,
    /// First knot where the three-point inequality fails.
    pub witness: Option<f64>,
    /// Largest chord-minus-value over interior knots.
    pub max_defect: f64,
}

/// Checks concavity of `g = h^{1/(N-2)}` at every interior knot. On a ray
/// without right endpoint the extrapolated tail must keep `g` concave and
/// non-negative, which forces a non-decreasing tail. The check is exact for
/// densities with exponent `N - 2`, whose `g` is piecewise linear.
pub fn cd_check(ray: &Ray, n: f64) -> Result<CdReport> {
    if !(n > 2.0) {
        return Err(Error::Parameter(format!("cd_check needs N > 2, got {n}")));
    }
    let p = 1.0 / (n - 2.0);
    let xs = ray.density.knots();
    let gs: Vec<f64> = ray
        .density
        .values()
        .iter()
        .map(|v| v.max(0.0).powf(p))
        .collect();
    let scale = gs.iter().fold(1.0f64, |m, g| m.max(*g));
    let tol = CD_TOL * scale;
    let mut witness = None;
    let mut max_defect = f64::NEG_INFINITY;
    for i in 1..xs.len() - 1 {
        let lam = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
        let chord = gs[i - 1] + lam * (gs[i + 1] - gs[i - 1]);
        let defect = chord - gs[i];
        max_defect = max_defect.max(defect);
        if defect > tol && witness.is_none() {
            witness = Some(xs[i]);
        }
    }
    if !ray.interval.b.is_finite() && witness.is_none() {
        let last = *xs.last().expect("density has knots");
        let root = *ray.density.roots().last().expect("density has values");
        let slope = ray.density.tail_slope();
        if slope < 0.0 {
            witness = Some(last + root / -slope);
        } else if ray.density.exponent() * p > 1.0 && slope > 0.0 {
            witness = Some(last);
        }
    }
    Ok(CdReport {
        ray: ray.id.clone(),
        pass: witness.is_none(),
        witness,
        max_defect: max_defect.max(0.0),
    })
}

/// Chord endpoints and interior time of the largest concavity defect.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConcavityWitness {
    pub t1: f64,
    pub t2: f64,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub max_violation: f64,
    pub verdict: Verdict,
    pub witness: Option<ConcavityWitness>,
    pub tolerance: f64,
}

/// Largest amount by which a chord through two samples exceeds an
/// intermediate sample, with the indices `(i, k, j)`, `i < j < k`, that
/// realise it. Computed through the upper concave hull.
pub fn concavity_violation(ts: &[f64], us: &[f64]) -> (f64, Option<(usize, usize, usize)>) {
    let n = ts.len();
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for j in 0..n {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (ts[a] - ts[o]) * (us[j] - us[o]) - (us[a] - us[o]) * (ts[j] - ts[o]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(j);
    }
    let mut best = 0.0;
    let mut arg = None;
    let mut e = 0;
    for j in 0..n {
        while e + 1 < hull.len() - 1 && hull[e + 1] <= j {
            e += 1;
        }
        if hull.len() < 2 {
            break;
        }
        let (i, k) = (hull[e], hull[e + 1]);
        if j <= i || j >= k {
            continue;
        }
        let lam = (ts[j] - ts[i]) / (ts[k] - ts[i]);
        let chord = us[i] + lam * (us[k] - us[i]);
        let v = chord - us[j];
        if v > best {
            best = v;
            arg = Some((i, k, j));
        }
    }
    (best, arg)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

/// `Ent((e_t)_# plan | m)` evaluated directly on the plan pieces. At the end
/// points the stored marginals are used.
pub fn plan_entropy(
    plan: &DynamicalPlan,
    h: &SyntheticNullHypersurface,
    t: f64,
) -> Result<Entropy> {
    if t <= 0.0 {
        return entropy(plan.source(), h);
    }
    if t >= 1.0 {
        return entropy(plan.target(), h);
    }
    let mut acc = 0.0;
    for (id, pieces) in plan.rays() {
        let ray = h.ray(id)?;
        let w = ray.weight;
        let mut last = f64::NEG_INFINITY;
        for p in pieces {
            let z0 = lerp(p.x0, p.y0, t).max(last);
            let z1 = lerp(p.x1, p.y1, t);
            if z1 <= z0 {
                return Ok(Entropy::Infinite);
            }
            last = z1;
            let density = p.mass / (z1 - z0);
            let log_h = ray.density.log_integral(z0, z1);
            if log_h == f64::NEG_INFINITY {
                return Ok(Entropy::Infinite);
            }
            acc += p.mass * (density / w).ln() - density * log_h;
        }
    }
    Ok(Entropy::Finite(acc))
}

fn check_dimension(n: f64) -> Result<()> {
    if n > 1.0 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "entropy-power concavity needs N > 1, got {n}"
        )))
    }
}

/// Evaluates `U_{N-1}` along a given plan on `grid + 1` uniform times.
pub fn nce_test_plan(
    h: &SyntheticNullHypersurface,
    n: f64,
    plan: &DynamicalPlan,
    grid: usize,
) -> Result<ConcavityReport> {
    check_dimension(n)?;
    if grid == 0 {
        return Err(Error::Parameter(
            "the time grid needs at least one interval".into(),
        ));
    }
    let m = n - 1.0;
    let t_grid: Vec<f64> = (0..=grid).map(|j| j as f64 / grid as f64).collect();
    let values = t_grid
        .iter()
        .map(|&t| Ok(plan_entropy(plan, h, t)?.power(m)))
        .collect::<Result<Vec<f64>>>()?;
    let (max_violation, arg) = concavity_violation(&t_grid, &values);
    let witness = arg.map(|(i, k, j)| ConcavityWitness {
        t1: t_grid[i],
        t2: t_grid[k],
        t: t_grid[j],
    });
    Ok(ConcavityReport {
        verdict: Verdict::from_pass(max_violation <= CONCAVITY_TOL),
        t_grid,
        values,
        max_violation,
        witness,
        tolerance: CONCAVITY_TOL,
    })
}

/// Tests `U_{N-1}(mu_t | m) >= (1 - t) U(mu_0) + t U(mu_1)` along the
/// monotone G-causal plan from `mu0` to `mu1`.
pub fn nce_test(
    h: &SyntheticNullHypersurface,
    n: f64,
    mu0: &HMeasure,
    mu1: &HMeasure,
    grid: usize,
) -> Result<ConcavityReport> {
    check_dimension(n)?;
    if mu0.is_singular() && mu1.is_singular() {
        return Ok(ConcavityReport {
            t_grid: vec![],
            values: vec![],
            max_violation: 0.0,
            verdict: Verdict::Vacuous,
            witness: None,
            tolerance: CONCAVITY_TOL,
        });
    }
    let plan = monotone_plan(mu0, mu1, h)?;
    nce_test_plan(h, n, &plan, grid)
}

/// Gauge window of a ray on which the density is positive.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleWindow {
    pub ray: RayId,
    pub lo: f64,
    pub hi: f64,
}

/// Rays with positive weight and a non-trivial positive-density window.
pub fn sample_windows(h: &SyntheticNullHypersurface) -> Vec<SampleWindow> {
    h.rays()
        .iter()
        .filter(|r| r.weight > 0.0)
        .filter_map(|r| {
            let ks = r.density.knots();
            let vs = r.density.values();
            let first = vs.iter().position(|v| *v > 0.0)?;
            let last = vs.iter().rposition(|v| *v > 0.0)?;
            let lo = ks[first.saturating_sub(1)].max(r.interval.a);
            let hi = ks[(last + 1).min(ks.len() - 1)];
            (hi > lo).then(|| SampleWindow {
                ray: r.id.clone(),
                lo,
                hi,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    Translation,
    Contraction,
    Expansion,
}

/// Draws a causally ordered pair of block measures on up to three rays.
/// Half of the draws are contractions, whose targets are narrower than the
/// sources by a factor between `1e-3` and `1`.
pub fn sample_pair<R: Rng>(
    windows: &[SampleWindow],
    rng: &mut R,
) -> Result<(HMeasure, HMeasure, PairMode)> {
    let count = if rng.gen_bool(0.5) {
        1
    } else {
        rng.gen_range(1..=3)
    }
    .min(windows.len());
    let mut chosen = sample_indices(rng, windows.len(), count).into_vec();
    chosen.sort_unstable();
    let raw: Vec<f64> = (0..count).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let r: f64 = rng.gen();
    let mode = if r < 0.5 {
        PairMode::Contraction
    } else if r < 0.75 {
        PairMode::Translation
    } else {
        PairMode::Expansion
    };
    let mut s0 = Vec::with_capacity(count);
    let mut s1 = Vec::with_capacity(count);
    for (idx, w) in chosen.iter().zip(&raw) {
        let win = &windows[*idx];
        let mass = if count == 1 { 1.0 } else { w / total };
        let width = win.hi - win.lo;
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        let mut x0 = win.lo + width * u.min(v);
        let mut x1 = win.lo + width * u.max(v);
        let min_width = 1e-6 * width;
        if x1 - x0 < min_width {
            x0 = x0.min(win.hi - min_width);
            x1 = x0 + min_width;
        }
        let len = x1 - x0;
        let factor = (1e-3f64.ln() * rng.gen::<f64>()).exp();
        let new_len = match mode {
            PairMode::Contraction => len * factor,
            PairMode::Translation => len,
            PairMode::Expansion => (len / factor).min(win.hi - x0),
        };
        let lo = x0.max(x1 - new_len);
        let hi = (win.hi - new_len).max(lo);
        let y0 = lo + (hi - lo) * rng.gen::<f64>();
        let y1 = (y0 + new_len).min(win.hi).max(x1);
        s0.push(RayMeasureSlice::uniform(win.ray.clone(), x0, x1, mass)?);
        s1.push(RayMeasureSlice::uniform(win.ray.clone(), y0, y1, mass)?);
    }
    Ok((HMeasure::new(s0, 0.0)?, HMeasure::new(s1, 0.0)?, mode))
}

/// Knobs of [`nce_search_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub trials: usize,
    pub seed: u64,
    pub grid: usize,
    /// Trials evaluated per parallel batch; the search stops after the first
    /// batch containing a failure.
    pub batch: usize,
}

impl SearchConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        SearchConfig {
            trials,
            seed,
            grid: DEFAULT_GRID,
            batch: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchReport {
    pub verdict: Verdict,
    pub seed: u64,
    pub trials_requested: usize,
    pub trials_run: usize,
    pub failures: usize,
    pub first_failure: Option<usize>,
    pub worst_trial: Option<usize>,
    pub worst: Option<ConcavityReport>,
    /// Marginals of the worst trial.
    pub worst_pair: Option<(HMeasure, HMeasure)>,
}

fn run_trial(
    h: &SyntheticNullHypersurface,
    n: f64,
    windows: &[SampleWindow],
    cfg: &SearchConfig,
    index: usize,
) -> Result<ConcavityReport> {
    let mut rng = sub_rng(cfg.seed, index as u64);
    let (mu0, mu1, _) = sample_pair(windows, &mut rng)?;
    nce_test(h, n, &mu0, &mu1, cfg.grid)
}

/// Randomised search for a pair violating entropy-power concavity.
pub fn nce_search(
    h: &SyntheticNullHypersurface,
    n: f64,
    trials: usize,
    seed: u64,
) -> Result<SearchReport> {
    nce_search_with(h, n, &SearchConfig::new(trials, seed))
}

/// As [`nce_search`] with explicit configuration. Trial `i` draws from the
/// stream `(seed, i)` and results are reduced in index order, so the report
/// does not depend on scheduling.
pub fn nce_search_with(
    h: &SyntheticNullHypersurface,
    n: f64,
    cfg: &SearchConfig,
) -> Result<SearchReport> {
    check_dimension(n)?;
    if cfg.trials == 0 || cfg.batch == 0 {
        return Err(Error::Parameter(
            "the search needs at least one trial".into(),
        ));
    }
    let windows = sample_windows(h);
    let mut report = SearchReport {
        verdict: Verdict::Vacuous,
        seed: cfg.seed,
        trials_requested: cfg.trials,
        trials_run: 0,
        failures: 0,
        first_failure: None,
        worst_trial: None,
        worst: None,
        worst_pair: None,
    };
    if windows.is_empty() {
        return Ok(report);
    }
    let mut start = 0;
    while start < cfg.trials {
        let end = (start + cfg.batch).min(cfg.trials);
        let outcomes: Vec<Result<ConcavityReport>> = (start..end)
            .into_par_iter()
            .map(|i| run_trial(h, n, &windows, cfg, i))
            .collect();
        for (i, out) in (start..end).zip(outcomes) {
            let rep = out?;
            if rep.verdict.is_fail() {
                report.failures += 1;
                report.first_failure.get_or_insert(i);
            }
            let better = report
                .worst
                .as_ref()
                .is_none_or(|w| rep.max_violation > w.max_violation);
            if better {
                report.worst_trial = Some(i);
                report.worst = Some(rep);
            }
        }
        report.trials_run = end;
        if report.failures > 0 {
            break;
        }
        start = end;
    }
    report.verdict = Verdict::from_pass(report.failures == 0);
    if let Some(i) = report.worst_trial {
        let mut rng = sub_rng(cfg.seed, i as u64);
        let (a, b, _) = sample_pair(&windows, &mut rng)?;
        report.worst_pair = Some((a, b));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationReport {
    pub n: f64,
    pub per_ray: Vec<CdReport>,
    pub cd_verdict: Verdict,
    pub search: SearchReport,
    pub agree: bool,
}

/// Runs [`cd_check`] on every ray and [`nce_search`] on the whole
/// hypersurface; the two verdicts must agree.
pub fn localization_crosscheck(
    h: &SyntheticNullHypersurface,
    n: f64,
    trials: usize,
    seed: u64,
) -> Result<LocalizationReport> {
    localization_crosscheck_with(h, n, &SearchConfig::new(trials, seed))
}

pub fn localization_crosscheck_with(
    h: &SyntheticNullHypersurface,
    n: f64,
    cfg: &SearchConfig,
) -> Result<LocalizationReport> {
    let per_ray = h
        .rays()
        .iter()
        .filter(|r| r.weight > 0.0)
        .map(|r| cd_check(r, n))
        .collect::<Result<Vec<_>>>()?;
    let cd_verdict = Verdict::from_pass(per_ray.iter().all(|r| r.pass));
    let search = nce_search_with(h, n, cfg)?;
    let agree = (cd_verdict == Verdict::Pass) == (search.verdict != Verdict::Fail);
    Ok(LocalizationReport {
        n,
        per_ray,
        cd_verdict,
        search,
        agree,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub t_grid: Vec<f64>,
    /// `Ent'(mu'_t) - Ent(mu_t)` on the grid.
    pub differences: Vec<f64>,
    /// `∫ log h dmu_0`.
    pub expected_offset: f64,
    pub max_deviation: f64,
    pub verdict_before: Verdict,
    pub verdict_after: Verdict,
    pub pass: bool,
    pub tolerance: f64,
}

/// Transforms `(H, mu0, mu1, plan)` by `tp` and compares entropies and
/// concavity verdicts before and after.
pub fn invariance_check(
    h: &SyntheticNullHypersurface,
    tp: &TransversePair,
    n: f64,
    mu0: &HMeasure,
    mu1: &HMeasure,
    grid: usize,
) -> Result<InvarianceReport> {
    let plan = monotone_plan(mu0, mu1, h)?;
    let h2 = gauge_measure_transform(h, tp)?;
    let plan2 = plan.transformed(tp)?;
    let expected_offset = crate::measures::integrate_transverse(mu0, |id| {
        tp.scale(id).map(f64::ln).unwrap_or(f64::NAN)
    })?;
    let before = nce_test_plan(h, n, &plan, grid)?;
    let after = nce_test_plan(&h2, n, &plan2, grid)?;
    let mut differences = Vec::with_capacity(before.t_grid.len());
    let mut max_deviation: f64 = 0.0;
    let mut consistent = true;
    for &t in &before.t_grid {
        match (plan_entropy(&plan, h, t)?, plan_entropy(&plan2, &h2, t)?) {
            (Entropy::Finite(a), Entropy::Finite(b)) => {
                let d = b - a;
                max_deviation = max_deviation.max((d - expected_offset).abs());
                differences.push(d);
            }
            (Entropy::Infinite, Entropy::Infinite) => differences.push(f64::NAN),
            _ => {
                consistent = false;
                differences.push(f64::NAN);
            }
        }
    }
    let pass = consistent && max_deviation <= INVARIANCE_TOL && before.verdict == after.verdict;
    Ok(InvarianceReport {
        t_grid: before.t_grid,
        differences,
        expected_offset,
        max_deviation,
        verdict_before: before.verdict,
        verdict_after: after.verdict,
        pass,
        tolerance: INVARIANCE_TOL,
    })
}

/// Transforms measures alongside [`gauge_measure_transform`].
pub fn transform_pair(
    mu0: &HMeasure,
    mu1: &HMeasure,
    tp: &TransversePair,
) -> Result<(HMeasure, HMeasure)> {
    Ok((transform_measure(mu0, tp)?, transform_measure(mu1, tp)?))
}
