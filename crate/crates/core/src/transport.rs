//! Causal couplings on `H`, the monotone (quantile) coupling, G-causal
//! dynamical plans and displacement interpolation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::hypersurface::{SyntheticNullHypersurface, TransversePair};
use crate::measures::{HMeasure, RayMeasureSlice};
use crate::ray::RayId;

/// Tolerance on per-ray mass balance.
pub const MARGINAL_TOL: f64 = 1e-10;

/// Relative width of the blocks replacing atoms.
pub const ATOM_BLOCK_WIDTH: f64 = 1e-6;

const CDF_TOL: f64 = 1e-12;

/// Reason why no causal coupling exists.
#[derive(Clone, Debug, PartialEq)]
pub enum Obstruction {
    /// Mass cannot move between distinct rays (only the tip feeds rays).
    RayMassMismatch {
        ray: RayId,
        source: f64,
        target: f64,
    },
    /// The tip cannot supply (or absorb) the required mass.
    TipMassMismatch { available: f64, required: f64 },
    /// The target quantile falls below the source quantile at level `u`.
    QuantileViolation { ray: RayId, u: f64, gauge: f64 },
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obstruction::RayMassMismatch {
                ray,
                source,
                target,
            } => write!(
                f,
                "ray mass mismatch on {ray}: source {source}, target {target}"
            ),
            Obstruction::TipMassMismatch {
                available,
                required,
            } => write!(
                f,
                "tip mass mismatch: tip carries {available}, rays require {required}"
            ),
            Obstruction::QuantileViolation { ray, u, gauge } => write!(
                f,
                "quantile violation on {ray} at level u = {u} (gauge {gauge})"
            ),
        }
    }
}

/// Outcome of [`feasibility`]. `tip_shares` records how much tip mass each
/// tip-attached ray must receive.
#[derive(Clone, Debug, PartialEq)]
pub struct Feasibility {
    pub obstruction: Option<Obstruction>,
    pub tip_shares: BTreeMap<RayId, f64>,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.obstruction.is_none()
    }
}

/// Right-continuous cumulative distribution of one slice.
struct Cdf {
    knots: Vec<f64>,
    cum: Vec<f64>,
    values: Vec<f64>,
    atoms: Vec<f64>,
    atom_cum: Vec<f64>,
}

impl Cdf {
    fn new(s: Option<&RayMeasureSlice>) -> Self {
        let Some(s) = s else {
            return Cdf {
                knots: vec![],
                cum: vec![],
                values: vec![],
                atoms: vec![],
                atom_cum: vec![],
            };
        };
        let mut cum = Vec::with_capacity(s.knots().len());
        let mut acc = 0.0;
        if !s.knots().is_empty() {
            cum.push(0.0);
        }
        for (w, v) in s.knots().windows(2).zip(s.values()) {
            acc += v * (w[1] - w[0]);
            cum.push(acc);
        }
        let mut atom_cum = Vec::with_capacity(s.atoms().len());
        let mut a = 0.0;
        for (_, m) in s.atoms() {
            a += m;
            atom_cum.push(a);
        }
        Cdf {
            knots: s.knots().to_vec(),
            cum,
            values: s.values().to_vec(),
            atoms: s.atoms().iter().map(|a| a.0).collect(),
            atom_cum,
        }
    }

    fn density_part(&self, x: f64) -> f64 {
        if self.knots.is_empty() || x <= self.knots[0] {
            return 0.0;
        }
        let last = self.knots.len() - 1;
        if x >= self.knots[last] {
            return self.cum[last];
        }
        let i = self.knots.partition_point(|k| *k <= x) - 1;
        self.cum[i] + self.values[i] * (x - self.knots[i])
    }

    /// `mu((-inf, x])` when `inclusive`, `mu((-inf, x))` otherwise.
    fn eval(&self, x: f64, inclusive: bool) -> f64 {
        let n = if inclusive {
            self.atoms.partition_point(|g| *g <= x)
        } else {
            self.atoms.partition_point(|g| *g < x)
        };
        let atoms = if n == 0 { 0.0 } else { self.atom_cum[n - 1] };
        self.density_part(x) + atoms
    }
}

fn slice_breakpoints(s: Option<&RayMeasureSlice>, out: &mut Vec<f64>) {
    if let Some(s) = s {
        out.extend_from_slice(s.knots());
        out.extend(s.atoms().iter().map(|a| a.0));
    }
}

/// First point where `F1 > F0 + share`, checked at both one-sided limits of
/// every breakpoint. Between breakpoints both CDFs are affine.
fn quantile_violation(
    ray: &RayId,
    s0: Option<&RayMeasureSlice>,
    s1: Option<&RayMeasureSlice>,
    share: f64,
) -> Option<Obstruction> {
    let m1 = s1.map_or(0.0, |s| s.mass());
    if m1 <= 0.0 {
        return None;
    }
    let (f0, f1) = (Cdf::new(s0), Cdf::new(s1));
    let mut pts = Vec::new();
    slice_breakpoints(s0, &mut pts);
    slice_breakpoints(s1, &mut pts);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let tol = CDF_TOL * m1.max(1.0);
    for x in pts {
        for inclusive in [false, true] {
            let lhs = f1.eval(x, inclusive);
            if lhs > f0.eval(x, inclusive) + share + tol {
                return Some(Obstruction::QuantileViolation {
                    ray: ray.clone(),
                    u: (lhs / m1).min(1.0),
                    gauge: x,
                });
            }
        }
    }
    None
}

/// Decides whether `Π_≤(mu0, mu1)` is non-empty.
///
/// Per ray the masses must match, except that tip-attached rays may receive
/// extra mass from the tip; the target CDF may never exceed the source CDF
/// plus the tip share.
pub fn feasibility(
    mu0: &HMeasure,
    mu1: &HMeasure,
    h: &SyntheticNullHypersurface,
) -> Result<Feasibility> {
    mu0.check_support(h)?;
    mu1.check_support(h)?;
    let rays: BTreeSet<&RayId> = mu0
        .slices()
        .iter()
        .chain(mu1.slices())
        .map(|s| s.ray())
        .collect();
    let mut shares = BTreeMap::new();
    let infeasible = |o| {
        Ok(Feasibility {
            obstruction: Some(o),
            tip_shares: BTreeMap::new(),
        })
    };
    for ray in &rays {
        let (m0, m1) = (mu0.ray_mass(ray), mu1.ray_mass(ray));
        let diff = m1 - m0;
        let attached = h.tip_attached(ray) && mu0.tip_mass() > MARGINAL_TOL;
        if diff < -MARGINAL_TOL || (!attached && diff > MARGINAL_TOL) {
            return infeasible(Obstruction::RayMassMismatch {
                ray: (*ray).clone(),
                source: m0,
                target: m1,
            });
        }
        if attached && diff > MARGINAL_TOL {
            shares.insert((*ray).clone(), diff);
        }
    }
    let required: f64 = shares.values().sum::<f64>() + mu1.tip_mass();
    if (required - mu0.tip_mass()).abs() > MARGINAL_TOL {
        return infeasible(Obstruction::TipMassMismatch {
            available: mu0.tip_mass(),
            required,
        });
    }
    for ray in &rays {
        let share = shares.get(*ray).copied().unwrap_or(0.0);
        if let Some(o) = quantile_violation(ray, mu0.slice(ray), mu1.slice(ray), share) {
            return infeasible(o);
        }
    }
    Ok(Feasibility {
        obstruction: None,
        tip_shares: shares,
    })
}

/// Builds a canonical slice from possibly overlapping constant-density
/// pieces: densities are summed, equal neighbours merged, zero ends trimmed.
fn canonical_slice(ray: &RayId, pieces: &[(f64, f64, f64)]) -> RayMeasureSlice {
    let mut pts: Vec<f64> = pieces.iter().flat_map(|p| [p.0, p.1]).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut knots: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for w in pts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let v: f64 = pieces
            .iter()
            .filter(|p| p.0 <= mid && mid < p.1)
            .map(|p| p.2)
            .sum();
        if knots.is_empty() {
            if v == 0.0 {
                continue;
            }
            knots.push(w[0]);
        }
        if values.last() == Some(&v) {
            *knots.last_mut().expect("knot present") = w[1];
        } else {
            values.push(v);
            knots.push(w[1]);
        }
    }
    while values.last() == Some(&0.0) {
        values.pop();
        knots.pop();
    }
    if values.is_empty() {
        knots.clear();
    }
    RayMeasureSlice::from_raw(ray.clone(), knots, values, vec![])
}

/// Replaces each atom by a block of width `1e-6 · |I_a|`, extending left of
/// the atom for sources and right of it for targets whenever the interval
/// allows. Densities are merged into canonical form.
pub fn regularize_atoms(
    mu: &HMeasure,
    h: &SyntheticNullHypersurface,
    as_target: bool,
) -> Result<HMeasure> {
    let mut slices = Vec::with_capacity(mu.slices().len());
    for s in mu.slices() {
        let ray = h.ray(s.ray())?;
        let (a, end) = (ray.interval.a, ray.truncation());
        let eps = ATOM_BLOCK_WIDTH * (end - a);
        let mut pieces: Vec<(f64, f64, f64)> = s.pieces().collect();
        for &(g, m) in s.atoms() {
            let right = if as_target {
                g + eps <= end
            } else {
                g - eps < a
            };
            let (lo, hi) = if right { (g, g + eps) } else { (g - eps, g) };
            pieces.push((lo, hi, m / (hi - lo)));
        }
        slices.push(canonical_slice(s.ray(), &pieces));
    }
    Ok(HMeasure::from_sorted(slices, mu.tip_mass()))
}

/// One affine piece of a per-ray coupling: source mass spread uniformly on
/// `[x0, x1]` is sent monotonically onto `[y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingPiece {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub mass: f64,
}

impl CouplingPiece {
    /// Target gauge of source gauge `x` inside the piece.
    pub fn map(&self, x: f64) -> f64 {
        self.y0 + (x - self.x0) * (self.y1 - self.y0) / (self.x1 - self.x0)
    }

    pub fn is_causal(&self) -> bool {
        self.y0 >= self.x0 && self.y1 >= self.x1
    }
}

/// Mass sent from the tip to `[y0, y1]` on `ray`.
#[derive(Clone, Debug, PartialEq)]
pub struct TipRow {
    pub ray: RayId,
    pub y0: f64,
    pub y1: f64,
    pub mass: f64,
}

/// A causal coupling of two measures on `H`, stored piecewise per ray.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalCoupling {
    rays: BTreeMap<RayId, Vec<CouplingPiece>>,
    tip_rows: Vec<TipRow>,
    source: HMeasure,
    target: HMeasure,
}

impl CausalCoupling {
    pub fn rays(&self) -> &BTreeMap<RayId, Vec<CouplingPiece>> {
        &self.rays
    }

    pub fn pieces(&self, ray: &RayId) -> &[CouplingPiece] {
        self.rays.get(ray).map_or(&[], Vec::as_slice)
    }

    pub fn tip_rows(&self) -> &[TipRow] {
        &self.tip_rows
    }

    pub fn source(&self) -> &HMeasure {
        &self.source
    }

    pub fn target(&self) -> &HMeasure {
        &self.target
    }

    /// Rows `(ray, x0, x1, y0, y1, mass)` in canonical order.
    pub fn rows(&self) -> Vec<(RayId, CouplingPiece)> {
        self.rays
            .iter()
            .flat_map(|(r, ps)| ps.iter().map(move |p| (r.clone(), *p)))
            .collect()
    }

    /// Every piece is causal and, per ray, pieces are ordered in both
    /// coordinates.
    pub fn is_monotone(&self) -> bool {
        self.rays.values().all(|ps| {
            ps.iter().all(CouplingPiece::is_causal)
                && ps
                    .windows(2)
                    .all(|w| w[0].x1 <= w[1].x0 && w[0].y1 <= w[1].y0)
        })
    }

    /// First marginal reconstructed from the pieces.
    pub fn source_marginal(&self) -> HMeasure {
        let slices = self
            .rays
            .iter()
            .map(|(r, ps)| {
                let pieces: Vec<_> = ps
                    .iter()
                    .map(|p| (p.x0, p.x1, p.mass / (p.x1 - p.x0)))
                    .collect();
                canonical_slice(r, &pieces)
            })
            .collect();
        HMeasure::from_sorted(slices, self.tip_rows.iter().map(|t| t.mass).sum())
    }

    /// Second marginal reconstructed from the pieces and tip rows.
    pub fn target_marginal(&self) -> HMeasure {
        let mut by_ray: BTreeMap<RayId, Vec<(f64, f64, f64)>> = BTreeMap::new();
        for (r, ps) in &self.rays {
            by_ray
                .entry(r.clone())
                .or_default()
                .extend(ps.iter().map(|p| (p.y0, p.y1, p.mass / (p.y1 - p.y0))));
        }
        for t in &self.tip_rows {
            by_ray
                .entry(t.ray.clone())
                .or_default()
                .push((t.y0, t.y1, t.mass / (t.y1 - t.y0)));
        }
        let slices = by_ray.iter().map(|(r, p)| canonical_slice(r, p)).collect();
        HMeasure::from_sorted(slices, 0.0)
    }
}

/// Positive-mass pieces of a slice.
fn positive_pieces(s: Option<&RayMeasureSlice>) -> Vec<(f64, f64, f64)> {
    s.map(|s| s.pieces().collect()).unwrap_or_default()
}

/// Walks two lists of constant-density pieces in quantile order.
struct QuantileCursor<'a> {
    pieces: &'a [(f64, f64, f64)],
    idx: usize,
    pos: f64,
    remaining: f64,
}

impl<'a> QuantileCursor<'a> {
    fn new(pieces: &'a [(f64, f64, f64)]) -> Self {
        let mut c = QuantileCursor {
            pieces,
            idx: 0,
            pos: 0.0,
            remaining: 0.0,
        };
        c.enter(0);
        c
    }

    fn enter(&mut self, idx: usize) {
        self.idx = idx;
        if let Some(p) = self.pieces.get(idx) {
            self.pos = p.0;
            self.remaining = p.2 * (p.1 - p.0);
        } else {
            self.remaining = 0.0;
        }
    }

    fn done(&self) -> bool {
        self.idx >= self.pieces.len()
    }

    /// Consumes `dm` mass (or the whole piece when `finish`) and returns the
    /// gauge reached.
    fn advance(&mut self, dm: f64, finish: bool) -> f64 {
        let p = self.pieces[self.idx];
        if finish {
            let end = p.1;
            self.enter(self.idx + 1);
            end
        } else {
            self.pos = (self.pos + dm / p.2).min(p.1);
            self.remaining -= dm;
            self.pos
        }
    }
}

/// Quantile coupling on one ray. The first `tip_share` of target mass is fed
/// from the tip; the rest pairs source and target quantiles.
fn couple_ray(
    ray: &RayId,
    src: &[(f64, f64, f64)],
    tgt: &[(f64, f64, f64)],
    tip_share: f64,
) -> (Vec<TipRow>, Vec<CouplingPiece>) {
    let scale: f64 = tgt
        .iter()
        .map(|p| p.2 * (p.1 - p.0))
        .sum::<f64>()
        .max(1e-300);
    let tie = 1e-13 * scale;
    let mut tc = QuantileCursor::new(tgt);
    let mut tips = Vec::new();
    let mut share = tip_share;
    while share > tie && !tc.done() {
        let dm = share.min(tc.remaining);
        let finish = tc.remaining - share <= tie;
        let y0 = tc.pos;
        let y1 = tc.advance(dm, finish);
        if y1 > y0 {
            tips.push(TipRow {
                ray: ray.clone(),
                y0,
                y1,
                mass: dm,
            });
        }
        share -= dm;
    }
    let mut sc = QuantileCursor::new(src);
    let mut out = Vec::new();
    while !sc.done() && !tc.done() {
        let (r0, r1) = (sc.remaining, tc.remaining);
        let dm = r0.min(r1);
        let fin0 = r0 - r1 <= tie;
        let fin1 = r1 - r0 <= tie;
        let (x0, y0) = (sc.pos, tc.pos);
        let x1 = sc.advance(dm, fin0);
        let y1 = tc.advance(dm, fin1);
        if x1 > x0 && y1 > y0 {
            out.push(CouplingPiece {
                x0,
                x1,
                y0,
                y1,
                mass: dm,
            });
        }
    }
    (tips, merge_pieces(out))
}

/// Joins contiguous pieces carrying the same source and target densities.
fn merge_pieces(pieces: Vec<CouplingPiece>) -> Vec<CouplingPiece> {
    let mut out: Vec<CouplingPiece> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let Some(q) = out.last_mut() {
            let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
            if q.x1 == p.x0
                && q.y1 == p.y0
                && same(q.mass / (q.x1 - q.x0), p.mass / (p.x1 - p.x0))
                && same(q.mass / (q.y1 - q.y0), p.mass / (p.y1 - p.y0))
            {
                q.x1 = p.x1;
                q.y1 = p.y1;
                q.mass += p.mass;
                continue;
            }
        }
        out.push(p);
    }
    out
}

fn build_coupling(
    mu0: &HMeasure,
    mu1: &HMeasure,
    h: &SyntheticNullHypersurface,
    allow_tip: bool,
) -> Result<CausalCoupling> {
    let f = feasibility(mu0, mu1, h)?;
    if let Some(o) = f.obstruction {
        return Err(Error::Infeasible(o));
    }
    if !allow_tip && (mu0.tip_mass() > 0.0 || mu1.tip_mass() > 0.0) {
        return Err(Error::Precondition(
            "the monotone coupling needs marginals off the tip".into(),
        ));
    }
    if mu1.tip_mass() > 0.0 {
        return Err(Error::Precondition(
            "tip-to-tip mass is not represented in ray couplings".into(),
        ));
    }
    let r0 = regularize_atoms(mu0, h, false)?;
    let r1 = regularize_atoms(mu1, h, true)?;
    if mu0.has_atoms() || mu1.has_atoms() {
        if let Some(o) = feasibility(&r0, &r1, h)?.obstruction {
            return Err(Error::Infeasible(o));
        }
    }
    let rays: BTreeSet<&RayId> = r0
        .slices()
        .iter()
        .chain(r1.slices())
        .map(|s| s.ray())
        .collect();
    let mut map = BTreeMap::new();
    let mut tip_rows = Vec::new();
    for ray in rays {
        let share = f.tip_shares.get(ray).copied().unwrap_or(0.0);
        let (tips, pieces) = couple_ray(
            ray,
            &positive_pieces(r0.slice(ray)),
            &positive_pieces(r1.slice(ray)),
            share,
        );
        tip_rows.extend(tips);
        if !pieces.is_empty() {
            map.insert(ray.clone(), pieces);
        }
    }
    Ok(CausalCoupling {
        rays: map,
        tip_rows,
        source: mu0.clone(),
        target: mu1.clone(),
    })
}

/// The unique monotone coupling: per ray, source and target quantiles are
/// paired on the merged breakpoint grid. Atoms are replaced by narrow
/// blocks first.
pub fn monotone_coupling(
    mu0: &HMeasure,
    mu1: &HMeasure,
    h: &SyntheticNullHypersurface,
) -> Result<CausalCoupling> {
    build_coupling(mu0, mu1, h, false)
}

/// A causal coupling witnessing feasibility. Tip mass is sent to the lowest
/// target quantiles of each tip-attached ray; the rest is quantile-coupled.
pub fn feasible_coupling(
    mu0: &HMeasure,
    mu1: &HMeasure,
    h: &SyntheticNullHypersurface,
) -> Result<CausalCoupling> {
    build_coupling(mu0, mu1, h, true)
}

/// A G-causal dynamical plan: each coupling piece becomes the family of
/// affine gauge segments `t -> (1 - t) x + t T(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicalPlan {
    rays: BTreeMap<RayId, Vec<CouplingPiece>>,
    source: HMeasure,
    target: HMeasure,
}

/// Lifts a tip-free coupling to its dynamical plan.
pub fn dynamical_plan(coupling: &CausalCoupling) -> Result<DynamicalPlan> {
    if !coupling.tip_rows.is_empty() {
        return Err(Error::Precondition(
            "dynamical plans are built from couplings off the tip".into(),
        ));
    }
    Ok(DynamicalPlan {
        rays: coupling.rays.clone(),
        source: coupling.source.clone(),
        target: coupling.target.clone(),
    })
}

impl DynamicalPlan {
    pub fn rays(&self) -> &BTreeMap<RayId, Vec<CouplingPiece>> {
        &self.rays
    }

    pub fn source(&self) -> &HMeasure {
        &self.source
    }

    pub fn target(&self) -> &HMeasure {
        &self.target
    }

    /// `(e_0, e_1)_# plan`.
    pub fn endpoint_coupling(&self) -> CausalCoupling {
        CausalCoupling {
            rays: self.rays.clone(),
            tip_rows: vec![],
            source: self.source.clone(),
            target: self.target.clone(),
        }
    }

    /// Largest gauge speed `|T(x) - x|` over the plan.
    pub fn max_displacement(&self) -> f64 {
        self.rays
            .values()
            .flatten()
            .map(|p| (p.y0 - p.x0).max(p.y1 - p.x1))
            .fold(0.0, f64::max)
    }

    /// The plan restricted to the time window `[t0, t1]`, rescaled to
    /// `[0, 1]`.
    pub fn restrict(&self, t0: f64, t1: f64) -> Result<DynamicalPlan> {
        check_time(t0)?;
        check_time(t1)?;
        if t0 > t1 {
            return Err(Error::Parameter(format!(
                "restriction needs t0 <= t1, got {t0} > {t1}"
            )));
        }
        let rays = self
            .rays
            .iter()
            .map(|(r, ps)| {
                let q = ps
                    .iter()
                    .map(|p| CouplingPiece {
                        x0: lerp(p.x0, p.y0, t0),
                        x1: lerp(p.x1, p.y1, t0),
                        y0: lerp(p.x0, p.y0, t1),
                        y1: lerp(p.x1, p.y1, t1),
                        mass: p.mass,
                    })
                    .collect();
                (r.clone(), q)
            })
            .collect();
        Ok(DynamicalPlan {
            rays,
            source: interpolate(self, t0)?,
            target: interpolate(self, t1)?,
        })
    }

    /// Carries the plan through the gauge change `G' = f + hG`.
    pub fn transformed(&self, tp: &TransversePair) -> Result<DynamicalPlan> {
        let mut rays = BTreeMap::new();
        for (r, ps) in &self.rays {
            let (f, s) = (tp.shift(r)?, tp.scale(r)?);
            let m = |g: f64| f + s * g;
            rays.insert(
                r.clone(),
                ps.iter()
                    .map(|p| CouplingPiece {
                        x0: m(p.x0),
                        x1: m(p.x1),
                        y0: m(p.y0),
                        y1: m(p.y1),
                        mass: p.mass,
                    })
                    .collect(),
            );
        }
        Ok(DynamicalPlan {
            rays,
            source: crate::measures::transform_measure(&self.source, tp)?,
            target: crate::measures::transform_measure(&self.target, tp)?,
        })
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "interpolation time must lie in [0, 1], got {t}"
        )))
    }
}

/// `mu_t = (e_t)_# plan`. At `t = 0` and `t = 1` the stored marginals are
/// returned unchanged; in between each piece is pushed forward exactly, a
/// piece collapsing to a point becomes an atom.
pub fn interpolate(plan: &DynamicalPlan, t: f64) -> Result<HMeasure> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(plan.source.clone());
    }
    if t == 1.0 {
        return Ok(plan.target.clone());
    }
    let mut slices = Vec::with_capacity(plan.rays.len());
    for (ray, ps) in &plan.rays {
        let mut knots: Vec<f64> = Vec::with_capacity(ps.len() + 1);
        let mut values = Vec::with_capacity(ps.len());
        let mut atoms = Vec::new();
        for p in ps {
            let mut z0 = lerp(p.x0, p.y0, t);
            let z1 = lerp(p.x1, p.y1, t);
            if let Some(&last) = knots.last() {
                z0 = z0.max(last);
            }
            if z1 <= z0 {
                atoms.push((z0, p.mass));
                continue;
            }
            match knots.last() {
                None => knots.push(z0),
                Some(&last) if z0 > last => {
                    values.push(0.0);
                    knots.push(z0);
                }
                _ => {}
            }
            values.push(p.mass / (z1 - z0));
            knots.push(z1);
        }
        if values.is_empty() {
            knots.clear();
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        slices.push(RayMeasureSlice::from_raw(ray.clone(), knots, values, atoms));
    }
    Ok(HMeasure::from_sorted(slices, 0.0))
}

/// Convenience: monotone plan between two measures.
pub fn monotone_plan(
    mu0: &HMeasure,
    mu1: &HMeasure,
    h: &SyntheticNullHypersurface,
) -> Result<DynamicalPlan> {
    dynamical_plan(&monotone_coupling(mu0, mu1, h)?)
}
