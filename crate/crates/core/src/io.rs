//! JSON instance files (hypersurfaces, measures, approximating sequences)
//! and CSV exports (plans, geodesic traces, entropy contributions).
//!
//! Floats are written in shortest round-trip form, so reading a written file
//! reproduces every numeric field bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypersurface::SyntheticNullHypersurface;
use crate::maps::MonotoneMap;
use crate::measures::{entropy_contributions, Entropy, HMeasure, RayMeasureSlice};
use crate::ray::{Embedding, GaugeInterval, Ray, RayDensity, RayId};
use crate::smooth::GeodesicTrace;
use crate::stability::{ApproximationSequence, ApproximationStep};
use crate::transport::{CausalCoupling, DynamicalPlan};

/// Right end of a gauge interval: a number or the string `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GaugeEnd {
    Finite(f64),
    Named(String),
}

impl GaugeEnd {
    fn from_value(b: f64) -> Self {
        if b.is_finite() {
            GaugeEnd::Finite(b)
        } else {
            GaugeEnd::Named("inf".into())
        }
    }

    fn value(&self) -> Result<f64> {
        match self {
            GaugeEnd::Finite(b) => Ok(*b),
            GaugeEnd::Named(s) if s == "inf" => Ok(f64::INFINITY),
            GaugeEnd::Named(s) => Err(invalid(format!(
                "interval end must be a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalFile {
    pub a: f64,
    pub b: GaugeEnd,
    pub has_initial: bool,
    pub has_final: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayFile {
    pub id: RayId,
    pub weight: f64,
    pub interval: IntervalFile,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    /// Interpolation exponent `m` of the density (`h^{1/m}` piecewise
    /// linear); omitted when 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypersurfaceFile {
    pub rays: Vec<RayFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_tip: Option<Vec<RayId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension_hint: Option<f64>,
}

impl From<&SyntheticNullHypersurface> for HypersurfaceFile {
    fn from(h: &SyntheticNullHypersurface) -> Self {
        HypersurfaceFile {
            rays: h
                .rays()
                .iter()
                .map(|r| RayFile {
                    id: r.id.clone(),
                    weight: r.weight,
                    interval: IntervalFile {
                        a: r.interval.a,
                        b: GaugeEnd::from_value(r.interval.b),
                        has_initial: r.interval.has_initial_point,
                        has_final: r.interval.has_final_point,
                    },
                    knots: r.density.knots().to_vec(),
                    values: r.density.values().to_vec(),
                    exponent: (r.density.exponent() != 1.0).then(|| r.density.exponent()),
                    embedding: r.embedding.as_ref().map(|e| e.points().to_vec()),
                })
                .collect(),
            shared_tip: h.shared_tip().map(|t| t.iter().cloned().collect()),
            dimension_hint: h.dimension_hint(),
        }
    }
}

impl HypersurfaceFile {
    /// Builds the instance and runs the disintegration check.
    pub fn into_hypersurface(self) -> Result<SyntheticNullHypersurface> {
        let h = self.into_unchecked()?;
        let report = crate::measures::disintegration_check(&h);
        if !report.pass {
            return Err(invalid(report.summary()));
        }
        Ok(h)
    }

    /// Builds the instance with structural checks only, leaving weights and
    /// density signs to [`crate::measures::disintegration_check`].
    pub fn into_unchecked(self) -> Result<SyntheticNullHypersurface> {
        let rays = self
            .rays
            .into_iter()
            .map(|r| {
                let interval = GaugeInterval::new(
                    r.interval.a,
                    r.interval.b.value()?,
                    r.interval.has_initial,
                    r.interval.has_final,
                )
                .map_err(|e| invalid(format!("ray {}: {e}", r.id)))?;
                let density =
                    RayDensity::with_exponent(r.knots, r.values, r.exponent.unwrap_or(1.0))
                        .map_err(|e| invalid(format!("ray {}: {e}", r.id)))?;
                let embedding = r.embedding.map(Embedding::new).transpose()?;
                Ray::new(r.id, r.weight, interval, density, embedding)
            })
            .collect::<Result<Vec<_>>>()?;
        SyntheticNullHypersurface::new_unchecked(rays, self.shared_tip, self.dimension_hint)
    }
}

pub fn hypersurface_to_string(h: &SyntheticNullHypersurface) -> Result<String> {
    Ok(serde_json::to_string_pretty(&HypersurfaceFile::from(h))?)
}

pub fn hypersurface_from_str(text: &str) -> Result<SyntheticNullHypersurface> {
    serde_json::from_str::<HypersurfaceFile>(text)?.into_hypersurface()
}

pub fn read_hypersurface(path: &Path) -> Result<SyntheticNullHypersurface> {
    hypersurface_from_str(&read_text(path)?).map_err(|e| with_path(path, e))
}

/// Reads a hypersurface without the disintegration check.
pub fn read_hypersurface_unchecked(path: &Path) -> Result<SyntheticNullHypersurface> {
    let text = read_text(path)?;
    serde_json::from_str::<HypersurfaceFile>(&text)
        .map_err(Error::from)
        .and_then(HypersurfaceFile::into_unchecked)
        .map_err(|e| with_path(path, e))
}

pub fn write_hypersurface(path: &Path, h: &SyntheticNullHypersurface) -> Result<()> {
    write_text(path, &hypersurface_to_string(h)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceFile {
    pub ray_id: RayId,
    /// Informational on write; checked against the data on read.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    pub density_knots: Vec<f64>,
    pub density_values: Vec<f64>,
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub slices: Vec<SliceFile>,
    #[serde(default)]
    pub tip_mass: f64,
}

impl From<&HMeasure> for MeasureFile {
    fn from(mu: &HMeasure) -> Self {
        MeasureFile {
            slices: mu
                .slices()
                .iter()
                .map(|s| SliceFile {
                    ray_id: s.ray().clone(),
                    mass: Some(s.mass()),
                    density_knots: s.knots().to_vec(),
                    density_values: s.values().to_vec(),
                    atoms: s.atoms().to_vec(),
                })
                .collect(),
            tip_mass: mu.tip_mass(),
        }
    }
}

impl MeasureFile {
    pub fn into_measure(self) -> Result<HMeasure> {
        let slices = self
            .slices
            .into_iter()
            .map(|s| {
                let slice = RayMeasureSlice::new(
                    s.ray_id.clone(),
                    s.density_knots,
                    s.density_values,
                    s.atoms,
                )?;
                if let Some(m) = s.mass {
                    if (m - slice.mass()).abs() > 1e-12 * m.abs().max(1.0) {
                        return Err(invalid(format!(
                            "slice {}: declared mass {m} but data give {}",
                            s.ray_id,
                            slice.mass()
                        )));
                    }
                }
                Ok(slice)
            })
            .collect::<Result<Vec<_>>>()?;
        HMeasure::new(slices, self.tip_mass)
    }
}

pub fn measure_to_string(mu: &HMeasure) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MeasureFile::from(mu))?)
}

pub fn measure_from_str(text: &str) -> Result<HMeasure> {
    serde_json::from_str::<MeasureFile>(text)?.into_measure()
}

pub fn read_measure(path: &Path) -> Result<HMeasure> {
    measure_from_str(&read_text(path)?).map_err(|e| with_path(path, e))
}

pub fn write_measure(path: &Path, mu: &HMeasure) -> Result<()> {
    write_text(path, &measure_to_string(mu)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapTable {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl From<&MonotoneMap> for MapTable {
    fn from(m: &MonotoneMap) -> Self {
        MapTable {
            knots: m.knots().to_vec(),
            values: m.values().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepEntry {
    pub index: usize,
    pub eps: f64,
    /// Hypersurface file, relative to the manifest.
    pub surface: String,
    pub to_limit: BTreeMap<RayId, MapTable>,
    pub from_limit: BTreeMap<RayId, MapTable>,
}

/// Manifest of an approximating sequence: file names of the limit and the
/// steps plus the gauge map tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceManifest {
    pub limit: String,
    pub steps: Vec<StepEntry>,
}

fn maps_from_tables(tables: BTreeMap<RayId, MapTable>) -> Result<BTreeMap<RayId, MonotoneMap>> {
    tables
        .into_iter()
        .map(|(id, t)| {
            let m = MonotoneMap::new(t.knots, t.values)
                .map_err(|e| invalid(format!("map for ray {id}: {e}")))?;
            Ok((id, m))
        })
        .collect()
}

pub fn read_sequence(manifest: &Path) -> Result<ApproximationSequence> {
    let text = read_text(manifest)?;
    let m: SequenceManifest =
        serde_json::from_str(&text).map_err(|e| with_path(manifest, e.into()))?;
    let dir = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let limit = read_hypersurface(&dir.join(&m.limit))?;
    let steps = m
        .steps
        .into_iter()
        .map(|s| {
            Ok(ApproximationStep {
                index: s.index,
                surface: read_hypersurface(&dir.join(&s.surface))?,
                to_limit: maps_from_tables(s.to_limit)?,
                from_limit: maps_from_tables(s.from_limit)?,
                eps: s.eps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ApproximationSequence { limit, steps })
}

/// Writes `limit.json`, `step_<n>.json` and `manifest.json` into `dir` and
/// returns the manifest path.
pub fn write_sequence(dir: &Path, seq: &ApproximationSequence) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    write_hypersurface(&dir.join("limit.json"), &seq.limit)?;
    let mut steps = Vec::with_capacity(seq.steps.len());
    for s in &seq.steps {
        let name = format!("step_{}.json", s.index);
        write_hypersurface(&dir.join(&name), &s.surface)?;
        steps.push(StepEntry {
            index: s.index,
            eps: s.eps,
            surface: name,
            to_limit: s
                .to_limit
                .iter()
                .map(|(k, v)| (k.clone(), v.into()))
                .collect(),
            from_limit: s
                .from_limit
                .iter()
                .map(|(k, v)| (k.clone(), v.into()))
                .collect(),
        });
    }
    let manifest = SequenceManifest {
        limit: "limit.json".into(),
        steps,
    };
    let path = dir.join("manifest.json");
    write_text(&path, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// Rows `ray,g0_start,g0_end,g1_start,g1_end,mass`; mass leaving the tip has
/// `tip` in both source columns.
pub fn coupling_csv(c: &CausalCoupling) -> String {
    let mut out = String::from("ray,g0_start,g0_end,g1_start,g1_end,mass\n");
    for (id, p) in c.rows() {
        let _ = writeln!(out, "{id},{},{},{},{},{}", p.x0, p.x1, p.y0, p.y1, p.mass);
    }
    for t in c.tip_rows() {
        let _ = writeln!(out, "{},tip,tip,{},{},{}", t.ray, t.y0, t.y1, t.mass);
    }
    out
}

pub fn plan_csv(plan: &DynamicalPlan) -> String {
    coupling_csv(&plan.endpoint_coupling())
}

pub fn trace_csv(trace: &GeodesicTrace) -> String {
    let mut out = String::from("s,t,tdot,r\n");
    for x in &trace.samples {
        let _ = writeln!(out, "{},{},{},{}", x.s, x.t, x.tdot, x.r);
    }
    out
}

/// Rows `ray,mass,entropy`; an infinite contribution is written as `inf`.
pub fn entropy_csv(mu: &HMeasure, h: &SyntheticNullHypersurface) -> Result<String> {
    let mut out = String::from("ray,mass,entropy\n");
    for (id, mass, e) in entropy_contributions(mu, h)? {
        let v = match e {
            Entropy::Finite(v) => v.to_string(),
            Entropy::Infinite => "inf".into(),
        };
        let _ = writeln!(out, "{id},{mass},{v}");
    }
    if mu.tip_mass() > 0.0 {
        let _ = writeln!(out, "tip,{},inf", mu.tip_mass());
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(p) => invalid(format!(
            "{}: line {}, column {}: {p}",
            path.display(),
            p.line(),
            p.column()
        )),
        Error::InvalidInput(m) => invalid(format!("{}: {m}", path.display())),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::{cone_hypersurface_with, sphere_boundary_hypersurface_with, Congruence};

    #[test]
    fn hypersurface_round_trip_is_bit_exact() {
        for h in [
            cone_hypersurface_with(4, 3.0, 5).unwrap(),
            sphere_boundary_hypersurface_with(2.0, 1.0, Congruence::Ingoing, 3).unwrap(),
        ] {
            let text = hypersurface_to_string(&h).unwrap();
            let back = hypersurface_from_str(&text).unwrap();
            assert_eq!(back, h);
            assert_eq!(hypersurface_to_string(&back).unwrap(), text);
        }
    }

    #[test]
    fn infinite_end_is_named() {
        let h = cone_hypersurface_with(3, 1.0, 2).unwrap();
        assert!(hypersurface_to_string(&h).unwrap().contains("\"inf\""));
    }

    #[test]
    fn bad_end_and_weights_are_rejected() {
        let h = cone_hypersurface_with(3, 1.0, 2).unwrap();
        let text = hypersurface_to_string(&h).unwrap();
        assert!(matches!(
            hypersurface_from_str(&text.replacen("\"inf\"", "\"forever\"", 1)),
            Err(Error::InvalidInput(_))
        ));
        let skewed = text.replacen("\"weight\": 0.5", "\"weight\": 0.7", 1);
        assert!(matches!(
            hypersurface_from_str(&skewed),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            hypersurface_from_str("{\"rays\": ["),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn measure_round_trip() {
        let mu = HMeasure::new(
            vec![
                RayMeasureSlice::new("a", vec![0.0, 0.5, 1.0], vec![0.2, 0.6], vec![]).unwrap(),
                RayMeasureSlice::atom("b", 0.3, 0.6).unwrap(),
            ],
            0.0,
        )
        .unwrap();
        let back = measure_from_str(&measure_to_string(&mu).unwrap()).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn sequence_round_trip() {
        let dir = std::env::temp_dir().join(format!("synthnull-io-{}", std::process::id()));
        let seq = crate::stability::perturbed_cone_sequence(2, 1.0, 3).unwrap();
        let path = write_sequence(&dir, &seq).unwrap();
        assert_eq!(read_sequence(&path).unwrap(), seq);
        let _ = fs::remove_dir_all(&dir);
    }
}
