//! End-to-end certification: per-point Monte Carlo certification, dataset
//! batch runs with per-point seed derivation, certified-accuracy curves,
//! and the on-disk formats (dataset CSV/binary, records CSV, run manifest).
//!
//! # Seeding
//!
//! Every dataset point carries a stable `index`; its certification seed is
//! `base_seed.derive(index)` (SplitMix64). Draw `j` of a point then uses
//! ChaCha8 stream `j` under that derived seed. Results are therefore
//! independent of processing order and worker count, and a permuted dataset
//! yields the identically permuted records.
//!
//! # File formats
//!
//! Dataset CSV: header `label,x0,...,x{d-1}`, one row per point. Dataset
//! binary: 16-byte header (`SMCTDATA` magic, `n: u32 le`, `d: u32 le`),
//! then `n` labels as `u32 le`, then `n * d` features as `f32 le` in
//! row-major order. Records CSV: one row per [`CertificationRecord`] with
//! columns in field order; floats use shortest round-trip formatting so
//! golden files are stable.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierModel;
use crate::divergence::Norm;
use crate::error::{Error, Result};
use crate::estimation::{sample_counts, sample_counts_serial, top2_bounds, ConfidenceSpec};
use crate::exec;
use crate::mechanisms::{MechanismKind, NoiseMechanism, RandomSeed};
use crate::radius::{radius_l2_gaussian, radius_linf_exponential, radius_linf_from_l2};

const DATASET_MAGIC: &[u8; 8] = b"SMCTDATA";

/// One labelled input with its stable index.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub index: u64,
    pub features: Vec<f64>,
    pub label: usize,
}

/// A labelled evaluation set with a fixed feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<DataPoint>,
    dim: usize,
}

impl Dataset {
    pub fn new(points: Vec<DataPoint>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dataset dimension must be at least 1"));
        }
        for p in &points {
            if p.features.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "point {} has {} coordinates, dataset dim is {dim}",
                    p.index,
                    p.features.len()
                )));
            }
            if p.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("point {} has non-finite coordinates", p.index)));
            }
        }
        Ok(Dataset { points, dim })
    }

    /// Build from rows, assigning indices 0..n in order.
    pub fn from_rows(rows: Vec<(Vec<f64>, usize)>, dim: usize) -> Result<Self> {
        let points = rows
            .into_iter()
            .enumerate()
            .map(|(i, (features, label))| DataPoint {
                index: i as u64,
                features,
                label,
            })
            .collect();
        Self::new(points, dim)
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Load the CSV form (`label,x0,...,x{d-1}` header).
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        let display = path.display().to_string();
        let parse_err = |line: usize, message: String| Error::Parse {
            path: display.clone(),
            line,
            message,
        };

        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty file".into()))?
            .map_err(Error::Io)?;
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        if cols.first() != Some(&"label") || cols.len() < 2 {
            return Err(parse_err(1, "header must be label,x0,...".into()));
        }
        let dim = cols.len() - 1;
        for (i, c) in cols.iter().skip(1).enumerate() {
            if *c != format!("x{i}") {
                return Err(parse_err(1, format!("expected column x{i}, found {c}")));
            }
        }

        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let lineno = lineno + 2;
            let line = line.map_err(Error::Io)?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != dim + 1 {
                return Err(parse_err(
                    lineno,
                    format!("expected {} fields, found {}", dim + 1, fields.len()),
                ));
            }
            let label: usize = fields[0]
                .parse()
                .map_err(|e| parse_err(lineno, format!("bad label {:?}: {e}", fields[0])))?;
            let mut features = Vec::with_capacity(dim);
            for f in &fields[1..] {
                let v: f64 = f
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad value {f:?}: {e}")))?;
                if !v.is_finite() {
                    return Err(parse_err(lineno, format!("non-finite value {f:?}")));
                }
                features.push(v);
            }
            rows.push((features, label));
        }
        Self::from_rows(rows, dim)
    }

    /// Write the CSV form.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        write!(out, "label")?;
        for i in 0..self.dim {
            write!(out, ",x{i}")?;
        }
        writeln!(out)?;
        for p in &self.points {
            write!(out, "{}", p.label)?;
            for v in &p.features {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Load the binary form (see module docs). Features are stored as f32.
    pub fn from_binary_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let bad = |message: String| Error::Parse {
            path: display.clone(),
            line: 0,
            message,
        };
        let mut file = BufReader::new(std::fs::File::open(path)?);

        let mut header = [0u8; 16];
        file.read_exact(&mut header).map_err(|_| bad("truncated header".into()))?;
        if &header[0..8] != DATASET_MAGIC {
            return Err(bad("bad magic; not a dataset binary".into()));
        }
        let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
        if dim == 0 {
            return Err(bad("dimension must be at least 1".into()));
        }

        let mut labels = vec![0u32; n];
        let mut buf4 = [0u8; 4];
        for l in labels.iter_mut() {
            file.read_exact(&mut buf4).map_err(|_| bad("truncated labels".into()))?;
            *l = u32::from_le_bytes(buf4);
        }
        let mut rows = Vec::with_capacity(n);
        for &label in &labels {
            let mut features = Vec::with_capacity(dim);
            for _ in 0..dim {
                file.read_exact(&mut buf4).map_err(|_| bad("truncated features".into()))?;
                features.push(f32::from_le_bytes(buf4) as f64);
            }
            rows.push((features, label as usize));
        }
        if file.read(&mut buf4)? != 0 {
            return Err(bad("trailing bytes after feature block".into()));
        }
        Self::from_rows(rows, dim)
    }

    /// Write the binary form.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        out.write_all(DATASET_MAGIC)?;
        out.write_all(&(self.points.len() as u32).to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        for p in &self.points {
            out.write_all(&(p.label as u32).to_le_bytes())?;
        }
        for p in &self.points {
            for &v in &p.features {
                out.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Which formula produced the reported l-infinity radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinfMethod {
    /// Gaussian l2 radius projected by `1/sqrt(d)`.
    GaussianProjected,
    /// Direct Exponential-mechanism radius.
    Exponential,
}

impl std::fmt::Display for LinfMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LinfMethod::GaussianProjected => write!(f, "gaussian-projected"),
            LinfMethod::Exponential => write!(f, "exponential"),
        }
    }
}

/// Per-point certification result.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificationRecord {
    pub index: u64,
    pub true_label: usize,
    pub predicted_class: usize,
    pub abstained: bool,
    pub p1_lower: f64,
    pub p2_upper: f64,
    /// Certified l2 radius; absent for the Exponential mechanism.
    pub radius_l2: Option<f64>,
    pub radius_linf: f64,
    pub radius_linf_method: LinfMethod,
    pub n_samples: usize,
    pub seed: u64,
}

/// A failed point, kept out of the records but reported with the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub index: u64,
    pub message: String,
}

/// Output of a dataset run: records in input order plus any point failures.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRun {
    pub records: Vec<CertificationRecord>,
    pub failures: Vec<PointFailure>,
}

/// Certify one labelled point: sample counts, bound `(p1, p2)`, then apply
/// the mechanism's radius formulas. The pair failing to separate top from
/// runner-up yields an abstain record with zero radii.
pub fn certify_point(
    model: &ClassifierModel,
    point: &DataPoint,
    mech: &NoiseMechanism,
    n: usize,
    spec: &ConfidenceSpec,
    seed: RandomSeed,
) -> Result<CertificationRecord> {
    certify_point_inner(model, point, mech, n, spec, seed, false)
}

fn certify_point_inner(
    model: &ClassifierModel,
    point: &DataPoint,
    mech: &NoiseMechanism,
    n: usize,
    spec: &ConfidenceSpec,
    seed: RandomSeed,
    serial: bool,
) -> Result<CertificationRecord> {
    let counts = if serial {
        sample_counts_serial(model, &point.features, mech, n, seed)?
    } else {
        sample_counts(model, &point.features, mech, n, seed)?
    };
    let pp = top2_bounds(&counts, spec)?;
    let (radius_l2, radius_linf, method) = match mech.kind() {
        MechanismKind::Gaussian => {
            let r2 = radius_l2_gaussian(mech.sigma(), &pp)?;
            let rinf = radius_linf_from_l2(r2, mech.dim())?;
            (Some(r2), rinf, LinfMethod::GaussianProjected)
        }
        MechanismKind::LinfExponential => {
            let rinf = radius_linf_exponential(mech.sigma(), &pp)?;
            (None, rinf, LinfMethod::Exponential)
        }
    };
    Ok(CertificationRecord {
        index: point.index,
        true_label: point.label,
        predicted_class: counts.top_class(),
        abstained: !pp.certifies(),
        p1_lower: pp.p1(),
        p2_upper: pp.p2(),
        radius_l2,
        radius_linf,
        radius_linf_method: method,
        n_samples: n,
        seed: seed.0,
    })
}

fn check_run_inputs(model: &ClassifierModel, ds: &Dataset, mech: &NoiseMechanism) -> Result<()> {
    if ds.dim() != model.dim() || ds.dim() != mech.dim() {
        return Err(Error::DimensionMismatch(format!(
            "dataset dim {} vs model dim {} vs mechanism dim {}",
            ds.dim(),
            model.dim(),
            mech.dim()
        )));
    }
    for p in ds.points() {
        if p.label >= model.num_classes() {
            return Err(Error::invalid(format!(
                "point {} has label {} but the model has {} classes",
                p.index,
                p.label,
                model.num_classes()
            )));
        }
    }
    Ok(())
}

/// Certify every point of `ds`. Point `i` uses `base_seed.derive(index_i)`;
/// failures are collected and the run continues.
pub fn certify_dataset(
    model: &ClassifierModel,
    ds: &Dataset,
    mech: &NoiseMechanism,
    n: usize,
    spec: &ConfidenceSpec,
    base_seed: RandomSeed,
) -> Result<DatasetRun> {
    certify_dataset_with_progress(model, ds, mech, n, spec, base_seed, |_| {})
}

/// [`certify_dataset`] with a completion callback; `progress(k)` fires after
/// each point with the number of points finished so far (any order).
pub fn certify_dataset_with_progress(
    model: &ClassifierModel,
    ds: &Dataset,
    mech: &NoiseMechanism,
    n: usize,
    spec: &ConfidenceSpec,
    base_seed: RandomSeed,
    progress: impl Fn(usize) + Sync,
) -> Result<DatasetRun> {
    check_run_inputs(model, ds, mech)?;
    let done = AtomicUsize::new(0);
    let outcomes = exec::map_indexed(ds.len(), |i| {
        let point = &ds.points()[i];
        let out = certify_point_inner(model, point, mech, n, spec, base_seed.derive(point.index), false);
        progress(done.fetch_add(1, Ordering::Relaxed) + 1);
        out
    });
    Ok(collect_run(ds, outcomes))
}

/// Sequential reference for [`certify_dataset`]; same outputs by the
/// seeding contract. Benchmarks compare the two paths.
pub fn certify_dataset_serial(
    model: &ClassifierModel,
    ds: &Dataset,
    mech: &NoiseMechanism,
    n: usize,
    spec: &ConfidenceSpec,
    base_seed: RandomSeed,
) -> Result<DatasetRun> {
    check_run_inputs(model, ds, mech)?;
    let outcomes = exec::map_indexed_serial(ds.len(), |i| {
        let point = &ds.points()[i];
        certify_point_inner(model, point, mech, n, spec, base_seed.derive(point.index), true)
    });
    Ok(collect_run(ds, outcomes))
}

fn collect_run(ds: &Dataset, outcomes: Vec<Result<CertificationRecord>>) -> DatasetRun {
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (point, outcome) in ds.points().iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => failures.push(PointFailure {
                index: point.index,
                message: e.to_string(),
            }),
        }
    }
    DatasetRun { records, failures }
}

/// Certified accuracy at each grid radius: the fraction of records that did
/// not abstain, predicted the true label, and certified a radius strictly
/// larger than `R` in the selected norm. `radii` must be sorted ascending;
/// the resulting fractions are nonincreasing.
pub fn certified_accuracy_curve(
    records: &[CertificationRecord],
    radii: &[f64],
    norm: Norm,
) -> Result<Vec<(f64, f64)>> {
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("radius grid must be sorted ascending"));
    }
    let pick = |r: &CertificationRecord| -> f64 {
        match norm {
            Norm::L2 => r.radius_l2.unwrap_or(0.0),
            Norm::Linf => r.radius_linf,
            Norm::Lp(_) => f64::NAN,
        }
    };
    if matches!(norm, Norm::Lp(_)) {
        return Err(Error::UnsupportedCombination(
            "curves are reported for l2 and linf radii".into(),
        ));
    }
    let n = records.len();
    Ok(radii
        .iter()
        .map(|&r| {
            if n == 0 {
                return (r, 0.0);
            }
            let hits = records
                .iter()
                .filter(|rec| !rec.abstained && rec.predicted_class == rec.true_label && pick(rec) > r)
                .count();
            (r, hits as f64 / n as f64)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Records CSV

pub const RECORDS_HEADER: &str = "index,true_label,predicted_class,abstained,p1_lower,p2_upper,radius_l2,radius_linf,radius_linf_method,n_samples,seed";

/// Write records as CSV, one row per record, floats in shortest
/// round-trip form.
pub fn write_records_csv(path: impl AsRef<Path>, records: &[CertificationRecord]) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{RECORDS_HEADER}")?;
    for r in records {
        let l2 = r.radius_l2.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.true_label,
            r.predicted_class,
            r.abstained,
            r.p1_lower,
            r.p2_upper,
            l2,
            r.radius_linf,
            r.radius_linf_method,
            r.n_samples,
            r.seed
        )?;
    }
    Ok(())
}

/// Parse a records CSV produced by [`write_records_csv`].
pub fn read_records_csv(path: impl AsRef<Path>) -> Result<Vec<CertificationRecord>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let err = |line: usize, message: String| Error::Parse {
        path: display.clone(),
        line,
        message,
    };
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?.map_err(Error::Io)?;
    if header.trim_end() != RECORDS_HEADER {
        return Err(err(1, format!("unexpected header {header:?}")));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let lineno = lineno + 2;
        let line = line.map_err(Error::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 11 {
            return Err(err(lineno, format!("expected 11 fields, found {}", f.len())));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|e| err(lineno, format!("bad {what} {s:?}: {e}")))
        };
        let method = match f[8] {
            "gaussian-projected" => LinfMethod::GaussianProjected,
            "exponential" => LinfMethod::Exponential,
            other => return Err(err(lineno, format!("unknown radius method {other:?}"))),
        };
        records.push(CertificationRecord {
            index: f[0].parse().map_err(|e| err(lineno, format!("bad index: {e}")))?,
            true_label: f[1].parse().map_err(|e| err(lineno, format!("bad true_label: {e}")))?,
            predicted_class: f[2]
                .parse()
                .map_err(|e| err(lineno, format!("bad predicted_class: {e}")))?,
            abstained: match f[3] {
                "true" => true,
                "false" => false,
                other => return Err(err(lineno, format!("bad abstained flag {other:?}"))),
            },
            p1_lower: parse_f64(f[4], "p1_lower")?,
            p2_upper: parse_f64(f[5], "p2_upper")?,
            radius_l2: if f[6].is_empty() { None } else { Some(parse_f64(f[6], "radius_l2")?) },
            radius_linf: parse_f64(f[7], "radius_linf")?,
            radius_linf_method: method,
            n_samples: f[9].parse().map_err(|e| err(lineno, format!("bad n_samples: {e}")))?,
            seed: f[10].parse().map_err(|e| err(lineno, format!("bad seed: {e}")))?,
        });
    }
    Ok(records)
}

/// Write a curve as `radius,certified_accuracy` CSV.
pub fn write_curve_csv(path: impl AsRef<Path>, curve: &[(f64, f64)]) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "radius,certified_accuracy")?;
    for (r, acc) in curve {
        writeln!(out, "{r},{acc}")?;
    }
    Ok(())
}

/// Reproducibility sidecar written next to the records CSV. The wall time
/// is informational; everything else pins the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub mechanism: String,
    pub sigma: f64,
    pub n: usize,
    pub level: f64,
    pub seed: u64,
    pub workers: usize,
    pub model_path: String,
    pub data_path: String,
    pub num_points: usize,
    pub num_abstained: usize,
    pub failures: Vec<PointFailure>,
    pub wall_time_seconds: f64,
    pub records_path: String,
}

impl RunManifest {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{halfspace_smoothed_prob, ClassifierModel};
    use crate::estimation::clopper_pearson;
    use crate::radius::ProbabilityPair;

    const SEED: RandomSeed = RandomSeed(0xFACE);

    fn halfspace_model(dim: usize, b: f64) -> ClassifierModel {
        let mut w = vec![0.0; dim];
        w[0] = 1.0;
        ClassifierModel::halfspace(w, b).unwrap()
    }

    fn toy_dataset(n: usize, dim: usize) -> Dataset {
        let rows = (0..n)
            .map(|i| {
                let mut x = vec![0.0; dim];
                x[0] = (i as f64 / n as f64) - 0.3;
                let label = usize::from(x[0] > 0.0);
                (x, label)
            })
            .collect();
        Dataset::from_rows(rows, dim).unwrap()
    }

    #[test]
    fn constant_classifier_record_matches_components() {
        let weights = vec![vec![0.0; 3], vec![0.0; 3]];
        let model = ClassifierModel::linear(weights, vec![5.0, 0.0]).unwrap();
        let mech = NoiseMechanism::gaussian(1.0, 3).unwrap();
        let spec = ConfidenceSpec::new(0.998).unwrap();
        let point = DataPoint { index: 7, features: vec![0.0; 3], label: 0 };
        let rec = certify_point(&model, &point, &mech, 100, &spec, SEED).unwrap();

        assert_eq!(rec.predicted_class, 0);
        assert!(!rec.abstained);
        let p1 = clopper_pearson(100, 100, 0.999, crate::estimation::BoundSide::Lower).unwrap();
        let p2 = clopper_pearson(0, 100, 0.999, crate::estimation::BoundSide::Upper).unwrap();
        assert!((rec.p1_lower - p1).abs() < 1e-12);
        assert!((rec.p2_upper - p2).abs() < 1e-12);
        let expected = radius_l2_gaussian(1.0, &ProbabilityPair::new(p1, p2).unwrap()).unwrap();
        assert!((rec.radius_l2.unwrap() - expected).abs() < 1e-12);
        assert!((rec.radius_linf - expected / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(rec.radius_linf_method, LinfMethod::GaussianProjected);
    }

    #[test]
    fn zero_margin_abstains_with_high_probability() {
        let model = halfspace_model(4, 0.0);
        let mech = NoiseMechanism::gaussian(1.0, 4).unwrap();
        let spec = ConfidenceSpec::new(0.999).unwrap();
        let point = DataPoint { index: 0, features: vec![0.0; 4], label: 1 };
        let rec = certify_point(&model, &point, &mech, 2000, &spec, SEED).unwrap();
        assert!(rec.abstained);
        assert_eq!(rec.radius_l2, Some(0.0));
        assert_eq!(rec.radius_linf, 0.0);
    }

    #[test]
    fn certify_point_is_deterministic() {
        let model = halfspace_model(4, 0.5);
        let mech = NoiseMechanism::gaussian(1.0, 4).unwrap();
        let spec = ConfidenceSpec::new(0.99).unwrap();
        let point = DataPoint { index: 3, features: vec![0.1, 0.0, 0.0, 0.0], label: 1 };
        let a = certify_point(&model, &point, &mech, 400, &spec, SEED).unwrap();
        let b = certify_point(&model, &point, &mech, 400, &spec, SEED).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponential_record_has_no_l2_radius() {
        let model = halfspace_model(4, 1.0);
        let mech = NoiseMechanism::linf_exponential(0.05, 4).unwrap();
        let spec = ConfidenceSpec::new(0.99).unwrap();
        let point = DataPoint { index: 0, features: vec![0.0; 4], label: 1 };
        let rec = certify_point(&model, &point, &mech, 500, &spec, SEED).unwrap();
        assert_eq!(rec.radius_l2, None);
        assert_eq!(rec.radius_linf_method, LinfMethod::Exponential);
        assert!(!rec.abstained && rec.radius_linf > 0.0);
    }

    #[test]
    fn empty_dataset_certifies_to_empty_run() {
        let model = halfspace_model(4, 0.5);
        let mech = NoiseMechanism::gaussian(1.0, 4).unwrap();
        let spec = ConfidenceSpec::new(0.99).unwrap();
        let ds = Dataset::new(vec![], 4).unwrap();
        let run = certify_dataset(&model, &ds, &mech, 100, &spec, SEED).unwrap();
        assert!(run.records.is_empty() && run.failures.is_empty());
    }

    #[test]
    fn permuted_dataset_yields_permuted_identical_records() {
        let model = halfspace_model(6, 0.4);
        let mech = NoiseMechanism::gaussian(0.8, 6).unwrap();
        let spec = ConfidenceSpec::new(0.99).unwrap();
        let ds = toy_dataset(12, 6);
        let run = certify_dataset(&model, &ds, &mech, 300, &spec, SEED).unwrap();

        let mut shuffled = ds.points().to_vec();
        shuffled.reverse();
        shuffled.swap(1, 5);
        let permuted = Dataset::new(shuffled, 6).unwrap();
        let run_p = certify_dataset(&model, &permuted, &mech, 300, &spec, SEED).unwrap();

        // Records travel with their points: match by index, equal content.
        for rec in &run.records {
            let twin = run_p.records.iter().find(|r| r.index == rec.index).unwrap();
            assert_eq!(rec, twin);
        }
        assert_eq!(run.records.len(), run_p.records.len());
    }

    #[test]
    fn serial_and_parallel_paths_agree() {
        let model = halfspace_model(5, 0.2);
        let mech = NoiseMechanism::gaussian(1.0, 5).unwrap();
        let spec = ConfidenceSpec::new(0.999).unwrap();
        let ds = toy_dataset(20, 5);
        let par = certify_dataset(&model, &ds, &mech, 200, &spec, SEED).unwrap();
        let ser = certify_dataset_serial(&model, &ds, &mech, 200, &spec, SEED).unwrap();
        assert_eq!(par, ser);
    }

    #[test]
    fn dataset_validation_errors() {
        let model = halfspace_model(4, 0.5);
        let mech = NoiseMechanism::gaussian(1.0, 4).unwrap();
        let spec = ConfidenceSpec::new(0.99).unwrap();
        // Label out of range for a 2-class model.
        let ds = Dataset::from_rows(vec![(vec![0.0; 4], 5)], 4).unwrap();
        assert!(certify_dataset(&model, &ds, &mech, 10, &spec, SEED).is_err());
        // Dimension mismatch.
        let ds = toy_dataset(3, 5);
        assert!(certify_dataset(&model, &ds, &mech, 10, &spec, SEED).is_err());
        // Non-finite coordinates rejected at construction.
        assert!(Dataset::from_rows(vec![(vec![f64::NAN; 4], 0)], 4).is_err());
    }

    #[test]
    fn curve_hand_enumeration() {
        let rec = |radius: f64, correct: bool| CertificationRecord {
            index: 0,
            true_label: 0,
            predicted_class: usize::from(!correct),
            abstained: false,
            p1_lower: 0.9,
            p2_upper: 0.1,
            radius_l2: Some(radius),
            radius_linf: radius,
            radius_linf_method: LinfMethod::GaussianProjected,
            n_samples: 100,
            seed: 0,
        };
        let records = vec![rec(0.1, true), rec(0.2, true), rec(0.3, true), rec(0.9, false)];
        let curve =
            certified_accuracy_curve(&records, &[0.0, 0.15, 0.25, 0.35], Norm::L2).unwrap();
        let expect = [(0.0, 0.75), (0.15, 0.5), (0.25, 0.25), (0.35, 0.0)];
        for ((r, a), (er, ea)) in curve.iter().zip(expect) {
            assert_eq!(*r, er);
            assert!((a - ea).abs() < 1e-15, "at {r}: {a} vs {ea}");
        }
        // Infinity sentinel and the empty/abstained cases.
        let curve = certified_accuracy_curve(&records, &[f64::INFINITY], Norm::L2).unwrap();
        assert_eq!(curve[0].1, 0.0);
        let curve = certified_accuracy_curve(&[], &[0.0, 0.5], Norm::L2).unwrap();
        assert!(curve.iter().all(|&(_, a)| a == 0.0));
        let mut abstained = records.clone();
        abstained.iter_mut().for_each(|r| r.abstained = true);
        let curve = certified_accuracy_curve(&abstained, &[0.0, 0.5], Norm::L2).unwrap();
        assert!(curve.iter().all(|&(_, a)| a == 0.0));
        // Unsorted grid is rejected; lp curves are not defined.
        assert!(certified_accuracy_curve(&records, &[0.5, 0.1], Norm::L2).is_err());
        assert!(certified_accuracy_curve(&records, &[0.1], Norm::Lp(4.0)).is_err());
    }

    #[test]
    fn curve_is_nonincreasing_on_real_runs() {
        let model = halfspace_model(4, 0.6);
        let mech = NoiseMechanism::gaussian(1.0, 4).unwrap();
        let spec = ConfidenceSpec::new(0.99).unwrap();
        let ds = toy_dataset(30, 4);
        let run = certify_dataset(&model, &ds, &mech, 300, &spec, SEED).unwrap();
        let radii: Vec<f64> = (0..40).map(|i| i as f64 * 0.02).collect();
        let curve = certified_accuracy_curve(&run.records, &radii, Norm::Linf).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-15);
        }
    }

    #[test]
    fn records_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let model = halfspace_model(4, 0.5);
        let gauss = NoiseMechanism::gaussian(1.0, 4).unwrap();
        let exp = NoiseMechanism::linf_exponential(0.1, 4).unwrap();
        let spec = ConfidenceSpec::new(0.999).unwrap();
        let ds = toy_dataset(6, 4);
        let mut records = certify_dataset(&model, &ds, &gauss, 150, &spec, SEED).unwrap().records;
        records.extend(certify_dataset(&model, &ds, &exp, 150, &spec, SEED).unwrap().records);

        write_records_csv(&path, &records).unwrap();
        let back = read_records_csv(&path).unwrap();
        assert_eq!(records, back);

        // Malformed rows surface the line number.
        std::fs::write(&path, format!("{RECORDS_HEADER}\n1,0,0,maybe,0.5,0.1,,0.1,exponential,10,3\n"))
            .unwrap();
        let err = read_records_csv(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }

    #[test]
    fn dataset_csv_and_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = toy_dataset(17, 3);

        let csv = dir.path().join("ds.csv");
        ds.write_csv(&csv).unwrap();
        let back = Dataset::from_csv_path(&csv).unwrap();
        assert_eq!(ds, back);

        let bin = dir.path().join("ds.bin");
        ds.write_binary(&bin).unwrap();
        let back = Dataset::from_binary_path(&bin).unwrap();
        assert_eq!(back.len(), ds.len());
        assert_eq!(back.dim(), ds.dim());
        for (a, b) in ds.points().iter().zip(back.points()) {
            assert_eq!(a.label, b.label);
            for (x, y) in a.features.iter().zip(&b.features) {
                assert!((x - y).abs() <= (*x as f32).abs() as f64 * 1e-6 + 1e-7);
            }
        }

        // Header errors carry the line number; bad magic is rejected.
        std::fs::write(&csv, "label,x0,xq\n0,1.0,2.0\n").unwrap();
        let err = Dataset::from_csv_path(&csv).unwrap_err().to_string();
        assert!(err.contains(":1:"), "{err}");
        std::fs::write(&bin, b"NOTMAGIC\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(Dataset::from_binary_path(&bin).is_err());
    }
}
