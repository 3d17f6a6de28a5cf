//! JSON file formats.
//!
//! Complex entries are `[re, im]` pairs and matrices are lists of rows.
//! Floats are written in the shortest form that parses back to the same
//! bits.
//!
//! * state / unitary: `{"dim": n, "matrix": [[[re, im], ...], ...]}`
//! * curve / Hamiltonian schedule: `{"tau": τ, "samples": [matrix, ...]}`
//! * amplitude curve: curve fields plus `"basis": {"m": [...]}`

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bundle::{Amplitude, HorizontalLift};
use crate::curves::OperatorCurve;
use crate::dynamics::HamiltonianSchedule;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::spectra::{DegeneracySpectrum, EigenprojectorBasis};
use crate::synthesis::SaturatingPlan;

pub type Rows = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_rows(m: &CMat) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    let ncols = rows[0].len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Parse(format!("row {i} has {} entries, expected {ncols}", r.len())));
    }
    let m = CMat::from_fn(nrows, ncols, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
    if !crate::linalg::is_finite(&m) {
        return Err(Error::Parse("matrix has non-finite entries".into()));
    }
    Ok(m)
}

fn vector_to_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub matrix: Rows,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMat) -> Self {
        Self { dim: m.nrows(), matrix: matrix_to_rows(m) }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let m = rows_to_matrix(&self.matrix)?;
        if m.shape() != (self.dim, self.dim) {
            return Err(Error::Parse(format!("declared dim {} but matrix is {}x{}", self.dim, m.nrows(), m.ncols())));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub tau: f64,
    pub samples: Vec<Rows>,
}

impl CurveFile {
    pub fn from_curve(c: &OperatorCurve) -> Self {
        Self { tau: c.tau(), samples: c.samples().iter().map(matrix_to_rows).collect() }
    }

    pub fn from_schedule(s: &HamiltonianSchedule) -> Self {
        Self { tau: s.grid().tau(), samples: s.samples().iter().map(matrix_to_rows).collect() }
    }

    fn matrices(&self) -> Result<Vec<CMat>> {
        if self.samples.len() < 2 {
            return Err(Error::Parse(format!("a curve needs at least 2 samples, got {}", self.samples.len())));
        }
        self.samples.iter().map(|s| rows_to_matrix(s)).collect()
    }

    pub fn to_curve(&self) -> Result<OperatorCurve> {
        OperatorCurve::new(self.tau, self.matrices()?)
    }

    pub fn to_schedule(&self) -> Result<HamiltonianSchedule> {
        HamiltonianSchedule::new(self.tau, self.matrices()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub m: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeFile {
    pub tau: f64,
    pub samples: Vec<Rows>,
    pub basis: BasisSpec,
}

impl AmplitudeFile {
    pub fn from_lift(lift: &HorizontalLift) -> Self {
        Self {
            tau: lift.grid.tau(),
            samples: lift.amplitudes.iter().map(matrix_to_rows).collect(),
            basis: BasisSpec { m: lift.basis.degeneracy().as_slice().to_vec() },
        }
    }

    /// A single amplitude, stored as a one-sample curve.
    pub fn from_amplitude(w: &Amplitude) -> Self {
        Self {
            tau: 0.0,
            samples: vec![matrix_to_rows(w.matrix())],
            basis: BasisSpec { m: w.basis().degeneracy().as_slice().to_vec() },
        }
    }

    /// The first sample as an amplitude in the standard basis.
    pub fn initial(&self) -> Result<Amplitude> {
        let first = self.samples.first().ok_or_else(|| Error::Parse("amplitude file has no samples".into()))?;
        let basis = EigenprojectorBasis::standard(DegeneracySpectrum::new(self.basis.m.clone())?);
        Amplitude::new(rows_to_matrix(first)?, basis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneRecord {
    pub block: usize,
    pub slot: usize,
    pub theta: f64,
    pub psi: Vec<[f64; 2]>,
    pub phi: Vec<[f64; 2]>,
}

/// Description of a synthesized plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanManifest {
    pub tau: f64,
    pub ambient_dim: usize,
    pub m: Vec<usize>,
    pub p: Vec<f64>,
    #[serde(rename = "iHB")]
    pub ihb: f64,
    pub target: Rows,
    pub adapted_basis: Rows,
    pub planes: Vec<PlaneRecord>,
}

impl PlanManifest {
    pub fn from_plan(plan: &SaturatingPlan) -> Self {
        let labels = plan.adapted_basis.labels();
        Self {
            tau: plan.tau,
            ambient_dim: plan.rho.dim(),
            m: plan.rho.m.as_slice().to_vec(),
            p: plan.rho.p.as_slice().to_vec(),
            ihb: plan.ihb,
            target: matrix_to_rows(plan.target.matrix()),
            adapted_basis: matrix_to_rows(plan.adapted_basis.frame()),
            planes: plan
                .loops
                .iter()
                .zip(labels)
                .map(|(l, (block, slot))| PlaneRecord {
                    block,
                    slot,
                    theta: l.theta(),
                    psi: vector_to_pairs(l.psi()),
                    phi: vector_to_pairs(l.phi()),
                })
                .collect(),
        }
    }
}

fn check_finite(value: &serde_json::Value) -> bool {
    match value {
        serde_json::Value::Null => false,
        serde_json::Value::Array(v) => v.iter().all(check_finite),
        serde_json::Value::Object(o) => o.values().all(check_finite),
        _ => true,
    }
}

/// Serializes to pretty JSON, refusing non-finite numbers (which JSON
/// cannot represent).
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    if !check_finite(&v) {
        return Err(Error::Parse("refusing to write non-finite or missing values".into()));
    }
    serde_json::to_string_pretty(&v).map_err(|e| Error::Parse(e.to_string()))
}

/// Like [`to_json`], but keeps `null` for absent optional fields.
pub fn to_json_lenient<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}
