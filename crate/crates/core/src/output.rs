//! Deterministic data files: CSV with fixed 17-significant-digit floats and
//! JSON summaries, written atomically (temporary file, then rename).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::hierarchy::{FieldGrid, Trajectory};
use crate::ops::Op2;
use crate::units;
use crate::witness::WitnessReport;

/// `{:.16e}`, with `nan` for missing values.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Accumulates CSV text for one file.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| fmt_float(*v)).collect();
        self.text += &cells.join(",");
        self.text.push('\n');
    }

    /// Row whose first cell is an integer.
    pub fn indexed_row(&mut self, index: usize, values: &[f64]) {
        let _ = write!(self.text, "{index}");
        for v in values {
            self.text.push(',');
            self.text += &fmt_float(*v);
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| std::io::Error::other(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Output files written by a run, in order.
#[derive(Debug, Default)]
pub struct OutputSet {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv(&mut self, name: &str, csv: &Csv) -> Result<()> {
        csv.write(&self.path(name))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.path(name), value)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// `t_fs, rho11, rho22, Re_rho12, Im_rho12, X1_11_au, X1_22_au, E_au`.
pub fn trajectory_csv(traj: &Trajectory) -> Csv {
    let mut csv = Csv::new(&["t_fs", "rho11", "rho22", "Re_rho12", "Im_rho12", "X1_11_au", "X1_22_au", "E_au"]);
    for s in &traj.samples {
        let (x11, x22) = s.first_moment.map_or((f64::NAN, f64::NAN), |x| (x[(0, 0)].re, x[(1, 1)].re));
        csv.row(&[
            units::au_to_fs(s.time),
            s.rho[(0, 0)].re,
            s.rho[(1, 1)].re,
            s.rho[(0, 1)].re,
            s.rho[(0, 1)].im,
            x11,
            x22,
            s.field,
        ]);
    }
    csv
}

/// `t_fs, E_au`, one row per field interval (value held from `t_fs` on).
pub fn field_csv(field: &FieldGrid) -> Csv {
    let mut csv = Csv::new(&["t_fs", "E_au"]);
    for (i, v) in field.values.iter().enumerate() {
        csv.row(&[units::au_to_fs(field.time(i)), *v]);
    }
    csv
}

/// `t_fs, V, Gamma_au, g1_au, g2_au, g3_au, w1, w2, w3, S_rho_bits`. Rates
/// and weights past the conditioning cutoff are `nan`.
pub fn witness_csv(report: &WitnessReport) -> Csv {
    let mut csv = Csv::new(&[
        "t_fs", "V", "Gamma_au", "g1_au", "g2_au", "g3_au", "w1", "w2", "w3", "S_rho_bits",
    ]);
    for (i, &t) in report.map.times.iter().enumerate() {
        let point = report.decomposition.points[i].as_ref();
        let rates = point.map_or([f64::NAN; 3], |p| p.rates);
        let weights = report.weights[i].map_or([f64::NAN; 3], |w| w.map(|c| c.norm_sqr()));
        csv.row(&[
            units::au_to_fs(t),
            report.volume[i],
            report.gamma[i].unwrap_or(f64::NAN),
            rates[0],
            rates[1],
            rates[2],
            weights[0],
            weights[1],
            weights[2],
            report.entropy[i],
        ]);
    }
    csv
}

/// `[[[re, im], [re, im]], [[re, im], [re, im]]]`.
pub type MatrixJson = [[[f64; 2]; 2]; 2];

pub fn matrix_json(m: &Op2) -> MatrixJson {
    let e = |i: usize, j: usize| [m[(i, j)].re, m[(i, j)].im];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

#[derive(Debug, Serialize)]
pub struct DecompositionSample {
    pub t_fs: f64,
    pub rates_au: [f64; 3],
    pub h_cor_au: MatrixJson,
    pub channels: [MatrixJson; 3],
    pub rcond: f64,
}

#[derive(Debug, Serialize)]
pub struct DecompositionJson {
    pub rcond_cutoff: f64,
    pub cutoff_time_fs: Option<f64>,
    pub max_anti_hermitian: f64,
    pub volume_identity_max_rel_error: f64,
    pub samples: Vec<DecompositionSample>,
}

/// Corrected Hamiltonian and channels at `count` evenly spaced valid times.
pub fn decomposition_json(report: &WitnessReport, count: usize) -> DecompositionJson {
    let cd = &report.decomposition;
    let valid = cd.valid_len();
    let picks: Vec<usize> = match (valid, count) {
        (0, _) | (_, 0) => Vec::new(),
        (1, _) | (_, 1) => vec![0],
        _ => {
            let mut v: Vec<usize> =
                (0..count).map(|k| ((k * (valid - 1)) as f64 / (count - 1) as f64).round() as usize).collect();
            v.dedup();
            v
        }
    };
    let samples = picks
        .into_iter()
        .filter_map(|i| cd.points[i].as_ref())
        .map(|p| DecompositionSample {
            t_fs: units::au_to_fs(p.time),
            rates_au: p.rates,
            h_cor_au: matrix_json(&p.h_cor),
            channels: [matrix_json(&p.channels[0]), matrix_json(&p.channels[1]), matrix_json(&p.channels[2])],
            rcond: p.rcond,
        })
        .collect();
    DecompositionJson {
        rcond_cutoff: cd.rcond_cutoff,
        cutoff_time_fs: cd.cutoff_time.map(units::au_to_fs),
        max_anti_hermitian: cd.max_anti_hermitian,
        volume_identity_max_rel_error: report.identity.max_rel_error,
        samples,
    }
}
