//! CSV and JSON readers and writers. Modes are always written in
//! lexicographic `(k1, k2, k3)` order.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpectralScalarField, SpectralVectorField};
use crate::majorant::MajorantTrajectory;
use crate::mild::VelocityTrajectory;
use crate::wave::WaveVector;

#[derive(Debug, Serialize, Deserialize)]
struct ScalarRow {
    k1: i32,
    k2: i32,
    k3: i32,
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct VectorRow {
    component: u8,
    k1: i32,
    k2: i32,
    k3: i32,
    re: f64,
    im: f64,
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// `k1,k2,k3,re,im`, one row per nonzero mode.
pub fn write_scalar_csv<W: Write>(out: W, f: &SpectralScalarField) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (k, c) in f.support() {
        w.serialize(ScalarRow { k1: k.k1, k2: k.k2, k3: k.k3, re: c.re, im: c.im })?;
    }
    if f.nnz() == 0 {
        w.write_record(["k1", "k2", "k3", "re", "im"])?;
    }
    w.flush()?;
    Ok(())
}

/// `component,k1,k2,k3,re,im` with components numbered 1 to 3.
pub fn write_vector_csv<W: Write>(out: W, v: &SpectralVectorField) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut any = false;
    for (j, comp) in v.components.iter().enumerate() {
        for (k, c) in comp.support() {
            any = true;
            w.serialize(VectorRow {
                component: j as u8 + 1,
                k1: k.k1,
                k2: k.k2,
                k3: k.k3,
                re: c.re,
                im: c.im,
            })?;
        }
    }
    if !any {
        w.write_record(["component", "k1", "k2", "k3", "re", "im"])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a scalar CSV. A `k = 0` row is removed and returned as the mean.
pub fn read_scalar_csv(path: &Path, n: usize) -> Result<(SpectralScalarField, Complex64)> {
    let mut r = csv::Reader::from_path(path)?;
    let mut raw = Vec::new();
    for row in r.deserialize() {
        let row: ScalarRow = row.map_err(|e| format_err(path, e.to_string()))?;
        raw.push((WaveVector::new(row.k1, row.k2, row.k3), Complex64::new(row.re, row.im)));
    }
    check_unique(path, raw.iter().map(|(k, _)| (0, *k)))?;
    SpectralScalarField::subtract_mean(n, raw)
}

/// Reads a vector CSV. Any `k = 0` rows are removed and returned as the
/// mean velocity, the Galilean drift of the input.
pub fn read_vector_csv(path: &Path, n: usize) -> Result<(SpectralVectorField, [Complex64; 3])> {
    let mut r = csv::Reader::from_path(path)?;
    let mut raw: [Vec<(WaveVector, Complex64)>; 3] = Default::default();
    for row in r.deserialize() {
        let row: VectorRow = row.map_err(|e| format_err(path, e.to_string()))?;
        if !(1..=3).contains(&row.component) {
            return Err(format_err(path, format!("component {} not in 1..=3", row.component)));
        }
        raw[row.component as usize - 1]
            .push((WaveVector::new(row.k1, row.k2, row.k3), Complex64::new(row.re, row.im)));
    }
    check_unique(
        path,
        raw.iter()
            .enumerate()
            .flat_map(|(j, r)| r.iter().map(move |(k, _)| (j, *k))),
    )?;
    let mut mean = [Complex64::new(0.0, 0.0); 3];
    let mut comps = Vec::with_capacity(3);
    for (j, r) in raw.into_iter().enumerate() {
        let (f, m) = SpectralScalarField::subtract_mean(n, r)?;
        mean[j] = m;
        comps.push(f);
    }
    let comps: [SpectralScalarField; 3] = comps.try_into().unwrap();
    Ok((SpectralVectorField::new(comps)?, mean))
}

fn check_unique<I: Iterator<Item = (usize, WaveVector)>>(path: &Path, keys: I) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for key in keys {
        if !seen.insert(key) {
            return Err(format_err(path, format!("duplicate row for mode {}", key.1)));
        }
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Indices `0, stride, 2 stride, ...` plus the last index.
pub fn strided(len: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(stride.max(1)).collect();
    if len > 0 && idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

#[derive(Debug, Serialize)]
pub struct FrameEntry {
    pub index: usize,
    pub t: f64,
    pub file: String,
}

#[derive(Debug, Serialize)]
pub struct TrajectoryManifest<'a> {
    pub nu: f64,
    #[serde(rename = "N")]
    pub truncation: usize,
    pub grid: &'a [f64],
    pub picard_iterations: usize,
    pub converged: bool,
    pub increments: &'a [f64],
    pub frames: Vec<FrameEntry>,
}

/// Writes `frame_NNNNN.csv` for the selected checkpoints and
/// `manifest.json` into `dir`.
pub fn write_trajectory(dir: &Path, traj: &VelocityTrajectory, stride: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    let times = traj.grid.times();
    let mut frames = Vec::new();
    for i in strided(traj.frames.len(), stride) {
        let name = format!("frame_{i:05}.csv");
        let file = BufWriter::new(File::create(dir.join(&name))?);
        write_vector_csv(file, &traj.frames[i])?;
        frames.push(FrameEntry { index: i, t: times[i], file: name });
    }
    if let Some(p) = &traj.pressure_frames {
        for f in &frames {
            let name = format!("pressure_{:05}.csv", f.index);
            write_scalar_csv(BufWriter::new(File::create(dir.join(name))?), &p[f.index])?;
        }
    }
    let manifest = TrajectoryManifest {
        nu: traj.nu,
        truncation: traj.truncation(),
        grid: times,
        picard_iterations: traj.picard_iterations,
        converged: traj.converged,
        increments: &traj.increments,
        frames,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

/// `t,k1,k2,k3,V` for the selected checkpoints.
pub fn write_majorant(path: &Path, traj: &MajorantTrajectory, stride: usize) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    traj.write_csv(w, &strided(traj.frames.len(), stride))
}

/// Every regular file under `root`, relative path and contents, sorted.
pub fn read_tree(root: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_path_buf();
                out.push((rel, fs::read(&p)?));
            }
        }
    }
    out.sort();
    Ok(out)
}
