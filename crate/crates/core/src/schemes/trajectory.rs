//! In-memory trajectories and their on-disk form: one binary snapshot per
//! stored step plus an `index.csv` with columns `step,time,file`.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::spectral::{read_snapshot, write_snapshot, SpectralField};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: usize, time: f64, state: SpectralField) {
        self.steps.push(step);
        self.times.push(time);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&SpectralField> {
        self.states.last()
    }

    /// Index of the snapshot stored at time `t` (to within `tol`).
    pub fn index_at(&self, t: f64, tol: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Trajectory(format!("'{}' has no file name", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Appends snapshots to a directory. Each snapshot is written atomically
/// before its index line, so an interrupted run leaves a consistent prefix.
pub struct TrajectoryStore {
    dir: PathBuf,
    index: csv::Writer<File>,
    lambda_cut: f64,
}

impl TrajectoryStore {
    pub fn create(dir: &Path, lambda_cut: f64) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(dir.join("index.csv"))?;
        let mut index = csv::Writer::from_writer(file);
        index.write_record(["step", "time", "file"])?;
        index.flush()?;
        Ok(Self {
            dir: dir.to_path_buf(),
            index,
            lambda_cut,
        })
    }

    pub fn append(&mut self, step: usize, time: f64, field: &SpectralField) -> Result<()> {
        let name = format!("step_{step:08}.nnsf");
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, field, self.lambda_cut)?;
        write_atomic(&self.dir.join(&name), &bytes)?;
        self.index
            .write_record([step.to_string(), format!("{time:.17e}"), name])?;
        self.index.flush()?;
        Ok(())
    }
}

pub fn save_trajectory(dir: &Path, traj: &Trajectory, lambda_cut: f64) -> Result<()> {
    let mut store = TrajectoryStore::create(dir, lambda_cut)?;
    for ((s, t), f) in traj.steps.iter().zip(&traj.times).zip(&traj.states) {
        store.append(*s, *t, f)?;
    }
    Ok(())
}

pub fn load_trajectory(dir: &Path) -> Result<Trajectory> {
    let mut reader = csv::Reader::from_reader(BufReader::new(File::open(dir.join("index.csv"))?));
    let mut traj = Trajectory::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |what: &str| Error::Trajectory(format!("index.csv row {}: bad {what}", line + 2));
        let step: usize = record.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("step"))?;
        let time: f64 = record.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("time"))?;
        let file = record.get(2).ok_or_else(|| bad("file"))?;
        let (field, _) = read_snapshot(BufReader::new(File::open(dir.join(file))?))?;
        traj.push(step, time, field);
    }
    Ok(traj)
}

/// Buffered CSV writer that lands in `path` only when finished.
pub struct AtomicCsv {
    path: PathBuf,
    tmp: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl AtomicCsv {
    pub fn create(path: &Path) -> Result<Self> {
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        fs::create_dir_all(dir)?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = dir.join(format!(".{name}.tmp"));
        let writer = csv::Writer::from_writer(BufWriter::new(File::create(&tmp)?));
        Ok(Self {
            path: path.to_path_buf(),
            tmp,
            writer,
        })
    }

    pub fn write_record<I, T>(&mut self, record: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer.write_record(record)?;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let inner = self
            .writer
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        let file = inner.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        file.sync_all()?;
        fs::rename(&self.tmp, &self.path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::taylor_green;
    use crate::spectral::TorusGrid;

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = TorusGrid::new(1.0, 8).unwrap();
        let mut traj = Trajectory::new();
        for k in 0..3 {
            traj.push(k * 5, k as f64 * 0.05, taylor_green(&g, 1, k as f64 * 0.05, 0.01).unwrap());
        }
        save_trajectory(dir.path(), &traj, f64::INFINITY).unwrap();
        let index = fs::read_to_string(dir.path().join("index.csv")).unwrap();
        assert!(index.starts_with("step,time,file\n0,"));
        assert!(dir.path().join("step_00000010.nnsf").exists());
        assert_eq!(load_trajectory(dir.path()).unwrap(), traj);
    }

    #[test]
    fn index_lookup() {
        let g = TorusGrid::new(1.0, 8).unwrap();
        let mut traj = Trajectory::new();
        for k in 0..4 {
            traj.push(k, k as f64 * 0.1, SpectralField::zeros(g));
        }
        assert_eq!(traj.index_at(0.2, 1e-9), Some(2));
        assert_eq!(traj.index_at(0.25, 1e-9), None);
    }

    #[test]
    fn atomic_csv_appears_only_when_finished() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        let mut w = AtomicCsv::create(&path).unwrap();
        w.write_record(["a", "b"]).unwrap();
        assert!(!path.exists());
        w.finish().unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n");
    }
}
