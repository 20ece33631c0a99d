use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{CliError, CliResult};
use crate::integrator::Trajectory;
use crate::State;

pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "X", "Y", "Z"];

/// Samples read back from a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub states: Vec<State>,
}

impl From<&Trajectory> for TrajectoryTable {
    fn from(tr: &Trajectory) -> Self {
        TrajectoryTable { times: tr.times.clone(), states: tr.states.clone() }
    }
}

/// 17 significant digits: enough for an exact round trip of any `f64`.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn runtime(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn write_trajectory_csv(path: &Path, times: &[f64], states: &[State]) -> CliResult<()> {
    let file = File::create(path).map_err(|e| runtime(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(TRAJECTORY_HEADER).map_err(|e| runtime(path, e))?;
    for (t, s) in times.iter().zip(states) {
        w.write_record([fmt17(*t), fmt17(s.x), fmt17(s.y), fmt17(s.z)])
            .map_err(|e| runtime(path, e))?;
    }
    w.flush().map_err(|e| runtime(path, e))?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> CliResult<TrajectoryTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| runtime(path, e))?;
    let header = r.headers().map_err(|e| runtime(path, e))?;
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(runtime(path, format!("expected header t,X,Y,Z, got {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut table = TrajectoryTable::default();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| runtime(path, e))?;
        let field = |k: usize| -> CliResult<f64> {
            rec.get(k)
                .ok_or_else(|| runtime(path, format!("row {}: missing column {k}", i + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| runtime(path, format!("row {}: {e}", i + 1)))
        };
        table.times.push(field(0)?);
        table.states.push(State::new(field(1)?, field(2)?, field(3)?));
    }
    Ok(table)
}

pub(crate) fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| runtime(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = File::create(path).map_err(|e| runtime(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| runtime(path, e))
}
