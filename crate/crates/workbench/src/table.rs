//! Fixed-schema CSV logs.

use std::io::{Read, Write};
use std::path::Path;

use ftvc_core::sim::RunLog;

use crate::error::{Error, Result};

/// Column names, in file order.
pub const COLUMNS: [&str; 33] = [
    "t", "Vx", "Vy", "r", "beta", "z", "phi", "theta", "X", "Y", "psi", "d_fl", "d_fr", "d_rl", "d_rr", "T_fl", "T_fr",
    "T_rl", "T_rr", "fz_fl", "fz_fr", "fz_rl", "fz_rr", "N_fl", "N_fr", "N_rl", "N_rr", "v1", "v2", "v3", "v4", "v5",
    "resid",
];

pub type Row = [f64; 33];

/// One row per log record. Actuator columns hold the commanded (pre-fault)
/// values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub rows: Vec<Row>,
}

impl Table {
    pub fn from_log(log: &RunLog) -> Self {
        let rows = log
            .records
            .iter()
            .map(|r| {
                let s = &r.state;
                let mut row = [0.0; 33];
                row[..11].copy_from_slice(&[r.t, s.vx, s.vy, s.yaw_rate, r.side_slip, s.heave, s.roll, s.pitch, s.x, s.y, s.yaw]);
                row[11..23].copy_from_slice(&r.commanded.0);
                row[23..27].copy_from_slice(&r.normals);
                row[27..32].copy_from_slice(&r.virtual_control.0);
                row[32] = r.residual;
                row
            })
            .collect();
        Self { rows }
    }

    /// Column by name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = COLUMNS.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Writes the header and rows. Values use the shortest representation
    /// that parses back to the same `f64`.
    pub fn write<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> std::result::Result<Self, String> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(|e| e.to_string())?;
        if header.iter().ne(COLUMNS) {
            return Err("unexpected CSV header".into());
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            let mut row = [0.0; 33];
            for (slot, field) in row.iter_mut().zip(rec.iter()) {
                *slot = field.parse().map_err(|_| format!("row {}: `{field}` is not a number", i + 1))?;
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(std::io::BufWriter::new(file)).map_err(|source| Error::Csv { path: path.into(), source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(std::io::BufReader::new(file)).map_err(|message| Error::Data { path: path.into(), message })
    }
}
