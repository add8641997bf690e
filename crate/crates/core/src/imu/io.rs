//! IMU sample files: `t_ns, wx, wy, wz, ax, ay, az`.

use std::io::Read;
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use super::mechanize::ImuSample;

#[derive(Debug, Error)]
pub enum ImuCsvError {
    #[error("cannot read IMU file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: timestamps must be strictly increasing")]
    NonMonotone { line: usize },
    #[error("IMU file needs at least two samples")]
    TooShort,
}

/// A raw row of the IMU file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuRow {
    pub t_ns: i64,
    pub gyro: Vector3<f64>,
    pub accel: Vector3<f64>,
}

pub fn read_imu_rows<R: Read>(reader: R) -> Result<Vec<ImuRow>, ImuCsvError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<ImuRow> = Vec::new();
    for (n, record) in csv.records().enumerate() {
        let record = record.map_err(|e| ImuCsvError::Malformed {
            line: e.position().map(|p| p.line() as usize).unwrap_or(n + 1),
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(n + 1);
        if rows.is_empty() && record.get(0).is_some_and(|f| f.parse::<i64>().is_err()) {
            // header row
            continue;
        }
        if record.len() != 7 {
            return Err(ImuCsvError::Malformed {
                line,
                message: format!("expected 7 columns, found {}", record.len()),
            });
        }
        let t_ns: i64 = record[0].parse().map_err(|_| ImuCsvError::Malformed {
            line,
            message: format!("bad timestamp {:?}", &record[0]),
        })?;
        let mut vals = [0.0; 6];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = record[i + 1]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ImuCsvError::Malformed {
                    line,
                    message: format!("bad value {:?}", &record[i + 1]),
                })?;
        }
        if let Some(prev) = rows.last() {
            if t_ns <= prev.t_ns {
                return Err(ImuCsvError::NonMonotone { line });
            }
        }
        rows.push(ImuRow {
            t_ns,
            gyro: Vector3::new(vals[0], vals[1], vals[2]),
            accel: Vector3::new(vals[3], vals[4], vals[5]),
        });
    }
    Ok(rows)
}

/// Converts rows to samples. Row `k > 0` integrates over `t_k - t_{k-1}`;
/// the first row reuses the first interval, so `n` rows give `n` samples.
pub fn rows_to_samples(rows: &[ImuRow]) -> Result<Vec<ImuSample>, ImuCsvError> {
    if rows.len() < 2 {
        return Err(ImuCsvError::TooShort);
    }
    let first_dt = (rows[1].t_ns - rows[0].t_ns) as f64 * 1e-9;
    rows.iter()
        .enumerate()
        .map(|(k, row)| {
            let dt = if k == 0 {
                first_dt
            } else {
                (row.t_ns - rows[k - 1].t_ns) as f64 * 1e-9
            };
            ImuSample::new(row.gyro, row.accel, dt).map_err(|e| ImuCsvError::Malformed {
                line: k + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_imu_file(path: &Path) -> Result<(Vec<ImuRow>, Vec<ImuSample>), ImuCsvError> {
    let file = std::fs::File::open(path)?;
    let rows = read_imu_rows(std::io::BufReader::new(file))?;
    let samples = rows_to_samples(&rows)?;
    Ok((rows, samples))
}
