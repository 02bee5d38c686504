//! Time-stamped observations: strictly increasing times, one or more values
//! per time. CSV layout is `time,value` with repeated times for multiple
//! observations.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGridDataset {
    times: Vec<f64>,
    observations: Vec<Vec<f64>>,
}

impl TimeGridDataset {
    pub fn new(times: Vec<f64>, observations: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Data("dataset has no time points".into()));
        }
        if times.len() != observations.len() {
            return Err(Error::Data(format!("{} times but {} observation groups", times.len(), observations.len())));
        }
        for (i, t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::Data(format!("time {i} is not finite")));
            }
            if i > 0 && !(times[i - 1] < *t) {
                return Err(Error::Data(format!("times must be strictly increasing (index {i})")));
            }
        }
        for (i, ys) in observations.iter().enumerate() {
            if ys.is_empty() {
                return Err(Error::Data(format!("time index {i} has no observations")));
            }
            if ys.iter().any(|y| !y.is_finite()) {
                return Err(Error::Data(format!("time index {i} has a non-finite observation")));
            }
        }
        Ok(Self { times, observations })
    }

    /// Groups `(time, value)` rows. Rows must be sorted by time; equal times
    /// are merged. `row_offset` is added to row numbers in error messages.
    pub fn from_rows(rows: &[(f64, f64)], row_offset: usize) -> Result<Self> {
        let mut times: Vec<f64> = Vec::new();
        let mut obs: Vec<Vec<f64>> = Vec::new();
        for (r, &(t, y)) in rows.iter().enumerate() {
            match times.last() {
                Some(&last) if t == last => obs.last_mut().expect("nonempty").push(y),
                Some(&last) if t < last => {
                    return Err(Error::Data(format!(
                        "row {}: time {t} is earlier than the previous time {last}; rows must be sorted by time",
                        r + row_offset
                    )))
                }
                _ => {
                    times.push(t);
                    obs.push(vec![y]);
                }
            }
        }
        Self::new(times, obs)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.observations
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.observations[i]
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.iter().map(Vec::len).sum()
    }

    /// Gaps `tau_i = t_i - t_{i-1}`, `i = 2..n`.
    pub fn gaps(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same observations with every time shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(self.times.iter().map(|t| t + offset).collect(), self.observations.clone())
    }

    /// Flat `(time index, value)` listing in storage order.
    pub fn flat(&self) -> Vec<(usize, f64)> {
        self.observations.iter().enumerate().flat_map(|(i, ys)| ys.iter().map(move |&y| (i, y))).collect()
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.observations
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["time", "value"]).map_err(csv_err)?;
        for (t, ys) in self.times.iter().zip(&self.observations) {
            for y in ys {
                wr.write_record([t.to_string(), y.to_string()]).map_err(csv_err)?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads `time,value` rows. With `date_column`, that column holds
    /// `YYYY-MM-DD` dates which are mapped to day offsets from the first row.
    pub fn read_csv<R: Read>(r: R, date_column: Option<&str>) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers().map_err(csv_err)?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let time_col = match date_column {
            Some(name) => find(name).ok_or_else(|| Error::Data(format!("no column named '{name}'")))?,
            None => find("time").ok_or_else(|| Error::Data("missing 'time' column".into()))?,
        };
        let value_col = find("value").ok_or_else(|| Error::Data("missing 'value' column".into()))?;
        let mut origin: Option<NaiveDate> = None;
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            // Row numbers are 1-based and count the header line.
            let row = i + 2;
            let rec = rec.map_err(csv_err)?;
            let field = |c: usize| rec.get(c).ok_or_else(|| Error::Data(format!("row {row}: missing field {}", c + 1)));
            let t = if date_column.is_some() {
                let s = field(time_col)?;
                let d = NaiveDate::parse_from_str(s, "%Y-%m-%d")
                    .map_err(|e| Error::Data(format!("row {row}: bad date '{s}': {e}")))?;
                let o = *origin.get_or_insert(d);
                (d - o).num_days() as f64
            } else {
                parse_num(field(time_col)?, row, "time")?
            };
            let y = parse_num(field(value_col)?, row, "value")?;
            rows.push((t, y));
        }
        if rows.is_empty() {
            return Err(Error::Data("dataset has no rows".into()));
        }
        Self::from_rows(&rows, 2)
    }

    pub fn read_csv_path(path: &Path, date_column: Option<&str>) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(f), date_column)
    }
}

fn parse_num(s: &str, row: usize, what: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Data(format!("row {row}: cannot parse {what} '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("row {row}: {what} is not finite")));
    }
    Ok(v)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}
