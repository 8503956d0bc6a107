//! CSV rows and writers.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use monodp::{Error, Result};

pub const BASE_COLUMNS: [&str; 11] = [
    "run_id", "seed", "n", "p", "epsilon", "delta", "alpha", "beta", "output", "is_bottom", "queries",
];

/// Parameters echoed into every row.
#[derive(Clone, Copy, Debug)]
pub struct RowParams {
    pub n: usize,
    pub p: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub run_id: usize,
    pub seed: u64,
    pub output: Option<f64>,
    pub queries: u64,
    pub extra: Vec<String>,
    pub wall_ms: f64,
}

impl Row {
    fn record(&self, params: &RowParams) -> Vec<String> {
        let mut r = vec![
            self.run_id.to_string(),
            self.seed.to_string(),
            params.n.to_string(),
            params.p.to_string(),
            params.epsilon.to_string(),
            params.delta.to_string(),
            params.alpha.to_string(),
            params.beta.to_string(),
            self.output.map_or_else(String::new, |v| v.to_string()),
            u8::from(self.output.is_none()).to_string(),
            self.queries.to_string(),
        ];
        r.extend(self.extra.iter().cloned());
        r
    }
}

/// Main CSV plus the `<out>.timing.csv` sidecar holding wall-clock times.
pub struct RunWriter {
    main: csv::Writer<Box<dyn Write>>,
    timing: Option<csv::Writer<File>>,
}

pub fn timing_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".timing.csv");
    PathBuf::from(s)
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

impl RunWriter {
    /// Writes to `out`, or stdout without a sidecar when `out` is `None`.
    pub fn create(out: Option<&Path>, header: &[String]) -> Result<Self> {
        let (sink, timing): (Box<dyn Write>, _) = match out {
            Some(path) => {
                let t = csv::Writer::from_path(timing_path(path)).map_err(io)?;
                (Box::new(File::create(path).map_err(io)?), Some(t))
            }
            None => (Box::new(std::io::stdout()), None),
        };
        let mut main = csv::WriterBuilder::new().flexible(true).from_writer(sink);
        main.write_record(header).map_err(io)?;
        let mut w = RunWriter { main, timing };
        if let Some(t) = w.timing.as_mut() {
            t.write_record(["run_id", "wall_ms"]).map_err(io)?;
        }
        Ok(w)
    }

    pub fn header(extra: &[&str]) -> Vec<String> {
        BASE_COLUMNS.iter().chain(extra).map(|s| s.to_string()).collect()
    }

    pub fn write_row(&mut self, row: &Row, params: &RowParams) -> Result<()> {
        self.main.write_record(row.record(params)).map_err(io)?;
        if let Some(t) = self.timing.as_mut() {
            t.write_record([row.run_id.to_string(), format!("{:.3}", row.wall_ms)]).map_err(io)?;
        }
        Ok(())
    }

    pub fn write_raw<I, S>(&mut self, record: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.main.write_record(record).map_err(io)
    }

    pub fn write_status(&mut self, err: &Error) -> Result<()> {
        self.write_raw(["status", "error", &err.to_string()])
    }

    pub fn finish(mut self) -> Result<()> {
        self.main.flush().map_err(io)?;
        if let Some(t) = self.timing.as_mut() {
            t.flush().map_err(io)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_sits_next_to_output() {
        assert_eq!(timing_path(Path::new("/tmp/r.csv")), PathBuf::from("/tmp/r.csv.timing.csv"));
    }

    #[test]
    fn bottom_rows_leave_output_empty() {
        let params = RowParams { n: 5, p: 0.1, epsilon: 1.0, delta: 0.05, alpha: 0.1, beta: 0.1 };
        let row = Row { run_id: 2, seed: 9, output: None, queries: 4, extra: vec!["x".into()], wall_ms: 1.0 };
        let rec = row.record(&params);
        assert_eq!(rec.len(), BASE_COLUMNS.len() + 1);
        assert_eq!(rec[8], "");
        assert_eq!(rec[9], "1");
        assert_eq!(rec[3], "0.1");
    }
}
