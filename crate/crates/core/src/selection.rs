//! Private selection among private candidate mechanisms: call uniformly random
//! candidates until a geometric stopping rule fires, then report the smallest
//! value seen.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub beta: f64,
    pub stop_prob: f64,
    pub call_cap: u64,
}

/// Constants in the call cap `⌈C₁·(κ/β)·ln(κ/β)·ln(1/β)⌉` and the stopping
/// probability `β/(C₂·κ·ln(κ/β))`.
pub const C1: f64 = 4.0;
pub const C2: f64 = 2.0;

/// `T(κ, β)`, the call cap.
pub fn call_cap(kappa: usize, beta: f64) -> u64 {
    let r = kappa as f64 / beta;
    (C1 * r * r.ln() * (1.0 / beta).ln()).ceil().max(1.0) as u64
}

impl SelectionConfig {
    pub fn new(kappa: usize, beta: f64) -> Result<Self> {
        Self::with_constants(kappa, beta, C1, C2)
    }

    pub fn with_constants(kappa: usize, beta: f64, c1: f64, c2: f64) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::param("kappa", "need at least one candidate"));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param("beta", format!("{beta} is outside (0, 1)")));
        }
        let r = kappa as f64 / beta;
        let stop_prob = (beta / (c2 * kappa as f64 * r.ln())).min(1.0);
        let cap = (c1 * r * r.ln() * (1.0 / beta).ln()).ceil().max(1.0) as u64;
        Ok(SelectionConfig {
            beta,
            stop_prob,
            call_cap: cap,
        })
    }
}

fn finite_or_string<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CallRecord {
    pub order: u64,
    pub candidate: usize,
    #[serde(serialize_with = "finite_or_string")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub value: f64,
    pub log: Vec<CallRecord>,
}

impl Selection {
    /// Write the call log as JSON lines.
    pub fn write_log<W: Write>(&self, mut w: W) -> Result<()> {
        for rec in &self.log {
            let line = serde_json::to_string(rec).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(w, "{line}").map_err(|e| Error::Io(e.to_string()))?;
        }
        Ok(())
    }
}

/// Smallest value in the log, ties to the lowest candidate index.
pub fn argmin_of_log(log: &[CallRecord]) -> Option<(usize, f64)> {
    log.iter()
        .map(|r| (r.candidate, r.value))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

/// Run the selection loop. `candidate(i, order)` invokes mechanism `i` with
/// fresh randomness keyed by the call order; an error counts as `+∞`.
pub fn select_min<R, F>(kappa: usize, cfg: &SelectionConfig, rng: &mut R, mut candidate: F) -> Result<Selection>
where
    R: Rng + ?Sized,
    F: FnMut(usize, u64) -> Result<f64>,
{
    if kappa == 0 {
        return Err(Error::param("kappa", "need at least one candidate"));
    }
    let mut log = Vec::new();
    for order in 0..cfg.call_cap {
        let i = rng.random_range(0..kappa);
        let y = candidate(i, order).unwrap_or(f64::INFINITY);
        let y = if y.is_nan() { f64::INFINITY } else { y };
        log.push(CallRecord {
            order,
            candidate: i,
            value: y,
        });
        if rng.random::<f64>() < cfg.stop_prob {
            break;
        }
    }
    let (index, value) = argmin_of_log(&log).expect("at least one call");
    Ok(Selection { index, value, log })
}
