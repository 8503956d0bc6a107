//! Slotted datasets, Bernoulli subsampling and empirical quantiles.
//!
//! A [`Dataset`] is a fixed-length sequence of slots, each holding a point (a
//! fixed-width real vector) or nothing (⊥). Subsamples share the point storage
//! of their parent and differ only in which slots are present, so drawing a
//! subsample never copies points.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use rand_distr::Binomial;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Dataset {
    width: usize,
    values: Arc<[f64]>,
    present: Vec<bool>,
    // ascending indices of present slots
    members: Vec<u32>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.present == other.present
            && self
                .members
                .iter()
                .all(|&j| self.raw_row(j as usize) == other.raw_row(j as usize))
    }
}

impl Dataset {
    /// Dataset whose slots are all present, from a flat row-major buffer.
    pub fn from_flat(width: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 {
            return Err(Error::param("width", "points must have at least one coordinate"));
        }
        if values.len() % width != 0 {
            return Err(Error::param(
                "values",
                format!("length {} is not a multiple of width {width}", values.len()),
            ));
        }
        let n = values.len() / width;
        if n > u32::MAX as usize {
            return Err(Error::param("values", "too many slots"));
        }
        Ok(Dataset {
            width,
            values: values.into(),
            present: vec![true; n],
            members: (0..n as u32).collect(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(1, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != width) {
            return Err(Error::param("rows", format!("row {bad} has the wrong width")));
        }
        Self::from_flat(width, rows.iter().flatten().copied().collect())
    }

    /// Dataset with explicit absent slots.
    pub fn from_slots(width: usize, slots: &[Option<Vec<f64>>]) -> Result<Self> {
        let mut values = Vec::with_capacity(slots.len() * width);
        for (j, slot) in slots.iter().enumerate() {
            match slot {
                Some(p) if p.len() == width => values.extend_from_slice(p),
                Some(_) => return Err(Error::param("slots", format!("slot {j} has the wrong width"))),
                None => values.extend(std::iter::repeat_n(0.0, width)),
            }
        }
        let mut ds = Self::from_flat(width, values)?;
        for (j, slot) in slots.iter().enumerate() {
            if slot.is_none() {
                ds.present[j] = false;
            }
        }
        ds.rebuild_members();
        Ok(ds)
    }

    /// One-dimensional dataset.
    pub fn from_scalars(values: &[f64]) -> Self {
        Self::from_flat(1, values.to_vec()).expect("width 1 always divides")
    }

    fn rebuild_members(&mut self) {
        self.members = self
            .present
            .iter()
            .enumerate()
            .filter_map(|(j, &p)| p.then_some(j as u32))
            .collect();
    }

    /// Number of slots, n.
    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    /// Number of present slots, |Z|.
    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_present(&self, j: usize) -> bool {
        self.present[j]
    }

    /// Indices of present slots, ascending.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    fn raw_row(&self, j: usize) -> &[f64] {
        &self.values[j * self.width..(j + 1) * self.width]
    }

    pub fn point(&self, j: usize) -> Option<&[f64]> {
        self.present[j].then(|| self.raw_row(j))
    }

    /// Present points in slot order.
    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.members.iter().map(move |&j| self.raw_row(j as usize))
    }

    /// `Z^{j←z}`: a copy with slot `j` replaced (`None` gives `Z_{-j}`).
    pub fn replace(&self, j: usize, point: Option<&[f64]>) -> Result<Dataset> {
        if j >= self.len() {
            return Err(Error::param("j", format!("slot {j} out of range for n = {}", self.len())));
        }
        let mut out = self.clone();
        match point {
            Some(p) => {
                if p.len() != self.width {
                    return Err(Error::param("point", "wrong width"));
                }
                let mut values = self.values.to_vec();
                values[j * self.width..(j + 1) * self.width].copy_from_slice(p);
                out.values = values.into();
                out.present[j] = true;
            }
            None => out.present[j] = false,
        }
        out.rebuild_members();
        Ok(out)
    }

    /// Restrict to the slots selected by `keep`; slots that are already
    /// absent stay absent.
    pub fn masked(&self, keep: &[bool]) -> Result<Dataset> {
        if keep.len() != self.len() {
            return Err(Error::param("keep", "mask length differs from n"));
        }
        let mut out = self.clone();
        for (slot, &k) in out.present.iter_mut().zip(keep) {
            *slot &= k;
        }
        out.rebuild_members();
        Ok(out)
    }

    /// Presence vector, i.e. the subsample mask relative to a full dataset.
    pub fn mask(&self) -> &[bool] {
        &self.present
    }

    /// Draw `S ~ S_p(Z)`.
    pub fn subsample<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> Dataset {
        let mut out = self.clone();
        self.subsample_into(p, rng, &mut out);
        out
    }

    /// Draw `S ~ S_p(Z)` into `out`, reusing its buffers.
    ///
    /// `out` must have been cloned from `self` (or a previous subsample of it);
    /// otherwise it is reset to a clone first.
    pub fn subsample_into<R: Rng + ?Sized>(&self, p: f64, rng: &mut R, out: &mut Dataset) {
        assert!((0.0..=1.0).contains(&p), "subsampling probability {p} outside [0, 1]");
        if !Arc::ptr_eq(&self.values, &out.values) || out.len() != self.len() || out.width != self.width {
            *out = self.clone();
        }
        for &j in &out.members {
            out.present[j as usize] = false;
        }
        out.members.clear();

        let k = self.members.len();
        if p >= 1.0 {
            out.members.extend_from_slice(&self.members);
        } else if p > 0.0 && k > 0 {
            if p <= 0.125 && k >= 64 {
                // draw |S| ~ Bin(k, p), then a uniform |S|-subset of positions
                let size = Binomial::new(k as u64, p).expect("p in (0, 1)").sample(rng) as usize;
                while out.members.len() < size {
                    let j = self.members[rng.random_range(0..k)];
                    if !out.present[j as usize] {
                        out.present[j as usize] = true;
                        out.members.push(j);
                    }
                }
                out.members.sort_unstable();
            } else {
                let coin = Bernoulli::new(p).expect("p in (0, 1)");
                out.members
                    .extend(self.members.iter().copied().filter(|_| coin.sample(rng)));
            }
        }
        for &j in &out.members {
            out.present[j as usize] = true;
        }
    }

    /// Read a dataset from CSV with header `c0,c1,...`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
        let width = headers.len();
        for (i, h) in headers.iter().enumerate() {
            if h.trim() != format!("c{i}") {
                return Err(Error::Io(format!("unexpected header `{h}` in column {i}")));
            }
        }
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
            if rec.len() != width || rec.iter().all(|f| f.trim().is_empty()) {
                return Err(Error::Io(format!("row {line}: expected {width} numeric fields")));
            }
            for field in rec.iter() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Io(format!("row {line}: `{field}` is not a number")))?;
                values.push(v);
            }
        }
        Dataset::from_flat(width, values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        if self.count() != self.len() {
            return Err(Error::Io("absent slots cannot be serialized".into()));
        }
        let mut wtr = csv::Writer::from_writer(writer);
        let header: Vec<String> = (0..self.width).map(|i| format!("c{i}")).collect();
        wtr.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for p in self.points() {
            wtr.write_record(p.iter().map(|v| v.to_string()))
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        wtr.flush().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let f = std::fs::File::open(path.as_ref()).map_err(|e| Error::Io(e.to_string()))?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path.as_ref()).map_err(|e| Error::Io(e.to_string()))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Ascending sample of a real distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NoSamples);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::param("values", "NaN sample"));
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(EmpiricalDistribution { sorted: values })
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `Q(v) = inf { l : F̂(l) ≥ v }`.
    pub fn quantile(&self, v: f64) -> Result<f64> {
        empirical_quantile(&self.sorted, v)
    }
}

/// 1-based order-statistic rank `⌈v·m⌉` of the `v`-quantile of `m` samples.
pub fn quantile_rank(v: f64, m: usize) -> usize {
    let x = v * m as f64;
    // absorb rounding noise when v·m is an integer in exact arithmetic
    let k = (x * (1.0 - 4.0 * f64::EPSILON)).ceil() as usize;
    k.clamp(1, m)
}

/// `v`-quantile of ascending `sorted`, for `0 < v ≤ 1`.
pub fn empirical_quantile(sorted: &[f64], v: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::NoSamples);
    }
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::param("v", format!("quantile level {v} outside (0, 1]")));
    }
    Ok(sorted[quantile_rank(v, sorted.len()) - 1])
}

/// `|{t : q(t) ≤ y}|` for ascending `q`.
pub fn rank(y: f64, q: &[f64]) -> usize {
    q.partition_point(|&x| x <= y)
}

/// Order statistics at the given 0-based `ranks` (ascending) without a full sort.
/// Ties and signed zeros are ordered as by `f64::total_cmp`.
pub fn select_order_statistics(values: &[f64], ranks: &[usize]) -> Vec<f64> {
    debug_assert!(ranks.windows(2).all(|w| w[0] <= w[1]));
    // integer keys with the order of f64::total_cmp compare faster
    let mut keys: Vec<u64> = values.iter().map(|v| sort_key(*v)).collect();
    let mut out = vec![0u64; ranks.len()];
    select_rec(&mut keys, 0, ranks, &mut out);
    out.into_iter().map(from_sort_key).collect()
}

fn sort_key(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_sort_key(k: u64) -> f64 {
    f64::from_bits(if k >> 63 == 1 { k & !(1 << 63) } else { !k })
}

/// Radix selection: bucket the keys on the highest bits in which they differ,
/// then recurse into the buckets that hold a requested rank.
fn select_rec(keys: &mut [u64], offset: usize, ranks: &[usize], out: &mut [u64]) {
    const BITS: u32 = 11;
    if ranks.is_empty() {
        return;
    }
    if keys.len() <= 512 {
        keys.sort_unstable();
        for (o, &r) in out.iter_mut().zip(ranks) {
            *o = keys[r - offset];
        }
        return;
    }
    let (lo, hi) = keys.iter().fold((u64::MAX, 0), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    if lo == hi {
        out.fill(lo);
        return;
    }
    let shift = (64 - (lo ^ hi).leading_zeros()).saturating_sub(BITS);
    let base = lo >> shift;
    let buckets = ((hi >> shift) - base + 1) as usize;
    let mut counts = vec![0usize; buckets];
    for &k in keys.iter() {
        counts[((k >> shift) - base) as usize] += 1;
    }
    // bucket holding each rank, and where each bucket starts
    let mut wanted = vec![usize::MAX; buckets];
    let mut groups: Vec<(usize, usize, usize, usize)> = Vec::new();
    let (mut start, mut b, mut i) = (offset, 0usize, 0usize);
    while i < ranks.len() {
        while start + counts[b] <= ranks[i] {
            start += counts[b];
            b += 1;
        }
        let first = i;
        while i < ranks.len() && ranks[i] < start + counts[b] {
            i += 1;
        }
        wanted[b] = groups.len();
        groups.push((start, counts[b], first, i));
        start += counts[b];
        b += 1;
    }
    let mut parts: Vec<Vec<u64>> = groups.iter().map(|g| Vec::with_capacity(g.1)).collect();
    for &k in keys.iter() {
        let g = wanted[((k >> shift) - base) as usize];
        if g != usize::MAX {
            parts[g].push(k);
        }
    }
    for ((start, _, first, last), mut part) in groups.into_iter().zip(parts) {
        select_rec(&mut part, start, &ranks[first..last], &mut out[first..last]);
    }
}
