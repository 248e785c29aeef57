//! Bak–Tang–Wiesenfeld sandpile with synchronous toppling
//! `X(t+1) = X(t) − Z f(t)`, `f_i = H(X_i − X_c)`, `H(0) = 1`, and open
//! boundary: grains pushed off the lattice are lost.

use std::io::Write;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::noise::rng::{stream, StreamPurpose};

pub const DEFAULT_CRITICAL: i64 = 4;
pub const ROUND_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SandpileLattice {
    side: usize,
    heights: Vec<i64>,
    critical: i64,
    grains_lost: i64,
    grains_driven: i64,
    initial_total: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct AvalancheRecord {
    /// Site topplings.
    pub size: u64,
    /// Parallel update rounds.
    pub duration: u64,
    /// Grains lost through the boundary.
    pub dissipated: u64,
}

impl SandpileLattice {
    pub fn new(side: usize, critical: i64) -> Result<Self> {
        Self::from_heights(side, vec![0; side * side], critical)
    }

    /// Row-major heights of a `side × side` lattice.
    pub fn from_heights(side: usize, heights: Vec<i64>, critical: i64) -> Result<Self> {
        if side < 2 {
            return Err(invalid("side", format!("{side} must be >= 2")));
        }
        if critical < 1 {
            return Err(invalid("x_c", format!("{critical} must be >= 1")));
        }
        if heights.len() != side * side {
            return Err(Error::DimensionMismatch { expected: side * side, found: heights.len() });
        }
        let initial_total = heights.iter().sum();
        Ok(Self { side, heights, critical, grains_lost: 0, grains_driven: 0, initial_total })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn heights(&self) -> &[i64] {
        &self.heights
    }

    pub fn critical(&self) -> i64 {
        self.critical
    }

    pub fn grains_lost(&self) -> i64 {
        self.grains_lost
    }

    pub fn grains_driven(&self) -> i64 {
        self.grains_driven
    }

    pub fn total(&self) -> i64 {
        self.heights.iter().sum()
    }

    pub fn is_stable(&self) -> bool {
        self.heights.iter().all(|h| *h < self.critical)
    }

    /// `initial + driven == current + lost`.
    pub fn audit(&self) -> ConservationAudit {
        let final_total = self.total();
        ConservationAudit {
            initial_total: self.initial_total,
            driven: self.grains_driven,
            final_total,
            lost: self.grains_lost,
            exact: self.initial_total + self.grains_driven == final_total + self.grains_lost,
        }
    }

    fn neighbours(&self, site: usize) -> [Option<usize>; 4] {
        let n = self.side;
        let (r, c) = (site / n, site % n);
        [
            (r > 0).then(|| site - n),
            (r + 1 < n).then(|| site + n),
            (c > 0).then(|| site - 1),
            (c + 1 < n).then(|| site + 1),
        ]
    }

    /// Topples every listed site once (the list must come from one frozen
    /// snapshot). Returns the number of grains lost.
    fn topple(&mut self, sites: &[usize]) -> i64 {
        let mut lost = 0;
        for &s in sites {
            self.heights[s] -= 4;
            for nb in self.neighbours(s) {
                match nb {
                    Some(j) => self.heights[j] += 1,
                    None => lost += 1,
                }
            }
        }
        self.grains_lost += lost;
        lost
    }

    fn unstable_sites(&self) -> Vec<usize> {
        (0..self.heights.len()).filter(|&i| self.heights[i] >= self.critical).collect()
    }

    /// One synchronous update; returns the toppled sites.
    pub fn apply_toppling_matrix(&mut self) -> Vec<usize> {
        let sites = self.unstable_sites();
        self.topple(&sites);
        sites
    }

    pub fn drive(&mut self, site: usize) -> Result<()> {
        if site >= self.heights.len() {
            return Err(Error::SiteOutOfRange { site, sites: self.heights.len() });
        }
        self.heights[site] += 1;
        self.grains_driven += 1;
        Ok(())
    }

    /// Adds a grain at a uniformly chosen site and returns the site.
    pub fn drive_random<R: Rng>(&mut self, rng: &mut R) -> usize {
        let site = rng.random_range(0..self.heights.len());
        self.heights[site] += 1;
        self.grains_driven += 1;
        site
    }

    /// Updates until no site is at or above the critical value.
    pub fn stabilize(&mut self) -> Result<AvalancheRecord> {
        let candidates: Vec<usize> = (0..self.heights.len()).collect();
        self.stabilize_from(candidates)
    }

    /// Stabilization when only `candidates` can be unstable.
    fn stabilize_from(&mut self, mut candidates: Vec<usize>) -> Result<AvalancheRecord> {
        let mut record = AvalancheRecord::default();
        let mut mark = vec![false; self.heights.len()];
        loop {
            let toppling: Vec<usize> = candidates.iter().copied().filter(|&i| self.heights[i] >= self.critical).collect();
            if toppling.is_empty() {
                return Ok(record);
            }
            if record.duration as usize >= ROUND_CAP {
                return Err(Error::RoundCapExceeded { rounds: ROUND_CAP });
            }
            record.dissipated += self.topple(&toppling) as u64;
            record.size += toppling.len() as u64;
            record.duration += 1;
            candidates.clear();
            for &s in &toppling {
                for j in std::iter::once(Some(s)).chain(self.neighbours(s)).flatten() {
                    if !mark[j] {
                        mark[j] = true;
                        candidates.push(j);
                    }
                }
            }
            for &j in &candidates {
                mark[j] = false;
            }
            candidates.sort_unstable();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ConservationAudit {
    pub initial_total: i64,
    pub driven: i64,
    pub final_total: i64,
    pub lost: i64,
    pub exact: bool,
}

/// Counts in `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct HistogramBin {
    pub lo: u64,
    pub hi: u64,
    pub count: u64,
}

/// Bins `[0,1), [1,2), [2,4), [4,8), …` up to the largest value.
pub fn log_histogram(values: &[u64]) -> Vec<HistogramBin> {
    let max = values.iter().copied().max().unwrap_or(0);
    let mut bins = vec![HistogramBin { lo: 0, hi: 1, count: 0 }];
    let mut lo = 1u64;
    while lo <= max {
        bins.push(HistogramBin { lo, hi: lo * 2, count: 0 });
        lo *= 2;
    }
    for &v in values {
        let idx = if v == 0 { 0 } else { 1 + (63 - v.leading_zeros()) as usize };
        bins[idx].count += 1;
    }
    bins
}

pub fn write_histogram_csv<W: Write>(writer: W, bins: &[HistogramBin]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for b in bins {
        w.write_record([b.lo.to_string(), b.hi.to_string(), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SocStatistics {
    pub side: usize,
    pub critical: i64,
    pub n_drives: usize,
    pub seed: u64,
    #[serde(skip)]
    pub avalanches: Vec<AvalancheRecord>,
    pub size_histogram: Vec<HistogramBin>,
    pub duration_histogram: Vec<HistogramBin>,
    pub max_size: u64,
    pub max_duration: u64,
    pub audit: ConservationAudit,
    /// Every post-stabilization lattice had all heights below the critical value.
    pub always_stable: bool,
    #[serde(skip)]
    pub lattice: SandpileLattice,
}

/// Drive–stabilize loop from an empty lattice.
pub fn run_soc(side: usize, critical: i64, n_drives: usize, seed: u64) -> Result<SocStatistics> {
    if n_drives == 0 {
        return Err(invalid("n_drives", "must be >= 1"));
    }
    let mut lattice = SandpileLattice::new(side, critical)?;
    let mut rng = stream(seed, StreamPurpose::SandpileDrive, 0, 0);
    let mut avalanches = Vec::with_capacity(n_drives);
    let mut always_stable = true;
    for _ in 0..n_drives {
        let site = lattice.drive_random(&mut rng);
        avalanches.push(lattice.stabilize_from(vec![site])?);
        always_stable &= lattice.is_stable();
    }
    let sizes: Vec<u64> = avalanches.iter().map(|a| a.size).collect();
    let durations: Vec<u64> = avalanches.iter().map(|a| a.duration).collect();
    Ok(SocStatistics {
        side,
        critical,
        n_drives,
        seed,
        size_histogram: log_histogram(&sizes),
        duration_histogram: log_histogram(&durations),
        max_size: sizes.iter().copied().max().unwrap_or(0),
        max_duration: durations.iter().copied().max().unwrap_or(0),
        audit: lattice.audit(),
        always_stable,
        avalanches,
        lattice,
    })
}
