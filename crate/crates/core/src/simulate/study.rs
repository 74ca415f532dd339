use std::fmt::Write as _;

use rand::RngCore;
use rayon::prelude::*;
use statrs::statistics::{Data, OrderStatistics};

use super::{simulate_fhp, MagnitudeLaw, SimConfig, Stop};
use crate::error::{Error, Result};
use crate::estimate::{fit, FitOptions};
use crate::model::{FhpParams, ModelKind};
use crate::rng;

pub const STUDY_HEADER: &str = "size,replicate,lambda0,alpha,gamma,beta,c,neg_loglik,excluded_flag";

const NAMES: [&str; 5] = ["lambda0", "alpha", "gamma", "beta", "c"];

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub truth: FhpParams,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub fit: FitOptions,
    pub magnitude: MagnitudeLaw,
}

impl StudyOptions {
    pub fn new(truth: FhpParams, sizes: Vec<usize>, replicates: usize, seed: u64) -> Self {
        StudyOptions {
            truth,
            sizes,
            replicates,
            seed,
            fit: FitOptions::default(),
            magnitude: MagnitudeLaw::reference(),
        }
    }

    /// Every `(size, replicate)` cell of the study.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.sizes
            .iter()
            .flat_map(|&n| (0..self.replicates).map(move |r| (n, r)))
            .collect()
    }
}

/// One simulated-then-fitted replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub size: usize,
    pub replicate: usize,
    /// `λ₀, α, γ, β, c`; NaN when excluded before a fit was available.
    pub estimates: [f64; 5],
    pub neg_loglik: f64,
    pub excluded: bool,
}

/// Simulate and fit one cell. Streams depend only on `(seed, size, replicate)`.
pub fn run_replicate(opts: &StudyOptions, size: usize, replicate: usize) -> StudyRow {
    let cell = ((size as u64) << 32) | replicate as u64;
    let sim_seed = rng::substream(opts.seed, cell, 0).next_u64();
    let fit_seed = rng::substream(opts.seed, cell, 1).next_u64();
    let mut cfg = SimConfig::new(opts.truth, Stop::Count(size), sim_seed);
    cfg.magnitude = opts.magnitude;
    let excluded = |size, replicate| StudyRow {
        size,
        replicate,
        estimates: [f64::NAN; 5],
        neg_loglik: f64::NAN,
        excluded: true,
    };
    let Ok(catalog) = simulate_fhp(&cfg) else {
        return excluded(size, replicate);
    };
    let fo = FitOptions {
        seed: fit_seed,
        ..opts.fit.clone()
    };
    match fit(ModelKind::Fhp, &catalog, &fo) {
        Ok(f) if f.neg_loglik.is_finite() => {
            let p = f.params.fhp().copied().expect("FHP fit");
            StudyRow {
                size,
                replicate,
                estimates: [p.lambda0, p.alpha, p.gamma, p.beta, p.c],
                neg_loglik: f.neg_loglik,
                excluded: false,
            }
        }
        _ => excluded(size, replicate),
    }
}

/// Run every cell not already present in `done`, returning all rows sorted
/// by `(size, replicate)`.
pub fn consistency_study(opts: &StudyOptions, done: &[StudyRow]) -> Vec<StudyRow> {
    let todo: Vec<(usize, usize)> = opts
        .cells()
        .into_iter()
        .filter(|&(n, r)| !done.iter().any(|d| d.size == n && d.replicate == r))
        .collect();
    let mut rows: Vec<StudyRow> = todo
        .par_iter()
        .map(|&(n, r)| run_replicate(opts, n, r))
        .collect();
    rows.extend(done.iter().cloned());
    rows.sort_by_key(|r| (r.size, r.replicate));
    rows
}

fn row_line(r: &StudyRow) -> String {
    let mut s = format!("{},{}", r.size, r.replicate);
    for v in r.estimates {
        let _ = write!(s, ",{v}");
    }
    let _ = write!(s, ",{},{}", r.neg_loglik, u8::from(r.excluded));
    s
}

/// Study rows as a header-bearing CSV table.
pub fn study_table(rows: &[StudyRow]) -> String {
    let mut out = String::from(STUDY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&row_line(r));
        out.push('\n');
    }
    out
}

/// Inverse of [`study_table`]; lines starting with `#` are skipped.
pub fn parse_study_table(text: &str) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != STUDY_HEADER {
                return Err(Error::Parse(format!("line {}: unexpected header", i + 1)));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Parse(format!("line {}: expected 9 fields", i + 1)));
        }
        let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", i + 1));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("number"));
        let mut estimates = [0.0; 5];
        for (k, e) in estimates.iter_mut().enumerate() {
            *e = num(f[2 + k])?;
        }
        rows.push(StudyRow {
            size: f[0].parse().map_err(|_| bad("size"))?,
            replicate: f[1].parse().map_err(|_| bad("replicate"))?,
            estimates,
            neg_loglik: num(f[7])?,
            excluded: match f[8] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("flag")),
            },
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: &'static str,
    pub truth: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl ParamSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// `|median - truth| / truth`.
    pub fn median_rel_error(&self) -> f64 {
        ((self.median - self.truth) / self.truth).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeSummary {
    pub size: usize,
    pub used: usize,
    pub excluded: usize,
    pub params: Vec<ParamSummary>,
}

/// Per-size quartiles of each estimate over the non-excluded rows.
pub fn summarize_study(rows: &[StudyRow], truth: &FhpParams) -> Vec<SizeSummary> {
    let truth = [truth.lambda0, truth.alpha, truth.gamma, truth.beta, truth.c];
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|size| {
            let used: Vec<&StudyRow> = rows.iter().filter(|r| r.size == size && !r.excluded).collect();
            let excluded = rows.iter().filter(|r| r.size == size && r.excluded).count();
            let params = (0..5)
                .map(|k| {
                    let mut d = Data::new(used.iter().map(|r| r.estimates[k]).collect::<Vec<_>>());
                    ParamSummary {
                        name: NAMES[k],
                        truth: truth[k],
                        median: d.median(),
                        q1: d.lower_quartile(),
                        q3: d.upper_quartile(),
                    }
                })
                .collect();
            SizeSummary {
                size,
                used: used.len(),
                excluded,
                params,
            }
        })
        .collect()
}

impl SizeSummary {
    /// Rows `size,parameter,truth,used,excluded,median,q1,q3,iqr`.
    pub fn table(summaries: &[SizeSummary]) -> String {
        let mut out = String::from("size,parameter,truth,used,excluded,median,q1,q3,iqr\n");
        for s in summaries {
            for p in &s.params {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    s.size,
                    p.name,
                    p.truth,
                    s.used,
                    s.excluded,
                    p.median,
                    p.q1,
                    p.q3,
                    p.iqr()
                );
            }
        }
        out
    }
}
