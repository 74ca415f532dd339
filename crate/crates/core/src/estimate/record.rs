//! Flat `key=value` text records for fit results.

use std::fmt::Write as _;

use super::{c_beta_extremes, AicEntry, FitResult, Interval};
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParams};

pub const RECORD_FORMAT: &str = "fhp-fit-1";

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn interval(ci: Option<Interval>) -> String {
    match ci {
        Some((a, b)) => format!("{a},{b}"),
        None => "unavailable".to_string(),
    }
}

impl FitResult {
    /// Serialize, with `extra` pairs (run metadata) written first.
    pub fn to_record(&self, extra: &[(String, String)]) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("format", RECORD_FORMAT.to_string());
        for (k, v) in extra {
            put(k, v.clone());
        }
        put("model", self.model.name().to_string());
        put("label", self.label.clone());
        put("n_events", self.n_events.to_string());
        put("seed", self.seed.to_string());
        put("n_starts", self.n_starts.to_string());
        put("n_converged", self.n_converged.to_string());
        put("n_excluded", self.n_excluded.to_string());
        put("start_index", self.start_index.to_string());
        put("start_used", join(&self.start_used));
        put("iterations", self.iterations.to_string());
        put("converged", self.converged.to_string());
        put("neg_loglik", self.neg_loglik.to_string());
        put("k", self.k.to_string());
        put("aic", self.aic.to_string());
        let names = self.model.param_names();
        for (name, v) in names.iter().zip(self.theta()) {
            put(&format!("param.{name}"), v.to_string());
        }
        for (tag, ci) in [("ci95", &self.ci95), ("ci99", &self.ci99)] {
            for (j, name) in names.iter().enumerate() {
                put(&format!("{tag}.{name}"), interval(ci.as_ref().map(|c| c[j])));
            }
        }
        put("hessian_pd", self.hessian_pd.to_string());
        put("boundary", self.boundary.to_string());
        for i in 0..self.hessian.nrows() {
            let row: Vec<f64> = self.hessian.row(i).iter().copied().collect();
            put(&format!("hessian.{i}"), join(&row));
        }
        if let Some(p) = self.params.fhp() {
            put("c_beta", p.c_beta().to_string());
            for (tag, lvl) in [("c_beta.ci95", 0.95), ("c_beta.ci99", 0.99)] {
                let v = c_beta_extremes(self, lvl).ok().map(|e| (e.min, e.max));
                put(tag, interval(v));
            }
        }
        out
    }
}

/// A parsed fit record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitRecord {
    pairs: Vec<(String, String)>,
}

impl FitRecord {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let rec = FitRecord { pairs };
        match rec.get("format") {
            Some(RECORD_FORMAT) => Ok(rec),
            Some(other) => Err(Error::Parse(format!("unsupported record format '{other}'"))),
            None => Err(Error::Parse("missing format line".into())),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse(format!("record has no '{key}'")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| Error::Parse(format!("'{key}' is not a number: {v}")))
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn model(&self) -> Result<ModelKind> {
        self.require("model")?.parse()
    }

    pub fn params(&self) -> Result<ModelParams> {
        let kind = self.model()?;
        let v = kind
            .param_names()
            .iter()
            .map(|n| self.f64(&format!("param.{n}")))
            .collect::<Result<Vec<_>>>()?;
        ModelParams::from_vec(kind, &v)
    }

    pub fn aic_entry(&self) -> Result<AicEntry> {
        let label = format!("{}:{}", self.get("label").unwrap_or(""), self.model()?);
        let k: usize = self
            .require("k")?
            .parse()
            .map_err(|_| Error::Parse("'k' is not an integer".into()))?;
        let neg = self.f64("neg_loglik")?;
        let mut e = AicEntry::new(label, neg, k);
        if let Ok(a) = self.f64("aic") {
            e.aic = a;
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rejects_garbage() {
        assert!(FitRecord::parse("model=fhp\n").is_err());
        assert!(FitRecord::parse("format=fhp-fit-1\nnonsense\n").is_err());
        assert!(FitRecord::parse("format=other\n").is_err());
        let r = FitRecord::parse("# note\nformat=fhp-fit-1\nmodel=etas\nk=5\nneg_loglik=-3311.3\n").unwrap();
        let e = r.aic_entry().unwrap();
        assert_eq!(e.k, 5);
        assert!((e.aic - (-6612.6)).abs() < 1e-9);
        assert!(r.params().is_err());
    }
}
