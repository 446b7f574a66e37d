//! Plot-ready CSV series for experiment results. Output bytes depend only on
//! the data, so equal inputs give byte-identical files.

use crate::error::{Error, Result};
use crate::experiment::TrialOutcome;
use crate::rate::exponential_cdf;
use crate::stats::{EmpiricalDistribution, HazardBin};

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.into())
}

/// `trial_index,scaled_time,flags`: one row per trial in index order;
/// `scaled_time` is `censored` when no good encounter occurred and empty
/// for faulted trials. Flags are `grazing` and `fault`, `;`-separated.
pub fn times_csv(outcomes: &[TrialOutcome]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial_index", "scaled_time", "flags"]).map_err(csv_err)?;
    for o in outcomes {
        let time = match (&o.fault, o.scaled_time) {
            (Some(_), _) => String::new(),
            (None, Some(t)) => format!("{t:e}"),
            (None, None) => "censored".to_string(),
        };
        let mut flags = Vec::new();
        if o.grazing_flagged {
            flags.push("grazing");
        }
        if o.fault.is_some() {
            flags.push("fault");
        }
        w.write_record([o.trial_index.to_string(), time, flags.join(";")]).map_err(csv_err)?;
    }
    finish(w)
}

/// `t,empirical,theoretical` on `points` evenly spaced times in `[0, T]`
/// against `1 − e^{−ρt}`.
pub fn cdf_csv(emp: &EmpiricalDistribution, rho: f64, points: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "empirical", "theoretical"]).map_err(csv_err)?;
    let n = points.max(2);
    for i in 0..n {
        let t = emp.horizon() * i as f64 / (n - 1) as f64;
        w.write_record([format!("{t:e}"), format!("{:e}", emp.cdf(t)), format!("{:e}", exponential_cdf(rho, t))])
            .map_err(csv_err)?;
    }
    finish(w)
}

/// One row per hazard bin.
pub fn hazard_csv(bins: &[HazardBin]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["start", "end", "at_risk", "events", "hazard", "hazard_log", "low_confidence"])
        .map_err(csv_err)?;
    for b in bins {
        w.write_record([
            format!("{:e}", b.start),
            format!("{:e}", b.end),
            b.at_risk.to_string(),
            b.events.to_string(),
            format!("{:e}", b.hazard),
            format!("{:e}", b.hazard_log),
            b.low_confidence.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}
