use std::collections::BTreeMap;

use super::run::ReplicationResult;
use crate::{Error, Result};

/// Column a summary can be grouped by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Gen,
    Truth,
    Fit,
    N,
    T,
    K,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Gen => "gen",
            GroupKey::Truth => "truth",
            GroupKey::Fit => "fit",
            GroupKey::N => "N",
            GroupKey::T => "T",
            GroupKey::K => "K",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "gen" => GroupKey::Gen,
            "truth" => GroupKey::Truth,
            "fit" => GroupKey::Fit,
            "N" | "n" => GroupKey::N,
            "T" | "t" => GroupKey::T,
            "K" | "k" => GroupKey::K,
            other => return Err(Error::InvalidArgument(format!("unknown group column {other}"))),
        })
    }

    fn sort_key(self, r: &ReplicationResult) -> (String, usize) {
        match self {
            GroupKey::Gen => (r.gen.to_string(), 0),
            GroupKey::Truth => (r.truth.to_string(), 0),
            GroupKey::Fit => (r.fit.to_string(), 0),
            GroupKey::N => (String::new(), r.n),
            GroupKey::T => (String::new(), r.t),
            GroupKey::K => (String::new(), r.k),
        }
    }
}

/// The summarized metrics, in output order.
pub const METRICS: [&str; 7] = ["alpha_hat", "theta_hat", "rmse_alpha", "rmse_theta", "rmse_beta", "rmsp", "sigma2_hat"];

fn metric(r: &ReplicationResult, name: &str) -> f64 {
    match name {
        "alpha_hat" => r.alpha_hat,
        "theta_hat" => r.theta_hat,
        "rmse_alpha" => r.rmse_alpha,
        "rmse_theta" => r.rmse_theta,
        "rmse_beta" => r.rmse_beta,
        "rmsp" => r.rmsp,
        _ => r.sigma2_hat,
    }
}

/// Distribution of one metric within one group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// `(column, value)` for each grouping column.
    pub group: Vec<(String, String)>,
    pub metric: &'static str,
    /// Finite values used.
    pub count: usize,
    /// Rows in the group whose status is not `ok`.
    pub failures: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Linear-interpolation sample quantile (R's type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Per-group median, quartiles, mean and standard deviation of every metric
/// over successful rows. Groups appear in order of their key values.
pub fn summarize(results: &[ReplicationResult], group_by: &[GroupKey]) -> Result<Vec<SummaryRow>> {
    if results.is_empty() {
        return Err(Error::EmptyGroup(String::new()));
    }
    let mut groups: BTreeMap<Vec<(String, usize)>, Vec<&ReplicationResult>> = BTreeMap::new();
    for r in results {
        let key = group_by.iter().map(|g| g.sort_key(r)).collect();
        groups.entry(key).or_default().push(r);
    }
    let mut out = Vec::new();
    for rows in groups.values() {
        let first = rows[0];
        let group: Vec<(String, String)> = group_by
            .iter()
            .map(|g| {
                let (s, n) = g.sort_key(first);
                (g.name().to_string(), if s.is_empty() { n.to_string() } else { s })
            })
            .collect();
        let failures = rows.iter().filter(|r| !r.is_ok()).count();
        for name in METRICS {
            let mut v: Vec<f64> = rows
                .iter()
                .filter(|r| r.is_ok())
                .map(|r| metric(r, name))
                .filter(|x| x.is_finite())
                .collect();
            v.sort_by(f64::total_cmp);
            let count = v.len();
            let mean = if count == 0 { f64::NAN } else { v.iter().sum::<f64>() / count as f64 };
            let sd = match count {
                0 => f64::NAN,
                1 => 0.0,
                c => (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (c - 1) as f64).sqrt(),
            };
            out.push(SummaryRow {
                group: group.clone(),
                metric: name,
                count,
                failures,
                median: quantile_sorted(&v, 0.5),
                q1: quantile_sorted(&v, 0.25),
                q3: quantile_sorted(&v, 0.75),
                mean,
                sd,
            });
        }
    }
    Ok(out)
}

/// Summary as CSV: grouping columns, then
/// `metric,count,failures,median,q1,q3,mean,sd`.
pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::InvalidArgument(format!("csv encoding failed: {e}"));
    let mut header: Vec<String> = rows
        .first()
        .map(|r| r.group.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    header.extend(
        ["metric", "count", "failures", "median", "q1", "q3", "mean", "sd"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header).map_err(enc)?;
    for r in rows {
        let mut rec: Vec<String> = r.group.iter().map(|(_, v)| v.clone()).collect();
        rec.push(r.metric.to_string());
        rec.push(r.count.to_string());
        rec.push(r.failures.to_string());
        for x in [r.median, r.q1, r.q3, r.mean, r.sd] {
            rec.push(format!("{x:?}"));
        }
        w.write_record(&rec).map_err(enc)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(fit: &'static str, theta: f64) -> ReplicationResult {
        ReplicationResult {
            gen: "dcsbm",
            truth: "enar",
            fit,
            n: 40,
            t: 2,
            k: 3,
            rep: 0,
            seed: 0,
            alpha_hat: 0.2,
            theta_hat: theta,
            rmse_alpha: 0.0,
            rmse_theta: 0.0,
            rmse_beta: f64::NAN,
            rmsp: 0.1,
            sigma2_hat: 0.25,
            aic: 0.0,
            bic: 0.0,
            status: "ok".into(),
            wall_ms: 0,
            theta_se: 0.0,
        }
    }

    #[test]
    fn single_row_statistics() {
        let s = summarize(&[row("enar", 0.3)], &[GroupKey::Fit]).unwrap();
        let theta = s.iter().find(|r| r.metric == "theta_hat").unwrap();
        assert_eq!((theta.median, theta.mean, theta.sd), (0.3, 0.3, 0.0));
        let beta = s.iter().find(|r| r.metric == "rmse_beta").unwrap();
        assert_eq!(beta.count, 0);
    }

    #[test]
    fn constant_column_has_zero_iqr() {
        let rows: Vec<_> = (0..5).map(|_| row("nar", 0.1)).collect();
        let s = summarize(&rows, &[GroupKey::Fit, GroupKey::N]).unwrap();
        let alpha = s.iter().find(|r| r.metric == "alpha_hat").unwrap();
        assert_eq!(alpha.q3 - alpha.q1, 0.0);
        assert_eq!(alpha.group, vec![("fit".to_string(), "nar".to_string()), ("N".to_string(), "40".to_string())]);
    }

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert!(matches!(summarize(&[], &[]), Err(Error::EmptyGroup(_))));
    }

    #[test]
    fn groups_split_by_fit() {
        let rows = vec![row("nar", 0.1), row("enar", 0.2), row("nar", 0.3)];
        let s = summarize(&rows, &[GroupKey::Fit]).unwrap();
        let medians: Vec<f64> = s.iter().filter(|r| r.metric == "theta_hat").map(|r| r.median).collect();
        assert_eq!(medians, vec![0.2, 0.2]);
    }
}
