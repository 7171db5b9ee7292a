//! Deterministic experiment outputs.
//!
//! Everything here is byte-identical for identical inputs: floats use
//! Rust's shortest round-trip decimal formatting, JSON keys follow struct
//! declaration order, and no wall-clock data appears (run timestamps
//! belong in a sidecar metadata file, never in data files).

use std::io::Write;

use crate::bench::{BenchReport, ExponentFit};
use crate::error::{Error, Result};
use crate::illposed::IllposedCell;

fn check_csv_token(what: &str, token: &str) -> Result<()> {
    if token.is_empty() || token.contains([',', '"', '\n', '\r']) {
        return Err(Error::InvalidConfig(format!(
            "{what} {token:?} cannot be used as a CSV token"
        )));
    }
    Ok(())
}

/// Write norm-inflation cells as CSV with a fixed column set.
pub fn write_illposed_csv(out: &mut impl Write, cells: &[IllposedCell]) -> Result<()> {
    writeln!(out, "alpha,N,theta,t,ratio,proxy_exponent,max_resonance_norm")?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.alpha, c.n, c.theta, c.t, c.ratio, c.proxy_exponent, c.max_resonance_norm
        )?;
    }
    Ok(())
}

/// Write one inequality bench as CSV: fixed `inequality` first column,
/// then the per-sample parameter columns (taken from the first sample and
/// required to be identical across the report), then `seed,lhs,rhs,ratio`.
pub fn write_bench_csv(out: &mut impl Write, report: &BenchReport) -> Result<()> {
    check_csv_token("inequality name", &report.inequality)?;
    let names: Vec<&str> = report
        .samples
        .first()
        .map(|s| s.params.iter().map(|(k, _)| k.as_str()).collect())
        .unwrap_or_default();
    for name in &names {
        check_csv_token("parameter name", name)?;
    }
    write!(out, "inequality")?;
    for name in &names {
        write!(out, ",{name}")?;
    }
    writeln!(out, ",seed,lhs,rhs,ratio")?;
    for s in &report.samples {
        let ok = s.params.len() == names.len()
            && s.params.iter().zip(&names).all(|((k, _), n)| k == n);
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "bench samples disagree on parameter columns: expected {names:?}, got {:?}",
                s.params.iter().map(|(k, _)| k).collect::<Vec<_>>()
            )));
        }
        write!(out, "{}", report.inequality)?;
        for (_, v) in &s.params {
            write!(out, ",{v}")?;
        }
        writeln!(out, ",{},{},{},{}", s.seed, s.lhs, s.rhs, s.ratio)?;
    }
    Ok(())
}

/// Headline numbers of a bench run, without the per-sample table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchSummary {
    pub inequality: String,
    pub sample_count: usize,
    pub max_ratio: f64,
    /// Fitted `log2`-slopes keyed by the swept parameter name.
    pub fits: Vec<(String, ExponentFit)>,
}

impl From<&BenchReport> for BenchSummary {
    fn from(report: &BenchReport) -> Self {
        BenchSummary {
            inequality: report.inequality.clone(),
            sample_count: report.samples.len(),
            max_ratio: report.max_ratio,
            fits: report.fits.clone(),
        }
    }
}

/// Write the summaries of one or more bench runs as pretty JSON.
pub fn write_bench_summary_json(out: &mut impl Write, reports: &[BenchReport]) -> Result<()> {
    let summaries: Vec<BenchSummary> = reports.iter().map(BenchSummary::from).collect();
    serde_json::to_writer_pretty(&mut *out, &summaries)
        .map_err(|e| Error::MalformedFile(format!("summary serialization: {e}")))?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::BenchSample;

    fn sample_report() -> BenchReport {
        BenchReport {
            inequality: "l4_strichartz".into(),
            samples: vec![
                BenchSample {
                    params: vec![("n".into(), 2.0), ("m".into(), 0.5)],
                    seed: 7,
                    lhs: 1.5,
                    rhs: 3.0,
                    ratio: 0.5,
                },
                BenchSample {
                    params: vec![("n".into(), 4.0), ("m".into(), 0.5)],
                    seed: 8,
                    lhs: 0.25,
                    rhs: 2.0,
                    ratio: 0.125,
                },
            ],
            max_ratio: 0.5,
            fits: vec![(
                "n".into(),
                ExponentFit {
                    exponent: -2.0,
                    std_error: 0.0,
                    residual_rms: 0.0,
                    levels: 2,
                },
            )],
        }
    }

    #[test]
    fn illposed_csv_is_pinned() {
        let cells = vec![IllposedCell {
            alpha: 2.0,
            n: 16.0,
            theta: 0.25,
            t: 1.0,
            ratio: 0.5,
            proxy_exponent: -0.21875,
            max_resonance_norm: 0.0078125,
        }];
        let mut bytes = Vec::new();
        write_illposed_csv(&mut bytes, &cells).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "alpha,N,theta,t,ratio,proxy_exponent,max_resonance_norm\n\
             2,16,0.25,1,0.5,-0.21875,0.0078125\n"
        );
    }

    #[test]
    fn bench_csv_is_pinned() {
        let mut bytes = Vec::new();
        write_bench_csv(&mut bytes, &sample_report()).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "inequality,n,m,seed,lhs,rhs,ratio\n\
             l4_strichartz,2,0.5,7,1.5,3,0.5\n\
             l4_strichartz,4,0.5,8,0.25,2,0.125\n"
        );
    }

    #[test]
    fn bench_csv_rejects_mismatched_columns() {
        let mut report = sample_report();
        report.samples[1].params[0].0 = "k".into();
        let err = write_bench_csv(&mut Vec::new(), &report).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));

        let mut report = sample_report();
        report.inequality = "bad,name".into();
        let err = write_bench_csv(&mut Vec::new(), &report).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn summary_json_is_deterministic_with_ordered_keys() {
        let report = sample_report();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_bench_summary_json(&mut a, std::slice::from_ref(&report)).unwrap();
        write_bench_summary_json(&mut b, std::slice::from_ref(&report)).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let pos = |key: &str| text.find(key).unwrap_or_else(|| panic!("missing {key}"));
        assert!(pos("\"inequality\"") < pos("\"sample_count\""));
        assert!(pos("\"sample_count\"") < pos("\"max_ratio\""));
        assert!(pos("\"max_ratio\"") < pos("\"fits\""));
        assert!(pos("\"exponent\"") < pos("\"levels\""));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn csv_floats_round_trip() {
        let gnarly = [0.1 + 0.2, 1e-12, -3.5e7, 2.0_f64.powi(-40), 1.0 / 3.0];
        for v in gnarly {
            let printed = format!("{v}");
            assert_eq!(printed.parse::<f64>().unwrap(), v, "{printed}");
        }
    }
}
