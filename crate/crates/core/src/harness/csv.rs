use std::io::Write;

use super::run::{AlgoTrace, AveragedRecord};
use crate::Result;

pub const TRACE_HEADER: &str = "trial,t,sqrt_mse,sqrt_mspbe,gamma_p,sigma_fro,T,diverged";
pub const AVERAGE_HEADER: &str = "t,sqrt_mse,sqrt_mse_var,sqrt_mspbe,gamma_p,sigma_fro,T,n_diverged";

/// 17 significant digits; NaN becomes an empty field.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn write_comments(w: &mut dyn Write, algo: &str, provenance: &[String]) -> Result<()> {
    writeln!(w, "# algo={algo}")?;
    for line in provenance {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// Per-trial records of one algorithm.
pub fn write_trace(w: &mut dyn Write, trace: &AlgoTrace, provenance: &[String]) -> Result<()> {
    write_comments(w, &trace.algo, provenance)?;
    writeln!(w, "{TRACE_HEADER}")?;
    for tr in &trace.trials {
        for r in &tr.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                tr.trial,
                r.t,
                fmt_f64(r.sqrt_mse),
                fmt_opt(r.sqrt_mspbe),
                fmt_f64(r.gamma_p),
                fmt_f64(r.sigma_fro),
                fmt_f64(r.threshold),
                u8::from(r.diverged)
            )?;
        }
    }
    Ok(())
}

/// Cross-trial averages of one algorithm.
pub fn write_average(w: &mut dyn Write, algo: &str, rows: &[AveragedRecord], provenance: &[String]) -> Result<()> {
    write_comments(w, algo, provenance)?;
    writeln!(w, "{AVERAGE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.t,
            fmt_f64(r.sqrt_mse),
            fmt_f64(r.sqrt_mse_var),
            fmt_opt(r.sqrt_mspbe),
            fmt_f64(r.gamma_p),
            fmt_f64(r.sigma_fro),
            fmt_f64(r.threshold),
            r.n_diverged
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::TrialTrace;
    use crate::objectives::TraceRecord;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn trace_layout() {
        let trace = AlgoTrace {
            algo: "td0".into(),
            trials: vec![TrialTrace {
                trial: 0,
                records: vec![TraceRecord {
                    t: 100,
                    sqrt_mse: 1.5,
                    sqrt_mspbe: None,
                    gamma_p: f64::NAN,
                    sigma_fro: f64::NAN,
                    threshold: f64::NAN,
                    diverged: false,
                }],
            }],
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace, &["param c=0.1".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, ["# algo=td0", "# param c=0.1", TRACE_HEADER, "0,100,1.5000000000000000e0,,,,,0"]);
    }
}
