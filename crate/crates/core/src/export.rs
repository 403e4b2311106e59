//! CSV writers shared by the runner and examples.

use std::io::{self, Write};

use crate::embedding::GrowthReport;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_kernel_csv<W: Write>(mut w: W, samples: &[(f64, f64)]) -> io::Result<()> {
    writeln!(w, "x,chi_x")?;
    for &(x, y) in samples {
        writeln!(w, "{},{}", fmt_num(x), fmt_num(y))?;
    }
    Ok(())
}

/// `epsilon,sup_norm` rows followed by a `#` line holding the report as JSON.
pub fn write_growth_csv<W: Write>(mut w: W, report: &GrowthReport) -> io::Result<()> {
    writeln!(w, "epsilon,sup_norm")?;
    for (e, s) in report.epsilon_schedule.iter().zip(&report.sup_norms) {
        writeln!(w, "{},{}", fmt_num(*e), fmt_num(*s))?;
    }
    let json = serde_json::to_string(report).map_err(io::Error::other)?;
    writeln!(w, "# {json}")
}

pub fn write_trace_csv<W: Write>(mut w: W, path: &[(f64, f64)]) -> io::Result<()> {
    writeln!(w, "tau,gamma")?;
    for &(tau, x) in path {
        writeln!(w, "{},{}", fmt_num(tau), fmt_num(x))?;
    }
    Ok(())
}

pub fn write_association_csv<W: Write>(mut w: W, schedule: &[f64], integrals: &[f64]) -> io::Result<()> {
    writeln!(w, "epsilon,integral_value")?;
    for (e, i) in schedule.iter().zip(integrals) {
        writeln!(w, "{},{}", fmt_num(*e), fmt_num(*i))?;
    }
    Ok(())
}

/// One row of the characteristic convergence table; missing brackets print empty.
pub fn write_convergence_csv<W: Write>(
    mut w: W,
    rows: impl IntoIterator<Item = (f64, f64, f64, Option<(f64, f64)>, f64)>,
) -> io::Result<()> {
    writeln!(w, "epsilon,eta,foot,x1,x2,error")?;
    for (eps, eta, foot, bracket, err) in rows {
        let (x1, x2) = bracket.map(|(a, b)| (fmt_num(a), fmt_num(b))).unwrap_or_default();
        writeln!(w, "{},{},{},{x1},{x2},{}", fmt_num(eps), fmt_num(eta), fmt_num(foot), fmt_num(err))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn convergence_rows_allow_missing_bracket() {
        let mut buf = Vec::new();
        write_convergence_csv(&mut buf, [(0.1, 0.4, 0.75, None, 0.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",,,"));
    }
}
