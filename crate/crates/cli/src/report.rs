//! Result reporting: CSV and JSON tables with a stable column order, and a
//! deterministic SVG forest plot (one row per method, point plus interval
//! whiskers).

use std::fmt::Write as _;
use std::io::Write;

use mrkit::alice::BiasReport;
use mrkit::types::EstimateResult;

use crate::error::Result;

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        Some(x) if x.is_infinite() && x > 0.0 => "inf".to_string(),
        Some(x) if x.is_infinite() => "-inf".to_string(),
        Some(_) => "nan".to_string(),
        None => "NA".to_string(),
    }
}

/// One row per estimate: `method,beta_hat,se,ci_lower,ci_upper,diagnostics`.
/// Diagnostics flatten to `key=value` pairs joined by `;`, in key order.
pub fn write_estimates_csv<W: Write>(results: &[EstimateResult], mut out: W) -> Result<()> {
    writeln!(out, "method,beta_hat,se,ci_lower,ci_upper,diagnostics")?;
    for r in results {
        let diags: Vec<String> =
            r.diagnostics.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method,
            r.beta_hat,
            fmt_opt(r.se),
            fmt_opt(r.ci_lower),
            fmt_opt(r.ci_upper),
            diags.join(";"),
        )?;
    }
    Ok(())
}

pub fn write_estimates_json<W: Write>(results: &[EstimateResult], mut out: W) -> Result<()> {
    let text = serde_json::to_string_pretty(results)?;
    writeln!(out, "{text}")?;
    Ok(())
}

/// Per-estimator rows of a simulation report:
/// `estimator,mean,mc_se,predicted_mean,within_tolerance,n_used,n_failures`.
pub fn write_bias_csv<W: Write>(report: &BiasReport, mut out: W) -> Result<()> {
    writeln!(out, "estimator,mean,mc_se,predicted_mean,within_tolerance,n_used,n_failures")?;
    for s in &report.estimators {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.estimator,
            s.mean,
            s.mc_se,
            fmt_opt(s.predicted_mean),
            s.within_tolerance.map(|b| b.to_string()).unwrap_or_else(|| "NA".to_string()),
            s.n_used,
            s.n_failures,
        )?;
    }
    Ok(())
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.4}")
}

/// Deterministic forest plot. Layout depends only on the input values, and
/// every coordinate is printed with fixed precision, so equal inputs yield
/// byte-identical SVG.
pub fn forest_svg(results: &[EstimateResult]) -> String {
    const WIDTH: f64 = 720.0;
    const ROW: f64 = 30.0;
    const LEFT: f64 = 150.0;
    const RIGHT: f64 = 590.0;
    const TOP: f64 = 50.0;

    let height = TOP + ROW * results.len() as f64 + 40.0;

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in results {
        lo = lo.min(r.ci_lower.unwrap_or(r.beta_hat)).min(r.beta_hat);
        hi = hi.max(r.ci_upper.unwrap_or(r.beta_hat)).max(r.beta_hat);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = -1.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.08 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let x_of = |v: f64| LEFT + (v - lo) / (hi - lo) * (RIGHT - LEFT);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="monospace" font-size="15" fill="black">Causal effect estimates</text>"#,
        fmt_coord(LEFT)
    );

    // Zero reference line when zero is in range.
    if lo < 0.0 && hi > 0.0 {
        let x = fmt_coord(x_of(0.0));
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="grey" stroke-dasharray="4,3" stroke-width="1"/>"#,
            fmt_coord(TOP - 10.0),
            fmt_coord(TOP + ROW * results.len() as f64)
        );
    }

    for (i, r) in results.iter().enumerate() {
        let y = TOP + ROW * (i as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{}" font-family="monospace" font-size="13" fill="black">{}</text>"#,
            fmt_coord(y + 4.0),
            r.method
        );
        if let (Some(l), Some(u)) = (r.ci_lower, r.ci_upper) {
            if l.is_finite() && u.is_finite() {
                let (xl, xu) = (fmt_coord(x_of(l)), fmt_coord(x_of(u)));
                let yy = fmt_coord(y);
                let _ = writeln!(
                    svg,
                    r#"<line x1="{xl}" y1="{yy}" x2="{xu}" y2="{yy}" stroke="black" stroke-width="1.5"/>"#
                );
                for x in [xl, xu] {
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black" stroke-width="1.5"/>"#,
                        fmt_coord(y - 5.0),
                        fmt_coord(y + 5.0)
                    );
                }
            }
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="8" height="8" fill="black"/>"#,
            fmt_coord(x_of(r.beta_hat) - 4.0),
            fmt_coord(y - 4.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="black">{}</text>"#,
            fmt_coord(RIGHT + 14.0),
            fmt_coord(y + 4.0),
            format_estimate(r)
        );
    }

    // Axis with three ticks.
    let axis_y = TOP + ROW * results.len() as f64 + 12.0;
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="1"/>"#,
        fmt_coord(LEFT),
        fmt_coord(axis_y),
        fmt_coord(RIGHT),
        fmt_coord(axis_y)
    );
    for value in [lo, (lo + hi) / 2.0, hi] {
        let x = fmt_coord(x_of(value));
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black" stroke-width="1"/>"#,
            fmt_coord(axis_y),
            fmt_coord(axis_y + 5.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" font-family="monospace" font-size="11" fill="black" text-anchor="middle">{}</text>"#,
            fmt_coord(axis_y + 18.0),
            format!("{value:.3}")
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_estimate(r: &EstimateResult) -> String {
    match (r.ci_lower, r.ci_upper) {
        (Some(l), Some(u)) if l.is_finite() && u.is_finite() => {
            format!("{:.4} [{:.4}, {:.4}]", r.beta_hat, l, u)
        }
        _ => format!("{:.4}", r.beta_hat),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mrkit::types::Method;

    fn result(method: Method, beta: f64, se: Option<f64>) -> EstimateResult {
        let mut r = EstimateResult::new(method, beta);
        if let Some(se) = se {
            r = r.with_wald_ci(se, 0.05);
        }
        r
    }

    #[test]
    fn single_result_gives_one_row_csv() {
        let rows = [result(Method::Ivw, 0.5, Some(0.1))];
        let mut buf = Vec::new();
        write_estimates_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "method,beta_hat,se,ci_lower,ci_upper,diagnostics");
        assert!(lines[1].starts_with("ivw,0.5,0.1,"));
    }

    #[test]
    fn svg_is_byte_deterministic() {
        let rows = [
            result(Method::Ivw, 0.5, Some(0.1)),
            result(Method::WeightedMedian, 0.5, Some(0.1)),
        ];
        let a = forest_svg(&rows);
        let b = forest_svg(&rows);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
    }

    #[test]
    fn missing_ci_omits_whiskers() {
        let with_ci = forest_svg(&[result(Method::Ivw, 0.5, Some(0.1))]);
        let without_ci = forest_svg(&[result(Method::ModeBased, 0.5, None)]);
        assert!(with_ci.matches("<line").count() > without_ci.matches("<line").count());
        assert!(without_ci.contains("<rect"));
    }
}
