//! Plain-text tables, canonical JSON and a self-contained HTML page.

use std::fmt::Write as _;
use std::str::FromStr;

use attrbench_core::{Direction, Error, Metric, Result};

use crate::report::{DatasetReport, InstanceReport, MethodSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Html,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Format::Table),
            "json" => Ok(Format::Json),
            "html" => Ok(Format::Html),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

pub fn render_instance(report: &InstanceReport, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => json(report)?,
        Format::Table => instance_table(report),
        Format::Html => page(&format!("Explanations: {}", report.id), &instance_html(report)),
    })
}

pub fn render_dataset(report: &DatasetReport, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => json(report)?,
        Format::Table => dataset_table(report),
        Format::Html => {
            let mut body = format!(
                "<h1>{}</h1>\n<p>model <code>{}</code>, {} instance(s), K = {}</p>\n",
                escape(&report.corpus),
                escape(&report.model_id),
                report.selected.len(),
                report.top_k
            );
            body.push_str(&summary_html(&report.summary, &report.config.metrics));
            for inst in report.instances.iter().flatten() {
                body.push_str(&instance_html(inst));
            }
            page(&format!("Benchmark: {}", report.corpus), &body)
        }
    })
}

fn json<S: serde::Serialize>(value: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

fn arrow(d: Direction) -> &'static str {
    match d {
        Direction::HigherBetter => "↑",
        Direction::LowerBetter => "↓",
    }
}

/// Left-aligned first column, right-aligned rest.
fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            let pad = widths[c] - cell.chars().count();
            if c == 0 {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str("  ");
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn instance_table(r: &InstanceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "instance: {}", r.id);
    let _ = writeln!(out, "text: {}", r.text);
    let _ = writeln!(
        out,
        "target: {} ({}), p = {:.4}",
        r.target_label, r.target, r.probabilities[r.target]
    );
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out.push('\n');

    let mut rows = vec![std::iter::once("method".to_string()).chain(r.tokens.iter().cloned()).collect::<Vec<_>>()];
    if let Some(h) = &r.human_rationale {
        rows.push(
            std::iter::once("human".to_string())
                .chain(h.iter().map(|&b| if b { "*".into() } else { String::new() }))
                .collect(),
        );
    }
    for m in &r.methods {
        let mut row = vec![m.method.short_name().to_string()];
        match &m.explanation {
            Some(e) => row.extend(e.scores.iter().map(|s| format!("{s:+.3}"))),
            None => row.push("—".into()),
        }
        rows.push(row);
    }
    out.push_str(&table(&rows));

    let metrics: Vec<(Metric, Direction)> = r
        .methods
        .iter()
        .find(|m| !m.metrics.is_empty())
        .map(|m| m.metrics.iter().map(|s| (s.metric, s.direction)).collect())
        .unwrap_or_default();
    if !metrics.is_empty() {
        out.push('\n');
        let mut rows = vec![std::iter::once("method".to_string())
            .chain(metrics.iter().map(|(m, d)| format!("{}{}", m.name(), arrow(*d))))
            .collect::<Vec<_>>()];
        for m in &r.methods {
            let mut row = vec![m.method.short_name().to_string()];
            row.extend(metrics.iter().map(|(metric, _)| {
                if m.error.is_some() && m.metrics.is_empty() {
                    "—".into()
                } else {
                    fmt_value(m.metric(*metric))
                }
            }));
            rows.push(row);
        }
        out.push_str(&table(&rows));
    }
    for m in r.methods.iter().filter(|m| m.error.is_some()) {
        let _ = writeln!(out, "{} error: {}", m.method.short_name(), m.error.as_deref().unwrap_or(""));
    }
    out
}

fn dataset_table(r: &DatasetReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "corpus: {}", r.corpus);
    let _ = writeln!(out, "model: {}", r.model_id);
    let _ = writeln!(out, "instances: {}, K = {}, seed = {}", r.selected.len(), r.top_k, r.config.seed);
    out.push('\n');
    let mut rows = vec![std::iter::once("method".to_string())
        .chain(r.config.metrics.iter().map(|m| format!("{}{}", m.name(), arrow(m.direction()))))
        .chain(std::iter::once("failed".to_string()))
        .collect::<Vec<_>>()];
    for s in &r.summary {
        let mut row = vec![s.method.short_name().to_string()];
        row.extend(r.config.metrics.iter().map(|&m| match s.metric(m) {
            Some(ms) if ms.mean.is_some() => format!("{} (n={})", fmt_value(ms.mean), ms.count),
            _ => "n/a (n=0)".into(),
        }));
        row.push(s.failures.to_string());
        rows.push(row);
    }
    out.push_str(&table(&rows));
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Diverging red/blue colour for a score scaled into `[-1, 1]`; white at 0.
pub fn heat_color(scaled: f64) -> String {
    let v = scaled.clamp(-1.0, 1.0);
    let fade = |t: f64| (255.0 * (1.0 - t)).round() as u8;
    if v >= 0.0 {
        format!("#ff{:02x}{:02x}", fade(v), fade(v))
    } else {
        format!("#{:02x}{:02x}ff", fade(-v), fade(-v))
    }
}

/// Green shading for a metric cell; `goodness` in `[0, 1]`, darker is
/// better.
pub fn metric_color(goodness: f64) -> String {
    let g = goodness.clamp(0.0, 1.0);
    let channel = |full: f64| (255.0 - (255.0 - full) * (0.15 + 0.7 * g)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", channel(40.0), channel(160.0), channel(80.0))
}

/// Position of `v` between the worst and best of `values`, honouring the
/// metric direction.
pub fn goodness(v: f64, values: &[f64], direction: Direction) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return 1.0;
    }
    let t = (v - lo) / (hi - lo);
    match direction {
        Direction::HigherBetter => t,
        Direction::LowerBetter => 1.0 - t,
    }
}

fn instance_html(r: &InstanceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<section>\n<h2>{}</h2>\n<p>{}</p>\n<p>target <b>{}</b> ({}), p = {:.4}</p>",
        escape(&r.id),
        escape(&r.text),
        escape(&r.target_label),
        r.target,
        r.probabilities[r.target]
    );
    out.push_str("<table class=\"heat\">\n<tr><th></th>");
    for t in &r.tokens {
        let _ = write!(out, "<th>{}</th>", escape(t));
    }
    out.push_str("</tr>\n");
    if let Some(h) = &r.human_rationale {
        out.push_str("<tr><th>human</th>");
        for &b in h {
            out.push_str(if b { "<td class=\"human\">●</td>" } else { "<td></td>" });
        }
        out.push_str("</tr>\n");
    }
    for m in &r.methods {
        let _ = write!(out, "<tr><th>{}</th>", m.method.name());
        match &m.explanation {
            Some(e) => {
                // Display-only scaling; stored scores are untouched.
                let max = e.scores.iter().fold(0.0f64, |a, s| a.max(s.abs()));
                for &s in &e.scores {
                    let scaled = if max > 0.0 { s / max } else { 0.0 };
                    let _ = write!(
                        out,
                        "<td style=\"background:{}\" title=\"{s}\">{s:+.3}</td>",
                        heat_color(scaled)
                    );
                }
            }
            None => {
                let _ = write!(
                    out,
                    "<td colspan=\"{}\" class=\"error\">{}</td>",
                    r.tokens.len().max(1),
                    escape(m.error.as_deref().unwrap_or("failed"))
                );
            }
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>\n");

    let metrics: Vec<Metric> = r
        .methods
        .iter()
        .find(|m| !m.metrics.is_empty())
        .map(|m| m.metrics.iter().map(|s| s.metric).collect())
        .unwrap_or_default();
    if !metrics.is_empty() {
        let cells: Vec<(String, Vec<Option<f64>>)> = r
            .methods
            .iter()
            .map(|m| (m.method.name().to_string(), metrics.iter().map(|&x| m.metric(x)).collect()))
            .collect();
        out.push_str(&metric_table_html(&metrics, &cells, |v| fmt_value(v)));
    }
    out.push_str("</section>\n");
    out
}

fn summary_html(summary: &[MethodSummary], metrics: &[Metric]) -> String {
    let cells: Vec<(String, Vec<Option<f64>>)> = summary
        .iter()
        .map(|s| {
            (
                s.method.name().to_string(),
                metrics.iter().map(|&m| s.metric(m).and_then(|x| x.mean)).collect(),
            )
        })
        .collect();
    let counts: Vec<Vec<usize>> = summary
        .iter()
        .map(|s| metrics.iter().map(|&m| s.metric(m).map_or(0, |x| x.count)).collect())
        .collect();
    let mut html = metric_table_html(metrics, &cells, |v| fmt_value(v));
    html.push_str("<p class=\"counts\">instances per cell: ");
    for (s, c) in summary.iter().zip(&counts) {
        let _ = write!(html, "{} {:?}; ", s.method.short_name(), c);
    }
    html.push_str("</p>\n");
    html
}

fn metric_table_html(
    metrics: &[Metric],
    rows: &[(String, Vec<Option<f64>>)],
    fmt: impl Fn(Option<f64>) -> String,
) -> String {
    let mut out = String::from("<table class=\"metrics\">\n<tr><th></th>");
    for m in metrics {
        let _ = write!(out, "<th>{} {}</th>", m.name(), arrow(m.direction()));
    }
    out.push_str("</tr>\n");
    let columns: Vec<Vec<f64>> = (0..metrics.len())
        .map(|c| rows.iter().filter_map(|(_, v)| v[c]).collect())
        .collect();
    for (name, values) in rows {
        let _ = write!(out, "<tr><th>{}</th>", escape(name));
        for (c, v) in values.iter().enumerate() {
            match v {
                Some(x) => {
                    let g = goodness(*x, &columns[c], metrics[c].direction());
                    let _ = write!(out, "<td style=\"background:{}\">{}</td>", metric_color(g), fmt(*v));
                }
                None => {
                    let _ = write!(out, "<td class=\"na\">{}</td>", fmt(None));
                }
            }
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>\n");
    out
}

fn page(title: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>\n\
body {{ font-family: sans-serif; margin: 2em; }}\n\
table {{ border-collapse: collapse; margin: 1em 0; }}\n\
th, td {{ border: 1px solid #ccc; padding: 4px 8px; text-align: center; }}\n\
td.na {{ color: #999; }}\n\
td.error {{ color: #a00; text-align: left; }}\n\
td.human {{ color: #444; }}\n\
</style>\n</head>\n<body>\n{}</body>\n</html>\n",
        escape(title),
        body
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_white() {
        assert_eq!(heat_color(0.0), "#ffffff");
        assert_eq!(heat_color(1.0), "#ff0000");
        assert_eq!(heat_color(-1.0), "#0000ff");
    }

    #[test]
    fn shading_follows_direction() {
        let vals = [0.1, 0.5];
        assert_eq!(goodness(0.5, &vals, Direction::HigherBetter), 1.0);
        assert_eq!(goodness(0.5, &vals, Direction::LowerBetter), 0.0);
        assert_ne!(metric_color(1.0), metric_color(0.0));
    }

    #[test]
    fn table_aligns_columns() {
        let t = table(&[
            vec!["a".into(), "1".into()],
            vec!["long".into(), "100".into()],
        ]);
        assert_eq!(t, "a       1\nlong  100\n");
    }

    #[test]
    fn html_is_escaped() {
        assert_eq!(escape("<b>&'\""), "&lt;b&gt;&amp;&#39;&quot;");
    }
}
