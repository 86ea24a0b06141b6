use std::fmt::Write;

use super::{EmbeddedPoint, EvalReport};

/// Text table in the usual precision / recall / f1 / support layout.
pub fn format_table(report: &EvalReport, class_names: &[String]) -> String {
    let name = |c: usize| class_names.get(c).cloned().unwrap_or_else(|| c.to_string());
    let width = (0..report.per_class.len()).map(|c| name(c).len()).chain([12]).max().unwrap_or(12);
    let mut s = String::new();
    let _ = writeln!(s, "{:>width$}  {:>9} {:>9} {:>9} {:>9}", "", "precision", "recall", "f1-score", "support");
    for (c, m) in report.per_class.iter().enumerate() {
        let flag = if m.precision_undefined { " *" } else { "" };
        let _ = writeln!(s, "{:>width$}  {:>9.2} {:>9.2} {:>9.2} {:>9}{flag}", name(c), m.precision, m.recall, m.f1, m.support);
    }
    let total = report.confusion.total();
    let _ = writeln!(s);
    let _ = writeln!(s, "{:>width$}  {:>9} {:>9} {:>9.2} {:>9}", "accuracy", "", "", report.accuracy, total);
    for (label, a) in [("macro avg", report.macro_avg), ("weighted avg", report.weighted_avg)] {
        let _ = writeln!(s, "{:>width$}  {:>9.2} {:>9.2} {:>9.2} {:>9}", label, a.precision, a.recall, a.f1, total);
    }
    if report.per_class.iter().any(|m| m.precision_undefined) {
        let _ = writeln!(s, "* no samples predicted for this class; precision reported as 0");
    }
    s
}

/// One row per class with raw and rounded scores.
pub fn metrics_csv(report: &EvalReport, class_names: &[String]) -> String {
    let mut s = String::from("class,name,precision,recall,f1,support,precision_2dp,recall_2dp,f1_2dp,precision_undefined\n");
    for (c, (m, r)) in report.per_class.iter().zip(&report.rounded.per_class).enumerate() {
        let name = class_names.get(c).map_or("", String::as_str);
        let _ = writeln!(
            s,
            "{c},{name},{},{},{},{},{:.2},{:.2},{:.2},{}",
            m.precision, m.recall, m.f1, m.support, r.precision, r.recall, r.f1, m.precision_undefined
        );
    }
    s
}

pub fn embeddings_csv(points: &[EmbeddedPoint]) -> String {
    let mut s = String::from("x,y,true,pred\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.x, p.y, p.true_label, p.predicted);
    }
    s
}

const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

/// Scatter plot of the embedding, colored by predicted class, with a legend.
pub fn embeddings_svg(points: &[EmbeddedPoint], class_names: &[String]) -> String {
    const SIZE: f64 = 600.0;
    const MARGIN: f64 = 40.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (sx, sy) = (span(x0, x1), span(y0, y1));
    let px = |x: f64| MARGIN + (x - x0) / sx * (SIZE - 2.0 * MARGIN);
    let py = |y: f64| SIZE - MARGIN - (y - y0) / sy * (SIZE - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for p in points {
        let color = PALETTE[p.predicted % PALETTE.len()];
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" fill-opacity="0.7"/>"#, px(p.x), py(p.y));
    }
    let classes = points.iter().map(|p| p.predicted.max(p.true_label) + 1).max().unwrap_or(0).max(class_names.len());
    for c in 0..classes {
        let y = 20.0 + 16.0 * c as f64;
        let label = class_names.get(c).cloned().unwrap_or_else(|| c.to_string());
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#,
            SIZE - 150.0,
            y - 9.0,
            PALETTE[c % PALETTE.len()]
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" font-size="11" font-family="sans-serif">{}</text>"#,
            SIZE - 135.0,
            xml_escape(&label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
