//! Static SVG figures and their CSV data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{aggregate_curves, ConditionCurve, RunRecord};
use crate::env::Task;
use crate::error::{Error, Result};
use crate::probe::ProbeReport;

/// Colour stops from dark to light; every channel is nondecreasing, so
/// luminance never falls as `t` rises.
const RAMP: [[f64; 3]; 3] = [[20.0, 11.0, 52.0], [187.0, 55.0, 84.0], [252.0, 255.0, 164.0]];

/// Maps `t ∈ [0, 1]` (clamped) onto the dark-to-light reward ramp.
pub fn reward_color(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let pos = t * (RAMP.len() - 1) as f64;
    let i = (pos.floor() as usize).min(RAMP.len() - 2);
    let f = pos - i as f64;
    std::array::from_fn(|c| (RAMP[i][c] + f * (RAMP[i + 1][c] - RAMP[i][c])).round() as u8)
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

const SERIES: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Mean line with a ±1 std band per condition, success rate against episode.
pub fn learning_curve_svg(title: &str, curves: &[&ConditionCurve]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 60.0, 180.0, 40.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let len = curves.iter().map(|c| c.mean.len()).max().unwrap_or(0).max(2);
    let x = |i: usize| left + pw * i as f64 / (len - 1) as f64;
    let y = |v: f64| top + ph * (1.0 - v.clamp(0.0, 1.0));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, left + pw / 2.0, escape(title));
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" x2="{}" y1="{y:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"##,
            left + pw,
            left - 6.0,
            y(v) + 4.0,
            y = y(v)
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333333"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">episode (0 to {})</text>"#,
        left + pw / 2.0,
        h - 14.0,
        len - 1
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">windowed success</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (k, c) in curves.iter().enumerate() {
        let colour = SERIES[k % SERIES.len()];
        let upper = (0..c.mean.len()).map(|i| format!("{:.2},{:.2}", x(i), y(c.mean[i] + c.std[i])));
        let lower = (0..c.mean.len()).rev().map(|i| format!("{:.2},{:.2}", x(i), y(c.mean[i] - c.std[i])));
        let band: Vec<String> = upper.chain(lower).collect();
        let line: Vec<String> = (0..c.mean.len()).map(|i| format!("{:.2},{:.2}", x(i), y(c.mean[i]))).collect();
        let _ = writeln!(s, r#"<polygon points="{}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#, band.join(" "));
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, line.join(" "));
        let ly = top + 16.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" x2="{}" y1="{ly}" y2="{ly}" stroke="{colour}" stroke-width="3"/><text x="{}" y="{}">{} (n={})</text>"#,
            w - right + 12.0,
            w - right + 32.0,
            w - right + 38.0,
            ly + 4.0,
            escape(&c.condition.representation.to_string()),
            c.seeds
        );
    }
    s.push_str("</svg>\n");
    s
}

/// The 3-D projection as three pairwise panels, points coloured by reward.
pub fn projection_svg(report: &ProbeReport) -> String {
    let (panel, pad, top) = (220.0, 30.0, 50.0);
    let w = 3.0 * panel + 4.0 * pad;
    let h = panel + top + pad + 10.0;
    let (lo, hi) = report
        .rewards
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let episode = report.snapshot_episode.map_or(String::new(), |e| format!(", episode {e}"));
    let mut title = format!("{}{episode}: organization {:.3}", report.condition, report.organization.score);
    if report.collapsed {
        title.push_str(" (collapsed)");
    }
    if report.unsuccessful_fallback {
        title.push_str(" (unsuccessful episodes)");
    }
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(&title));
    for (p, (a, b)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
        let ox = pad + p as f64 * (panel + pad);
        let range = |c: usize| {
            let (mn, mx) = report
                .projected
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(m, n), q| (m.min(q[c]), n.max(q[c])));
            if mx > mn {
                (mn, mx - mn)
            } else {
                (mn - 0.5, 1.0)
            }
        };
        let ((ax, aspan), (bx, bspan)) = (range(a), range(b));
        let _ = writeln!(
            s,
            r##"<rect x="{ox}" y="{top}" width="{panel}" height="{panel}" fill="none" stroke="#333333"/><text x="{}" y="{}" text-anchor="middle">PC{} vs PC{}</text>"##,
            ox + panel / 2.0,
            top + panel + 18.0,
            a + 1,
            b + 1
        );
        // points sorted by reward so bright points draw last
        let mut order: Vec<usize> = (0..report.projected.len()).collect();
        order.sort_by(|&i, &j| report.rewards[i].total_cmp(&report.rewards[j]).then(i.cmp(&j)));
        for i in order {
            let q = &report.projected[i];
            let cx = ox + 8.0 + (panel - 16.0) * (q[a] - ax) / aspan;
            let cy = top + panel - 8.0 - (panel - 16.0) * (q[b] - bx) / bspan;
            let colour = hex(reward_color((report.rewards[i] - lo) / span));
            let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{colour}"/>"#);
        }
    }
    s.push_str("</svg>\n");
    s
}

fn curves_csv(curves: &[ConditionCurve]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["condition", "seeds", "episode", "mean", "std"])?;
    for c in curves {
        for (i, (m, sd)) in c.mean.iter().zip(&c.std).enumerate() {
            w.write_record([
                c.condition.to_string(),
                c.seeds.to_string(),
                (i + 1).to_string(),
                format!("{m:.6}"),
                format!("{sd:.6}"),
            ])?;
        }
    }
    into_string(w)
}

fn projection_csv(report: &ProbeReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pc1", "pc2", "pc3", "reward"])?;
    for (p, r) in report.projected.iter().zip(&report.rewards) {
        w.write_record([p[0].to_string(), p[1].to_string(), p[2].to_string(), r.to_string()])?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

fn report_stem(r: &ProbeReport, index: usize) -> String {
    match r.snapshot_episode {
        Some(e) => format!("projection_{}_ep{e}", r.condition),
        None => format!("projection_{}_{index}", r.condition),
    }
}

/// Writes learning curves per task and one scatter per probe report, each
/// with its CSV, into `out_dir`. Everything is rendered before the first
/// file is written.
pub fn render_report(records: &[RunRecord], reports: &[ProbeReport], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::invalid("no run records to report"));
    }
    let curves = aggregate_curves(records)?;
    let mut files: Vec<(PathBuf, String)> = vec![(out_dir.join("learning_curves.csv"), curves_csv(&curves)?)];
    for task in [Task::StaticStatic, Task::StaticRandom] {
        let of_task: Vec<&ConditionCurve> = curves.iter().filter(|c| c.condition.task == task).collect();
        if !of_task.is_empty() {
            files.push((
                out_dir.join(format!("learning_curve_{task}.svg")),
                learning_curve_svg(&format!("success rate, {task}"), &of_task),
            ));
        }
    }
    for (i, r) in reports.iter().enumerate() {
        let stem = report_stem(r, i);
        files.push((out_dir.join(format!("{stem}.svg")), projection_svg(r)));
        files.push((out_dir.join(format!("{stem}.csv")), projection_csv(r)?));
    }
    fs::create_dir_all(out_dir)?;
    for (path, body) in &files {
        fs::write(path, body)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{aggregate, full_grid};
    use crate::probe::Organization;

    fn luminance([r, g, b]: [u8; 3]) -> f64 {
        0.2126 * r as f64 + 0.7152 * g as f64 + 0.0722 * b as f64
    }

    #[test]
    fn ramp_is_monotone() {
        let mut prev = reward_color(0.0);
        for k in 1..=1000 {
            let c = reward_color(k as f64 / 1000.0);
            assert!((0..3).all(|i| c[i] >= prev[i]), "{prev:?} -> {c:?}");
            assert!(luminance(c) >= luminance(prev));
            prev = c;
        }
        assert!(luminance(reward_color(1.0)) > 4.0 * luminance(reward_color(0.0)));
        assert_eq!(reward_color(-3.0), reward_color(0.0));
        assert_eq!(reward_color(7.0), reward_color(1.0));
    }

    fn sample_report() -> ProbeReport {
        ProbeReport {
            condition: "a<b>".into(),
            snapshot_episode: Some(250),
            projected: (0..10).map(|i| vec![i as f64, (i * i) as f64, 1.0]).collect(),
            explained: vec![0.9, 0.1, 0.0],
            rewards: (0..10).map(|i| -(i as f64)).collect(),
            collapsed: false,
            organization: Organization {
                score: 0.5,
                collapsed: false,
                degenerate: false,
            },
            unsuccessful_fallback: true,
        }
    }

    #[test]
    fn svgs_parse_as_xml() {
        let c = aggregate(full_grid()[0], &[vec![0.1, 0.3, 0.6], vec![0.0, 0.2, 0.4]]);
        let single = aggregate(full_grid()[1], &[vec![0.5]]);
        for svg in [
            learning_curve_svg("t & u", &[&c, &single]),
            learning_curve_svg("empty", &[]),
            projection_svg(&sample_report()),
        ] {
            let doc = roxmltree::Document::parse(&svg).unwrap();
            assert_eq!(doc.root_element().tag_name().name(), "svg");
        }
        let svg = projection_svg(&sample_report());
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("circle")).count(), 30);
    }

    #[test]
    fn empty_records_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("reports");
        assert!(render_report(&[], &[sample_report()], &out).is_err());
        assert!(!out.exists());
    }
}
