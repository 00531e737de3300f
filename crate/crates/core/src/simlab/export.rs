use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::simlab::{aggregate, RegretCurve, RegretTrace};

pub const CSV_HEADER: &str =
    "iteration,policy,mean_stepwise_regret,std_stepwise_regret,mean_cumulative_regret";

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// One row per (policy, iteration); iterations are 1-based.
pub fn curves_to_csv(curves: &[RegretCurve]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in curves {
        for i in 0..c.mean_stepwise.len() {
            let _ = writeln!(
                out,
                "{},{},{:.10},{:.10},{:.10}",
                i + 1,
                c.policy,
                c.mean_stepwise[i],
                c.std_stepwise[i],
                c.mean_cumulative[i]
            );
        }
    }
    out
}

/// Mean stepwise regret per policy with dashed ±1 std bands.
pub fn curves_to_svg(curves: &[RegretCurve]) -> String {
    let (w, h) = (800.0, 480.0);
    let (left, right, top, bottom) = (70.0, 170.0, 30.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let len = curves
        .iter()
        .map(|c| c.mean_stepwise.len())
        .max()
        .unwrap_or(1)
        .max(1);
    let ymax = curves
        .iter()
        .flat_map(|c| {
            c.mean_stepwise
                .iter()
                .zip(&c.std_stepwise)
                .map(|(m, s)| m + s)
        })
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.05;
    let x = |i: usize| {
        left + if len > 1 {
            pw * i as f64 / (len - 1) as f64
        } else {
            pw / 2.0
        }
    };
    let y = |v: f64| top + ph * (1.0 - (v / ymax).clamp(0.0, 1.0));
    let path = |vals: &[f64]| -> String {
        vals.iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        top + ph,
        left + pw,
        top + ph
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        top + ph
    );
    for k in 0..=4 {
        let v = ymax * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            left - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{left}" y="{}">1</text>"#, top + ph + 18.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{len}</text>"#,
        left + pw,
        top + ph + 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">iteration</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">stepwise regret</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (n, c) in curves.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let upper: Vec<f64> = c
            .mean_stepwise
            .iter()
            .zip(&c.std_stepwise)
            .map(|(m, s)| m + s)
            .collect();
        let lower: Vec<f64> = c
            .mean_stepwise
            .iter()
            .zip(&c.std_stepwise)
            .map(|(m, s)| m - s)
            .collect();
        for band in [&upper, &lower] {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1" stroke-dasharray="4 3" points="{}"/>"#,
                path(band)
            );
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path(&c.mean_stepwise)
        );
        let ly = top + 10.0 + 20.0 * n as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            c.policy
        );
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportPaths {
    pub csv: PathBuf,
    pub svg: PathBuf,
}

/// Writes `regret.csv` and `regret.svg` into `dir`, creating it if needed.
pub fn export_results(traces: &[RegretTrace], dir: &Path) -> Result<ExportPaths> {
    if traces.is_empty() {
        return Err(Error::Config("no regret traces to export".into()));
    }
    let curves = aggregate(traces)?;
    let io = |p: &Path, e: std::io::Error| Error::Io {
        context: p.display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let paths = ExportPaths {
        csv: dir.join("regret.csv"),
        svg: dir.join("regret.svg"),
    };
    std::fs::write(&paths.csv, curves_to_csv(&curves)).map_err(|e| io(&paths.csv, e))?;
    std::fs::write(&paths.svg, curves_to_svg(&curves)).map_err(|e| io(&paths.svg, e))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::PolicyKind;

    fn trace(policy: PolicyKind, trial: usize, values: Vec<f64>) -> RegretTrace {
        RegretTrace::new(policy, trial, trial as u64, 4, values)
    }

    #[test]
    fn empty_export_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        assert!(export_results(&[], &out).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn single_trace_has_one_row_per_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let paths = export_results(
            &[trace(PolicyKind::Rucb, 0, vec![0.5, 0.4, 0.1])],
            dir.path(),
        )
        .unwrap();
        let csv = std::fs::read_to_string(&paths.csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "3,rucb,0.1000000000,0.0000000000,1.0000000000");
        assert!(std::fs::read_to_string(&paths.svg)
            .unwrap()
            .starts_with("<svg"));
    }

    #[test]
    fn reexport_is_byte_identical() {
        let traces = vec![
            trace(PolicyKind::CorrDuel, 0, vec![0.9, 0.3]),
            trace(PolicyKind::Btm, 0, vec![0.8, 0.7]),
            trace(PolicyKind::CorrDuel, 1, vec![0.7, 0.1]),
            trace(PolicyKind::Btm, 1, vec![0.6, 0.9]),
        ];
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let pa = export_results(&traces, a.path()).unwrap();
        let pb = export_results(&traces, b.path()).unwrap();
        assert_eq!(
            std::fs::read(pa.csv).unwrap(),
            std::fs::read(pb.csv).unwrap()
        );
        assert_eq!(
            std::fs::read(pa.svg).unwrap(),
            std::fs::read(pb.svg).unwrap()
        );
    }
}
