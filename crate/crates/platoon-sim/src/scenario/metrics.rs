//! CSV emission for the per-tick metrics stream and run summaries.
//!
//! Output is deterministic: floating-point columns are printed with nine
//! significant digits in exponent form, integers and flags verbatim, rows
//! newline-terminated. Re-running the same configuration and seed produces
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::scenario::run::{MetricsRecord, RunSummary};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Nine significant digits, exponent notation (gnuplot-friendly).
pub fn format_float(v: f64) -> String {
    format!("{v:.8e}")
}

/// Header for the per-tick metrics stream with `n_followers` follower column
/// groups: `iteration,time_s,gap1_m,steer1_rad,speed1_mps,lost1,...`.
pub fn metrics_header(n_followers: usize) -> String {
    let mut h = String::from("iteration,time_s");
    for k in 1..=n_followers {
        let _ = write!(h, ",gap{k}_m,steer{k}_rad,speed{k}_mps,lost{k}");
    }
    h
}

/// Renders the metrics stream as CSV text. An empty stream yields a
/// header-only file.
pub fn render_metrics(records: &[MetricsRecord], n_followers: usize) -> String {
    let mut out = metrics_header(n_followers);
    out.push('\n');
    for r in records {
        debug_assert_eq!(r.followers.len(), n_followers);
        let _ = write!(out, "{},{}", r.iteration, format_float(r.time_s));
        for f in &r.followers {
            let _ = write!(
                out,
                ",{},{},{},{}",
                format_float(f.gap),
                format_float(f.steer),
                format_float(f.speed),
                u8::from(f.lost)
            );
        }
        out.push('\n');
    }
    out
}

/// Header for the summary table with `n_followers` follower column groups.
pub fn summary_header(n_followers: usize) -> String {
    let mut h = String::from("cam_hz,seed,ticks");
    for k in 1..=n_followers {
        let _ = write!(
            h,
            ",rms_gap{k}_m,max_gap{k}_m,min_gap{k}_m,steer_std{k}_rad,lost_events{k}"
        );
    }
    h.push_str(",cams_sent,cams_received,cams_dropped,cams_out_of_range");
    h
}

/// Renders summaries (one row per run) as CSV text.
pub fn render_summaries(summaries: &[RunSummary], n_followers: usize) -> String {
    let mut out = summary_header(n_followers);
    out.push('\n');
    for s in summaries {
        debug_assert_eq!(s.followers.len(), n_followers);
        let _ = write!(out, "{},{},{}", format_float(s.cam_hz), s.seed, s.ticks);
        for f in &s.followers {
            let _ = write!(
                out,
                ",{},{},{},{},{}",
                format_float(f.rms_gap_error),
                format_float(f.max_gap),
                format_float(f.min_gap),
                format_float(f.steer_std),
                f.lost_track_events
            );
        }
        let _ = write!(
            out,
            ",{},{},{},{}",
            s.cams_sent, s.cams_received, s.cams_dropped, s.cams_out_of_range
        );
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the metrics stream to `path`.
pub fn emit_metrics(
    records: &[MetricsRecord],
    n_followers: usize,
    path: &Path,
) -> Result<(), OutputError> {
    write_file(path, &render_metrics(records, n_followers))
}

/// Writes the summary table to `path`.
pub fn emit_summary(
    summaries: &[RunSummary],
    n_followers: usize,
    path: &Path,
) -> Result<(), OutputError> {
    write_file(path, &render_summaries(summaries, n_followers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::run::{FollowerSample, FollowerStats};

    fn record() -> MetricsRecord {
        MetricsRecord {
            iteration: 3,
            time_s: 0.06,
            followers: vec![
                FollowerSample {
                    gap: 10.0,
                    steer: 0.0,
                    speed: 0.25,
                    lost: false,
                },
                FollowerSample {
                    gap: 9.5,
                    steer: -0.01,
                    speed: 0.0,
                    lost: true,
                },
            ],
        }
    }

    #[test]
    fn header_matches_documented_schema() {
        assert_eq!(
            metrics_header(2),
            "iteration,time_s,gap1_m,steer1_rad,speed1_mps,lost1,gap2_m,steer2_rad,speed2_mps,lost2"
        );
    }

    #[test]
    fn empty_stream_renders_header_only() {
        let text = render_metrics(&[], 2);
        assert_eq!(text.lines().count(), 1);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_float(8.25), "8.25000000e0");
        assert_eq!(format_float(0.02), "2.00000000e-2");
        assert_eq!(format_float(0.0), "0.00000000e0");
        assert_eq!(format_float(-123.456), "-1.23456000e2");
    }

    #[test]
    fn rows_render_deterministically() {
        let text = render_metrics(&[record()], 2);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[1],
            "3,6.00000000e-2,1.00000000e1,0.00000000e0,2.50000000e-1,0,9.50000000e0,-1.00000000e-2,0.00000000e0,1"
        );
        assert_eq!(render_metrics(&[record()], 2), text);
    }

    #[test]
    fn write_failure_reports_the_path() {
        let path = std::path::Path::new("/nonexistent-dir/metrics.csv");
        let err = emit_metrics(&[], 2, path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/metrics.csv"));
    }

    #[test]
    fn summary_rows_include_accounting_columns() {
        let s = RunSummary {
            cam_hz: 10.0,
            seed: 1,
            ticks: 100,
            followers: vec![FollowerStats {
                rms_gap_error: 0.25,
                max_gap: 8.5,
                min_gap: 7.9,
                steer_std: 0.01,
                lost_track_events: 0,
            }],
            cams_sent: 60,
            cams_received: 120,
            cams_dropped: 0,
            cams_out_of_range: 0,
        };
        let text = render_summaries(&[s], 1);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "cam_hz,seed,ticks,rms_gap1_m,max_gap1_m,min_gap1_m,steer_std1_rad,lost_events1,cams_sent,cams_received,cams_dropped,cams_out_of_range"
        );
        assert_eq!(
            lines[1],
            "1.00000000e1,1,100,2.50000000e-1,8.50000000e0,7.90000000e0,1.00000000e-2,0,60,120,0,0"
        );
    }
}
