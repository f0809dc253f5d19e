//! Training and evaluation artifacts: the per-epoch loss trace and the
//! metric report. Both are tab-delimited with a versioned header and
//! the usual config-echo comment block.

use lpg_core::eval::MetricReport;
use std::fmt::Write as _;

use crate::config::task_name;

/// Loss trace: `epoch<TAB>mean_loss`, one row per epoch.
pub fn render_loss_trace(losses: &[f64], config_echo: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "lpg-loss-trace v1");
    s.push_str(config_echo);
    let _ = writeln!(s, "epoch\tmean_loss");
    for (epoch, loss) in losses.iter().enumerate() {
        let _ = writeln!(s, "{epoch}\t{loss}");
    }
    s
}

/// Metric report: one `task<TAB>k<TAB>recall<TAB>mean_recall` row per
/// configured K, plus scene accounting.
pub fn render_report(report: &MetricReport, config_echo: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "lpg-report v1");
    s.push_str(config_echo);
    let _ = writeln!(s, "task\tk\trecall\tmean_recall");
    for row in &report.rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}",
            task_name(row.task),
            row.k,
            row.recall,
            row.mean_recall
        );
    }
    let _ = writeln!(s, "scenes_evaluated\t{}", report.scenes_evaluated);
    let _ = writeln!(s, "scenes_skipped\t{}", report.scenes_skipped);
    for id in &report.skipped_image_ids {
        let _ = writeln!(s, "skipped\t{id}");
    }
    s
}

/// Human-facing table of the same numbers, printed to stdout.
pub fn format_report_table(report: &MetricReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<8} {:>5} {:>10} {:>10}", "task", "K", "R@K", "mR@K");
    for row in &report.rows {
        let _ = writeln!(
            s,
            "{:<8} {:>5} {:>10.4} {:>10.4}",
            task_name(row.task),
            row.k,
            row.recall,
            row.mean_recall
        );
    }
    let _ = writeln!(
        s,
        "scenes evaluated: {}, skipped (no ground truth or no candidates): {}",
        report.scenes_evaluated, report.scenes_skipped
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpg_core::eval::{EvalTask, MetricRow};

    fn report() -> MetricReport {
        MetricReport {
            rows: vec![
                MetricRow {
                    task: EvalTask::PredCls,
                    k: 50,
                    recall: 0.9375,
                    mean_recall: 0.875,
                },
                MetricRow {
                    task: EvalTask::PredCls,
                    k: 150,
                    recall: 1.0,
                    mean_recall: 1.0,
                },
            ],
            scenes_evaluated: 40,
            scenes_skipped: 1,
            skipped_image_ids: vec!["s7".into()],
        }
    }

    #[test]
    fn report_rows_cover_every_k() {
        let out = render_report(&report(), "# seed = 0\n");
        assert!(out.contains("predcls\t50\t0.9375\t0.875"));
        assert!(out.contains("predcls\t150\t1\t1"));
        assert!(out.contains("scenes_skipped\t1"));
        assert!(out.contains("skipped\ts7"));
    }

    #[test]
    fn loss_trace_rows_are_indexed_from_zero() {
        let out = render_loss_trace(&[1.5, 0.75], "");
        assert!(out.contains("0\t1.5"));
        assert!(out.contains("1\t0.75"));
    }

    #[test]
    fn table_mentions_skip_count() {
        let table = format_report_table(&report());
        assert!(table.contains("skipped"));
        assert!(table.contains("40"));
    }
}
