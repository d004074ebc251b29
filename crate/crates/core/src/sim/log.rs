use serde::{Deserialize, Serialize};

use super::SimulationRun;
use crate::format::{read_records, write_records, FormatError, SIMLOG_V1};

/// Per-day summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimlogRecord {
    pub day: usize,
    pub mode: String,
    pub sessions: usize,
    pub failures: usize,
    pub defect_rate: f64,
    /// Sources whose top rewrite differs from the previous day.
    pub flips: usize,
    pub cumulative_flips: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub pr_auc: Option<f64>,
    pub rewrites: usize,
    pub table_digest: String,
    pub graph_digest: String,
}

impl SimulationRun {
    pub fn log_records(&self) -> Vec<SimlogRecord> {
        let mut cumulative = 0;
        let mut previous = None;
        self.days
            .iter()
            .map(|d| {
                let flips = match previous {
                    None => 0,
                    Some(prev) => changed_sources(prev, &d.table),
                };
                previous = Some(&d.table);
                cumulative += flips;
                let partition = d.metrics.partition;
                SimlogRecord {
                    day: d.day,
                    mode: self.config.mode.to_string(),
                    sessions: d.sessions,
                    failures: d.failures,
                    defect_rate: d.failures as f64 / d.sessions as f64,
                    flips,
                    cumulative_flips: cumulative,
                    precision: partition.map(|p| p.precision),
                    recall: partition.map(|p| p.recall),
                    accuracy: partition.map(|p| p.accuracy),
                    f1: partition.map(|p| p.f1),
                    pr_auc: d.metrics.pr_auc,
                    rewrites: d.table.len(),
                    table_digest: d.table.digest(),
                    graph_digest: d.graph_digest(),
                }
            })
            .collect()
    }
}

fn changed_sources(a: &crate::markov::RewriteTable, b: &crate::markov::RewriteTable) -> usize {
    let sources: std::collections::BTreeSet<_> = a.iter().chain(b.iter()).map(|(s, _)| s).collect();
    sources.into_iter().filter(|s| a.get(s) != b.get(s)).count()
}

pub fn write_simlog(records: &[SimlogRecord]) -> Result<String, FormatError> {
    write_records(SIMLOG_V1, records)
}

pub fn read_simlog(text: &str) -> Result<Vec<SimlogRecord>, FormatError> {
    read_records(text, SIMLOG_V1)
}

const CSV_HEADER: &str = "day,mode,sessions,failures,defect_rate,flips,cumulative_flips,precision,recall,accuracy,f1,pr_auc,rewrites,table_digest,graph_digest";

/// Same columns as the records; absent metrics are empty cells.
pub fn write_csv(records: &[SimlogRecord]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let row = [
            r.day.to_string(),
            r.mode.clone(),
            r.sessions.to_string(),
            r.failures.to_string(),
            r.defect_rate.to_string(),
            r.flips.to_string(),
            r.cumulative_flips.to_string(),
            opt(r.precision),
            opt(r.recall),
            opt(r.accuracy),
            opt(r.f1),
            opt(r.pr_auc),
            r.rewrites.to_string(),
            r.table_digest.clone(),
            r.graph_digest.clone(),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_loop, scenario_type2, SimulationConfig};
    use crate::train::TrainMode;

    #[test]
    fn simlog_round_trip_and_csv() {
        let run = run_loop(&scenario_type2(), &SimulationConfig::new(TrainMode::Discounting, 4, 30, 8)).unwrap();
        let records = run.log_records();
        assert_eq!(records.len(), 4);
        assert_eq!(records[0].flips, 0);
        assert_eq!(records[3].cumulative_flips, records.iter().map(|r| r.flips).sum::<usize>());
        let text = write_simlog(&records).unwrap();
        assert!(text.starts_with(SIMLOG_V1));
        assert_eq!(read_simlog(&text).unwrap(), records);

        let csv = write_csv(&records);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        let columns = CSV_HEADER.split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == columns));
    }
}
