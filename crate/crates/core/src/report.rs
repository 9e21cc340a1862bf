//! Machine-readable reports and their aligned plain-text tables.

use serde::{Deserialize, Serialize};

use crate::eval::{PrecisionRecall, ViolationStats};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocEval {
    pub doc_id: String,
    pub teds: f64,
    pub heading: PrecisionRecall,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub corpus_teds: f64,
    pub heading_micro: PrecisionRecall,
    pub documents: Vec<DocEval>,
}

impl EvalReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>8} {:>8} {:>8} {:>8}\n",
            "doc", "TEDS", "P", "R", "F1"
        ));
        for d in &self.documents {
            out.push_str(&format!(
                "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>8.4}\n",
                d.doc_id, d.teds, d.heading.precision, d.heading.recall, d.heading.f1
            ));
        }
        out.push_str(&format!(
            "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>8.4}\n",
            "corpus",
            self.corpus_teds,
            self.heading_micro.precision,
            self.heading_micro.recall,
            self.heading_micro.f1
        ));
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    pub corpus: String,
    pub stats: ViolationStats,
}

impl StatsReport {
    /// Aligned table in the violation-percentage layout: A1 A2 A3 Any.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:>6} {:>6} {:>6} {:>6}\n",
            "corpus", "A1", "A2", "A3", "Any"
        ));
        out.push_str(&format!(
            "{:<16} {:>6.1} {:>6.1} {:>6.1} {:>6.1}\n",
            self.corpus, self.stats.a1_pct, self.stats.a2_pct, self.stats.a3_pct, self.stats.any_pct
        ));
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_d: usize,
    pub teds: f64,
    pub heading_f1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:>4} {:>8} {:>8}\n", "n_d", "TEDS", "HD-F1"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:>4} {:>8.4} {:>8.4}\n",
                r.n_d, r.teds, r.heading_f1
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSuite {
    pub name: String,
    pub cases: usize,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub suites: Vec<OracleSuite>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            out.push_str(&format!(
                "{:<28} {:>6} cases  {}  {}\n",
                s.name,
                s.cases,
                if s.passed { "ok" } else { "FAILED" },
                s.detail
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_table_matches_reference_layout() {
        // Format reference: corpus row with the four percentage columns.
        let report = StatsReport {
            corpus: "reference".into(),
            stats: ViolationStats {
                total_headings: 1000,
                a1_pct: 0.0,
                a2_pct: 0.5,
                a3_pct: 4.1,
                any_pct: 4.6,
            },
        };
        let table = report.table();
        let mut lines = table.lines();
        let header = lines.next().unwrap();
        assert!(header.contains("A1") && header.contains("Any"));
        let row = lines.next().unwrap();
        assert!(row.contains("0.0") && row.contains("0.5") && row.contains("4.1") && row.contains("4.6"));
    }

    #[test]
    fn reports_serialize_deterministically()
    {
        let report = SweepReport {
            rows: vec![SweepRow {
                n_d: 2,
                teds: 0.93,
                heading_f1: 0.97,
            }],
        };
        let a = serde_json::to_string(&report).unwrap();
        let b = serde_json::to_string(&report).unwrap();
        assert_eq!(a, b);
    }
}
