//! Per-dataset and macro-level result tables, as CSV and pretty text.

use serde::{Deserialize, Serialize};

use crate::ledger::EcrSummary;

use super::{macro_average, ScoringError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub dataset: String,
    pub samples: u64,
    /// Samples with a parseable judge verdict.
    pub judged: u64,
    /// Judge replies that did not parse; excluded from accuracy.
    pub invalid_verdicts: u64,
    pub qa_accuracy_percent: f64,
    pub selection_accuracy_percent: Option<f64>,
    pub ecr: EcrSummary,
    pub avg_expand_calls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub datasets: Vec<DatasetReport>,
    pub macro_qa_accuracy_percent: f64,
}

impl RunReport {
    pub fn from_datasets(datasets: Vec<DatasetReport>) -> Result<Self, ScoringError> {
        let accs: Vec<f64> = datasets.iter().map(|d| d.qa_accuracy_percent).collect();
        Ok(Self {
            macro_qa_accuracy_percent: macro_average(&accs)?,
            datasets,
        })
    }

    /// CSV with one row per dataset plus a macro-average row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "dataset,samples,judged,invalid_verdicts,qa_acc,sel_acc,ecr_mean_of_ratios,ecr_ratio_of_sums,avg_expand_calls\n",
        );
        for d in &self.datasets {
            out.push_str(&format!(
                "{},{},{},{},{:.1},{},{:.2},{:.2},{:.2}\n",
                d.dataset,
                d.samples,
                d.judged,
                d.invalid_verdicts,
                d.qa_accuracy_percent,
                d.selection_accuracy_percent
                    .map(|v| format!("{v:.1}"))
                    .unwrap_or_default(),
                d.ecr.mean_of_ratios,
                d.ecr.ratio_of_sums,
                d.avg_expand_calls,
            ));
        }
        out.push_str(&format!(
            "macro,,,,{:.1},,,,\n",
            self.macro_qa_accuracy_percent
        ));
        out
    }

    /// Fixed-width text table for terminal output.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:>7} {:>7} {:>8} {:>8} {:>10} {:>10} {:>8}\n",
            "dataset", "n", "judged", "qa_acc", "sel_acc", "ecr(mean)", "ecr(sum)", "calls"
        ));
        out.push_str(&"-".repeat(82));
        out.push('\n');
        for d in &self.datasets {
            out.push_str(&format!(
                "{:<16} {:>7} {:>7} {:>7.1}% {:>8} {:>10.2} {:>10.2} {:>8.2}\n",
                d.dataset,
                d.samples,
                d.judged,
                d.qa_accuracy_percent,
                d.selection_accuracy_percent
                    .map(|v| format!("{v:.1}%"))
                    .unwrap_or_else(|| "-".into()),
                d.ecr.mean_of_ratios,
                d.ecr.ratio_of_sums,
                d.avg_expand_calls,
            ));
        }
        out.push_str(&"-".repeat(82));
        out.push('\n');
        out.push_str(&format!(
            "macro-average QA accuracy: {:.1}%\n",
            self.macro_qa_accuracy_percent
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(name: &str, acc: f64) -> DatasetReport {
        DatasetReport {
            dataset: name.into(),
            samples: 100,
            judged: 100,
            invalid_verdicts: 0,
            qa_accuracy_percent: acc,
            selection_accuracy_percent: Some(acc - 5.0),
            ecr: EcrSummary {
                mean_of_ratios: 4.3,
                ratio_of_sums: 4.1,
            },
            avg_expand_calls: 1.3,
        }
    }

    #[test]
    fn report_aggregates_macro_average() {
        let report =
            RunReport::from_datasets(vec![dataset("nq", 76.0), dataset("hotpot", 80.0)]).unwrap();
        assert_eq!(report.macro_qa_accuracy_percent, 78.0);
        let csv = report.to_csv();
        assert!(csv.lines().count() == 4);
        assert!(csv.contains("nq,100,100,0,76.0,71.0,4.30,4.10,1.30"));
        assert!(csv.ends_with("macro,,,,78.0,,,,\n"));
        let table = report.to_text_table();
        assert!(table.contains("macro-average QA accuracy: 78.0%"));
    }
}
