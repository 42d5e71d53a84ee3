//! Confusion matrices, detection rates and misclassification cost.

use serde::{Deserialize, Serialize};

use crate::dataset::{FlowClass, N_CLASSES};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("{truth} labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("cost matrix line {line}: {message}")]
    CostFormat { line: usize, message: String },
}

/// `counts[true][predicted]`, indexed by class code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..N_CLASSES).map(|j| self.counts[j][j]).sum()
    }

    /// Samples whose true class is `class`.
    pub fn support(&self, class: FlowClass) -> u64 {
        self.counts[class.code()].iter().sum()
    }

    /// Samples predicted as `class`.
    pub fn predicted(&self, class: FlowClass) -> u64 {
        self.counts.iter().map(|row| row[class.code()]).sum()
    }
}

pub fn confusion(
    truth: &[FlowClass],
    predicted: &[FlowClass],
) -> Result<ConfusionMatrix, MetricsError> {
    if truth.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        cm.counts[t.code()][p.code()] += 1;
    }
    Ok(cm)
}

/// Penalty for predicting column class when row class is true.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix(pub [[f64; N_CLASSES]; N_CLASSES]);

impl CostMatrix {
    /// The KDD Cup 1999 scoring matrix.
    pub const KDD: CostMatrix = CostMatrix([
        [0.0, 1.0, 2.0, 2.0, 2.0],
        [1.0, 0.0, 2.0, 2.0, 2.0],
        [2.0, 1.0, 0.0, 2.0, 2.0],
        [3.0, 2.0, 2.0, 0.0, 2.0],
        [4.0, 2.0, 2.0, 2.0, 0.0],
    ]);

    /// Unit cost for every error.
    pub fn zero_one() -> Self {
        let mut m = [[1.0; N_CLASSES]; N_CLASSES];
        for (j, row) in m.iter_mut().enumerate() {
            row[j] = 0.0;
        }
        CostMatrix(m)
    }

    /// Parses five rows of five comma-separated non-negative numbers, rows
    /// and columns in class-code order. Blank lines and `#` comments are
    /// skipped. A header row and a leading label column are allowed when
    /// they spell the class names in order.
    pub fn from_csv(text: &str) -> Result<Self, MetricsError> {
        let err = |line: usize, message: String| MetricsError::CostFormat { line, message };
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() == N_CLASSES + 1 {
                let label = fields.remove(0);
                let expected = rows.len();
                let is_header = rows.is_empty() && fields.iter().all(|f| f.parse::<f64>().is_err());
                if is_header {
                    check_names(&fields).map_err(|m| err(line, m))?;
                    continue;
                }
                if FlowClass::from_name(label).map(FlowClass::code) != Some(expected) {
                    return Err(err(line, format!("row label {label:?} out of order")));
                }
            } else if rows.is_empty() && fields.iter().all(|f| f.parse::<f64>().is_err()) {
                check_names(&fields).map_err(|m| err(line, m))?;
                continue;
            }
            if fields.len() != N_CLASSES {
                return Err(err(
                    line,
                    format!("expected {N_CLASSES} values, got {}", fields.len()),
                ));
            }
            let mut row = [0.0; N_CLASSES];
            for (slot, field) in row.iter_mut().zip(&fields) {
                let v: f64 = field
                    .parse()
                    .map_err(|_| err(line, format!("not a number: {field:?}")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(err(
                        line,
                        format!("costs must be finite and non-negative, got {v}"),
                    ));
                }
                *slot = v;
            }
            if rows.len() == N_CLASSES {
                return Err(err(line, "more than five rows".into()));
            }
            rows.push(row);
        }
        if rows.len() != N_CLASSES {
            return Err(err(
                text.lines().count(),
                format!("expected {N_CLASSES} rows, got {}", rows.len()),
            ));
        }
        let mut m = [[0.0; N_CLASSES]; N_CLASSES];
        m.copy_from_slice(&rows);
        Ok(CostMatrix(m))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("actual");
        for c in FlowClass::ALL {
            out.push(',');
            out.push_str(c.name());
        }
        out.push('\n');
        for (c, row) in FlowClass::ALL.iter().zip(&self.0) {
            out.push_str(c.name());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

impl Default for CostMatrix {
    fn default() -> Self {
        Self::KDD
    }
}

fn check_names(fields: &[&str]) -> Result<(), String> {
    let ok = fields.len() == N_CLASSES
        && fields
            .iter()
            .zip(FlowClass::ALL)
            .all(|(f, c)| FlowClass::from_name(f) == Some(c));
    if ok {
        Ok(())
    } else {
        Err(format!(
            "header must list {:?} in order",
            FlowClass::ALL.map(FlowClass::name)
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: FlowClass,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub total: u64,
    pub per_class: Vec<ClassMetrics>,
    /// Support-weighted means over classes.
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub accuracy: f64,
    /// Share of true Normal flows flagged as any attack.
    pub false_alarm: f64,
    /// Mean misclassification cost per sample.
    pub cost: f64,
}

impl MetricsReport {
    pub fn class(&self, class: FlowClass) -> &ClassMetrics {
        &self.per_class[class.code()]
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Panics on an empty matrix.
pub fn report(cm: &ConfusionMatrix, costs: &CostMatrix) -> MetricsReport {
    let total = cm.total();
    assert!(total > 0, "cannot report on an empty confusion matrix");
    let per_class: Vec<ClassMetrics> = FlowClass::ALL
        .iter()
        .map(|&class| {
            let j = class.code();
            let tp = cm.counts[j][j];
            let precision = ratio(tp, cm.predicted(class));
            let recall = ratio(tp, cm.support(class));
            let f_score = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                class,
                support: cm.support(class),
                precision,
                recall,
                f_score,
            }
        })
        .collect();
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class
            .iter()
            .map(|m| f(m) * m.support as f64)
            .sum::<f64>()
            / total as f64
    };
    let normal = FlowClass::Normal.code();
    let false_alarms = cm.support(FlowClass::Normal) - cm.counts[normal][normal];
    let cost = cm
        .counts
        .iter()
        .zip(&costs.0)
        .flat_map(|(cr, kr)| cr.iter().zip(kr).map(|(&c, &k)| c as f64 * k))
        .sum::<f64>()
        / total as f64;
    MetricsReport {
        total,
        precision: weighted(|m| m.precision),
        recall: weighted(|m| m.recall),
        f_score: weighted(|m| m.f_score),
        accuracy: ratio(cm.correct(), total),
        false_alarm: ratio(false_alarms, cm.support(FlowClass::Normal)),
        cost,
        per_class,
    }
}
