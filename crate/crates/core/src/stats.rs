//! Survey analysis for comparing two controllers.
//!
//! Likert responses are coded 1 to 5. Per-item means and sample standard
//! deviations feed a mean-difference table; category counts feed a
//! Kolmogorov-Smirnov comparison. The K-S decision is available two ways:
//! against Massey's one-sample critical table (the procedure the published
//! analysis used) and against the standard two-sample asymptotic bound.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 5;

/// Category order used for K-S tables, most positive first.
pub const CATEGORY_LABELS: [&str; 5] = [
    "Strongly agree",
    "Weakly agree",
    "Can't say",
    "Weakly disagree",
    "Strongly disagree",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LikertDataset {
    pub controller_label: String,
    pub question_labels: Vec<String>,
    /// One row per participant, one column per question.
    pub responses: Vec<Vec<u8>>,
    pub participant_ids: Vec<String>,
}

impl LikertDataset {
    pub fn new(
        controller_label: impl Into<String>,
        question_labels: Vec<String>,
        responses: Vec<Vec<u8>>,
    ) -> Result<Self> {
        let ids = (1..=responses.len()).map(|i| i.to_string()).collect();
        let ds = LikertDataset {
            controller_label: controller_label.into(),
            question_labels,
            responses,
            participant_ids: ids,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.question_labels.is_empty() {
            return Err(Error::invalid("dataset has no questions"));
        }
        for (p, row) in self.responses.iter().enumerate() {
            if row.len() != self.question_labels.len() {
                return Err(Error::invalid(format!(
                    "participant {p} answered {} of {} questions",
                    row.len(),
                    self.question_labels.len()
                )));
            }
            if let Some(q) = row
                .iter()
                .position(|v| !(LIKERT_MIN..=LIKERT_MAX).contains(v))
            {
                return Err(Error::invalid(format!(
                    "participant {p}, {}: response {} outside 1..=5",
                    self.question_labels[q], row[q]
                )));
            }
        }
        Ok(())
    }

    pub fn participants(&self) -> usize {
        self.responses.len()
    }

    pub fn column(&self, question: usize) -> impl Iterator<Item = u8> + '_ {
        self.responses.iter().map(move |row| row[question])
    }

    pub fn question_index(&self, label: &str) -> Option<usize> {
        self.question_labels.iter().position(|q| q == label)
    }

    pub fn summarize(&self) -> Result<SummaryTable> {
        Ok(SummaryTable {
            label: self.controller_label.clone(),
            questions: self.question_labels.clone(),
            items: item_stats(self)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemStats {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single response.
    pub sd: f64,
    pub n: usize,
}

impl ItemStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::invalid("no responses"));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(ItemStats { mean, sd, n })
    }
}

pub fn item_stats(ds: &LikertDataset) -> Result<Vec<ItemStats>> {
    if ds.responses.is_empty() || ds.question_labels.is_empty() {
        return Err(Error::invalid(format!(
            "dataset {:?} is empty",
            ds.controller_label
        )));
    }
    ds.validate()?;
    (0..ds.question_labels.len())
        .map(|q| {
            let values: Vec<f64> = ds.column(q).map(f64::from).collect();
            ItemStats::from_values(&values)
        })
        .collect()
}

/// Per-question summaries for one controller, either computed from raw
/// responses or taken from previously published means.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub label: String,
    pub questions: Vec<String>,
    pub items: Vec<ItemStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffRow {
    pub question: String,
    pub a: ItemStats,
    pub b: ItemStats,
    /// mean(b) − mean(a)
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffTable {
    pub label_a: String,
    pub label_b: String,
    pub rows: Vec<DiffRow>,
    pub sum: f64,
}

pub fn mean_diff_table(a: &SummaryTable, b: &SummaryTable) -> Result<DiffTable> {
    if a.questions != b.questions {
        return Err(Error::invalid(format!(
            "question sets differ between {:?} and {:?}",
            a.label, b.label
        )));
    }
    if a.items.len() != a.questions.len() || b.items.len() != b.questions.len() {
        return Err(Error::invalid(
            "summary table rows do not match its questions",
        ));
    }
    let rows: Vec<DiffRow> = a
        .questions
        .iter()
        .zip(a.items.iter().zip(&b.items))
        .map(|(q, (ia, ib))| DiffRow {
            question: q.clone(),
            a: *ia,
            b: *ib,
            diff: ib.mean - ia.mean,
        })
        .collect();
    let sum = rows.iter().map(|r| r.diff).sum();
    Ok(DiffTable {
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        rows,
        sum,
    })
}

pub fn mean_diff_datasets(a: &LikertDataset, b: &LikertDataset) -> Result<DiffTable> {
    mean_diff_table(&a.summarize()?, &b.summarize()?)
}

impl DiffTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "question,mean_a,sd_a,mean_b,sd_b,diff")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                csv_field(&r.question),
                r.a.mean,
                r.a.sd,
                r.b.mean,
                r.b.sd,
                r.diff
            )?;
        }
        writeln!(w, "sum,,,,,{:.6}", self.sum)?;
        w.flush()?;
        Ok(())
    }

    pub fn render_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.question.chars().count())
            .chain([8])
            .max()
            .unwrap_or(8);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>12}  {:>12}  {:>6}",
            "question",
            trunc(&self.label_a, 12),
            trunc(&self.label_b, 12),
            "diff"
        );
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>5}  {:>5}  {:>5}  {:>6}",
            "", "mean", "sd", "mean", "sd", ""
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>5.2}  {:>5.2}  {:>5.2}  {:>5.2}  {:>6.2}",
                r.question, r.a.mean, r.a.sd, r.b.mean, r.b.sd, r.diff
            );
        }
        let _ = writeln!(out, "{:<width$}  {:>34.2}", "sum of differences", self.sum);
        out
    }
}

fn trunc(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Splits one CSV line, honouring double-quoted fields.
fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

/// Reads `participant,controller,<question...>` rows and groups them by
/// controller, in order of first appearance.
pub fn load_survey<R: BufRead>(r: R) -> Result<Vec<LikertDataset>> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(line) => split_csv_line(line?.trim_end()),
        None => return Err(Error::parse(1, "missing header")),
    };
    if header.len() < 2 || header[0].trim() != "participant" || header[1].trim() != "controller" {
        return Err(Error::parse(
            1,
            "header must start with `participant,controller`",
        ));
    }
    let questions: Vec<String> = header[2..].iter().map(|q| q.trim().to_string()).collect();
    if questions.is_empty() {
        return Err(Error::invalid("survey has no question columns"));
    }

    let mut datasets: Vec<LikertDataset> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let row = idx + 2;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields = split_csv_line(line);
        if fields.len() != header.len() {
            return Err(Error::parse(
                row,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        let mut responses = Vec::with_capacity(questions.len());
        for (q, raw) in fields[2..].iter().enumerate() {
            let v: u8 = raw
                .trim()
                .parse()
                .ok()
                .filter(|v| (LIKERT_MIN..=LIKERT_MAX).contains(v))
                .ok_or_else(|| {
                    Error::parse(
                        row,
                        format!(
                            "column {} ({}): {:?} is not a response in 1..=5",
                            q + 3,
                            questions[q],
                            raw
                        ),
                    )
                })?;
            responses.push(v);
        }
        let controller = fields[1].trim();
        let ds = match datasets
            .iter_mut()
            .find(|d| d.controller_label == controller)
        {
            Some(ds) => ds,
            None => {
                datasets.push(LikertDataset {
                    controller_label: controller.to_string(),
                    question_labels: questions.clone(),
                    responses: Vec::new(),
                    participant_ids: Vec::new(),
                });
                datasets.last_mut().unwrap()
            }
        };
        ds.participant_ids.push(fields[0].trim().to_string());
        ds.responses.push(responses);
    }
    Ok(datasets)
}

/// Reads previously computed means into a pair of summary tables. The
/// header must name `question,mean_a,sd_a,mean_b,sd_b`; `n_a` and `n_b` are
/// optional and any other column is ignored.
pub fn read_summary_pair<R: BufRead>(
    r: R,
    label_a: &str,
    label_b: &str,
) -> Result<(SummaryTable, SummaryTable)> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(line) => split_csv_line(line?.trim_end()),
        None => return Err(Error::parse(1, "missing header")),
    };
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let mut required = [0usize; 5];
    for (slot, name) in required
        .iter_mut()
        .zip(["question", "mean_a", "sd_a", "mean_b", "sd_b"])
    {
        *slot = col(name).ok_or_else(|| Error::parse(1, format!("header lacks `{name}`")))?;
    }
    let [q_col, mean_a, sd_a, mean_b, sd_b] = required;
    let (n_a_col, n_b_col) = (col("n_a"), col("n_b"));

    let mut a = SummaryTable {
        label: label_a.to_string(),
        questions: Vec::new(),
        items: Vec::new(),
    };
    let mut b = SummaryTable {
        label: label_b.to_string(),
        ..a.clone()
    };
    for (idx, line) in lines.enumerate() {
        let row = idx + 2;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields = split_csv_line(line);
        if fields.len() != header.len() {
            return Err(Error::parse(
                row,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].trim().parse().map_err(|_| {
                Error::parse(row, format!("column {}: bad number {:?}", i + 1, fields[i]))
            })
        };
        let count = |c: Option<usize>| -> Result<usize> {
            c.map_or(Ok(0), |i| {
                fields[i].trim().parse().map_err(|_| {
                    Error::parse(row, format!("column {}: bad count {:?}", i + 1, fields[i]))
                })
            })
        };
        let q = fields[q_col].trim().to_string();
        a.questions.push(q.clone());
        b.questions.push(q);
        a.items.push(ItemStats {
            mean: num(mean_a)?,
            sd: num(sd_a)?,
            n: count(n_a_col)?,
        });
        b.items.push(ItemStats {
            mean: num(mean_b)?,
            sd: num(sd_b)?,
            n: count(n_b_col)?,
        });
    }
    if a.questions.is_empty() {
        return Err(Error::invalid("summary file has no rows"));
    }
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryCounts {
    counts: Vec<u64>,
}

impl CategoryCounts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::invalid("category counts sum to zero"));
        }
        Ok(CategoryCounts { counts })
    }

    /// Tallies 1..=5 responses into [`CATEGORY_LABELS`] order, so a 5 lands
    /// in the first category.
    pub fn from_responses(values: impl IntoIterator<Item = u8>) -> Result<Self> {
        let mut counts = vec![0u64; 5];
        for v in values {
            if !(LIKERT_MIN..=LIKERT_MAX).contains(&v) {
                return Err(Error::invalid(format!("response {v} outside 1..=5")));
            }
            counts[(LIKERT_MAX - v) as usize] += 1;
        }
        CategoryCounts::new(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn cumulative_proportions(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts
            .iter()
            .scan(0u64, |acc, &c| {
                *acc += c;
                Some(*acc as f64 / n)
            })
            .collect()
    }
}

/// Absolute differences of cumulative proportions, category by category.
/// The shorter table is padded with empty trailing categories.
pub fn ks_differences(a: &CategoryCounts, b: &CategoryCounts) -> Result<Vec<f64>> {
    if a.n() == 0 || b.n() == 0 {
        return Err(Error::invalid("K-S needs non-empty samples"));
    }
    let (ca, cb) = (a.cumulative_proportions(), b.cumulative_proportions());
    let k = ca.len().max(cb.len());
    let at = |c: &[f64], i: usize| c.get(i).copied().unwrap_or(1.0);
    Ok((0..k).map(|i| (at(&ca, i) - at(&cb, i)).abs()).collect())
}

pub fn ks_d_statistic(a: &CategoryCounts, b: &CategoryCounts) -> Result<f64> {
    Ok(ks_differences(a, b)?.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Alpha {
    P20,
    P15,
    P10,
    P05,
    P01,
}

impl Alpha {
    pub const ALL: [Alpha; 5] = [Alpha::P20, Alpha::P15, Alpha::P10, Alpha::P05, Alpha::P01];

    pub fn value(self) -> f64 {
        match self {
            Alpha::P20 => 0.20,
            Alpha::P15 => 0.15,
            Alpha::P10 => 0.10,
            Alpha::P05 => 0.05,
            Alpha::P01 => 0.01,
        }
    }

    fn column(self) -> usize {
        self as usize
    }

    /// Coefficient of the large-sample row, `c / √n`.
    pub fn asymptotic_coefficient(self) -> f64 {
        [1.07, 1.14, 1.22, 1.36, 1.63][self.column()]
    }

    pub fn parse(s: &str) -> Option<Alpha> {
        let v: f64 = s.trim().parse().ok()?;
        Alpha::ALL
            .into_iter()
            .find(|a| (a.value() - v).abs() < 1e-9)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.value())
    }
}

/// Massey's critical values of D for the one-sample test, columns ordered
/// as [`Alpha::ALL`].
#[allow(clippy::approx_constant)]
const MASSEY_TABLE: [(u32, [f64; 5]); 23] = [
    (1, [0.900, 0.925, 0.950, 0.975, 0.995]),
    (2, [0.684, 0.726, 0.776, 0.842, 0.929]),
    (3, [0.565, 0.597, 0.642, 0.708, 0.828]),
    (4, [0.494, 0.525, 0.564, 0.624, 0.733]),
    (5, [0.446, 0.474, 0.510, 0.565, 0.669]),
    (6, [0.410, 0.436, 0.470, 0.521, 0.618]),
    (7, [0.381, 0.405, 0.438, 0.486, 0.577]),
    (8, [0.358, 0.381, 0.411, 0.457, 0.543]),
    (9, [0.339, 0.360, 0.388, 0.432, 0.514]),
    (10, [0.322, 0.342, 0.368, 0.410, 0.490]),
    (11, [0.307, 0.326, 0.352, 0.391, 0.468]),
    (12, [0.295, 0.313, 0.338, 0.375, 0.450]),
    (13, [0.284, 0.302, 0.325, 0.361, 0.433]),
    (14, [0.274, 0.292, 0.314, 0.349, 0.418]),
    (15, [0.266, 0.283, 0.304, 0.338, 0.404]),
    (16, [0.258, 0.274, 0.295, 0.328, 0.392]),
    (17, [0.250, 0.266, 0.286, 0.318, 0.381]),
    (18, [0.244, 0.259, 0.278, 0.309, 0.371]),
    (19, [0.237, 0.252, 0.272, 0.301, 0.363]),
    (20, [0.231, 0.246, 0.264, 0.294, 0.356]),
    (25, [0.21, 0.22, 0.24, 0.27, 0.32]),
    (30, [0.19, 0.20, 0.22, 0.24, 0.29]),
    (35, [0.18, 0.19, 0.21, 0.23, 0.27]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalSource {
    Tabled,
    /// Linear interpolation between the neighbouring tabled rows.
    Interpolated,
    /// `c(α) / √n`, capped at the last tabled row.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValue {
    pub value: f64,
    pub source: CriticalSource,
}

pub fn ks_critical(n: u32, alpha: Alpha) -> Result<CriticalValue> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let col = alpha.column();
    if let Some((_, row)) = MASSEY_TABLE.iter().find(|(rn, _)| *rn == n) {
        return Ok(CriticalValue {
            value: row[col],
            source: CriticalSource::Tabled,
        });
    }
    let (last_n, last_row) = MASSEY_TABLE[MASSEY_TABLE.len() - 1];
    if n > last_n {
        // 1.63/√36 sits just above the n = 35 entry; the cap keeps the
        // column non-increasing.
        let formula = alpha.asymptotic_coefficient() / (n as f64).sqrt();
        return Ok(CriticalValue {
            value: formula.min(last_row[col]),
            source: CriticalSource::Asymptotic,
        });
    }
    let upper = MASSEY_TABLE
        .iter()
        .position(|(rn, _)| *rn > n)
        .expect("n below the last tabled row");
    let (n0, r0) = MASSEY_TABLE[upper - 1];
    let (n1, r1) = MASSEY_TABLE[upper];
    let frac = (n - n0) as f64 / (n1 - n0) as f64;
    Ok(CriticalValue {
        value: r0[col] + frac * (r1[col] - r0[col]),
        source: CriticalSource::Interpolated,
    })
}

/// Standard two-sample bound `c(α) · √((n₁ + n₂) / (n₁ · n₂))` with
/// `c(α) = √(−ln(α/2) / 2)`.
pub fn ks_two_sample_critical(n_a: u64, n_b: u64, alpha: Alpha) -> Result<f64> {
    if n_a == 0 || n_b == 0 {
        return Err(Error::invalid("sample sizes must be positive"));
    }
    let c = (-(alpha.value() / 2.0).ln() / 2.0).sqrt();
    let (na, nb) = (n_a as f64, n_b as f64);
    Ok(c * ((na + nb) / (na * nb)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    FailToReject,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Reject => "Reject",
            Decision::FailToReject => "FailToReject",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsDecision {
    pub alpha: Alpha,
    pub critical: CriticalValue,
    pub decision: Decision,
}

/// Reject H0 (both samples come from one distribution) when `d` reaches the
/// one-sample table value.
pub fn ks_decide(d: f64, n: u32, alpha: Alpha) -> Result<KsDecision> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::invalid(format!("D must lie in [0, 1], got {d}")));
    }
    let critical = ks_critical(n, alpha)?;
    let decision = if d >= critical.value {
        Decision::Reject
    } else {
        Decision::FailToReject
    };
    Ok(KsDecision {
        alpha,
        critical,
        decision,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsResult {
    pub d_statistic: f64,
    pub per_category: Vec<f64>,
    pub n: u32,
    pub n_a: u64,
    pub n_b: u64,
    /// Decisions against the one-sample critical table.
    pub table_method: BTreeMap<Alpha, KsDecision>,
    /// Decisions against the two-sample asymptotic bound.
    pub two_sample_method: BTreeMap<Alpha, (f64, Decision)>,
}

impl KsResult {
    pub fn decisions(&self) -> BTreeMap<Alpha, Decision> {
        self.table_method
            .iter()
            .map(|(a, d)| (*a, d.decision))
            .collect()
    }

    pub fn critical_values(&self) -> BTreeMap<Alpha, f64> {
        self.table_method
            .iter()
            .map(|(a, d)| (*a, d.critical.value))
            .collect()
    }

    /// Remarks a reader should not miss: mixed decisions across levels and
    /// interpolated or asymptotic critical values.
    pub fn notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        let rejected: Vec<String> = self
            .table_method
            .values()
            .filter(|d| d.decision == Decision::Reject)
            .map(|d| d.alpha.to_string())
            .collect();
        let kept: Vec<String> = self
            .table_method
            .values()
            .filter(|d| d.decision == Decision::FailToReject)
            .map(|d| d.alpha.to_string())
            .collect();
        if !rejected.is_empty() && !kept.is_empty() {
            notes.push(format!(
                "D = {:.6} rejects H0 at alpha {} but not at alpha {}; \
                 a claim of rejection at every level does not follow from the table",
                self.d_statistic,
                rejected.join(", "),
                kept.join(", ")
            ));
        }
        let table_mixed = self
            .table_method
            .iter()
            .any(|(a, d)| self.two_sample_method.get(a).map(|t| t.1) != Some(d.decision));
        if table_mixed {
            notes.push("one-sample table and two-sample bound disagree at some levels".to_string());
        }
        if let Some(d) = self.table_method.values().next() {
            match d.critical.source {
                CriticalSource::Interpolated => notes.push(format!(
                    "n = {} is not tabled; critical values are linearly interpolated",
                    self.n
                )),
                CriticalSource::Asymptotic => notes.push(format!(
                    "n = {} is past the table; critical values use c(alpha)/sqrt(n)",
                    self.n
                )),
                CriticalSource::Tabled => {}
            }
        }
        notes
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "H0: both samples come from the same distribution");
        let _ = writeln!(
            out,
            "n_a = {}, n_b = {}, table n = {}",
            self.n_a, self.n_b, self.n
        );
        let _ = writeln!(out, "category               |cum_a - cum_b|");
        for (i, d) in self.per_category.iter().enumerate() {
            let label = CATEGORY_LABELS.get(i).copied().unwrap_or("(extra)");
            let _ = writeln!(out, "{label:<22} {d:.6}");
        }
        let _ = writeln!(out, "D = {:.6}", self.d_statistic);
        let _ = writeln!(out);
        let _ = writeln!(out, "alpha  one-sample-table        two-sample-asymptotic");
        for (alpha, d) in &self.table_method {
            let (c2, dec2) = self.two_sample_method[alpha];
            let _ = writeln!(
                out,
                "{alpha}   {:.4}  {:<13}  {:.4}  {}",
                d.critical.value,
                d.decision.to_string(),
                c2,
                dec2
            );
        }
        for note in self.notes() {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "method,alpha,n,d,critical,decision")?;
        for (alpha, d) in &self.table_method {
            writeln!(
                w,
                "one_sample_table,{alpha},{},{:.9},{:.6},{}",
                self.n, self.d_statistic, d.critical.value, d.decision
            )?;
        }
        for (alpha, (c, dec)) in &self.two_sample_method {
            writeln!(
                w,
                "two_sample_asymptotic,{alpha},{},{:.9},{:.6},{dec}",
                self.n, self.d_statistic, c
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full K-S comparison of two category tables. The table lookup uses the
/// smaller of the two sample sizes.
pub fn ks_test(a: &CategoryCounts, b: &CategoryCounts) -> Result<KsResult> {
    let per_category = ks_differences(a, b)?;
    let d = per_category.iter().copied().fold(0.0, f64::max);
    let n = u32::try_from(a.n().min(b.n()))
        .map_err(|_| Error::invalid("sample too large for the critical table"))?;
    let mut table_method = BTreeMap::new();
    let mut two_sample_method = BTreeMap::new();
    for alpha in Alpha::ALL {
        table_method.insert(alpha, ks_decide(d, n, alpha)?);
        let c = ks_two_sample_critical(a.n(), b.n(), alpha)?;
        let dec = if d >= c {
            Decision::Reject
        } else {
            Decision::FailToReject
        };
        two_sample_method.insert(alpha, (c, dec));
    }
    Ok(KsResult {
        d_statistic: d,
        per_category,
        n,
        n_a: a.n(),
        n_b: b.n(),
        table_method,
        two_sample_method,
    })
}

/// Reads `category,count_a,count_b` rows.
pub fn read_counts_pair<R: BufRead>(r: R) -> Result<(CategoryCounts, CategoryCounts)> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let row = idx + 1;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() || (row == 1 && line.starts_with("category,")) {
            continue;
        }
        let fields = split_csv_line(line);
        if fields.len() != 3 {
            return Err(Error::parse(row, "expected category,count_a,count_b"));
        }
        let count = |i: usize| -> Result<u64> {
            fields[i].trim().parse().map_err(|_| {
                Error::parse(row, format!("column {}: bad count {:?}", i + 1, fields[i]))
            })
        };
        a.push(count(1)?);
        b.push(count(2)?);
    }
    Ok((CategoryCounts::new(a)?, CategoryCounts::new(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(values: &[u8]) -> LikertDataset {
        LikertDataset::new(
            "c",
            vec!["q1".into()],
            values.iter().map(|&v| vec![v]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_column() {
        let s = item_stats(&single(&[3; 12])).unwrap();
        assert_eq!(s[0].mean, 3.0);
        assert_eq!(s[0].sd, 0.0);
    }

    #[test]
    fn two_point_column() {
        let s = item_stats(&single(&[2, 4])).unwrap();
        assert_eq!(s[0].mean, 3.0);
        assert!((s[0].sd - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = LikertDataset::new("c", vec!["q1".into()], vec![]).unwrap();
        assert!(matches!(item_stats(&ds), Err(Error::InvalidArgument(_))));
        assert!(LikertDataset::new("c", vec![], vec![]).is_err());
        assert!(LikertDataset::new("c", vec!["q1".into()], vec![vec![6]]).is_err());
    }

    #[test]
    fn diff_of_self_is_zero() {
        let ds = single(&[1, 2, 5, 4]);
        let t = mean_diff_datasets(&ds, &ds).unwrap();
        assert!(t.rows.iter().all(|r| r.diff == 0.0));
        assert_eq!(t.sum, 0.0);
    }

    #[test]
    fn diff_single_question() {
        let mk = |label: &str, mean| SummaryTable {
            label: label.into(),
            questions: vec!["q".into()],
            items: vec![ItemStats {
                mean,
                sd: 0.0,
                n: 0,
            }],
        };
        let t = mean_diff_table(&mk("a", 2.0), &mk("b", 3.5)).unwrap();
        assert_eq!(t.rows[0].diff, 1.5);
        let mut other = mk("b", 3.5);
        other.questions[0] = "different".into();
        assert!(mean_diff_table(&mk("a", 2.0), &other).is_err());
    }

    #[test]
    fn d_statistic_cases() {
        let a = CategoryCounts::new(vec![9, 10, 8, 2, 1]).unwrap();
        let b = CategoryCounts::new(vec![17, 9, 4, 0, 0]).unwrap();
        assert!((ks_d_statistic(&a, &b).unwrap() - 0.266666667).abs() < 1e-9);
        assert_eq!(ks_d_statistic(&a, &a).unwrap(), 0.0);

        let lo = CategoryCounts::new(vec![30, 0, 0, 0, 0]).unwrap();
        let hi = CategoryCounts::new(vec![0, 0, 0, 0, 30]).unwrap();
        assert_eq!(ks_d_statistic(&lo, &hi).unwrap(), 1.0);
        assert!(CategoryCounts::new(vec![0, 0]).is_err());
    }

    #[test]
    fn critical_lookups() {
        assert_eq!(ks_critical(30, Alpha::P05).unwrap().value, 0.24);
        assert_eq!(ks_critical(30, Alpha::P01).unwrap().value, 0.29);
        let c = ks_critical(100, Alpha::P05).unwrap();
        assert!((c.value - 0.136).abs() < 1e-12);
        assert_eq!(c.source, CriticalSource::Asymptotic);
        let mid = ks_critical(27, Alpha::P05).unwrap();
        assert_eq!(mid.source, CriticalSource::Interpolated);
        assert!((mid.value - (0.27 + 0.4 * (0.24 - 0.27))).abs() < 1e-12);
        assert!(ks_critical(0, Alpha::P05).is_err());
    }

    #[test]
    fn decisions_at_thirty() {
        let d = 0.266666667;
        assert_eq!(
            ks_decide(d, 30, Alpha::P05).unwrap().decision,
            Decision::Reject
        );
        assert_eq!(
            ks_decide(d, 30, Alpha::P10).unwrap().decision,
            Decision::Reject
        );
        assert_eq!(
            ks_decide(d, 30, Alpha::P01).unwrap().decision,
            Decision::FailToReject
        );
        // equal to the table value rejects
        assert_eq!(
            ks_decide(0.24, 30, Alpha::P05).unwrap().decision,
            Decision::Reject
        );
    }

    #[test]
    fn two_sample_bound() {
        // c(0.05) = 1.3581; √(60/900) = 0.2582
        let c = ks_two_sample_critical(30, 30, Alpha::P05).unwrap();
        assert!((c - 0.35065).abs() < 1e-4, "{c}");
    }

    #[test]
    fn survey_parsing() {
        let text = "participant,controller,q1,q2\n1,A,3,4\n1,B,5,5\n2,A,2,1\n";
        let sets = load_survey(text.as_bytes()).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].controller_label, "A");
        assert_eq!(sets[0].responses, vec![vec![3, 4], vec![2, 1]]);

        let bad = "participant,controller,q1,q2\n1,A,3,6\n";
        match load_survey(bad.as_bytes()) {
            Err(Error::Parse { row, msg }) => {
                assert_eq!(row, 2);
                assert!(msg.contains("q2"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load_survey("participant,controller\n".as_bytes()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn counts_from_responses() {
        let c = CategoryCounts::from_responses([5, 5, 4, 1]).unwrap();
        assert_eq!(c.counts(), &[2, 1, 0, 0, 1]);
    }

    #[test]
    fn notes_flag_mixed_decisions() {
        let a = CategoryCounts::new(vec![9, 10, 8, 2, 1]).unwrap();
        let b = CategoryCounts::new(vec![17, 9, 4, 0, 0]).unwrap();
        let r = ks_test(&a, &b).unwrap();
        let notes = r.notes();
        assert!(
            notes.iter().any(|n| n.contains("not at alpha 0.01")),
            "{notes:?}"
        );
    }
}
