//! Rendering and re-reading of command outputs.
//!
//! CSV files carry a header row and use `.` as decimal separator; numbers
//! are written with 17 significant digits so that re-reading reproduces the
//! in-memory binary64 values exactly. JSON documents are one object per
//! command with a `schema_version` field.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convergence::{Certification, RefinementStudy, RichardsonTableau};
use crate::integrator::CurvaturePolicy;
use crate::nitm::NitmResult;

pub const SCHEMA_VERSION: u32 = 1;
/// Decimals printed by the `table` format.
pub const TABLE_DECIMALS: usize = 11;

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("expected a '{expected}' document, found '{found}'")]
    WrongCommand {
        expected: &'static str,
        found: String,
    },
    #[error("malformed study: {0}")]
    Malformed(String),
}

/// Full-precision number: 17 significant digits.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Display rounding used by tables.
pub fn rounded(x: f64) -> String {
    format!("{x:.TABLE_DECIMALS$}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDoc {
    pub schema_version: u32,
    pub command: String,
    pub power_index: f64,
    pub h: f64,
    pub eta_inf_star: f64,
    pub star_curvature: f64,
    pub policy: String,
    pub lambda: f64,
    pub missing_ic: f64,
    pub eta_inf_physical: f64,
    pub star_far_slope: f64,
}

impl SolveDoc {
    pub fn new(r: &NitmResult, power_index: f64, h: f64, policy: CurvaturePolicy) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: "solve".into(),
            power_index,
            h,
            eta_inf_star: r.eta_inf_star,
            star_curvature: r.star_curvature,
            policy: policy.name().into(),
            lambda: r.lambda,
            missing_ic: r.missing_ic,
            eta_inf_physical: r.eta_inf_physical,
            star_far_slope: r.star_far_slope,
        }
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "P                      {}", self.power_index);
        let _ = writeln!(out, "h                      {}", self.h);
        let _ = writeln!(out, "curvature policy       {}", self.policy);
        let _ = writeln!(out, "eta*_inf               {}", self.eta_inf_star);
        let _ = writeln!(
            out,
            "f*'(eta*_inf)          {}",
            rounded(self.star_far_slope)
        );
        let _ = writeln!(out, "lambda                 {}", rounded(self.lambda));
        let _ = writeln!(
            out,
            "eta_inf                {}",
            rounded(self.eta_inf_physical)
        );
        let _ = writeln!(out, "f''(0)                 {:.12}", self.missing_ic);
        out
    }

    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record([
            "power_index",
            "h",
            "eta_inf_star",
            "star_curvature",
            "policy",
            "lambda",
            "missing_ic",
            "eta_inf_physical",
            "star_far_slope",
        ]);
        let _ = w.write_record([
            full(self.power_index),
            full(self.h),
            full(self.eta_inf_star),
            full(self.star_curvature),
            self.policy.clone(),
            full(self.lambda),
            full(self.missing_ic),
            full(self.eta_inf_physical),
            full(self.star_far_slope),
        ]);
        into_string(w)
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub power_index: f64,
    pub eta_inf_star: f64,
    pub policy: String,
    pub level: usize,
    pub h: f64,
    pub missing_ic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDoc {
    pub schema_version: u32,
    pub command: String,
    pub power_index: f64,
    pub eta_inf_star: f64,
    pub h0: f64,
    pub policy: String,
    pub steps: Vec<f64>,
    pub values: Vec<f64>,
}

impl StudyDoc {
    pub fn new(study: &RefinementStudy) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: "study".into(),
            power_index: study.power_index,
            eta_inf_star: study.eta_inf_star,
            h0: study.h0,
            policy: study.policy.name().into(),
            steps: study.steps(),
            values: study.values.clone(),
        }
    }

    pub fn to_study(&self) -> Result<RefinementStudy, ReadError> {
        if self.steps.len() != self.values.len() || self.values.is_empty() {
            return Err(ReadError::Malformed(format!(
                "{} steps for {} values",
                self.steps.len(),
                self.values.len()
            )));
        }
        for (g, h) in self.steps.iter().enumerate() {
            if *h != self.h0 * 0.5f64.powi(g as i32) {
                return Err(ReadError::Malformed(format!(
                    "step at level {g} is {h}, expected h0 * 2^-{g}"
                )));
            }
        }
        let policy = self
            .policy
            .parse::<CurvaturePolicy>()
            .map_err(ReadError::Malformed)?;
        RefinementStudy::from_values(
            self.power_index,
            self.eta_inf_star,
            self.h0,
            policy,
            self.values.clone(),
        )
        .map_err(|e| ReadError::Malformed(e.to_string()))
    }

    /// Layout of the published mesh-refinement table.
    pub fn table(&self) -> String {
        let mut out = format!("{:<16}{}\n", "Δη", "f''(0)");
        for (h, u) in self.steps.iter().zip(&self.values) {
            let _ = writeln!(out, "{:<16}{}", format!("{h}"), rounded(*u));
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record([
            "power_index",
            "eta_inf_star",
            "policy",
            "level",
            "h",
            "missing_ic",
        ]);
        for (level, (h, u)) in self.steps.iter().zip(&self.values).enumerate() {
            let _ = w.write_record([
                full(self.power_index),
                full(self.eta_inf_star),
                self.policy.clone(),
                level.to_string(),
                full(*h),
                full(*u),
            ]);
        }
        into_string(w)
    }
}

/// Parses a study written by [`StudyDoc::csv`].
pub fn read_study_csv(text: &str) -> Result<StudyDoc, ReadError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows = rdr
        .deserialize::<StudyRow>()
        .collect::<Result<Vec<_>, _>>()?;
    let first = rows
        .first()
        .ok_or_else(|| ReadError::Malformed("no data rows".into()))?;
    for (i, r) in rows.iter().enumerate() {
        if r.level != i {
            return Err(ReadError::Malformed(format!(
                "row {i} has level {}",
                r.level
            )));
        }
        if r.power_index != first.power_index
            || r.eta_inf_star != first.eta_inf_star
            || r.policy != first.policy
        {
            return Err(ReadError::Malformed(format!(
                "row {i} changes the study parameters"
            )));
        }
    }
    Ok(StudyDoc {
        schema_version: SCHEMA_VERSION,
        command: "study".into(),
        power_index: first.power_index,
        eta_inf_star: first.eta_inf_star,
        h0: first.h,
        policy: first.policy.clone(),
        steps: rows.iter().map(|r| r.h).collect(),
        values: rows.iter().map(|r| r.missing_ic).collect(),
    })
}

/// Parses a study written as JSON by the `study` command.
pub fn read_study_json(text: &str) -> Result<StudyDoc, ReadError> {
    let doc: StudyDoc = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ReadError::Schema(doc.schema_version));
    }
    if doc.command != "study" {
        return Err(ReadError::WrongCommand {
            expected: "study",
            found: doc.command,
        });
    }
    Ok(doc)
}

/// Picks the reader from the first non-blank character.
pub fn read_study(text: &str) -> Result<StudyDoc, ReadError> {
    if text.trim_start().starts_with('{') {
        read_study_json(text)
    } else {
        read_study_csv(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationDoc {
    pub value: f64,
    pub decimals: u32,
    pub stop_reason: String,
    pub g: usize,
    pub k: usize,
    pub spread: Option<f64>,
    pub tol: f64,
}

impl CertificationDoc {
    pub fn new(c: &Certification, tol: f64) -> Self {
        Self {
            value: c.value,
            decimals: c.decimals,
            stop_reason: c.stop.to_string(),
            g: c.position.0,
            k: c.position.1,
            spread: c.spread.is_finite().then_some(c.spread),
            tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableauDoc {
    pub schema_version: u32,
    pub command: String,
    pub power_index: f64,
    pub h0: f64,
    pub denominator: f64,
    pub steps: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certification: Option<CertificationDoc>,
}

impl TableauDoc {
    pub fn new(study: &RefinementStudy, tableau: &RichardsonTableau) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: "extrapolate".into(),
            power_index: study.power_index,
            h0: study.h0,
            denominator: tableau.denominator,
            steps: study.steps(),
            rows: tableau.rows().to_vec(),
            certification: None,
        }
    }

    pub fn with_certification(mut self, c: &Certification, tol: f64) -> Self {
        self.command = "certify".into();
        self.certification = Some(CertificationDoc::new(c, tol));
        self
    }

    /// Lower-triangular layout of the published extrapolation table.
    pub fn table(&self) -> String {
        let n = self.rows.len();
        let width = TABLE_DECIMALS + 4;
        let mut out = String::new();
        for k in 0..n {
            let _ = write!(out, "{:<width$}", format!("U(g,{k})"));
        }
        out = out.trim_end().to_string();
        out.push('\n');
        for row in &self.rows {
            let line = row
                .iter()
                .map(|v| format!("{:<width$}", rounded(*v)))
                .collect::<String>();
            let _ = writeln!(out, "{}", line.trim_end());
        }
        if let Some(c) = &self.certification {
            out.push('\n');
            out.push_str(&certification_text(c));
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(["g", "k", "h", "denominator", "value"]);
        for (g, row) in self.rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let _ = w.write_record([
                    g.to_string(),
                    k.to_string(),
                    full(self.steps[g]),
                    full(self.denominator),
                    full(*v),
                ]);
            }
        }
        let mut text = into_string(w);
        if let Some(c) = &self.certification {
            let mut w = csv::Writer::from_writer(Vec::new());
            let _ = w.write_record([
                "certified_value",
                "decimals",
                "stop_reason",
                "g",
                "k",
                "spread",
                "tol",
            ]);
            let _ = w.write_record([
                full(c.value),
                c.decimals.to_string(),
                c.stop_reason.clone(),
                c.g.to_string(),
                c.k.to_string(),
                c.spread.map(full).unwrap_or_default(),
                full(c.tol),
            ]);
            text.push('\n');
            text.push_str(&into_string(w));
        }
        text
    }
}

/// Parses the `g,k,h,denominator,value` section written by [`TableauDoc::csv`].
pub fn read_tableau_csv(text: &str) -> Result<Vec<Vec<f64>>, ReadError> {
    #[derive(Deserialize)]
    struct Entry {
        g: usize,
        k: usize,
        #[allow(dead_code)]
        h: f64,
        #[allow(dead_code)]
        denominator: f64,
        value: f64,
    }
    let section = text.split("\n\n").next().unwrap_or_default();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for entry in csv::Reader::from_reader(section.as_bytes()).deserialize::<Entry>() {
        let e = entry?;
        if e.k == 0 && e.g == rows.len() {
            rows.push(Vec::with_capacity(e.g + 1));
        }
        let in_order = rows.len() == e.g + 1 && rows[e.g].len() == e.k && e.k <= e.g;
        if !in_order {
            return Err(ReadError::Malformed(format!(
                "entry ({}, {}) out of lower-triangular order",
                e.g, e.k
            )));
        }
        rows[e.g].push(e.value);
    }
    if rows.is_empty() || rows.iter().enumerate().any(|(g, r)| r.len() != g + 1) {
        return Err(ReadError::Malformed("incomplete tableau".into()));
    }
    Ok(rows)
}

pub fn certification_text(c: &CertificationDoc) -> String {
    if c.decimals == 0 {
        return format!(
            "no convergence within tol = {:e}; best value {}\n",
            c.tol,
            rounded(c.value)
        );
    }
    format!(
        "certified {:.*}: {} decimal places ({}), stop: {}, entry U({},{}) = {}\n",
        c.decimals as usize,
        c.value,
        decimals_in_words(c.decimals),
        c.decimals,
        c.stop_reason,
        c.g,
        c.k,
        rounded(c.value),
    )
}

fn decimals_in_words(d: u32) -> String {
    const WORDS: [&str; 16] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        "eleven", "twelve", "thirteen", "fourteen", "fifteen",
    ];
    WORDS
        .get(d as usize)
        .map_or_else(|| d.to_string(), |w| w.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareDoc {
    pub schema_version: u32,
    pub command: String,
    pub power_index: f64,
    pub nitm_value: f64,
    pub nitm_decimals: u32,
    pub nitm_stop_reason: String,
    pub oracle_value: f64,
    pub oracle_residual: f64,
    pub oracle_iterations: usize,
    pub difference: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CompareDoc {
    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn table(&self) -> String {
        format!(
            "P                      {}\n\
             NITM certified f''(0)  {}  ({} decimals, {})\n\
             shooting f''(0)        {}  ({} bisections, residual {:e})\n\
             |difference|           {:e}\n\
             threshold              {:e}\n\
             {}\n",
            self.power_index,
            rounded(self.nitm_value),
            self.nitm_decimals,
            self.nitm_stop_reason,
            rounded(self.oracle_value),
            self.oracle_iterations,
            self.oracle_residual,
            self.difference,
            self.threshold,
            self.verdict(),
        )
    }

    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record([
            "power_index",
            "nitm_value",
            "nitm_decimals",
            "oracle_value",
            "oracle_residual",
            "difference",
            "threshold",
            "verdict",
        ]);
        let _ = w.write_record([
            full(self.power_index),
            full(self.nitm_value),
            self.nitm_decimals.to_string(),
            full(self.oracle_value),
            full(self.oracle_residual),
            full(self.difference),
            full(self.threshold),
            self.verdict().to_string(),
        ]);
        into_string(w)
    }
}

/// Header of the profile file.
pub const PROFILE_HEADER: [&str; 8] = [
    "eta_star", "fstar", "fpstar", "fppstar", "eta", "f", "fp", "fpp",
];

/// Writes every `stride`-th node of the star and physical trajectories,
/// always including the last node.
pub fn profile_csv(result: &NitmResult, stride: usize) -> Option<String> {
    let star = result.star_trajectory.as_ref()?;
    let phys = result.physical_trajectory.as_ref()?;
    let stride = stride.max(1);
    let last = star.len() - 1;
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(PROFILE_HEADER);
    for i in (0..=last).filter(|i| i % stride == 0 || *i == last) {
        let (s, p) = (&star.states()[i], &phys.states()[i]);
        let _ = w.write_record([
            full(star.abscissa(i)),
            full(s.f),
            full(s.fp),
            full(s.fpp),
            full(phys.abscissa(i)),
            full(p.f),
            full(p.fp),
            full(p.fpp),
        ]);
    }
    Some(into_string(w))
}

/// Stride keeping a profile at or under `max_rows` rows.
pub fn default_stride(nodes: usize, max_rows: usize) -> usize {
    nodes.div_ceil(max_rows.max(1)).max(1)
}
