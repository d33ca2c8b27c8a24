//! Evaluation records and the meta-knowledge bases built from them.
//!
//! A record is one fold of a cross-validated pipeline evaluation. Bases are
//! immutable after [`ingest`]; every query is a read-only view over an index
//! of `(dataset, predictor)` cells.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::config_space::Roster;
use crate::error::{Error, Result, RowDiagnostic};

pub const DEFAULT_FOLDS: usize = 10;

/// Mean and best error assigned to a cell without a single ok evaluation.
pub const MISSING_PENALTY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Harvested from past optimizer runs; irregular coverage.
    Opportunistic,
    /// One default-hyperparameter CV evaluation per cell.
    Systematic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineFilter {
    #[default]
    All,
    SingleOnly,
    MultiOnly,
}

impl PipelineFilter {
    fn admits(self, record: &EvaluationRecord) -> bool {
        match self {
            PipelineFilter::All => true,
            PipelineFilter::SingleOnly => record.pipeline.len() == 1,
            PipelineFilter::MultiOnly => record.pipeline.len() > 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PipelineFilter::All => "all",
            PipelineFilter::SingleOnly => "single_only",
            PipelineFilter::MultiOnly => "multi_only",
        }
    }
}

impl std::str::FromStr for PipelineFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(PipelineFilter::All),
            "single_only" => Ok(PipelineFilter::SingleOnly),
            "multi_only" => Ok(PipelineFilter::MultiOnly),
            other => Err(Error::InvalidArgument(format!("unknown pipeline filter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub base_id: String,
    pub dataset_id: String,
    pub predictor_id: String,
    pub pipeline: Vec<String>,
    pub config_id: String,
    pub fold_index: usize,
    /// Fraction in `[0, 1]`; present iff the status is ok.
    pub error_rate: Option<f64>,
    pub eval_time_s: f64,
    pub status: Status,
}

impl EvaluationRecord {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    fn check(&self, folds: usize) -> std::result::Result<(), String> {
        if self.dataset_id.is_empty() || self.predictor_id.is_empty() || self.base_id.is_empty() {
            return Err("empty identifier".into());
        }
        if self.pipeline.is_empty() || self.pipeline.iter().any(String::is_empty) {
            return Err("empty pipeline component".into());
        }
        if self.pipeline.last() != Some(&self.predictor_id) {
            return Err(format!(
                "pipeline `{}` does not end in predictor `{}`",
                self.pipeline.join("|"),
                self.predictor_id
            ));
        }
        if self.fold_index >= folds {
            return Err(format!("fold_index {} outside [0, {}]", self.fold_index, folds - 1));
        }
        if !(self.eval_time_s.is_finite() && self.eval_time_s >= 0.0) {
            return Err(format!("eval_time_s {} is not a non-negative number", self.eval_time_s));
        }
        match (self.status, self.error_rate) {
            (Status::Ok, Some(e)) if (0.0..=1.0).contains(&e) => Ok(()),
            (Status::Ok, Some(e)) => Err(format!("error_rate {e} outside [0, 1]")),
            (Status::Ok, None) => Err("status ok without error_rate".into()),
            (Status::Failed, None) => Ok(()),
            (Status::Failed, Some(_)) => Err("status failed with an error_rate".into()),
        }
    }
}

/// Flat CSV/JSON-lines row.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawRow {
    base_id: String,
    dataset_id: String,
    predictor_id: String,
    pipeline: String,
    config_id: String,
    fold_index: usize,
    #[serde(default, deserialize_with = "empty_as_none")]
    error_rate: Option<f64>,
    eval_time_s: f64,
    status: Status,
}

fn empty_as_none<'de, D>(de: D) -> std::result::Result<Option<f64>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Field {
        Num(f64),
        Text(String),
    }
    match Option::<Field>::deserialize(de)? {
        None => Ok(None),
        Some(Field::Num(v)) => Ok(Some(v)),
        Some(Field::Text(s)) if s.trim().is_empty() => Ok(None),
        Some(Field::Text(s)) => s.trim().parse().map(Some).map_err(serde::de::Error::custom),
    }
}

impl RawRow {
    fn from_record(r: &EvaluationRecord) -> Self {
        Self {
            base_id: r.base_id.clone(),
            dataset_id: r.dataset_id.clone(),
            predictor_id: r.predictor_id.clone(),
            pipeline: r.pipeline.join("|"),
            config_id: r.config_id.clone(),
            fold_index: r.fold_index,
            error_rate: r.error_rate,
            eval_time_s: r.eval_time_s,
            status: r.status,
        }
    }

    fn into_record(self, percent_errors: bool) -> EvaluationRecord {
        EvaluationRecord {
            base_id: self.base_id,
            dataset_id: self.dataset_id,
            predictor_id: self.predictor_id,
            pipeline: self.pipeline.split('|').map(|s| s.trim().to_string()).collect(),
            config_id: self.config_id,
            fold_index: self.fold_index,
            error_rate: self.error_rate.map(|e| if percent_errors { e / 100.0 } else { e }),
            eval_time_s: self.eval_time_s,
            status: self.status,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    JsonLines,
}

impl RecordFormat {
    /// Picks JSON lines for `.jsonl`/`.json` paths and CSV otherwise.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => RecordFormat::JsonLines,
            _ => RecordFormat::Csv,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Expected base id; rows of any other base are rejected. Defaults to the first row's.
    pub base_id: Option<String>,
    pub flavor: Flavor,
    pub folds: usize,
    pub roster: Option<Roster>,
    /// Error rates are given as percentages.
    pub percent_errors: bool,
    /// A predictor appearing inside a pipeline, not only at its end, is credited with the evaluation.
    pub credit_base_learners: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            base_id: None,
            flavor: Flavor::Opportunistic,
            folds: DEFAULT_FOLDS,
            roster: None,
            percent_errors: false,
            credit_base_learners: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellAggregate {
    pub dataset_id: String,
    pub predictor_id: String,
    pub n_evaluations: usize,
    pub mean_error: f64,
    pub best_error: f64,
    /// Mean over ok evaluations; zero when there are none.
    pub mean_eval_time: f64,
    pub n_single_component: usize,
    pub n_multi_component: usize,
    pub n_failed: usize,
}

impl CellAggregate {
    pub fn is_penalty(&self) -> bool {
        self.n_evaluations == 0
    }
}

#[derive(Debug, Clone)]
pub struct MetaKnowledgeBase {
    base_id: String,
    flavor: Flavor,
    folds: usize,
    credit_base_learners: bool,
    records: Vec<EvaluationRecord>,
    predictors: Vec<String>,
    datasets: Vec<String>,
    roster: Option<Roster>,
    /// (dataset index, predictor index) -> record indices credited to the cell.
    cells: HashMap<(usize, usize), Vec<usize>>,
}

impl MetaKnowledgeBase {
    /// Validates records and builds the cell index.
    pub fn from_records(records: Vec<EvaluationRecord>, options: &IngestOptions) -> Result<Self> {
        if options.folds == 0 {
            return Err(Error::InvalidBase("folds must be positive".into()));
        }
        let base_id = options
            .base_id
            .clone()
            .or_else(|| records.first().map(|r| r.base_id.clone()))
            .unwrap_or_else(|| "base".to_string());

        let mut diagnostics = Vec::new();
        for (i, r) in records.iter().enumerate() {
            if let Err(msg) = r.check(options.folds) {
                diagnostics.push(RowDiagnostic { row: i + 1, message: msg });
            } else if r.base_id != base_id {
                diagnostics.push(RowDiagnostic {
                    row: i + 1,
                    message: format!("base_id `{}` differs from `{base_id}`", r.base_id),
                });
            }
        }
        if !diagnostics.is_empty() {
            return Err(Error::Rejected(diagnostics));
        }

        let mut predictors: BTreeSet<String> = records.iter().map(|r| r.predictor_id.clone()).collect();
        let mut datasets: BTreeSet<String> = records.iter().map(|r| r.dataset_id.clone()).collect();
        if let Some(roster) = &options.roster {
            roster.validate()?;
            let declared: BTreeSet<String> = roster.predictor_ids().into_iter().collect();
            if let Some(stray) = predictors.iter().find(|p| !declared.contains(*p)) {
                return Err(Error::InvalidBase(format!("predictor `{stray}` is not in the roster")));
            }
            predictors.extend(declared);
            datasets.extend(roster.datasets.iter().cloned());
        }
        let predictors: Vec<String> = predictors.into_iter().collect();
        let datasets: Vec<String> = datasets.into_iter().collect();
        let p_index: HashMap<&str, usize> =
            predictors.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let d_index: HashMap<&str, usize> =
            datasets.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();

        let mut seen: HashMap<(&str, &str, &str, usize), f64> = HashMap::new();
        for r in records.iter().filter(|r| r.is_ok()) {
            let key = (r.dataset_id.as_str(), r.predictor_id.as_str(), r.config_id.as_str(), r.fold_index);
            let err = r.error_rate.unwrap_or(MISSING_PENALTY);
            if let Some(prev) = seen.insert(key, err) {
                if prev != err {
                    return Err(Error::ConflictingDuplicate(format!(
                        "({base_id}, {}, {}, {}, fold {}): {prev} vs {err}",
                        r.dataset_id, r.predictor_id, r.config_id, r.fold_index
                    )));
                }
            }
        }

        let mut cells: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            let d = d_index[r.dataset_id.as_str()];
            let mut credited: BTreeSet<usize> = BTreeSet::new();
            credited.insert(p_index[r.predictor_id.as_str()]);
            if options.credit_base_learners {
                credited.extend(r.pipeline.iter().filter_map(|c| p_index.get(c.as_str()).copied()));
            }
            for p in credited {
                cells.entry((d, p)).or_default().push(i);
            }
        }

        let base = Self {
            base_id,
            flavor: options.flavor,
            folds: options.folds,
            credit_base_learners: options.credit_base_learners,
            records,
            predictors,
            datasets,
            roster: options.roster.clone(),
            cells,
        };
        if base.flavor == Flavor::Systematic {
            base.check_systematic()?;
        }
        Ok(base)
    }

    fn check_systematic(&self) -> Result<()> {
        let mut configs: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
        let mut ok_counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        for r in &self.records {
            let key = (r.dataset_id.as_str(), r.predictor_id.as_str());
            configs.entry(key).or_default().insert(r.config_id.as_str());
            if r.is_ok() {
                *ok_counts.entry(key).or_default() += 1;
            }
        }
        if let Some(((d, p), set)) = configs.iter().find(|(_, set)| set.len() > 1) {
            return Err(Error::InvalidBase(format!(
                "systematic base has {} configs for ({d}, {p})",
                set.len()
            )));
        }
        if let Some(((d, p), n)) = ok_counts.iter().find(|(_, &n)| n > self.folds) {
            return Err(Error::InvalidBase(format!(
                "systematic base has {n} ok records for ({d}, {p}) but only {} folds",
                self.folds
            )));
        }
        Ok(())
    }

    pub fn base_id(&self) -> &str {
        &self.base_id
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn credits_base_learners(&self) -> bool {
        self.credit_base_learners
    }

    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    /// Predictor universe, sorted by id.
    pub fn predictors(&self) -> &[String] {
        &self.predictors
    }

    /// Dataset universe, sorted by id.
    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn roster(&self) -> Option<&Roster> {
        self.roster.as_ref()
    }

    fn dataset_index(&self, id: &str) -> Result<usize> {
        self.datasets.binary_search_by(|d| d.as_str().cmp(id)).map_err(|_| Error::UnknownDataset(id.into()))
    }

    fn predictor_index(&self, id: &str) -> Result<usize> {
        self.predictors
            .binary_search_by(|p| p.as_str().cmp(id))
            .map_err(|_| Error::UnknownPredictor(id.into()))
    }

    pub fn has_dataset(&self, id: &str) -> bool {
        self.dataset_index(id).is_ok()
    }

    fn cell_records(&self, d: usize, p: usize) -> impl Iterator<Item = &EvaluationRecord> {
        self.cells.get(&(d, p)).into_iter().flatten().map(move |&i| &self.records[i])
    }

    /// Ok single-fold error rates for a cell under the filter, sorted ascending.
    pub fn cell_errors(&self, dataset_id: &str, predictor_id: &str, filter: PipelineFilter) -> Result<Vec<f64>> {
        let (d, p) = (self.dataset_index(dataset_id)?, self.predictor_index(predictor_id)?);
        let mut errors: Vec<f64> = self
            .cell_records(d, p)
            .filter(|r| filter.admits(r))
            .filter_map(|r| r.error_rate)
            .collect();
        errors.sort_by(f64::total_cmp);
        Ok(errors)
    }

    /// Mean and best error, counts and mean evaluation time for one cell.
    pub fn aggregate(&self, dataset_id: &str, predictor_id: &str, filter: PipelineFilter) -> Result<CellAggregate> {
        let (d, p) = (self.dataset_index(dataset_id)?, self.predictor_index(predictor_id)?);
        let mut errors = Vec::new();
        let mut times = Vec::new();
        let (mut single, mut multi, mut failed) = (0, 0, 0);
        for r in self.cell_records(d, p).filter(|r| filter.admits(r)) {
            match r.error_rate {
                Some(e) => {
                    errors.push(e);
                    times.push(r.eval_time_s);
                    if r.pipeline.len() == 1 {
                        single += 1;
                    } else {
                        multi += 1;
                    }
                }
                None => failed += 1,
            }
        }
        // Summation order is fixed by sorting, so aggregates ignore record order.
        errors.sort_by(f64::total_cmp);
        times.sort_by(f64::total_cmp);
        let (mean_error, best_error) = if errors.is_empty() {
            (MISSING_PENALTY, MISSING_PENALTY)
        } else {
            let mean = errors.iter().sum::<f64>() / errors.len() as f64;
            // Rounding can push the mean a hair below the minimum of equal values.
            (mean.max(errors[0]), errors[0])
        };
        let mean_eval_time =
            if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 };
        Ok(CellAggregate {
            dataset_id: dataset_id.to_string(),
            predictor_id: predictor_id.to_string(),
            n_evaluations: errors.len(),
            mean_error,
            best_error,
            mean_eval_time,
            n_single_component: single,
            n_multi_component: multi,
            n_failed: failed,
        })
    }

    /// Mean evaluation time over every record (ok or failed) of a cell; zero if it has none.
    pub fn cell_mean_eval_time(&self, dataset_id: &str, predictor_id: &str) -> Result<f64> {
        let (d, p) = (self.dataset_index(dataset_id)?, self.predictor_index(predictor_id)?);
        let mut times: Vec<f64> = self.cell_records(d, p).map(|r| r.eval_time_s).collect();
        times.sort_by(f64::total_cmp);
        Ok(if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 })
    }

    /// Mean evaluation time over all pipeline evaluations that contain the
    /// predictor anywhere, plus whether any of them succeeded.
    pub fn predictor_mean_eval_time(&self, predictor_id: &str) -> Result<(f64, bool)> {
        self.predictor_index(predictor_id)?;
        let mut times = Vec::new();
        let mut any_ok = false;
        for r in &self.records {
            if r.pipeline.iter().any(|c| c == predictor_id) {
                times.push(r.eval_time_s);
                any_ok |= r.is_ok() && r.predictor_id == predictor_id;
            }
        }
        times.sort_by(f64::total_cmp);
        let mean = if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 };
        Ok((mean, any_ok))
    }

    /// Dense `n_evaluations` matrix over the universes.
    pub fn evaluation_counts(&self) -> EvaluationCounts {
        let mut counts = vec![vec![0usize; self.predictors.len()]; self.datasets.len()];
        for (&(d, p), idx) in &self.cells {
            counts[d][p] = idx.iter().filter(|&&i| self.records[i].is_ok()).count();
        }
        EvaluationCounts { datasets: self.datasets.clone(), predictors: self.predictors.clone(), counts }
    }

    /// Re-serialises the records in the CSV schema accepted by [`ingest`].
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_records_csv(&self.records, writer)
    }
}

pub fn write_records_csv<W: Write>(records: &[EvaluationRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(RawRow::from_record(r))?;
    }
    if records.is_empty() {
        w.write_record([
            "base_id", "dataset_id", "predictor_id", "pipeline", "config_id", "fold_index", "error_rate",
            "eval_time_s", "status",
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Evaluation-count matrix, `counts[dataset][predictor]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationCounts {
    pub datasets: Vec<String>,
    pub predictors: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl EvaluationCounts {
    pub fn get(&self, dataset: &str, predictor: &str) -> Option<usize> {
        let d = self.datasets.iter().position(|x| x == dataset)?;
        let p = self.predictors.iter().position(|x| x == predictor)?;
        Some(self.counts[d][p])
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Rows and columns reordered by descending total count, ties by id.
    pub fn sorted_by_totals(&self) -> EvaluationCounts {
        let row_tot: Vec<usize> = self.counts.iter().map(|r| r.iter().sum()).collect();
        let col_tot: Vec<usize> =
            (0..self.predictors.len()).map(|p| self.counts.iter().map(|r| r[p]).sum()).collect();
        let mut rows: Vec<usize> = (0..self.datasets.len()).collect();
        rows.sort_by(|&a, &b| row_tot[b].cmp(&row_tot[a]).then_with(|| self.datasets[a].cmp(&self.datasets[b])));
        let mut cols: Vec<usize> = (0..self.predictors.len()).collect();
        cols.sort_by(|&a, &b| {
            col_tot[b].cmp(&col_tot[a]).then_with(|| self.predictors[a].cmp(&self.predictors[b]))
        });
        EvaluationCounts {
            datasets: rows.iter().map(|&d| self.datasets[d].clone()).collect(),
            predictors: cols.iter().map(|&p| self.predictors[p].clone()).collect(),
            counts: rows.iter().map(|&d| cols.iter().map(|&p| self.counts[d][p]).collect()).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["dataset".to_string()];
        header.extend(self.predictors.iter().cloned());
        w.write_record(&header)?;
        for (d, row) in self.datasets.iter().zip(&self.counts) {
            let mut rec = vec![d.clone()];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses a record stream and validates it into a base.
pub fn ingest<R: Read>(source: R, format: RecordFormat, options: &IngestOptions) -> Result<MetaKnowledgeBase> {
    let records = parse_records(source, format, options.percent_errors)?;
    MetaKnowledgeBase::from_records(records, options)
}

fn parse_records<R: Read>(source: R, format: RecordFormat, percent_errors: bool) -> Result<Vec<EvaluationRecord>> {
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    match format {
        RecordFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
            for (i, row) in reader.deserialize::<RawRow>().enumerate() {
                match row {
                    Ok(raw) => records.push(raw.into_record(percent_errors)),
                    Err(e) => diagnostics.push(RowDiagnostic { row: i + 1, message: e.to_string() }),
                }
            }
        }
        RecordFormat::JsonLines => {
            let mut row = 0;
            for line in BufReader::new(source).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                row += 1;
                match serde_json::from_str::<RawRow>(&line) {
                    Ok(raw) => records.push(raw.into_record(percent_errors)),
                    Err(e) => diagnostics.push(RowDiagnostic { row, message: e.to_string() }),
                }
            }
        }
    }
    if diagnostics.is_empty() {
        Ok(records)
    } else {
        Err(Error::Rejected(diagnostics))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "base_id,dataset_id,predictor_id,pipeline,config_id,fold_index,error_rate,eval_time_s,status\n";

    fn base_from(rows: &str, options: &IngestOptions) -> Result<MetaKnowledgeBase> {
        ingest(format!("{HEADER}{rows}").as_bytes(), RecordFormat::Csv, options)
    }

    #[test]
    fn empty_stream_with_roster() {
        let roster = Roster::plain((0..30).map(|i| format!("P{i}")));
        let opts = IngestOptions { roster: Some(roster), ..IngestOptions::default() };
        let base = base_from("", &opts).unwrap();
        assert_eq!(base.predictors().len(), 30);
        assert!(base.records().is_empty());
    }

    #[test]
    fn single_ok_row() {
        let base = base_from("b,d1,P0,P0,c0,3,0.25,1.5,ok\n", &IngestOptions::default()).unwrap();
        assert_eq!(base.records().len(), 1);
        let agg = base.aggregate("d1", "P0", PipelineFilter::All).unwrap();
        assert_eq!(agg.mean_error, 0.25);
        assert_eq!(agg.n_evaluations, 1);
    }

    #[test]
    fn arithmetic_mean_and_best() {
        let rows = "b,d1,P0,P0,c0,0,0.2,1,ok\nb,d1,P0,P0,c0,1,0.3,1,ok\nb,d1,P0,P0,c0,2,0.4,1,ok\n";
        let agg = base_from(rows, &IngestOptions::default()).unwrap().aggregate("d1", "P0", PipelineFilter::All).unwrap();
        assert!((agg.mean_error - 0.3).abs() < 1e-15);
        assert_eq!(agg.best_error, 0.2);
    }

    #[test]
    fn missing_cell_scores_full_penalty() {
        let rows = "b,d1,P0,P0,c0,0,0.2,1,ok\nb,d1,P1,P1,c0,0,,4,failed\n";
        let base = base_from(rows, &IngestOptions::default()).unwrap();
        let agg = base.aggregate("d1", "P1", PipelineFilter::All).unwrap();
        assert_eq!((agg.mean_error, agg.best_error, agg.n_evaluations, agg.n_failed), (1.0, 1.0, 0, 1));
    }

    #[test]
    fn pipeline_filters() {
        let rows = "b,d1,P0,P0,c0,0,0.5,1,ok\nb,d1,P0,F1|P0,c1,0,0.1,1,ok\n";
        let base = base_from(rows, &IngestOptions::default()).unwrap();
        let single = base.aggregate("d1", "P0", PipelineFilter::SingleOnly).unwrap();
        let all = base.aggregate("d1", "P0", PipelineFilter::All).unwrap();
        let multi = base.aggregate("d1", "P0", PipelineFilter::MultiOnly).unwrap();
        assert_eq!(single.mean_error, 0.5);
        assert!((all.mean_error - 0.3).abs() < 1e-15);
        assert_eq!(multi.mean_error, 0.1);
        assert_eq!(all.n_evaluations, single.n_evaluations + multi.n_evaluations);
    }

    #[test]
    fn unknown_identifiers() {
        let base = base_from("b,d1,P0,P0,c0,0,0.5,1,ok\n", &IngestOptions::default()).unwrap();
        assert!(matches!(base.aggregate("d9", "P0", PipelineFilter::All), Err(Error::UnknownDataset(_))));
        assert!(matches!(base.aggregate("d1", "P9", PipelineFilter::All), Err(Error::UnknownPredictor(_))));
    }

    #[test]
    fn schema_violations_are_row_numbered() {
        let rows = "b,d1,P0,P0,c0,0,0.5,1,ok\nb,d1,P0,P0,c0,zero,0.5,1,ok\nb,d1,P0,P1,c0,1,0.5,1,ok\nb,d1,P0,P0,c0,12,0.5,1,ok\nb,d1,P0,P0,c0,2,1.5,1,ok\nb,d1,P0,P0,c0,3,,1,ok\n";
        match base_from(rows, &IngestOptions::default()) {
            Err(Error::Rejected(diags)) => {
                // the parse failure is reported alone before semantic checks run
                assert_eq!(diags.len(), 1);
                assert_eq!(diags[0].row, 2);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
        let semantic = "b,d1,P0,P0,c0,0,0.5,1,ok\nb,d1,P0,P1,c0,1,0.5,1,ok\nb,d1,P0,P0,c0,12,0.5,1,ok\nb,d1,P0,P0,c0,2,1.5,1,ok\nb,d1,P0,P0,c0,3,,1,ok\nb,d1,P0,P0,c0,4,0.2,1,failed\n";
        match base_from(semantic, &IngestOptions::default()) {
            Err(Error::Rejected(diags)) => {
                let rows: Vec<usize> = diags.iter().map(|d| d.row).collect();
                assert_eq!(rows, vec![2, 3, 4, 5, 6]);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn conflicting_duplicate_is_corruption() {
        let rows = "b,d1,P0,P0,c0,0,0.5,1,ok\nb,d1,P0,P0,c0,0,0.4,1,ok\n";
        assert!(matches!(base_from(rows, &IngestOptions::default()), Err(Error::ConflictingDuplicate(_))));
        let same = "b,d1,P0,P0,c0,0,0.5,1,ok\nb,d1,P0,P0,c0,0,0.5,1,ok\n";
        assert!(base_from(same, &IngestOptions::default()).is_ok());
    }

    #[test]
    fn systematic_allows_one_config_per_cell() {
        let opts = IngestOptions { flavor: Flavor::Systematic, ..IngestOptions::default() };
        let rows = "b,d1,P0,P0,c0,0,0.5,1,ok\nb,d1,P0,P0,c1,1,0.4,1,ok\n";
        assert!(matches!(base_from(rows, &opts), Err(Error::InvalidBase(_))));
    }

    #[test]
    fn percent_flag_scales_errors() {
        let opts = IngestOptions { percent_errors: true, ..IngestOptions::default() };
        let base = base_from("b,d1,P0,P0,c0,0,25,1,ok\n", &opts).unwrap();
        assert_eq!(base.aggregate("d1", "P0", PipelineFilter::All).unwrap().mean_error, 0.25);
    }

    #[test]
    fn base_learner_credit_is_opt_in() {
        let rows = "b,d1,P5,P2|P5,c0,0,0.3,1,ok\nb,d1,P2,P2,c0,0,0.1,1,ok\n";
        let off = base_from(rows, &IngestOptions::default()).unwrap();
        assert_eq!(off.aggregate("d1", "P2", PipelineFilter::All).unwrap().n_evaluations, 1);
        let opts = IngestOptions { credit_base_learners: true, ..IngestOptions::default() };
        let on = base_from(rows, &opts).unwrap();
        let agg = on.aggregate("d1", "P2", PipelineFilter::All).unwrap();
        assert_eq!(agg.n_evaluations, 2);
        assert!((agg.mean_error - 0.2).abs() < 1e-15);
    }

    #[test]
    fn counts_matrix() {
        let empty = base_from("", &IngestOptions {
            roster: Some(Roster { datasets: vec!["d1".into()], ..Roster::plain(["P0", "P1"]) }),
            ..IngestOptions::default()
        })
        .unwrap();
        assert_eq!(empty.evaluation_counts().total(), 0);
        assert_eq!(empty.evaluation_counts().counts, vec![vec![0, 0]]);

        let rows = "b,d1,P0,P0,c0,0,0.5,1,ok\nb,d1,P0,P0,c0,1,0.5,1,ok\nb,d1,P0,P0,c0,2,0.5,1,ok\nb,d2,P1,P1,c0,2,0.5,1,ok\nb,d2,P1,P1,c0,3,,1,failed\n";
        let counts = base_from(rows, &IngestOptions::default()).unwrap().evaluation_counts();
        assert_eq!(counts.get("d1", "P0"), Some(3));
        assert_eq!(counts.get("d2", "P1"), Some(1));
        let sorted = counts.sorted_by_totals();
        assert_eq!(sorted.datasets, vec!["d1", "d2"]);
        assert_eq!(sorted.predictors, vec!["P0", "P1"]);
    }

    #[test]
    fn json_lines_form() {
        let text = r#"{"base_id":"b","dataset_id":"d1","predictor_id":"P0","pipeline":"P0","config_id":"c","fold_index":0,"error_rate":0.2,"eval_time_s":1.0,"status":"ok"}
{"base_id":"b","dataset_id":"d1","predictor_id":"P0","pipeline":"P0","config_id":"c","fold_index":1,"error_rate":null,"eval_time_s":1.0,"status":"failed"}
"#;
        let base = ingest(text.as_bytes(), RecordFormat::JsonLines, &IngestOptions::default()).unwrap();
        assert_eq!(base.records().len(), 2);
    }

    #[test]
    fn roster_must_cover_observed_predictors() {
        let opts = IngestOptions { roster: Some(Roster::plain(["P0"])), ..IngestOptions::default() };
        assert!(matches!(base_from("b,d1,P9,P9,c,0,0.5,1,ok\n", &opts), Err(Error::InvalidBase(_))));
    }
}
