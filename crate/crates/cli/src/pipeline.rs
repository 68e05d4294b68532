//! Stage orchestration: ingest, aggregate, indicators, classify, export.
//!
//! The `run` entry point executes all stages in memory. Each stage is also
//! runnable standalone from the previous stage's serialized output, and the
//! two paths produce byte-identical files: interchange CSVs carry full
//! float precision, and every writer sorts its rows.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use oatlas_core::classify::{jenks_breaks, symmetric_scheme, ClassScheme};
use oatlas_core::corpus::{
    IngestReport, Ingestor, PublicationRecord, SubjectScheme, ZoneLevel, ZoneRegistry,
};
use oatlas_core::counting::{read_aggregate_csv, write_aggregate_csv, AggregateTable, Aggregator};
use oatlas_core::indicators::{
    noai, oa_share, oa_share_by_discipline, read_indicator_csv, specialization_index,
    write_indicator_csv, zone_support, IndicatorResult, IndicatorRow, LabeledResult,
};
use oatlas_core::{emit_table, join_geojson, WORLD_ZONE};

use crate::config::RunConfig;
use crate::report::{
    digest_file, IngestSummary, InputDigest, JoinSummary, RunReport, StageTiming,
};

const INGEST_CHUNK_LINES: usize = 32_768;
const SKIP_SAMPLE_CAP: usize = 20;

#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} failed: {}", self.stage, self.message)
    }
}

impl std::error::Error for StageError {}

fn stage_err(stage: &'static str, message: impl fmt::Display) -> StageError {
    StageError {
        stage,
        message: message.to_string(),
    }
}

/// Tracks files created during a run so a failing stage can remove its
/// partial outputs.
struct Outputs {
    dir: PathBuf,
    created: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> std::io::Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path)?;
        self.created.push(path);
        Ok(BufWriter::new(file))
    }

    fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .created
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    }

    fn cleanup(&self) {
        for path in &self.created {
            let _ = fs::remove_file(path);
        }
    }
}

struct Timer<'a> {
    stages: &'a mut Vec<StageTiming>,
}

impl<'a> Timer<'a> {
    fn time<T>(
        &mut self,
        stage: &'static str,
        f: impl FnOnce() -> Result<T, StageError>,
    ) -> Result<T, StageError> {
        let start = Instant::now();
        let out = f()?;
        self.stages.push(StageTiming {
            stage: stage.to_string(),
            wall_ms: start.elapsed().as_millis() as u64,
        });
        Ok(out)
    }
}

pub struct LoadedInputs {
    pub scheme: SubjectScheme,
    pub registry: ZoneRegistry,
    pub geometry_text: Option<String>,
    pub digests: Vec<InputDigest>,
}

pub fn load_inputs(config: &RunConfig) -> Result<LoadedInputs, StageError> {
    let scheme = SubjectScheme::from_csv_path(&config.subject_scheme)
        .map_err(|e| stage_err("inputs", format!("subject scheme: {e}")))?;
    let registry = ZoneRegistry::from_csv_path(&config.zone_registry)
        .map_err(|e| stage_err("inputs", format!("zone registry: {e}")))?;
    let geometry_text = match &config.geometry {
        Some(path) => Some(
            fs::read_to_string(path)
                .map_err(|e| stage_err("inputs", format!("geometry {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let mut digests = Vec::new();
    let mut digest_paths: Vec<&PathBuf> = config.corpus.iter().collect();
    digest_paths.push(&config.subject_scheme);
    digest_paths.push(&config.zone_registry);
    if let Some(geometry) = &config.geometry {
        digest_paths.push(geometry);
    }
    for path in digest_paths {
        digests.push(
            digest_file(path)
                .map_err(|e| stage_err("inputs", format!("{}: {e}", path.display())))?,
        );
    }
    Ok(LoadedInputs {
        scheme,
        registry,
        geometry_text,
        digests,
    })
}

/// Reads all corpus files, validating lines in parallel chunks while
/// absorbing outcomes serially in input order, so results are deterministic
/// for any thread count.
pub fn ingest_corpus(
    config: &RunConfig,
    scheme: &SubjectScheme,
    registry: &ZoneRegistry,
) -> Result<(Vec<PublicationRecord>, IngestReport), StageError> {
    let mut ingestor = Ingestor::new(scheme, registry);
    let mut records = Vec::new();
    for path in &config.corpus {
        let file = File::open(path)
            .map_err(|e| stage_err("ingest", format!("{}: {e}", path.display())))?;
        let mut reader = BufReader::new(file);
        let mut chunk: Vec<String> = Vec::with_capacity(INGEST_CHUNK_LINES);
        loop {
            chunk.clear();
            for _ in 0..INGEST_CHUNK_LINES {
                let mut line = String::new();
                let read = reader
                    .read_line(&mut line)
                    .map_err(|e| stage_err("ingest", format!("{}: {e}", path.display())))?;
                if read == 0 {
                    break;
                }
                while line.ends_with('\n') || line.ends_with('\r') {
                    line.pop();
                }
                chunk.push(line);
            }
            if chunk.is_empty() {
                break;
            }
            let outcomes: Vec<_> = chunk
                .par_iter()
                .map(|line| ingestor.validate_line(line))
                .collect();
            for outcome in outcomes {
                if let Some(record) = ingestor.absorb(outcome) {
                    records.push(record);
                }
            }
        }
    }
    Ok((records, ingestor.into_report()))
}

fn aggregate_file_name(level: ZoneLevel, period: &str) -> String {
    format!("aggregates_{level}_{period}.csv")
}

/// One pass over the records fills every (level, period) table at once.
pub fn build_tables(
    config: &RunConfig,
    records: &[PublicationRecord],
    scheme: &SubjectScheme,
    registry: &ZoneRegistry,
) -> Result<Vec<(ZoneLevel, AggregateTable)>, StageError> {
    let levels = config.parsed_levels();
    let doc_types = config.parsed_doc_types();
    let geo = config.parsed_geo_counting();
    let mut aggregators: Vec<(ZoneLevel, Aggregator)> = Vec::new();
    for level in &levels {
        for period in &config.periods {
            aggregators.push((
                *level,
                Aggregator::new(*level, period.clone(), scheme, registry, geo),
            ));
        }
    }
    let period_count = config.periods.len();
    for record in records {
        if !doc_types.contains(&record.doc_type) {
            continue;
        }
        let Some(period_idx) = config
            .periods
            .iter()
            .position(|p| p.contains(record.year))
        else {
            continue;
        };
        for level_idx in 0..levels.len() {
            let (_, aggregator) = &mut aggregators[level_idx * period_count + period_idx];
            aggregator
                .add(record)
                .map_err(|e| stage_err("aggregate", e))?;
        }
    }
    Ok(aggregators
        .into_iter()
        .map(|(level, agg)| (level, agg.finish()))
        .collect())
}

fn write_tables(
    tables: &[(ZoneLevel, AggregateTable)],
    outputs: &mut Outputs,
) -> Result<(), StageError> {
    for (level, table) in tables {
        let name = aggregate_file_name(*level, &table.period.name);
        let mut writer = outputs
            .create(&name)
            .map_err(|e| stage_err("aggregate", format!("{name}: {e}")))?;
        write_aggregate_csv(table, &mut writer)
            .map_err(|e| stage_err("aggregate", format!("{name}: {e}")))?;
        writer
            .flush()
            .map_err(|e| stage_err("aggregate", format!("{name}: {e}")))?;
    }
    Ok(())
}

fn read_tables(config: &RunConfig) -> Result<Vec<(ZoneLevel, AggregateTable)>, StageError> {
    let mut tables = Vec::new();
    for level in config.parsed_levels() {
        for period in &config.periods {
            let name = aggregate_file_name(level, &period.name);
            let path = config.output_dir.join(&name);
            let file = File::open(&path).map_err(|_| {
                stage_err(
                    "indicators",
                    format!("{} not found; run the aggregate stage first", path.display()),
                )
            })?;
            let mut parsed = read_aggregate_csv(BufReader::new(file))
                .map_err(|e| stage_err("indicators", format!("{name}: {e}")))?;
            // A header-only file is the serialized form of an empty table.
            let table = match parsed.len() {
                0 => AggregateTable::empty(level, period.clone()),
                1 => parsed.pop().unwrap(),
                n => {
                    return Err(stage_err(
                        "indicators",
                        format!("{name}: expected one table, found {n}"),
                    ))
                }
            };
            if table.level != level || table.period.name != period.name {
                return Err(stage_err(
                    "indicators",
                    format!("{name}: table does not match its file name"),
                ));
            }
            tables.push((level, table));
        }
    }
    Ok(tables)
}

pub struct IndicatorStage {
    pub results: Vec<LabeledResult>,
    pub skips: BTreeMap<String, u64>,
    pub skip_samples: Vec<String>,
}

/// Computes every configured indicator for every zone of every table, plus
/// the world row. Zones where an indicator is undefined are skipped and
/// counted rather than failing the run.
pub fn compute_indicators(
    config: &RunConfig,
    tables: &[(ZoneLevel, AggregateTable)],
    scheme: &SubjectScheme,
) -> Result<IndicatorStage, StageError> {
    let mut stage = IndicatorStage {
        results: Vec::new(),
        skips: BTreeMap::new(),
        skip_samples: Vec::new(),
    };
    let skip = |stage: &mut IndicatorStage, indicator: &str, context: String| {
        *stage.skips.entry(indicator.to_string()).or_default() += 1;
        if stage.skip_samples.len() < SKIP_SAMPLE_CAP {
            stage.skip_samples.push(context);
        }
    };
    for (level, table) in tables {
        let zones: Vec<&str> = table
            .cells
            .keys()
            .map(String::as_str)
            .chain([WORLD_ZONE])
            .collect();
        let period = table.period.name.as_str();
        if config.wants("oa_share") {
            for zone in &zones {
                match oa_share(table, zone) {
                    Ok(result) => stage.results.push(LabeledResult {
                        level: *level,
                        indicator: "oa_share".to_string(),
                        result,
                    }),
                    Err(e) => skip(
                        &mut stage,
                        "oa_share",
                        format!("oa_share {level}/{period}/{zone}: {e}"),
                    ),
                }
            }
        }
        if config.wants("noai") {
            for zone in &zones {
                match noai(table, zone) {
                    Ok(result) => stage.results.push(LabeledResult {
                        level: *level,
                        indicator: "noai".to_string(),
                        result,
                    }),
                    Err(e) => skip(
                        &mut stage,
                        "noai",
                        format!("noai {level}/{period}/{zone}: {e}"),
                    ),
                }
            }
        }
        if config.wants("specialization") {
            for zone in &zones {
                let support = zone_support(table, zone).unwrap_or(0.0);
                for discipline in scheme.disciplines() {
                    match specialization_index(table, scheme, zone, discipline) {
                        Ok(value) => stage.results.push(LabeledResult {
                            level: *level,
                            indicator: format!("specialization:{discipline}"),
                            result: IndicatorResult {
                                zone: zone.to_string(),
                                period: period.to_string(),
                                value,
                                support,
                                excluded_scs: Vec::new(),
                            },
                        }),
                        Err(e) => skip(
                            &mut stage,
                            "specialization",
                            format!("specialization {level}/{period}/{zone}/{discipline}: {e}"),
                        ),
                    }
                }
            }
        }
        if config.wants("discipline_share") {
            let shares = oa_share_by_discipline(table, scheme)
                .map_err(|e| stage_err("indicators", e))?;
            for (discipline, result) in &shares.shares {
                stage.results.push(LabeledResult {
                    level: *level,
                    indicator: format!("discipline_share:{discipline}"),
                    result: result.clone(),
                });
            }
            for discipline in &shares.excluded {
                skip(
                    &mut stage,
                    "discipline_share",
                    format!("discipline_share {level}/{period}/{discipline}: no publications"),
                );
            }
        }
    }
    Ok(stage)
}

fn write_indicators(
    results: &[LabeledResult],
    outputs: &mut Outputs,
) -> Result<(), StageError> {
    let rows: Vec<IndicatorRow> = results.iter().map(IndicatorRow::from).collect();
    let mut writer = outputs
        .create("indicators.csv")
        .map_err(|e| stage_err("indicators", e))?;
    write_indicator_csv(&rows, &mut writer).map_err(|e| stage_err("indicators", e))?;
    writer.flush().map_err(|e| stage_err("indicators", e))?;
    Ok(())
}

fn read_indicators(config: &RunConfig) -> Result<Vec<LabeledResult>, StageError> {
    let path = config.output_dir.join("indicators.csv");
    let file = File::open(&path).map_err(|_| {
        stage_err(
            "classify",
            format!("{} not found; run the indicators stage first", path.display()),
        )
    })?;
    let rows = read_indicator_csv(BufReader::new(file))
        .map_err(|e| stage_err("classify", format!("indicators.csv: {e}")))?;
    Ok(rows
        .into_iter()
        .map(|row| LabeledResult {
            level: row.level,
            indicator: row.indicator,
            result: IndicatorResult {
                zone: row.zone,
                period: row.period,
                value: row.value,
                support: row.support,
                excluded_scs: Vec::new(),
            },
        })
        .collect())
}

/// Classed indicators and where their scheme applies. Specialization shares
/// the symmetric ratio scheme with NOAI; discipline_share stays tabular.
const CLASSED: [&str; 3] = ["oa_share", "noai", "specialization"];

fn is_indicator(labeled: &LabeledResult, indicator: &str) -> bool {
    if indicator == "specialization" {
        labeled.indicator.starts_with("specialization:")
    } else {
        labeled.indicator == indicator
    }
}

pub struct ClassifyStage {
    /// Scheme per (indicator, level).
    pub schemes: BTreeMap<(String, ZoneLevel), ClassScheme>,
    pub notes: Vec<String>,
}

/// Builds one scheme per classed indicator and level. OA shares get Jenks
/// breaks pooled over all periods of the level, so the legend is shared and
/// periods stay comparable; ratio indicators get the symmetric manual
/// scheme. World rows never influence the breaks.
pub fn build_schemes(
    config: &RunConfig,
    results: &[LabeledResult],
) -> Result<ClassifyStage, StageError> {
    let mut stage = ClassifyStage {
        schemes: BTreeMap::new(),
        notes: Vec::new(),
    };
    let symmetric = symmetric_scheme(&config.symmetric_bounds)
        .map_err(|e| stage_err("classify", e))?;
    for level in config.parsed_levels() {
        for indicator in CLASSED {
            if !config.wants(indicator) {
                continue;
            }
            if indicator == "oa_share" {
                let values: Vec<f64> = results
                    .iter()
                    .filter(|r| {
                        r.level == level
                            && r.result.zone != WORLD_ZONE
                            && is_indicator(r, indicator)
                    })
                    .map(|r| r.result.value)
                    .collect();
                if values.is_empty() {
                    stage
                        .notes
                        .push(format!("oa_share/{level}: no values to classify"));
                    continue;
                }
                let mut distinct = values.clone();
                distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
                distinct.dedup();
                let k = config.oa_share_classes.min(distinct.len());
                if k < config.oa_share_classes {
                    stage.notes.push(format!(
                        "oa_share/{level}: reduced class count from {} to {k} ({} distinct values)",
                        config.oa_share_classes,
                        distinct.len()
                    ));
                }
                let scheme =
                    jenks_breaks(&values, k).map_err(|e| stage_err("classify", e))?;
                stage.schemes.insert((indicator.to_string(), level), scheme);
            } else {
                stage
                    .schemes
                    .insert((indicator.to_string(), level), symmetric.clone());
            }
        }
    }
    Ok(stage)
}

fn write_schemes(stage: &ClassifyStage, outputs: &mut Outputs) -> Result<(), StageError> {
    for ((indicator, level), scheme) in &stage.schemes {
        let name = format!("classes_{indicator}_{level}.json");
        let mut writer = outputs
            .create(&name)
            .map_err(|e| stage_err("classify", format!("{name}: {e}")))?;
        writer
            .write_all(scheme.to_json().as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .and_then(|_| writer.flush())
            .map_err(|e| stage_err("classify", format!("{name}: {e}")))?;
    }
    Ok(())
}

fn read_schemes(config: &RunConfig) -> Result<ClassifyStage, StageError> {
    let mut stage = ClassifyStage {
        schemes: BTreeMap::new(),
        notes: Vec::new(),
    };
    for level in config.parsed_levels() {
        for indicator in CLASSED {
            if !config.wants(indicator) {
                continue;
            }
            let name = format!("classes_{indicator}_{level}.json");
            let path = config.output_dir.join(&name);
            if !path.is_file() {
                continue;
            }
            let text = fs::read_to_string(&path)
                .map_err(|e| stage_err("export", format!("{name}: {e}")))?;
            let scheme =
                ClassScheme::from_json(&text).map_err(|e| stage_err("export", format!("{name}: {e}")))?;
            stage.schemes.insert((indicator.to_string(), level), scheme);
        }
    }
    if stage.schemes.is_empty() {
        return Err(stage_err(
            "export",
            "no class scheme files found; run the classify stage first",
        ));
    }
    Ok(stage)
}

/// GeoJSON joins cover the map indicators; specialization is per-discipline
/// and ships as classed CSV only.
const JOINED: [&str; 2] = ["oa_share", "noai"];

fn export_outputs(
    config: &RunConfig,
    results: &[LabeledResult],
    classify: &ClassifyStage,
    registry: &ZoneRegistry,
    geometry_text: Option<&str>,
    outputs: &mut Outputs,
) -> Result<Vec<JoinSummary>, StageError> {
    let mut joins = Vec::new();
    for ((indicator, level), scheme) in &classify.schemes {
        let rows: Vec<LabeledResult> = results
            .iter()
            .filter(|r| {
                r.level == *level && r.result.zone != WORLD_ZONE && is_indicator(r, indicator)
            })
            .cloned()
            .collect();
        let name = format!("choropleth_{indicator}_{level}.csv");
        let mut writer = outputs
            .create(&name)
            .map_err(|e| stage_err("export", format!("{name}: {e}")))?;
        emit_table(&rows, scheme, registry, &mut writer)
            .map_err(|e| stage_err("export", format!("{name}: {e}")))?;
        writer
            .flush()
            .map_err(|e| stage_err("export", format!("{name}: {e}")))?;

        if let Some(geometry) = geometry_text {
            if JOINED.contains(&indicator.as_str()) {
                for period in &config.periods {
                    let period_rows: Vec<LabeledResult> = rows
                        .iter()
                        .filter(|r| r.result.period == period.name)
                        .cloned()
                        .collect();
                    if period_rows.is_empty() {
                        continue;
                    }
                    let name = format!("choropleth_{indicator}_{level}_{}.geojson", period.name);
                    let mut writer = outputs
                        .create(&name)
                        .map_err(|e| stage_err("export", format!("{name}: {e}")))?;
                    let report = join_geojson(
                        &period_rows,
                        scheme,
                        registry,
                        geometry,
                        &config.geometry_id_property,
                        &mut writer,
                    )
                    .map_err(|e| stage_err("export", format!("{name}: {e}")))?;
                    writer
                        .flush()
                        .map_err(|e| stage_err("export", format!("{name}: {e}")))?;
                    joins.push(JoinSummary { file: name, report });
                }
            }
        }
    }
    Ok(joins)
}

/// Executes the full pipeline and writes `run_report.json`. On a stage
/// error, every file created so far is removed and the error names the
/// stage.
pub fn run(config: &RunConfig) -> Result<RunReport, StageError> {
    let mut outputs = Outputs::new(&config.output_dir)
        .map_err(|e| stage_err("inputs", format!("output_dir: {e}")))?;
    match run_stages(config, &mut outputs) {
        Ok(report) => Ok(report),
        Err(e) => {
            outputs.cleanup();
            Err(e)
        }
    }
}

fn run_stages(config: &RunConfig, outputs: &mut Outputs) -> Result<RunReport, StageError> {
    let mut stages = Vec::new();
    let mut timer = Timer {
        stages: &mut stages,
    };
    let inputs = timer.time("inputs", || load_inputs(config))?;
    let (records, ingest_report) = timer.time("ingest", || {
        ingest_corpus(config, &inputs.scheme, &inputs.registry)
    })?;
    let tables = timer.time("aggregate", || {
        let tables = build_tables(config, &records, &inputs.scheme, &inputs.registry)?;
        write_tables(&tables, outputs)?;
        Ok(tables)
    })?;
    let indicator_stage = timer.time("indicators", || {
        let stage = compute_indicators(config, &tables, &inputs.scheme)?;
        write_indicators(&stage.results, outputs)?;
        Ok(stage)
    })?;
    let classify_stage = timer.time("classify", || {
        let stage = build_schemes(config, &indicator_stage.results)?;
        write_schemes(&stage, outputs)?;
        Ok(stage)
    })?;
    let joins = timer.time("export", || {
        export_outputs(
            config,
            &indicator_stage.results,
            &classify_stage,
            &inputs.registry,
            inputs.geometry_text.as_deref(),
            outputs,
        )
    })?;

    let mut report = RunReport {
        config: config.clone(),
        inputs: inputs.digests,
        ingest: IngestSummary::new(ingest_report),
        stages,
        indicator_rows: indicator_stage.results.len() as u64,
        indicator_skips: indicator_stage.skips,
        skip_samples: indicator_stage.skip_samples,
        class_notes: classify_stage.notes,
        joins,
        outputs: Vec::new(),
        errors: Vec::new(),
    };
    let mut writer = outputs
        .create("run_report.json")
        .map_err(|e| stage_err("report", e))?;
    report.outputs = outputs.names();
    report
        .write_json(&mut writer)
        .and_then(|_| writer.flush())
        .map_err(|e| stage_err("report", e))?;
    Ok(report)
}

/// Ingest and aggregate only; leaves tables and the ingest audit on disk
/// for the later stages.
pub fn run_aggregate(config: &RunConfig) -> Result<IngestReport, StageError> {
    let mut outputs = Outputs::new(&config.output_dir)
        .map_err(|e| stage_err("inputs", format!("output_dir: {e}")))?;
    let result = (|| {
        let inputs = load_inputs(config)?;
        let (records, ingest_report) = ingest_corpus(config, &inputs.scheme, &inputs.registry)?;
        let tables = build_tables(config, &records, &inputs.scheme, &inputs.registry)?;
        write_tables(&tables, &mut outputs)?;
        let mut writer = outputs
            .create("ingest_report.json")
            .map_err(|e| stage_err("aggregate", e))?;
        let summary = IngestSummary::new(ingest_report.clone());
        serde_json::to_writer_pretty(&mut writer, &summary)
            .map_err(|e| stage_err("aggregate", e))?;
        writer
            .write_all(b"\n")
            .and_then(|_| writer.flush())
            .map_err(|e| stage_err("aggregate", e))?;
        Ok(ingest_report)
    })();
    if result.is_err() {
        outputs.cleanup();
    }
    result
}

/// Computes indicators from aggregate tables already on disk.
pub fn run_indicators(config: &RunConfig) -> Result<usize, StageError> {
    let mut outputs = Outputs::new(&config.output_dir)
        .map_err(|e| stage_err("inputs", format!("output_dir: {e}")))?;
    let result = (|| {
        let scheme = SubjectScheme::from_csv_path(&config.subject_scheme)
            .map_err(|e| stage_err("indicators", format!("subject scheme: {e}")))?;
        let tables = read_tables(config)?;
        let stage = compute_indicators(config, &tables, &scheme)?;
        write_indicators(&stage.results, &mut outputs)?;
        Ok(stage.results.len())
    })();
    if result.is_err() {
        outputs.cleanup();
    }
    result
}

/// Builds class schemes from indicators already on disk.
pub fn run_classify(config: &RunConfig) -> Result<ClassifyStage, StageError> {
    let mut outputs = Outputs::new(&config.output_dir)
        .map_err(|e| stage_err("inputs", format!("output_dir: {e}")))?;
    let result = (|| {
        let results = read_indicators(config)?;
        let stage = build_schemes(config, &results)?;
        write_schemes(&stage, &mut outputs)?;
        Ok(stage)
    })();
    if result.is_err() {
        outputs.cleanup();
    }
    result
}

/// Emits choropleth tables and geometry joins from indicators and schemes
/// already on disk.
pub fn run_export(config: &RunConfig) -> Result<Vec<JoinSummary>, StageError> {
    let mut outputs = Outputs::new(&config.output_dir)
        .map_err(|e| stage_err("inputs", format!("output_dir: {e}")))?;
    let result = (|| {
        let registry = ZoneRegistry::from_csv_path(&config.zone_registry)
            .map_err(|e| stage_err("export", format!("zone registry: {e}")))?;
        let geometry_text = match &config.geometry {
            Some(path) => Some(fs::read_to_string(path).map_err(|e| {
                stage_err("export", format!("geometry {}: {e}", path.display()))
            })?),
            None => None,
        };
        let results = read_indicators_for_export(config)?;
        let classify = read_schemes(config)?;
        export_outputs(
            config,
            &results,
            &classify,
            &registry,
            geometry_text.as_deref(),
            &mut outputs,
        )
    })();
    if result.is_err() {
        outputs.cleanup();
    }
    result
}

fn read_indicators_for_export(config: &RunConfig) -> Result<Vec<LabeledResult>, StageError> {
    read_indicators(config).map_err(|e| StageError {
        stage: "export",
        message: e.message,
    })
}
