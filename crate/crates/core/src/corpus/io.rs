use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::types::{BotLabel, EntityPartyDictionary, ExpertRanking, Lean, ValidateRecord, Wing};
use crate::{Error, Result};

/// Cap on retained per-line diagnostics; the skip *count* is always exact.
const MAX_DIAGNOSTICS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipDiagnostic {
    pub line: usize,
    pub reason: String,
}

/// Outcome of streaming one input file: how many records were yielded and
/// which lines were skipped.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub records: usize,
    pub skipped: usize,
    pub diagnostics: Vec<SkipDiagnostic>,
}

impl IngestReport {
    fn note_skip(&mut self, line: usize, reason: String) {
        self.skipped += 1;
        if self.diagnostics.len() < MAX_DIAGNOSTICS {
            self.diagnostics.push(SkipDiagnostic { line, reason });
        }
    }
}

/// Streaming reader over a line-delimited JSON file. Invalid lines are
/// counted and skipped; a missing file is fatal at `open`.
pub struct JsonlReader<T> {
    lines: Lines<BufReader<File>>,
    path: PathBuf,
    line_no: usize,
    report: IngestReport,
    _marker: PhantomData<T>,
}

impl<T: DeserializeOwned + ValidateRecord> JsonlReader<T> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            lines: BufReader::new(file).lines(),
            path,
            line_no: 0,
            report: IngestReport::default(),
            _marker: PhantomData,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Skip tally so far; complete once the iterator is exhausted.
    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn into_report(self) -> IngestReport {
        self.report
    }
}

impl<T: DeserializeOwned + ValidateRecord> Iterator for JsonlReader<T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.line_no += 1;
                    self.report.note_skip(self.line_no, format!("read error: {e}"));
                    continue;
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<T>(&line) {
                Ok(record) => match record.validate() {
                    Ok(()) => {
                        self.report.records += 1;
                        return Some(record);
                    }
                    Err(reason) => self.report.note_skip(self.line_no, reason),
                },
                Err(e) => self.report.note_skip(self.line_no, e.to_string()),
            }
        }
    }
}

/// Materialize a whole line-delimited file, keeping record order.
pub fn read_all<T: DeserializeOwned + ValidateRecord>(
    path: impl AsRef<Path>,
) -> Result<(Vec<T>, IngestReport)> {
    let mut reader = JsonlReader::open(path)?;
    let records: Vec<T> = reader.by_ref().collect();
    Ok((records, reader.into_report()))
}

/// Write records as line-delimited JSON, one record per line, in iteration
/// order. Output is byte-stable for a given input sequence.
pub fn write_jsonl<T: Serialize>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = T>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(&record).map_err(|e| {
            Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e))
        })?;
        out.write_all(line.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn open_csv(path: &Path, delimiter: u8) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .has_headers(true)
        .from_reader(file))
}

fn record_field<'a>(
    rec: &'a csv::StringRecord,
    idx: usize,
) -> std::result::Result<&'a str, String> {
    rec.get(idx)
        .map(str::trim)
        .ok_or_else(|| format!("missing column {idx}"))
}

fn for_each_row(
    path: &Path,
    delimiter: u8,
    report: &mut IngestReport,
    mut f: impl FnMut(&csv::StringRecord) -> std::result::Result<(), String>,
) -> Result<()> {
    let mut reader = open_csv(path, delimiter)?;
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.note_skip(0, format!("unreadable row: {e}"));
                continue;
            }
        };
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        match f(&row) {
            Ok(()) => report.records += 1,
            Err(reason) => report.note_skip(line, reason),
        }
    }
    Ok(())
}

/// Load the entity–party dictionary from tab-separated rows
/// `(entity, party, wing)`.
pub fn load_entity_parties(
    path: impl AsRef<Path>,
) -> Result<(EntityPartyDictionary, IngestReport)> {
    let path = path.as_ref();
    let mut dict = EntityPartyDictionary::new();
    let mut report = IngestReport::default();
    for_each_row(path, b'\t', &mut report, |row| {
        let entity = record_field(row, 0)?;
        let party = record_field(row, 1)?;
        let wing = Wing::from_str(record_field(row, 2)?)?;
        if entity.is_empty() || party.is_empty() {
            return Err("empty entity or party".into());
        }
        dict.insert(entity, party, wing);
        Ok(())
    })?;
    Ok((dict, report))
}

/// Load source bias labels from CSV `(domain, label)` with labels
/// `left` / `right`.
pub fn load_bias_labels(path: impl AsRef<Path>) -> Result<(BTreeMap<String, Lean>, IngestReport)> {
    let path = path.as_ref();
    let mut labels = BTreeMap::new();
    let mut report = IngestReport::default();
    for_each_row(path, b',', &mut report, |row| {
        let domain = record_field(row, 0)?.to_lowercase();
        let lean = Lean::from_str(record_field(row, 1)?)?;
        if lean == Lean::None {
            return Err("bias label must be left or right".into());
        }
        labels.insert(domain, lean);
        Ok(())
    })?;
    Ok((labels, report))
}

/// Load bot/human training labels from CSV `(user_id, label)`.
pub fn load_bot_labels(
    path: impl AsRef<Path>,
) -> Result<(BTreeMap<String, BotLabel>, IngestReport)> {
    let path = path.as_ref();
    let mut labels = BTreeMap::new();
    let mut report = IngestReport::default();
    for_each_row(path, b',', &mut report, |row| {
        let user = record_field(row, 0)?;
        let label = BotLabel::from_str(record_field(row, 1)?)?;
        if user.is_empty() {
            return Err("empty user_id".into());
        }
        labels.insert(user.to_string(), label);
        Ok(())
    })?;
    Ok((labels, report))
}

/// Load one expert ranking from ordered CSV `(rank, domain)`. Duplicate
/// domains are rejected; rows are returned sorted by rank.
pub fn load_expert_ranking(path: impl AsRef<Path>) -> Result<ExpertRanking> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "expert".to_string());
    let mut rows: Vec<(u64, String)> = Vec::new();
    let mut report = IngestReport::default();
    for_each_row(path, b',', &mut report, |row| {
        let rank: u64 = record_field(row, 0)?
            .parse()
            .map_err(|e| format!("bad rank: {e}"))?;
        let domain = record_field(row, 1)?.to_lowercase();
        if domain.is_empty() {
            return Err("empty domain".into());
        }
        rows.push((rank, domain));
        Ok(())
    })?;
    rows.sort();
    let mut seen = std::collections::HashSet::new();
    for (_, d) in &rows {
        if !seen.insert(d.clone()) {
            return Err(Error::Record {
                path: path.to_path_buf(),
                line: 0,
                reason: format!("duplicate domain {d:?} in expert ranking"),
            });
        }
    }
    Ok(ExpertRanking {
        name,
        topic: String::new(),
        group: String::new(),
        domains: rows.into_iter().map(|(_, d)| d).collect(),
    })
}

/// Load the popularity feed from CSV `(domain, date, rank)` with dates as
/// `YYYY-MM-DD` and ranks in `[1, 1_000_000]`.
pub fn load_popularity_feed(
    path: impl AsRef<Path>,
) -> Result<(BTreeMap<String, Vec<(NaiveDate, u32)>>, IngestReport)> {
    let path = path.as_ref();
    let mut feed: BTreeMap<String, Vec<(NaiveDate, u32)>> = BTreeMap::new();
    let mut report = IngestReport::default();
    for_each_row(path, b',', &mut report, |row| {
        let domain = record_field(row, 0)?.to_lowercase();
        let date = NaiveDate::parse_from_str(record_field(row, 1)?, "%Y-%m-%d")
            .map_err(|e| format!("bad date: {e}"))?;
        let rank: u32 = record_field(row, 2)?
            .parse()
            .map_err(|e| format!("bad rank: {e}"))?;
        if rank == 0 || rank > 1_000_000 {
            return Err(format!("rank {rank} out of [1, 1000000]"));
        }
        feed.entry(domain).or_default().push((date, rank));
        Ok(())
    })?;
    for entries in feed.values_mut() {
        entries.sort();
    }
    Ok((feed, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::types::{ArticleRecord, SentimentDistribution, SentenceAnnotation};
    use chrono::{TimeZone, Utc};

    fn article(id: &str) -> ArticleRecord {
        ArticleRecord {
            article_id: id.to_string(),
            source_domain: "example.com".to_string(),
            url: format!("https://example.com/{id}"),
            published_at: Utc.with_ymd_and_hms(2020, 1, 2, 3, 4, 5).unwrap(),
            sentences: vec![SentenceAnnotation {
                text: None,
                sentiment: SentimentDistribution::neutral(),
                entity_mentions: vec!["Someone".to_string()],
            }],
            citation_urls: vec![],
            all_link_urls: vec![],
        }
    }

    #[test]
    fn malformed_lines_are_skipped_with_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("articles.jsonl");
        let good = serde_json::to_string(&article("a1")).unwrap();
        let good2 = serde_json::to_string(&article("a2")).unwrap();
        std::fs::write(&path, format!("{good}\nnot json at all\n{good2}\n")).unwrap();

        let (records, report) = read_all::<ArticleRecord>(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(report.records, 2);
        assert_eq!(report.skipped, 1);
        assert_eq!(report.diagnostics.len(), 1);
        assert_eq!(report.diagnostics[0].line, 2);
    }

    #[test]
    fn empty_file_yields_empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        let (records, report) = read_all::<ArticleRecord>(&path).unwrap();
        assert!(records.is_empty());
        assert_eq!(report.records, 0);
        assert_eq!(report.skipped, 0);
    }

    #[test]
    fn missing_file_is_fatal() {
        assert!(matches!(
            read_all::<ArticleRecord>("/nonexistent/input.jsonl"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn order_is_preserved_and_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ten.jsonl");
        let originals: Vec<ArticleRecord> = (0..10).map(|i| article(&format!("a{i}"))).collect();
        write_jsonl(&path, originals.iter()).unwrap();
        let (records, report) = read_all::<ArticleRecord>(&path).unwrap();
        assert_eq!(records, originals);
        assert_eq!(report.records, 10);
        // Same input bytes twice: ingestion is deterministic.
        let (again, _) = read_all::<ArticleRecord>(&path).unwrap();
        assert_eq!(again, records);
    }

    #[test]
    fn entity_dictionary_loads_from_tsv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.tsv");
        std::fs::write(
            &path,
            "entity\tparty\twing\nJane Doe\tparty_a\tleft\nJohn Roe\tparty_b\tright\nbad row\n",
        )
        .unwrap();
        let (dict, report) = load_entity_parties(&path).unwrap();
        assert_eq!(dict.party_of("jane doe"), Some("party_a"));
        assert_eq!(dict.wing_of("party_b"), Some(Wing::Right));
        assert_eq!(report.records, 2);
        assert_eq!(report.skipped, 1);
    }

    #[test]
    fn expert_ranking_rejects_duplicates_and_sorts_by_rank() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("experts.csv");
        std::fs::write(&path, "rank,domain\n2,b.com\n1,a.com\n").unwrap();
        let ranking = load_expert_ranking(&path).unwrap();
        assert_eq!(ranking.domains, vec!["a.com", "b.com"]);
        assert_eq!(ranking.name, "experts");

        std::fs::write(&path, "rank,domain\n1,a.com\n2,a.com\n").unwrap();
        assert!(load_expert_ranking(&path).is_err());
    }

    #[test]
    fn popularity_feed_rejects_out_of_range_ranks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pop.csv");
        std::fs::write(
            &path,
            "domain,date,rank\na.com,2020-01-01,100\na.com,2020-01-02,0\nb.com,2020-01-01,1000000\n",
        )
        .unwrap();
        let (feed, report) = load_popularity_feed(&path).unwrap();
        assert_eq!(feed["a.com"].len(), 1);
        assert_eq!(feed["b.com"].len(), 1);
        assert_eq!(report.skipped, 1);
    }
}
