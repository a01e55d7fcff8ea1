use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::record::{Corpus, CweId, FunctionRecord, Label, SourceDescriptor};
use crate::error::{Error, Result};

/// Maps JSONL field names onto record fields. The default matches DiverseVul
/// (`func`, `target`, `cwe`, `project`, `commit_id`); unknown fields are
/// ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSchema {
    pub code: String,
    pub target: String,
    pub cwe: Option<String>,
    pub project: Option<String>,
    pub commit: Option<String>,
    /// When set and present on a line, the record keeps this id instead of
    /// `<source>:<line index>`.
    pub id: Option<String>,
    pub pair_id: Option<String>,
    /// When set and present on a line, overrides the source tag.
    pub source: Option<String>,
}

impl Default for FieldSchema {
    fn default() -> Self {
        FieldSchema {
            code: "func".into(),
            target: "target".into(),
            cwe: Some("cwe".into()),
            project: Some("project".into()),
            commit: Some("commit_id".into()),
            id: None,
            pair_id: None,
            source: None,
        }
    }
}

impl FieldSchema {
    /// The schema of this crate's own canonical corpus JSONL.
    pub fn canonical() -> Self {
        FieldSchema {
            code: "code".into(),
            target: "label".into(),
            cwe: Some("cwes".into()),
            project: Some("project".into()),
            commit: Some("commit".into()),
            id: Some("id".into()),
            pair_id: Some("pair_id".into()),
            source: Some("source".into()),
        }
    }
}

pub fn ingest_jsonl(path: &Path, source: &str, schema: &FieldSchema) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::read(path, e))?;
    let mut corpus = ingest_reader(file, source, schema)
        .map_err(|e| match e {
            Error::Read { source, .. } => Error::read(path, source),
            other => other,
        })?;
    for p in &mut corpus.provenance {
        p.path = Some(path.display().to_string());
    }
    Ok(corpus)
}

/// Ingests JSONL from any reader. Blank lines are ignored; malformed lines are
/// skipped, logged and listed in the returned provenance.
pub fn ingest_reader<R: Read>(reader: R, source: &str, schema: &FieldSchema) -> Result<Corpus> {
    let mut reader = BufReader::new(reader);
    let mut descriptor = SourceDescriptor {
        source: source.to_string(),
        ..Default::default()
    };
    let mut records = Vec::new();
    let mut buf = Vec::new();
    let mut index = 0usize;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::read(source, e))?;
        if n == 0 {
            break;
        }
        let line_no = index + 1;
        let line = String::from_utf8_lossy(&buf);
        if line.trim().is_empty() {
            index += 1;
            continue;
        }
        match parse_line(&line, index, source, schema, &mut descriptor) {
            Ok(record) => records.push(record),
            Err(reason) => {
                log::warn!("{source}: skipping malformed line {line_no}: {reason}");
                descriptor.skipped_lines.push(line_no);
            }
        }
        index += 1;
    }
    descriptor.records = records.len();
    Ok(Corpus::new(records, vec![descriptor]))
}

fn parse_line(
    line: &str,
    index: usize,
    source: &str,
    schema: &FieldSchema,
    descriptor: &mut SourceDescriptor,
) -> std::result::Result<FunctionRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("line is not a JSON object")?;

    let code = obj
        .get(&schema.code)
        .and_then(Value::as_str)
        .ok_or_else(|| format!("missing string field `{}`", schema.code))?
        .to_string();
    let label = obj
        .get(&schema.target)
        .ok_or_else(|| format!("missing field `{}`", schema.target))
        .and_then(parse_target)?;

    let mut cwes = Vec::new();
    if let Some(v) = schema.cwe.as_ref().and_then(|f| obj.get(f)) {
        let (parsed, unparsed) = parse_cwes(v);
        descriptor.unparsed_cwes += unparsed;
        cwes = parsed;
    }
    if label == Label::NonVulnerable && !cwes.is_empty() {
        descriptor.cleared_cwes += 1;
        cwes.clear();
    }

    let text_field = |field: &Option<String>| -> Option<String> {
        field.as_ref().and_then(|f| obj.get(f)).and_then(scalar_string)
    };
    let id = text_field(&schema.id).unwrap_or_else(|| format!("{source}:{index}"));
    let record_source = text_field(&schema.source).unwrap_or_else(|| source.to_string());

    Ok(FunctionRecord {
        id,
        code,
        label,
        cwes,
        source: record_source,
        project: text_field(&schema.project),
        commit: text_field(&schema.commit),
        pair_id: text_field(&schema.pair_id),
    })
}

fn scalar_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_target(v: &Value) -> std::result::Result<Label, String> {
    let n = match v {
        Value::Bool(b) => Some(u64::from(*b)),
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse::<u64>().ok(),
        _ => None,
    };
    match n {
        Some(0) => Ok(Label::NonVulnerable),
        Some(1) => Ok(Label::Vulnerable),
        _ => Err(format!("target must be 0 or 1, got {v}")),
    }
}

/// Parses a CWE field that may be null, a single value or a list. Returns the
/// parsed ids (first-seen order, duplicates removed) and the number of
/// entries that were not CWE ids (e.g. `NVD-CWE-Other`).
fn parse_cwes(v: &Value) -> (Vec<CweId>, usize) {
    let items: Vec<&Value> = match v {
        Value::Null => vec![],
        Value::Array(items) => items.iter().collect(),
        other => vec![other],
    };
    let mut out = Vec::new();
    let mut unparsed = 0;
    for item in items {
        let parsed = match item {
            Value::String(s) if s.trim().is_empty() => continue,
            Value::String(s) => s.parse::<CweId>().ok(),
            Value::Number(n) => n
                .as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .and_then(|n| CweId::new(n).ok()),
            _ => None,
        };
        match parsed {
            Some(id) if !out.contains(&id) => out.push(id),
            Some(_) => {}
            None => unparsed += 1,
        }
    }
    (out, unparsed)
}

/// Concatenates corpora in argument order. Colliding ids are renamed to
/// `<id>@<source>` (then `#2`, `#3`, ... if still taken). No de-duplication.
pub fn merge_corpora(corpora: Vec<Corpus>) -> Result<Corpus> {
    if corpora.is_empty() {
        return Err(Error::Config("merge needs at least one corpus".into()));
    }
    let mut seen: HashSet<String> = HashSet::new();
    let mut merged = Corpus::default();
    for corpus in corpora {
        for mut record in corpus.records {
            if seen.contains(&record.id) {
                let base = format!("{}@{}", record.id, record.source);
                let mut candidate = base.clone();
                let mut k = 2;
                while seen.contains(&candidate) {
                    candidate = format!("{base}#{k}");
                    k += 1;
                }
                log::warn!("id collision on {}; renamed to {candidate}", record.id);
                record.id = candidate;
            }
            seen.insert(record.id.clone());
            merged.records.push(record);
        }
        merged.provenance.extend(corpus.provenance);
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(text: &str) -> Corpus {
        ingest_reader(text.as_bytes(), "dv", &FieldSchema::default()).unwrap()
    }

    #[test]
    fn direct_field_mapping() {
        let c = ingest("{\"func\":\"int f(){}\",\"target\":0}\n");
        assert_eq!(c.records.len(), 1);
        let r = &c.records[0];
        assert_eq!(r.label, Label::NonVulnerable);
        assert!(r.cwes.is_empty());
        assert_eq!(r.id, "dv:0");
        assert_eq!(r.source, "dv");

        let c = ingest(
            r#"{"func":"...","target":1,"cwe":["CWE-125"],"project":"linux","commit_id":"abc"}"#,
        );
        let r = &c.records[0];
        assert_eq!(r.label, Label::Vulnerable);
        assert_eq!(r.cwes, vec![CweId::new(125).unwrap()]);
        assert_eq!(r.project.as_deref(), Some("linux"));
        assert_eq!(r.commit.as_deref(), Some("abc"));
    }

    #[test]
    fn malformed_lines_are_counted() {
        let mut text = String::new();
        for i in 0..10 {
            if i == 4 {
                text.push_str("{\"func\": \"broken\", \"target\": \n");
            } else {
                text.push_str(&format!("{{\"func\":\"int f{i}(){{}}\",\"target\":{}}}\n", i % 2));
            }
        }
        let c = ingest(&text);
        assert_eq!(c.records.len(), 9);
        assert_eq!(c.provenance[0].skipped_lines, vec![5]);
        assert_eq!(c.provenance[0].records, 9);
        // ids keep the physical line index
        assert_eq!(c.records[4].id, "dv:5");
    }

    #[test]
    fn missing_or_bad_fields_are_malformed() {
        let c = ingest(
            "{\"target\":1}\n{\"func\":\"x\",\"target\":2}\n{\"func\":\"x\"}\n[1,2]\n{\"func\":\"y\",\"target\":\"1\"}\n",
        );
        assert_eq!(c.records.len(), 1);
        assert_eq!(c.provenance[0].skipped_lines, vec![1, 2, 3, 4]);
    }

    #[test]
    fn cwe_variants() {
        let c = ingest(
            r#"{"func":"a","target":1,"cwe":"CWE-20"}
{"func":"b","target":1,"cwe":[125, "787", "NVD-CWE-Other", "CWE-125"]}
{"func":"c","target":1,"cwe":[]}
{"func":"d","target":1,"cwe":null}
{"func":"e","target":0,"cwe":["CWE-416"]}
"#,
        );
        let cwes: Vec<Vec<u32>> = c
            .records
            .iter()
            .map(|r| r.cwes.iter().map(|c| c.get()).collect())
            .collect();
        assert_eq!(cwes, vec![vec![20], vec![125, 787], vec![], vec![], vec![]]);
        assert_eq!(c.provenance[0].unparsed_cwes, 1);
        assert_eq!(c.provenance[0].cleared_cwes, 1);
    }

    #[test]
    fn invalid_utf8_is_replaced() {
        let mut bytes = b"{\"func\":\"a".to_vec();
        bytes.push(0xff);
        bytes.extend_from_slice(b"b\",\"target\":0}\n");
        let c = ingest_reader(&bytes[..], "x", &FieldSchema::default()).unwrap();
        assert_eq!(c.records[0].code, "a\u{fffd}b");
    }

    #[test]
    fn unreadable_file_is_fatal() {
        let err = ingest_jsonl(Path::new("/nonexistent/file.jsonl"), "x", &FieldSchema::default())
            .unwrap_err();
        assert!(matches!(err, Error::Read { .. }));
        assert!(err.to_string().contains("/nonexistent/file.jsonl"));
    }

    #[test]
    fn merge_concatenates_in_order() {
        let a = ingest("{\"func\":\"a\",\"target\":0}\n{\"func\":\"b\",\"target\":0}\n{\"func\":\"c\",\"target\":0}\n");
        let b = ingest_reader(
            "{\"func\":\"a\",\"target\":0}\n{\"func\":\"e\",\"target\":1}\n".as_bytes(),
            "cf",
            &FieldSchema::default(),
        )
        .unwrap();
        let merged = merge_corpora(vec![a.clone(), b]).unwrap();
        assert_eq!(merged.len(), 5);
        let codes: Vec<&str> = merged.records.iter().map(|r| r.code.as_str()).collect();
        assert_eq!(codes, ["a", "b", "c", "a", "e"]);
        assert_eq!(merged.provenance.len(), 2);

        assert_eq!(merge_corpora(vec![a.clone()]).unwrap(), a);
    }

    #[test]
    fn merge_renames_colliding_ids() {
        let a = ingest("{\"func\":\"a\",\"target\":0}\n");
        let merged = merge_corpora(vec![a.clone(), a.clone(), a]).unwrap();
        let ids: Vec<&str> = merged.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["dv:0", "dv:0@dv", "dv:0@dv#2"]);
        assert!(merge_corpora(vec![]).is_err());
    }
}
