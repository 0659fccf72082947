//! Line-delimited JSON corpus files.
//!
//! One record per line:
//! `{"doc_id": "...", "clauses": [["tok", ...], ...], "emotion_index": 3, "gold_causes": [0, 0, 1, ...]}`

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Clause, Document};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRecord {
    doc_id: String,
    clauses: Vec<Vec<String>>,
    emotion_index: i64,
    gold_causes: Vec<u8>,
}

impl DocumentRecord {
    fn from_document(doc: &Document) -> Self {
        Self {
            doc_id: doc.doc_id().to_string(),
            clauses: doc.clauses().iter().map(|c| c.tokens().to_vec()).collect(),
            emotion_index: doc.emotion_index() as i64,
            gold_causes: doc.gold_causes().iter().map(|&c| u8::from(c)).collect(),
        }
    }

    fn into_document(self, max_clauses: usize) -> std::result::Result<Document, String> {
        let n = self.clauses.len();
        if n == 0 {
            return Err("field `clauses`: document has no clauses".into());
        }
        if n > max_clauses {
            return Err(format!(
                "field `clauses`: {n} clauses exceeds the maximum of {max_clauses}"
            ));
        }
        if self.emotion_index < 0 || self.emotion_index as usize >= n {
            return Err(format!(
                "field `emotion_index`: {} is out of range for {n} clauses",
                self.emotion_index
            ));
        }
        if self.gold_causes.len() != n {
            return Err(format!(
                "field `gold_causes`: {} labels for {n} clauses",
                self.gold_causes.len()
            ));
        }
        let mut gold = Vec::with_capacity(n);
        for &g in &self.gold_causes {
            match g {
                0 => gold.push(false),
                1 => gold.push(true),
                other => return Err(format!("field `gold_causes`: label {other} is not 0/1")),
            }
        }
        let clauses = self
            .clauses
            .into_iter()
            .enumerate()
            .map(|(i, toks)| Clause::new(toks).map_err(|e| format!("field `clauses`[{i}]: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Document::new(
            self.doc_id,
            clauses,
            self.emotion_index as usize,
            gold,
            max_clauses,
        )
        .map_err(|e| format!("field `gold_causes`: {e}"))
    }
}

/// Reads a corpus; the whole file is rejected on the first bad record.
/// Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>, max_clauses: usize) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut docs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let record: DocumentRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        docs.push(record.into_document(max_clauses).map_err(parse_err)?);
    }
    Ok(docs)
}

pub fn write_corpus(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_corpus_to(&mut out, docs)?;
    out.flush()?;
    Ok(())
}

pub fn write_corpus_to<W: Write>(mut out: W, docs: &[Document]) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut out, &DocumentRecord::from_document(doc))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DEFAULT_MAX_CLAUSES;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const RUNNING_EXAMPLE: &str = r#"{"doc_id":"ex1","clauses":[["yesterday","morning"],["a","policeman","visited","the","old","man"],["the","thief","was","caught"],["the","old","man","was","very","happy"],["and","thanked","the","police"],["for","their","work"]],"emotion_index":3,"gold_causes":[0,0,1,0,0,0]}"#;

    #[test]
    fn loads_running_example() {
        let f = write_tmp(&format!("{RUNNING_EXAMPLE}\n"));
        let docs = load_corpus(f.path(), DEFAULT_MAX_CLAUSES).unwrap();
        assert_eq!(docs.len(), 1);
        let d = &docs[0];
        assert_eq!(d.len(), 6);
        assert_eq!(d.emotion_index(), 3);
        assert_eq!(d.gold_causes(), &[false, false, true, false, false, false]);
        assert_eq!(d.clauses()[2].tokens()[1], "thief");
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let f = write_tmp("");
        assert!(load_corpus(f.path(), DEFAULT_MAX_CLAUSES).unwrap().is_empty());
    }

    #[test]
    fn label_length_mismatch_names_line_and_field() {
        let bad = r#"{"doc_id":"b","clauses":[["a"],["b"]],"emotion_index":0,"gold_causes":[1]}"#;
        let f = write_tmp(&format!("{RUNNING_EXAMPLE}\n{bad}\n"));
        let err = load_corpus(f.path(), DEFAULT_MAX_CLAUSES).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("gold_causes"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn other_malformed_records() {
        let cases = [
            (r#"{"doc_id":"b","clauses":[["a"]],"gold_causes":[1]}"#, "emotion_index"),
            (r#"{"doc_id":"b","clauses":[["a"]],"emotion_index":1,"gold_causes":[1]}"#, "emotion_index"),
            (r#"{"doc_id":"b","clauses":[["a"],["b"],["c"]],"emotion_index":0,"gold_causes":[1,0,0]}"#, "clauses"),
            (r#"{"doc_id":"b","clauses":[["a"]],"emotion_index":0,"gold_causes":[2]}"#, "gold_causes"),
            (r#"{"doc_id":"b","clauses":[[]],"emotion_index":0,"gold_causes":[1]}"#, "clauses"),
            ("not json", "expected"),
        ];
        for (record, needle) in cases {
            let f = write_tmp(record);
            let err = load_corpus(f.path(), 2).unwrap_err();
            let msg = err.to_string();
            assert!(msg.contains(":1:") && msg.contains(needle), "{record} -> {msg}");
        }
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_corpus("/nonexistent/corpus.jsonl", 40),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn write_then_load() {
        let f = write_tmp(&format!("{RUNNING_EXAMPLE}\n"));
        let docs = load_corpus(f.path(), DEFAULT_MAX_CLAUSES).unwrap();
        let mut buf = Vec::new();
        write_corpus_to(&mut buf, &docs).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{RUNNING_EXAMPLE}\n"));
    }
}
