use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Corpus, Decision, DocId, Document, LabelSource};
use crate::error::{Error, Result};

pub const TITLE_COLUMN: &str = "Document Title";
pub const ABSTRACT_COLUMN: &str = "Abstract";
pub const YEAR_COLUMN: &str = "Year";
pub const LINK_COLUMN: &str = "PDF Link";
pub const LABEL_COLUMN: &str = "label";

/// Column order of exported files.
pub const EXPORT_COLUMNS: [&str; 5] = [TITLE_COLUMN, ABSTRACT_COLUMN, YEAR_COLUMN, LINK_COLUMN, LABEL_COLUMN];

/// Result of an import: the corpus plus counts of rows that did not make it.
#[derive(Debug, Clone)]
pub struct ImportReport {
    pub corpus: Corpus,
    pub skipped_empty_title: usize,
    pub malformed_rows: usize,
    /// Non-empty `label` cells other than `yes`/`no`; the row is kept unlabeled.
    pub unrecognized_labels: usize,
}

impl ImportReport {
    pub fn skipped(&self) -> usize {
        self.skipped_empty_title + self.malformed_rows
    }
}

pub fn import_csv(path: impl AsRef<Path>) -> Result<ImportReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

/// Parses a search export. Rows carrying `label` = `yes`/`no` become replay labels.
pub fn read_csv<R: Read>(reader: R) -> Result<ImportReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').trim() == name)
    };
    let title_col = find(TITLE_COLUMN).ok_or_else(|| Error::MissingColumn(TITLE_COLUMN.into()))?;
    let abstract_col = find(ABSTRACT_COLUMN).ok_or_else(|| Error::MissingColumn(ABSTRACT_COLUMN.into()))?;
    let year_col = find(YEAR_COLUMN);
    let link_col = find(LINK_COLUMN);
    let label_col = find(LABEL_COLUMN);

    let mut documents = Vec::new();
    let mut labels = Vec::new();
    let mut skipped_empty_title = 0;
    let mut malformed_rows = 0;
    let mut unrecognized_labels = 0;

    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                malformed_rows += 1;
                continue;
            }
        };
        let cell = |col: Option<usize>| col.and_then(|c| row.get(c)).map(str::trim).unwrap_or("");

        let title = cell(Some(title_col));
        if title.is_empty() {
            skipped_empty_title += 1;
            continue;
        }
        let doc_id = DocId::from(documents.len());
        let year = cell(year_col).parse::<i32>().ok();
        let link = Some(cell(link_col)).filter(|s| !s.is_empty()).map(str::to_owned);

        match cell(label_col).to_ascii_lowercase().as_str() {
            "" => {}
            "yes" => labels.push((doc_id, Decision::Included)),
            "no" => labels.push((doc_id, Decision::Excluded)),
            _ => unrecognized_labels += 1,
        }

        documents.push(Document {
            doc_id,
            title: title.to_owned(),
            abstract_text: cell(Some(abstract_col)).to_owned(),
            year,
            link,
        });
    }

    let mut corpus = Corpus::new(documents);
    for (doc_id, decision) in labels {
        corpus.record_label(doc_id, decision, LabelSource::Replay)?;
    }
    Ok(ImportReport {
        corpus,
        skipped_empty_title,
        malformed_rows,
        unrecognized_labels,
    })
}

pub fn export_csv(corpus: &Corpus, path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let n = write_csv(corpus, file)?;
    Ok(n)
}

/// Writes every document with its active label (`yes`, `no` or empty).
pub fn write_csv<W: Write>(corpus: &Corpus, writer: W) -> Result<usize> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(EXPORT_COLUMNS)?;
    for doc in corpus.documents() {
        let year = doc.year.map(|y| y.to_string()).unwrap_or_default();
        let label = match corpus.decision(doc.doc_id) {
            Some(Decision::Included) => "yes",
            Some(Decision::Excluded) => "no",
            None => "",
        };
        wtr.write_record([
            doc.title.as_str(),
            doc.abstract_text.as_str(),
            year.as_str(),
            doc.link.as_deref().unwrap_or(""),
            label,
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(corpus.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Document Title,Abstract,Year,PDF Link,label\n";

    #[test]
    fn three_valid_rows() {
        let data = format!("{HEADER}T1,A1,2001,http://x/1,\nT2,A2,,,\n\"T3, quoted\",\"multi\nline\",1999,,\n");
        let rep = read_csv(data.as_bytes()).unwrap();
        assert_eq!(rep.corpus.len(), 3);
        assert_eq!(rep.corpus.n_labeled(), 0);
        assert_eq!(rep.corpus.documents()[2].title, "T3, quoted");
        assert_eq!(rep.corpus.documents()[0].year, Some(2001));
        assert_eq!(rep.corpus.documents()[1].link, None);
    }

    #[test]
    fn header_only() {
        let rep = read_csv(HEADER.as_bytes()).unwrap();
        assert!(rep.corpus.is_empty());
    }

    #[test]
    fn replay_labels() {
        let data = format!("{HEADER}a,,,,yes\nb,,,,no\nc,,,,\nd,,,,YES\ne,,,,\n");
        let rep = read_csv(data.as_bytes()).unwrap();
        let c = &rep.corpus;
        assert_eq!(c.len(), 5);
        assert_eq!(c.n_included(), 2);
        assert_eq!(c.n_labeled(), 3);
        assert!(c.history().iter().all(|r| r.source == LabelSource::Replay));
    }

    #[test]
    fn missing_abstract_column_is_named() {
        let err = read_csv("Document Title,Year\nx,1\n".as_bytes()).unwrap_err();
        match err {
            Error::MissingColumn(c) => assert_eq!(c, "Abstract"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_title_and_malformed_rows_are_counted() {
        let data = format!("{HEADER}  ,abs,,,\nok,abs,,,\nshort row\n");
        let rep = read_csv(data.as_bytes()).unwrap();
        assert_eq!(rep.corpus.len(), 1);
        assert_eq!(rep.skipped_empty_title, 1);
        assert_eq!(rep.malformed_rows, 1);
        assert_eq!(rep.corpus.documents()[0].doc_id, DocId(0));
    }

    #[test]
    fn minimal_columns_in_any_order() {
        let rep = read_csv("Abstract,Document Title\nabs,title\n".as_bytes()).unwrap();
        let d = &rep.corpus.documents()[0];
        assert_eq!((d.title.as_str(), d.abstract_text.as_str()), ("title", "abs"));
    }

    #[test]
    fn export_marks_labels() {
        let mut c = Corpus::from_texts([("a", "x"), ("b", "y"), ("c", "z")]);
        c.record_label(DocId(1), Decision::Included, LabelSource::Human)
            .unwrap();
        let mut buf = Vec::new();
        assert_eq!(write_csv(&c, &mut buf).unwrap(), 3);
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "Document Title,Abstract,Year,PDF Link,label");
        assert_eq!(lines.len(), 4);
        assert_eq!(text.matches(",yes").count(), 1);
    }

    #[test]
    fn export_empty_corpus() {
        let mut buf = Vec::new();
        assert_eq!(write_csv(&Corpus::default(), &mut buf).unwrap(), 0);
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }
}
