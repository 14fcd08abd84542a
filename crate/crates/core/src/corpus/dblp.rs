//! Streaming reader for the DBLP XML export.
//!
//! The export is one huge `<dblp>` root holding publication elements
//! (`article`, `inproceedings`, `book`, ...). Records are parsed one element
//! at a time; only the current element's fields are held in memory.
//!
//! Named character entities (`&uuml;`, `&eacute;`, ...) are declared in the
//! export's DTD rather than in the XML itself, so text is decoded with the
//! HTML entity table instead of the five XML built-ins.

use std::collections::HashSet;
use std::io::BufRead;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use super::names::AuthorRef;
use super::record::BibRecord;

#[derive(Debug, Error)]
pub enum DblpError {
    #[error("malformed XML at byte {offset}: {message}")]
    Malformed { offset: u64, message: String },
}

/// Element kinds kept by default: journal articles and proceedings papers.
pub const DEFAULT_KINDS: [&str; 2] = ["article", "inproceedings"];

pub fn default_filter() -> HashSet<String> {
    DEFAULT_KINDS.iter().map(|s| s.to_string()).collect()
}

#[derive(Default)]
struct Pending {
    key: String,
    authors: Vec<String>,
    title: String,
    journal: Option<String>,
    booktitle: Option<String>,
    year: String,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Author,
    Title,
    Journal,
    Booktitle,
    Year,
}

impl Field {
    fn from_tag(tag: &[u8]) -> Option<Self> {
        Some(match tag {
            b"author" => Field::Author,
            b"title" => Field::Title,
            b"journal" => Field::Journal,
            b"booktitle" => Field::Booktitle,
            b"year" => Field::Year,
            _ => return None,
        })
    }
}

/// Iterator over the records of a DBLP export.
pub struct DblpReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    filter: HashSet<String>,
    skipped: u64,
    finished: bool,
}

/// Parse a DBLP byte stream, yielding records of the requested kinds.
pub fn parse_dblp_stream<R: BufRead>(source: R, filter: HashSet<String>) -> DblpReader<R> {
    DblpReader::new(source, filter)
}

impl<R: BufRead> DblpReader<R> {
    pub fn new(source: R, filter: HashSet<String>) -> Self {
        let mut reader = Reader::from_reader(source);
        reader.config_mut().check_end_names = true;
        Self {
            reader,
            buf: Vec::with_capacity(4096),
            filter,
            skipped: 0,
            finished: false,
        }
    }

    /// Matching elements dropped for lacking a title or any usable author.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    fn malformed(&self, err: impl std::fmt::Display) -> DblpError {
        DblpError::Malformed {
            offset: self.reader.error_position(),
            message: err.to_string(),
        }
    }

    fn read_event(&mut self) -> Result<Event<'static>, DblpError> {
        self.buf.clear();
        match self.reader.read_event_into(&mut self.buf) {
            Ok(ev) => Ok(ev.into_owned()),
            Err(e) => Err(self.malformed(e)),
        }
    }

    fn key_attribute(&self, start: &BytesStart<'_>) -> Result<String, DblpError> {
        for attr in start.attributes() {
            let attr = attr.map_err(|e| self.malformed(e))?;
            if attr.key.as_ref() == b"key" {
                let raw = String::from_utf8_lossy(&attr.value);
                return Ok(html_escape::decode_html_entities(&raw).into_owned());
            }
        }
        Ok(String::new())
    }

    /// Consume one publication element up to its end tag.
    fn read_element(&mut self, start: &BytesStart<'_>) -> Result<Pending, DblpError> {
        let mut pending = Pending {
            key: self.key_attribute(start)?,
            ..Default::default()
        };
        let mut field: Option<Field> = None;
        let mut text = String::new();
        // Depth below the publication element; titles may nest <i>, <sub>, ...
        let mut depth = 0usize;
        loop {
            match self.read_event()? {
                Event::Start(e) => {
                    if depth == 0 {
                        field = Field::from_tag(e.name().as_ref());
                        text.clear();
                    }
                    depth += 1;
                }
                Event::End(_) => {
                    if depth == 0 {
                        return Ok(pending);
                    }
                    depth -= 1;
                    if depth == 0 {
                        if let Some(f) = field.take() {
                            let value = std::mem::take(&mut text);
                            match f {
                                Field::Author => pending.authors.push(value),
                                Field::Title => pending.title = value,
                                Field::Journal => pending.journal = Some(value),
                                Field::Booktitle => pending.booktitle = Some(value),
                                Field::Year => pending.year = value,
                            }
                        }
                    }
                }
                Event::Text(t) => {
                    if field.is_some() {
                        let raw = String::from_utf8_lossy(&t);
                        text.push_str(&html_escape::decode_html_entities(&raw));
                    }
                }
                Event::CData(c) => {
                    if field.is_some() {
                        text.push_str(&String::from_utf8_lossy(&c));
                    }
                }
                Event::Eof => {
                    return Err(DblpError::Malformed {
                        offset: self.reader.buffer_position(),
                        message: "unexpected end of input inside a record".into(),
                    })
                }
                _ => {}
            }
        }
    }

    fn finish(&mut self, pending: Pending) -> Option<BibRecord> {
        let authors: Vec<AuthorRef> = pending
            .authors
            .iter()
            .filter_map(|a| AuthorRef::parse(a).ok())
            .collect();
        let source = pending.journal.or(pending.booktitle).unwrap_or_default();
        let year = pending.year.trim().parse().ok();
        match BibRecord::new(pending.key, &pending.title, &source, year, authors) {
            Ok(r) => Some(r),
            Err(_) => {
                self.skipped += 1;
                None
            }
        }
    }
}

impl<R: BufRead> Iterator for DblpReader<R> {
    type Item = Result<BibRecord, DblpError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        loop {
            let event = match self.read_event() {
                Ok(ev) => ev,
                Err(e) => {
                    self.finished = true;
                    return Some(Err(e));
                }
            };
            match event {
                Event::Start(start) => {
                    let name = String::from_utf8_lossy(start.name().as_ref()).into_owned();
                    if !self.filter.contains(&name) {
                        continue;
                    }
                    match self.read_element(&start) {
                        Ok(pending) => {
                            if let Some(record) = self.finish(pending) {
                                return Some(Ok(record));
                            }
                        }
                        Err(e) => {
                            self.finished = true;
                            return Some(Err(e));
                        }
                    }
                }
                Event::Empty(start) => {
                    if self.filter.contains(&*String::from_utf8_lossy(start.name().as_ref())) {
                        self.skipped += 1;
                    }
                }
                Event::Eof => {
                    self.finished = true;
                    return None;
                }
                _ => {}
            }
        }
    }
}
