//! Line-delimited corpus files.
//!
//! ```text
//! {"format":"sensorsift-corpus","version":1}
//! {"uid":"s0000000000","sensor_type":"temperature","region":"canberra","raw_values":{"accuracy":71.5}}
//! ...
//! ```
//!
//! The first line is a header; every following line is one sensor. Field
//! order is fixed by the record type and floats are written in their shortest
//! exact form, so a save/load cycle reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusBuilder};
use crate::error::{Error, Result};
use crate::model::{PropertyRegistry, SensorDescription};

pub const CORPUS_FORMAT: &str = "sensorsift-corpus";
pub const CORPUS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
}

pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> Result<()> {
    let header = Header {
        format: CORPUS_FORMAT.into(),
        version: CORPUS_VERSION,
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for record in corpus.records() {
        serde_json::to_writer(&mut out, &record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    write_corpus(corpus, BufWriter::new(File::create(path)?))
}

/// Reads a corpus, validating every record against `registry`.
pub fn read_corpus(input: impl Read, registry: &PropertyRegistry) -> Result<Corpus> {
    let mut lines = BufReader::new(input).lines();
    let header_line = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::Load {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    let header: Header = serde_json::from_str(&header_line).map_err(|e| Error::Load {
        line: 1,
        message: format!("bad header: {e}"),
    })?;
    if header.format != CORPUS_FORMAT || header.version != CORPUS_VERSION {
        return Err(Error::Load {
            line: 1,
            message: format!(
                "unsupported corpus format {} v{} (expected {CORPUS_FORMAT} v{CORPUS_VERSION})",
                header.format, header.version
            ),
        });
    }

    let mut builder = CorpusBuilder::default();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SensorDescription = serde_json::from_str(&line).map_err(|e| Error::Load {
            line: line_no,
            message: e.to_string(),
        })?;
        registry.validate(&record)?;
        builder.push(record).map_err(|e| Error::Load {
            line: line_no,
            message: e.to_string(),
        })?;
    }
    builder.finish()
}

pub fn load(path: impl AsRef<Path>, registry: &PropertyRegistry) -> Result<Corpus> {
    read_corpus(File::open(path)?, registry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate, GeneratorConfig};

    fn round_trip(corpus: &Corpus) -> Corpus {
        let mut buf = Vec::new();
        write_corpus(corpus, &mut buf).unwrap();
        read_corpus(buf.as_slice(), &PropertyRegistry::canonical()).unwrap()
    }

    #[test]
    fn empty_round_trip() {
        assert!(round_trip(&Corpus::empty()).is_empty());
    }

    #[test]
    fn seeded_round_trip_is_exact() {
        let corpus = generate(GeneratorConfig::new(1_000, 3)).unwrap();
        let back = round_trip(&corpus);
        assert_eq!(back, corpus);
        for key in corpus.property_keys() {
            let a = corpus.column(key).unwrap();
            let b = back.column(key).unwrap();
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let corpus = generate(GeneratorConfig::new(20, 1)).unwrap();
        save(&corpus, &path).unwrap();
        assert_eq!(load(&path, &PropertyRegistry::canonical()).unwrap(), corpus);
    }

    #[test]
    fn truncated_record_reports_its_line() {
        let corpus = generate(GeneratorConfig::new(10, 2)).unwrap();
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        // line 7 of the file is the sixth record
        let cut = lines[6].len() / 2;
        lines[6].truncate(cut);
        let broken = lines.join("\n");
        let err = read_corpus(broken.as_bytes(), &PropertyRegistry::canonical()).unwrap_err();
        assert!(matches!(err, Error::Load { line: 7, .. }), "{err}");
    }

    #[test]
    fn unknown_property_is_rejected() {
        let text = format!(
            "{{\"format\":\"{CORPUS_FORMAT}\",\"version\":1}}\n{}\n",
            r#"{"uid":"a","sensor_type":"t","region":"r","raw_values":{"colour":1.0}}"#
        );
        let err = read_corpus(text.as_bytes(), &PropertyRegistry::canonical()).unwrap_err();
        assert!(matches!(err, Error::UnknownProperty(k) if k == "colour"));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = read_corpus(
            "{\"format\":\"csv\",\"version\":1}\n".as_bytes(),
            &PropertyRegistry::canonical(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Load { line: 1, .. }));
        let err = read_corpus("".as_bytes(), &PropertyRegistry::canonical()).unwrap_err();
        assert!(matches!(err, Error::Load { line: 1, .. }));
    }
}
