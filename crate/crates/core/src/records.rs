//! Line-delimited JSON files: a header line `{schema, version}` followed by
//! one record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub schema: String,
    pub version: u32,
}

pub fn write_lines<T: Serialize, W: Write>(
    mut out: W,
    schema: &str,
    version: u32,
    records: impl IntoIterator<Item = T>,
) -> Result<()> {
    let header = Header {
        schema: schema.to_string(),
        version,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    for r in records {
        serde_json::to_writer(&mut out, &r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    out.flush().map_err(|e| Error::io("<output>", e))
}

pub fn read_lines<T: DeserializeOwned, R: BufRead>(
    input: R,
    schema: &str,
    version: u32,
    label: &str,
) -> Result<Vec<T>> {
    let mut lines = input.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: label.to_string(),
        line,
        message,
    };
    let header: Header = match lines.next() {
        None => return Err(parse_err(1, "missing header".into())),
        Some((_, line)) => {
            let line = line.map_err(|e| Error::io(label, e))?;
            serde_json::from_str(&line).map_err(|e| parse_err(1, format!("bad header: {e}")))?
        }
    };
    if header.schema != schema || header.version != version {
        return Err(Error::Schema {
            expected: format!("{schema} v{version}"),
            found: format!("{} v{}", header.schema, header.version),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(label, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_file<T: Serialize>(
    path: &Path,
    schema: &str,
    version: u32,
    records: impl IntoIterator<Item = T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_lines(BufWriter::new(file), schema, version, records)
}

pub fn read_file<T: DeserializeOwned>(path: &Path, schema: &str, version: u32) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_lines(
        BufReader::new(file),
        schema,
        version,
        &path.display().to_string(),
    )
}
