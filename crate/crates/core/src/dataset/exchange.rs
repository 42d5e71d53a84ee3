//! Text exchange format for encoded datasets.
//!
//! ```text
//! flowgate-dataset<TAB>1
//! rows<TAB>3
//! columns<TAB>label<TAB>duration<TAB>protocol_type<TAB>...
//! dictionary<TAB>1<TAB>icmp<TAB>tcp<TAB>udp
//! class_counts<TAB>1<TAB>0<TAB>2<TAB>0<TAB>0
//! data
//! Normal,0,1,...
//! ```
//!
//! `note<TAB>key<TAB>value` lines may follow `columns`; readers skip them.
//! Header lines are tab-separated; data rows are comma-separated with the
//! class name first. Floats use the shortest representation that parses back
//! to the same bits, so a write/read cycle is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{DatasetError, EncodedDataset, FlowClass, SymbolDictionary, Vocabulary, N_CLASSES};

const MAGIC: &str = "flowgate-dataset";
const VERSION: &str = "1";

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_dataset<W: Write>(ds: &EncodedDataset, out: W) -> std::io::Result<()> {
    write_dataset_annotated(ds, &[], out)
}

/// [`write_dataset`] with `note` header lines. Keys and values must not
/// contain tabs or newlines.
pub fn write_dataset_annotated<W: Write>(
    ds: &EncodedDataset,
    notes: &[(&str, &str)],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}\t{VERSION}")?;
    writeln!(out, "rows\t{}", ds.n_rows())?;
    write!(out, "columns\tlabel")?;
    for name in ds.feature_names() {
        write!(out, "\t{name}")?;
    }
    writeln!(out)?;
    for (key, value) in notes {
        let clean = |s: &str| !s.contains(['\t', '\n', '\r']);
        if !clean(key) || !clean(value) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "note keys and values must not contain tabs or newlines",
            ));
        }
        writeln!(out, "note\t{key}\t{value}")?;
    }
    for dict in &ds.vocabulary().dictionaries {
        write!(out, "dictionary\t{}", dict.column)?;
        for v in &dict.values {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    write!(out, "class_counts")?;
    for c in ds.class_counts() {
        write!(out, "\t{c}")?;
    }
    writeln!(out)?;
    writeln!(out, "data")?;
    for i in 0..ds.n_rows() {
        out.write_all(ds.label(i).name().as_bytes())?;
        for v in ds.row(i) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn write_dataset_file(ds: &EncodedDataset, path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_dataset(ds, BufWriter::new(file)).map_err(|e| io_err(path, e))
}

pub fn read_dataset_file(path: &Path) -> Result<EncodedDataset, DatasetError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_dataset(BufReader::new(file)).map_err(|e| match e {
        DatasetError::Io { source, .. } => io_err(path, source),
        other => other,
    })
}

pub fn read_dataset<R: BufRead>(reader: R) -> Result<EncodedDataset, DatasetError> {
    let fmt_err = |line: usize, message: String| DatasetError::Format { line, message };
    let mut lines = reader.lines().enumerate();
    let mut next_line = |expect: &str| -> Result<(usize, String), DatasetError> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((_, Err(source))) => Err(DatasetError::Io {
                path: Default::default(),
                source,
            }),
            None => Err(fmt_err(
                0,
                format!("unexpected end of file, expected {expect}"),
            )),
        }
    };

    let (n, magic) = next_line("header")?;
    if magic != format!("{MAGIC}\t{VERSION}") {
        return Err(fmt_err(n, format!("not a {MAGIC} v{VERSION} file")));
    }
    let (n, rows_line) = next_line("row count")?;
    let n_rows: usize = rows_line
        .strip_prefix("rows\t")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| fmt_err(n, "expected `rows<TAB><count>`".into()))?;
    let (n, cols_line) = next_line("column header")?;
    let mut cols = cols_line.split('\t');
    if cols.next() != Some("columns") || cols.next() != Some("label") {
        return Err(fmt_err(n, "expected `columns<TAB>label...`".into()));
    }
    let feature_names: Vec<String> = cols.map(String::from).collect();
    let d = feature_names.len();

    let mut dictionaries = Vec::new();
    let declared_counts = loop {
        let (n, line) = next_line("class_counts")?;
        let mut parts = line.split('\t');
        match parts.next() {
            Some("note") => {}
            Some("dictionary") => {
                let column: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .filter(|&c| c < d)
                    .ok_or_else(|| fmt_err(n, "bad dictionary column".into()))?;
                dictionaries.push(SymbolDictionary {
                    column,
                    values: parts.map(String::from).collect(),
                });
            }
            Some("class_counts") => {
                let counts: Vec<usize> = parts
                    .map(|s| {
                        s.parse()
                            .map_err(|_| fmt_err(n, format!("bad count {s:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                if counts.len() != N_CLASSES {
                    return Err(fmt_err(n, format!("expected {N_CLASSES} class counts")));
                }
                break counts;
            }
            _ => return Err(fmt_err(n, format!("unexpected header line {line:?}"))),
        }
    };
    let (n, data_line) = next_line("data marker")?;
    if data_line != "data" {
        return Err(fmt_err(n, "expected `data`".into()));
    }

    let mut values = Vec::with_capacity(n_rows * d);
    let mut labels = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let (n, line) = next_line("data row")?;
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or_default();
        let class = FlowClass::from_name(label)
            .ok_or_else(|| fmt_err(n, format!("unknown class {label:?}")))?;
        let before = values.len();
        for f in fields {
            values.push(
                f.parse::<f64>()
                    .map_err(|_| fmt_err(n, format!("bad value {f:?}")))?,
            );
        }
        if values.len() - before != d {
            return Err(fmt_err(
                n,
                format!("expected {d} values, got {}", values.len() - before),
            ));
        }
        labels.push(class);
    }
    if let Some((i, Ok(extra))) = lines.next() {
        if !extra.is_empty() {
            return Err(fmt_err(i + 1, "trailing data after declared rows".into()));
        }
    }

    let ds = EncodedDataset::with_vocabulary(
        feature_names,
        values,
        labels,
        Vocabulary { dictionaries },
    )?;
    if ds.class_counts().as_slice() != declared_counts.as_slice() {
        return Err(fmt_err(
            0,
            format!(
                "class_counts header {declared_counts:?} disagrees with data {:?}",
                ds.class_counts()
            ),
        ));
    }
    Ok(ds)
}
