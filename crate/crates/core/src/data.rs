//! Labeled sequence datasets.
//!
//! CSV layout: a header `label,t0_f0,t0_f1,...,t{T-1}_f{D-1}` followed by one
//! row per sample, the sequence flattened timestep-major. The header fixes
//! `T` and `D`.
//!
//! JSON layout: an array of `{"label": k, "sequence": [[x00, x01, ...], ...]}`
//! objects, one inner array per timestep.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error("dataset has no samples")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub seq_len: usize,
    pub input_dim: usize,
    /// Flattened sequences, each of length `seq_len * input_dim`.
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct JsonSample {
    label: usize,
    sequence: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(seq_len: usize, input_dim: usize, rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self, DataError> {
        if seq_len == 0 || input_dim == 0 {
            return Err(DataError::Header(
                "sequence length and input width must be positive".into(),
            ));
        }
        if rows.len() != labels.len() {
            return Err(DataError::Row {
                row: rows.len().min(labels.len()),
                reason: format!("{} rows but {} labels", rows.len(), labels.len()),
            });
        }
        let width = seq_len * input_dim;
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(DataError::Row {
                    row: i,
                    reason: format!("expected {width} values, found {}", r.len()),
                });
            }
            if let Some(v) = r.iter().find(|v| !v.is_finite()) {
                return Err(DataError::Row {
                    row: i,
                    reason: format!("non-finite value {v}"),
                });
            }
        }
        Ok(Self {
            seq_len,
            input_dim,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn header(seq_len: usize, input_dim: usize) -> Vec<String> {
        let mut h = Vec::with_capacity(1 + seq_len * input_dim);
        h.push("label".to_string());
        for t in 0..seq_len {
            for f in 0..input_dim {
                h.push(format!("t{t}_f{f}"));
            }
        }
        h
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let (seq_len, input_dim) = parse_header(&header)?;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |reason: String| DataError::Row { row: i, reason };
            let label = rec[0]
                .parse::<usize>()
                .map_err(|_| bad(format!("label {:?} is not a class index", &rec[0])))?;
            let values = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| bad(format!("value {v:?} is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            labels.push(label);
            rows.push(values);
        }
        Self::new(seq_len, input_dim, rows, labels)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::header(self.seq_len, self.input_dim))?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(label.to_string());
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, DataError> {
        let samples: Vec<JsonSample> = serde_json::from_str(s)?;
        let first = samples.first().ok_or(DataError::Empty)?;
        let seq_len = first.sequence.len();
        let input_dim = first.sequence.first().map_or(0, Vec::len);
        let mut rows = Vec::with_capacity(samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for (i, s) in samples.into_iter().enumerate() {
            if s.sequence.len() != seq_len || s.sequence.iter().any(|t| t.len() != input_dim) {
                return Err(DataError::Row {
                    row: i,
                    reason: format!("sequence is not {seq_len} x {input_dim}"),
                });
            }
            labels.push(s.label);
            rows.push(s.sequence.concat());
        }
        Self::new(seq_len, input_dim, rows, labels)
    }

    pub fn to_json_string(&self) -> String {
        let samples: Vec<JsonSample> = self
            .rows
            .iter()
            .zip(&self.labels)
            .map(|(r, &label)| JsonSample {
                label,
                sequence: r.chunks(self.input_dim).map(<[f64]>::to_vec).collect(),
            })
            .collect();
        serde_json::to_string(&samples).expect("dataset serializes")
    }

    /// Loads CSV, or JSON when the extension is `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let io = |source| DataError::Io {
            path: path.display().to_string(),
            source,
        };
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&fs::read_to_string(path).map_err(io)?)
        } else {
            Self::read_csv(fs::File::open(path).map_err(io)?)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let io = |source| DataError::Io {
            path: path.display().to_string(),
            source,
        };
        if path.extension().is_some_and(|e| e == "json") {
            fs::write(path, self.to_json_string()).map_err(io)
        } else {
            self.write_csv(fs::File::create(path).map_err(io)?)
        }
    }
}

fn parse_header(h: &csv::StringRecord) -> Result<(usize, usize), DataError> {
    if h.get(0) != Some("label") {
        return Err(DataError::Header("first column must be `label`".into()));
    }
    let mut cells = Vec::with_capacity(h.len() - 1);
    for name in h.iter().skip(1) {
        let parsed = name
            .strip_prefix('t')
            .and_then(|r| r.split_once("_f"))
            .and_then(|(t, f)| Some((t.parse::<usize>().ok()?, f.parse::<usize>().ok()?)));
        cells.push(parsed.ok_or_else(|| DataError::Header(format!("column {name:?} is not t<step>_f<feature>")))?);
    }
    let input_dim = cells.iter().take_while(|(t, _)| *t == 0).count();
    if input_dim == 0 || cells.len() % input_dim != 0 {
        return Err(DataError::Header(
            "columns do not form a whole number of timesteps".into(),
        ));
    }
    let seq_len = cells.len() / input_dim;
    let expected = (0..seq_len).flat_map(|t| (0..input_dim).map(move |f| (t, f)));
    if !expected.eq(cells.iter().copied()) {
        return Err(DataError::Header("columns must run t0_f0, t0_f1, ... in order".into()));
    }
    Ok((seq_len, input_dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::new(
            2,
            3,
            vec![vec![0.5, -1.0, 2.25, 0.0, 1e-3, 7.0], vec![1.0; 6]],
            vec![1, 0],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let d = sample();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,t0_f0,t0_f1,t0_f2,t1_f0,t1_f1,t1_f2\n"));
        assert_eq!(Dataset::read_csv(text.as_bytes()).unwrap(), d);
    }

    #[test]
    fn json_round_trip() {
        let d = sample();
        assert_eq!(Dataset::from_json_str(&d.to_json_string()).unwrap(), d);
    }

    #[test]
    fn header_only_csv_is_empty() {
        let d = Dataset::read_csv("label,t0_f0,t1_f0\n".as_bytes()).unwrap();
        assert_eq!((d.seq_len, d.input_dim, d.len()), (2, 1, 0));
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "x,t0_f0\n0,1\n",
            "label,t0_f1\n0,1\n",
            "label,t0_f0,t0_f1,t1_f0\n0,1,2,3\n",
            "label,t0_f0\nz,1\n",
            "label,t0_f0\n0,abc\n",
            "label,t0_f0\n0,NaN\n",
        ] {
            assert!(Dataset::read_csv(bad.as_bytes()).is_err(), "{bad}");
        }
        assert!(Dataset::from_json_str(r#"[{"label":0,"sequence":[[1,2]]},{"label":1,"sequence":[[1]]}]"#).is_err());
    }
}
