//! Readers and writers for the two on-disk series formats.
//!
//! Binary streams hold one channel as repeated 8-byte records: a little-endian
//! `i32` timestamp followed by a little-endian IEEE-754 `f32` value. CSV files
//! hold any number of channels with the columns `timestamp,sensor_id,channel,value`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RECORD_BYTES: usize = 8;

/// One channel of one sensor, sorted by timestamp (integer ticks).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Stable sort by timestamp; equal timestamps keep their input order.
    fn sort_by_time(&mut self) {
        if self.timestamps.windows(2).all(|w| w[0] <= w[1]) {
            return;
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by_key(|&i| self.timestamps[i]);
        self.timestamps = idx.iter().map(|&i| self.timestamps[i]).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelKey {
    pub sensor: usize,
    pub channel: String,
}

pub fn ingest_binary_stream(bytes: &[u8]) -> Result<Series> {
    if !bytes.len().is_multiple_of(RECORD_BYTES) {
        let offset = bytes.len() - bytes.len() % RECORD_BYTES;
        return Err(Error::Format {
            offset,
            message: format!(
                "truncated record: {} trailing bytes, records are {RECORD_BYTES} bytes",
                bytes.len() - offset
            ),
        });
    }
    let count = bytes.len() / RECORD_BYTES;
    let mut series = Series {
        timestamps: Vec::with_capacity(count),
        values: Vec::with_capacity(count),
    };
    for (index, rec) in bytes.chunks_exact(RECORD_BYTES).enumerate() {
        let t = i32::from_le_bytes([rec[0], rec[1], rec[2], rec[3]]);
        let v = f32::from_le_bytes([rec[4], rec[5], rec[6], rec[7]]);
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "record {index} has non-finite value {v}"
            )));
        }
        series.timestamps.push(i64::from(t));
        series.values.push(f64::from(v));
    }
    series.sort_by_time();
    Ok(series)
}

/// Encode a series in the binary record format.
///
/// Values are narrowed to `f32`; a series that came from [`ingest_binary_stream`]
/// therefore round-trips bit-exactly.
pub fn emit_binary(series: &Series) -> Result<Vec<u8>> {
    if series.timestamps.len() != series.values.len() {
        return Err(Error::Data("timestamp and value counts differ".into()));
    }
    let mut out = Vec::with_capacity(series.len() * RECORD_BYTES);
    for (index, (&t, &v)) in series.timestamps.iter().zip(&series.values).enumerate() {
        let t = i32::try_from(t).map_err(|_| {
            Error::Data(format!("record {index}: timestamp {t} does not fit in i32"))
        })?;
        let v = v as f32;
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "record {index}: value is not finite as f32"
            )));
        }
        out.extend_from_slice(&t.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

const CSV_COLUMNS: [&str; 4] = ["timestamp", "sensor_id", "channel", "value"];

pub fn ingest_csv(text: &str) -> Result<BTreeMap<ChannelKey, Series>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() {
        return Err(Error::Schema(format!(
            "missing header row, expected columns {CSV_COLUMNS:?}"
        )));
    }
    let mut col = [0usize; 4];
    for (slot, name) in col.iter_mut().zip(CSV_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))?;
    }

    let mut out: BTreeMap<ChannelKey, Series> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| record.get(col[k]).unwrap_or("");
        let parse_err = |what: &str, raw: &str| Error::Parse {
            line,
            message: format!("cannot parse {what} `{raw}`"),
        };
        let t: i64 = field(0)
            .parse()
            .map_err(|_| parse_err("timestamp", field(0)))?;
        let sensor: usize = field(1)
            .parse()
            .map_err(|_| parse_err("sensor_id", field(1)))?;
        let channel = field(2).to_string();
        if channel.is_empty() {
            return Err(parse_err("channel", ""));
        }
        let v: f64 = field(3).parse().map_err(|_| parse_err("value", field(3)))?;
        if !v.is_finite() {
            return Err(Error::Data(format!("line {line}: non-finite value {v}")));
        }
        let s = out.entry(ChannelKey { sensor, channel }).or_default();
        s.timestamps.push(t);
        s.values.push(v);
    }
    for s in out.values_mut() {
        s.sort_by_time();
    }
    Ok(out)
}

/// Write channels in the canonical CSV layout, ordered by sensor, channel, time.
pub fn emit_csv(channels: &BTreeMap<ChannelKey, Series>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Data(format!("csv write failed: {e}"));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for (key, s) in channels {
        for (t, v) in s.timestamps.iter().zip(&s.values) {
            w.write_record([
                t.to_string(),
                key.sensor.to_string(),
                key.channel.clone(),
                v.to_string(),
            ])
            .map_err(io)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Data(format!("csv write failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: i32, v: f32) -> Vec<u8> {
        let mut b = t.to_le_bytes().to_vec();
        b.extend_from_slice(&v.to_le_bytes());
        b
    }

    #[test]
    fn empty_stream() {
        assert!(ingest_binary_stream(&[]).unwrap().is_empty());
    }

    #[test]
    fn single_record() {
        let s = ingest_binary_stream(&record(1, 2.5)).unwrap();
        assert_eq!(s.timestamps, vec![1]);
        assert_eq!(s.values, vec![2.5]);
    }

    #[test]
    fn truncated_stream_reports_offset() {
        let mut b = record(1, 2.5);
        b.extend_from_slice(&[0, 0, 0, 0]);
        match ingest_binary_stream(&b) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_reports_record_index() {
        let mut b = record(0, 1.0);
        b.extend(record(1, f32::NAN));
        let err = ingest_binary_stream(&b).unwrap_err();
        assert!(
            matches!(err, Error::Data(ref m) if m.contains("record 1")),
            "{err}"
        );
    }

    #[test]
    fn out_of_order_records_are_sorted() {
        let mut b = record(5, 1.0);
        b.extend(record(2, 2.0));
        let s = ingest_binary_stream(&b).unwrap();
        assert_eq!(s.timestamps, vec![2, 5]);
        assert_eq!(s.values, vec![2.0, 1.0]);
    }

    #[test]
    fn csv_header_only() {
        assert!(ingest_csv("timestamp,sensor_id,channel,value\n")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn csv_groups_and_sorts() {
        let text = "timestamp,sensor_id,channel,value\n3,0,acc,0.3\n1,0,acc,0.1\n2,0,acc,0.2\n";
        let m = ingest_csv(text).unwrap();
        assert_eq!(m.len(), 1);
        let s = &m[&ChannelKey {
            sensor: 0,
            channel: "acc".into(),
        }];
        assert_eq!(s.timestamps, vec![1, 2, 3]);
        assert_eq!(s.values, vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn csv_missing_column() {
        let err = ingest_csv("timestamp,sensor_id,value\n1,0,2\n").unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("channel")));
    }

    #[test]
    fn csv_bad_row_reports_line() {
        let err =
            ingest_csv("timestamp,sensor_id,channel,value\n1,0,a,1\n2,0,a,oops\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn csv_round_trip() {
        let text = "timestamp,sensor_id,channel,value\n1,1,b,-0.5\n1,0,a,0.25\n2,0,a,1e-7\n";
        let m = ingest_csv(text).unwrap();
        assert_eq!(ingest_csv(&emit_csv(&m).unwrap()).unwrap(), m);
    }
}
