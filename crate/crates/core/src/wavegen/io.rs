//! Dataset directory format.
//!
//! ```text
//! <dir>/manifest              key=value lines: version, sample_rate, seed,
//!                             train_baseline, test_baseline, test_damaged
//! <dir>/train_baseline.bin    one binary file per split
//! <dir>/test_baseline.bin
//! <dir>/test_damaged.bin
//! ```
//!
//! Split files are little-endian: `u32` record count, then per record a
//! `u32` sample count, that many `f64` samples, a `u8` label code
//! (0 baseline, 1 damaged, 2 unlabeled), a `u16` byte length and the
//! UTF-8 metadata as `key=value` lines joined by `\n`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{DatasetSplit, Label, TimeSeriesRecord};
use crate::codec::{Reader, Writer};
use crate::error::{Error, FormatError, Result};

pub const MANIFEST_FILE: &str = "manifest";
const VERSION: u32 = 1;
const SPLITS: [&str; 3] = ["train_baseline", "test_baseline", "test_damaged"];

fn encode_split(records: &[TimeSeriesRecord]) -> Result<Vec<u8>> {
    let mut w = Writer::new();
    w.u32(records.len() as u32);
    for r in records {
        w.u32(r.len() as u32);
        w.f64s(r.samples());
        w.u8(r.label.code());
        let meta = r
            .meta
            .iter()
            .map(|(k, v)| {
                if k.contains(['=', '\n']) || v.contains('\n') {
                    Err(Error::invalid(format!("metadata entry {k:?} is not encodable")))
                } else {
                    Ok(format!("{k}={v}"))
                }
            })
            .collect::<Result<Vec<_>>>()?
            .join("\n");
        let len = u16::try_from(meta.len())
            .map_err(|_| Error::invalid("record metadata exceeds 65535 bytes"))?;
        w.u16(len);
        w.bytes(meta.as_bytes());
    }
    Ok(w.buf)
}

fn decode_split(bytes: &[u8], sample_rate: f64) -> std::result::Result<Vec<TimeSeriesRecord>, FormatError> {
    let mut r = Reader::new(bytes);
    let count = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for i in 0..count {
        let n = r.u32()? as usize;
        let samples = r.f64s(n)?;
        let code = r.u8()?;
        let label = Label::from_code(code)
            .ok_or_else(|| FormatError::Schema(format!("record {i}: label code {code}")))?;
        let meta_len = r.u16()? as usize;
        let raw = r.take(meta_len)?;
        let text = std::str::from_utf8(raw)
            .map_err(|_| FormatError::Schema(format!("record {i}: metadata is not UTF-8")))?;
        let mut meta = BTreeMap::new();
        for line in text.split('\n').filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| FormatError::Schema(format!("record {i}: metadata line {line:?}")))?;
            meta.insert(k.to_string(), v.to_string());
        }
        let mut rec = TimeSeriesRecord::new(samples, sample_rate, label)
            .map_err(|e| FormatError::Schema(format!("record {i}: {e}")))?;
        rec.meta = meta;
        out.push(rec);
    }
    r.finish()?;
    Ok(out)
}

pub fn save_dataset(split: &DatasetSplit, dir: &Path) -> Result<()> {
    split.validate()?;
    let sample_rate = split.sample_rate().unwrap_or(1.0);
    if split
        .train_baseline
        .iter()
        .chain(split.test_records())
        .any(|r| r.sample_rate() != sample_rate)
    {
        return Err(Error::invalid("records in one dataset must share a sample rate"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let parts = [&split.train_baseline, &split.test_baseline, &split.test_damaged];
    let mut manifest = format!(
        "version={VERSION}\nsample_rate={sample_rate:?}\nseed={}\n",
        split.seed
    );
    for (name, records) in SPLITS.iter().zip(parts) {
        manifest.push_str(&format!("{name}={}\n", records.len()));
        let path = dir.join(format!("{name}.bin"));
        fs::write(&path, encode_split(records)?).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

struct Manifest {
    sample_rate: f64,
    seed: u64,
    counts: [usize; 3],
}

fn parse_manifest(text: &str) -> std::result::Result<Manifest, FormatError> {
    let mut kv = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            FormatError::MalformedHeader(format!("manifest line {}: {line:?}", lineno + 1))
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |key: &str| {
        kv.get(key)
            .ok_or_else(|| FormatError::MalformedHeader(format!("manifest lacks `{key}`")))
    };
    let bad = |key: &str, v: &str| FormatError::MalformedHeader(format!("manifest `{key}` = {v:?}"));
    let version: u32 = get("version")?.parse().map_err(|_| bad("version", get("version").unwrap()))?;
    if version != VERSION {
        return Err(FormatError::UnknownVersion {
            found: version,
            supported: VERSION,
        });
    }
    let sr = get("sample_rate")?;
    let sample_rate: f64 = sr.parse().map_err(|_| bad("sample_rate", sr))?;
    let sd = get("seed")?;
    let seed: u64 = sd.parse().map_err(|_| bad("seed", sd))?;
    let mut counts = [0usize; 3];
    for (c, name) in counts.iter_mut().zip(SPLITS) {
        let v = get(name)?;
        *c = v.parse().map_err(|_| bad(name, v))?;
    }
    Ok(Manifest {
        sample_rate,
        seed,
        counts,
    })
}

pub fn load_dataset(dir: &Path) -> Result<DatasetSplit> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest = parse_manifest(&text).map_err(|source| Error::Format {
        path: mpath.clone(),
        source,
    })?;
    let mut parts: Vec<Vec<TimeSeriesRecord>> = Vec::with_capacity(3);
    for (name, expected) in SPLITS.iter().zip(manifest.counts) {
        let path = dir.join(format!("{name}.bin"));
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let records = decode_split(&bytes, manifest.sample_rate).map_err(|source| Error::Format {
            path: path.clone(),
            source,
        })?;
        if records.len() != expected {
            return Err(Error::Format {
                path,
                source: FormatError::LengthMismatch(format!(
                    "manifest declares {expected} records, file holds {}",
                    records.len()
                )),
            });
        }
        parts.push(records);
    }
    let test_damaged = parts.pop().unwrap();
    let test_baseline = parts.pop().unwrap();
    let train_baseline = parts.pop().unwrap();
    let split = DatasetSplit {
        train_baseline,
        test_baseline,
        test_damaged,
        seed: manifest.seed,
    };
    split.validate().map_err(|e| Error::Format {
        path: dir.to_path_buf(),
        source: FormatError::Schema(e.to_string()),
    })?;
    Ok(split)
}
