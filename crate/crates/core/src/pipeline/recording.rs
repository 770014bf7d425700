use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::GridConfig;

pub const RAW_MAGIC: &[u8; 8] = b"SISOCHM1";
const RAW_HEADER: u64 = 16;

/// Numerology attached to a recording. Neither file format stores it, so
/// loaders fill in the full-scale sidelink values and callers override.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub subcarrier_spacing: f64,
    pub symbol_duration: f64,
    pub carrier_freq: f64,
    /// Time of symbol 0, seconds.
    pub start_time: f64,
}

impl Default for RecordingMeta {
    fn default() -> Self {
        let g = GridConfig::sidelink_full_scale();
        RecordingMeta {
            subcarrier_spacing: g.subcarrier_spacing,
            symbol_duration: g.symbol_duration,
            carrier_freq: g.carrier_freq,
            start_time: 0.0,
        }
    }
}

/// One N×M_total channel matrix, column-major by symbol (`n + m·N`).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRecording {
    n_subcarriers: usize,
    n_symbols: usize,
    data: Vec<Complex64>,
    pub meta: RecordingMeta,
}

impl ChannelRecording {
    pub fn new(n_subcarriers: usize, n_symbols: usize, data: Vec<Complex64>, meta: RecordingMeta) -> Result<Self> {
        if n_subcarriers == 0 || n_symbols == 0 {
            return Err(Error::invalid("recording needs at least one subcarrier and one symbol"));
        }
        if data.len() != n_subcarriers * n_symbols {
            return Err(Error::invalid(format!(
                "{} samples for a {n_subcarriers}x{n_symbols} recording",
                data.len()
            )));
        }
        let positive = [meta.subcarrier_spacing, meta.symbol_duration, meta.carrier_freq];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("recording metadata must be positive"));
        }
        Ok(ChannelRecording { n_subcarriers, n_symbols, data, meta })
    }

    pub fn zeros(n_subcarriers: usize, n_symbols: usize, meta: RecordingMeta) -> Result<Self> {
        Self::new(n_subcarriers, n_symbols, vec![Complex64::new(0.0, 0.0); n_subcarriers * n_symbols], meta)
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn at(&self, n: usize, m: usize) -> Complex64 {
        self.data[n + m * self.n_subcarriers]
    }

    /// Column of symbol `m`.
    pub fn symbol(&self, m: usize) -> &[Complex64] {
        &self.data[m * self.n_subcarriers..(m + 1) * self.n_subcarriers]
    }

    pub fn timestamp(&self, m: usize) -> f64 {
        self.meta.start_time + m as f64 * self.meta.symbol_duration
    }

    /// Grid for blocks of `block_len` symbols of this recording.
    pub fn block_grid(&self, block_len: usize) -> Result<GridConfig> {
        GridConfig::new(
            self.n_subcarriers,
            block_len,
            self.meta.subcarrier_spacing,
            self.meta.symbol_duration,
            self.meta.carrier_freq,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordingFormat {
    Csv,
    RawComplex,
}

impl FromStr for RecordingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(RecordingFormat::Csv),
            "raw" | "raw_complex" => Ok(RecordingFormat::RawComplex),
            _ => Err(Error::invalid(format!("unknown recording format '{s}'"))),
        }
    }
}

impl RecordingFormat {
    /// `.csv` is CSV, anything else raw.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => RecordingFormat::Csv,
            _ => RecordingFormat::RawComplex,
        }
    }
}

pub fn write_raw<W: Write>(rec: &ChannelRecording, mut out: W) -> Result<()> {
    let n = u32::try_from(rec.n_subcarriers).map_err(|_| Error::invalid("too many subcarriers for u32"))?;
    let m = u32::try_from(rec.n_symbols).map_err(|_| Error::invalid("too many symbols for u32"))?;
    out.write_all(RAW_MAGIC)?;
    out.write_all(&n.to_le_bytes())?;
    out.write_all(&m.to_le_bytes())?;
    for v in &rec.data {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_exact_at<R: Read>(input: &mut R, buf: &mut [u8], offset: u64, what: &str) -> Result<()> {
    let mut got = 0;
    while got < buf.len() {
        match input.read(&mut buf[got..])? {
            0 => {
                return Err(Error::Format {
                    offset: offset + got as u64,
                    message: format!("file ends inside {what}: expected {} more bytes", buf.len() - got),
                })
            }
            k => got += k,
        }
    }
    Ok(())
}

pub fn read_raw<R: Read>(input: R) -> Result<ChannelRecording> {
    let mut input = BufReader::new(input);
    let mut header = [0u8; RAW_HEADER as usize];
    read_exact_at(&mut input, &mut header[..8], 0, "the magic")?;
    if &header[..8] != RAW_MAGIC {
        return Err(Error::Format { offset: 0, message: "bad magic, expected SISOCHM1".into() });
    }
    read_exact_at(&mut input, &mut header[8..], 8, "the shape header")?;
    let n = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let m = u32::from_le_bytes(header[12..16].try_into().expect("4 bytes")) as usize;
    if n == 0 || m == 0 {
        return Err(Error::Format { offset: 8, message: format!("degenerate shape {n}x{m}") });
    }
    let count = n * m;
    let expected = RAW_HEADER + 16 * count as u64;
    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 16];
    for i in 0..count {
        let offset = RAW_HEADER + 16 * i as u64;
        let mut got = 0;
        while got < 16 {
            match input.read(&mut buf[got..])? {
                0 => {
                    return Err(Error::Format {
                        offset: offset + got as u64,
                        message: format!(
                            "truncated: {n}x{m} needs {expected} bytes, file has {}",
                            offset + got as u64
                        ),
                    })
                }
                k => got += k,
            }
        }
        let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
        data.push(Complex64::new(re, im));
    }
    if input.read(&mut buf[..1])? != 0 {
        return Err(Error::Format { offset: expected, message: format!("trailing bytes after {expected}") });
    }
    ChannelRecording::new(n, m, data, RecordingMeta::default())
}

/// Header `n,m,re,im`, one row per element, symbol-major.
pub fn write_csv<W: Write>(rec: &ChannelRecording, mut out: W) -> Result<()> {
    writeln!(out, "n,m,re,im")?;
    for m in 0..rec.n_symbols {
        for n in 0..rec.n_subcarriers {
            let v = rec.at(n, m);
            writeln!(out, "{n},{m},{:?},{:?}", v.re, v.im)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Every (n, m) of the bounding shape must appear exactly once.
pub fn read_csv<R: Read>(input: R) -> Result<ChannelRecording> {
    let reader = BufReader::new(input);
    let mut rows: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut header_seen = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols != ["n", "m", "re", "im"] {
                return Err(Error::Parse { line: line_no, message: "expected header n,m,re,im".into() });
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(Error::Parse { line: line_no, message: format!("expected 4 columns, found {}", cols.len()) });
        }
        let bad = |what: &str| Error::Parse { line: line_no, message: format!("cannot parse {what}") };
        let n: usize = cols[0].parse().map_err(|_| bad("n"))?;
        let m: usize = cols[1].parse().map_err(|_| bad("m"))?;
        let re: f64 = cols[2].parse().map_err(|_| bad("re"))?;
        let im: f64 = cols[3].parse().map_err(|_| bad("im"))?;
        rows.push((n, m, Complex64::new(re, im)));
    }
    if !header_seen {
        return Err(Error::Parse { line: 1, message: "empty file".into() });
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 2, message: "no samples".into() });
    }
    let n_sub = rows.iter().map(|r| r.0).max().expect("nonempty") + 1;
    let n_sym = rows.iter().map(|r| r.1).max().expect("nonempty") + 1;
    let mut data = vec![Complex64::new(0.0, 0.0); n_sub * n_sym];
    let mut seen = vec![false; n_sub * n_sym];
    for (k, &(n, m, v)) in rows.iter().enumerate() {
        let idx = n + m * n_sub;
        if seen[idx] {
            return Err(Error::Parse { line: k + 2, message: format!("duplicate element ({n}, {m})") });
        }
        seen[idx] = true;
        data[idx] = v;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Parse {
            line: rows.len() + 1,
            message: format!("element ({}, {}) missing", missing % n_sub, missing / n_sub),
        });
    }
    ChannelRecording::new(n_sub, n_sym, data, RecordingMeta::default())
}

pub fn load_recording(path: &Path, format: RecordingFormat) -> Result<ChannelRecording> {
    let file = File::open(path)?;
    match format {
        RecordingFormat::RawComplex => read_raw(file),
        RecordingFormat::Csv => read_csv(file),
    }
}

pub fn save_recording(path: &Path, rec: &ChannelRecording, format: RecordingFormat) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match format {
        RecordingFormat::RawComplex => write_raw(rec, out),
        RecordingFormat::Csv => write_csv(rec, out),
    }
}
