//! QF2 binary format, PPM import and CSV export.
//!
//! A QF2 file is a text header of `key=value` lines, opened by the line
//! `QF2` and closed by `end`, followed by `len · 4` little-endian `f64`
//! values in component order `(q0, q1, q2, q3)` per sample, row-major.
//!
//! ```text
//! QF2
//! dims=2
//! n1=256
//! n2=256
//! x1_min=-8e0
//! x1_max=8e0
//! x2_min=-8e0
//! x2_max=8e0
//! endianness=little
//! end
//! ```
//!
//! Higher-rank payloads (the Zak grid) add `n3`, `n4` and further keys.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridSpec, QField};
use crate::error::{Error, Result};
use crate::quaternion::Quaternion;

const MAGIC: &str = "QF2";

/// Ordered `key=value` header of a QF2 file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Qf2Header {
    pub entries: BTreeMap<String, String>,
}

impl Qf2Header {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries.get(key).map(String::as_str).ok_or_else(|| Error::Format(format!("missing header key `{key}`")))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        self.get(key)?.parse().map_err(|_| Error::Format(format!("bad integer for `{key}`")))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.get(key)?.parse().map_err(|_| Error::Format(format!("bad float for `{key}`")))
    }

    /// Number of quaternion samples implied by `dims` and `n1..n{dims}`.
    pub fn sample_count(&self) -> Result<usize> {
        let dims = self.get_usize("dims")?;
        (1..=dims).try_fold(1usize, |acc, d| Ok(acc * self.get_usize(&format!("n{d}"))?))
    }

    fn for_grid(spec: &GridSpec) -> Self {
        let mut h = Self::default();
        h.set("dims", 2);
        h.set("n1", spec.n1);
        h.set("n2", spec.n2);
        h.set("x1_min", format!("{:e}", spec.x1_min));
        h.set("x1_max", format!("{:e}", spec.x1_max));
        h.set("x2_min", format!("{:e}", spec.x2_min));
        h.set("x2_max", format!("{:e}", spec.x2_max));
        h
    }

    fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.get_usize("n1")?,
            self.get_usize("n2")?,
            (self.get_f64("x1_min")?, self.get_f64("x1_max")?),
            (self.get_f64("x2_min")?, self.get_f64("x2_max")?),
        )
    }
}

/// Writes a header and payload in QF2 layout.
pub fn write_qf2<W: Write>(mut w: W, header: &Qf2Header, data: &[Quaternion]) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    for (k, v) in &header.entries {
        if k == "endianness" {
            continue;
        }
        writeln!(w, "{k}={v}")?;
    }
    writeln!(w, "endianness=little")?;
    writeln!(w, "end")?;
    let mut buf = Vec::with_capacity(data.len() * 32);
    for q in data {
        for c in q.to_array() {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Reads a QF2 header and payload of any rank.
pub fn read_qf2<R: Read>(r: R) -> Result<(Qf2Header, Vec<Quaternion>)> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(Error::Format("not a QF2 file (bad magic)".into()));
    }
    let mut header = Qf2Header::default();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("unterminated QF2 header".into()));
        }
        let l = line.trim_end();
        if l == "end" {
            break;
        }
        let (k, v) = l.split_once('=').ok_or_else(|| Error::Format(format!("bad header line `{l}`")))?;
        header.set(k.trim(), v.trim());
    }
    if header.get("endianness")? != "little" {
        return Err(Error::Format("only little-endian payloads are supported".into()));
    }
    let count = header.sample_count()?;
    let mut bytes = vec![0u8; count * 32];
    r.read_exact(&mut bytes).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated QF2 payload".into()),
        _ => Error::Io(e),
    })?;
    let data = bytes
        .chunks_exact(32)
        .map(|c| {
            let f = |i: usize| f64::from_le_bytes(c[i * 8..i * 8 + 8].try_into().expect("8 bytes"));
            Quaternion::new(f(0), f(1), f(2), f(3))
        })
        .collect();
    Ok((header, data))
}

pub fn save_qf2(field: &QField, path: impl AsRef<Path>) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    write_qf2(w, &Qf2Header::for_grid(field.spec()), field.data())
}

pub fn load_qf2(path: impl AsRef<Path>) -> Result<QField> {
    let (header, data) = read_qf2(File::open(path)?)?;
    if header.get_usize("dims")? != 2 {
        return Err(Error::Format("expected a 2-D QF2 field".into()));
    }
    QField::new(header.grid()?, data)
}

/// Imports a binary PPM (P6, 8-bit) image as a pure-quaternion field
/// `(0, R/255, G/255, B/255)`.
///
/// Image row `r`, column `c` lands at `x = (r, c) / resolution`, i.e. the image
/// occupies `[0, H/res) x [0, W/res)`, and the field is zero-padded to the
/// square extent `[lo, hi)²`.
pub fn import_ppm(path: impl AsRef<Path>, resolution: usize, lo: i64, hi: i64) -> Result<QField> {
    let img = image::ImageReader::with_format(BufReader::new(File::open(path)?), image::ImageFormat::Pnm)
        .decode()
        .map_err(|e| Error::Format(format!("PPM decode: {e}")))?
        .to_rgb8();
    let spec = GridSpec::per_unit(resolution, lo, hi)?;
    let (w, h) = img.dimensions();
    let origin = spec.grid_index([0.0, 0.0])?;
    let (rows, cols) = (h as i64, w as i64);
    if origin[0] < 0 || origin[1] < 0 || origin[0] + rows > spec.n1 as i64 || origin[1] + cols > spec.n2 as i64 {
        return Err(Error::InvalidParameter(format!(
            "{w}x{h} image at {resolution} samples/unit does not fit in [{lo}, {hi})²"
        )));
    }
    let mut data = vec![Quaternion::ZERO; spec.len()];
    for (c, r, px) in img.enumerate_pixels() {
        let k1 = (origin[0] + r as i64) as usize;
        let k2 = (origin[1] + c as i64) as usize;
        let [red, green, blue] = px.0;
        data[spec.index(k1, k2)] = Quaternion::new(0.0, red as f64 / 255.0, green as f64 / 255.0, blue as f64 / 255.0);
    }
    QField::new(spec, data)
}

/// CSV with columns `x1,x2,q0,q1,q2,q3,modulus`, one row per sample.
pub fn export_csv<W: Write>(field: &QField, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x1", "x2", "q0", "q1", "q2", "q3", "modulus"])?;
    let s = field.spec();
    for k1 in 0..s.n1 {
        for k2 in 0..s.n2 {
            let [x1, x2] = s.point(k1, k2);
            let q = field.get(k1, k2);
            wr.write_record([x1, x2, q.q0, q.q1, q.q2, q.q3, q.modulus()].iter().map(|v| format!("{v:e}")))?;
        }
    }
    wr.flush()?;
    Ok(())
}
