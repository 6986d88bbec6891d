//! Binary grid files for frames, masks, flow dumps and contact sidecars.
//!
//! Every grid starts with a 32-byte ASCII header `<TAG> <width> <height> <scale>`
//! padded with spaces and terminated by `\n` in the last byte, followed by a
//! little-endian row-major payload:
//!
//! | tag     | payload                | scale field                      |
//! |---------|------------------------|----------------------------------|
//! | `BBLF1` | `u16` depth            | micrometres per unit             |
//! | `BBLI1` | `u8` IR intensity      | levels at full intensity (255)   |
//! | `BBLM1` | `u8` mask, 0 or 1      | 1                                |
//! | `BBLV1` | `i16` pairs (dx, dy)   | milli-pixels per unit            |
//! | `BBLC1` | `u32` run lengths      | number of runs                   |
//!
//! Contact sidecars (`BBLC1`) store alternating run lengths of unset and set
//! pixels, starting with an unset run that may be zero.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::image::{ContactMask, DepthImage, FlowField, Grid, ImageError, IrImage};

pub const HEADER_LEN: usize = 32;
pub const DEPTH_TAG: &str = "BBLF1";
pub const IR_TAG: &str = "BBLI1";
pub const MASK_TAG: &str = "BBLM1";
pub const FLOW_TAG: &str = "BBLV1";
pub const CONTACT_TAG: &str = "BBLC1";

/// Default depth quantum: 10 µm per unit.
pub const DEFAULT_DEPTH_SCALE_UM: u32 = 10;
pub const IR_LEVELS: u32 = 255;
pub const FLOW_SCALE_MILLIPX: u32 = 10;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad header at byte {offset}: {reason}")]
    Header { offset: u64, reason: String },
    #[error("truncated payload at byte {offset}: expected {expected} more bytes")]
    Truncated { offset: u64, expected: usize },
    #[error("invalid pixel in grid starting at byte {offset}: {source}")]
    Pixel { offset: u64, source: ImageError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub tag: [u8; 5],
    pub width: usize,
    pub height: usize,
    pub scale: u32,
}

impl Header {
    pub fn new(tag: &str, width: usize, height: usize, scale: u32) -> Self {
        let mut t = [0u8; 5];
        t.copy_from_slice(&tag.as_bytes()[..5]);
        Self { tag: t, width, height, scale }
    }

    pub fn tag_str(&self) -> &str {
        std::str::from_utf8(&self.tag).unwrap_or("?????")
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let text = format!("{} {} {} {}", self.tag_str(), self.width, self.height, self.scale);
        assert!(text.len() < HEADER_LEN, "header fields too long");
        let mut out = [b' '; HEADER_LEN];
        out[..text.len()].copy_from_slice(text.as_bytes());
        out[HEADER_LEN - 1] = b'\n';
        out
    }

    fn decode(bytes: &[u8; HEADER_LEN], offset: u64) -> Result<Self, FormatError> {
        let bad = |reason: &str| FormatError::Header { offset, reason: reason.to_string() };
        if bytes[HEADER_LEN - 1] != b'\n' {
            return Err(bad("missing terminating newline"));
        }
        let text = std::str::from_utf8(&bytes[..HEADER_LEN - 1]).map_err(|_| bad("not ASCII"))?;
        let mut fields = text.split_ascii_whitespace();
        let tag = fields.next().ok_or_else(|| bad("empty header"))?;
        if tag.len() != 5 || !tag.starts_with("BBL") {
            return Err(bad("unknown magic"));
        }
        let mut num = |name: &str| -> Result<u64, FormatError> {
            fields
                .next()
                .and_then(|f| f.parse::<u64>().ok())
                .ok_or_else(|| bad(&format!("missing or malformed {name}")))
        };
        let width = num("width")? as usize;
        let height = num("height")? as usize;
        let scale = num("scale")?;
        if fields.next().is_some() {
            return Err(bad("trailing fields"));
        }
        if scale > u32::MAX as u64 || width.checked_mul(height).is_none() {
            return Err(bad("field out of range"));
        }
        Ok(Header::new(tag, width, height, scale as u32))
    }
}

/// Writer that tracks nothing but keeps the encoding rules in one place.
pub struct GridWriter<W: Write> {
    inner: W,
}

impl<W: Write> GridWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn into_inner(self) -> W {
        self.inner
    }

    pub fn write_depth(&mut self, image: &DepthImage, scale_um: u32) -> io::Result<()> {
        let (w, h) = image.dims();
        self.inner.write_all(&Header::new(DEPTH_TAG, w, h, scale_um).encode())?;
        let mut buf = Vec::with_capacity(w * h * 2);
        for &v in image.values.as_slice() {
            buf.extend_from_slice(&depth_to_units(v, scale_um).to_le_bytes());
        }
        self.inner.write_all(&buf)
    }

    pub fn write_ir(&mut self, image: &IrImage) -> io::Result<()> {
        let (w, h) = image.dims();
        self.inner.write_all(&Header::new(IR_TAG, w, h, IR_LEVELS).encode())?;
        let buf: Vec<u8> = image.values.as_slice().iter().map(|&v| ir_to_level(v)).collect();
        self.inner.write_all(&buf)
    }

    pub fn write_mask(&mut self, mask: &ContactMask) -> io::Result<()> {
        let (w, h) = mask.dims();
        self.inner.write_all(&Header::new(MASK_TAG, w, h, 1).encode())?;
        let buf: Vec<u8> = mask.values.as_slice().iter().map(|&m| m as u8).collect();
        self.inner.write_all(&buf)
    }

    /// Invalid vectors are written as zero.
    pub fn write_flow(&mut self, flow: &FlowField) -> io::Result<()> {
        let (w, h) = flow.dims();
        self.inner.write_all(&Header::new(FLOW_TAG, w, h, FLOW_SCALE_MILLIPX).encode())?;
        let per_px = 1000.0 / FLOW_SCALE_MILLIPX as f64;
        let mut buf = Vec::with_capacity(w * h * 4);
        for (v, &ok) in flow.vectors.as_slice().iter().zip(flow.valid.as_slice()) {
            for c in v {
                let q = if ok { (c * per_px).round().clamp(i16::MIN as f64, i16::MAX as f64) } else { 0.0 };
                buf.extend_from_slice(&(q as i16).to_le_bytes());
            }
        }
        self.inner.write_all(&buf)
    }

    pub fn write_contact(&mut self, mask: &ContactMask) -> io::Result<()> {
        let (w, h) = mask.dims();
        let runs = encode_runs(mask.values.as_slice());
        self.inner.write_all(&Header::new(CONTACT_TAG, w, h, runs.len() as u32).encode())?;
        let mut buf = Vec::with_capacity(runs.len() * 4);
        for r in runs {
            buf.extend_from_slice(&r.to_le_bytes());
        }
        self.inner.write_all(&buf)
    }
}

/// Reader that remembers its byte offset so errors can point into the file.
pub struct GridReader<R: Read> {
    inner: R,
    offset: u64,
}

impl<R: Read> GridReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Reads the next header, or `None` at a clean end of stream.
    pub fn next_header(&mut self) -> Result<Option<Header>, FormatError> {
        let start = self.offset;
        let mut bytes = [0u8; HEADER_LEN];
        let got = self.fill(&mut bytes)?;
        if got == 0 {
            return Ok(None);
        }
        if got < HEADER_LEN {
            return Err(FormatError::Truncated { offset: start + got as u64, expected: HEADER_LEN - got });
        }
        Header::decode(&bytes, start).map(Some)
    }

    fn expect_header(&mut self, tag: &str) -> Result<Header, FormatError> {
        let start = self.offset;
        let header = self
            .next_header()?
            .ok_or(FormatError::Truncated { offset: start, expected: HEADER_LEN })?;
        if header.tag_str() != tag {
            return Err(FormatError::Header {
                offset: start,
                reason: format!("expected {tag}, found {}", header.tag_str()),
            });
        }
        Ok(header)
    }

    fn payload(&mut self, len: usize) -> Result<Vec<u8>, FormatError> {
        let mut buf = vec![0u8; len];
        let got = self.fill(&mut buf)?;
        if got < len {
            return Err(FormatError::Truncated { offset: self.offset, expected: len - got });
        }
        Ok(buf)
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<usize, FormatError> {
        let mut got = 0;
        while got < buf.len() {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += got as u64;
        Ok(got)
    }

    pub fn read_depth(&mut self, timestamp: f64, pressure: f64) -> Result<DepthImage, FormatError> {
        let start = self.offset;
        let h = self.expect_header(DEPTH_TAG)?;
        let raw = self.payload(h.width * h.height * 2)?;
        let values: Vec<f64> = raw
            .chunks_exact(2)
            .map(|c| units_to_depth(u16::from_le_bytes([c[0], c[1]]), h.scale))
            .collect();
        let grid = Grid::from_vec(h.width, h.height, values).map_err(|source| FormatError::Pixel { offset: start, source })?;
        DepthImage::new(grid, timestamp, pressure).map_err(|source| FormatError::Pixel { offset: start, source })
    }

    pub fn read_ir(&mut self, timestamp: f64) -> Result<IrImage, FormatError> {
        let start = self.offset;
        let h = self.expect_header(IR_TAG)?;
        let raw = self.payload(h.width * h.height)?;
        let levels = h.scale.max(1) as f64;
        let values: Vec<f64> = raw.iter().map(|&b| (b as f64 / levels).min(1.0)).collect();
        let grid = Grid::from_vec(h.width, h.height, values).map_err(|source| FormatError::Pixel { offset: start, source })?;
        IrImage::new(grid, timestamp).map_err(|source| FormatError::Pixel { offset: start, source })
    }

    pub fn read_mask(&mut self) -> Result<ContactMask, FormatError> {
        let start = self.offset;
        let h = self.expect_header(MASK_TAG)?;
        let raw = self.payload(h.width * h.height)?;
        let grid = Grid::from_vec(h.width, h.height, raw.iter().map(|&b| b != 0).collect())
            .map_err(|source| FormatError::Pixel { offset: start, source })?;
        Ok(ContactMask::new(grid))
    }

    pub fn read_contact(&mut self) -> Result<ContactMask, FormatError> {
        let start = self.offset;
        let h = self.expect_header(CONTACT_TAG)?;
        let raw = self.payload(h.scale as usize * 4)?;
        let runs: Vec<u32> = raw.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        let bits = decode_runs(&runs, h.width * h.height).ok_or_else(|| FormatError::Header {
            offset: start,
            reason: "run lengths do not cover the grid".into(),
        })?;
        let grid = Grid::from_vec(h.width, h.height, bits).map_err(|source| FormatError::Pixel { offset: start, source })?;
        Ok(ContactMask::new(grid))
    }
}

pub fn depth_to_units(mm: f64, scale_um: u32) -> u16 {
    (mm * 1000.0 / scale_um as f64).round().clamp(1.0, u16::MAX as f64) as u16
}

pub fn units_to_depth(units: u16, scale_um: u32) -> f64 {
    units as f64 * scale_um as f64 / 1000.0
}

pub fn ir_to_level(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * IR_LEVELS as f64).round() as u8
}

/// Applies the on-disk depth quantisation so live processing sees exactly what
/// a replay will read back.
pub fn quantize_depth(image: &DepthImage, scale_um: u32) -> DepthImage {
    DepthImage {
        values: image.values.map(|&v| units_to_depth(depth_to_units(v, scale_um), scale_um)),
        timestamp: image.timestamp,
        pressure_at_capture: image.pressure_at_capture,
    }
}

pub fn quantize_ir(image: &IrImage) -> IrImage {
    IrImage {
        values: image.values.map(|&v| ir_to_level(v) as f64 / IR_LEVELS as f64),
        timestamp: image.timestamp,
    }
}

pub fn encode_runs(bits: &[bool]) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0u32;
    for &b in bits {
        if b == current {
            len += 1;
        } else {
            runs.push(len);
            current = b;
            len = 1;
        }
    }
    runs.push(len);
    runs
}

pub fn decode_runs(runs: &[u32], total: usize) -> Option<Vec<bool>> {
    let mut bits = Vec::with_capacity(total);
    let mut value = false;
    for &r in runs {
        bits.extend(std::iter::repeat_n(value, r as usize));
        value = !value;
    }
    (bits.len() == total).then_some(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn depth(w: usize, h: usize) -> DepthImage {
        let v = (0..w * h).map(|i| 40.0 + i as f64 * 0.013).collect();
        DepthImage::new(Grid::from_vec(w, h, v).unwrap(), 1.5, 1050.0).unwrap()
    }

    #[test]
    fn header_is_32_bytes_and_newline_terminated() {
        let h = Header::new(DEPTH_TAG, 224, 171, 10).encode();
        assert_eq!(h.len(), 32);
        assert_eq!(&h[..17], b"BBLF1 224 171 10 ");
        assert_eq!(h[31], b'\n');
    }

    #[test]
    fn depth_round_trips_at_quantum() {
        let img = depth(5, 3);
        let mut w = GridWriter::new(Vec::new());
        w.write_depth(&img, DEFAULT_DEPTH_SCALE_UM).unwrap();
        let bytes = w.into_inner();
        assert_eq!(bytes.len(), 32 + 5 * 3 * 2);
        let back = GridReader::new(&bytes[..]).read_depth(1.5, 1050.0).unwrap();
        assert_eq!(back, quantize_depth(&img, DEFAULT_DEPTH_SCALE_UM));
        for (a, b) in back.values.as_slice().iter().zip(img.values.as_slice()) {
            assert!((a - b).abs() <= 0.005 + 1e-12);
        }
    }

    #[test]
    fn corrupt_magic_names_offset() {
        let mut w = GridWriter::new(Vec::new());
        w.write_depth(&depth(2, 2), 10).unwrap();
        w.write_depth(&depth(2, 2), 10).unwrap();
        let mut bytes = w.into_inner();
        let second = 32 + 8;
        bytes[second] = b'X';
        let mut r = GridReader::new(&bytes[..]);
        r.read_depth(0.0, 1050.0).unwrap();
        match r.read_depth(0.0, 1050.0) {
            Err(FormatError::Header { offset, .. }) => assert_eq!(offset, second as u64),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_reported() {
        let mut w = GridWriter::new(Vec::new());
        w.write_depth(&depth(4, 4), 10).unwrap();
        let bytes = w.into_inner();
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(
            GridReader::new(cut).read_depth(0.0, 1050.0),
            Err(FormatError::Truncated { offset: 61, expected: 3 })
        ));
        assert!(matches!(
            GridReader::new(&bytes[..20]).read_depth(0.0, 1050.0),
            Err(FormatError::Truncated { offset: 20, .. })
        ));
    }

    #[test]
    fn wrong_tag_is_rejected() {
        let mut w = GridWriter::new(Vec::new());
        w.write_mask(&ContactMask::full(2, 2)).unwrap();
        let bytes = w.into_inner();
        assert!(matches!(GridReader::new(&bytes[..]).read_ir(0.0), Err(FormatError::Header { offset: 0, .. })));
        assert_eq!(GridReader::new(&bytes[..]).read_mask().unwrap(), ContactMask::full(2, 2));
    }

    #[test]
    fn flow_dump_layout() {
        let mut f = FlowField::zeros(2, 1);
        f.vectors.as_mut_slice()[0] = [1.5, -0.25];
        f.valid.as_mut_slice()[0] = true;
        f.vectors.as_mut_slice()[1] = [9.0, 9.0];
        let mut w = GridWriter::new(Vec::new());
        w.write_flow(&f).unwrap();
        let b = w.into_inner();
        assert_eq!(&b[..5], FLOW_TAG.as_bytes());
        let vals: Vec<i16> = b[32..].chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
        assert_eq!(vals, vec![150, -25, 0, 0]);
    }

    proptest! {
        #[test]
        fn contact_runs_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..400)) {
            let n = bits.len();
            let mask = ContactMask::new(Grid::from_vec(n, 1, bits.clone()).unwrap());
            let mut w = GridWriter::new(Vec::new());
            w.write_contact(&mask).unwrap();
            let bytes = w.into_inner();
            let back = GridReader::new(&bytes[..]).read_contact().unwrap();
            prop_assert_eq!(back.values.as_slice(), &bits[..]);
        }

        #[test]
        fn ir_round_trip_is_idempotent(vals in proptest::collection::vec(0.0f64..=1.0, 1..64)) {
            let n = vals.len();
            let img = IrImage::new(Grid::from_vec(n, 1, vals).unwrap(), 0.0).unwrap();
            let mut w = GridWriter::new(Vec::new());
            w.write_ir(&img).unwrap();
            let bytes = w.into_inner();
            let back = GridReader::new(&bytes[..]).read_ir(0.0).unwrap();
            prop_assert_eq!(&back, &quantize_ir(&img));
            prop_assert_eq!(quantize_ir(&back), back);
        }
    }
}
