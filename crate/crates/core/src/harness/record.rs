use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use super::scenario::Scenario;
use super::HarnessError;
use crate::format::GridReader;
use crate::image::DepthImage;
use crate::perception::{PerceptionConfig, ShearEstimate, ShearPipeline};
use crate::pneumatics::{TelemetryRow, TELEMETRY_HEADER as PNEUMATICS_HEADER};

pub const FRAMES_HEADER: &str = "frame,time_s,pressure_hpa,kind,reference,contact_px";
pub const TELEMETRY_HEADER: &str = "frame,patch_area_px,centroid_x,centroid_y,sum_dx,sum_dy,torsion,fx,fy,ft";

pub const SCENARIO_FILE: &str = "scenario.txt";
pub const FRAMES_FILE: &str = "frames.bin";
pub const INDEX_FILE: &str = "frames.csv";
pub const CONTACT_FILE: &str = "contact.rle";
pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const PNEUMATICS_FILE: &str = "pneumatics.csv";
pub const MASKS_FILE: &str = "masks.bin";
pub const FLOW_FILE: &str = "flow.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// Part of a reference capture.
    Reference,
    /// Compared against the current reference.
    Analyzed,
    /// Taken while no valid reference existed (pressure in transit).
    Transient,
}

impl FrameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Reference => "reference",
            Self::Analyzed => "analyzed",
            Self::Transient => "transient",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Self::Reference, Self::Analyzed, Self::Transient].into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of the frame index. Time and pressure are written in shortest
/// round-trip form so a replay sees exactly the live values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameIndexRow {
    pub frame: usize,
    pub time: f64,
    pub pressure: f64,
    pub kind: FrameKind,
    /// Reference capture the frame belongs to or is compared against.
    pub reference: Option<usize>,
    /// Ground-truth contact pixels.
    pub contact_px: usize,
}

impl FrameIndexRow {
    pub fn to_csv(&self) -> String {
        let reference = self.reference.map_or("-".to_string(), |r| r.to_string());
        format!("{},{},{},{},{},{}", self.frame, self.time, self.pressure, self.kind, reference, self.contact_px)
    }

    pub fn parse(line: &str, line_no: usize) -> Result<Self, HarnessError> {
        let err = |reason: &str| HarnessError::Record(format!("{INDEX_FILE} line {line_no}: {reason}"));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(err("expected 6 fields"));
        }
        Ok(Self {
            frame: f[0].parse().map_err(|_| err("bad frame"))?,
            time: f[1].parse().map_err(|_| err("bad time"))?,
            pressure: f[2].parse().map_err(|_| err("bad pressure"))?,
            kind: FrameKind::parse(f[3]).ok_or_else(|| err("bad kind"))?,
            reference: match f[4] {
                "-" => None,
                r => Some(r.parse().map_err(|_| err("bad reference"))?),
            },
            contact_px: f[5].parse().map_err(|_| err("bad contact count"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTelemetry {
    pub frame: usize,
    pub estimate: ShearEstimate,
}

impl FrameTelemetry {
    pub fn to_csv(&self) -> String {
        let e = &self.estimate;
        format!(
            "{},{},{:.4},{:.4},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.frame,
            e.patch_area,
            e.patch_centroid[0],
            e.patch_centroid[1],
            e.raw_displacement_sum[0],
            e.raw_displacement_sum[1],
            e.torsion,
            e.force[0],
            e.force[1],
            e.force[2]
        )
    }
}

pub fn telemetry_csv(rows: &[FrameTelemetry]) -> String {
    let mut out = format!("{TELEMETRY_HEADER}\n");
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Frames, ground truth and telemetry of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub frames: Vec<FrameIndexRow>,
    /// Settled pressure of each reference capture, by id.
    pub references: Vec<f64>,
    pub telemetry: Vec<FrameTelemetry>,
    /// Mask IoU against ground truth, one per telemetry row.
    pub mask_scores: Vec<f64>,
    pub pneumatics: Vec<TelemetryRow>,
    /// Guard tolerance the run was made with, hPa.
    pub pressure_tolerance: f64,
    pub frames_bin: Vec<u8>,
    pub contact_bin: Vec<u8>,
    pub masks_bin: Vec<u8>,
    pub flow_bin: Vec<u8>,
}

impl RunRecord {
    pub fn new(scenario: Scenario, pressure_tolerance: f64) -> Self {
        Self {
            scenario,
            frames: Vec::new(),
            references: Vec::new(),
            telemetry: Vec::new(),
            mask_scores: Vec::new(),
            pneumatics: Vec::new(),
            pressure_tolerance,
            frames_bin: Vec::new(),
            contact_bin: Vec::new(),
            masks_bin: Vec::new(),
            flow_bin: Vec::new(),
        }
    }

    pub fn frames_csv(&self) -> String {
        let mut out = format!("{FRAMES_HEADER}\n");
        for r in &self.frames {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn telemetry_csv(&self) -> String {
        telemetry_csv(&self.telemetry)
    }

    pub fn pneumatics_csv(&self) -> String {
        let mut out = format!("{PNEUMATICS_HEADER}\n");
        for r in &self.pneumatics {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    /// Writes the record into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let put = |name: &str, bytes: &[u8]| fs::write(dir.join(name), bytes).map_err(|e| io_err(&dir.join(name), e));
        put(SCENARIO_FILE, self.scenario.to_text().as_bytes())?;
        put(FRAMES_FILE, &self.frames_bin)?;
        put(INDEX_FILE, self.frames_csv().as_bytes())?;
        put(CONTACT_FILE, &self.contact_bin)?;
        put(TELEMETRY_FILE, self.telemetry_csv().as_bytes())?;
        put(PNEUMATICS_FILE, self.pneumatics_csv().as_bytes())?;
        if !self.masks_bin.is_empty() {
            put(MASKS_FILE, &self.masks_bin)?;
            put(FLOW_FILE, &self.flow_bin)?;
        }
        Ok(())
    }

    pub fn audit(&self) -> Result<(), HarnessError> {
        audit_reset_discipline(&self.frames, self.pressure_tolerance)
    }

    pub fn median_mask_iou(&self) -> Option<f64> {
        let mut v = self.mask_scores.clone();
        (!v.is_empty()).then(|| crate::image::median(&mut v))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

pub fn read_frame_index(text: &str) -> Result<Vec<FrameIndexRow>, HarnessError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == FRAMES_HEADER => {}
        _ => return Err(HarnessError::Record(format!("{INDEX_FILE}: missing header"))),
    }
    lines.filter(|(_, l)| !l.is_empty()).map(|(i, l)| FrameIndexRow::parse(l, i + 1)).collect()
}

/// Checks that every analysed frame was compared against a reference captured
/// within `tolerance` hPa of the frame's own pressure.
pub fn audit_reset_discipline(frames: &[FrameIndexRow], tolerance: f64) -> Result<(), HarnessError> {
    let mut refs: Vec<Option<f64>> = Vec::new();
    for f in frames {
        match (f.kind, f.reference) {
            (FrameKind::Reference, Some(id)) => {
                if refs.len() <= id {
                    refs.resize(id + 1, None);
                }
                refs[id].get_or_insert(f.pressure);
            }
            (FrameKind::Analyzed, Some(id)) => {
                let Some(Some(p)) = refs.get(id) else {
                    return Err(HarnessError::Audit(format!("frame {} uses reference {id} before it was captured", f.frame)));
                };
                if (p - f.pressure).abs() > tolerance {
                    return Err(HarnessError::Audit(format!(
                        "frame {} at {} hPa uses reference {id} captured at {p} hPa",
                        f.frame, f.pressure
                    )));
                }
            }
            (FrameKind::Transient, None) => {}
            _ => return Err(HarnessError::Audit(format!("frame {} has an inconsistent reference column", f.frame))),
        }
    }
    Ok(())
}

/// Reruns perception over a recorded directory.
pub fn replay(dir: &Path, config: &PerceptionConfig) -> Result<Vec<FrameTelemetry>, HarnessError> {
    let index_path = dir.join(INDEX_FILE);
    let index = read_frame_index(&fs::read_to_string(&index_path).map_err(|e| io_err(&index_path, e))?)?;
    let frames_path = dir.join(FRAMES_FILE);
    let file = fs::File::open(&frames_path).map_err(|e| io_err(&frames_path, e))?;
    let mut reader = GridReader::new(BufReader::new(file));
    let mut pipeline = ShearPipeline::new(config.clone())?;
    let mut pending: Vec<(DepthImage, crate::image::IrImage)> = Vec::new();
    let mut pending_id: Option<usize> = None;
    let mut out = Vec::new();
    for (pos, row) in index.iter().enumerate() {
        let depth = reader.read_depth(row.time, row.pressure)?;
        let ir = reader.read_ir(row.time)?;
        if row.kind == FrameKind::Reference {
            pending_id = row.reference;
            pending.push((depth, ir));
            let group_ends = index.get(pos + 1).is_none_or(|n| n.kind != FrameKind::Reference || n.reference != row.reference);
            if group_ends {
                pipeline.reset(&pending, pending[0].0.pressure_at_capture)?;
                pending.clear();
            }
            continue;
        }
        if row.kind == FrameKind::Analyzed {
            if row.reference != pending_id {
                return Err(HarnessError::Record(format!("frame {} refers to a reference that was not recorded", row.frame)));
            }
            let analysis = pipeline.process(&depth, &ir)?;
            out.push(FrameTelemetry { frame: row.frame, estimate: analysis.estimate });
        }
    }
    if reader.next_header()?.is_some() {
        return Err(HarnessError::Record(format!("{FRAMES_FILE} has more frames than {INDEX_FILE}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(frame: usize, pressure: f64, kind: FrameKind, reference: Option<usize>) -> FrameIndexRow {
        FrameIndexRow { frame, time: 0.1 * frame as f64, pressure, kind, reference, contact_px: 0 }
    }

    #[test]
    fn index_rows_round_trip_exactly() {
        let r = FrameIndexRow { frame: 3, time: 0.30000000000000004, pressure: 1049.123456789012, kind: FrameKind::Analyzed, reference: Some(1), contact_px: 42 };
        assert_eq!(FrameIndexRow::parse(&r.to_csv(), 1).unwrap(), r);
        let t = FrameIndexRow { reference: None, kind: FrameKind::Transient, ..r };
        assert_eq!(FrameIndexRow::parse(&t.to_csv(), 1).unwrap(), t);
        assert!(FrameIndexRow::parse("1,2,3", 1).is_err());
    }

    #[test]
    fn audit_flags_stale_frames() {
        let ok = [row(0, 1050.0, FrameKind::Reference, Some(0)), row(1, 1051.0, FrameKind::Analyzed, Some(0))];
        assert!(audit_reset_discipline(&ok, 4.0).is_ok());
        let stale = [row(0, 1050.0, FrameKind::Reference, Some(0)), row(1, 1070.0, FrameKind::Analyzed, Some(0))];
        assert!(matches!(audit_reset_discipline(&stale, 4.0), Err(HarnessError::Audit(_))));
        let dangling = [row(0, 1050.0, FrameKind::Analyzed, Some(2))];
        assert!(audit_reset_discipline(&dangling, 4.0).is_err());
    }
}
