use super::flow::{dense_flow, FlowConfig};
use super::mask::{check_dims, compute_mask, mask_ir, MaskConfig};
use super::shear::{aggregate_shear, GainMatrix, ShearEstimate};
use super::PerceptionError;
use crate::image::{ContactMask, DepthImage, FlowField, Grid, IrImage};

/// No-contact reference frames captured at a settled pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub depth: DepthImage,
    pub ir: IrImage,
    pub pressure: f64,
}

/// Builds a reference from one or more no-contact frames by per-pixel averaging.
pub fn reset_reference(frames: &[(DepthImage, IrImage)], pressure: f64) -> Result<ReferenceState, PerceptionError> {
    let Some((first_depth, first_ir)) = frames.first() else {
        return Err(PerceptionError::EmptyReference);
    };
    let dims = first_depth.dims();
    for (d, i) in frames {
        check_dims(dims, d.dims())?;
        check_dims(dims, i.dims())?;
    }
    if frames.len() == 1 {
        let mut depth = first_depth.clone();
        depth.pressure_at_capture = pressure;
        return Ok(ReferenceState { depth, ir: first_ir.clone(), pressure });
    }
    let n = frames.len() as f64;
    let (w, h) = dims;
    let mut depth = vec![0.0; w * h];
    let mut ir = vec![0.0; w * h];
    for (d, i) in frames {
        for (acc, v) in depth.iter_mut().zip(d.values.as_slice()) {
            *acc += v;
        }
        for (acc, v) in ir.iter_mut().zip(i.values.as_slice()) {
            *acc += v;
        }
    }
    let last = &frames[frames.len() - 1];
    Ok(ReferenceState {
        depth: DepthImage {
            values: Grid::from_vec(w, h, depth.into_iter().map(|v| v / n).collect()).expect("sized"),
            timestamp: last.0.timestamp,
            pressure_at_capture: pressure,
        },
        ir: IrImage {
            values: Grid::from_vec(w, h, ir.into_iter().map(|v| v / n).collect()).expect("sized"),
            timestamp: last.1.timestamp,
        },
        pressure,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionConfig {
    pub mask: MaskConfig,
    pub flow: FlowConfig,
    pub gain: GainMatrix,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self { mask: MaskConfig::default(), flow: FlowConfig::default(), gain: GainMatrix::identity() }
    }
}

/// Everything computed for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    pub mask: ContactMask,
    pub flow: FlowField,
    pub estimate: ShearEstimate,
    pub reference_pressure: f64,
}

/// Mask, flow and shear for one sensor stream against its current reference.
#[derive(Debug, Clone)]
pub struct ShearPipeline {
    pub config: PerceptionConfig,
    reference: Option<ReferenceState>,
}

impl ShearPipeline {
    pub fn new(config: PerceptionConfig) -> Result<Self, PerceptionError> {
        config.flow.validate()?;
        Ok(Self { config, reference: None })
    }

    pub fn reference(&self) -> Option<&ReferenceState> {
        self.reference.as_ref()
    }

    /// Replaces the reference; anything computed before is no longer comparable.
    pub fn reset(&mut self, frames: &[(DepthImage, IrImage)], pressure: f64) -> Result<&ReferenceState, PerceptionError> {
        self.reference = Some(reset_reference(frames, pressure)?);
        Ok(self.reference.as_ref().expect("just set"))
    }

    pub fn process(&self, depth: &DepthImage, ir: &IrImage) -> Result<FrameAnalysis, PerceptionError> {
        let reference = self.reference.as_ref().ok_or(PerceptionError::NoReference)?;
        let mask = compute_mask(&reference.depth, depth, &self.config.mask)?;
        let first = mask_ir(&reference.ir, &mask)?;
        let second = mask_ir(ir, &mask)?;
        let flow = dense_flow(&first, &second, &mask, &self.config.flow)?;
        let estimate = aggregate_shear(&flow, &mask, &self.config.gain)?;
        Ok(FrameAnalysis { mask, flow, estimate, reference_pressure: reference.pressure })
    }
}
