use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{resample_to, DisplacementField, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MisalignmentKind {
    /// Integer shift to the right with edge replication.
    Shift,
    /// Enlarge by `level` pixels on every side, then crop the center.
    Dilate,
}

impl MisalignmentKind {
    pub const ALL: [MisalignmentKind; 2] = [MisalignmentKind::Shift, MisalignmentKind::Dilate];

    pub fn name(self) -> &'static str {
        match self {
            MisalignmentKind::Shift => "shift",
            MisalignmentKind::Dilate => "dilate",
        }
    }
}

impl fmt::Display for MisalignmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MisalignmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift" => Ok(MisalignmentKind::Shift),
            "dilate" => Ok(MisalignmentKind::Dilate),
            _ => Err(Error::InvalidParameter(format!(
                "unknown misalignment kind '{s}' (expected shift or dilate)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisalignmentSpec {
    pub kind: MisalignmentKind,
    /// Shift amount or dilation margin in pixels.
    pub level: usize,
}

impl MisalignmentSpec {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.kind == MisalignmentKind::Dilate && 2 * self.level >= width.min(height) {
            return Err(Error::InvalidParameter(format!(
                "dilation margin {} needs an image larger than {}x{}",
                self.level, width, height
            )));
        }
        Ok(())
    }
}

pub fn synth_misalign(img: &Image, spec: MisalignmentSpec) -> Result<Image> {
    let (w, h) = img.dims();
    spec.validate(w, h)?;
    if spec.level == 0 {
        return Ok(img.clone());
    }
    match spec.kind {
        MisalignmentKind::Shift => Ok(img.shift_right(spec.level)),
        MisalignmentKind::Dilate => {
            let big = resample_to(img, w + 2 * spec.level, h + 2 * spec.level)?;
            big.center_crop(w, h)
        }
    }
}

/// Backward field that undoes `spec`: warping the misaligned image with it
/// recovers the original (away from replicated borders).
pub fn true_field(spec: MisalignmentSpec, width: usize, height: usize) -> DisplacementField {
    let l = spec.level as f64;
    match spec.kind {
        MisalignmentKind::Shift => DisplacementField::constant(width, height, l, 0.0),
        MisalignmentKind::Dilate => {
            // pixel-center resampling: misaligned(x) = original((x + L + 0.5) W / (W + 2L) - 0.5)
            let fx = 2.0 * l / width as f64;
            let fy = 2.0 * l / height as f64;
            DisplacementField::from_fn(width, height, |x, y| {
                ((x as f64 + 0.5) * fx - l, (y as f64 + 0.5) * fy - l)
            })
        }
    }
}
