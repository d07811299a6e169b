//! Deterministic rasterization of complex 2-plane slices: pixels map to
//! points of the slice plane, are classified through the plan's limit
//! evaluator or a basin membership sweep, and are written as binary PPM
//! with fixed palettes. Identical configuration yields identical bytes,
//! independent of the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basins::{basin_membership, AutSequence, BasinError, Membership};
use crate::calg::{AlgError, CVec};
use crate::pushout::{LimitClassification, PushOutError, PushOutPlan};

/// Hard cap on either raster dimension.
pub const MAX_RESOLUTION: u32 = 4096;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error(transparent)]
    Plan(#[from] PushOutError),
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error(transparent)]
    Basin(#[from] BasinError),
    #[error("invalid slice: {0}")]
    BadSlice(String),
    #[error("unknown palette {0:?}")]
    UnknownPalette(String),
}

/// A real 2-plane (or complex line) through `base`, windowed and sampled on
/// a pixel grid. Pixel `(row, col)` maps to
/// `base + u * dir1 + v * dir2` with `u, v` affine in the pixel centre.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceSpec {
    #[serde(default = "crate::scenario::default_schema_version")]
    pub schema_version: u32,
    pub base: CVec,
    pub dir1: CVec,
    pub dir2: CVec,
    pub center: [f64; 2],
    pub half_extent: [f64; 2],
    pub width: u32,
    pub height: u32,
    /// Parameter value for parameterized plans.
    #[serde(default)]
    pub param_z: Option<CVec>,
    #[serde(default = "default_palette")]
    pub palette: String,
    #[serde(default)]
    pub scalar: ScalarMode,
}

fn default_palette() -> String {
    "stage".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScalarMode {
    /// Stage index at which the pixel resolved.
    #[default]
    Stages,
    /// Signed gap of the family value `F(z, ζ)` to the obstacle.
    GapToObstacle,
    None,
}

impl SliceSpec {
    pub fn validate(&self, ambient: usize) -> Result<(), RenderError> {
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::BadSlice("resolution must be positive".into()));
        }
        if self.width > MAX_RESOLUTION || self.height > MAX_RESOLUTION {
            return Err(RenderError::BadSlice(format!(
                "resolution exceeds the {MAX_RESOLUTION} cap"
            )));
        }
        if self.base.len() != ambient || self.dir1.len() != ambient || self.dir2.len() != ambient {
            return Err(RenderError::BadSlice(format!(
                "slice vectors must live in C^{ambient}"
            )));
        }
        // Real-linear independence of the two directions.
        let g11 = self.dir1.norm().powi(2);
        let g22 = self.dir2.norm().powi(2);
        let mut g12 = 0.0;
        for i in 0..ambient {
            let a = self.dir1[i];
            let b = self.dir2[i];
            g12 += a.re * b.re + a.im * b.im;
        }
        let gram = g11 * g22 - g12 * g12;
        if gram <= 1e-20 * (1.0 + g11) * (1.0 + g22) {
            return Err(RenderError::BadSlice(
                "slice directions are linearly dependent".into(),
            ));
        }
        Ok(())
    }

    /// Centre of pixel `(row, col)` in the ambient space.
    pub fn pixel_point(&self, row: u32, col: u32) -> CVec {
        let u = self.center[0]
            + (2.0 * (col as f64 + 0.5) / self.width as f64 - 1.0) * self.half_extent[0];
        let v = self.center[1]
            + (2.0 * (row as f64 + 0.5) / self.height as f64 - 1.0) * self.half_extent[1];
        let mut coords = Vec::with_capacity(self.base.len());
        for i in 0..self.base.len() {
            coords.push(self.base[i] + self.dir1[i].scale(u) + self.dir2[i].scale(v));
        }
        CVec::from_raw(coords)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PixelClass {
    Converged { stage: u32 },
    Escaped { stage: u32 },
    Undecided,
}

/// Row-major classification grid with an optional scalar layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RasterResult {
    pub width: u32,
    pub height: u32,
    pub classes: Vec<PixelClass>,
    pub scalar: Vec<f64>,
}

impl RasterResult {
    pub fn class_at(&self, row: u32, col: u32) -> PixelClass {
        self.classes[(row * self.width + col) as usize]
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let mut converged = 0;
        let mut escaped = 0;
        let mut undecided = 0;
        for c in &self.classes {
            match c {
                PixelClass::Converged { .. } => converged += 1,
                PixelClass::Escaped { .. } => escaped += 1,
                PixelClass::Undecided => undecided += 1,
            }
        }
        (converged, escaped, undecided)
    }
}

/// What a raster classifies.
pub enum RasterTarget<'a> {
    /// A certified plan evaluated at the slice's parameter value.
    Plan(&'a PushOutPlan),
    /// A basin membership sweep.
    Basin {
        seq: &'a AutSequence,
        delta: f64,
        escape_radius: f64,
        horizon: usize,
    },
}

/// Rasterize a slice. Pixels are classified independently and merged in
/// row-major order, so the result does not depend on the execution order.
pub fn raster_slice(target: &RasterTarget, spec: &SliceSpec) -> Result<RasterResult, RenderError> {
    let ambient = match target {
        RasterTarget::Plan(plan) => plan.n(),
        RasterTarget::Basin { seq, .. } => seq.dim(),
    };
    spec.validate(ambient)?;
    let total = (spec.width as usize) * (spec.height as usize);

    let (classes, scalar): (Vec<PixelClass>, Vec<f64>) = match target {
        RasterTarget::Plan(plan) => {
            let z = spec
                .param_z
                .clone()
                .unwrap_or_else(|| CVec::zero(plan.scenario.param_dim()));
            let sp = plan.specialize(&z)?;
            let obstacle = plan.scenario.obstacle_at(&z)?;
            (0..total)
                .into_par_iter()
                .map(|idx| {
                    let row = (idx / spec.width as usize) as u32;
                    let col = (idx % spec.width as usize) as u32;
                    let zeta = spec.pixel_point(row, col);
                    let class = match sp.eval_limit(&zeta) {
                        LimitClassification::Converged { stage_reached, .. } => {
                            PixelClass::Converged {
                                stage: stage_reached as u32,
                            }
                        }
                        LimitClassification::Escaped { stage } => PixelClass::Escaped {
                            stage: stage as u32,
                        },
                        LimitClassification::Undecided { .. } => PixelClass::Undecided,
                    };
                    let scalar = match spec.scalar {
                        ScalarMode::Stages => match class {
                            PixelClass::Converged { stage } => stage as f64,
                            PixelClass::Escaped { stage } => -(stage as f64),
                            PixelClass::Undecided => f64::NAN,
                        },
                        ScalarMode::GapToObstacle => match sp.fb_eval_full(&zeta) {
                            Ok(value) => obstacle.signed_gap(&value).unwrap_or(f64::NAN),
                            Err(_) => f64::NAN,
                        },
                        ScalarMode::None => 0.0,
                    };
                    (class, scalar)
                })
                .unzip()
        }
        RasterTarget::Basin {
            seq,
            delta,
            escape_radius,
            horizon,
        } => (0..total)
            .into_par_iter()
            .map(|idx| {
                let row = (idx / spec.width as usize) as u32;
                let col = (idx % spec.width as usize) as u32;
                let point = spec.pixel_point(row, col);
                let class = match basin_membership(seq, &point, *delta, *escape_radius, *horizon)
                {
                    Ok(Membership::Attracted { step }) => PixelClass::Converged {
                        stage: step as u32,
                    },
                    Ok(Membership::Escaped { step }) => PixelClass::Escaped {
                        stage: step as u32,
                    },
                    Ok(Membership::Undecided) | Err(_) => PixelClass::Undecided,
                };
                let scalar = match class {
                    PixelClass::Converged { stage } => stage as f64,
                    PixelClass::Escaped { stage } => -(stage as f64),
                    PixelClass::Undecided => f64::NAN,
                };
                (class, scalar)
            })
            .unzip(),
    };

    Ok(RasterResult {
        width: spec.width,
        height: spec.height,
        classes,
        scalar,
    })
}

fn mono_rgb(class: PixelClass) -> [u8; 3] {
    match class {
        PixelClass::Converged { .. } => [255, 255, 255],
        PixelClass::Escaped { .. } => [0, 0, 0],
        PixelClass::Undecided => [128, 128, 128],
    }
}

fn stage_rgb(class: PixelClass) -> [u8; 3] {
    match class {
        PixelClass::Converged { stage } => {
            let t = (stage.min(15) * 16) as u8;
            [16u8.saturating_add(t / 4), 64u8.saturating_add(t), 255 - t / 2]
        }
        PixelClass::Escaped { stage } => {
            let t = (stage.min(15) * 16) as u8;
            [255 - t / 3, 96u8.saturating_add(t / 2), 16]
        }
        PixelClass::Undecided => [32, 32, 32],
    }
}

/// Binary PPM bytes: `P6`, ASCII dimensions and maxval, then row-major RGB
/// triples. Byte-exact for a fixed raster and palette.
pub fn write_ppm(result: &RasterResult, palette: &str) -> Result<Vec<u8>, RenderError> {
    let lut: fn(PixelClass) -> [u8; 3] = match palette {
        "mono" => mono_rgb,
        "stage" => stage_rgb,
        other => return Err(RenderError::UnknownPalette(other.into())),
    };
    let header = format!("P6\n{} {}\n255\n", result.width, result.height);
    let mut bytes = Vec::with_capacity(header.len() + result.classes.len() * 3);
    bytes.extend_from_slice(header.as_bytes());
    for class in &result.classes {
        bytes.extend_from_slice(&lut(*class));
    }
    Ok(bytes)
}

/// Grid CSV: one row per pixel with class and scalar, row-major.
pub fn grid_csv(result: &RasterResult) -> String {
    let mut out = String::from("schema_version,row,col,class,stage,scalar\n");
    for row in 0..result.height {
        for col in 0..result.width {
            let idx = (row * result.width + col) as usize;
            let (name, stage) = match result.classes[idx] {
                PixelClass::Converged { stage } => ("converged", stage as i64),
                PixelClass::Escaped { stage } => ("escaped", stage as i64),
                PixelClass::Undecided => ("undecided", -1),
            };
            let scalar = result.scalar[idx];
            out.push_str(&format!("1,{row},{col},{name},{stage},{scalar:?}\n"));
        }
    }
    out
}
