//! Top-down overlay of a scene, in the canvas orientation: row 0 is the
//! forward edge of the extent, column 0 its left edge.
//!
//! Colors (RGB), drawn in this order so later layers win:
//!
//! | layer                       | color           |
//! |-----------------------------|-----------------|
//! | background                  | (0, 0, 0)       |
//! | SD road                     | (80, 80, 80)    |
//! | SD sidewalk                 | (40, 60, 130)   |
//! | SD crosswalk                | (130, 100, 40)  |
//! | GT lane boundary            | (255, 255, 255) |
//! | GT lane centerline          | (0, 200, 0)     |
//! | GT pedestrian crossing      | (255, 215, 0)   |
//! | predicted lane boundary     | (255, 0, 255)   |
//! | predicted lane centerline   | (255, 64, 64)   |
//! | predicted ped. crossing     | (0, 200, 255)   |

use sdlane::dataio::SceneFile;
use sdlane::lane_model::SegmentKind;
use sdlane::sd_encode::SdCategory;
use sdlane::{Extent, Point2, Polyline};
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [0, 0, 0];
pub const SD_ROAD: Rgb = [80, 80, 80];
pub const SD_SIDEWALK: Rgb = [40, 60, 130];
pub const SD_CROSSWALK: Rgb = [130, 100, 40];
pub const GT_BOUNDARY: Rgb = [255, 255, 255];
pub const GT_CENTERLINE: Rgb = [0, 200, 0];
pub const GT_CROSSING: Rgb = [255, 215, 0];
pub const PRED_BOUNDARY: Rgb = [255, 0, 255];
pub const PRED_CENTERLINE: Rgb = [255, 64, 64];
pub const PRED_CROSSING: Rgb = [0, 200, 255];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    /// Meters per pixel.
    pub resolution: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig { resolution: 0.125 }
    }
}

pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

struct Painter {
    extent: Extent,
    res: f64,
    img: Image,
}

impl Painter {
    fn new(extent: Extent, res: f64) -> CliResult<Self> {
        if !(res > 0.0 && res.is_finite()) {
            return Err(usage(format!("render resolution {res} must be positive")));
        }
        let height = (extent.width_x() / res).round() as usize;
        let width = (extent.width_y() / res).round() as usize;
        if height == 0 || width == 0 || height.saturating_mul(width) > 1 << 26 {
            return Err(usage(format!(
                "render size {height}x{width} px is out of range"
            )));
        }
        let pixels = BACKGROUND.repeat(width * height);
        Ok(Painter {
            extent,
            res,
            img: Image {
                width,
                height,
                pixels,
            },
        })
    }

    /// Continuous (row, col) of a ground point.
    fn to_pixel(&self, p: Point2) -> (f64, f64) {
        (
            (self.extent.x_max - p.x) / self.res,
            (self.extent.y_max - p.y) / self.res,
        )
    }

    fn plot(&mut self, r: f64, c: f64, color: Rgb) {
        if r < 0.0 || c < 0.0 {
            return;
        }
        let (r, c) = (r as usize, c as usize);
        if r < self.img.height && c < self.img.width {
            let k = 3 * (r * self.img.width + c);
            self.img.pixels[k..k + 3].copy_from_slice(&color);
        }
    }

    /// One-pixel line: samples at sub-pixel spacing along every segment.
    fn polyline(&mut self, p: &Polyline, color: Rgb) {
        for (a, b) in p.segments() {
            let (r0, c0) = self.to_pixel(a);
            let (r1, c1) = self.to_pixel(b);
            let span = (r1 - r0).abs().max((c1 - c0).abs());
            if !span.is_finite() {
                continue;
            }
            // Clamp so a far-off SD polyline cannot stall the renderer.
            let steps = ((2.0 * span).ceil() as usize).clamp(1, 1 << 16);
            for k in 0..=steps {
                let t = k as f64 / steps as f64;
                self.plot(r0 + t * (r1 - r0), c0 + t * (c1 - c0), color);
            }
        }
    }

    fn lanes(&mut self, scene: &SceneFile, boundary: Rgb, centerline: Rgb, crossing: Rgb) {
        for seg in &scene.graph.segments {
            match seg.kind {
                SegmentKind::Lane => {
                    self.polyline(seg.left_boundary(), boundary);
                    self.polyline(seg.right_boundary(), boundary);
                    self.polyline(seg.centerline(), centerline);
                }
                SegmentKind::PedestrianCrossing => {
                    self.polyline(seg.left_boundary(), crossing);
                    self.polyline(seg.right_boundary(), crossing);
                }
            }
        }
    }
}

/// Renders the SD map and lanes of `gt`, then `pred`'s lanes on top. The
/// image covers `gt.extent`.
pub fn render(gt: &SceneFile, pred: Option<&SceneFile>, cfg: &RenderConfig) -> CliResult<Image> {
    let mut p = Painter::new(gt.extent, cfg.resolution)?;
    for category in SdCategory::ALL {
        let color = match category {
            SdCategory::Road => SD_ROAD,
            SdCategory::Sidewalk => SD_SIDEWALK,
            SdCategory::Crosswalk => SD_CROSSWALK,
        };
        for e in gt.sd_map.elements.iter().filter(|e| e.category == category) {
            p.polyline(&e.polyline, color);
        }
    }
    p.lanes(gt, GT_BOUNDARY, GT_CENTERLINE, GT_CROSSING);
    if let Some(pred) = pred {
        p.lanes(pred, PRED_BOUNDARY, PRED_CENTERLINE, PRED_CROSSING);
    }
    Ok(p.img)
}
