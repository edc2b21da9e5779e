//! SD map encodings.
//!
//! Two complementary views of the same local SD map:
//!
//! - [`rasterize`] draws the polylines into a 6-channel BEV canvas
//!   (road, blurred road, sidewalk, crosswalk, direction cosine, direction sine).
//! - [`tokenize`] turns each polyline into one fixed-size vector: sinusoidal
//!   embeddings of its resampled, normalized points followed by a one-hot
//!   category.
//!
//! The canvas is meant for the perception extent, while tokens are
//! normalized over the (larger) SD map range.

mod canvas;
mod tokens;

pub use canvas::{direction_channels, rasterize, CanvasConfig, CanvasStack, Channel, CHANNELS};
pub use tokens::{sinusoidal_embedding, tokenize, SdToken, TokenConfig};

use serde::{Deserialize, Serialize};

use crate::geometry::{Extent, Polyline, RigidTransform};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdCategory {
    Road,
    Sidewalk,
    Crosswalk,
}

impl SdCategory {
    pub const ALL: [SdCategory; 3] = [
        SdCategory::Road,
        SdCategory::Sidewalk,
        SdCategory::Crosswalk,
    ];

    /// Position of this category in the one-hot suffix.
    pub fn index(self) -> usize {
        match self {
            SdCategory::Road => 0,
            SdCategory::Sidewalk => 1,
            SdCategory::Crosswalk => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdElement {
    pub category: SdCategory,
    pub polyline: Polyline,
}

impl SdElement {
    pub fn new(category: SdCategory, polyline: Polyline) -> Self {
        SdElement { category, polyline }
    }
}

/// SD polylines in the ego frame. Elements are never clipped here.
#[derive(Debug, Clone, PartialEq)]
pub struct SdMapLocal {
    pub elements: Vec<SdElement>,
    range: Extent,
}

impl Default for SdMapLocal {
    fn default() -> Self {
        SdMapLocal {
            elements: Vec::new(),
            range: Extent::SD_RANGE,
        }
    }
}

impl SdMapLocal {
    pub fn new(elements: Vec<SdElement>, range: Extent) -> Result<Self> {
        range.validate()?;
        Ok(SdMapLocal { elements, range })
    }

    pub fn range(&self) -> Extent {
        self.range
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Applies `t` to every element. The range is the ego window and is
    /// left untouched.
    pub fn transformed(&self, t: &RigidTransform) -> SdMapLocal {
        SdMapLocal {
            elements: self
                .elements
                .iter()
                .map(|e| SdElement::new(e.category, e.polyline.transformed(t)))
                .collect(),
            range: self.range,
        }
    }
}
