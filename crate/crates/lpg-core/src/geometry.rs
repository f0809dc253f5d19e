//! Axis-aligned box arithmetic: IOU, containment classification, center
//! scaling, and the bisection searches for the scale factors at which a
//! box pair just touches.

use core::fmt;

/// An axis-aligned rectangle in pixel coordinates with strictly positive
/// area. Degenerate boxes are rejected at construction so downstream code
/// never has to re-validate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    /// Coordinates were non-finite or did not enclose positive area.
    InvalidBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    /// Scale factor was zero, negative, or non-finite.
    InvalidScale(f64),
    /// A scale-search config field violated its bounds.
    InvalidSearchConfig(&'static str),
    /// A scale search was called on a pair in the wrong relative position.
    PositionPrecondition {
        expected: RelativePosition,
        actual: RelativePosition,
    },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::InvalidBox {
                x_min,
                y_min,
                x_max,
                y_max,
            } => write!(
                f,
                "invalid box ({x_min}, {y_min}, {x_max}, {y_max}): coordinates must be finite with x_min < x_max and y_min < y_max"
            ),
            GeometryError::InvalidScale(s) => {
                write!(f, "scale factor {s} must be positive and finite")
            }
            GeometryError::InvalidSearchConfig(msg) => write!(f, "invalid scale search: {msg}"),
            GeometryError::PositionPrecondition { expected, actual } => write!(
                f,
                "scale search requires a {expected:?} pair, got {actual:?}"
            ),
        }
    }
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let all_finite =
            x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite();
        if !all_finite || x_min >= x_max || y_min >= y_max {
            return Err(GeometryError::InvalidBox {
                x_min,
                y_min,
                x_max,
                y_max,
            });
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    /// Area of the overlap region, zero when the interiors are disjoint.
    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = f64::min(self.x_max, other.x_max) - f64::max(self.x_min, other.x_min);
        let h = f64::min(self.y_max, other.y_max) - f64::max(self.y_min, other.y_min);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    /// Intersection over union, in [0, 1].
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter == 0.0 {
            return 0.0;
        }
        inter / (self.area() + other.area() - inter)
    }

    /// Inclusive containment: edges touching still count. Identical boxes
    /// contain each other.
    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    /// Multiplies width and height by `factor` about the box center. The
    /// center is unchanged and the aspect ratio is preserved exactly.
    pub fn scale(&self, factor: f64) -> Result<BoundingBox, GeometryError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(GeometryError::InvalidScale(factor));
        }
        let (cx, cy) = self.center();
        let hw = 0.5 * self.width() * factor;
        let hh = 0.5 * self.height() * factor;
        BoundingBox::new(cx - hw, cy - hh, cx + hw, cy + hh)
    }
}

/// The four relative positions of an ordered box pair. Exactly one value
/// holds for any pair; identical boxes report `AContainsB` by
/// subject-priority tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelativePosition {
    Disjoint,
    IntersectNoContain,
    AContainsB,
    BContainsA,
}

pub fn classify_pair(a: &BoundingBox, b: &BoundingBox) -> RelativePosition {
    if a.contains(b) {
        RelativePosition::AContainsB
    } else if b.contains(a) {
        RelativePosition::BContainsA
    } else if a.iou(b) == 0.0 {
        RelativePosition::Disjoint
    } else {
        RelativePosition::IntersectNoContain
    }
}

/// Bisection bounds and stopping parameters for one scale search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSearchConfig {
    pub scale_min: f64,
    pub scale_max: f64,
    pub iter_num: u32,
    /// IOU bound the returned factor must stay under: the scaled pair
    /// "just intersects" with IOU in (0, iter_threshold].
    pub iter_threshold: f64,
}

impl ScaleSearchConfig {
    pub fn new(
        scale_min: f64,
        scale_max: f64,
        iter_num: u32,
        iter_threshold: f64,
    ) -> Result<Self, GeometryError> {
        if !(scale_min.is_finite() && scale_max.is_finite() && scale_min > 0.0) {
            return Err(GeometryError::InvalidSearchConfig(
                "bounds must be finite with 0 < scale_min",
            ));
        }
        if scale_min >= scale_max {
            return Err(GeometryError::InvalidSearchConfig(
                "scale_min must be below scale_max",
            ));
        }
        if iter_num == 0 {
            return Err(GeometryError::InvalidSearchConfig("iter_num must be >= 1"));
        }
        if !(iter_threshold > 0.0 && iter_threshold < 1.0) {
            return Err(GeometryError::InvalidSearchConfig(
                "iter_threshold must lie in (0, 1)",
            ));
        }
        Ok(Self {
            scale_min,
            scale_max,
            iter_num,
            iter_threshold,
        })
    }

    /// Zoom-in search over [1, 8]; factor 8 bounds long-range interactions
    /// at scene scale.
    pub fn zoom_in_default() -> Self {
        Self {
            scale_min: 1.0,
            scale_max: 8.0,
            iter_num: 30,
            iter_threshold: 1e-3,
        }
    }

    /// Zoom-out search over [0.01, 1].
    pub fn zoom_out_default() -> Self {
        Self {
            scale_min: 0.01,
            scale_max: 1.0,
            iter_num: 30,
            iter_threshold: 1e-3,
        }
    }

    /// Validates the bounds without consuming the config.
    pub fn validate(&self) -> Result<(), GeometryError> {
        Self::new(
            self.scale_min,
            self.scale_max,
            self.iter_num,
            self.iter_threshold,
        )
        .map(|_| ())
    }

    /// Absolute width of the final bisection bracket.
    pub fn resolution(&self) -> f64 {
        (self.scale_max - self.scale_min) / libm::exp2(self.iter_num as f64)
    }
}

/// The zoom-in and zoom-out searches used together when building priors
/// or filtering candidates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoomConfig {
    pub zoom_in: ScaleSearchConfig,
    pub zoom_out: ScaleSearchConfig,
}

impl Default for ZoomConfig {
    fn default() -> Self {
        Self {
            zoom_in: ScaleSearchConfig::zoom_in_default(),
            zoom_out: ScaleSearchConfig::zoom_out_default(),
        }
    }
}

impl ZoomConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        self.zoom_in.validate()?;
        self.zoom_out.validate()
    }
}

fn scaled_iou(a: &BoundingBox, b: &BoundingBox, factor: f64) -> f64 {
    // factor comes from a validated search interval, so scale cannot fail
    let sa = a.scale(factor).expect("validated factor");
    let sb = b.scale(factor).expect("validated factor");
    sa.iou(&sb)
}

/// Bisects for the smallest factor at which both boxes, scaled about
/// their own centers by that factor, intersect. IOU is monotone
/// non-decreasing in the factor, so the bracket keeps a disjoint lower
/// end and an intersecting upper end and the upper end is returned.
/// Callers guarantee IOU(scale_max) > 0 and IOU(scale_min) = 0.
fn bisect_touch(a: &BoundingBox, b: &BoundingBox, cfg: &ScaleSearchConfig) -> f64 {
    let mut lo = cfg.scale_min;
    let mut hi = cfg.scale_max;
    for _ in 0..cfg.iter_num {
        let mid = 0.5 * (lo + hi);
        if scaled_iou(a, b, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Smallest common zoom-in factor at which two disjoint boxes touch.
///
/// Returns `None` when the pair stays disjoint even at `scale_max` (too
/// far apart to ever be related under this search interval). The result
/// is within one bisection bracket of the true touching factor, so the
/// scaled pair has IOU in (0, iter_threshold] for any practical
/// iteration budget.
pub fn max_zoom_in_factor(
    a: &BoundingBox,
    b: &BoundingBox,
    cfg: &ScaleSearchConfig,
) -> Result<Option<f64>, GeometryError> {
    cfg.validate()?;
    let position = classify_pair(a, b);
    if position != RelativePosition::Disjoint {
        return Err(GeometryError::PositionPrecondition {
            expected: RelativePosition::Disjoint,
            actual: position,
        });
    }
    if scaled_iou(a, b, cfg.scale_max) == 0.0 {
        return Ok(None);
    }
    if scaled_iou(a, b, cfg.scale_min) > 0.0 {
        // Already touching at the lower bound; the bound is the answer.
        return Ok(Some(cfg.scale_min));
    }
    Ok(Some(bisect_touch(a, b, cfg)))
}

/// Largest common shrink factor at which two overlapping (non-nested)
/// boxes just separate, i.e. the smallest factor at which they still
/// touch. When the pair still overlaps at `scale_min` (e.g. concentric
/// boxes, which never separate), `scale_min` itself is returned.
pub fn min_zoom_out_factor(
    a: &BoundingBox,
    b: &BoundingBox,
    cfg: &ScaleSearchConfig,
) -> Result<f64, GeometryError> {
    cfg.validate()?;
    let position = classify_pair(a, b);
    if position != RelativePosition::IntersectNoContain {
        return Err(GeometryError::PositionPrecondition {
            expected: RelativePosition::IntersectNoContain,
            actual: position,
        });
    }
    if scaled_iou(a, b, cfg.scale_min) > 0.0 {
        return Ok(cfg.scale_min);
    }
    Ok(bisect_touch(a, b, cfg))
}
