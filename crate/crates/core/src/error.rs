use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least {min}, got {got}")]
    Dimension { min: usize, got: usize },
    #[error("side length {0} is not a positive finite number")]
    Side(f64),
    #[error("intensity {0} must be finite and non-negative")]
    Intensity(f64),
    #[error("scale factor {0} must be positive")]
    Scale(f64),
    #[error("appetite {0} must be finite and non-negative")]
    Appetite(f64),
    #[error("cell size {h} does not divide side length {side}")]
    CellSize { h: f64, side: f64 },
    #[error("point lies outside the region")]
    OutsideRegion,
    #[error("allocation, grid and centers refer to different regions")]
    RegionMismatch,
    #[error("torus sides must be whole numbers to tile with unit cubes, got {0}")]
    FractionalTorus(f64),
    #[error("radius field contains an infinite entry; window too small")]
    InfiniteRadius,
    #[error("neighbourhood of the level-{m} cube is not contained in the window")]
    WindowTooSmall { m: f64 },
    #[error("crossings are undefined on a torus")]
    TorusCrossing,
    #[error("axis {axis} out of range for dimension {dim}")]
    Axis { axis: usize, dim: usize },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
}
