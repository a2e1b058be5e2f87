use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mask selects no pixels (or fewer than required)")]
    EmptyMask,
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("input is empty")]
    EmptyInput,
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("face size {0} is below the minimum of 64")]
    SizeTooSmall(u32),
    #[error("light direction is not unit length (norm {0})")]
    NonUnitDirection(f64),
    #[error("pattern list is empty")]
    EmptyPatternList,
    #[error("need at least {needed} face groups to split, found {found}")]
    TooFewGroups { needed: usize, found: usize },
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("image has no foreground after background removal")]
    NoForeground,
    #[error("no foreground pixel falls inside the product color range")]
    NoInRangePixels,
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("duplicate shade {product_id}/{shade_id}")]
    DuplicateShade { product_id: String, shade_id: String },
    #[error("group {0} has no estimates")]
    EmptyGroup(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
