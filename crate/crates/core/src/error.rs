use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("metric violation: {0}")]
    Metric(String),

    #[error(
        "triangle inequality fails at ({x}, {y}, {z}): d(x,z) = {dxz} exceeds d(x,y) + d(y,z) = {sum}"
    )]
    Triangle {
        x: String,
        y: String,
        z: String,
        dxz: f64,
        sum: f64,
    },

    #[error("nonpositive weight {weight} at point {id}")]
    NonpositiveWeight { id: String, weight: f64 },

    #[error("graph is disconnected: no path from {from} to {to}")]
    Disconnected { from: String, to: String },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("function does not belong to this space ({0})")]
    SpaceMismatch(&'static str),

    #[error("delta {0} outside (0, 1/2]")]
    DeltaOutOfRange(f64),

    #[error("need at least {need} points, have {have}")]
    TooFewPoints { need: usize, have: usize },

    #[error("level {level} outside [{min}, {max}]")]
    LevelOutOfRange { level: i32, min: i32, max: i32 },

    #[error("geometry check `{check}` failed at level {level}, cube {center}: {detail}")]
    GeometryCheck {
        check: &'static str,
        level: i32,
        center: String,
        detail: String,
    },

    #[error("spline check `{check}` failed at level {level}, center {center}: {detail}")]
    SplineCheck {
        check: &'static str,
        level: i32,
        center: String,
        detail: String,
    },

    #[error("gram matrix at level {level} is rank-deficient; dependent columns {columns:?}")]
    RankDeficient { level: i32, columns: Vec<String> },

    #[error("smoothed-mode basis refused: {0} needs the exact nested ladder")]
    SmoothedRefused(&'static str),

    #[error("wavelet construction failed at level {level}: {detail}")]
    WaveletConstruction { level: i32, detail: String },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("missing coefficient for (level {level}, id {id})")]
    MissingCoefficient { level: i32, id: String },

    #[error("mean-zero input required, |integral| = {0:.3e}")]
    NotMeanZero(f64),

    #[error("annulus index i = {i} exceeds m_k = {mk} at k = {k}")]
    AnnulusIndex { k: u32, i: usize, mk: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
