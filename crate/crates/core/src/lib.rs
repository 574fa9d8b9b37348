pub mod error;
pub mod scalar;
pub mod seeding;
pub mod seqmodel;
pub mod tensor;
pub mod dataio;
pub mod selection;
pub mod aggregation;
pub mod metrics;
pub mod personalization;
pub mod fedcore;

pub use scalar::Scalar;

pub type Model = seqmodel::Params<f64>;
pub type ModelF32 = seqmodel::Params<f32>;
pub type Embedding = tensor::Matrix<f64>;
pub type EmbeddingF32 = tensor::Matrix<f32>;
