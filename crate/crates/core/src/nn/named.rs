use alloc::string::String;
use alloc::vec::Vec;

/// A flat parameter tensor with a dotted name, as stored in checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl NamedTensor {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Role of a parameter tensor, used to pick its initializer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    ConvWeight { fan_in: usize },
    DenseWeight { fan_in: usize },
    Embedding,
    Bias,
    NormGain,
    NormShift,
    RunningMean,
    RunningVar,
}
