use crate::error::{ensure, Result};
use crate::nn::Tensor3;

/// Sensor behind an image plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Modality {
    Visual,
    Thermal,
    Lidar,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Visual, Modality::Thermal, Modality::Lidar];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Visual => "visual",
            Modality::Thermal => "thermal",
            Modality::Lidar => "lidar",
        }
    }

    pub fn parse(s: &str) -> Option<Modality> {
        match s {
            "visual" | "vis" => Some(Modality::Visual),
            "thermal" | "thm" => Some(Modality::Thermal),
            "lidar" | "lid" => Some(Modality::Lidar),
            _ => None,
        }
    }
}

/// Three co-registered grayscale planes in `[0, 1]`, one per modality. A
/// disabled sensor is an all-zero plane.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalImage {
    planes: Tensor3,
}

impl MultimodalImage {
    pub fn zeros(size: usize) -> Self {
        Self {
            planes: Tensor3::zeros(3, size, size),
        }
    }

    /// Builds an image from a `3×S×S` tensor ordered visual, thermal, LiDAR.
    pub fn from_tensor(planes: Tensor3) -> Result<Self> {
        let (c, h, w) = planes.shape();
        ensure!(c == 3 && h == w && h > 0, "multimodal image must be 3xSxS, got {c}x{h}x{w}");
        ensure!(
            planes.data().iter().all(|v| (0.0..=1.0).contains(v)),
            "image values must lie in [0, 1]"
        );
        Ok(Self { planes })
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(Modality, usize, usize) -> f32) -> Result<Self> {
        Self::from_tensor(Tensor3::from_fn(3, size, size, |c, y, x| f(Modality::ALL[c], y, x)))
    }

    pub fn size(&self) -> usize {
        self.planes.height()
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.planes
    }

    pub fn plane(&self, m: Modality) -> &[f32] {
        self.planes.plane(m.index())
    }

    /// Mutable plane access; callers keep values within `[0, 1]`.
    pub fn plane_mut(&mut self, m: Modality) -> &mut [f32] {
        self.planes.plane_mut(m.index())
    }

    /// The plane as a `1×S×S` tensor.
    pub fn plane_tensor(&self, m: Modality) -> Tensor3 {
        let s = self.size();
        Tensor3::from_vec(1, s, s, self.plane(m).to_vec()).expect("plane shape")
    }

    pub fn in_unit_range(&self) -> bool {
        self.planes.data().iter().all(|v| (0.0..=1.0).contains(v))
    }
}
