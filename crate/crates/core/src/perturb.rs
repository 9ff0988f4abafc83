//! Seeded image perturbations: sensor failures, lighting, fog, impulse
//! noise and mirror flips.
//!
//! All transforms take and return normalized `[0, 1]` images of unchanged
//! shape; quantization only happens when an image is written to disk.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{ensure, Error, Result};
use crate::losses::BBox;
use crate::rng::Rng;
use crate::vital::{Modality, MultimodalImage};

/// Side of the box filter that smooths the fog field.
pub const FOG_BLUR: usize = 5;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum PerturbationKind {
    DisableModalities { which: Vec<Modality> },
    /// Scales intensities by `1 + delta`. Only the visual plane unless
    /// `all_channels` is set.
    Brightness { delta: f64, all_channels: bool },
    Fog { low: f64, high: f64 },
    SaltPepper { probability: f64 },
    FlipH,
    FlipV,
}

/// A transform plus the seed driving its randomness (ignored by the
/// deterministic kinds).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Perturbation {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: PerturbationKind,
    pub seed: u64,
}

impl PerturbationKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PerturbationKind::Brightness { delta, .. } => {
                ensure!((-1.0..=1.0).contains(&delta), "brightness delta {delta} outside [-1, 1]")
            }
            PerturbationKind::Fog { low, high } => {
                ensure!(0.0 <= low && low <= high && high <= 1.0, "fog range [{low}, {high}] is not within [0, 1]")
            }
            PerturbationKind::SaltPepper { probability } => ensure!(
                (0.0..=1.0).contains(&probability),
                "salt-and-pepper probability {probability} outside [0, 1]"
            ),
            _ => {}
        }
        Ok(())
    }
}

impl Perturbation {
    pub fn new(kind: PerturbationKind, seed: u64) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, seed })
    }

    /// Applies the transform; flips also remap `bbox`, given in normalized
    /// image coordinates.
    pub fn apply(&self, img: &MultimodalImage, bbox: Option<BBox>) -> Result<(MultimodalImage, Option<BBox>)> {
        self.kind.validate()?;
        Ok(match &self.kind {
            PerturbationKind::DisableModalities { which } => (disable_modalities(img, which), bbox),
            PerturbationKind::Brightness { delta, all_channels } => (brightness(img, *delta, *all_channels)?, bbox),
            PerturbationKind::Fog { low, high } => (fog(img, *low, *high, self.seed)?, bbox),
            PerturbationKind::SaltPepper { probability } => (salt_pepper(img, *probability, self.seed)?, bbox),
            PerturbationKind::FlipH => (flip_h(img), bbox.map(|b| flip_bbox_h(&b))),
            PerturbationKind::FlipV => (flip_v(img), bbox.map(|b| flip_bbox_v(&b))),
        })
    }
}

/// Compact text form used on the command line:
/// `disable=lidar,thermal`, `brightness=-0.5`, `brightness-all=0.1`,
/// `fog=0.1,0.5`, `salt-pepper=0.002`, `flip-h`, `flip-v`.
impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, args): (&str, Vec<&str>) = match s.split_once('=') {
            Some((h, rest)) => (h.trim(), rest.split(',').map(str::trim).collect()),
            None => (s.trim(), Vec::new()),
        };
        let num = |i: usize| -> Result<f64> {
            let raw = args
                .get(i)
                .ok_or_else(|| Error::contract(format!("perturbation '{s}' is missing an argument")))?;
            raw.parse()
                .map_err(|_| Error::contract(format!("'{raw}' is not a number in perturbation '{s}'")))
        };
        let expect_args = |n: usize| -> Result<()> {
            ensure!(args.len() == n, "perturbation '{s}' takes {n} argument(s)");
            Ok(())
        };
        let kind = match head {
            "disable" => {
                let mut which = Vec::new();
                for name in args.iter().copied().filter(|n| !n.is_empty()) {
                    let m = Modality::parse(name)
                        .ok_or_else(|| Error::contract(format!("unknown modality '{name}'")))?;
                    which.push(m);
                }
                PerturbationKind::DisableModalities { which }
            }
            "brightness" | "brightness-all" => {
                expect_args(1)?;
                PerturbationKind::Brightness {
                    delta: num(0)?,
                    all_channels: head == "brightness-all",
                }
            }
            "fog" => {
                expect_args(2)?;
                PerturbationKind::Fog { low: num(0)?, high: num(1)? }
            }
            "salt-pepper" => {
                expect_args(1)?;
                PerturbationKind::SaltPepper { probability: num(0)? }
            }
            "flip-h" => {
                expect_args(0)?;
                PerturbationKind::FlipH
            }
            "flip-v" => {
                expect_args(0)?;
                PerturbationKind::FlipV
            }
            _ => return Err(Error::contract(format!("unknown perturbation '{head}'"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbationKind::DisableModalities { which } => {
                let names: Vec<&str> = which.iter().map(|m| m.name()).collect();
                write!(f, "disable={}", names.join(","))
            }
            PerturbationKind::Brightness { delta, all_channels: false } => write!(f, "brightness={delta}"),
            PerturbationKind::Brightness { delta, all_channels: true } => write!(f, "brightness-all={delta}"),
            PerturbationKind::Fog { low, high } => write!(f, "fog={low},{high}"),
            PerturbationKind::SaltPepper { probability } => write!(f, "salt-pepper={probability}"),
            PerturbationKind::FlipH => f.write_str("flip-h"),
            PerturbationKind::FlipV => f.write_str("flip-v"),
        }
    }
}

/// Zeroes the planes of the listed sensors.
pub fn disable_modalities(img: &MultimodalImage, which: &[Modality]) -> MultimodalImage {
    let mut out = img.clone();
    for m in which {
        out.plane_mut(*m).fill(0.0);
    }
    out
}

/// Scales the visual plane (or every plane) by `1 + delta`, clamped to
/// `[0, 1]`.
pub fn brightness(img: &MultimodalImage, delta: f64, all_channels: bool) -> Result<MultimodalImage> {
    ensure!((-1.0..=1.0).contains(&delta), "brightness delta {delta} outside [-1, 1]");
    let mut out = img.clone();
    let planes: &[Modality] = if all_channels { &Modality::ALL } else { &[Modality::Visual] };
    let gain = 1.0 + delta;
    for m in planes {
        for v in out.plane_mut(*m) {
            *v = (*v as f64 * gain).clamp(0.0, 1.0) as f32;
        }
    }
    Ok(out)
}

/// Synthetic fog: a per-pixel intensity drawn uniformly from
/// `[low, high]`, smoothed by a 5×5 box filter (truncated at the borders),
/// then blended towards white in every plane.
pub fn fog(img: &MultimodalImage, low: f64, high: f64, seed: u64) -> Result<MultimodalImage> {
    ensure!(0.0 <= low && low <= high && high <= 1.0, "fog range [{low}, {high}] is not within [0, 1]");
    let s = img.size();
    let mut rng = Rng::new(seed);
    let raw: Vec<f64> = (0..s * s).map(|_| rng.uniform_range(low, high)).collect();
    let field = box_blur(&raw, s, FOG_BLUR / 2);
    let mut out = img.clone();
    for m in Modality::ALL {
        for (v, f) in out.plane_mut(m).iter_mut().zip(&field) {
            *v = ((1.0 - f) * *v as f64 + f).clamp(0.0, 1.0) as f32;
        }
    }
    Ok(out)
}

fn box_blur(field: &[f64], side: usize, radius: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(field.len());
    for y in 0..side {
        let (y0, y1) = (y.saturating_sub(radius), (y + radius).min(side - 1));
        for x in 0..side {
            let (x0, x1) = (x.saturating_sub(radius), (x + radius).min(side - 1));
            let mut sum = 0.0;
            for yy in y0..=y1 {
                sum += field[yy * side + x0..=yy * side + x1].iter().sum::<f64>();
            }
            out.push(sum / ((y1 - y0 + 1) * (x1 - x0 + 1)) as f64);
        }
    }
    out
}

/// Impulse noise: every value of every plane is independently replaced,
/// with probability `probability`, by 0 or 1 with equal odds.
pub fn salt_pepper(img: &MultimodalImage, probability: f64, seed: u64) -> Result<MultimodalImage> {
    ensure!(
        (0.0..=1.0).contains(&probability),
        "salt-and-pepper probability {probability} outside [0, 1]"
    );
    let mut rng = Rng::new(seed);
    let mut out = img.clone();
    for m in Modality::ALL {
        for v in out.plane_mut(m) {
            if rng.bernoulli(probability) {
                *v = if rng.bernoulli(0.5) { 1.0 } else { 0.0 };
            }
        }
    }
    Ok(out)
}

/// Mirrors every plane left-to-right.
pub fn flip_h(img: &MultimodalImage) -> MultimodalImage {
    let s = img.size();
    let mut out = img.clone();
    for m in Modality::ALL {
        out.plane_mut(m).chunks_exact_mut(s).for_each(|row| row.reverse());
    }
    out
}

/// Mirrors every plane top-to-bottom.
pub fn flip_v(img: &MultimodalImage) -> MultimodalImage {
    let s = img.size();
    let mut out = img.clone();
    for m in Modality::ALL {
        let src = img.plane(m);
        let dst = out.plane_mut(m);
        for y in 0..s {
            dst[y * s..(y + 1) * s].copy_from_slice(&src[(s - 1 - y) * s..(s - y) * s]);
        }
    }
    out
}

/// Mirror of a normalized box about `x = 0.5`. Exact (and thus an
/// involution) whenever the coordinates are multiples of 2⁻⁵³, which covers
/// every single-precision value in `[2⁻³⁰, 1]` as well as zero.
pub fn flip_bbox_h(b: &BBox) -> BBox {
    BBox {
        x_min: 1.0 - b.x_max,
        y_min: b.y_min,
        x_max: 1.0 - b.x_min,
        y_max: b.y_max,
    }
}

/// Mirror of a normalized box about `y = 0.5`; see [`flip_bbox_h`].
pub fn flip_bbox_v(b: &BBox) -> BBox {
    BBox {
        x_min: b.x_min,
        y_min: 1.0 - b.y_max,
        x_max: b.x_max,
        y_max: 1.0 - b.y_min,
    }
}

/// Describes a perturbation list for manifests, e.g. `fog=0.1,0.5; flip-h`.
pub fn describe(kinds: &[PerturbationKind]) -> String {
    let parts: Vec<String> = kinds.iter().map(|k| format!("{k}")).collect();
    parts.join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(size: usize) -> MultimodalImage {
        MultimodalImage::from_fn(size, |m, y, x| ((m.index() * 31 + y * 7 + x * 3) % 97) as f32 / 96.0).unwrap()
    }

    fn flat(size: usize, v: f32) -> MultimodalImage {
        MultimodalImage::from_fn(size, |_, _, _| v).unwrap()
    }

    fn plane_sum(img: &MultimodalImage, m: Modality) -> f64 {
        img.plane(m).iter().map(|v| *v as f64).sum()
    }

    #[test]
    fn disable_cases() {
        let img = gradient(16);
        assert_eq!(disable_modalities(&img, &[]), img);
        assert!(disable_modalities(&img, &Modality::ALL).tensor().data().iter().all(|v| *v == 0.0));
        let no_lidar = disable_modalities(&img, &[Modality::Lidar]);
        assert_eq!(plane_sum(&no_lidar, Modality::Lidar), 0.0);
        assert_eq!(plane_sum(&no_lidar, Modality::Visual), plane_sum(&img, Modality::Visual));
        assert_eq!(plane_sum(&no_lidar, Modality::Thermal), plane_sum(&img, Modality::Thermal));
        assert_eq!(disable_modalities(&no_lidar, &[Modality::Lidar]), no_lidar);
    }

    #[test]
    fn brightness_cases() {
        let img = gradient(16);
        assert_eq!(brightness(&img, 0.0, false).unwrap(), img);
        let dark = brightness(&img, -1.0, false).unwrap();
        assert!(dark.plane(Modality::Visual).iter().all(|v| *v == 0.0));
        assert_eq!(dark.plane(Modality::Thermal), img.plane(Modality::Thermal));
        let gray = brightness(&flat(8, 0.4), 0.5, false).unwrap();
        assert!(gray.plane(Modality::Visual).iter().all(|v| *v == 0.6));
        assert!(gray.plane(Modality::Lidar).iter().all(|v| *v == 0.4));
        let all = brightness(&flat(8, 0.8), 0.9, true).unwrap();
        assert!(all.tensor().data().iter().all(|v| *v == 1.0));
        assert!(brightness(&img, 1.5, false).is_err());
    }

    #[test]
    fn fog_cases() {
        let img = gradient(16);
        assert_eq!(fog(&img, 0.0, 0.0, 3).unwrap(), img);
        assert!(fog(&img, 1.0, 1.0, 3).unwrap().tensor().data().iter().all(|v| *v == 1.0));
        let dark = flat(32, 0.1);
        let a = fog(&dark, 0.1, 0.5, 9).unwrap();
        let mean = |i: &MultimodalImage| i.tensor().data().iter().map(|v| *v as f64).sum::<f64>();
        assert!(mean(&a) > mean(&dark));
        assert_eq!(a, fog(&dark, 0.1, 0.5, 9).unwrap());
        assert_ne!(a, fog(&dark, 0.1, 0.5, 10).unwrap());
        assert!(a.in_unit_range());
        assert!(fog(&img, 0.6, 0.5, 1).is_err());
    }

    #[test]
    fn box_blur_is_a_local_average() {
        let mut field = alloc::vec![0.0; 49];
        field[24] = 25.0;
        let out = box_blur(&field, 7, 2);
        assert_eq!(out[24], 1.0);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[2 * 7 + 2], 1.0);
        // Near the border the window is truncated to 4×4 but still holds
        // the spike.
        assert_eq!(out[5 * 7 + 5], 25.0 / 16.0);
        assert_eq!(out[6 * 7 + 6], 0.0);
    }

    #[test]
    fn salt_pepper_cases() {
        let img = gradient(16);
        assert_eq!(salt_pepper(&img, 0.0, 1).unwrap(), img);
        let all = salt_pepper(&img, 1.0, 1).unwrap();
        assert!(all.tensor().data().iter().all(|v| *v == 0.0 || *v == 1.0));
        assert_eq!(salt_pepper(&img, 0.3, 4).unwrap(), salt_pepper(&img, 0.3, 4).unwrap());
    }

    #[test]
    fn flips_are_involutions() {
        let img = gradient(12);
        assert_eq!(flip_h(&flip_h(&img)), img);
        assert_eq!(flip_v(&flip_v(&img)), img);
        assert_ne!(flip_h(&img), img);
        let h = flip_h(&img);
        assert_eq!(h.plane(Modality::Thermal)[0], img.plane(Modality::Thermal)[11]);
        let v = flip_v(&img);
        assert_eq!(v.plane(Modality::Lidar)[0], img.plane(Modality::Lidar)[11 * 12]);
    }

    #[test]
    fn bbox_mirror_arithmetic() {
        let b = BBox::new(0.1, 0.2, 0.3, 0.4).unwrap();
        assert_eq!(flip_bbox_h(&b).corners(), [0.7, 0.2, 0.9, 0.4]);
        assert_eq!(flip_bbox_v(&b).corners(), [0.1, 0.6, 0.3, 0.8]);
        let f32_box = BBox::new(0.1f32 as f64, 0.2f32 as f64, 0.3f32 as f64, 0.4f32 as f64).unwrap();
        assert_eq!(flip_bbox_h(&flip_bbox_h(&f32_box)), f32_box);
        assert_eq!(flip_bbox_v(&flip_bbox_v(&f32_box)), f32_box);
    }

    #[test]
    fn apply_moves_box_with_image() {
        let img = gradient(8);
        let b = BBox::new(0.125, 0.25, 0.5, 0.75).unwrap();
        let p = Perturbation::new(PerturbationKind::FlipH, 0).unwrap();
        let (out, nb) = p.apply(&img, Some(b)).unwrap();
        assert_eq!(out, flip_h(&img));
        assert_eq!(nb.unwrap().corners(), [0.5, 0.25, 0.875, 0.75]);
    }

    #[test]
    fn text_round_trip() {
        for s in [
            "disable=lidar,thermal",
            "brightness=-0.5",
            "brightness-all=0.1",
            "fog=0.1,0.5",
            "salt-pepper=0.002",
            "flip-h",
            "flip-v",
            "disable=",
        ] {
            let k: PerturbationKind = s.parse().unwrap();
            assert_eq!(alloc::format!("{k}"), s);
        }
        for bad in ["fog=0.5", "brightness=2", "disable=radar", "blur=3", "flip-h=1", "brightness"] {
            assert!(bad.parse::<PerturbationKind>().is_err(), "{bad}");
        }
    }
}
