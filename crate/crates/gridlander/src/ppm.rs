//! Binary PPM (P6, maxval 255) storage for three-modality images.

use std::fs;
use std::path::Path;

use gridlander_core::vital::{Modality, MultimodalImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Modality stored in each of the R, G and B channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[Modality; 3]", into = "[Modality; 3]")]
pub struct ChannelMap([Modality; 3]);

impl Default for ChannelMap {
    fn default() -> Self {
        Self([Modality::Visual, Modality::Thermal, Modality::Lidar])
    }
}

impl ChannelMap {
    /// Fails unless every modality appears exactly once.
    pub fn new(rgb: [Modality; 3]) -> Result<Self> {
        for m in Modality::ALL {
            if !rgb.contains(&m) {
                return Err(Error::Config(format!(
                    "channel map {:?} does not contain {}",
                    rgb.map(Modality::name),
                    m.name()
                )));
            }
        }
        Ok(Self(rgb))
    }

    pub fn rgb(&self) -> [Modality; 3] {
        self.0
    }
}

impl TryFrom<[Modality; 3]> for ChannelMap {
    type Error = Error;

    fn try_from(rgb: [Modality; 3]) -> Result<Self> {
        Self::new(rgb)
    }
}

impl From<ChannelMap> for [Modality; 3] {
    fn from(m: ChannelMap) -> Self {
        m.0
    }
}

/// Byte for an intensity in `[0, 1]`, rounding halves up.
pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) as f64 * 255.0 + 0.5).floor() as u8
}

pub fn encode_ppm(img: &MultimodalImage, map: ChannelMap) -> Vec<u8> {
    let s = img.size();
    let header = format!("P6\n{s} {s}\n255\n");
    let mut out = Vec::with_capacity(header.len() + 3 * s * s);
    out.extend_from_slice(header.as_bytes());
    let planes = map.0.map(|m| img.plane(m));
    for i in 0..s * s {
        for p in &planes {
            out.push(quantize(p[i]));
        }
    }
    out
}

/// Parses a P6 image of exactly `size`×`size` pixels. `path` only labels
/// errors.
pub fn decode_ppm(bytes: &[u8], size: usize, map: ChannelMap, path: &Path) -> Result<MultimodalImage> {
    let mut pos = 0;
    let mut fields = [0usize; 3];
    let magic = next_token(bytes, &mut pos).ok_or_else(|| Error::format(path, "empty file"))?;
    if magic != b"P6" {
        return Err(Error::format(path, "not a binary PPM (P6) file"));
    }
    for (i, what) in ["width", "height", "maxval"].iter().enumerate() {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| Error::format(path, format!("missing {what}")))?;
        fields[i] = std::str::from_utf8(tok)
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::format(path, format!("bad {what}")))?;
    }
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(Error::format(path, format!("maxval {maxval} is not 255")));
    }
    if w != size || h != size {
        return Err(Error::format(path, format!("image is {w}x{h}, expected {size}x{size}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if bytes.get(pos).map_or(true, |b| !b.is_ascii_whitespace()) {
        return Err(Error::format(path, "missing raster"));
    }
    pos += 1;
    let raster = &bytes[pos..];
    if raster.len() != 3 * size * size {
        return Err(Error::format(
            path,
            format!("raster holds {} bytes, expected {}", raster.len(), 3 * size * size),
        ));
    }
    let mut img = MultimodalImage::zeros(size);
    for (c, m) in map.0.iter().enumerate() {
        let plane = img.plane_mut(*m);
        for (i, v) in plane.iter_mut().enumerate() {
            *v = raster[3 * i + c] as f32 / 255.0;
        }
    }
    Ok(img)
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        match bytes.get(*pos)? {
            b'#' => {
                while *bytes.get(*pos)? != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
        *pos += 1;
    }
    Some(&bytes[start..*pos])
}

pub fn write_ppm(path: &Path, img: &MultimodalImage, map: ChannelMap) -> Result<()> {
    fs::write(path, encode_ppm(img, map)).map_err(|e| Error::io(path, e))
}

pub fn read_ppm(path: &Path, size: usize, map: ChannelMap) -> Result<MultimodalImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes, size, map, path)
}
