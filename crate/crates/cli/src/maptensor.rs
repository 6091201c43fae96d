//! Multi-channel float rasters on disk.
//!
//! Layout: magic `EKMP`, then `version`, `height`, `width`, `channels` as
//! little-endian u32, then `height * width * channels` little-endian f32
//! values, channel-major and row-major within a channel.

use std::path::Path;

use kernelexpand::Raster;

use crate::error::{CliError, Result};
use crate::fsutil::{read_file, write_atomic};

pub const MAGIC: &[u8; 4] = b"EKMP";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("header truncated at {0} bytes")]
    ShortHeader(usize),
    #[error("payload is {actual} bytes, header implies {expected}")]
    PayloadSize { expected: u64, actual: u64 },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("channel {index} out of range for {channels} channels")]
    NoChannel { index: usize, channels: usize },
    #[error("channel shapes differ")]
    ShapeMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapTensor {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    data: Vec<f32>,
}

impl MapTensor {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> std::result::Result<Self, FormatError> {
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(FormatError::PayloadSize {
                expected: expected as u64 * 4,
                actual: data.len() as u64 * 4,
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(FormatError::NonFinite(i));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Stacks same-shaped rasters as channels, narrowing to f32.
    pub fn from_channels(channels: &[Raster<f64>]) -> std::result::Result<Self, FormatError> {
        let (h, w) = channels.first().map(|c| c.shape()).unwrap_or((0, 0));
        if channels.iter().any(|c| c.shape() != (h, w)) {
            return Err(FormatError::ShapeMismatch);
        }
        let data = channels
            .iter()
            .flat_map(|c| c.data().iter().map(|&v| v as f32))
            .collect();
        Self::new(h, w, channels.len(), data)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, index: usize) -> std::result::Result<Raster<f64>, FormatError> {
        if index >= self.channels {
            return Err(FormatError::NoChannel {
                index,
                channels: self.channels,
            });
        }
        let n = self.height * self.width;
        let vals = self.data[index * n..(index + 1) * n]
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        Ok(Raster::from_vec(self.height, self.width, vals).expect("channel length matches shape"))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        for v in [
            VERSION,
            self.height as u32,
            self.width as u32,
            self.channels as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, FormatError> {
        if bytes.len() < HEADER_LEN {
            if bytes.len() >= 4 && &bytes[..4] != MAGIC {
                return Err(FormatError::BadMagic(bytes[..4].try_into().unwrap()));
            }
            return Err(FormatError::ShortHeader(bytes.len()));
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if &magic != MAGIC {
            return Err(FormatError::BadMagic(magic));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let version = word(0);
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let (h, w, c) = (word(1) as u64, word(2) as u64, word(3) as u64);
        let expected = h * w * c * 4;
        let actual = (bytes.len() - HEADER_LEN) as u64;
        if expected != actual {
            return Err(FormatError::PayloadSize { expected, actual });
        }
        let data = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Self::new(h as usize, w as usize, c as usize, data)
    }
}

pub fn read_map(path: &Path) -> Result<MapTensor> {
    let bytes = read_file(path)?;
    MapTensor::decode(&bytes).map_err(|source| CliError::Format {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_map(path: &Path, tensor: &MapTensor) -> Result<()> {
    write_atomic(path, &tensor.encode())
}
