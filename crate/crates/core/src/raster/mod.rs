//! Raster maps: RGB input images, k-means region classification, and the
//! labelled region grid the rest of the model runs on.

mod grid;
mod kmeans;
mod pnm;

use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};

pub use grid::{load_region_grid, save_region_grid, sidecar_path, MergeMap, RegionGrid};
pub use kmeans::{classify_regions, kmeans_colors, luminance, KMeansOutcome, MAX_ITERATIONS};

pub type Rgb = [u8; 3];

/// An 8-bit RGB image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbRaster {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl RgbRaster {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("raster must be non-empty".into()));
        }
        if width.checked_mul(height) != Some(pixels.len()) {
            return Err(Error::InvalidInput(format!(
                "raster {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, col: usize, row: usize) -> Rgb {
        self.pixels[row * self.width + col]
    }

    /// Decodes a P3 or P6 pixmap. Only a max value of 255 is accepted.
    pub fn from_ppm_bytes(bytes: &[u8]) -> Result<Self> {
        let img = pnm::decode(bytes)?;
        if img.kind != pnm::Kind::Rgb {
            return Err(Error::format("pixmap", "expected P3 or P6 magic"));
        }
        if img.maxval != 255 {
            return Err(Error::format(
                "pixmap",
                format!("unsupported max value {} (only 255)", img.maxval),
            ));
        }
        let pixels = img
            .samples
            .chunks_exact(3)
            .map(|c| [c[0] as u8, c[1] as u8, c[2] as u8])
            .collect();
        Self::new(img.width, img.height, pixels)
    }

    pub fn to_ppm_bytes(&self, ascii: bool) -> Vec<u8> {
        let img = pnm::Image {
            kind: pnm::Kind::Rgb,
            width: self.width,
            height: self.height,
            maxval: 255,
            samples: self
                .pixels
                .iter()
                .flat_map(|p| p.map(u16::from))
                .collect(),
        };
        let mut out = Vec::new();
        pnm::encode(&img, ascii, &mut out).expect("writing to a Vec cannot fail");
        out
    }
}

pub fn load_raster(path: &Path) -> Result<RgbRaster> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    RgbRaster::from_ppm_bytes(&bytes)
}

/// Writes a binary (P6) pixmap.
pub fn save_raster(raster: &RgbRaster, path: &Path) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&raster.to_ppm_bytes(false))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_pixel_ascii_map() {
        let text = b"P3\n2 2\n255\n255 0 0  0 255 0\n0 0 255  255 255 255\n";
        let r = RgbRaster::from_ppm_bytes(text).unwrap();
        assert_eq!(
            r.pixels(),
            &[[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 255]]
        );
        assert_eq!(r.pixel(1, 1), [255, 255, 255]);
    }

    #[test]
    fn single_black_pixel() {
        let r = RgbRaster::from_ppm_bytes(b"P6\n1 1\n255\n\0\0\0").unwrap();
        assert_eq!(r, RgbRaster::new(1, 1, vec![[0, 0, 0]]).unwrap());
    }

    #[test]
    fn rejects_other_max_values_and_graymaps() {
        assert!(RgbRaster::from_ppm_bytes(b"P3 1 1 15\n1 2 3").is_err());
        assert!(RgbRaster::from_ppm_bytes(b"P2 1 1 255\n1").is_err());
    }

    #[test]
    fn invariants_enforced() {
        assert!(RgbRaster::new(0, 1, vec![]).is_err());
        assert!(RgbRaster::new(2, 2, vec![[0; 3]; 3]).is_err());
    }

    fn arb_raster() -> impl Strategy<Value = RgbRaster> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<[u8; 3]>(), w * h)
                .prop_map(move |px| RgbRaster::new(w, h, px).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn save_load_round_trip(raster in arb_raster(), ascii in any::<bool>()) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("map.ppm");
            if ascii {
                std::fs::write(&path, raster.to_ppm_bytes(true)).unwrap();
            } else {
                save_raster(&raster, &path).unwrap();
            }
            prop_assert_eq!(load_raster(&path).unwrap(), raster);
        }
    }
}
