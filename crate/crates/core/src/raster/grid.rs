use std::collections::BTreeMap;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::pnm;
use super::Rgb;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::kv::KeyValues;

/// A raster of region-type labels with a physical scale.
///
/// Labels are in `0..num_types`. Cell `(col, row)` covers
/// `[col, col + 1) x [row, row + 1)` in units of `meters_per_pixel`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    width: usize,
    height: usize,
    meters_per_pixel: f64,
    num_types: usize,
    labels: Vec<u16>,
    type_names: Option<Vec<String>>,
    type_colors: Option<Vec<Rgb>>,
}

impl RegionGrid {
    pub fn new(
        width: usize,
        height: usize,
        meters_per_pixel: f64,
        num_types: usize,
        labels: Vec<u16>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("region grid must be non-empty".into()));
        }
        if width.checked_mul(height) != Some(labels.len()) {
            return Err(Error::InvalidInput(format!(
                "region grid {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        if !(meters_per_pixel.is_finite() && meters_per_pixel > 0.0) {
            return Err(Error::InvalidInput(format!(
                "meters per pixel must be positive, got {meters_per_pixel}"
            )));
        }
        if num_types == 0 || num_types > usize::from(u16::MAX) + 1 {
            return Err(Error::InvalidInput(format!(
                "region type count {num_types} out of range"
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| usize::from(l) >= num_types) {
            return Err(Error::InvalidInput(format!(
                "label {bad} not below region type count {num_types}"
            )));
        }
        Ok(Self {
            width,
            height,
            meters_per_pixel,
            num_types,
            labels,
            type_names: None,
            type_colors: None,
        })
    }

    /// A single-type grid.
    pub fn uniform(width: usize, height: usize, meters_per_pixel: f64) -> Result<Self> {
        Self::new(width, height, meters_per_pixel, 1, vec![0; width * height])
    }

    pub fn with_type_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_types {
            return Err(Error::DimensionMismatch {
                expected: self.num_types,
                found: names.len(),
            });
        }
        if let Some(bad) = names
            .iter()
            .find(|n| n.is_empty() || n.contains([',', '\n']) || n.trim() != n.as_str())
        {
            return Err(Error::InvalidInput(format!("unusable type name `{bad}`")));
        }
        self.type_names = Some(names);
        Ok(self)
    }

    pub fn with_type_colors(mut self, colors: Vec<Rgb>) -> Result<Self> {
        if colors.len() != self.num_types {
            return Err(Error::DimensionMismatch {
                expected: self.num_types,
                found: colors.len(),
            });
        }
        self.type_colors = Some(colors);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn meters_per_pixel(&self) -> f64 {
        self.meters_per_pixel
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn type_names(&self) -> Option<&[String]> {
        self.type_names.as_deref()
    }

    pub fn type_colors(&self) -> Option<&[Rgb]> {
        self.type_colors.as_deref()
    }

    pub fn label(&self, col: usize, row: usize) -> u16 {
        self.labels[row * self.width + col]
    }

    pub fn width_m(&self) -> f64 {
        self.width as f64 * self.meters_per_pixel
    }

    pub fn height_m(&self) -> f64 {
        self.height as f64 * self.meters_per_pixel
    }

    /// The cell containing `p`. Points on a grid line belong to the
    /// higher-index cell, so the far edges are outside the map.
    pub fn cell_of(&self, p: Point) -> Result<(usize, usize)> {
        let out = || Error::OutOfBounds {
            x: p.x,
            y: p.y,
            width_m: self.width_m(),
            height_m: self.height_m(),
        };
        if !p.is_finite() {
            return Err(out());
        }
        let col = (p.x / self.meters_per_pixel).floor();
        let row = (p.y / self.meters_per_pixel).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            return Err(out());
        }
        Ok((col as usize, row as usize))
    }

    pub fn label_at(&self, p: Point) -> Result<u16> {
        let (col, row) = self.cell_of(p)?;
        Ok(self.label(col, row))
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        Point::new(
            (col as f64 + 0.5) * self.meters_per_pixel,
            (row as f64 + 0.5) * self.meters_per_pixel,
        )
    }

    /// Pixel count per region type.
    pub fn type_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.num_types];
        for &l in &self.labels {
            hist[usize::from(l)] += 1;
        }
        hist
    }

    /// Folds region types together and renumbers the survivors densely,
    /// keeping their relative order. Names and colors follow the target type.
    pub fn merge_types(&self, merges: &MergeMap) -> Result<RegionGrid> {
        let target = merges.resolve(self.num_types)?;
        let mut new_id = vec![u16::MAX; self.num_types];
        let mut survivors = Vec::new();
        for t in 0..self.num_types {
            if target[t] == t {
                new_id[t] = survivors.len() as u16;
                survivors.push(t);
            }
        }
        let labels = self
            .labels
            .iter()
            .map(|&l| new_id[target[usize::from(l)]])
            .collect();
        let mut grid = RegionGrid::new(
            self.width,
            self.height,
            self.meters_per_pixel,
            survivors.len(),
            labels,
        )?;
        if let Some(names) = &self.type_names {
            grid.type_names = Some(survivors.iter().map(|&t| names[t].clone()).collect());
        }
        if let Some(colors) = &self.type_colors {
            grid.type_colors = Some(survivors.iter().map(|&t| colors[t]).collect());
        }
        Ok(grid)
    }
}

/// User-supplied region type merges, written `from=into,from=into,...`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeMap(BTreeMap<usize, usize>);

impl MergeMap {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (from, into) in pairs {
            if from == into {
                return Err(Error::InvalidInput(format!("type {from} merged into itself")));
            }
            if map.insert(from, into).is_some() {
                return Err(Error::InvalidInput(format!("type {from} merged twice")));
            }
        }
        Ok(Self(map))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Final target of every type after following merge chains.
    fn resolve(&self, num_types: usize) -> Result<Vec<usize>> {
        for (&from, &into) in &self.0 {
            if from >= num_types || into >= num_types {
                return Err(Error::InvalidInput(format!(
                    "merge {from}={into} names a type outside 0..{num_types}"
                )));
            }
        }
        (0..num_types)
            .map(|start| {
                let mut t = start;
                for _ in 0..=num_types {
                    match self.0.get(&t) {
                        Some(&next) => t = next,
                        None => return Ok(t),
                    }
                }
                Err(Error::InvalidInput(format!(
                    "merge map has a cycle through type {start}"
                )))
            })
            .collect()
    }
}

impl FromStr for MergeMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let pairs = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|pair| {
                let bad = || Error::InvalidInput(format!("bad merge entry `{pair}`, want a=b"));
                let (a, b) = pair.split_once('=').ok_or_else(bad)?;
                Ok((
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        MergeMap::new(pairs)
    }
}

/// Metadata lives next to the graymap as `<path>.meta`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta");
    PathBuf::from(os)
}

const META_FORMAT: &str = "region grid metadata";

fn format_color(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn parse_color(s: &str) -> Result<Rgb> {
    let bad = || Error::format(META_FORMAT, format!("bad color `{s}`, want #rrggbb"));
    let hex = s.strip_prefix('#').ok_or_else(bad)?;
    if hex.len() != 6 || !hex.is_ascii() {
        return Err(bad());
    }
    let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
    Ok([channel(0)?, channel(2)?, channel(4)?])
}

/// Writes the label graymap (P5) to `path` and its metadata to
/// [`sidecar_path`].
pub fn save_region_grid(grid: &RegionGrid, path: &Path) -> Result<()> {
    use std::io::Write;
    let img = pnm::Image {
        kind: pnm::Kind::Gray,
        width: grid.width,
        height: grid.height,
        maxval: (grid.num_types - 1).max(1) as u16,
        samples: grid.labels.clone(),
    };
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    pnm::encode(&img, false, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))?;

    let mut meta = KeyValues::new();
    meta.set("meters_per_pixel", grid.meters_per_pixel);
    meta.set("types", grid.num_types);
    if let Some(names) = &grid.type_names {
        meta.set("type_names", names.join(","));
    }
    if let Some(colors) = &grid.type_colors {
        let colors: Vec<String> = colors.iter().map(|&c| format_color(c)).collect();
        meta.set("type_colors", colors.join(","));
    }
    meta.save(&sidecar_path(path))
}

pub fn load_region_grid(path: &Path) -> Result<RegionGrid> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = pnm::decode(&bytes)?;
    if img.kind != pnm::Kind::Gray {
        return Err(Error::format("region graymap", "expected P2 or P5 magic"));
    }
    let meta_path = sidecar_path(path);
    let meta = KeyValues::load(&meta_path)?;
    let mpp: f64 = meta.require("meters_per_pixel")?;
    let num_types: usize = meta.require("types")?;
    let grid = RegionGrid::new(img.width, img.height, mpp, num_types, img.samples)
        .map_err(|e| Error::format(META_FORMAT, e.to_string()))?;
    let grid = match meta.get("type_names") {
        Some(names) => grid.with_type_names(names.split(',').map(str::to_owned).collect())?,
        None => grid,
    };
    match meta.get("type_colors") {
        Some(colors) => {
            grid.with_type_colors(colors.split(',').map(parse_color).collect::<Result<_>>()?)
        }
        None => Ok(grid),
    }
}
