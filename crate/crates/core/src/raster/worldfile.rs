use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RasterError;

/// Six-parameter affine georeference read from a world file (`.tfw` and
/// friends).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldFile {
    /// Meters per pixel along x.
    pub pixel_size_x: f64,
    pub rot_x: f64,
    pub rot_y: f64,
    /// Meters per pixel along y; negative for north-up rasters.
    pub pixel_size_y: f64,
    /// Map x of the center of the upper-left pixel.
    pub origin_x: f64,
    /// Map y of the center of the upper-left pixel.
    pub origin_y: f64,
}

impl WorldFile {
    /// North-up georeference with square pixels and origin at zero.
    pub fn with_pixel_size(pixel_size: f64) -> Self {
        WorldFile {
            pixel_size_x: pixel_size,
            rot_x: 0.0,
            rot_y: 0.0,
            pixel_size_y: -pixel_size,
            origin_x: 0.0,
            origin_y: 0.0,
        }
    }

    /// Ground area of one pixel in m².
    pub fn pixel_area_m2(&self) -> f64 {
        self.pixel_size_x.abs() * self.pixel_size_y.abs()
    }

    pub fn validate(&self) -> Result<(), RasterError> {
        if !(self.pixel_size_x > 0.0) || !self.pixel_size_x.is_finite() {
            return Err(RasterError::WorldFile(format!(
                "pixel size x must be > 0, got {}",
                self.pixel_size_x
            )));
        }
        if self.pixel_size_y == 0.0 || !self.pixel_size_y.is_finite() {
            return Err(RasterError::WorldFile(format!(
                "pixel size y must be non-zero, got {}",
                self.pixel_size_y
            )));
        }
        Ok(())
    }

    /// Parses the six lines: x size, y rotation, x rotation, y size, origin x,
    /// origin y. Blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, RasterError> {
        let mut values = [0.0; 6];
        let mut count = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if count == 6 {
                return Err(RasterError::WorldFile(format!(
                    "unexpected extra content on line {}",
                    lineno + 1
                )));
            }
            values[count] = line.parse::<f64>().map_err(|_| {
                RasterError::WorldFile(format!("line {} is not a number: {line:?}", lineno + 1))
            })?;
            count += 1;
        }
        if count != 6 {
            return Err(RasterError::WorldFile(format!(
                "expected 6 numeric lines, found {count}"
            )));
        }
        let geo = WorldFile {
            pixel_size_x: values[0],
            rot_y: values[1],
            rot_x: values[2],
            pixel_size_y: values[3],
            origin_x: values[4],
            origin_y: values[5],
        };
        geo.validate()?;
        Ok(geo)
    }

    pub fn read(path: &Path) -> Result<Self, RasterError> {
        let text = fs::read_to_string(path).map_err(|e| RasterError::io(path, e))?;
        WorldFile::parse(&text)
    }

    /// Renders with the shortest round-trip representation of each value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in [
            self.pixel_size_x,
            self.rot_y,
            self.rot_x,
            self.pixel_size_y,
            self.origin_x,
            self.origin_y,
        ] {
            let _ = writeln!(out, "{v:?}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), RasterError> {
        fs::write(path, self.to_text()).map_err(|e| RasterError::io(path, e))
    }
}

const SIDECAR_EXTENSIONS: &[&str] = &["tfw", "TFW", "bpw", "BPW", "pgw", "PGW", "wld", "WLD"];

/// Looks for a world file next to `image_path` with the same stem.
pub fn find_world_file(image_path: &Path) -> Option<PathBuf> {
    SIDECAR_EXTENSIONS
        .iter()
        .map(|ext| image_path.with_extension(ext))
        .find(|p| p.is_file())
}
