//! Orthophoto and mask I/O with world-file georeferencing.

mod mask;
mod worldfile;

use std::path::{Path, PathBuf};

use image::RgbImage;

use crate::clustering::FeatureMatrix;

pub use mask::{load_ground_truth, BinaryMask, Class, GroundTruthMask, LabelMask, MASK_PALETTE};
pub use worldfile::{find_world_file, WorldFile};

#[derive(Debug, thiserror::Error)]
pub enum RasterError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot encode image: {0}")]
    Encode(String),
    #[error("world file: {0}")]
    WorldFile(String),
    #[error("no world file next to {0}")]
    MissingWorldFile(PathBuf),
    #[error("dimension error: {0}")]
    Dimensions(String),
    #[error("label {value} at ({x}, {y}) is not a class index (0 soil, 1 tree, 2 shrub)")]
    LabelRange { x: usize, y: usize, value: u8 },
}

impl RasterError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RasterError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Georeferenced RGB raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Orthophoto {
    id: String,
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
    geo: WorldFile,
}

impl Orthophoto {
    pub fn new(
        id: impl Into<String>,
        width: usize,
        height: usize,
        pixels: Vec<[u8; 3]>,
        geo: WorldFile,
    ) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::Dimensions(format!(
                "raster must be non-empty, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(RasterError::Dimensions(format!(
                "{} pixels for a {width}x{height} raster",
                pixels.len()
            )));
        }
        geo.validate()?;
        Ok(Orthophoto {
            id: id.into(),
            width,
            height,
            pixels,
            geo,
        })
    }

    pub fn from_rgb_image(
        id: impl Into<String>,
        image: &RgbImage,
        geo: WorldFile,
    ) -> Result<Self, RasterError> {
        let pixels = image.pixels().map(|p| p.0).collect();
        Orthophoto::new(
            id,
            image.width() as usize,
            image.height() as usize,
            pixels,
            geo,
        )
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Total pixel count `N`.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn geo(&self) -> &WorldFile {
        &self.geo
    }

    /// One `(R, G, B)` row per pixel, pixel `k = y·width + x`.
    pub fn feature_matrix(&self) -> FeatureMatrix {
        let values = self
            .pixels
            .iter()
            .flat_map(|p| p.iter().map(|c| f64::from(*c)))
            .collect();
        FeatureMatrix::new(3, values).expect("three channels per pixel")
    }

    /// Ground area covered by the raster, in m².
    pub fn image_area_m2(&self) -> f64 {
        self.width as f64
            * self.geo.pixel_size_x.abs()
            * self.height as f64
            * self.geo.pixel_size_y.abs()
    }

    pub fn to_rgb_image(&self) -> RgbImage {
        let raw = self.pixels.iter().flatten().copied().collect();
        RgbImage::from_raw(self.width as u32, self.height as u32, raw).expect("buffer matches size")
    }

    /// Writes the raster (format picked from the extension) and its world
    /// file.
    pub fn write(&self, image_path: &Path, world_path: &Path) -> Result<(), RasterError> {
        self.to_rgb_image()
            .save(image_path)
            .map_err(|e| RasterError::Encode(format!("{}: {e}", image_path.display())))?;
        self.geo.write(world_path)
    }
}

/// Identifier of an image: the file stem.
pub fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn read_rgb(image_path: &Path) -> Result<RgbImage, RasterError> {
    let reader = image::ImageReader::open(image_path)
        .map_err(|e| RasterError::io(image_path, e))?
        .with_guessed_format()
        .map_err(|e| RasterError::io(image_path, e))?;
    let img = reader
        .decode()
        .map_err(|e| RasterError::Decode(format!("{}: {e}", image_path.display())))?;
    Ok(img.to_rgb8())
}

/// Loads a BMP or PNG orthophoto and its world file.
pub fn load_orthophoto(image_path: &Path, world_path: &Path) -> Result<Orthophoto, RasterError> {
    let geo = WorldFile::read(world_path)?;
    let rgb = read_rgb(image_path)?;
    Orthophoto::from_rgb_image(image_id(image_path), &rgb, geo)
}

/// Loads an orthophoto, locating its world file by stem. When none exists and
/// `fallback_pixel_size` is given, a north-up georeference with that pixel
/// size is assumed and a warning is returned alongside the photo.
pub fn discover_orthophoto(
    image_path: &Path,
    fallback_pixel_size: Option<f64>,
) -> Result<(Orthophoto, Option<String>), RasterError> {
    match (find_world_file(image_path), fallback_pixel_size) {
        (Some(world), _) => Ok((load_orthophoto(image_path, &world)?, None)),
        (None, Some(size)) => {
            let geo = WorldFile::with_pixel_size(size);
            geo.validate()?;
            let rgb = read_rgb(image_path)?;
            let photo = Orthophoto::from_rgb_image(image_id(image_path), &rgb, geo)?;
            let warning = format!(
                "{}: no world file found, assuming {size} m/pixel",
                image_path.display()
            );
            log::warn!("{warning}");
            Ok((photo, Some(warning)))
        }
        (None, None) => Err(RasterError::MissingWorldFile(image_path.to_path_buf())),
    }
}

/// Raster files that look like orthophotos, sorted by path.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>, RasterError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| RasterError::io(dir, e))? {
        let path = entry.map_err(|e| RasterError::io(dir, e))?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| matches!(e.to_ascii_lowercase().as_str(), "bmp" | "png"))
            .unwrap_or(false);
        if is_image && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
