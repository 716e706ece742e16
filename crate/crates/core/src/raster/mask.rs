use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Orthophoto, RasterError};

/// Land-cover class of a pixel. The discriminant is the palette index used in
/// mask files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum Class {
    Soil = 0,
    Tree = 1,
    Shrub = 2,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::Tree, Class::Shrub, Class::Soil];

    pub fn from_index(index: u8) -> Option<Class> {
        match index {
            0 => Some(Class::Soil),
            1 => Some(Class::Tree),
            2 => Some(Class::Shrub),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Soil => "soil",
            Class::Tree => "tree",
            Class::Shrub => "shrub",
        }
    }
}

/// Palette for mask PNGs: black soil, green tree, yellow shrub.
pub const MASK_PALETTE: [[u8; 3]; 3] = [[0, 0, 0], [0, 255, 0], [255, 255, 0]];

/// Two-valued raster; `true` marks the foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        if bits.len() != width * height {
            return Err(RasterError::Dimensions(format!(
                "{} mask values for a {width}x{height} raster",
                bits.len()
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        BinaryMask {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a && **b)
            .count()
    }

    pub fn union_count(&self, other: &BinaryMask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a || **b)
            .count()
    }
}

/// Per-pixel class map, row-major from the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<Class>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<Class>) -> Result<Self, RasterError> {
        if labels.len() != width * height || labels.is_empty() {
            return Err(RasterError::Dimensions(format!(
                "{} labels for a {width}x{height} raster",
                labels.len()
            )));
        }
        Ok(LabelMask {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, class: Class) -> Self {
        LabelMask {
            width,
            height,
            labels: vec![class; width * height],
        }
    }

    /// Tree and shrub from two disjoint masks; everything else is soil.
    pub fn from_regions(trees: &BinaryMask, shrubs: &BinaryMask) -> Result<Self, RasterError> {
        if !trees.same_shape(shrubs) {
            return Err(RasterError::Dimensions(
                "tree and shrub masks differ in size".into(),
            ));
        }
        let labels = trees
            .as_slice()
            .iter()
            .zip(shrubs.as_slice())
            .map(|(t, s)| match (t, s) {
                (true, false) => Ok(Class::Tree),
                (false, true) => Ok(Class::Shrub),
                (false, false) => Ok(Class::Soil),
                (true, true) => Err(RasterError::Dimensions(
                    "tree and shrub masks overlap".into(),
                )),
            })
            .collect::<Result<Vec<_>, _>>()?;
        LabelMask::new(trees.width(), trees.height(), labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> Class {
        self.labels[y * self.width + x]
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn region(&self, class: Class) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|l| *l == class).collect(),
        }
    }

    /// Union of the regions of several classes.
    pub fn regions(&self, classes: &[Class]) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|l| classes.contains(l)).collect(),
        }
    }

    pub fn count(&self, class: Class) -> usize {
        self.labels.iter().filter(|l| **l == class).count()
    }

    pub fn fraction(&self, class: Class) -> f64 {
        self.count(class) as f64 / self.labels.len() as f64
    }

    /// Encodes as an 8-bit indexed PNG using [`MASK_PALETTE`].
    pub fn to_png_bytes(&self) -> Result<Vec<u8>, RasterError> {
        let mut out = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            encoder.set_color(png::ColorType::Indexed);
            encoder.set_depth(png::BitDepth::Eight);
            encoder.set_palette(MASK_PALETTE.concat());
            let mut writer = encoder
                .write_header()
                .map_err(|e| RasterError::Encode(e.to_string()))?;
            let data: Vec<u8> = self.labels.iter().map(|l| l.index()).collect();
            writer
                .write_image_data(&data)
                .map_err(|e| RasterError::Encode(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn write_png(&self, path: &Path) -> Result<(), RasterError> {
        let bytes = self.to_png_bytes()?;
        std::fs::write(path, bytes).map_err(|e| RasterError::io(path, e))
    }

    /// Reads an indexed (or 8-bit grayscale) PNG whose values are class
    /// indices.
    pub fn read_png(path: &Path) -> Result<Self, RasterError> {
        let file = File::open(path).map_err(|e| RasterError::io(path, e))?;
        let mut decoder = png::Decoder::new(BufReader::new(file));
        decoder.set_transformations(png::Transformations::IDENTITY);
        let decode =
            |e: png::DecodingError| RasterError::Decode(format!("{}: {e}", path.display()));
        let mut reader = decoder.read_info().map_err(decode)?;
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| RasterError::Decode("mask too large".into()))?;
        let mut buf = vec![0; size];
        let info = reader.next_frame(&mut buf).map_err(decode)?;
        let (width, height) = (info.width as usize, info.height as usize);
        let bits = match info.bit_depth {
            png::BitDepth::One => 1,
            png::BitDepth::Two => 2,
            png::BitDepth::Four => 4,
            png::BitDepth::Eight => 8,
            png::BitDepth::Sixteen => 16,
        };
        match (info.color_type, bits) {
            (png::ColorType::Indexed, 1 | 2 | 4 | 8) | (png::ColorType::Grayscale, 8) => {}
            (color, _) => {
                return Err(RasterError::Decode(format!(
                    "{}: mask must be an indexed or 8-bit grayscale PNG, found {color:?} at {bits} bits",
                    path.display()
                )))
            }
        }
        let per_byte = 8 / bits;
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            let line = &buf[y * info.line_size..(y + 1) * info.line_size];
            for x in 0..width {
                let byte = line[x / per_byte];
                let shift = 8 - bits * (x % per_byte + 1);
                let value = (byte >> shift) & (((1u16 << bits) - 1) as u8);
                let class =
                    Class::from_index(value).ok_or(RasterError::LabelRange { x, y, value })?;
                labels.push(class);
            }
        }
        LabelMask::new(width, height, labels)
    }
}

/// Expert segmentation paired with the orthophoto it annotates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthMask {
    pub image_id: String,
    pub mask: LabelMask,
}

impl GroundTruthMask {
    pub fn new(mask: LabelMask, photo: &Orthophoto) -> Result<Self, RasterError> {
        if mask.width() != photo.width() || mask.height() != photo.height() {
            return Err(RasterError::Dimensions(format!(
                "ground truth is {}x{} but {} is {}x{}",
                mask.width(),
                mask.height(),
                photo.id(),
                photo.width(),
                photo.height()
            )));
        }
        Ok(GroundTruthMask {
            image_id: photo.id().to_string(),
            mask,
        })
    }
}

/// Loads and validates a ground-truth mask for `photo`.
pub fn load_ground_truth(
    mask_path: &Path,
    photo: &Orthophoto,
) -> Result<GroundTruthMask, RasterError> {
    GroundTruthMask::new(LabelMask::read_png(mask_path)?, photo)
}
