use serde::{Deserialize, Serialize};

use crate::raster::BinaryMask;

/// Pixel adjacency used when grouping foreground pixels into blobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    /// Edge neighbors only.
    Four,
    /// Edge and corner neighbors.
    #[default]
    Eight,
}

impl Connectivity {
    pub fn from_neighbors(n: u8) -> Option<Self> {
        match n {
            4 => Some(Connectivity::Four),
            8 => Some(Connectivity::Eight),
            _ => None,
        }
    }

    pub fn neighbors(self) -> u8 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlobKind {
    Tree,
    Shrub,
}

/// A maximal connected set of foreground pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    /// Zero-based; components are numbered in raster order of their first
    /// pixel.
    pub id: u32,
    pub pixel_count: usize,
    /// Inclusive `(x0, y0, x1, y1)`.
    pub bounding_box: (usize, usize, usize, usize),
    pub touches_border: bool,
}

/// A component classified as tree crown or shrub by its area.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blob {
    pub id: u32,
    pub pixel_count: usize,
    pub bounding_box: (usize, usize, usize, usize),
    pub touches_border: bool,
    pub kind: BlobKind,
}

/// Component labeling of a binary mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlobLabels {
    width: usize,
    height: usize,
    /// 0 for background, `id + 1` for foreground.
    labels: Vec<u32>,
    pub components: Vec<Component>,
}

impl BlobLabels {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Component id of pixel `(x, y)`, or `None` for background.
    pub fn component_at(&self, x: usize, y: usize) -> Option<u32> {
        match self.labels[y * self.width + x] {
            0 => None,
            l => Some(l - 1),
        }
    }

    pub fn raw_labels(&self) -> &[u32] {
        &self.labels
    }
}

struct DisjointSets {
    parent: Vec<u32>,
}

impl DisjointSets {
    fn new() -> Self {
        DisjointSets { parent: Vec::new() }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller root so provisional order survives
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Two-pass union-find labeling of the foreground of `mask`.
pub fn label_blobs(mask: &BinaryMask, connectivity: Connectivity) -> BlobLabels {
    let (w, h) = (mask.width(), mask.height());
    let mut provisional = vec![u32::MAX; w * h];
    let mut sets = DisjointSets::new();

    // Already-visited neighbors in raster order.
    let back: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &[(-1, 0), (0, -1)],
        Connectivity::Eight => &[(-1, 0), (-1, -1), (0, -1), (1, -1)],
    };

    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let mut label = u32::MAX;
            for (dx, dy) in back {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize {
                    continue;
                }
                let n = provisional[ny as usize * w + nx as usize];
                if n == u32::MAX {
                    continue;
                }
                if label == u32::MAX {
                    label = n;
                } else if label != n {
                    sets.union(label, n);
                }
            }
            if label == u32::MAX {
                label = sets.make();
            }
            provisional[y * w + x] = label;
        }
    }

    let mut final_id = vec![u32::MAX; sets.parent.len()];
    let mut labels = vec![0u32; w * h];
    let mut components: Vec<Component> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let p = provisional[y * w + x];
            if p == u32::MAX {
                continue;
            }
            let root = sets.find(p) as usize;
            if final_id[root] == u32::MAX {
                final_id[root] = components.len() as u32;
                components.push(Component {
                    id: final_id[root],
                    pixel_count: 0,
                    bounding_box: (x, y, x, y),
                    touches_border: false,
                });
            }
            let id = final_id[root];
            labels[y * w + x] = id + 1;
            let c = &mut components[id as usize];
            c.pixel_count += 1;
            let bb = &mut c.bounding_box;
            bb.0 = bb.0.min(x);
            bb.1 = bb.1.min(y);
            bb.2 = bb.2.max(x);
            bb.3 = bb.3.max(y);
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                c.touches_border = true;
            }
        }
    }

    BlobLabels {
        width: w,
        height: h,
        labels,
        components,
    }
}

/// Tree crowns (`R_1a`), shrubs (`R_1b`) and the classified blobs.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeShrubSplit {
    pub blobs: Vec<Blob>,
    pub trees: BinaryMask,
    pub shrubs: BinaryMask,
}

/// Labels every component of at most `shrub_threshold_px` pixels a shrub and
/// every larger one a tree crown.
pub fn split_trees_shrubs(labels: &BlobLabels, shrub_threshold_px: u64) -> TreeShrubSplit {
    let blobs: Vec<Blob> = labels
        .components
        .iter()
        .map(|c| Blob {
            id: c.id,
            pixel_count: c.pixel_count,
            bounding_box: c.bounding_box,
            touches_border: c.touches_border,
            kind: if c.pixel_count as u64 <= shrub_threshold_px {
                BlobKind::Shrub
            } else {
                BlobKind::Tree
            },
        })
        .collect();
    let is_tree: Vec<bool> = blobs.iter().map(|b| b.kind == BlobKind::Tree).collect();
    let (w, h) = (labels.width, labels.height);
    let kind_at = |x: usize, y: usize| labels.component_at(x, y).map(|id| is_tree[id as usize]);
    TreeShrubSplit {
        trees: BinaryMask::from_fn(w, h, |x, y| kind_at(x, y) == Some(true)),
        shrubs: BinaryMask::from_fn(w, h, |x, y| kind_at(x, y) == Some(false)),
        blobs,
    }
}
