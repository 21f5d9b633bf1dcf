//! Multi-grained scanning.
//!
//! Each grain slides a square window over the image. Patches at the same
//! location are summarised by their aHash bit statistics, redundant locations
//! are dropped by [`crate::hash_screen`], and a random plus a completely-random
//! forest are trained on the pooled retained patches (each patch inherits its
//! instance's label). Transforming an instance concatenates, for every
//! retained location, the two forests' class vectors.
//!
//! Patches are never materialised for training: [`PatchView`] reads pixels
//! straight out of the image rows.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{ForestKind, ForestModel, Samples};
use crate::hash_screen::{self, BitCounter, HashThresholdResult, LocationGroup};
use crate::par::map_indexed;
use crate::rng::{derive_seed, rng_from_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrainConfig {
    pub window: usize,
    pub stride: usize,
    pub n_trees: usize,
}

impl GrainConfig {
    pub fn new(window: usize, stride: usize, n_trees: usize) -> Self {
        Self { window, stride, n_trees }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub grains: Vec<GrainConfig>,
    pub hash_screen: bool,
    /// Fraction of (instance, location) patches used to fit grain forests.
    pub patch_subsample: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            grains: [4, 6, 8].iter().map(|&w| GrainConfig::new(w, 1, 30)).collect(),
            hash_screen: true,
            patch_subsample: 1.0,
        }
    }
}

/// Window positions over an image, numbered row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub height: usize,
    pub width: usize,
    pub window: usize,
    pub stride: usize,
}

impl PatchGrid {
    pub fn new(height: usize, width: usize, window: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::ZeroStride);
        }
        if window == 0 || window > height || window > width {
            return Err(Error::WindowLargerThanImage { window, height, width });
        }
        Ok(Self { height, width, window, stride })
    }

    pub fn rows(&self) -> usize {
        (self.height - self.window) / self.stride + 1
    }

    pub fn cols(&self) -> usize {
        (self.width - self.window) / self.stride + 1
    }

    pub fn n_locations(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn patch_len(&self) -> usize {
        self.window * self.window
    }

    /// Flat pixel index of the top-left corner of `location`.
    pub fn origin(&self, location: usize) -> usize {
        let (r, c) = (location / self.cols(), location % self.cols());
        r * self.stride * self.width + c * self.stride
    }

    /// Flat pixel index of element `j` (row-major within the window).
    #[inline]
    pub fn pixel(&self, location: usize, j: usize) -> usize {
        self.origin(location) + (j / self.window) * self.width + j % self.window
    }

    pub fn copy_patch(&self, image: &[f64], location: usize, out: &mut [f64]) {
        let origin = self.origin(location);
        for (r, chunk) in out.chunks_exact_mut(self.window).enumerate() {
            let start = origin + r * self.width;
            chunk.copy_from_slice(&image[start..start + self.window]);
        }
    }
}

/// All patches of one image, row-major by location.
pub fn extract_patches(image: &[f64], shape: (usize, usize), g: &GrainConfig) -> Result<Vec<Vec<f64>>> {
    let grid = PatchGrid::new(shape.0, shape.1, g.window, g.stride)?;
    if image.len() != shape.0 * shape.1 {
        return Err(Error::ShapeMismatch { height: shape.0, width: shape.1, n_features: image.len() });
    }
    Ok((0..grid.n_locations())
        .map(|loc| {
            let mut p = vec![0.0; grid.patch_len()];
            grid.copy_patch(image, loc, &mut p);
            p
        })
        .collect())
}

/// Every (instance, retained location) patch of a dataset as training
/// samples. Sample `s` is instance `s / L`, retained location `s % L`.
pub struct PatchView<'a> {
    data: &'a Dataset,
    grid: PatchGrid,
    origins: Vec<usize>,
}

impl<'a> PatchView<'a> {
    pub fn new(data: &'a Dataset, grid: PatchGrid, locations: &[usize]) -> Self {
        Self { data, grid, origins: locations.iter().map(|&l| grid.origin(l)).collect() }
    }
}

impl Samples for PatchView<'_> {
    fn n_samples(&self) -> usize {
        self.data.n_instances() * self.origins.len()
    }

    fn n_features(&self) -> usize {
        self.grid.patch_len()
    }

    fn n_classes(&self) -> usize {
        self.data.n_classes()
    }

    #[inline]
    fn value(&self, sample: usize, feature: usize) -> f64 {
        let l = self.origins.len();
        let (inst, pos) = (sample / l, sample % l);
        let w = self.grid.window;
        let px = self.origins[pos] + (feature / w) * self.grid.width + feature % w;
        self.data.features()[inst * self.data.n_features() + px]
    }

    fn label(&self, sample: usize) -> usize {
        self.data.label(sample / self.origins.len())
    }
}

/// Per-location bit statistics over every training image.
pub fn location_groups(data: &Dataset, grid: &PatchGrid) -> Result<Vec<LocationGroup>> {
    map_indexed(grid.n_locations(), |loc| {
        let mut counter = BitCounter::default();
        let mut patch = vec![0.0; grid.patch_len()];
        for row in data.rows() {
            grid.copy_patch(row, loc, &mut patch);
            counter.add_patch(&patch)?;
        }
        counter.finish(loc)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrainModel {
    pub config: GrainConfig,
    pub grid: PatchGrid,
    pub threshold: HashThresholdResult,
    /// Random forest first, completely-random forest second.
    pub forests: Vec<ForestModel>,
    pub retained_locations: Vec<usize>,
}

fn image_shape(d: &Dataset) -> Result<(usize, usize)> {
    d.image_shape().ok_or(Error::NotAnImage)
}

pub fn fit_grain(
    train: &Dataset,
    g: &GrainConfig,
    hash_screen_on: bool,
    patch_subsample: f64,
    seed: u64,
) -> Result<GrainModel> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if !(patch_subsample > 0.0 && patch_subsample <= 1.0) {
        return Err(Error::InvalidFraction(patch_subsample));
    }
    let (h, w) = image_shape(train)?;
    let grid = PatchGrid::new(h, w, g.window, g.stride)?;
    let groups = location_groups(train, &grid)?;
    let (threshold, retained) = if hash_screen_on {
        hash_screen::screen(&groups)?
    } else {
        let t = HashThresholdResult::keep_all(&groups);
        let keep = t.keep.clone();
        (t, keep)
    };
    let view = PatchView::new(train, grid, &retained);
    let total = view.n_samples();
    let indices: Vec<usize> = if patch_subsample >= 1.0 {
        (0..total).collect()
    } else {
        let amount = ((total as f64 * patch_subsample) as usize).clamp(1, total);
        let mut rng = rng_from_seed(derive_seed(seed, stream::SUBSAMPLE, 0));
        let mut idx = rand::seq::index::sample(&mut rng, total, amount).into_vec();
        idx.sort_unstable();
        idx
    };
    let kinds = [ForestKind::Random, ForestKind::CompletelyRandom];
    let forests = map_indexed(kinds.len(), |i| {
        ForestModel::fit(&view, &indices, kinds[i], g.n_trees, derive_seed(seed, stream::FOREST, i as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(GrainModel { config: *g, grid, threshold, forests, retained_locations: retained })
}

impl GrainModel {
    pub fn n_classes(&self) -> usize {
        self.forests[0].n_classes()
    }

    pub fn total_locations(&self) -> usize {
        self.grid.n_locations()
    }

    /// `retained x forests x K`.
    pub fn output_width(&self) -> usize {
        self.retained_locations.len() * self.forests.len() * self.n_classes()
    }

    /// Writes one image's class vectors, ordered (location, forest, class).
    pub fn transform_into(&self, image: &[f64], out: &mut [f64]) -> Result<()> {
        let (h, w) = (self.grid.height, self.grid.width);
        if image.len() != h * w {
            return Err(Error::ShapeMismatch { height: h, width: w, n_features: image.len() });
        }
        self.transform_rows_into(image, out)
    }

    /// Writes class vectors for `images.len() / pixels` images into `out`
    /// (row-major, `output_width()` per image).
    pub fn transform_rows_into(&self, images: &[f64], out: &mut [f64]) -> Result<()> {
        let (h, w) = (self.grid.height, self.grid.width);
        let pixels = h * w;
        if !images.len().is_multiple_of(pixels) {
            return Err(Error::ShapeMismatch { height: h, width: w, n_features: images.len() });
        }
        let n = images.len() / pixels;
        let width = self.output_width();
        if out.len() != n * width {
            return Err(Error::DimensionMismatch { expected: n * width, got: out.len() });
        }
        let k = self.n_classes();
        let plen = self.grid.patch_len();
        let locs = &self.retained_locations;
        let mut patches = vec![0.0; n * locs.len() * plen];
        for (i, image) in images.chunks_exact(pixels).enumerate() {
            for (pos, &loc) in locs.iter().enumerate() {
                let at = (i * locs.len() + pos) * plen;
                self.grid.copy_patch(image, loc, &mut patches[at..at + plen]);
            }
        }
        let mut probs = vec![0.0; n * locs.len() * k];
        for (f, forest) in self.forests.iter().enumerate() {
            forest.predict_rows_into(&patches, &mut probs)?;
            for (row, p) in probs.chunks_exact(k).enumerate() {
                let at = row * self.forests.len() * k + f * k;
                out[at..at + k].copy_from_slice(p);
            }
        }
        Ok(())
    }

    /// Row-major `n x output_width()` matrix.
    pub fn transform(&self, d: &Dataset) -> Result<Vec<f64>> {
        let width = self.output_width();
        let mut m = vec![0.0; d.n_instances() * width];
        for_chunks(d, width, &mut m, |images, out| self.transform_rows_into(images, out))?;
        Ok(m)
    }
}

/// Instances per batch in batched transforms.
const CHUNK: usize = 32;

/// Runs `f` over consecutive instance chunks of `d` in parallel, each
/// writing its slice of the `n x width` matrix `out`.
fn for_chunks<F>(d: &Dataset, width: usize, out: &mut [f64], f: F) -> Result<()>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync + Send,
{
    let n = d.n_instances();
    let nf = d.n_features();
    let chunks = n.div_ceil(CHUNK);
    let parts = map_indexed(chunks, |c| -> Result<Vec<f64>> {
        let (a, b) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
        let mut part = vec![0.0; (b - a) * width];
        f(&d.features()[a * nf..b * nf], &mut part)?;
        Ok(part)
    });
    for (c, part) in parts.into_iter().enumerate() {
        let a = c * CHUNK * width;
        let part = part?;
        out[a..a + part.len()].copy_from_slice(&part);
    }
    Ok(())
}

/// All grains of one scanning stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanModel {
    pub image_shape: (usize, usize),
    pub grains: Vec<GrainModel>,
}

impl ScanModel {
    pub fn fit(train: &Dataset, cfg: &ScanConfig, seed: u64) -> Result<Self> {
        let image_shape = image_shape(train)?;
        if cfg.grains.is_empty() {
            return Err(Error::InvalidConfig("no scanning grains"));
        }
        let grains = cfg
            .grains
            .iter()
            .enumerate()
            .map(|(i, g)| {
                fit_grain(train, g, cfg.hash_screen, cfg.patch_subsample, derive_seed(seed, stream::GRAIN, i as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { image_shape, grains })
    }

    pub fn output_width(&self) -> usize {
        self.grains.iter().map(GrainModel::output_width).sum()
    }

    pub fn transform_into(&self, image: &[f64], out: &mut [f64]) -> Result<()> {
        if out.len() != self.output_width() {
            return Err(Error::DimensionMismatch { expected: self.output_width(), got: out.len() });
        }
        let mut rest = out;
        for g in &self.grains {
            let (head, tail) = rest.split_at_mut(g.output_width());
            g.transform_into(image, head)?;
            rest = tail;
        }
        Ok(())
    }

    /// Concatenated grain features, as a tabular dataset with the same labels.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        if d.image_shape() != Some(self.image_shape) {
            let (h, w) = self.image_shape;
            return Err(Error::ShapeMismatch { height: h, width: w, n_features: d.n_features() });
        }
        let width = self.output_width();
        let mut m = vec![0.0; d.n_instances() * width];
        for_chunks(d, width, &mut m, |images, out| {
            let n = out.len() / width;
            let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(self.grains.len());
            for g in &self.grains {
                let mut b = vec![0.0; n * g.output_width()];
                g.transform_rows_into(images, &mut b)?;
                blocks.push(b);
            }
            for (i, row) in out.chunks_exact_mut(width).enumerate() {
                let mut at = 0;
                for (g, b) in self.grains.iter().zip(&blocks) {
                    let gw = g.output_width();
                    row[at..at + gw].copy_from_slice(&b[i * gw..(i + 1) * gw]);
                    at += gw;
                }
            }
            Ok(())
        })?;
        d.with_features(m, width)
    }
}
