use super::network::Network;
use super::ops::{gemm, maxpool_forward, relu_in_place};
use crate::data::{HsiCube, PaddedCube, PatchSource, ProbMap};
use crate::error::{Error, Result};

const PIXEL_BATCH: usize = 256;
const STRIP_ROWS: usize = 8;

/// Eval-mode posteriors for every pixel of the cube, in row-major pixel order.
///
/// Neighbouring patches overlap, so the first convolution is evaluated once
/// over the whole mirrored image and each pixel's n1×n1 block is cut out of
/// that feature map; the rest of the network runs per pixel.
pub fn predict_probmap(net: &Network, cube: &HsiCube) -> Result<ProbMap> {
    let cfg = net.config();
    if cube.bands() != cfg.bands {
        return Err(Error::shape(format!(
            "cube has {} bands, network expects {}",
            cube.bands(),
            cfg.bands
        )));
    }
    let padded = PaddedCube::new(cube, cfg.patch_size)?;
    predict_padded(net, &padded)
}

pub fn predict_padded(net: &Network, padded: &PaddedCube) -> Result<ProbMap> {
    let cfg = net.config();
    if padded.patch_size() != cfg.patch_size || padded.bands() != cfg.bands {
        return Err(Error::shape("padded cube does not match the network input"));
    }
    let first = cfg.conv[0];
    let (f, filters, d) = (first.kernel, first.filters, cfg.bands);
    let n1 = cfg.patch_size - f + 1;
    let n2 = net.feature_sizes()[2];
    let (ph, pw) = (padded.padded_height(), padded.padded_width());
    let (oh, ow) = (ph - f + 1, pw - f + 1);

    // first-layer feature map over the padded image, oh × ow × filters
    let layer = &net.conv_layers()[0];
    let mut feature = vec![0.0; oh * ow * filters];
    let fan_in = f * f * d;
    let values = padded.values();
    let mut row0 = 0;
    while row0 < oh {
        let rows = STRIP_ROWS.min(oh - row0);
        let mut cols = vec![0.0; rows * ow * fan_in];
        for y in 0..rows {
            for x in 0..ow {
                let dst = (y * ow + x) * fan_in;
                for dy in 0..f {
                    let src = ((row0 + y + dy) * pw + x) * d;
                    cols[dst + dy * f * d..dst + (dy + 1) * f * d].copy_from_slice(&values[src..src + f * d]);
                }
            }
        }
        let out = &mut feature[row0 * ow * filters..(row0 + rows) * ow * filters];
        for chunk in out.chunks_mut(filters) {
            chunk.copy_from_slice(&layer.bias);
        }
        gemm(rows * ow, fan_in, filters, &cols, false, &layer.weights, true, out, 1.0);
        row0 += rows;
    }
    relu_in_place(&mut feature);

    let (h, w) = (padded.height(), padded.width());
    let n = h * w;
    let block = n1 * n1 * filters;
    let mut probs = Vec::with_capacity(n * cfg.classes);
    let mut start = 0;
    while start < n {
        let b = PIXEL_BATCH.min(n - start);
        let mut maps = vec![0.0; b * block];
        for slot in 0..b {
            let (r, c) = ((start + slot) / w, (start + slot) % w);
            for dy in 0..n1 {
                let src = ((r + dy) * ow + c) * filters;
                let dst = slot * block + dy * n1 * filters;
                maps[dst..dst + n1 * filters].copy_from_slice(&feature[src..src + n1 * filters]);
            }
        }
        let (pooled, _) = maxpool_forward(&maps, b, n1, filters);
        debug_assert_eq!(pooled.len(), b * n2 * n2 * filters);
        probs.extend(net.eval_from_first_pool(pooled, b));
        start += b;
    }
    ProbMap::new(n, cfg.classes, probs)
}

/// Reference path: one full forward per patch. Slow; used to check
/// [`predict_probmap`].
pub fn predict_probmap_per_patch(net: &Network, cube: &HsiCube) -> Result<ProbMap> {
    let padded = PaddedCube::new(cube, net.config().patch_size)?;
    let len = padded.patch_len();
    let mut buf = vec![0.0; len];
    let mut probs = Vec::with_capacity(cube.pixels() * net.config().classes);
    for i in 0..cube.pixels() {
        padded.fill(i, &mut buf);
        probs.extend(net.forward_eval(&buf, 1)?);
    }
    ProbMap::new(cube.pixels(), net.config().classes, probs)
}
