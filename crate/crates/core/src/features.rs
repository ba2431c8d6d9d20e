//! Tile coding over a one-dimensional state index.

use crate::error::{Error, Result};

/// Binary tile-coding features over positions `0..num_states`.
///
/// A coder of width `w` lays down `w` tilings whose tiles each cover `w`
/// neighbouring positions, tiling `o` shifted by `o` positions. Tiles are
/// truncated at both ends, so every position activates exactly one feature
/// per tiling and the activation matrix has full row rank: any value table
/// can be represented. Width 1 is a one-hot (tabular) encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileCoder {
    width: usize,
    num_states: usize,
    offsets: Vec<usize>,
    num_features: usize,
    // row-major [position][tiling]
    active: Vec<usize>,
}

impl TileCoder {
    pub fn new(width: usize, num_states: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::param("tile_width", "must be at least 1"));
        }
        if num_states < width {
            return Err(Error::param(
                "tile_width",
                format!("width {width} exceeds {num_states} states"),
            ));
        }
        let offsets: Vec<usize> = (0..width).collect();
        let mut bases = Vec::with_capacity(width);
        let mut num_features = 0;
        for &o in &offsets {
            bases.push(num_features);
            num_features += (num_states + o).div_ceil(width);
        }
        let mut active = Vec::with_capacity(num_states * width);
        for pos in 0..num_states {
            for (t, &o) in offsets.iter().enumerate() {
                active.push(bases[t] + (pos + o) / width);
            }
        }
        Ok(TileCoder {
            width,
            num_states,
            offsets,
            num_features,
            active,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_tilings(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Active feature indices of a position, one per tiling.
    pub fn encode(&self, pos: usize) -> Result<&[usize]> {
        if pos >= self.num_states {
            return Err(Error::IndexOutOfRange {
                what: "feature position",
                index: pos,
                limit: self.num_states,
            });
        }
        Ok(self.active_unchecked(pos))
    }

    #[inline]
    pub(crate) fn active_unchecked(&self, pos: usize) -> &[usize] {
        let n = self.offsets.len();
        &self.active[pos * n..(pos + 1) * n]
    }
}

/// Builds a tile coder of the given width over `num_states` positions.
pub fn build_tilecoder(width: usize, num_states: usize) -> Result<TileCoder> {
    TileCoder::new(width, num_states)
}

/// `Q(s, a)` under a linear model: the sum of action `a`'s weights over the
/// active features of position `pos`. `weights` holds one block of
/// `num_features` weights per action.
#[inline]
pub fn linear_q(weights: &[f64], coder: &TileCoder, pos: usize, action: usize) -> f64 {
    let base = action * coder.num_features();
    coder
        .active_unchecked(pos)
        .iter()
        .map(|&f| weights[base + f])
        .sum()
}
