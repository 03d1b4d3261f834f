use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// One axis of a structured grid. Node `i` sits at `origin + i * spacing`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub nodes: usize,
    pub origin: f64,
    pub spacing: f64,
    pub periodic: bool,
}

impl Axis {
    /// `cells` equal intervals on `[lo, hi]` with nodes at both ends.
    pub fn closed(lo: f64, hi: f64, cells: usize) -> Self {
        Axis {
            nodes: cells + 1,
            origin: lo,
            spacing: (hi - lo) / cells as f64,
            periodic: false,
        }
    }

    /// `cells` nodes covering one period starting at `lo`; the node at `lo + period` is not stored.
    pub fn periodic(lo: f64, period: f64, cells: usize) -> Self {
        Axis {
            nodes: cells,
            origin: lo,
            spacing: period / cells as f64,
            periodic: true,
        }
    }

    /// One node at the centre of each of `cells` intervals on `[lo, hi]`.
    pub fn cell_centered(lo: f64, hi: f64, cells: usize) -> Self {
        let h = (hi - lo) / cells as f64;
        Axis {
            nodes: cells,
            origin: lo + 0.5 * h,
            spacing: h,
            periodic: false,
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    /// Number of intervals: equal to `nodes` on periodic axes, `nodes - 1` otherwise.
    pub fn cells(&self) -> usize {
        if self.periodic {
            self.nodes
        } else {
            self.nodes - 1
        }
    }

    /// Last node coordinate (or the end of the period for periodic axes).
    pub fn upper(&self) -> f64 {
        self.coordinate(self.cells())
    }
}

/// A structured grid over label space with one to three axes.
///
/// Nodes are stored row-major: the last axis varies fastest. Coordinates of a
/// missing axis are zero, which embeds 1D and 2D grids in three dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelGrid {
    axes: Vec<Axis>,
}

impl LabelGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidGrid(format!(
                "a grid has 1 to 3 axes, got {}",
                axes.len()
            )));
        }
        for (k, ax) in axes.iter().enumerate() {
            if ax.nodes < 4 {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} has {} nodes, at least 4 are needed",
                    ax.nodes
                )));
            }
            if !(ax.spacing > 0.0) || !ax.spacing.is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} spacing {} is not positive",
                    ax.spacing
                )));
            }
            if !ax.origin.is_finite() {
                return Err(Error::InvalidGrid(format!("axis {k} origin is not finite")));
            }
        }
        Ok(LabelGrid { axes })
    }

    /// `ndim` closed axes on `[lo, hi]` with `cells` intervals each.
    pub fn cube(lo: f64, hi: f64, cells: usize, ndim: usize) -> Result<Self> {
        LabelGrid::new(vec![Axis::closed(lo, hi, cells); ndim])
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> Result<&Axis> {
        self.axes.get(k).ok_or(Error::InvalidAxis {
            axis: k,
            ndim: self.axes.len(),
        })
    }

    /// Node counts per axis, padded with 1 for missing axes.
    pub fn shape(&self) -> [usize; 3] {
        let mut s = [1; 3];
        for (k, ax) in self.axes.iter().enumerate() {
            s[k] = ax.nodes;
        }
        s
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    pub fn flat(&self, idx: [usize; 3]) -> usize {
        let s = self.shape();
        (idx[0] * s[1] + idx[1]) * s[2] + idx[2]
    }

    pub fn index(&self, flat: usize) -> [usize; 3] {
        let s = self.shape();
        [flat / (s[1] * s[2]), (flat / s[2]) % s[1], flat % s[2]]
    }

    /// Distance in the flat index between neighbours along axis `k`.
    pub fn stride(&self, k: usize) -> usize {
        let s = self.shape();
        s[k + 1..].iter().product()
    }

    pub fn label_at(&self, idx: [usize; 3]) -> Vec3 {
        let mut p = Vec3::zeros();
        for (k, ax) in self.axes.iter().enumerate() {
            p[k] = ax.coordinate(idx[k]);
        }
        p
    }

    pub fn label(&self, flat: usize) -> Vec3 {
        self.label_at(self.index(flat))
    }

    pub fn labels(&self) -> Vec<Vec3> {
        (0..self.node_count()).map(|n| self.label(n)).collect()
    }

    /// True when the node lies within `width` nodes of a non-periodic boundary.
    pub fn in_rind(&self, flat: usize, width: usize) -> bool {
        let idx = self.index(flat);
        self.axes
            .iter()
            .enumerate()
            .any(|(k, ax)| !ax.periodic && (idx[k] < width || idx[k] + width >= ax.nodes))
    }

    /// Volume (area, length) of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    /// Smallest spacing over all axes.
    pub fn min_spacing(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).fold(f64::INFINITY, f64::min)
    }
}
