use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LabelGrid;
use crate::{Error, Mat3, Result, Vec3};

/// Number of components carried at each node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rank {
    Scalar,
    Vector,
    Tensor,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => 3,
            Rank::Tensor => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rank::Scalar => "scalar",
            Rank::Vector => "vector",
            Rank::Tensor => "tensor",
        }
    }
}

/// Values sampled at every node of a [`LabelGrid`].
///
/// Layout: nodes row-major, components innermost. Tensor components are row-major,
/// so entry `(r, c)` of node `n` is `data[9 * n + 3 * r + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: LabelGrid,
    rank: Rank,
    data: Vec<f64>,
}

impl Field {
    pub fn new(grid: LabelGrid, rank: Rank, data: Vec<f64>) -> Result<Self> {
        let expected = grid.node_count() * rank.components();
        if data.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "{} field needs {expected} values, got {}",
                rank.name(),
                data.len()
            )));
        }
        Ok(Field { grid, rank, data })
    }

    pub fn zeros(grid: LabelGrid, rank: Rank) -> Self {
        let n = grid.node_count() * rank.components();
        Field {
            grid,
            rank,
            data: vec![0.0; n],
        }
    }

    pub fn scalar_from_fn<F>(grid: LabelGrid, f: F) -> Self
    where
        F: Fn(&Vec3) -> f64 + Sync,
    {
        let data = (0..grid.node_count())
            .into_par_iter()
            .map(|n| f(&grid.label(n)))
            .collect();
        Field {
            grid,
            rank: Rank::Scalar,
            data,
        }
    }

    pub fn vector_from_fn<F>(grid: LabelGrid, f: F) -> Self
    where
        F: Fn(&Vec3) -> Vec3 + Sync,
    {
        Self::try_vector_from_fn(grid, |_, a| Ok(f(a))).expect("infallible")
    }

    /// Vector field from a function of the flat node index.
    pub fn vector_from_fn_indexed<F>(grid: LabelGrid, f: F) -> Self
    where
        F: Fn(usize) -> Vec3 + Sync,
    {
        Self::try_vector_from_fn(grid, |n, _| Ok(f(n))).expect("infallible")
    }

    pub fn tensor_from_fn<F>(grid: LabelGrid, f: F) -> Self
    where
        F: Fn(&Vec3) -> Mat3 + Sync,
    {
        Self::try_tensor_from_fn(grid, |_, a| Ok(f(a))).expect("infallible")
    }

    /// Fallible per-node construction; `f` receives the flat node index and the label.
    pub fn try_scalar_from_fn<F>(grid: LabelGrid, f: F) -> Result<Self>
    where
        F: Fn(usize, &Vec3) -> Result<f64> + Sync,
    {
        let data = (0..grid.node_count())
            .into_par_iter()
            .map(|n| f(n, &grid.label(n)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Field {
            grid,
            rank: Rank::Scalar,
            data,
        })
    }

    pub fn try_vector_from_fn<F>(grid: LabelGrid, f: F) -> Result<Self>
    where
        F: Fn(usize, &Vec3) -> Result<Vec3> + Sync,
    {
        let nodes = (0..grid.node_count())
            .into_par_iter()
            .map(|n| f(n, &grid.label(n)))
            .collect::<Result<Vec<Vec3>>>()?;
        let data = nodes.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
        Ok(Field {
            grid,
            rank: Rank::Vector,
            data,
        })
    }

    pub fn try_tensor_from_fn<F>(grid: LabelGrid, f: F) -> Result<Self>
    where
        F: Fn(usize, &Vec3) -> Result<Mat3> + Sync,
    {
        let nodes = (0..grid.node_count())
            .into_par_iter()
            .map(|n| f(n, &grid.label(n)))
            .collect::<Result<Vec<Mat3>>>()?;
        let mut data = Vec::with_capacity(nodes.len() * 9);
        for m in &nodes {
            for r in 0..3 {
                for c in 0..3 {
                    data.push(m[(r, c)]);
                }
            }
        }
        Ok(Field {
            grid,
            rank: Rank::Tensor,
            data,
        })
    }

    /// Stack three scalar fields into a vector field, or nine (row-major) into a tensor field.
    pub fn from_components(parts: &[Field]) -> Result<Self> {
        let rank = match parts.len() {
            3 => Rank::Vector,
            9 => Rank::Tensor,
            n => {
                return Err(Error::InvalidGrid(format!(
                    "cannot stack {n} components into a field"
                )))
            }
        };
        let grid = parts[0].grid.clone();
        for p in parts {
            p.expect_rank(Rank::Scalar)?;
            if p.grid != grid {
                return Err(Error::GridMismatch);
            }
        }
        let nc = parts.len();
        let mut data = vec![0.0; grid.node_count() * nc];
        for (c, p) in parts.iter().enumerate() {
            for (n, v) in p.data.iter().enumerate() {
                data[n * nc + c] = *v;
            }
        }
        Ok(Field { grid, rank, data })
    }

    pub fn grid(&self) -> &LabelGrid {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    /// Values of node `n`, all components.
    pub fn node(&self, n: usize) -> &[f64] {
        let c = self.rank.components();
        &self.data[n * c..(n + 1) * c]
    }

    pub fn scalar(&self, n: usize) -> f64 {
        debug_assert_eq!(self.rank, Rank::Scalar);
        self.data[n]
    }

    pub fn vector(&self, n: usize) -> Vec3 {
        debug_assert_eq!(self.rank, Rank::Vector);
        Vec3::new(self.data[3 * n], self.data[3 * n + 1], self.data[3 * n + 2])
    }

    pub fn tensor(&self, n: usize) -> Mat3 {
        debug_assert_eq!(self.rank, Rank::Tensor);
        Mat3::from_row_slice(&self.data[9 * n..9 * n + 9])
    }

    /// Component `c` as a scalar field.
    pub fn component(&self, c: usize) -> Field {
        let nc = self.rank.components();
        assert!(c < nc, "component {c} out of range");
        let data = (0..self.node_count()).map(|n| self.data[n * nc + c]).collect();
        Field {
            grid: self.grid.clone(),
            rank: Rank::Scalar,
            data,
        }
    }

    pub fn expect_rank(&self, rank: Rank) -> Result<()> {
        if self.rank == rank {
            Ok(())
        } else {
            Err(Error::RankMismatch {
                expected: rank.name(),
                found: self.rank.name(),
            })
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        let nc = self.rank.components();
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFinite(i / nc)),
            None => Ok(()),
        }
    }

    /// `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: f64, other: &Field, beta: f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        other.expect_rank(self.rank)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(Field {
            grid: self.grid.clone(),
            rank: self.rank,
            data,
        })
    }

    /// Apply `f` to each value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            rank: self.rank,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Reduce each node to a scalar.
    pub fn map_nodes(&self, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Field {
        let nc = self.rank.components();
        let data = self.data.par_chunks(nc).map(f).collect();
        Field {
            grid: self.grid.clone(),
            rank: Rank::Scalar,
            data,
        }
    }
}
