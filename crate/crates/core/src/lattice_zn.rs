//! The cubic lattice Z^N and its relation to Q(A_N) through the projection
//! `P_i` that deletes coordinate `i`.
//!
//! Quads and cubes are [`OrientedCell`]s of kind `Quad`/`Cube` whose points
//! have N coordinates and whose directions are Z^N indices. Z^N direction `z`
//! corresponds to Q(A_N) direction `z` for `z < i` and `z + 1` otherwise.
//!
//! Preimages are taken on the level `Σ n = level` (0 by default), so
//! `P_i(x_ii) = x`, `P_i(x_ij) = x_j`, `P_i(x_jk) = x_jk` and
//! `P_i(x_ī jkℓ) = x_jkℓ` hold with the base point `b` of the Q(A_N) cells
//! chosen as `unproject(x) - 2 e_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_qan::{permutation_sign, CellChain, CellKind, LatticePoint, OrientedCell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    pub dropped_direction: usize,
    /// Coordinate sum of the Q(A_N) points that `unproject` lands on.
    pub level: i64,
}

impl Projection {
    pub fn new(dropped_direction: usize) -> Self {
        Self {
            dropped_direction,
            level: 0,
        }
    }

    /// `P_i`: deletes coordinate `i`.
    pub fn project_point(&self, p: &LatticePoint) -> Result<LatticePoint> {
        let i = self.dropped_direction;
        if i >= p.dim() {
            return Err(Error::InvalidDirection(format!(
                "cannot drop coordinate {i} of a point with {} coordinates",
                p.dim()
            )));
        }
        let mut c = p.coords().to_vec();
        c.remove(i);
        Ok(LatticePoint::new(c))
    }

    /// Inverse of `P_i` on the declared level.
    pub fn unproject(&self, p: &LatticePoint) -> LatticePoint {
        let i = self.dropped_direction;
        assert!(i <= p.dim(), "dropped direction {i} out of range");
        let mut c = p.coords().to_vec();
        c.insert(i, self.level - p.level());
        LatticePoint::new(c)
    }

    /// Q(A_N) direction of a Z^N direction.
    pub fn lift_direction(&self, z: usize) -> usize {
        if z < self.dropped_direction {
            z
        } else {
            z + 1
        }
    }

    /// Z^N direction of a Q(A_N) direction; `None` for the dropped one.
    pub fn project_direction(&self, q: usize) -> Option<usize> {
        use std::cmp::Ordering::*;
        match q.cmp(&self.dropped_direction) {
            Less => Some(q),
            Equal => None,
            Greater => Some(q - 1),
        }
    }

    fn check(&self, cell: &OrientedCell, kind: CellKind) -> Result<()> {
        if cell.kind != kind {
            return Err(Error::InvalidCell(format!("expected {kind:?}, got {cell}")));
        }
        if self.dropped_direction > cell.ambient_dim() {
            return Err(Error::InvalidDirection(format!(
                "projection P_{} incompatible with Z^{}",
                self.dropped_direction,
                cell.ambient_dim()
            )));
        }
        Ok(())
    }

    /// Base point `b` of the Q(A_N) cells corresponding to a Z^N cell based at `q`.
    fn lifted_base(&self, q: &LatticePoint) -> LatticePoint {
        self.unproject(q).shifted(self.dropped_direction, -2)
    }

    fn literal_dirs(&self, cell: &OrientedCell) -> Vec<usize> {
        std::iter::once(self.dropped_direction)
            .chain(cell.dirs.iter().map(|&z| self.lift_direction(z)))
            .collect()
    }

    /// `{jk} ↦ T_i⌊ijk⌋ − ⌈ijk⌉`, with the bracket read in the literal index
    /// order `i, j, k` and canonicalized afterwards.
    pub fn quad_correspondence(&self, quad: &OrientedCell) -> Result<CellChain> {
        self.check(quad, CellKind::Quad)?;
        let i = self.dropped_direction;
        let b = self.lifted_base(&quad.base);
        let dirs = self.literal_dirs(quad);
        let s = i64::from(quad.sign);
        let mut out = CellChain::new();
        out.add_cell(
            &OrientedCell::new(CellKind::BlackTriangle, b.shifted(i, 1), &dirs, 1)?,
            s,
        );
        out.add_cell(
            &OrientedCell::new(CellKind::WhiteTriangle, b, &dirs, 1)?,
            -s,
        );
        Ok(out)
    }

    /// `{jkℓ} ↦ −T_i⌊ijkℓ⌋ + [ijkℓ] − T_ī⌈ijkℓ⌉` (literal index order).
    ///
    /// This chain has the opposite orientation to the one induced through
    /// [`Self::quad_correspondence`]: `corr(∂ cube) = −∂ cube_correspondence(cube)`.
    pub fn cube_correspondence(&self, cube: &OrientedCell) -> Result<CellChain> {
        self.check(cube, CellKind::Cube)?;
        let i = self.dropped_direction;
        let b = self.lifted_base(&cube.base);
        let dirs = self.literal_dirs(cube);
        let s = i64::from(cube.sign);
        let mut out = CellChain::new();
        out.add_cell(
            &OrientedCell::new(CellKind::BlackTetrahedron, b.shifted(i, 1), &dirs, 1)?,
            -s,
        );
        out.add_cell(
            &OrientedCell::new(CellKind::Octahedron, b.clone(), &dirs, 1)?,
            s,
        );
        out.add_cell(
            &OrientedCell::new(CellKind::WhiteTetrahedron, b.shifted(i, -1), &dirs, 1)?,
            -s,
        );
        Ok(out)
    }

    /// The octahedron whose exterior derivative, pulled back through `P_i`,
    /// equals `d𝔏` on the cube: the octahedron of the cube's preimage with
    /// the orientation induced by the quad correspondence.
    pub fn matching_octahedron(&self, cube: &OrientedCell) -> Result<OrientedCell> {
        self.check(cube, CellKind::Cube)?;
        let b = self.lifted_base(&cube.base);
        let dirs = self.literal_dirs(cube);
        OrientedCell::new(CellKind::Octahedron, b, &dirs, -cube.sign)
    }

    /// Sign relating the literal octahedron `[i j k ℓ]` to its canonical form.
    pub fn literal_octahedron_sign(&self, cube: &OrientedCell) -> Result<i8> {
        permutation_sign(&self.literal_dirs(cube))
    }

    /// Linear extension of [`Self::quad_correspondence`] to chains of quads.
    pub fn pull_back_chain(&self, chain: &CellChain) -> Result<CellChain> {
        let mut out = CellChain::new();
        for (quad, c) in chain.iter() {
            out.add_chain(&self.quad_correspondence(quad)?, c);
        }
        Ok(out)
    }

    /// Q(A_N) preimage of a Z^N point.
    pub fn lift_point(&self, v: &LatticePoint) -> LatticePoint {
        self.unproject(v)
    }
}

pub fn project_point(projection: &Projection, p: &LatticePoint) -> Result<LatticePoint> {
    projection.project_point(p)
}

/// Six signed facets of a cube: `{jk} − {jℓ} + {kℓ} − T_ℓ{jk} + T_k{jℓ} − T_j{kℓ}`.
pub fn cube_facets(cube: &OrientedCell) -> Result<CellChain> {
    if cube.kind != CellKind::Cube {
        return Err(Error::InvalidCell(format!("expected a cube, got {cube}")));
    }
    cube.facets()
}
