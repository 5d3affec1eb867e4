//! Oriented cell complex of the root lattice Q(A_N).
//!
//! Points carry ambient coordinates in Z^{N+1}; the zero-sum constraint is not
//! enforced because the vertices of a cell live on neighbouring levels of the
//! base point. The same machinery also hosts the cubic cells of Z^N
//! (`Segment`, `Quad`, `Cube`) so both lattices share one chain engine.
//!
//! Every cell is stored canonically: strictly increasing direction tuple plus a
//! separate orientation sign. A [`CellChain`] keys its terms by the unsigned
//! canonical cell, which makes cancellation exact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer coordinate vector addressing one field site.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Coordinate sum.
    pub fn level(&self) -> i64 {
        self.0.iter().sum()
    }

    /// `T_dir^steps` applied to the point.
    pub fn shifted(&self, dir: usize, steps: i64) -> Self {
        assert!(
            dir < self.0.len(),
            "direction {dir} out of range for ambient dimension {}",
            self.0.len()
        );
        let mut c = self.0.clone();
        c[dir] += steps;
        Self(c)
    }

    /// The point plus the sum of unit vectors `e_d` for `d` in `dirs`.
    pub fn plus_units(&self, dirs: &[usize]) -> Self {
        let mut c = self.0.clone();
        for &d in dirs {
            c[d] += 1;
        }
        Self(c)
    }

    /// Pads the coordinate vector with zeros up to `dim` entries.
    pub fn extended(&self, dim: usize) -> Self {
        let mut c = self.0.clone();
        if c.len() < dim {
            c.resize(dim, 0);
        }
        Self(c)
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, c) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Vertex,
    Edge,
    BlackTriangle,
    WhiteTriangle,
    BlackTetrahedron,
    Octahedron,
    WhiteTetrahedron,
    /// 1-cell of Z^N: `{x, x_j}`.
    Segment,
    Quad,
    Cube,
}

impl CellKind {
    /// Number of direction indices in the bracket.
    pub fn arity(self) -> usize {
        match self {
            CellKind::Vertex => 0,
            CellKind::Segment => 1,
            CellKind::Edge | CellKind::Quad => 2,
            CellKind::BlackTriangle | CellKind::WhiteTriangle | CellKind::Cube => 3,
            CellKind::BlackTetrahedron | CellKind::Octahedron | CellKind::WhiteTetrahedron => 4,
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            CellKind::Vertex => 0,
            CellKind::Edge | CellKind::Segment => 1,
            CellKind::BlackTriangle | CellKind::WhiteTriangle | CellKind::Quad => 2,
            CellKind::BlackTetrahedron
            | CellKind::Octahedron
            | CellKind::WhiteTetrahedron
            | CellKind::Cube => 3,
        }
    }

    /// Cells of the cubic lattice Z^N.
    pub fn is_cubic(self) -> bool {
        matches!(self, CellKind::Segment | CellKind::Quad | CellKind::Cube)
    }

    pub fn is_triangle(self) -> bool {
        matches!(self, CellKind::BlackTriangle | CellKind::WhiteTriangle)
    }
}

/// Parity of the permutation sorting `dirs`, or `None` on a repeated index.
fn sorting_parity(dirs: &mut [usize]) -> Option<i8> {
    let mut sign = 1i8;
    // insertion sort, counting transpositions
    for a in 1..dirs.len() {
        let mut b = a;
        while b > 0 && dirs[b - 1] > dirs[b] {
            dirs.swap(b - 1, b);
            sign = -sign;
            b -= 1;
        }
    }
    if dirs.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// Sign of the permutation taking `dirs` to increasing order.
pub fn permutation_sign(dirs: &[usize]) -> Result<i8> {
    let mut d = dirs.to_vec();
    sorting_parity(&mut d)
        .ok_or_else(|| Error::InvalidCell(format!("repeated direction in {dirs:?}")))
}

/// An oriented d-cell: base point, strictly increasing directions, kind and sign.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrientedCell {
    pub kind: CellKind,
    pub base: LatticePoint,
    pub dirs: Vec<usize>,
    pub sign: i8,
}

/// Builds the canonical oriented cell from a possibly unsorted direction tuple.
pub fn canonicalize(
    kind: CellKind,
    base: LatticePoint,
    dirs: &[usize],
    sign: i8,
) -> Result<OrientedCell> {
    OrientedCell::new(kind, base, dirs, sign)
}

impl OrientedCell {
    pub fn new(kind: CellKind, base: LatticePoint, dirs: &[usize], sign: i8) -> Result<Self> {
        if dirs.len() != kind.arity() {
            return Err(Error::InvalidCell(format!(
                "{kind:?} expects {} directions, got {dirs:?}",
                kind.arity()
            )));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidCell(format!(
                "sign must be +1 or -1, got {sign}"
            )));
        }
        if let Some(&d) = dirs.iter().find(|&&d| d >= base.dim()) {
            return Err(Error::InvalidCell(format!(
                "direction {d} outside ambient dimension {}",
                base.dim()
            )));
        }
        let mut sorted = dirs.to_vec();
        let parity = sorting_parity(&mut sorted)
            .ok_or_else(|| Error::InvalidCell(format!("repeated direction in {dirs:?}")))?;
        Ok(Self {
            kind,
            base,
            dirs: sorted,
            sign: sign * parity,
        })
    }

    /// Positively oriented cell; panics on invalid input. Meant for literals.
    pub fn positive(kind: CellKind, base: LatticePoint, dirs: &[usize]) -> Self {
        Self::new(kind, base, dirs, 1).expect("valid cell literal")
    }

    pub fn vertex(point: LatticePoint) -> Self {
        Self {
            kind: CellKind::Vertex,
            base: point,
            dirs: Vec::new(),
            sign: 1,
        }
    }

    pub fn dimension(&self) -> usize {
        self.kind.dimension()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.dim()
    }

    /// Same cell with sign +1.
    pub fn unsigned(&self) -> Self {
        Self {
            sign: 1,
            ..self.clone()
        }
    }

    pub fn with_sign(&self, sign: i8) -> Self {
        Self {
            sign,
            ..self.clone()
        }
    }

    pub fn negated(&self) -> Self {
        self.with_sign(-self.sign)
    }

    /// Translates the base by `steps * e_direction`.
    pub fn shift(&self, direction: usize, steps: i64) -> Self {
        Self {
            base: self.base.shifted(direction, steps),
            ..self.clone()
        }
    }

    /// Same cell embedded in a larger ambient lattice (extra coordinates zero).
    pub fn extended(&self, dim: usize) -> Self {
        Self {
            base: self.base.extended(dim),
            ..self.clone()
        }
    }

    fn with_dirs(&self, kind: CellKind, dirs: Vec<usize>, sign: i8) -> Self {
        Self {
            kind,
            base: self.base.clone(),
            dirs,
            sign,
        }
    }

    pub fn vertices(&self) -> Vec<LatticePoint> {
        let b = &self.base;
        let d = &self.dirs;
        match self.kind {
            CellKind::Vertex => vec![b.clone()],
            // x_i-type vertices
            CellKind::Edge | CellKind::BlackTriangle | CellKind::BlackTetrahedron => {
                d.iter().map(|&i| b.plus_units(&[i])).collect()
            }
            // x_ij-type vertices
            CellKind::WhiteTriangle | CellKind::Octahedron => {
                let mut out = Vec::new();
                for a in 0..d.len() {
                    for c in a + 1..d.len() {
                        out.push(b.plus_units(&[d[a], d[c]]));
                    }
                }
                out
            }
            CellKind::WhiteTetrahedron => (0..4)
                .rev()
                .map(|skip| {
                    let rest: Vec<usize> = omit(d, skip);
                    b.plus_units(&rest)
                })
                .collect(),
            CellKind::Segment | CellKind::Quad | CellKind::Cube => {
                let n = d.len();
                (0u32..1 << n)
                    .map(|mask| {
                        let sel: Vec<usize> = (0..n)
                            .filter(|&t| mask & (1 << t) != 0)
                            .map(|t| d[t])
                            .collect();
                        b.plus_units(&sel)
                    })
                    .collect()
            }
        }
    }

    pub fn has_vertex(&self, p: &LatticePoint) -> bool {
        self.vertices().iter().any(|v| v == p)
    }

    /// Signed facet chain, following the alternating sign recipe that puts a
    /// `+` on the last index.
    pub fn facets(&self) -> Result<CellChain> {
        let m = self.dirs.len();
        let recipe = |p: usize| -> i64 {
            if (m - 1 - p).is_multiple_of(2) {
                1
            } else {
                -1
            }
        };
        let s = i64::from(self.sign);
        let mut out = CellChain::new();
        match self.kind {
            CellKind::Vertex => {
                return Err(Error::InvalidCell("a vertex has no facets".into()));
            }
            CellKind::Edge => {
                // [ij] -> x_i - x_j
                out.add_cell(
                    &OrientedCell::vertex(self.base.plus_units(&[self.dirs[0]])),
                    s,
                );
                out.add_cell(
                    &OrientedCell::vertex(self.base.plus_units(&[self.dirs[1]])),
                    -s,
                );
            }
            CellKind::BlackTriangle | CellKind::BlackTetrahedron => {
                let sub = if self.kind == CellKind::BlackTriangle {
                    CellKind::Edge
                } else {
                    CellKind::BlackTriangle
                };
                for p in 0..m {
                    out.add_cell(&self.with_dirs(sub, omit(&self.dirs, p), 1), s * recipe(p));
                }
            }
            CellKind::WhiteTriangle | CellKind::WhiteTetrahedron => {
                let sub = if self.kind == CellKind::WhiteTriangle {
                    CellKind::Edge
                } else {
                    CellKind::WhiteTriangle
                };
                for p in 0..m {
                    let f = self
                        .with_dirs(sub, omit(&self.dirs, p), 1)
                        .shift(self.dirs[p], 1);
                    out.add_cell(&f, s * recipe(p));
                }
            }
            CellKind::Octahedron => {
                for p in 0..m {
                    let rest = omit(&self.dirs, p);
                    let black = self
                        .with_dirs(CellKind::BlackTriangle, rest.clone(), 1)
                        .shift(self.dirs[p], 1);
                    out.add_cell(&black, s * recipe(p));
                    out.add_cell(
                        &self.with_dirs(CellKind::WhiteTriangle, rest, 1),
                        s * recipe(p),
                    );
                }
            }
            CellKind::Segment | CellKind::Quad | CellKind::Cube => {
                let sub = match self.kind {
                    CellKind::Segment => CellKind::Vertex,
                    CellKind::Quad => CellKind::Segment,
                    _ => CellKind::Quad,
                };
                for p in 0..m {
                    let near = self.with_dirs(sub, omit(&self.dirs, p), 1);
                    let far = near.shift(self.dirs[p], 1);
                    out.add_cell(&near, s * recipe(p));
                    out.add_cell(&far, -s * recipe(p));
                }
            }
        }
        Ok(out)
    }

    /// The 3D corner of a 3-cell: facet terms containing `center`.
    pub fn corner_at(&self, center: &LatticePoint) -> Result<CellChain> {
        if self.dimension() != 3 {
            return Err(Error::InvalidCell(format!(
                "corners are defined on 3-cells, got {:?}",
                self.kind
            )));
        }
        if !self.has_vertex(center) {
            return Err(Error::NotAVertex {
                cell: format!("{self}"),
                point: center.clone(),
            });
        }
        Ok(self.facets()?.filter(|c| c.has_vertex(center)))
    }
}

/// Free-function form of [`OrientedCell::facets`].
pub fn facets(cell: &OrientedCell) -> Result<CellChain> {
    cell.facets()
}

/// Free-function form of [`OrientedCell::corner_at`].
pub fn corner_at(cell3: &OrientedCell, center: &LatticePoint) -> Result<CellChain> {
    cell3.corner_at(center)
}

pub fn shift(cell: &OrientedCell, direction: usize, steps: i64) -> OrientedCell {
    cell.shift(direction, steps)
}

/// Two d-cells are adjacent when some (d-1)-cell occurs in both facet chains
/// with opposite orientation.
pub fn is_adjacent(a: &OrientedCell, b: &OrientedCell) -> Result<bool> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch(a.dimension(), b.dimension()));
    }
    let fa = a.facets()?;
    let fb = b.facets()?;
    let shared = fa.iter().any(|(cell, ca)| fb.coefficient_of(cell) * ca < 0);
    Ok(shared)
}

fn omit(dirs: &[usize], p: usize) -> Vec<usize> {
    dirs.iter()
        .enumerate()
        .filter(|&(q, _)| q != p)
        .map(|(_, &d)| d)
        .collect()
}

impl fmt::Debug for OrientedCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for OrientedCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (open, close) = match self.kind {
            CellKind::Vertex => ("<", ">"),
            CellKind::Edge | CellKind::Octahedron => ("[", "]"),
            CellKind::BlackTriangle | CellKind::BlackTetrahedron => ("⌊", "⌋"),
            CellKind::WhiteTriangle | CellKind::WhiteTetrahedron => ("⌈", "⌉"),
            CellKind::Segment | CellKind::Quad | CellKind::Cube => ("{", "}"),
        };
        let sign = if self.sign < 0 { "-" } else { "" };
        let dirs: Vec<String> = self.dirs.iter().map(|d| d.to_string()).collect();
        write!(f, "{sign}{open}{}{close}@{}", dirs.join(" "), self.base)
    }
}

/// Formal integer combination of oriented cells.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellChain {
    terms: BTreeMap<OrientedCell, i64>,
}

impl CellChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_cell(cell: &OrientedCell) -> Self {
        let mut c = Self::new();
        c.add_cell(cell, 1);
        c
    }

    /// Adds `coeff` copies of the oriented cell.
    pub fn add_cell(&mut self, cell: &OrientedCell, coeff: i64) {
        let c = coeff * i64::from(cell.sign);
        if c == 0 {
            return;
        }
        let key = cell.unsigned();
        let entry = self.terms.entry(key.clone()).or_insert(0);
        *entry += c;
        if *entry == 0 {
            self.terms.remove(&key);
        }
    }

    pub fn add_chain(&mut self, other: &CellChain, scale: i64) {
        for (cell, c) in other.iter() {
            self.add_cell(cell, c * scale);
        }
    }

    pub fn scaled(&self, k: i64) -> Self {
        let mut out = Self::new();
        out.add_chain(self, k);
        out
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Iterates `(unsigned canonical cell, coefficient)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&OrientedCell, i64)> + '_ {
        self.terms.iter().map(|(c, &k)| (c, k))
    }

    /// Coefficient of the given oriented cell (its sign is taken into account).
    pub fn coefficient_of(&self, cell: &OrientedCell) -> i64 {
        self.terms.get(&cell.unsigned()).copied().unwrap_or(0) * i64::from(cell.sign)
    }

    /// Terms with coefficient ±1 returned as oriented cells.
    pub fn oriented_cells(&self) -> Vec<OrientedCell> {
        self.terms
            .iter()
            .flat_map(|(c, &k)| {
                let s = if k > 0 { 1 } else { -1 };
                std::iter::repeat_n(c.with_sign(s), k.unsigned_abs() as usize)
            })
            .collect()
    }

    pub fn max_abs_coefficient(&self) -> i64 {
        self.terms.values().map(|k| k.abs()).max().unwrap_or(0)
    }

    pub fn filter(&self, mut keep: impl FnMut(&OrientedCell) -> bool) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(c, _)| keep(c))
                .map(|(c, &k)| (c.clone(), k))
                .collect(),
        }
    }

    /// Linear extension of [`OrientedCell::facets`].
    pub fn boundary(&self) -> Result<Self> {
        let mut out = Self::new();
        for (cell, c) in self.iter() {
            out.add_chain(&cell.facets()?, c);
        }
        Ok(out)
    }

    /// Applies a cell map term by term (e.g. a shift or an embedding).
    pub fn map_cells(&self, mut f: impl FnMut(&OrientedCell) -> OrientedCell) -> Self {
        let mut out = Self::new();
        for (cell, c) in self.iter() {
            out.add_cell(&f(cell), c);
        }
        out
    }

    pub fn vertex_set(&self) -> BTreeSet<LatticePoint> {
        self.terms.keys().flat_map(|c| c.vertices()).collect()
    }

    pub fn ambient_dim(&self) -> Option<usize> {
        self.terms.keys().next().map(|c| c.ambient_dim())
    }
}

impl fmt::Debug for CellChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CellChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (cell, k)) in self.terms.iter().enumerate() {
            let sep = match (n, *k < 0) {
                (0, false) => "",
                (0, true) => "-",
                (_, false) => " + ",
                (_, true) => " - ",
            };
            let mag = k.abs();
            if mag == 1 {
                write!(f, "{sep}{cell}")?;
            } else {
                write!(f, "{sep}{mag}·{cell}")?;
            }
        }
        Ok(())
    }
}

impl FromIterator<OrientedCell> for CellChain {
    fn from_iter<I: IntoIterator<Item = OrientedCell>>(iter: I) -> Self {
        let mut out = Self::new();
        for c in iter {
            out.add_cell(&c, 1);
        }
        out
    }
}

impl AddAssign<&CellChain> for CellChain {
    fn add_assign(&mut self, rhs: &CellChain) {
        self.add_chain(rhs, 1);
    }
}

impl Add for CellChain {
    type Output = CellChain;
    fn add(mut self, rhs: CellChain) -> CellChain {
        self.add_chain(&rhs, 1);
        self
    }
}

impl Sub for CellChain {
    type Output = CellChain;
    fn sub(mut self, rhs: CellChain) -> CellChain {
        self.add_chain(&rhs, -1);
        self
    }
}

impl Neg for CellChain {
    type Output = CellChain;
    fn neg(self) -> CellChain {
        self.scaled(-1)
    }
}
