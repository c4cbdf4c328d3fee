use nalgebra::{DMatrix, DVector};

use crate::CutPlaneError;

/// A polytope `{x in R^m : Ax >= b}` stored as the pair of cut normals `A`
/// (one row per plane) and offsets `b`.
///
/// For the cutting-plane machinery the polytope must be bounded with
/// nonempty interior and carry at least `m + 1` planes; boundedness is
/// established operationally by a successful volumetric-center computation
/// (see [`crate::volumetric_center`]), which every use here performs before
/// relying on the polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Polytope {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, CutPlaneError> {
        if a.nrows() != b.len() {
            return Err(CutPlaneError::InvalidPolytope(format!(
                "A has {} rows but b has {} entries",
                a.nrows(),
                b.len()
            )));
        }
        if a.ncols() == 0 {
            return Err(CutPlaneError::InvalidPolytope("dimension is zero".into()));
        }
        if a.nrows() < a.ncols() + 1 {
            return Err(CutPlaneError::TooFewPlanes {
                needed: a.ncols() + 1,
                got: a.nrows(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(CutPlaneError::InvalidPolytope(
                "non-finite plane data".into(),
            ));
        }
        Ok(Self { a, b })
    }

    /// Axis-aligned box `lo <= x <= hi` as 2m planes.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self, CutPlaneError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(CutPlaneError::InvalidPolytope(
                "box bounds must be nonempty and of equal length".into(),
            ));
        }
        let m = lo.len();
        let mut a = DMatrix::zeros(2 * m, m);
        let mut b = DVector::zeros(2 * m);
        for i in 0..m {
            if !(lo[i] < hi[i]) {
                return Err(CutPlaneError::InvalidPolytope(format!(
                    "box bounds must satisfy lo < hi on axis {i}"
                )));
            }
            a[(i, i)] = 1.0;
            b[i] = lo[i];
            a[(m + i, i)] = -1.0;
            b[m + i] = -hi[i];
        }
        Ok(Self { a, b })
    }

    /// Dimension m of the ambient space.
    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// Current number of planes k.
    pub fn num_planes(&self) -> usize {
        self.a.nrows()
    }

    pub fn normals(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.b
    }

    /// Slack vector `Ax - b`.
    pub fn slacks(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    /// Minimum slack and the plane index achieving it.
    pub fn min_slack(&self, x: &DVector<f64>) -> (usize, f64) {
        let slacks = self.slacks(x);
        let mut best = (0usize, f64::INFINITY);
        for (i, &s) in slacks.iter().enumerate() {
            if s < best.1 {
                best = (i, s);
            }
        }
        best
    }

    pub fn is_interior(&self, x: &DVector<f64>) -> bool {
        self.min_slack(x).1 > 0.0
    }

    /// Appends the plane `normal . x >= offset`.
    pub fn push_plane(&mut self, normal: &DVector<f64>, offset: f64) {
        let k = self.a.nrows();
        let mut a = self.a.clone().insert_row(k, 0.0);
        a.row_mut(k).copy_from(&normal.transpose());
        self.a = a;
        self.b = self.b.clone().insert_row(k, offset);
    }

    /// Removes plane `i`.
    pub fn remove_plane(&mut self, i: usize) {
        self.a = self.a.clone().remove_row(i);
        self.b = self.b.clone().remove_row(i);
    }
}
