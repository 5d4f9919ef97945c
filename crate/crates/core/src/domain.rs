//! Convex constraint geometry: boxes, their faces and affine spans.
//!
//! Domains are products of intervals ("boxes"), with ±∞ bounds allowed per
//! coordinate. Faces are represented combinatorially by the set of
//! coordinates pinned at a finite bound; the affine span of a face is then an
//! axis-aligned affine subspace whose projector is diagonal.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for classifying a coordinate as sitting at a bound.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Which bound of an interval a face pins a coordinate to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PinSide {
    AtLower,
    AtUpper,
}

/// A product of closed intervals `{z : lower <= z <= upper}`.
///
/// Entries of `lower` may be `-inf` and entries of `upper` `+inf`; the set is
/// always non-empty and closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxDomain {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidInput("domain dimension must be positive".into()));
        }
        for i in 0..lower.len() {
            let (l, u) = (lower[i], upper[i]);
            if l.is_nan() || u.is_nan() {
                return Err(Error::InvalidInput(format!("NaN bound at coordinate {i}")));
            }
            if l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::InvalidInput(format!(
                    "empty interval at coordinate {i}: [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// All of R^dim.
    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: DVector::from_element(dim, f64::NEG_INFINITY),
            upper: DVector::from_element(dim, f64::INFINITY),
        }
    }

    /// The nonnegative orthant R_+^dim.
    pub fn nonneg(dim: usize) -> Self {
        Self {
            lower: DVector::zeros(dim),
            upper: DVector::from_element(dim, f64::INFINITY),
        }
    }

    /// Concatenate two boxes into their product domain.
    pub fn product(&self, other: &BoxDomain) -> Self {
        let mut lower = Vec::with_capacity(self.dim() + other.dim());
        let mut upper = Vec::with_capacity(self.dim() + other.dim());
        lower.extend(self.lower.iter());
        lower.extend(other.lower.iter());
        upper.extend(self.upper.iter());
        upper.extend(other.upper.iter());
        Self {
            lower: DVector::from_vec(lower),
            upper: DVector::from_vec(upper),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    fn check_dim(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Membership test with an absolute per-coordinate tolerance.
    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> bool {
        z.len() == self.dim()
            && (0..self.dim()).all(|i| z[i] >= self.lower[i] - tol && z[i] <= self.upper[i] + tol)
    }

    /// Euclidean projection onto the box: componentwise clamp.
    pub fn project_point(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(z)?;
        Ok(DVector::from_fn(self.dim(), |i, _| {
            z[i].max(self.lower[i]).min(self.upper[i])
        }))
    }

    /// Classify each coordinate of `z` against the bounds (within `BOUNDARY_TOL`).
    ///
    /// Degenerate intervals (lower == upper) report `AtLower`; callers that
    /// care about the face lattice skip them via [`BoxDomain::is_degenerate`].
    pub fn active_pins(&self, z: &DVector<f64>) -> Vec<Option<PinSide>> {
        (0..self.dim())
            .map(|i| {
                if self.lower[i].is_finite() && (z[i] - self.lower[i]).abs() <= BOUNDARY_TOL {
                    Some(PinSide::AtLower)
                } else if self.upper[i].is_finite() && (z[i] - self.upper[i]).abs() <= BOUNDARY_TOL {
                    Some(PinSide::AtUpper)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Whether coordinate `i` has a degenerate (single point) interval.
    pub fn is_degenerate(&self, i: usize) -> bool {
        self.lower[i] == self.upper[i]
    }

    /// The field of the projected dynamics: `f - P_{N_K(z)} f`.
    ///
    /// For a box the normal cone at `z` is spanned by outward coordinate
    /// directions of the active bounds, so the projection residual is the
    /// componentwise bracket: a component is zeroed exactly when it pushes
    /// out of an active bound.
    pub fn projected_field(&self, z: &DVector<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(z)?;
        self.check_dim(f)?;
        if !self.contains(z, BOUNDARY_TOL) {
            return Err(Error::OutsideDomain(
                "projected_field requires z in the domain".into(),
            ));
        }
        let mut v = f.clone();
        for i in 0..self.dim() {
            let at_lower = self.lower[i].is_finite() && (z[i] - self.lower[i]).abs() <= BOUNDARY_TOL;
            let at_upper = self.upper[i].is_finite() && (z[i] - self.upper[i]).abs() <= BOUNDARY_TOL;
            if (at_lower && f[i] < 0.0) || (at_upper && f[i] > 0.0) {
                v[i] = 0.0;
            }
        }
        Ok(v)
    }

    /// The minimal face of the box containing every point of `points`.
    ///
    /// A coordinate is pinned iff every point sits at the same finite bound
    /// (within `BOUNDARY_TOL`). Degenerate coordinates are never pinned.
    pub fn minimal_face_containing(&self, points: &[DVector<f64>]) -> Result<FaceDescriptor> {
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "minimal_face_containing needs at least one point".into(),
            ));
        }
        for p in points {
            self.check_dim(p)?;
            if !self.contains(p, BOUNDARY_TOL) {
                return Err(Error::OutsideDomain(
                    "minimal_face_containing: point outside the domain".into(),
                ));
            }
        }
        let mut pinned = BTreeMap::new();
        for i in 0..self.dim() {
            if self.is_degenerate(i) {
                continue;
            }
            if self.lower[i].is_finite()
                && points.iter().all(|p| (p[i] - self.lower[i]).abs() <= BOUNDARY_TOL)
            {
                pinned.insert(i, PinSide::AtLower);
            } else if self.upper[i].is_finite()
                && points.iter().all(|p| (p[i] - self.upper[i]).abs() <= BOUNDARY_TOL)
            {
                pinned.insert(i, PinSide::AtUpper);
            }
        }
        Ok(FaceDescriptor {
            domain: self.clone(),
            pinned,
        })
    }

    /// Enumerate every face of the box as a pinned map.
    ///
    /// Count: 3^(#two-sided) * 2^(#one-sided finite) over non-degenerate
    /// coordinates, including the empty pin (the box itself). Guarded by the
    /// total number of finite bounds.
    pub fn enumerate_faces(&self) -> Result<Vec<FaceDescriptor>> {
        let mut finite_bounds = 0usize;
        for i in 0..self.dim() {
            if self.is_degenerate(i) {
                continue;
            }
            finite_bounds += self.lower[i].is_finite() as usize;
            finite_bounds += self.upper[i].is_finite() as usize;
        }
        if finite_bounds > 20 {
            return Err(Error::Capacity(format!(
                "enumerate_faces guard: {finite_bounds} finite bounds exceed the limit of 20"
            )));
        }
        let mut faces = vec![BTreeMap::new()];
        for i in 0..self.dim() {
            if self.is_degenerate(i) {
                continue;
            }
            let mut options: Vec<Option<PinSide>> = vec![None];
            if self.lower[i].is_finite() {
                options.push(Some(PinSide::AtLower));
            }
            if self.upper[i].is_finite() {
                options.push(Some(PinSide::AtUpper));
            }
            let mut next = Vec::with_capacity(faces.len() * options.len());
            for face in &faces {
                for opt in &options {
                    let mut f = face.clone();
                    if let Some(side) = opt {
                        f.insert(i, *side);
                    }
                    next.push(f);
                }
            }
            faces = next;
        }
        Ok(faces
            .into_iter()
            .map(|pinned| FaceDescriptor {
                domain: self.clone(),
                pinned,
            })
            .collect())
    }
}

/// A face of a box, identified by its pinned coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceDescriptor {
    domain: BoxDomain,
    pinned: BTreeMap<usize, PinSide>,
}

impl FaceDescriptor {
    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn pinned(&self) -> &BTreeMap<usize, PinSide> {
        &self.pinned
    }

    /// The bound value a pinned coordinate is fixed at.
    pub fn pinned_value(&self, i: usize) -> Option<f64> {
        self.pinned.get(&i).map(|side| match side {
            PinSide::AtLower => self.domain.lower()[i],
            PinSide::AtUpper => self.domain.upper()[i],
        })
    }

    /// Membership in the face (as a subset of the domain).
    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> bool {
        if !self.domain.contains(z, tol) {
            return false;
        }
        self.pinned
            .iter()
            .all(|(&i, _)| (z[i] - self.pinned_value(i).unwrap()).abs() <= tol)
    }

    /// Set containment between faces: F ⊆ G iff G's pins are a subset of F's.
    pub fn subset_of(&self, other: &FaceDescriptor) -> bool {
        other
            .pinned
            .iter()
            .all(|(i, side)| self.pinned.get(i) == Some(side))
    }

    /// Affine span of the face with its orthogonal projector.
    ///
    /// The anchor holds pinned coordinates at their bounds and zeros
    /// elsewhere; the projector is diagonal with zeros on pinned coordinates.
    pub fn affine_span(&self) -> AffineSubspace {
        let dim = self.domain.dim();
        let anchor = DVector::from_fn(dim, |i, _| self.pinned_value(i).unwrap_or(0.0));
        let projector = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j && !self.pinned.contains_key(&i) {
                1.0
            } else {
                0.0
            }
        });
        AffineSubspace { anchor, projector }
    }
}

/// An affine subspace `anchor + range(projector)`.
///
/// The projector is the orthogonal projection onto the direction space (the
/// orthogonal complement of the subspace's normal cone N_V, which is
/// represented implicitly as range(I - projector)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineSubspace {
    anchor: DVector<f64>,
    projector: DMatrix<f64>,
}

impl AffineSubspace {
    pub fn new(anchor: DVector<f64>, projector: DMatrix<f64>) -> Result<Self> {
        if projector.nrows() != projector.ncols() || projector.nrows() != anchor.len() {
            return Err(Error::DimensionMismatch {
                expected: anchor.len(),
                got: projector.nrows(),
            });
        }
        let sym_err = (&projector - projector.transpose()).norm();
        let idem_err = (&projector * &projector - &projector).norm();
        if sym_err > 1e-10 || idem_err > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "projector not symmetric idempotent (sym {sym_err:.2e}, idem {idem_err:.2e})"
            )));
        }
        Ok(Self { anchor, projector })
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn anchor(&self) -> &DVector<f64> {
        &self.anchor
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    /// Orthogonal projection of a point onto the subspace.
    pub fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.anchor + &self.projector * (z - &self.anchor)
    }
}
