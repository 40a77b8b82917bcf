//! Atomic sets and the quantities attached to them: atomic norm, dual
//! norm, equivalence constant against the Euclidean norm, best s-term
//! approximation and the tail distance to the s-sparse set.
//!
//! Three concrete sets are supported:
//! * the canonical orthonormal basis (atomic norm = l1),
//! * a finite frame given by its `d x N` synthesis matrix (atomic norm
//!   = minimal l1 coefficient mass),
//! * the manifold of unit rank-one matrices (atomic norm = nuclear).

mod approx;
mod equiv;

pub use approx::ApproxOptions;
pub(crate) use approx::frame_support_value;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::solvers::exact::{enumeration_cost, min_l1_equality, DEFAULT_MAX_CANDIDATES};
use crate::solvers::SolverOptions;

/// Reconstruction tolerance for decompositions.
pub const TOL_RECON: f64 = 1e-8;
/// Relative membership tolerance for the s-sparse set.
pub const TOL_MEMBERSHIP: f64 = 1e-6;

/// Shape of a signal in the ambient Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn flat_dim(&self) -> usize {
        match *self {
            Shape::Vector(d) => d,
            Shape::Matrix(r, c) => r * c,
        }
    }
}

/// An element of the ambient space with a flat (column-major) view.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    shape: Shape,
    data: DVector<f64>,
}

impl Signal {
    pub fn vector(data: DVector<f64>) -> Signal {
        let d = data.len();
        Signal { shape: Shape::Vector(d), data }
    }

    pub fn from_slice(data: &[f64]) -> Signal {
        Signal::vector(DVector::from_column_slice(data))
    }

    pub fn matrix(m: DMatrix<f64>) -> Signal {
        let shape = Shape::Matrix(m.nrows(), m.ncols());
        Signal { shape, data: DVector::from_column_slice(m.as_slice()) }
    }

    /// Reinterpret a flat vector in the shape demanded by `set`.
    pub fn reshape_for(set: &AtomicSet, flat: DVector<f64>) -> Result<Signal> {
        if flat.len() != set.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: set.ambient_dim(), got: flat.len() });
        }
        Ok(match set {
            AtomicSet::RankOne { rows, cols } => {
                Signal { shape: Shape::Matrix(*rows, *cols), data: flat }
            }
            _ => Signal::vector(flat),
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn flat(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_flat(self) -> DVector<f64> {
        self.data
    }

    /// Matrix view (only meaningful for matrix-shaped signals).
    pub fn as_matrix(&self) -> Result<DMatrix<f64>> {
        match self.shape {
            Shape::Matrix(r, c) => Ok(DMatrix::from_column_slice(r, c, self.data.as_slice())),
            Shape::Vector(_) => Err(Error::InvalidArgument("signal is vector-shaped".into())),
        }
    }

    pub fn norm2(&self) -> f64 {
        self.data.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// A finite frame of R^d stored as its `d x N` synthesis matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    atoms: DMatrix<f64>,
}

impl Frame {
    /// Validates that every column is nonzero and the matrix has full
    /// row rank (i.e. the columns really form a frame of R^d).
    pub fn new(atoms: DMatrix<f64>) -> Result<Frame> {
        let d = atoms.nrows();
        let n = atoms.ncols();
        if n < d {
            return Err(Error::InvalidSet(format!("frame needs at least d = {d} atoms, got {n}")));
        }
        for (j, col) in atoms.column_iter().enumerate() {
            if col.norm() == 0.0 {
                return Err(Error::InvalidSet(format!("frame atom {j} is zero")));
            }
            if col.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSet(format!("frame atom {j} has non-finite entries")));
            }
        }
        let sp = linalg::spectrum(&atoms)?;
        if sp.rank < d {
            return Err(Error::InvalidSet(format!(
                "frame matrix is rank {} < d = {d}",
                sp.rank
            )));
        }
        Ok(Frame { atoms })
    }

    /// Unit vectors of R^2 at the given angles.
    pub fn from_angles(angles: &[f64]) -> Frame {
        let cols: Vec<DVector<f64>> =
            angles.iter().map(|t| DVector::from_vec(vec![t.cos(), t.sin()])).collect();
        Frame { atoms: DMatrix::from_columns(&cols) }
    }

    /// `n` unit vectors equally spaced on the full circle of R^2,
    /// starting at angle 0.
    pub fn circle(n: usize) -> Frame {
        let angles: Vec<f64> =
            (0..n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect();
        Frame::from_angles(&angles)
    }

    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn len(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> DVector<f64> {
        self.atoms.column(i).clone_owned()
    }
}

/// The atomic set in play.
#[derive(Debug, Clone, PartialEq)]
pub enum AtomicSet {
    CanonicalBasis { dim: usize },
    FiniteFrame(Frame),
    RankOne { rows: usize, cols: usize },
}

/// A decomposition of a signal into at most s atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum SparseDecomposition {
    /// Indexed atoms with real coefficients (canonical basis / frame).
    Atoms { indices: Vec<usize>, coefficients: Vec<f64> },
    /// Weighted unit rank-one terms `sum_i s_i u_i v_i^T`.
    RankOne { singulars: Vec<f64>, left: Vec<DVector<f64>>, right: Vec<DVector<f64>> },
}

impl SparseDecomposition {
    pub fn terms(&self) -> usize {
        match self {
            SparseDecomposition::Atoms { indices, .. } => indices.len(),
            SparseDecomposition::RankOne { singulars, .. } => singulars.len(),
        }
    }

    /// Total coefficient mass `sum |c_i|` (equals `sum s_i` for the
    /// rank-one form).
    pub fn coefficient_mass(&self) -> f64 {
        match self {
            SparseDecomposition::Atoms { coefficients, .. } => {
                coefficients.iter().map(|c| c.abs()).sum()
            }
            SparseDecomposition::RankOne { singulars, .. } => singulars.iter().sum(),
        }
    }

    /// Reassemble the represented signal.
    pub fn assemble(&self, set: &AtomicSet) -> Result<Signal> {
        match (self, set) {
            (SparseDecomposition::Atoms { indices, coefficients }, AtomicSet::CanonicalBasis { dim }) => {
                let mut v = DVector::zeros(*dim);
                for (&i, &c) in indices.iter().zip(coefficients) {
                    if i >= *dim {
                        return Err(Error::InvalidArgument(format!("atom index {i} out of range")));
                    }
                    v[i] += c;
                }
                Ok(Signal::vector(v))
            }
            (SparseDecomposition::Atoms { indices, coefficients }, AtomicSet::FiniteFrame(frame)) => {
                let mut v = DVector::zeros(frame.dim());
                for (&i, &c) in indices.iter().zip(coefficients) {
                    if i >= frame.len() {
                        return Err(Error::InvalidArgument(format!("atom index {i} out of range")));
                    }
                    v += frame.atom(i) * c;
                }
                Ok(Signal::vector(v))
            }
            (SparseDecomposition::RankOne { singulars, left, right }, AtomicSet::RankOne { rows, cols }) => {
                let mut m = DMatrix::zeros(*rows, *cols);
                for ((s, u), v) in singulars.iter().zip(left).zip(right) {
                    m += (u * v.transpose()) * *s;
                }
                Ok(Signal::matrix(m))
            }
            _ => Err(Error::InvalidArgument("decomposition kind does not match set".into())),
        }
    }
}

/// Result of a tail computation `sigma_{W,s}(z)`.
#[derive(Debug, Clone)]
pub struct TailResult {
    /// The tail value (atomic-norm distance to the s-sparse set).
    pub value: f64,
    /// A best s-term approximation achieving the tail.
    pub minimizer: SparseDecomposition,
    /// True when computed by an exhaustive method.
    pub exact: bool,
}

/// Equivalence constant `C_W` with a certification flag (false when the
/// value came from multistart local optimization only).
#[derive(Debug, Clone, Copy)]
pub struct EquivalenceConstant {
    pub value: f64,
    pub certified: bool,
}

impl AtomicSet {
    pub fn canonical(dim: usize) -> AtomicSet {
        AtomicSet::CanonicalBasis { dim }
    }

    pub fn frame(frame: Frame) -> AtomicSet {
        AtomicSet::FiniteFrame(frame)
    }

    pub fn rank_one(rows: usize, cols: usize) -> AtomicSet {
        AtomicSet::RankOne { rows, cols }
    }

    /// Flat dimension of the ambient space.
    pub fn ambient_dim(&self) -> usize {
        match self {
            AtomicSet::CanonicalBasis { dim } => *dim,
            AtomicSet::FiniteFrame(f) => f.dim(),
            AtomicSet::RankOne { rows, cols } => rows * cols,
        }
    }

    /// Largest meaningful sparsity level for this set.
    pub fn max_sparsity(&self) -> usize {
        match self {
            AtomicSet::CanonicalBasis { dim } => *dim,
            AtomicSet::FiniteFrame(f) => f.len(),
            AtomicSet::RankOne { rows, cols } => *rows.min(cols),
        }
    }

    /// Number of atoms when the set is finite.
    pub fn atom_count(&self) -> Option<usize> {
        match self {
            AtomicSet::CanonicalBasis { dim } => Some(*dim),
            AtomicSet::FiniteFrame(f) => Some(f.len()),
            AtomicSet::RankOne { .. } => None,
        }
    }

    fn check_signal(&self, z: &Signal) -> Result<()> {
        if z.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: z.dim() });
        }
        if !z.is_finite() {
            return Err(Error::InvalidArgument("signal has non-finite entries".into()));
        }
        Ok(())
    }

    /// The atomic norm `|z|_W`.
    pub fn norm(&self, z: &Signal) -> Result<f64> {
        self.check_signal(z)?;
        match self {
            AtomicSet::CanonicalBasis { .. } => Ok(z.flat().iter().map(|x| x.abs()).sum()),
            AtomicSet::FiniteFrame(frame) => frame_norm(frame, z.flat()).map(|(_, v)| v),
            AtomicSet::RankOne { .. } => {
                let m = z.as_matrix()?;
                Ok(linalg::singular_values(&m).iter().sum())
            }
        }
    }

    /// The dual atomic norm `sup_w |<u, w>|`.
    pub fn dual_norm(&self, u: &Signal) -> Result<f64> {
        self.check_signal(u)?;
        match self {
            AtomicSet::CanonicalBasis { .. } => {
                Ok(u.flat().iter().fold(0.0_f64, |a, x| a.max(x.abs())))
            }
            AtomicSet::FiniteFrame(frame) => {
                let prods = frame.matrix().transpose() * u.flat();
                Ok(prods.iter().fold(0.0_f64, |a, x| a.max(x.abs())))
            }
            AtomicSet::RankOne { .. } => {
                let m = u.as_matrix()?;
                Ok(linalg::singular_values(&m).first().copied().unwrap_or(0.0))
            }
        }
    }

    /// Draw a random member of `Sigma_{W,s}` together with its
    /// generating decomposition (atoms uniform, standard normal
    /// coefficients; orthonormal factors in the rank-one case).
    pub fn sample_sparse<R: Rng>(&self, s: usize, rng: &mut R) -> Result<(Signal, SparseDecomposition)> {
        if s == 0 || s > self.max_sparsity() {
            return Err(Error::SparsityOutOfRange { s, max: self.max_sparsity() });
        }
        match self {
            AtomicSet::RankOne { rows, cols } => {
                let u = random_orthonormal(*rows, s, rng);
                let v = random_orthonormal(*cols, s, rng);
                let singulars: Vec<f64> =
                    (0..s).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect();
                let left: Vec<DVector<f64>> = (0..s).map(|i| u.column(i).clone_owned()).collect();
                let right: Vec<DVector<f64>> = (0..s).map(|i| v.column(i).clone_owned()).collect();
                let dec = SparseDecomposition::RankOne { singulars, left, right };
                let z = dec.assemble(self)?;
                Ok((z, dec))
            }
            _ => {
                let n = self.atom_count().expect("finite atom set");
                let indices = sample_distinct(n, s, rng);
                let coefficients: Vec<f64> =
                    (0..s).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let dec = SparseDecomposition::Atoms { indices, coefficients };
                let z = dec.assemble(self)?;
                Ok((z, dec))
            }
        }
    }

    /// Standard normal signal in the ambient space.
    pub fn sample_ambient<R: Rng>(&self, rng: &mut R) -> Signal {
        let d = self.ambient_dim();
        let flat = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        Signal::reshape_for(self, flat).expect("dimension is consistent by construction")
    }
}

fn sample_distinct<R: Rng>(n: usize, s: usize, rng: &mut R) -> Vec<usize> {
    // Floyd's algorithm keeps the draw order deterministic for a fixed
    // RNG stream without shuffling the full index range.
    let mut chosen: Vec<usize> = Vec::with_capacity(s);
    for j in n - s..n {
        let t = rng.gen_range(0..=j);
        if chosen.contains(&t) {
            chosen.push(j);
        } else {
            chosen.push(t);
        }
    }
    chosen.sort_unstable();
    chosen
}

fn random_orthonormal<R: Rng>(n: usize, s: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, s, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    qr.q()
}

/// Minimal-l1 synthesis of `z` over the frame: returns the coefficient
/// vector and the atomic norm. Uses exact basic-solution enumeration
/// when affordable, otherwise ADMM.
pub(crate) fn frame_norm(frame: &Frame, z: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let f = frame.matrix();
    let rank = frame.dim(); // full row rank by construction
    if enumeration_cost(frame.len(), rank) <= DEFAULT_MAX_CANDIDATES {
        return min_l1_equality(f, z, DEFAULT_MAX_CANDIDATES);
    }
    let opts = SolverOptions { eps: 0.0, ..SolverOptions::default() };
    let out = crate::solvers::admm::admm_ball_constrained(
        f,
        z,
        crate::solvers::admm::ProxKind::L1,
        &opts,
    )?;
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            residual: out.constraint_residual,
        });
    }
    Ok((out.x, out.objective))
}
