//! Master equation of the incoherently pumped single-atom laser.
//!
//! Time is measured in units of `1/(2g)`, so the generator reads
//!
//! ```text
//! dρ/ds = ½[a†σ − σ†a, ρ] + (τ/2) D[a]ρ + (η/2) D[σ]ρ + (ω/2) D[σ†]ρ,
//! D[L]ρ = 2 LρL† − L†Lρ − ρL†L.
//! ```
//!
//! Superoperators act on column-stacked matrices: `vec(ρ)[j·D + i] = ρ[i, j]`,
//! so `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
//!
//! Every term conserves the difference of excitation numbers
//! `(n + atom)` between the ket and the bra, and the steady state lives in
//! the block where that difference is zero. [`steady_state`] solves only
//! that block; [`SolveMethod::Full`] solves the whole `D² × D²` system
//! instead.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::fock::{composite_lowering, field_annihilation, ComplexMatrix, SpaceConfig, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Largest tolerated `|ρ − ρ†|` entry for a [`DensityMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Largest tolerated `|Tr ρ − 1|` for a [`DensityMatrix`].
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted as "positive up to rounding".
pub const POSITIVITY_FLOOR: f64 = -1e-8;
/// Bound on `|Tr ρ(t) − Tr ρ(0)|` over a run of [`evolve`].
pub const TRACE_DRIFT_TOL: f64 = 1e-8;

pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-10;
pub const DEFAULT_MAX_NMAX: usize = 80;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Dimensionless rates: pump `ω = Γ/2g`, spontaneous emission `η = γ/2g`
/// and cavity loss `τ = κ/2g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    omega: f64,
    eta: f64,
    tau: f64,
}

fn check_rate(name: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        Err(invalid(name, format!("must be finite, got {value}")))
    } else if value < 0.0 {
        Err(invalid(name, format!("must be non-negative, got {value}")))
    } else {
        Ok(value)
    }
}

impl ModelParams {
    pub fn new(omega: f64, eta: f64, tau: f64) -> Result<Self> {
        Ok(Self {
            omega: check_rate("omega", omega)?,
            eta: check_rate("eta", eta)?,
            tau: check_rate("tau", tau)?,
        })
    }

    /// From the coupling `g`, cavity rate `κ`, spontaneous rate `γ` and pump
    /// rate `Γ`.
    pub fn from_dimensional(g: f64, kappa: f64, gamma: f64, pump: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(invalid(
                "g",
                format!("must be finite and positive, got {g}"),
            ));
        }
        let kappa = check_rate("kappa", kappa)?;
        let gamma = check_rate("gamma", gamma)?;
        let pump = check_rate("pump", pump)?;
        Self::new(pump / (2.0 * g), gamma / (2.0 * g), kappa / (2.0 * g))
    }

    /// Pump equal to cavity loss, no spontaneous emission: `(τ, 0, τ)`.
    pub fn matched(tau: f64) -> Result<Self> {
        Self::new(tau, 0.0, tau)
    }

    #[inline]
    pub fn omega(&self) -> f64 {
        self.omega
    }

    #[inline]
    pub fn eta(&self) -> f64 {
        self.eta
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Hermitian, unit-trace state on the atom ⊗ field space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: SpaceConfig,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Checks shape, Hermiticity and trace. Positivity is checked separately
    /// by [`DensityMatrix::check_positive`].
    pub fn new(space: SpaceConfig, matrix: ComplexMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.rows() != d || matrix.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.rows().max(matrix.cols()),
            });
        }
        let herm = matrix.hermiticity_error();
        if !(herm <= HERMITIAN_TOL) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = matrix.trace();
        if !((tr - ONE).norm() <= TRACE_TOL) {
            return Err(Error::InvalidState(format!(
                "trace {:.12} + {:.3e}i differs from 1",
                tr.re, tr.im
            )));
        }
        Ok(Self { space, matrix })
    }

    pub(crate) fn from_parts_unchecked(space: SpaceConfig, matrix: ComplexMatrix) -> Self {
        Self { space, matrix }
    }

    /// Pure basis state |atom, n⟩⟨atom, n|.
    pub fn basis_state(space: SpaceConfig, atom: usize, photons: usize) -> Result<Self> {
        if atom > 1 {
            return Err(invalid("atom", "must be 0 (lower) or 1 (upper)"));
        }
        if photons > space.n_max() {
            return Err(invalid(
                "photons",
                format!("exceeds n_max = {}", space.n_max()),
            ));
        }
        let mut m = ComplexMatrix::zeros(space.dim(), space.dim());
        let i = space.index(atom, photons);
        m[(i, i)] = ONE;
        Ok(Self { space, matrix: m })
    }

    /// Ground atom with an empty cavity, |1, 0⟩.
    pub fn ground_vacuum(space: SpaceConfig) -> Self {
        Self::basis_state(space, SpaceConfig::ATOM_LOWER, 0).expect("always in range")
    }

    #[inline]
    pub fn space(&self) -> SpaceConfig {
        self.space
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.matrix.to_dmatrix().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn check_positive(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        if min < POSITIVITY_FLOOR {
            Err(Error::NotPositive(min))
        } else {
            Ok(())
        }
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                found: other.space.dim(),
            });
        }
        let diff = (&self.matrix - &other.matrix).to_dmatrix();
        let eig = diff.symmetric_eigen();
        Ok(0.5 * eig.eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
    }
}

#[derive(Debug, Clone)]
struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &ComplexMatrix) -> Self {
        debug_assert!(m.is_square());
        let mut entries = Vec::new();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let v = m[(r, c)];
                if v != ZERO {
                    entries.push((r, c, v));
                }
            }
        }
        Self {
            dim: m.rows(),
            entries,
        }
    }

    fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, ONE)).collect(),
        }
    }

    fn transpose(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect(),
        }
    }

    fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|&(r, c, v)| (r, c, v.conj()))
                .collect(),
        }
    }

    /// `out += k · (self · x)` for row-major `x`.
    fn left_acc(&self, k: C64, x: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for &(r, c, v) in &self.entries {
            let kv = k * v;
            let src = &x[c * d..(c + 1) * d];
            let dst = &mut out[r * d..(r + 1) * d];
            for (o, &s) in dst.iter_mut().zip(src) {
                *o += kv * s;
            }
        }
    }

    /// `out += k · (x · self)` for row-major `x`.
    fn right_acc(&self, k: C64, x: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for &(r, c, v) in &self.entries {
            let kv = k * v;
            for i in 0..d {
                out[i * d + c] += kv * x[i * d + r];
            }
        }
    }
}

/// `out += k · (a ⊗ b)` for a square `out` of side `dim(a)·dim(b)`.
fn add_kron(out: &mut DMatrix<C64>, k: C64, a: &SparseOp, b: &SparseOp) {
    let bd = b.dim;
    for &(i, j, x) in &a.entries {
        let kx = k * x;
        for &(p, q, y) in &b.entries {
            out[(i * bd + p, j * bd + q)] += kx * y;
        }
    }
}

#[derive(Debug, Clone)]
struct Channel {
    rate: f64,
    jump: SparseOp,
    jump_adj: SparseOp,
    decay: SparseOp,
}

/// Cached operators for one parameter point and truncation.
#[derive(Debug, Clone)]
pub struct Generator {
    params: ModelParams,
    space: SpaceConfig,
    coupling: SparseOp,
    channels: Vec<Channel>,
}

impl Generator {
    pub fn new(params: ModelParams, space: SpaceConfig) -> Self {
        let a = field_annihilation(space);
        let s = composite_lowering(space);
        let coupling = &a.adjoint().dot(&s) - &s.adjoint().dot(&a);
        let channels = [
            (params.tau, a),
            (params.eta, s.clone()),
            (params.omega, s.adjoint()),
        ]
        .into_iter()
        .filter(|(rate, _)| *rate > 0.0)
        .map(|(rate, l)| {
            let l_adj = l.adjoint();
            Channel {
                rate,
                decay: SparseOp::from_dense(&l_adj.dot(&l)),
                jump: SparseOp::from_dense(&l),
                jump_adj: SparseOp::from_dense(&l_adj),
            }
        })
        .collect();
        Self {
            params,
            space,
            coupling: SparseOp::from_dense(&coupling),
            channels,
        }
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn space(&self) -> SpaceConfig {
        self.space
    }

    /// `dρ/ds` for any square matrix of the cached dimension.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.space.dim();
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho.rows().max(rho.cols()),
            });
        }
        let mut out = ComplexMatrix::zeros(d, d);
        let mut scratch = vec![ZERO; d * d];
        self.apply_into(rho.as_slice(), out.as_mut_slice(), &mut scratch);
        Ok(out)
    }

    /// Accumulates `dρ/ds` into a zeroed `out`; `scratch` has `D²` entries.
    fn apply_into(&self, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let half = C64::new(0.5, 0.0);
        self.coupling.left_acc(half, rho, out);
        self.coupling.right_acc(-half, rho, out);
        for ch in &self.channels {
            scratch.fill(ZERO);
            ch.jump.left_acc(ONE, rho, scratch);
            ch.jump_adj.right_acc(C64::new(ch.rate, 0.0), scratch, out);
            let k = C64::new(-0.5 * ch.rate, 0.0);
            ch.decay.left_acc(k, rho, out);
            ch.decay.right_acc(k, rho, out);
        }
    }

    /// Dense `D² × D²` superoperator in the column-stacking convention.
    pub fn superoperator(&self) -> ComplexMatrix {
        ComplexMatrix::from_dmatrix(&self.superoperator_dmatrix())
    }

    fn superoperator_dmatrix(&self) -> DMatrix<C64> {
        let d = self.space.dim();
        let id = SparseOp::identity(d);
        let mut l = DMatrix::from_element(d * d, d * d, ZERO);
        let half = C64::new(0.5, 0.0);
        add_kron(&mut l, half, &id, &self.coupling);
        add_kron(&mut l, -half, &self.coupling.transpose(), &id);
        for ch in &self.channels {
            add_kron(&mut l, C64::new(ch.rate, 0.0), &ch.jump.conj(), &ch.jump);
            let k = C64::new(-0.5 * ch.rate, 0.0);
            add_kron(&mut l, k, &id, &ch.decay);
            add_kron(&mut l, k, &ch.decay.transpose(), &id);
        }
        l
    }

    /// `(row, col)` pairs whose ket and bra carry equal excitation number,
    /// ordered by column-stacked position.
    fn balanced_sector(&self) -> Vec<(usize, usize)> {
        let d = self.space.dim();
        let mut pairs = Vec::new();
        for j in 0..d {
            for i in 0..d {
                if self.space.excitations(i) == self.space.excitations(j) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Restriction of the generator to the balanced sector.
    fn sector_matrix(&self, sector: &[(usize, usize)]) -> DMatrix<C64> {
        let d = self.space.dim();
        let mut position = vec![usize::MAX; d * d];
        for (k, &(i, j)) in sector.iter().enumerate() {
            position[i * d + j] = k;
        }
        let m = sector.len();
        let mut out = DMatrix::from_element(m, m, ZERO);
        let mut basis = vec![ZERO; d * d];
        let mut image = vec![ZERO; d * d];
        let mut scratch = vec![ZERO; d * d];
        for (col, &(i, j)) in sector.iter().enumerate() {
            basis[i * d + j] = ONE;
            image.fill(ZERO);
            self.apply_into(&basis, &mut image, &mut scratch);
            basis[i * d + j] = ZERO;
            for (flat, &z) in image.iter().enumerate() {
                if z == ZERO {
                    continue;
                }
                let row = position[flat];
                debug_assert!(row != usize::MAX, "generator left the balanced sector");
                out[(row, col)] = z;
            }
        }
        out
    }
}

/// `dρ/ds` for the state `rho`.
pub fn apply_rhs(rho: &DensityMatrix, p: ModelParams) -> Result<ComplexMatrix> {
    Generator::new(p, rho.space()).apply(rho.matrix())
}

/// Column-stacking superoperator `L` with `vec(dρ/ds) = L · vec(ρ)`.
pub fn build_superoperator(p: ModelParams, space: SpaceConfig) -> ComplexMatrix {
    Generator::new(p, space).superoperator()
}

/// Column-stacked `vec(m)`.
pub fn vectorize(m: &ComplexMatrix) -> Vec<C64> {
    let mut v = Vec::with_capacity(m.rows() * m.cols());
    for c in 0..m.cols() {
        for r in 0..m.rows() {
            v.push(m[(r, c)]);
        }
    }
    v
}

/// Inverse of [`vectorize`] for a `dim × dim` matrix.
pub fn unvectorize(v: &[C64], dim: usize) -> Result<ComplexMatrix> {
    if v.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: v.len(),
        });
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |r, c| v[c * dim + r]))
}

/// Which population equation is traded for the trace condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintRow {
    /// The population row of smallest max-norm.
    #[default]
    SmallestNorm,
    /// The row of the population of basis state `index`.
    Population(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMethod {
    /// Zero excitation-difference block only.
    #[default]
    Sector,
    /// Whole column-stacked superoperator.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    /// Bound on `max |L(ρ)|`.
    pub tol: f64,
    /// Bound on the probability at photon numbers `≥ n_max − 2`.
    pub tail_threshold: f64,
    /// Double `n_max` (up to `max_n_max`) while the tail is too heavy.
    pub adaptive: bool,
    pub max_n_max: usize,
    pub constraint: ConstraintRow,
    pub method: SolveMethod,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
            adaptive: true,
            max_n_max: DEFAULT_MAX_NMAX,
            constraint: ConstraintRow::SmallestNorm,
            method: SolveMethod::Sector,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    pub rho: DensityMatrix,
    /// `max |L(ρ)|`.
    pub residual_norm: f64,
    /// Probability at photon numbers `≥ n_max − 2`.
    pub tail_mass: f64,
    /// Basis index whose population row carried the trace condition.
    pub constraint_index: usize,
}

/// Steady state with the default options and the given residual tolerance.
pub fn steady_state(p: ModelParams, space: SpaceConfig, tol: f64) -> Result<SteadyStateResult> {
    steady_state_with(
        p,
        space,
        &SteadyStateOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn steady_state_with(
    p: ModelParams,
    space: SpaceConfig,
    opts: &SteadyStateOptions,
) -> Result<SteadyStateResult> {
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    // Without pump, cavity loss or spontaneous emission every excitation
    // number is conserved and each sector has its own steady state.
    if p.omega == 0.0 && p.tau == 0.0 && p.eta == 0.0 {
        return Err(Error::Degenerate(
            "all rates vanish (omega = eta = tau = 0)".into(),
        ));
    }
    let mut space = space;
    loop {
        let (rho, constraint_index) = solve_once(p, space, opts)?;
        let tail_mass = tail_mass(&rho, space);
        if tail_mass > opts.tail_threshold {
            if opts.adaptive && space.n_max() < opts.max_n_max {
                space = SpaceConfig::new((2 * space.n_max()).min(opts.max_n_max))?;
                continue;
            }
            return Err(Error::Truncation {
                n_max: space.n_max(),
                tail_mass,
                threshold: opts.tail_threshold,
            });
        }
        let residual_norm = Generator::new(p, space).apply(&rho)?.max_abs();
        if !(residual_norm <= opts.tol) {
            return Err(Error::Residual {
                residual: residual_norm,
                tol: opts.tol,
            });
        }
        let rho = DensityMatrix::new(space, rho)?;
        rho.check_positive()?;
        return Ok(SteadyStateResult {
            rho,
            residual_norm,
            tail_mass,
            constraint_index,
        });
    }
}

fn tail_mass(rho: &ComplexMatrix, space: SpaceConfig) -> f64 {
    let from = space.n_max().saturating_sub(2);
    (0..space.dim())
        .filter(|&i| space.split(i).1 >= from)
        .map(|i| rho[(i, i)].re)
        .sum()
}

/// One constrained linear solve; returns the (Hermitian-symmetrized) state
/// and the basis index of the replaced population row.
fn solve_once(
    p: ModelParams,
    space: SpaceConfig,
    opts: &SteadyStateOptions,
) -> Result<(ComplexMatrix, usize)> {
    let gen = Generator::new(p, space);
    let d = space.dim();
    let (mut system, pairs): (DMatrix<C64>, Vec<(usize, usize)>) = match opts.method {
        SolveMethod::Sector => {
            let sector = gen.balanced_sector();
            (gen.sector_matrix(&sector), sector)
        }
        SolveMethod::Full => {
            let pairs = (0..d).flat_map(|j| (0..d).map(move |i| (i, j))).collect();
            (gen.superoperator_dmatrix(), pairs)
        }
    };
    // The trace functional spans the left kernel, so only population rows
    // may be replaced.
    let population_rows: Vec<(usize, usize)> = pairs
        .iter()
        .enumerate()
        .filter(|(_, &(i, j))| i == j)
        .map(|(k, &(i, _))| (k, i))
        .collect();
    let (row, index) = match opts.constraint {
        ConstraintRow::Population(index) => {
            if index >= d {
                return Err(invalid("constraint", format!("basis index {index} >= {d}")));
            }
            *population_rows
                .iter()
                .find(|(_, i)| *i == index)
                .expect("every basis state has a population row")
        }
        ConstraintRow::SmallestNorm => {
            let norm = |k: usize| system.row(k).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let mut best = population_rows[0];
            let mut best_norm = norm(best.0);
            for &cand in &population_rows[1..] {
                let n = norm(cand.0);
                if n < best_norm {
                    best = cand;
                    best_norm = n;
                }
            }
            best
        }
    };
    let m = pairs.len();
    for c in 0..m {
        system[(row, c)] = ZERO;
    }
    for &(k, _) in &population_rows {
        system[(row, k)] = ONE;
    }
    let mut rhs = nalgebra::DVector::from_element(m, ZERO);
    rhs[row] = ONE;

    let scale = system.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = system.lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * scale) {
        return Err(Error::Degenerate(format!(
            "constrained system is singular (smallest pivot {min_pivot:.3e})"
        )));
    }
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("constrained system is singular".into()))?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Degenerate("non-finite solution".into()));
    }
    let mut rho = ComplexMatrix::zeros(d, d);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        rho[(i, j)] = x[k];
    }
    let herm = ComplexMatrix::from_fn(d, d, |r, c| 0.5 * (rho[(r, c)] + rho[(c, r)].conj()));
    Ok((herm, index))
}

/// Largest step accepted by [`evolve`]: `0.1 / max(1, ω, η, τ·n_max)`.
pub fn max_stable_step(p: ModelParams, space: SpaceConfig) -> f64 {
    0.1 / 1f64
        .max(p.omega)
        .max(p.eta)
        .max(p.tau * space.n_max() as f64)
}

/// Classical fourth-order Runge–Kutta integration over `duration` with
/// uniform steps no larger than `dt`.
pub fn evolve(
    rho0: &DensityMatrix,
    p: ModelParams,
    duration: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(invalid(
            "duration",
            format!("must be finite and >= 0, got {duration}"),
        ));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::StepSize(format!("dt must be positive, got {dt}")));
    }
    let space = rho0.space();
    let limit = max_stable_step(p, space);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepSize(format!(
            "dt = {dt} exceeds the stability limit {limit}"
        )));
    }
    if duration == 0.0 {
        return Ok(rho0.clone());
    }
    let steps = (duration / dt - 1e-9).ceil().max(1.0) as usize;
    let h = duration / steps as f64;

    let gen = Generator::new(p, space);
    let d = space.dim();
    let n = d * d;
    let mut y = rho0.matrix().as_slice().to_vec();
    let mut k = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    let mut stage = vec![ZERO; n];
    let mut scratch = vec![ZERO; n];
    let trace0 = rho0.matrix().trace();
    let hc = C64::new(h, 0.0);
    let half_h = C64::new(0.5 * h, 0.0);
    let sixth = C64::new(h / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    for _ in 0..steps {
        let [k1, k2, k3, k4] = &mut k;
        k1.fill(ZERO);
        gen.apply_into(&y, k1, &mut scratch);
        for ((s, &yi), &ki) in stage.iter_mut().zip(&y).zip(k1.iter()) {
            *s = yi + half_h * ki;
        }
        k2.fill(ZERO);
        gen.apply_into(&stage, k2, &mut scratch);
        for ((s, &yi), &ki) in stage.iter_mut().zip(&y).zip(k2.iter()) {
            *s = yi + half_h * ki;
        }
        k3.fill(ZERO);
        gen.apply_into(&stage, k3, &mut scratch);
        for ((s, &yi), &ki) in stage.iter_mut().zip(&y).zip(k3.iter()) {
            *s = yi + hc * ki;
        }
        k4.fill(ZERO);
        gen.apply_into(&stage, k4, &mut scratch);
        for i in 0..n {
            y[i] += sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
    }

    let out = ComplexMatrix::new(d, d, y)?;
    let drift = (out.trace() - trace0).norm();
    if !(drift <= TRACE_DRIFT_TOL) {
        return Err(Error::StepSize(format!(
            "trace drifted by {drift:.3e} over the run"
        )));
    }
    let herm = ComplexMatrix::from_fn(d, d, |r, c| 0.5 * (out[(r, c)] + out[(c, r)].conj()));
    Ok(DensityMatrix::from_parts_unchecked(space, herm))
}
