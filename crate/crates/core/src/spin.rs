//! Spin-1 operator algebra for the NV⁻ ground state: Hamiltonian
//! construction, eigendecomposition, and per-orientation transition
//! enumeration with ODMR contrast factors.
//!
//! Conventions, fixed across the crate:
//! - basis order |m_s = +1⟩, |0⟩, |−1⟩ along the NV symmetry axis (z),
//! - energies and frequencies in MHz, magnetic fields in Gauss,
//! - angles in radians.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Zero-field splitting of the NV⁻ ground state, MHz.
pub const D_ZFS_MHZ: f64 = 2870.0;
/// Electron gyromagnetic ratio, MHz/G.
pub const GAMMA_E_MHZ_PER_G: f64 = 2.8;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Field-independent model constants of the NV⁻ center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NvCenter {
    /// Zero-field splitting, MHz.
    pub d: f64,
    /// Electron gyromagnetic ratio, MHz/G.
    pub gamma: f64,
}

impl Default for NvCenter {
    fn default() -> Self {
        NvCenter {
            d: D_ZFS_MHZ,
            gamma: GAMMA_E_MHZ_PER_G,
        }
    }
}

impl NvCenter {
    pub fn validate(&self) -> Result<()> {
        if !self.d.is_finite() || self.d <= 0.0 {
            return Err(Error::invalid(
                "d",
                format!(
                    "zero-field splitting must be finite and positive (got {})",
                    self.d
                ),
            ));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(Error::invalid(
                "gamma",
                format!(
                    "gyromagnetic ratio must be finite and positive (got {})",
                    self.gamma
                ),
            ));
        }
        Ok(())
    }

    /// Model at field magnitude `b` (Gauss) and field–axis angle `theta`.
    pub fn at(&self, b: f64, theta: f64) -> ModelParams {
        ModelParams {
            nv: *self,
            b,
            theta,
        }
    }
}

/// Parameters of one NV⁻ orientation in an applied field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub nv: NvCenter,
    /// Magnetic field magnitude, Gauss. Nonnegative.
    pub b: f64,
    /// Angle between the field and the NV axis, radians.
    pub theta: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.nv.validate()?;
        if !self.b.is_finite() || self.b < 0.0 {
            return Err(Error::invalid(
                "field",
                format!(
                    "magnetic field must be finite and nonnegative (got {})",
                    self.b
                ),
            ));
        }
        if !self.theta.is_finite() {
            return Err(Error::invalid(
                "theta",
                format!("orientation angle must be finite (got {})", self.theta),
            ));
        }
        Ok(())
    }
}

/// 3×3 complex matrix over the fixed |+1⟩, |0⟩, |−1⟩ basis.
///
/// Entries are dimensionless for spin operators and MHz for Hamiltonians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinMatrix {
    e: [[Complex64; 3]; 3],
}

impl SpinMatrix {
    pub fn zero() -> Self {
        SpinMatrix {
            e: [[Complex64::new(0.0, 0.0); 3]; 3],
        }
    }

    pub fn identity() -> Self {
        let mut m = SpinMatrix::zero();
        for k in 0..3 {
            m.e[k][k] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: [[Complex64; 3]; 3]) -> Self {
        SpinMatrix { e: rows }
    }

    pub fn from_real(rows: [[f64; 3]; 3]) -> Self {
        let mut m = SpinMatrix::zero();
        for r in 0..3 {
            for c in 0..3 {
                m.e[r][c] = Complex64::new(rows[r][c], 0.0);
            }
        }
        m
    }

    pub fn diagonal(d0: f64, d1: f64, d2: f64) -> Self {
        let mut m = SpinMatrix::zero();
        m.e[0][0] = Complex64::new(d0, 0.0);
        m.e[1][1] = Complex64::new(d1, 0.0);
        m.e[2][2] = Complex64::new(d2, 0.0);
        m
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.e[r][c]
    }

    pub fn trace(&self) -> Complex64 {
        self.e[0][0] + self.e[1][1] + self.e[2][2]
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = *self;
        for r in 0..3 {
            for c in 0..3 {
                m.e[r][c] *= s;
            }
        }
        m
    }

    pub fn scaled_complex(&self, s: Complex64) -> Self {
        let mut m = *self;
        for r in 0..3 {
            for c in 0..3 {
                m.e[r][c] *= s;
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &SpinMatrix) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..3 {
            for c in 0..3 {
                worst = worst.max((self.e[r][c] - other.e[r][c]).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation from the adjoint, max |e(r,c) − e(c,r)*|.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..3 {
            for c in 0..3 {
                worst = worst.max((self.e[r][c] - self.e[c][r].conj()).norm());
            }
        }
        worst
    }

    pub fn max_imag(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..3 {
            for c in 0..3 {
                worst = worst.max(self.e[r][c].im.abs());
            }
        }
        worst
    }

    fn real_entries(&self) -> [[f64; 3]; 3] {
        let mut a = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] = self.e[r][c].re;
            }
        }
        a
    }
}

impl std::ops::Add for SpinMatrix {
    type Output = SpinMatrix;
    fn add(self, rhs: SpinMatrix) -> SpinMatrix {
        let mut m = self;
        for r in 0..3 {
            for c in 0..3 {
                m.e[r][c] += rhs.e[r][c];
            }
        }
        m
    }
}

impl std::ops::Sub for SpinMatrix {
    type Output = SpinMatrix;
    fn sub(self, rhs: SpinMatrix) -> SpinMatrix {
        let mut m = self;
        for r in 0..3 {
            for c in 0..3 {
                m.e[r][c] -= rhs.e[r][c];
            }
        }
        m
    }
}

impl std::ops::Mul for SpinMatrix {
    type Output = SpinMatrix;
    fn mul(self, rhs: SpinMatrix) -> SpinMatrix {
        let mut m = SpinMatrix::zero();
        for r in 0..3 {
            for c in 0..3 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..3 {
                    acc += self.e[r][k] * rhs.e[k][c];
                }
                m.e[r][c] = acc;
            }
        }
        m
    }
}

/// The spin-1 operators (S_x, S_y, S_z) in the fixed basis.
pub fn spin1_operators() -> (SpinMatrix, SpinMatrix, SpinMatrix) {
    let sx = SpinMatrix::from_real([
        [0.0, SQRT_HALF, 0.0],
        [SQRT_HALF, 0.0, SQRT_HALF],
        [0.0, SQRT_HALF, 0.0],
    ]);
    let i = Complex64::new(0.0, 1.0);
    let z = Complex64::new(0.0, 0.0);
    let sy = SpinMatrix::from_rows([
        [z, -i * SQRT_HALF, z],
        [i * SQRT_HALF, z, -i * SQRT_HALF],
        [z, i * SQRT_HALF, z],
    ]);
    let sz = SpinMatrix::diagonal(1.0, 0.0, -1.0);
    (sx, sy, sz)
}

/// S_z², diagonal (1, 0, 1). Proportional to the fluorescence contrast
/// observable.
pub fn sz_squared() -> SpinMatrix {
    SpinMatrix::diagonal(1.0, 0.0, 1.0)
}

/// Optically pumped density operator ρ = E − S_z², diagonal (0, 1, 0):
/// all population in |m_s = 0⟩.
pub fn pumped_density() -> SpinMatrix {
    SpinMatrix::diagonal(0.0, 1.0, 0.0)
}

/// Ground-state Hamiltonian in MHz:
/// H = D (S_z² − S²/3) + γ_e B (S_x sinθ + S_z cosθ).
///
/// Real in this basis (S_y never enters), which the eigensolver exploits.
pub fn build_hamiltonian(p: &ModelParams) -> Result<SpinMatrix> {
    p.validate()?;
    let (sx, _, sz) = spin1_operators();
    let zfs = (sz_squared() - SpinMatrix::identity().scaled(2.0 / 3.0)).scaled(p.nv.d);
    let zeeman = (sx.scaled(p.theta.sin()) + sz.scaled(p.theta.cos())).scaled(p.nv.gamma * p.b);
    Ok(zfs + zeeman)
}

/// Eigendecomposition of a real symmetric Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenSystem {
    /// Energies in MHz, ascending.
    pub values: [f64; 3],
    /// `vectors[k]` is the orthonormal eigenvector paired with `values[k]`,
    /// components in the fixed basis. Real: every Hamiltonian built here is
    /// real symmetric. Phase convention: the largest-magnitude component is
    /// positive.
    pub vectors: [[f64; 3]; 3],
}

impl EigenSystem {
    /// ⟨φ_k| op |φ_k⟩ (real part; exact for Hermitian `op`).
    pub fn expectation(&self, op: &SpinMatrix, k: usize) -> f64 {
        let v = &self.vectors[k];
        let mut acc = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                acc += v[r] * op.get(r, c).re * v[c];
            }
        }
        acc
    }

    /// ⟨φ_f| op |φ_i⟩.
    pub fn matrix_element(&self, op: &SpinMatrix, i: usize, f: usize) -> Complex64 {
        let vi = &self.vectors[i];
        let vf = &self.vectors[f];
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..3 {
            for c in 0..3 {
                acc += op.get(r, c) * (vf[r] * vi[c]);
            }
        }
        acc
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;
/// Convergence threshold for off-diagonal magnitudes, relative to ‖H‖.
const JACOBI_OFF_TOL: f64 = 1e-12;
/// Hermiticity (and realness) acceptance threshold, relative to ‖H‖.
const HERMITICITY_TOL: f64 = 1e-9;

fn off_diag_max(a: &[[f64; 3]; 3]) -> f64 {
    a[0][1].abs().max(a[0][2].abs()).max(a[1][2].abs())
}

/// Cyclic Jacobi iteration on a real symmetric 3×3 matrix.
///
/// Returns unsorted eigenvalues on the diagonal and the accumulated
/// rotation (columns are eigenvectors).
fn jacobi3(mut a: [[f64; 3]; 3], norm: f64) -> Result<([f64; 3], [[f64; 3]; 3])> {
    let threshold = JACOBI_OFF_TOL * norm;
    let mut v = [[0.0; 3]; 3];
    for k in 0..3 {
        v[k][k] = 1.0;
    }
    let mut sweeps = 0;
    let mut off = off_diag_max(&a);
    while off > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_diag: off,
            });
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = if tau >= 0.0 {
                1.0 / (tau + (1.0 + tau * tau).sqrt())
            } else {
                1.0 / (tau - (1.0 + tau * tau).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;

            a[p][p] -= t * apq;
            a[q][q] += t * apq;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            let r = 3 - p - q;
            let arp = a[r][p];
            let arq = a[r][q];
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];

            for row in 0..3 {
                let vp = v[row][p];
                let vq = v[row][q];
                v[row][p] = c * vp - s * vq;
                v[row][q] = s * vp + c * vq;
            }
        }
        sweeps += 1;
        off = off_diag_max(&a);
    }
    Ok(([a[0][0], a[1][1], a[2][2]], v))
}

/// Diagonalize a Hermitian (real symmetric) matrix.
///
/// Eigenvalues ascend; eigenvectors follow the positive-largest-component
/// phase convention, so identical input yields identical output.
pub fn eigensystem(h: &SpinMatrix) -> Result<EigenSystem> {
    let norm = h.frobenius_norm();
    let tol = HERMITICITY_TOL * norm;
    let residual = h.hermiticity_residual();
    if residual > tol {
        return Err(Error::NotHermitian { residual, tol });
    }
    let max_imag = h.max_imag();
    if max_imag > tol {
        return Err(Error::ComplexEntries { max_imag });
    }

    let re = h.real_entries();
    let mut a = re;
    for r in 0..3 {
        for c in 0..3 {
            a[r][c] = 0.5 * (re[r][c] + re[c][r]);
        }
    }
    let (d, v) = jacobi3(a, norm)?;

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));

    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (k, &i) in order.iter().enumerate() {
        values[k] = d[i];
        let mut vec = [v[0][i], v[1][i], v[2][i]];
        let mut lead = 0;
        for c in 1..3 {
            if vec[c].abs() > vec[lead].abs() {
                lead = c;
            }
        }
        if vec[lead] < 0.0 {
            for x in vec.iter_mut() {
                *x = -*x;
            }
        }
        vectors[k] = vec;
    }
    Ok(EigenSystem { values, vectors })
}

/// Transition class: single-quantum (nominal Δm = ±1) or overtone
/// (nominal Δm = ±2, allowed only through state mixing).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransitionClass {
    Sq,
    Ot,
}

/// One transition between eigenstates `i` → `f` (ascending-energy indices,
/// `values[f] > values[i]`).
#[derive(Clone, Copy, Debug)]
pub struct Transition {
    pub i: usize,
    pub f: usize,
    /// Transition frequency λ_f − λ_i, MHz.
    pub freq: f64,
    /// Squared transverse matrix element
    /// γ_e² (|⟨φ_f|S_x|φ_i⟩|² + |⟨φ_f|S_y|φ_i⟩|²), (MHz/G)².
    pub m2: f64,
    /// Population difference Δ⟨ρ⟩ with ρ = E − S_z², in [−1, 1].
    pub delta_rho: f64,
    /// Fluorescence-contrast difference Δ⟨S_z²⟩, in [−1, 1].
    pub delta_sz2: f64,
    /// ODMR intensity factor, m2 · Δ⟨ρ⟩ · Δ⟨S_z²⟩ (signed).
    pub kappa: f64,
    pub class: TransitionClass,
}

/// The three eigenstate pairs by ascending-energy index.
pub const TRANSITION_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Expectation gap threshold for calling a pair an overtone outright.
const OVERTONE_GAP: f64 = 1.5;

/// Identify the overtone pair among the three transitions.
///
/// Quantization axis u is the NV axis below the crossing (γ_e·B < D) and
/// the field direction above it. The pair with the largest |⟨S_u⟩_f −
/// ⟨S_u⟩_i| is the overtone when that gap reaches 1.5 (a Δm ≅ ±2 jump);
/// in the highly mixed intermediate regime the overtone is the pair that
/// excludes the most-pumped (|0⟩-like) state, ties toward lower energy.
pub fn overtone_pair(es: &EigenSystem, p: &ModelParams) -> (usize, usize) {
    let (sx, _, sz) = spin1_operators();
    let s_u = if p.nv.gamma * p.b < p.nv.d {
        sz
    } else {
        sx.scaled(p.theta.sin()) + sz.scaled(p.theta.cos())
    };
    let m: [f64; 3] = [
        es.expectation(&s_u, 0),
        es.expectation(&s_u, 1),
        es.expectation(&s_u, 2),
    ];
    let mut best = TRANSITION_PAIRS[0];
    let mut best_gap = -1.0;
    for (i, f) in TRANSITION_PAIRS {
        let gap = (m[f] - m[i]).abs();
        if gap > best_gap {
            best_gap = gap;
            best = (i, f);
        }
    }
    if best_gap >= OVERTONE_GAP {
        return best;
    }

    let rho = pumped_density();
    let mut pumped = 0;
    let mut most = es.expectation(&rho, 0);
    for k in 1..3 {
        let r = es.expectation(&rho, k);
        if r > most {
            most = r;
            pumped = k;
        }
    }
    match pumped {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Classify one eigenstate pair as single-quantum or overtone. Exactly one
/// of the three pairs per orientation is the overtone.
pub fn classify_transition(
    es: &EigenSystem,
    p: &ModelParams,
    pair: (usize, usize),
) -> TransitionClass {
    if overtone_pair(es, p) == pair {
        TransitionClass::Ot
    } else {
        TransitionClass::Sq
    }
}

/// All three transitions of one orientation, with frequency, transition
/// moment, population and contrast differences, κ, and class.
pub fn enumerate_transitions(es: &EigenSystem, p: &ModelParams) -> [Transition; 3] {
    let (sx, sy, _) = spin1_operators();
    let sz2 = sz_squared();
    let rho = pumped_density();
    let ot = overtone_pair(es, p);
    let gamma2 = p.nv.gamma * p.nv.gamma;
    TRANSITION_PAIRS.map(|(i, f)| {
        let mx = es.matrix_element(&sx, i, f);
        let my = es.matrix_element(&sy, i, f);
        let m2 = gamma2 * (mx.norm_sqr() + my.norm_sqr());
        let delta_rho = es.expectation(&rho, f) - es.expectation(&rho, i);
        let delta_sz2 = es.expectation(&sz2, f) - es.expectation(&sz2, i);
        Transition {
            i,
            f,
            freq: es.values[f] - es.values[i],
            m2,
            delta_rho,
            delta_sz2,
            kappa: m2 * delta_rho * delta_sz2,
            class: if (i, f) == ot {
                TransitionClass::Ot
            } else {
                TransitionClass::Sq
            },
        }
    })
}
