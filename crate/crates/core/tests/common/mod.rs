//! Test-only oracles, implemented independently of the library paths they
//! check.

#![allow(clippy::needless_range_loop)]
// each test binary compiles this module; not every binary uses every oracle
#![allow(dead_code)]

use nvsim_core::spin::{EigenSystem, SpinMatrix};

/// Eigenvalues of a real symmetric 3×3 matrix, ascending, from the roots
/// of the characteristic polynomial by the trigonometric cubic formula.
/// A completely different route from the Jacobi iteration in the library.
pub fn cubic_eigenvalues(h: &SpinMatrix) -> [f64; 3] {
    let mut a = [[0.0f64; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            a[r][c] = h.get(r, c).re;
        }
    }
    let tr = a[0][0] + a[1][1] + a[2][2];
    let minors = (a[0][0] * a[1][1] - a[0][1] * a[1][0])
        + (a[0][0] * a[2][2] - a[0][2] * a[2][0])
        + (a[1][1] * a[2][2] - a[1][2] * a[2][1]);
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);

    // λ³ − tr λ² + minors λ − det = 0; substitute λ = t + tr/3
    let p = minors - tr * tr / 3.0;
    let q = -2.0 * tr * tr * tr / 27.0 + tr * minors / 3.0 - det;

    if p >= -1e-300 {
        // triple root within rounding
        return [tr / 3.0; 3];
    }
    let amp = 2.0 * (-p / 3.0).sqrt();
    let cos3 = (-4.0 * q / (amp * amp * amp)).clamp(-1.0, 1.0);
    let phi = cos3.acos() / 3.0;
    let mut roots = [0.0f64; 3];
    for (k, root) in roots.iter_mut().enumerate() {
        *root = amp * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + tr / 3.0;
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Re-evaluate (m2, Δ⟨ρ⟩, Δ⟨S_z²⟩, κ) for the pair (i, f) directly from
/// the eigenvectors, with hand-written operator entries and explicit
/// loops; shares no code with the library's transition enumeration.
pub fn direct_kappa(es: &EigenSystem, gamma: f64, i: usize, f: usize) -> (f64, f64, f64, f64) {
    let s = 0.5f64.sqrt();
    let sx = [[0.0, s, 0.0], [s, 0.0, s], [0.0, s, 0.0]];
    // S_y is purely imaginary: entry (r, c) = i * sy_im[r][c]
    let sy_im = [[0.0, -s, 0.0], [s, 0.0, -s], [0.0, s, 0.0]];
    let sz2 = [1.0, 0.0, 1.0];
    let rho = [0.0, 1.0, 0.0];

    let vi = es.vectors[i];
    let vf = es.vectors[f];
    let mut mel_x = 0.0;
    let mut mel_y_im = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            mel_x += vf[r] * sx[r][c] * vi[c];
            mel_y_im += vf[r] * sy_im[r][c] * vi[c];
        }
    }
    let m2 = gamma * gamma * (mel_x * mel_x + mel_y_im * mel_y_im);

    let diag_expect =
        |v: &[f64; 3], d: &[f64; 3]| -> f64 { v.iter().zip(d).map(|(x, dd)| x * x * dd).sum() };
    let delta_rho = diag_expect(&vf, &rho) - diag_expect(&vi, &rho);
    let delta_sz2 = diag_expect(&vf, &sz2) - diag_expect(&vi, &sz2);
    (m2, delta_rho, delta_sz2, m2 * delta_rho * delta_sz2)
}
