//! Seeded generators for test matrices and the canonical demo spectra.
//!
//! Everything is driven by a portable ChaCha8 stream, so a seed produces
//! bitwise-identical inputs on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{qr_positive_r, DenseMatrix};
use crate::tridiag::SymTridiagonal;

/// Named presets used by the CLI.
pub const PRESET_SPECTRA: &[(&str, &[f64])] = &[
    ("hexagon", &[2.0, 4.0, 8.0]),
    ("cuboctahedron", &[1.0, 2.0, 3.0, 4.0]),
    ("bitorus", &[4.0, 5.0, 7.0]),
];

pub fn preset_spectrum(name: &str) -> Option<Vec<f64>> {
    PRESET_SPECTRA
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s.to_vec())
}

/// Seeded 64-bit generator.
#[derive(Debug, Clone)]
pub struct Rng64(ChaCha8Rng);

impl Rng64 {
    pub fn seeded(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.gen_range(lo..hi)
    }

    pub fn normal(&mut self) -> f64 {
        // Box–Muller; one draw per call keeps the stream layout simple
        let u1: f64 = 1.0 - self.0.gen::<f64>();
        let u2: f64 = self.0.gen::<f64>();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    pub fn coin(&mut self) -> bool {
        self.0.gen()
    }

    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.index(i + 1);
            v.swap(i, j);
        }
    }
}

/// Symmetric matrix with standard normal entries.
pub fn random_symmetric(rng: &mut Rng64, n: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let x = rng.normal();
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

/// Haar-ish random rotation (QR of a Gaussian matrix, determinant fixed to +1).
pub fn random_orthogonal(rng: &mut Rng64, n: usize) -> DenseMatrix {
    loop {
        let g = DenseMatrix::from_fn(n, |_, _| rng.normal());
        if let Ok(f) = qr_positive_r(&g) {
            let mut q = f.q;
            if q.determinant() < 0.0 {
                for i in 0..n {
                    q[(i, 0)] = -q[(i, 0)];
                }
            }
            return q;
        }
    }
}

/// `Q diag(spectrum) Qᵀ` for a random rotation `Q`.
pub fn random_with_spectrum(rng: &mut Rng64, spectrum: &[f64]) -> DenseMatrix {
    let n = spectrum.len();
    let q = random_orthogonal(rng, n);
    DenseMatrix::from_diagonal(spectrum).congruence(&q.transpose()).symmetrized()
}

/// Symmetric positive definite matrix with eigenvalues uniform in `[lo, hi]`.
pub fn random_spd(rng: &mut Rng64, n: usize, lo: f64, hi: f64) -> DenseMatrix {
    let spectrum: Vec<f64> = (0..n).map(|_| rng.uniform(lo, hi)).collect();
    random_with_spectrum(rng, &spectrum)
}

/// Jacobi matrix with diagonal in `[-1, 1]` and off-diagonal in `[0.2, 1]`.
pub fn random_jacobi(rng: &mut Rng64, n: usize) -> SymTridiagonal {
    random_jacobi_in(rng, n, (-1.0, 1.0), (0.2, 1.0))
}

pub fn random_jacobi_in(
    rng: &mut Rng64,
    n: usize,
    diag: (f64, f64),
    off: (f64, f64),
) -> SymTridiagonal {
    let a = (0..n).map(|_| rng.uniform(diag.0, diag.1)).collect();
    let b = (0..n - 1).map(|_| rng.uniform(off.0, off.1)).collect();
    SymTridiagonal::new(a, b).expect("generated entries are finite")
}

/// Random point of the unit sphere with strictly positive entries bounded
/// away from zero (norming-constant style vectors).
pub fn random_positive_unit(rng: &mut Rng64, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.uniform(0.2, 1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Strictly increasing spectrum with gaps at least `min_gap`.
pub fn random_spectrum(rng: &mut Rng64, n: usize, lo: f64, hi: f64, min_gap: f64) -> Vec<f64> {
    loop {
        let mut s: Vec<f64> = (0..n).map(|_| rng.uniform(lo, hi)).collect();
        s.sort_by(f64::total_cmp);
        if s.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng64::seeded(42);
        let mut b = Rng64::seeded(42);
        let ma = random_symmetric(&mut a, 4);
        let mb = random_symmetric(&mut b, 4);
        assert_eq!(ma.as_slice(), mb.as_slice());
    }

    #[test]
    fn orthogonal_is_rotation() {
        let mut rng = Rng64::seeded(1);
        let q = random_orthogonal(&mut rng, 5);
        assert!(q.transpose().matmul(&q).max_abs_diff(&DenseMatrix::identity(5)) < 1e-14);
        assert!((q.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn presets() {
        assert_eq!(preset_spectrum("hexagon"), Some(vec![2.0, 4.0, 8.0]));
        assert_eq!(preset_spectrum("nope"), None);
    }
}
