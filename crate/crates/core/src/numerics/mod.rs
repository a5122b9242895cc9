//! Dense linear algebra, a seeded PRNG and a symmetric eigensolver.

mod eigen;
mod matrix;
mod rng;

pub use eigen::{sym_eigen, SymEigen};
pub use matrix::{cosine_similarity, dot, norm, Matrix};
pub use rng::{gaussian_sample, SeededRng};

pub use num_complex::Complex64;
