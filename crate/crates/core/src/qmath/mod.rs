//! Dense complex linear algebra and random-state generation.

pub mod bipartition;
pub mod matrix;
pub mod ops;
pub mod random;

pub use bipartition::{gather_bits, slot_bit, Bipartition, Subsystem, MAX_QUBITS};
pub use matrix::{gates, inner, kron_vec, norm, tensor_product, ComplexMatrix, C64, I, ONE, ZERO};
pub use ops::{
    hermitian_eigen, hermitian_spectrum, min_eigenvalue, partial_trace, partial_trace_dims,
    partial_transpose, schmidt_alpha, schmidt_alpha_with_gradient, HERMITIAN_TOL, PSD_TOL,
};
pub use random::{haar_random_pure, haar_random_vector, random_induced_mixed, uniform_simplex};
