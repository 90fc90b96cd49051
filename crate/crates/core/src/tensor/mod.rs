//! Bit-packed Boolean matrices and 3-order tensors.

mod matrix;
mod ops;
mod tensor3;

pub use matrix::BoolMatrix;
pub use ops::{
    bool_kronecker, bool_matmul, density, fold, hamming_error, mode_basis, tucker_reconstruct,
    unfold, unfolded_shape, ErrorStat,
};
pub use tensor3::{BoolTensor3, Dims, Mode};
