use crate::linalg::RMatrix;

/// Counts real multiply-adds performed by the instrumented kernels.
///
/// A complex product is carried out as real products on split parts and is
/// therefore counted as four.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounter {
    pub multiply_adds: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, n: usize) {
        self.multiply_adds += n as u64;
    }

    /// Dense product `a · b`, counted as `rows(a) · cols(a) · cols(b)`.
    pub fn mm(&mut self, a: &RMatrix, b: &RMatrix) -> RMatrix {
        self.add(a.nrows() * a.ncols() * b.ncols());
        a * b
    }

    /// `aᵀ · b`
    pub fn mm_tn(&mut self, a: &RMatrix, b: &RMatrix) -> RMatrix {
        self.add(a.nrows() * a.ncols() * b.ncols());
        a.tr_mul(b)
    }
}
