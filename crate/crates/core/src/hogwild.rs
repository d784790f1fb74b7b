use std::cell::UnsafeCell;

/// Parameter buffer shared between training threads without locking.
///
/// Workers read and write rows concurrently. Updates are sparse, so lost or
/// torn updates are rare and tolerated by stochastic gradient descent. With
/// a single worker the buffer behaves like an ordinary `Vec`.
pub(crate) struct HogwildBuffer {
    data: UnsafeCell<Vec<f32>>,
    dim: usize,
}

unsafe impl Sync for HogwildBuffer {}

impl HogwildBuffer {
    pub(crate) fn new(data: Vec<f32>, dim: usize) -> Self {
        HogwildBuffer {
            data: UnsafeCell::new(data),
            dim,
        }
    }

    #[inline]
    #[allow(clippy::mut_from_ref)]
    pub(crate) fn row_mut(&self, r: usize) -> &mut [f32] {
        // SAFETY: bounds are checked by slice indexing. Concurrent access to
        // the same row is the accepted Hogwild race on plain f32 values.
        unsafe {
            let data = &mut *self.data.get();
            &mut data[r * self.dim..(r + 1) * self.dim]
        }
    }

    #[inline]
    pub(crate) fn row(&self, r: usize) -> &[f32] {
        self.row_mut(r)
    }

    pub(crate) fn into_inner(self) -> Vec<f32> {
        self.data.into_inner()
    }
}
