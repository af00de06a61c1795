//! Dense batched feature maps.

use std::cell::RefCell;

use crate::arma::TimeSeries;
use crate::error::{Error, Result};

// Training passes churn through many same-sized feature maps per step; at
// typical sizes every fresh allocation is an mmap round trip, so dropped
// buffers are recycled through a small thread-local pool instead.
const POOL_MAX_BUFFERS: usize = 64;
const POOL_MAX_BYTES: usize = 1 << 28;

thread_local! {
    static BUFFER_POOL: RefCell<(usize, Vec<Vec<f64>>)> = const { RefCell::new((0, Vec::new())) };
}

fn pool_get_zeroed(n: usize) -> Vec<f64> {
    BUFFER_POOL.with(|pool| {
        let (bytes, bufs) = &mut *pool.borrow_mut();
        if let Some(idx) = bufs.iter().rposition(|b| b.capacity() >= n) {
            let mut buf = bufs.swap_remove(idx);
            *bytes -= buf.capacity() * 8;
            buf.clear();
            buf.resize(n, 0.0);
            return buf;
        }
        vec![0.0; n]
    })
}

fn pool_put(buf: Vec<f64>) {
    if buf.capacity() == 0 {
        return;
    }
    BUFFER_POOL.with(|pool| {
        let (bytes, bufs) = &mut *pool.borrow_mut();
        if bufs.len() < POOL_MAX_BUFFERS && *bytes + buf.capacity() * 8 <= POOL_MAX_BYTES {
            *bytes += buf.capacity() * 8;
            bufs.push(buf);
        }
    });
}

/// A batch of feature maps stored row-major as `[batch][channel][time]`.
#[derive(Debug)]
pub struct SeriesBatch {
    data: Vec<f64>,
    batch: usize,
    channels: usize,
    len: usize,
}

impl Drop for SeriesBatch {
    fn drop(&mut self) {
        pool_put(std::mem::take(&mut self.data));
    }
}

impl Clone for SeriesBatch {
    fn clone(&self) -> Self {
        let mut data = pool_get_zeroed(self.data.len());
        data.copy_from_slice(&self.data);
        SeriesBatch {
            data,
            batch: self.batch,
            channels: self.channels,
            len: self.len,
        }
    }
}

impl PartialEq for SeriesBatch {
    fn eq(&self, other: &Self) -> bool {
        self.batch == other.batch
            && self.channels == other.channels
            && self.len == other.len
            && self.data == other.data
    }
}

impl SeriesBatch {
    pub fn zeros(batch: usize, channels: usize, len: usize) -> Self {
        SeriesBatch {
            data: pool_get_zeroed(batch * channels * len),
            batch,
            channels,
            len,
        }
    }

    /// Packs standardized series into a single-channel batch.
    pub fn from_series(series: &[&TimeSeries], expected_len: usize) -> Result<Self> {
        let batch = series.len();
        let mut out = SeriesBatch::zeros(batch, 1, expected_len);
        for (b, ts) in series.iter().enumerate() {
            if ts.len() != expected_len {
                return Err(Error::InputLengthMismatch {
                    got: ts.len(),
                    expected: expected_len,
                });
            }
            out.row_mut(b, 0).copy_from_slice(&ts.values);
        }
        Ok(out)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, b: usize, c: usize) -> &[f64] {
        let start = (b * self.channels + c) * self.len;
        &self.data[start..start + self.len]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let start = (b * self.channels + c) * self.len;
        &mut self.data[start..start + self.len]
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &SeriesBatch) -> Result<()> {
        if self.batch != other.batch || self.channels != other.channels || self.len != other.len {
            return Err(Error::ShapeMismatch(format!(
                "add: ({},{},{}) vs ({},{},{})",
                self.batch, self.channels, self.len, other.batch, other.channels, other.len
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Adds a single-channel input to every channel (the parameter-free
    /// fan-out skip).
    pub fn add_broadcast(&mut self, input: &SeriesBatch) -> Result<()> {
        if input.channels != 1 || self.batch != input.batch || self.len != input.len {
            return Err(Error::ShapeMismatch(format!(
                "broadcast add: ({},{},{}) += ({},{},{})",
                self.batch, self.channels, self.len, input.batch, input.channels, input.len
            )));
        }
        for b in 0..self.batch {
            for c in 0..self.channels {
                let start = (b * self.channels + c) * self.len;
                let src = input.row(b, 0);
                for (dst, s) in self.data[start..start + self.len].iter_mut().zip(src) {
                    *dst += s;
                }
            }
        }
        Ok(())
    }
}
