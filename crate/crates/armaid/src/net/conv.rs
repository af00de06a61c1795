//! 1-D convolution (cross-correlation) with same-length zero padding.

use rayon::prelude::*;

use super::batch::SeriesBatch;
use crate::error::{Error, Result};

/// A 1-D convolution layer. Weights are stored as
/// `[out_channel][in_channel][tap]`, taps centered so the output keeps the
/// input length: `y[o,t] = b[o] + sum_{i,j} w[o,i,j] * x[i, t+j-(kw-1)/2]`.
#[derive(Clone, Debug)]
pub struct Conv1d {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub out_ch: usize,
    pub in_ch: usize,
    pub kw: usize,
}

/// Dot product with four independent accumulators; the fixed association
/// order keeps results identical run to run while letting the lanes
/// pipeline.
#[inline]
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        acc[0] += xa[0] * xb[0];
        acc[1] += xa[1] * xb[1];
        acc[2] += xa[2] * xb[2];
        acc[3] += xa[3] * xb[3];
    }
    let mut tail = 0.0;
    for (xa, xb) in ca.remainder().iter().zip(cb.remainder()) {
        tail += xa * xb;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl Conv1d {
    pub fn zeros(out_ch: usize, in_ch: usize, kw: usize) -> Self {
        assert!(kw % 2 == 1, "kernel width must be odd");
        Conv1d {
            w: vec![0.0; out_ch * in_ch * kw],
            b: vec![0.0; out_ch],
            out_ch,
            in_ch,
            kw,
        }
    }

    #[inline]
    fn wslice(&self, o: usize, i: usize) -> &[f64] {
        let start = (o * self.in_ch + i) * self.kw;
        &self.w[start..start + self.kw]
    }

    pub fn forward(&self, x: &SeriesBatch) -> Result<SeriesBatch> {
        if x.channels() != self.in_ch {
            return Err(Error::ShapeMismatch(format!(
                "conv expects {} input channels, got {}",
                self.in_ch,
                x.channels()
            )));
        }
        let (batch, len) = (x.batch(), x.len());
        let center = (self.kw - 1) / 2;
        let mut y = SeriesBatch::zeros(batch, self.out_ch, len);
        let out_ch = self.out_ch;
        y.data_mut()
            .par_chunks_mut(len)
            .enumerate()
            .for_each(|(row, y_row)| {
                let b = row / out_ch;
                let o = row % out_ch;
                y_row.fill(self.b[o]);
                for i in 0..self.in_ch {
                    let x_row = x.row(b, i);
                    let taps = self.wslice(o, i);
                    for (j, &wv) in taps.iter().enumerate() {
                        if wv == 0.0 {
                            continue;
                        }
                        let shift = j as isize - center as isize;
                        let t0 = (-shift).max(0) as usize;
                        let t1 = ((len as isize - shift).min(len as isize)).max(0) as usize;
                        if t0 >= t1 {
                            continue;
                        }
                        let xs =
                            &x_row[(t0 as isize + shift) as usize..(t1 as isize + shift) as usize];
                        for (yv, xv) in y_row[t0..t1].iter_mut().zip(xs) {
                            *yv += wv * xv;
                        }
                    }
                }
            });
        Ok(y)
    }

    /// Gradients of the loss w.r.t. input, weights and biases given the
    /// saved forward input `x` and output gradient `dy`.
    pub fn backward(&self, x: &SeriesBatch, dy: &SeriesBatch) -> (SeriesBatch, Vec<f64>, Vec<f64>) {
        let (batch, len) = (x.batch(), x.len());
        let center = (self.kw - 1) / 2;

        let mut dx = SeriesBatch::zeros(batch, self.in_ch, len);
        let in_ch = self.in_ch;
        dx.data_mut()
            .par_chunks_mut(len)
            .enumerate()
            .for_each(|(row, dx_row)| {
                let b = row / in_ch;
                let i = row % in_ch;
                for o in 0..self.out_ch {
                    let dy_row = dy.row(b, o);
                    let taps = self.wslice(o, i);
                    for (j, &wv) in taps.iter().enumerate() {
                        if wv == 0.0 {
                            continue;
                        }
                        // y[t] touched x[t+shift], so dx[s] accumulates dy[s-shift].
                        let shift = j as isize - center as isize;
                        let s0 = shift.max(0) as usize;
                        let s1 = ((len as isize + shift).min(len as isize)).max(0) as usize;
                        if s0 >= s1 {
                            continue;
                        }
                        let dys =
                            &dy_row[(s0 as isize - shift) as usize..(s1 as isize - shift) as usize];
                        for (dxv, dyv) in dx_row[s0..s1].iter_mut().zip(dys) {
                            *dxv += wv * dyv;
                        }
                    }
                }
            });

        let kw = self.kw;
        let mut dw = vec![0.0f64; self.w.len()];
        dw.par_chunks_mut(in_ch * kw)
            .enumerate()
            .for_each(|(o, dw_o)| {
                for b in 0..batch {
                    let dy_row = dy.row(b, o);
                    for i in 0..in_ch {
                        let x_row = x.row(b, i);
                        for j in 0..kw {
                            let shift = j as isize - center as isize;
                            let t0 = (-shift).max(0) as usize;
                            let t1 = ((len as isize - shift).min(len as isize)).max(0) as usize;
                            if t0 >= t1 {
                                continue;
                            }
                            let xs = &x_row
                                [(t0 as isize + shift) as usize..(t1 as isize + shift) as usize];
                            dw_o[i * kw + j] += dot4(&dy_row[t0..t1], xs);
                        }
                    }
                }
            });

        let mut db = vec![0.0f64; self.out_ch];
        for b in 0..batch {
            for (o, dbo) in db.iter_mut().enumerate() {
                *dbo += dy.row(b, o).iter().sum::<f64>();
            }
        }

        (dx, dw, db)
    }
}
