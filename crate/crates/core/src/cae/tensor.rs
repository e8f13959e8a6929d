//! Channel-major batch tensors and the im2col kernels behind the
//! convolution layers.

/// Activations stored `[channel][sample][row][col]`, so a convolution over
/// the whole batch is a single matrix product.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tensor {
    pub c: usize,
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(c: usize, n: usize, h: usize, w: usize) -> Self {
        Self {
            c,
            n,
            h,
            w,
            data: vec![0.0; c * n * h * w],
        }
    }

    /// Elements per channel (`n·h·w`).
    pub fn plane(&self) -> usize {
        self.n * self.h * self.w
    }

    /// From per-sample `h × w × c` row-major images laid end to end.
    pub fn from_hwc(n: usize, h: usize, w: usize, c: usize, src: &[f64]) -> Self {
        let mut t = Self::zeros(c, n, h, w);
        for s in 0..n {
            for y in 0..h {
                for x in 0..w {
                    for ch in 0..c {
                        t.data[((ch * n + s) * h + y) * w + x] = src[((s * h + y) * w + x) * c + ch];
                    }
                }
            }
        }
        t
    }

    pub fn to_hwc(&self) -> Vec<f64> {
        let (c, n, h, w) = (self.c, self.n, self.h, self.w);
        let mut out = vec![0.0; self.data.len()];
        for s in 0..n {
            for y in 0..h {
                for x in 0..w {
                    for ch in 0..c {
                        out[((s * h + y) * w + x) * c + ch] = self.data[((ch * n + s) * h + y) * w + x];
                    }
                }
            }
        }
        out
    }

    /// `(C, N, H, W)` → `(C·H·W, N, 1, 1)`, feature index `(c·H + y)·W + x`.
    pub fn flatten(&self) -> Tensor {
        let (c, n, h, w) = (self.c, self.n, self.h, self.w);
        let mut out = Tensor::zeros(c * h * w, n, 1, 1);
        for ch in 0..c {
            for s in 0..n {
                for p in 0..h * w {
                    out.data[(ch * h * w + p) * n + s] = self.data[(ch * n + s) * h * w + p];
                }
            }
        }
        out
    }

    /// Inverse of [`Tensor::flatten`].
    pub fn unflatten(&self, c: usize, h: usize, w: usize) -> Tensor {
        let n = self.n;
        let mut out = Tensor::zeros(c, n, h, w);
        for ch in 0..c {
            for s in 0..n {
                for p in 0..h * w {
                    out.data[(ch * n + s) * h * w + p] = self.data[(ch * h * w + p) * n + s];
                }
            }
        }
        out
    }
}

/// `C = A·B (+ C)` for row-major operands; `a_t`/`b_t` read the stored
/// matrix transposed. `A` is logically `m × k`, `B` is `k × n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_t: bool,
    b: &[f64],
    b_t: bool,
    c: &mut [f64],
    accumulate: bool,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            c.iter_mut().for_each(|v| *v = 0.0);
        }
        return;
    }
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: strides and dimensions describe the slices checked above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Sliding-window geometry of a convolution from `(h, w)` to `(oh, ow)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Window {
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
    pub h: usize,
    pub w: usize,
    pub oh: usize,
    pub ow: usize,
}

impl Window {
    /// `None` when the kernel does not fit the padded input.
    pub fn new(h: usize, w: usize, kh: usize, kw: usize, stride: usize, pad: usize) -> Option<Self> {
        if h + 2 * pad < kh || w + 2 * pad < kw || stride == 0 {
            return None;
        }
        Some(Self {
            kh,
            kw,
            stride,
            pad,
            h,
            w,
            oh: (h + 2 * pad - kh) / stride + 1,
            ow: (w + 2 * pad - kw) / stride + 1,
        })
    }

    /// Rows of the column matrix per input channel.
    pub fn taps(&self) -> usize {
        self.kh * self.kw
    }

    fn source(&self, o: usize, k: usize, limit: usize) -> Option<usize> {
        let i = (o * self.stride + k) as isize - self.pad as isize;
        (i >= 0 && (i as usize) < limit).then_some(i as usize)
    }
}

/// Column matrix `[c·kh·kw, n·oh·ow]` of input patches.
pub(crate) fn im2col(x: &Tensor, win: &Window) -> Vec<f64> {
    let (c, n) = (x.c, x.n);
    let cols_n = n * win.oh * win.ow;
    let mut cols = vec![0.0; c * win.taps() * cols_n];
    for ch in 0..c {
        for ki in 0..win.kh {
            for kj in 0..win.kw {
                let row = (ch * win.kh + ki) * win.kw + kj;
                let dst = &mut cols[row * cols_n..(row + 1) * cols_n];
                for s in 0..n {
                    let base = (ch * n + s) * win.h * win.w;
                    for oy in 0..win.oh {
                        let Some(iy) = win.source(oy, ki, win.h) else { continue };
                        let out = (s * win.oh + oy) * win.ow;
                        let src = base + iy * win.w;
                        for ox in 0..win.ow {
                            if let Some(ix) = win.source(ox, kj, win.w) {
                                dst[out + ox] = x.data[src + ix];
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatters column entries back, summing overlaps.
pub(crate) fn col2im(cols: &[f64], c: usize, n: usize, win: &Window) -> Tensor {
    let mut x = Tensor::zeros(c, n, win.h, win.w);
    let cols_n = n * win.oh * win.ow;
    for ch in 0..c {
        for ki in 0..win.kh {
            for kj in 0..win.kw {
                let row = (ch * win.kh + ki) * win.kw + kj;
                let src = &cols[row * cols_n..(row + 1) * cols_n];
                for s in 0..n {
                    let base = (ch * n + s) * win.h * win.w;
                    for oy in 0..win.oh {
                        let Some(iy) = win.source(oy, ki, win.h) else { continue };
                        let inp = (s * win.oh + oy) * win.ow;
                        let dst = base + iy * win.w;
                        for ox in 0..win.ow {
                            if let Some(ix) = win.source(ox, kj, win.w) {
                                x.data[dst + ix] += src[inp + ox];
                            }
                        }
                    }
                }
            }
        }
    }
    x
}
