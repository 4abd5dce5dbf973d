use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NnError, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Padding {
    Valid,
    Same,
}

/// Scratch budget for one im2col block, in f32 elements (8 MiB).
const COL_BLOCK: usize = 2 << 20;
/// Samples whose weight gradients are accumulated together before the
/// fixed-order reduction across groups.
const GRAD_GROUP: usize = 4;

/// `c = a · b + beta · c` for row-major operands given by strides.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    (rsa, csa): (isize, isize),
    b: &[f32],
    (rsb, csb): (isize, isize),
    beta: f32,
    c: &mut [f32],
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(c.len() >= m * n);
    // SAFETY: every caller passes slices covering the strided extents of the
    // m x k, k x n and m x n operands.
    unsafe {
        matrixmultiply::sgemm(
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

#[derive(Debug, Clone, Copy)]
struct Geometry {
    h: usize,
    w: usize,
    cin: usize,
    kh: usize,
    kw: usize,
    cout: usize,
    pad_y: usize,
    pad_x: usize,
    oh: usize,
    ow: usize,
}

impl Geometry {
    fn new(x: &Tensor, wt: &Tensor, padding: Padding) -> Result<(usize, Geometry)> {
        let (n, h, w, cin) = x.dims4()?;
        let (kh, kw, wcin, cout) = wt.dims4()?;
        if kh % 2 == 0 || kw % 2 == 0 {
            return Err(NnError::EvenKernel(kh, kw));
        }
        if wcin != cin {
            return Err(NnError::ShapeMismatch(format!("input has {cin} channels, kernel expects {wcin}")));
        }
        let (pad_y, pad_x, oh, ow) = match padding {
            Padding::Same => ((kh - 1) / 2, (kw - 1) / 2, h, w),
            Padding::Valid => {
                if h < kh || w < kw {
                    return Err(NnError::ShapeMismatch(format!("{h}x{w} input smaller than {kh}x{kw} kernel")));
                }
                (0, 0, h - kh + 1, w - kw + 1)
            }
        };
        Ok((
            n,
            Geometry {
                h,
                w,
                cin,
                kh,
                kw,
                cout,
                pad_y,
                pad_x,
                oh,
                ow,
            },
        ))
    }

    #[inline]
    fn k(&self) -> usize {
        self.kh * self.kw * self.cin
    }

    #[inline]
    fn positions(&self) -> usize {
        self.oh * self.ow
    }

    fn block_rows(&self) -> usize {
        (COL_BLOCK / self.k()).clamp(1, self.positions().max(1))
    }

    /// Receptive-field rows `r0..r1` of one sample, columns ordered `(ky, kx, ci)`.
    fn im2col(&self, x: &[f32], r0: usize, r1: usize, col: &mut [f32]) {
        let (k, cin) = (self.k(), self.cin);
        for (r, row) in (r0..r1).zip(col.chunks_exact_mut(k)) {
            let (oy, ox) = (r / self.ow, r % self.ow);
            for ky in 0..self.kh {
                let iy = (oy + ky) as isize - self.pad_y as isize;
                for kx in 0..self.kw {
                    let ix = (ox + kx) as isize - self.pad_x as isize;
                    let dst = &mut row[(ky * self.kw + kx) * cin..][..cin];
                    if iy < 0 || ix < 0 || iy >= self.h as isize || ix >= self.w as isize {
                        dst.fill(0.0);
                    } else {
                        let src = (iy as usize * self.w + ix as usize) * cin;
                        dst.copy_from_slice(&x[src..src + cin]);
                    }
                }
            }
        }
    }

    /// Scatter-adds column gradients back onto the input sample.
    fn col2im(&self, col: &[f32], r0: usize, r1: usize, dx: &mut [f32]) {
        let (k, cin) = (self.k(), self.cin);
        for (r, row) in (r0..r1).zip(col.chunks_exact(k)) {
            let (oy, ox) = (r / self.ow, r % self.ow);
            for ky in 0..self.kh {
                let iy = (oy + ky) as isize - self.pad_y as isize;
                if iy < 0 || iy >= self.h as isize {
                    continue;
                }
                for kx in 0..self.kw {
                    let ix = (ox + kx) as isize - self.pad_x as isize;
                    if ix < 0 || ix >= self.w as isize {
                        continue;
                    }
                    let src = &row[(ky * self.kw + kx) * cin..][..cin];
                    let dst = (iy as usize * self.w + ix as usize) * cin;
                    for (d, s) in dx[dst..dst + cin].iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
        }
    }
}

/// Stride-1 2-D convolution. `x: [N, H, W, Cin]`, `w: [kh, kw, Cin, Cout]`, `b: [Cout]`.
pub fn conv2d(x: &Tensor, w: &Tensor, b: &Tensor, padding: Padding) -> Result<Tensor> {
    let (n, g) = Geometry::new(x, w, padding)?;
    if b.shape() != [g.cout] {
        return Err(NnError::ShapeMismatch(format!("bias {:?} for {} filters", b.shape(), g.cout)));
    }
    let in_per = g.h * g.w * g.cin;
    let out_per = g.positions() * g.cout;
    let mut out = vec![0.0f32; n * out_per];
    let (k, block) = (g.k(), g.block_rows());
    out.par_chunks_mut(out_per.max(1)).enumerate().for_each(|(s, o)| {
        let xs = &x.data()[s * in_per..(s + 1) * in_per];
        for row in o.chunks_exact_mut(g.cout) {
            row.copy_from_slice(b.data());
        }
        let mut col = vec![0.0f32; block * k];
        let mut r0 = 0;
        while r0 < g.positions() {
            let r1 = (r0 + block).min(g.positions());
            g.im2col(xs, r0, r1, &mut col);
            gemm(
                r1 - r0,
                k,
                g.cout,
                &col,
                (k as isize, 1),
                w.data(),
                (g.cout as isize, 1),
                1.0,
                &mut o[r0 * g.cout..r1 * g.cout],
            );
            r0 = r1;
        }
    });
    let out = Tensor::new(&[n, g.oh, g.ow, g.cout], out)?;
    out.debug_check();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ConvGrads {
    /// Absent when the caller did not ask for the input gradient.
    pub dx: Option<Tensor>,
    pub dw: Tensor,
    pub db: Tensor,
}

/// Gradients of [`conv2d`] given the upstream gradient `dout`.
///
/// Weight gradients are summed within fixed groups of samples and the group
/// partials are then added in group order, so the result does not depend on
/// the thread count.
pub fn conv2d_backward(x: &Tensor, w: &Tensor, dout: &Tensor, padding: Padding, need_dx: bool) -> Result<ConvGrads> {
    let (n, g) = Geometry::new(x, w, padding)?;
    if dout.shape() != [n, g.oh, g.ow, g.cout] {
        return Err(NnError::ShapeMismatch(format!(
            "upstream gradient {:?}, expected {:?}",
            dout.shape(),
            [n, g.oh, g.ow, g.cout]
        )));
    }
    let (k, block, p) = (g.k(), g.block_rows(), g.positions());
    let in_per = g.h * g.w * g.cin;
    let out_per = p * g.cout;

    let groups: Vec<(Vec<f32>, Vec<f64>)> = (0..n.div_ceil(GRAD_GROUP))
        .into_par_iter()
        .map(|gi| {
            let mut dw = vec![0.0f32; k * g.cout];
            let mut db = vec![0.0f64; g.cout];
            let mut col = vec![0.0f32; block * k];
            for s in gi * GRAD_GROUP..((gi + 1) * GRAD_GROUP).min(n) {
                let xs = &x.data()[s * in_per..(s + 1) * in_per];
                let ds = &dout.data()[s * out_per..(s + 1) * out_per];
                for row in ds.chunks_exact(g.cout) {
                    for (acc, &v) in db.iter_mut().zip(row) {
                        *acc += v as f64;
                    }
                }
                let mut r0 = 0;
                while r0 < p {
                    let r1 = (r0 + block).min(p);
                    g.im2col(xs, r0, r1, &mut col);
                    // dW += colᵀ · dOut
                    gemm(
                        k,
                        r1 - r0,
                        g.cout,
                        &col,
                        (1, k as isize),
                        &ds[r0 * g.cout..],
                        (g.cout as isize, 1),
                        1.0,
                        &mut dw,
                    );
                    r0 = r1;
                }
            }
            (dw, db)
        })
        .collect();
    let mut dw = vec![0.0f32; k * g.cout];
    let mut db = vec![0.0f64; g.cout];
    for (gw, gb) in &groups {
        for (a, b) in dw.iter_mut().zip(gw) {
            *a += b;
        }
        for (a, b) in db.iter_mut().zip(gb) {
            *a += b;
        }
    }

    let dx = if need_dx {
        let mut dx = vec![0.0f32; n * in_per];
        dx.par_chunks_mut(in_per.max(1)).enumerate().for_each(|(s, dxs)| {
            let ds = &dout.data()[s * out_per..(s + 1) * out_per];
            let mut col = vec![0.0f32; block * k];
            let mut r0 = 0;
            while r0 < p {
                let r1 = (r0 + block).min(p);
                // dCol = dOut · Wᵀ
                gemm(
                    r1 - r0,
                    g.cout,
                    k,
                    &ds[r0 * g.cout..],
                    (g.cout as isize, 1),
                    w.data(),
                    (1, g.cout as isize),
                    0.0,
                    &mut col,
                );
                g.col2im(&col, r0, r1, dxs);
                r0 = r1;
            }
        });
        Some(Tensor::new(x.shape(), dx)?)
    } else {
        None
    };
    Ok(ConvGrads {
        dx,
        dw: Tensor::new(w.shape(), dw)?,
        db: Tensor::new(&[g.cout], db.into_iter().map(|v| v as f32).collect())?,
    })
}
