use super::{NnError, Result, Tensor};

/// 2x2 max pooling with stride 2. An odd trailing row or column is dropped.
///
/// Returns the pooled tensor and, per output element, the flat input index
/// that won (the first maximum in row-major window order).
pub fn maxpool2d(x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    let (n, h, w, c) = x.dims4()?;
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(n * oh * ow * c);
    let mut arg = Vec::with_capacity(out.capacity());
    let d = x.data();
    for s in 0..n {
        for i in 0..oh {
            for j in 0..ow {
                for ch in 0..c {
                    let at = |dy: usize, dx: usize| ((s * h + 2 * i + dy) * w + 2 * j + dx) * c + ch;
                    let mut best = at(0, 0);
                    for idx in [at(0, 1), at(1, 0), at(1, 1)] {
                        if d[idx] > d[best] {
                            best = idx;
                        }
                    }
                    out.push(d[best]);
                    arg.push(best);
                }
            }
        }
    }
    Ok((Tensor::new(&[n, oh, ow, c], out)?, arg))
}

pub fn maxpool2d_backward(dout: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor> {
    if dout.len() != argmax.len() {
        return Err(NnError::ShapeMismatch("gradient and argmax lengths differ".into()));
    }
    let mut dx = Tensor::zeros(input_shape);
    let g = dx.data_mut();
    for (&idx, &v) in argmax.iter().zip(dout.data()) {
        g[idx] += v;
    }
    Ok(dx)
}

/// Nearest-neighbor 2x upsampling: every pixel becomes a 2x2 block.
pub fn upsample_nearest_2x(x: &Tensor) -> Result<Tensor> {
    let (n, h, w, c) = x.dims4()?;
    let mut out = vec![0.0f32; n * 4 * h * w * c];
    let d = x.data();
    for s in 0..n {
        for y in 0..2 * h {
            for xx in 0..2 * w {
                let src = ((s * h + y / 2) * w + xx / 2) * c;
                let dst = ((s * 2 * h + y) * 2 * w + xx) * c;
                out[dst..dst + c].copy_from_slice(&d[src..src + c]);
            }
        }
    }
    Tensor::new(&[n, 2 * h, 2 * w, c], out)
}

/// Sums each 2x2 block of the upstream gradient.
pub fn upsample_backward(dout: &Tensor) -> Result<Tensor> {
    let (n, h2, w2, c) = dout.dims4()?;
    if h2 % 2 != 0 || w2 % 2 != 0 {
        return Err(NnError::ShapeMismatch(format!("upsampled gradient {h2}x{w2} is not even")));
    }
    let (h, w) = (h2 / 2, w2 / 2);
    let mut dx = vec![0.0f32; n * h * w * c];
    let d = dout.data();
    for s in 0..n {
        for y in 0..h2 {
            for x in 0..w2 {
                let src = ((s * h2 + y) * w2 + x) * c;
                let dst = ((s * h + y / 2) * w + x / 2) * c;
                for (o, &v) in dx[dst..dst + c].iter_mut().zip(&d[src..src + c]) {
                    *o += v;
                }
            }
        }
    }
    Tensor::new(&[n, h, w, c], dx)
}

/// Channel concatenation, `a` first.
pub fn concat_channels(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (n, h, w, ca) = a.dims4()?;
    let (nb, hb, wb, cb) = b.dims4()?;
    if (n, h, w) != (nb, hb, wb) {
        return Err(NnError::SpatialMismatch {
            a: a.shape().to_vec(),
            b: b.shape().to_vec(),
        });
    }
    let (da, db) = (a.data(), b.data());
    let mut out = Vec::with_capacity(n * h * w * (ca + cb));
    for p in 0..n * h * w {
        out.extend_from_slice(&da[p * ca..(p + 1) * ca]);
        out.extend_from_slice(&db[p * cb..(p + 1) * cb]);
    }
    Tensor::new(&[n, h, w, ca + cb], out)
}

/// Inverse of [`concat_channels`]: the first `ca` channels and the rest.
pub fn split_channels(x: &Tensor, ca: usize) -> Result<(Tensor, Tensor)> {
    let (n, h, w, c) = x.dims4()?;
    if ca > c {
        return Err(NnError::ShapeMismatch(format!("cannot split {c} channels at {ca}")));
    }
    let cb = c - ca;
    let mut a = Vec::with_capacity(n * h * w * ca);
    let mut b = Vec::with_capacity(n * h * w * cb);
    if c > 0 {
        for px in x.data().chunks_exact(c) {
            a.extend_from_slice(&px[..ca]);
            b.extend_from_slice(&px[ca..]);
        }
    }
    Ok((Tensor::new(&[n, h, w, ca], a)?, Tensor::new(&[n, h, w, cb], b)?))
}
