use super::conv::gemm;
use super::{NnError, Result, Tensor};

/// `x: [N, F] · w: [F, U] + b: [U]`.
pub fn dense(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (n, f) = x.dims2()?;
    let (wf, u) = w.dims2()?;
    if wf != f || b.shape() != [u] {
        return Err(NnError::ShapeMismatch(format!(
            "x {:?}, w {:?}, b {:?}",
            x.shape(),
            w.shape(),
            b.shape()
        )));
    }
    let mut out: Vec<f32> = (0..n).flat_map(|_| b.data().iter().copied()).collect();
    gemm(n, f, u, x.data(), (f as isize, 1), w.data(), (u as isize, 1), 1.0, &mut out);
    let out = Tensor::new(&[n, u], out)?;
    out.debug_check();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn dense_backward(x: &Tensor, w: &Tensor, dout: &Tensor) -> Result<DenseGrads> {
    let (n, f) = x.dims2()?;
    let (_, u) = w.dims2()?;
    if dout.shape() != [n, u] {
        return Err(NnError::ShapeMismatch(format!("upstream gradient {:?}", dout.shape())));
    }
    let mut dx = vec![0.0f32; n * f];
    gemm(n, u, f, dout.data(), (u as isize, 1), w.data(), (1, u as isize), 0.0, &mut dx);
    let mut dw = vec![0.0f32; f * u];
    gemm(f, n, u, x.data(), (1, f as isize), dout.data(), (u as isize, 1), 0.0, &mut dw);
    let mut db = vec![0.0f64; u];
    for row in dout.data().chunks_exact(u) {
        for (a, &v) in db.iter_mut().zip(row) {
            *a += v as f64;
        }
    }
    Ok(DenseGrads {
        dx: Tensor::new(&[n, f], dx)?,
        dw: Tensor::new(&[f, u], dw)?,
        db: Tensor::new(&[u], db.into_iter().map(|v| v as f32).collect())?,
    })
}
