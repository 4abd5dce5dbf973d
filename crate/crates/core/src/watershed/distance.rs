use super::{BinaryMask, ScalarField};

/// Stand-in for +infinity that keeps the parabola arithmetic finite.
const FAR: f64 = 1e20;

/// Lower envelope of parabolas: exact 1-D squared distance transform of `f`.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let intersect = |q: usize, p: usize| {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
    };
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s = intersect(q, v[k]);
        // z[0] is -inf, so this never walks past the first parabola.
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance from every foreground pixel to the nearest
/// background pixel, computed with separable column and row passes.
///
/// Background pixels are 0. A mask with no background pixel at all has no
/// finite answer; every pixel then gets `max(width, height)`.
pub fn distance_transform(mask: &BinaryMask) -> ScalarField {
    let (w, h) = (mask.width, mask.height);
    let n = w.max(h);
    let mut grid: Vec<f64> = mask.bits.iter().map(|&b| if b { FAR } else { 0.0 }).collect();
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);

    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        grid[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }

    let values = grid
        .into_iter()
        .map(|d2| if d2 >= FAR / 2.0 { n as f64 } else { d2.sqrt() })
        .collect();
    ScalarField::new(w, h, values)
}
