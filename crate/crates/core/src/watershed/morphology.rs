use super::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Erode,
    Dilate,
    /// Erode `iterations` times, then dilate `iterations` times.
    Open,
}

fn step(mask: &BinaryMask, erode: bool) -> BinaryMask {
    let (w, h) = (mask.width as isize, mask.height as isize);
    BinaryMask::from_fn(mask.width, mask.height, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let mut hits = 0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                // Outside the image counts as background.
                if nx >= 0 && ny >= 0 && nx < w && ny < h && mask.bits[(ny * w + nx) as usize] {
                    hits += 1;
                }
            }
        }
        if erode {
            hits == 9
        } else {
            hits > 0
        }
    })
}

/// Binary morphology with a 3x3 square structuring element.
pub fn morphology(mask: &BinaryMask, op: MorphOp, iterations: usize) -> BinaryMask {
    let mut out = mask.clone();
    match op {
        MorphOp::Erode => (0..iterations).for_each(|_| out = step(&out, true)),
        MorphOp::Dilate => (0..iterations).for_each(|_| out = step(&out, false)),
        MorphOp::Open => {
            (0..iterations).for_each(|_| out = step(&out, true));
            (0..iterations).for_each(|_| out = step(&out, false));
        }
    }
    out
}
