use super::{BinaryMask, LabelMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// Two-pass union-find labelling. Background is 0 and components are numbered
/// `1..=count` in raster-scan order of their first pixel.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> (LabelMatrix, usize) {
    let (w, h) = (mask.width, mask.height);
    let mut provisional = vec![0u32; w * h];
    let mut parent: Vec<u32> = vec![0];

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask.bits[i] {
                continue;
            }
            let mut neigh = [0u32; 4];
            let mut k = 0;
            let mut push = |l: u32| {
                if l != 0 {
                    neigh[k] = l;
                    k += 1;
                }
            };
            if x > 0 {
                push(provisional[i - 1]);
            }
            if y > 0 {
                push(provisional[i - w]);
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        push(provisional[i - w - 1]);
                    }
                    if x + 1 < w {
                        push(provisional[i - w + 1]);
                    }
                }
            }
            if k == 0 {
                let l = parent.len() as u32;
                parent.push(l);
                provisional[i] = l;
            } else {
                let l = *neigh[..k].iter().min().unwrap();
                provisional[i] = l;
                for &n in &neigh[..k] {
                    union(&mut parent, l, n);
                }
            }
        }
    }

    // Resolve roots, then number them by first appearance in scan order.
    let mut final_id = vec![0i32; parent.len()];
    let mut count = 0usize;
    let mut labels = vec![0i32; w * h];
    for i in 0..w * h {
        let p = provisional[i];
        if p == 0 {
            continue;
        }
        let r = find(&mut parent, p) as usize;
        if final_id[r] == 0 {
            count += 1;
            final_id[r] = count as i32;
        }
        labels[i] = final_id[r];
    }
    (LabelMatrix::new(w, h, labels), count)
}
