use super::{Depth, ImageError, RasterImage};

/// Per-channel tallies of byte values.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Histogram {
    pub bins: usize,
    /// `counts[channel][value]`
    pub counts: Vec<Vec<u64>>,
}

impl Histogram {
    /// Population variance of the bin counts of one channel.
    pub fn bin_variance(&self, channel: usize) -> f64 {
        let counts = &self.counts[channel];
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<u64>() as f64 / n;
        counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n
    }
}

pub fn channel_histograms(img: &RasterImage) -> Result<Histogram, ImageError> {
    let bytes = img.as_bytes().ok_or(ImageError::WrongDepth { expected: Depth::Byte })?;
    let c = img.channels();
    let mut counts = vec![vec![0u64; 256]; c];
    for px in bytes.chunks_exact(c) {
        for (ch, &v) in px.iter().enumerate() {
            counts[ch][v as usize] += 1;
        }
    }
    Ok(Histogram { bins: 256, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_zero_image() {
        let h = channel_histograms(&RasterImage::filled(2, 2, 3, 0).unwrap()).unwrap();
        for c in 0..3 {
            assert_eq!(h.counts[c][0], 4);
            assert!(h.counts[c][1..].iter().all(|&n| n == 0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn matches_nested_loop_tally(w in 1usize..20, h in 1usize..20, data in proptest::collection::vec(any::<u8>(), 1200)) {
            let img = RasterImage::from_bytes(w, h, 3, data[..w * h * 3].to_vec()).unwrap();
            let hist = channel_histograms(&img).unwrap();
            for c in 0..3 {
                prop_assert_eq!(hist.counts[c].iter().sum::<u64>(), (w * h) as u64);
                for b in 0..256 {
                    let mut n = 0;
                    for y in 0..h {
                        for x in 0..w {
                            if img.sample(x, y, c) as usize == b {
                                n += 1;
                            }
                        }
                    }
                    prop_assert_eq!(hist.counts[c][b], n);
                }
            }
        }
    }
}
