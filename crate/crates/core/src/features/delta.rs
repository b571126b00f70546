/// Regression deltas over a `±window` frame neighbourhood.
///
/// `d_t = Σ_{n=1..W} n (c_{t+n} - c_{t-n}) / (2 Σ n²)`, replicating the first
/// and last frames for out-of-range indices. Output has the input's shape.
pub fn deltas(seq: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
    let Some(dim) = seq.first().map(Vec::len) else {
        return Vec::new();
    };
    let last = seq.len() - 1;
    let denom = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();
    (0..seq.len())
        .map(|t| {
            (0..dim)
                .map(|d| {
                    let num: f64 = (1..=window)
                        .map(|n| {
                            let ahead = &seq[(t + n).min(last)];
                            let behind = &seq[t.saturating_sub(n)];
                            n as f64 * (ahead[d] - behind[d])
                        })
                        .sum();
                    if denom > 0.0 {
                        num / denom
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence() {
        let seq = vec![vec![3.0, -1.0]; 6];
        assert!(deltas(&seq, 2).iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_ramp_interior() {
        let seq: Vec<Vec<f64>> = (0..10).map(|t| vec![t as f64]).collect();
        let d = deltas(&seq, 2);
        for row in &d[2..8] {
            assert!((row[0] - 1.0).abs() < 1e-12);
        }
        // Edges see replicated frames, so the slope shrinks.
        assert!(d[0][0] < 1.0);
    }

    #[test]
    fn single_frame() {
        assert_eq!(deltas(&[vec![1.0, 2.0, 3.0]], 2), vec![vec![0.0; 3]]);
    }

    #[test]
    fn empty() {
        assert!(deltas(&[], 2).is_empty());
    }
}
