/// Lower bound on the standard deviation used as divisor.
pub const GCN_EPSILON: f64 = 1e-8;

/// Global contrast normalization: `(x - mean) / max(std, 1e-8)` with the
/// population standard deviation, computed in f64.
pub fn global_contrast_normalize(clip: &[f32]) -> Vec<f32> {
    if clip.is_empty() {
        return Vec::new();
    }
    let n = clip.len() as f64;
    let mean = clip.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = clip.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    let scale = var.sqrt().max(GCN_EPSILON);
    clip.iter().map(|&x| ((x as f64 - mean) / scale) as f32).collect()
}
