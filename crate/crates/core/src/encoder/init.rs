use dsqn_tensor::Tensor;
use rand::Rng;

/// Uniform in ±sqrt(6 / (fan_in + fan_out)).
pub fn xavier_uniform<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect();
    Tensor::mat(rows, cols, data)
}

pub fn zeros(rows: usize, cols: usize) -> Tensor {
    Tensor::zeros(vec![rows, cols])
}
