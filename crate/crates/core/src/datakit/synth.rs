//! Two-class cross-plane data: `+1` samples on `X₂ = X₁`, `−1` samples on
//! `X₂ = −X₁ + 10`, with `X₁` drawn from `[0, 4] ∪ [6, 10]`.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Dataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossplaneSpec {
    pub n_per_class: usize,
    pub outliers_pos: usize,
    pub outliers_neg: usize,
    pub test_per_class: usize,
    /// Half-width of the uniform noise added to both test coordinates.
    pub test_noise: f64,
    /// Half-width of the uniform jitter of outliers around the opposite line.
    pub outlier_jitter: f64,
    pub seed: u64,
}

impl Default for CrossplaneSpec {
    fn default() -> Self {
        Self {
            n_per_class: 20,
            outliers_pos: 8,
            outliers_neg: 7,
            test_per_class: 72,
            test_noise: 0.5,
            outlier_jitter: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy)]
enum Line {
    Rising,
    Falling,
}

impl Line {
    fn at(self, x: f64) -> f64 {
        match self {
            Line::Rising => x,
            Line::Falling => 10.0 - x,
        }
    }
}

fn draw_x(rng: &mut ChaCha8Rng) -> f64 {
    let u = rng.gen_range(0.0..8.0);
    if u < 4.0 {
        u
    } else {
        u + 2.0
    }
}

fn jitter(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.gen_range(-half_width..=half_width)
    } else {
        0.0
    }
}

fn points(rng: &mut ChaCha8Rng, count: usize, line: Line, noise: f64, out: &mut Vec<[f64; 2]>) {
    for _ in 0..count {
        let x = draw_x(rng);
        let y = line.at(x);
        out.push([x + jitter(rng, noise), y + jitter(rng, noise)]);
    }
}

fn to_matrix(rows: &[[f64; 2]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), 2, |i, j| rows[i][j])
}

impl CrossplaneSpec {
    /// Returns `(train, test)`. Train holds the clean points followed by the
    /// outliers of each class; `+1` rows come first.
    pub fn generate(&self) -> Result<(Dataset, Dataset), DataError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        points(&mut rng, self.n_per_class, Line::Rising, 0.0, &mut pos);
        points(&mut rng, self.outliers_pos, Line::Falling, self.outlier_jitter, &mut pos);
        points(&mut rng, self.n_per_class, Line::Falling, 0.0, &mut neg);
        points(&mut rng, self.outliers_neg, Line::Rising, self.outlier_jitter, &mut neg);
        let train = Dataset::from_classes("crossplane_train", &to_matrix(&pos), &to_matrix(&neg))?;

        let mut tpos = Vec::new();
        let mut tneg = Vec::new();
        points(&mut rng, self.test_per_class, Line::Rising, self.test_noise, &mut tpos);
        points(&mut rng, self.test_per_class, Line::Falling, self.test_noise, &mut tneg);
        let test = Dataset::from_classes("crossplane_test", &to_matrix(&tpos), &to_matrix(&tneg))?;
        Ok((train, test))
    }
}

/// Cross-plane train/test pair with default test size and noise.
pub fn gen_crossplane(
    n_per_class: usize,
    outliers_pos: usize,
    outliers_neg: usize,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    CrossplaneSpec {
        n_per_class,
        outliers_pos,
        outliers_neg,
        seed,
        ..CrossplaneSpec::default()
    }
    .generate()
}
