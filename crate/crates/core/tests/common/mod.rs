//! Test-only reference implementations. None of these share code with the
//! library; they exist to check it.
#![allow(dead_code)]

use ortg_lab::features::{FeatureKey, FEATURE_COUNT};
use ortg_lab::model::MlpModel;
use ortg_lab::optimize::{FeasibleRegion, Surrogate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-300, "singular system");
        for row in col + 1..n {
            let f = a[row][col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Ordinary least squares with intercept through the normal equations
/// `[X 1]ᵀ[X 1] β = [X 1]ᵀ y`. Returns (weights, bias).
pub fn normal_equations(xs: &[Vec<f64>], ys: &[f64]) -> (Vec<f64>, f64) {
    let d = xs[0].len() + 1;
    let mut ata = vec![vec![0.0; d]; d];
    let mut aty = vec![0.0; d];
    for (x, y) in xs.iter().zip(ys) {
        let row: Vec<f64> = x.iter().copied().chain(std::iter::once(1.0)).collect();
        for i in 0..d {
            aty[i] += row[i] * y;
            for j in 0..d {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let beta = gauss_solve(ata, aty);
    (beta[..d - 1].to_vec(), beta[d - 1])
}

/// Eigenvalues and eigenvectors (columns) of a symmetric matrix by cyclic
/// Jacobi rotations, sorted by descending eigenvalue.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (values, vectors)
}

/// Sample covariance (divisor n − 1) of columns standardized by their own
/// sample deviation.
pub fn standardized_covariance(xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = xs.len() as f64;
    let d = xs[0].len();
    let mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| (xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        .collect();
    let z: Vec<Vec<f64>> = xs.iter().map(|x| (0..d).map(|j| (x[j] - mean[j]) / sd[j]).collect()).collect();
    (0..d)
        .map(|i| (0..d).map(|j| z.iter().map(|r| r[i] * r[j]).sum::<f64>() / (n - 1.0)).collect())
        .collect()
}

/// `n` samples of dimension `d` lying on a random `rank`-dimensional affine
/// subspace.
pub fn low_rank_samples(seed: u64, n: usize, d: usize, rank: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis: Vec<Vec<f64>> = (0..rank).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let offset: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
    (0..n)
        .map(|_| {
            let coef: Vec<f64> = (0..rank).map(|_| rng.random_range(-1.0..1.0)).collect();
            (0..d).map(|j| offset[j] + (0..rank).map(|r| coef[r] * basis[r][j]).sum::<f64>()).collect()
        })
        .collect()
}

/// Central finite difference of `f` along coordinate `j`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], j: usize, h: f64) -> f64 {
    let mut up = x.to_vec();
    let mut down = x.to_vec();
    up[j] += h;
    down[j] -= h;
    (f(&up) - f(&down)) / (2.0 * h)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

pub fn freq_indices() -> Vec<usize> {
    FeatureKey::freq_keys().map(FeatureKey::index).collect()
}

/// Linear surrogate `w · x + b`.
pub struct LinearStub {
    pub w: [f64; FEATURE_COUNT],
    pub b: f64,
}

impl Surrogate for LinearStub {
    fn value(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        self.b + self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
    fn gradient(&self, _: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        self.w
    }
}

/// Separable concave quadratic `c − Σ a_j (x_j − t_j)²`.
pub struct ConcaveStub {
    pub a: [f64; FEATURE_COUNT],
    pub t: [f64; FEATURE_COUNT],
    pub c: f64,
}

impl Surrogate for ConcaveStub {
    fn value(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        self.c - (0..FEATURE_COUNT).map(|j| self.a[j] * (x[j] - self.t[j]).powi(2)).sum::<f64>()
    }
    fn gradient(&self, x: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        let mut g = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            g[j] = -2.0 * self.a[j] * (x[j] - self.t[j]);
        }
        g
    }
}

/// Maximizer of a linear objective over box ∩ {Σ freq ≤ cap}: non-frequency
/// coordinates go to the bound favoured by their weight; frequency
/// coordinates start at their lower bounds and the remaining budget is spent
/// greedily on the largest positive weights.
pub fn lp_corner(w: &[f64; FEATURE_COUNT], region: &FeasibleRegion) -> [f64; FEATURE_COUNT] {
    let (l, u) = (region.lower(), region.upper());
    let freq = freq_indices();
    let mut x = [0.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        x[j] = if freq.contains(&j) {
            l[j]
        } else if w[j] > 0.0 {
            u[j]
        } else {
            l[j]
        };
    }
    let mut budget = region.freq_sum_cap() - freq.iter().map(|&j| l[j]).sum::<f64>();
    let mut order: Vec<usize> = freq.iter().copied().filter(|&j| w[j] > 0.0).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
    for j in order {
        let take = (u[j] - l[j]).min(budget).max(0.0);
        x[j] += take;
        budget -= take;
    }
    x
}

/// Euclidean projection of `y` onto `{l ≤ x ≤ u, Σx ≤ cap}` by enumerating
/// every KKT configuration: each coordinate at its lower bound, its upper
/// bound, or free, with the sum constraint either slack or tight.
pub fn brute_force_projection(y: &[f64], l: &[f64], u: &[f64], cap: f64) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let configs = 3usize.pow(n as u32);
    for code in 0..configs {
        let mut state = vec![0u8; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        for tight in [false, true] {
            let fixed: f64 = (0..n).map(|i| match state[i] {
                1 => l[i],
                2 => u[i],
                _ => 0.0,
            }).sum();
            let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
            let mu = if tight {
                if free.is_empty() {
                    continue;
                }
                let free_sum: f64 = free.iter().map(|&i| y[i]).sum();
                (free_sum + fixed - cap) / free.len() as f64
            } else {
                0.0
            };
            if mu < 0.0 {
                continue;
            }
            let x: Vec<f64> = (0..n)
                .map(|i| match state[i] {
                    1 => l[i],
                    2 => u[i],
                    _ => y[i] - mu,
                })
                .collect();
            let feasible = (0..n).all(|i| x[i] >= l[i] - 1e-12 && x[i] <= u[i] + 1e-12)
                && x.iter().sum::<f64>() <= cap + 1e-12;
            if !feasible {
                continue;
            }
            let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, x));
            }
        }
    }
    best.expect("region is nonempty").1
}

/// A region where every coordinate is pinned except the listed ones.
/// Pinned frequency coordinates sit at zero, pinned others at `pin`.
pub fn pinned_region(
    free: &[(usize, f64, f64)],
    pin: f64,
    cap: f64,
) -> FeasibleRegion {
    let freq = freq_indices();
    let mut lower = [0.0; FEATURE_COUNT];
    let mut upper = [0.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        let v = if freq.contains(&j) { 0.0 } else { pin };
        lower[j] = v;
        upper[j] = v;
    }
    for &(j, lo, hi) in free {
        lower[j] = lo;
        upper[j] = hi;
    }
    FeasibleRegion::new(lower, upper, cap).unwrap()
}

/// Smallest |pre-activation| over all hidden units at `z`.
pub fn kink_distance(m: &MlpModel, z: &[f64]) -> f64 {
    let mut act = z.to_vec();
    let mut margin = f64::INFINITY;
    let layers = m.layer_sizes().len() - 1;
    for l in 0..layers - 1 {
        let w = m.layer_weights(l);
        let b = m.layer_biases(l);
        act = w
            .iter()
            .zip(&b)
            .map(|(row, bias)| {
                let pre = bias + row.iter().zip(&act).map(|(a, c)| a * c).sum::<f64>();
                margin = margin.min(pre.abs());
                pre.max(0.0)
            })
            .collect();
    }
    margin
}
