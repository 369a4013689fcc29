//! Reference implementations used to cross-check the library from an
//! independent route: quadratic-time DFTs instead of the FFT, a Jacobi
//! eigensolver instead of LAPACK, and subgradient descent instead of
//! closed-form proximal steps.
#![allow(dead_code)]

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensemble::tensor::{Orientation, Tensor3};

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// Unnormalized forward DFT, summed term by term.
pub fn naive_dft(v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            (0..n)
                .map(|t| {
                    let angle = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                    v[t] * Complex64::new(angle.cos(), angle.sin())
                })
                .sum()
        })
        .collect()
}

/// Inverse DFT carrying the `1/n` factor.
pub fn naive_idft(v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            (0..n)
                .map(|t| {
                    let angle = 2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                    v[t] * Complex64::new(angle.cos(), angle.sin())
                })
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

/// Mode permutation used by the lateral orientation, written as index loops.
pub fn permute_lateral(data: &Array3<f64>) -> Array3<f64> {
    let (n1, n2, n3) = data.dim();
    let mut out = Array3::zeros((n1, n3, n2));
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                out[[i, k, j]] = data[[i, j, k]];
            }
        }
    }
    out
}

fn oriented(data: &Array3<f64>, orientation: Orientation) -> Array3<f64> {
    match orientation {
        Orientation::Frontal => data.clone(),
        Orientation::Lateral => permute_lateral(data),
    }
}

/// DFT along every tube of a real tensor.
pub fn tube_dft(data: &Array3<f64>) -> Array3<Complex64> {
    let (n1, n2, n3) = data.dim();
    let mut out = Array3::zeros((n1, n2, n3));
    for i in 0..n1 {
        for j in 0..n2 {
            let tube: Vec<Complex64> = (0..n3)
                .map(|k| Complex64::new(data[[i, j, k]], 0.0))
                .collect();
            for (k, v) in naive_dft(&tube).into_iter().enumerate() {
                out[[i, j, k]] = v;
            }
        }
    }
    out
}

/// Inverse DFT along every tube of a complex tensor.
pub fn tube_idft(data: &Array3<Complex64>) -> Array3<Complex64> {
    let (n1, n2, n3) = data.dim();
    let mut out = Array3::zeros((n1, n2, n3));
    for i in 0..n1 {
        for j in 0..n2 {
            let tube: Vec<Complex64> = (0..n3).map(|k| data[[i, j, k]]).collect();
            for (k, v) in naive_idft(&tube).into_iter().enumerate() {
                out[[i, j, k]] = v;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Jacobi eigensolver and a Gram-matrix SVD built on it
// ---------------------------------------------------------------------------

/// Eigendecomposition of a complex Hermitian matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in descending order with matching
/// eigenvector columns.
pub fn hermitian_eig(a: &Array2<Complex64>) -> (Vec<f64>, Array2<Complex64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eig expects a square matrix");
    let mut h = a.clone();
    let mut v: Array2<Complex64> = Array2::eye(n);
    let scale = h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1.0);

    for _sweep in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| h[[p, q]].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = h[[p, q]];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let w = apq / r;
                let theta = (h[[q, q]].re - h[[p, p]].re) / (2.0 * r);
                let t = -theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Unitary J = [[c, -s w], [s conj(w), c]] on the (p, q) plane;
                // H <- J^H H J, V <- V J.
                for i in 0..n {
                    let hip = h[[i, p]];
                    let hiq = h[[i, q]];
                    h[[i, p]] = hip * c + hiq * (s * w.conj());
                    h[[i, q]] = hip * (-s * w) + hiq * c;
                }
                for j in 0..n {
                    let hpj = h[[p, j]];
                    let hqj = h[[q, j]];
                    h[[p, j]] = hpj * c + hqj * (s * w);
                    h[[q, j]] = hpj * (-s * w.conj()) + hqj * c;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = vip * c + viq * (s * w.conj());
                    v[[i, q]] = vip * (-s * w) + viq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigs: Vec<f64> = (0..n).map(|i| h[[i, i]].re).collect();
    order.sort_by(|&i, &j| eigs[j].partial_cmp(&eigs[i]).unwrap());
    let sorted_eigs = order.iter().map(|&i| eigs[i]).collect();
    let mut sorted_v = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            sorted_v[[i, dst]] = v[[i, src]];
        }
    }
    (sorted_eigs, sorted_v)
}

/// Thin SVD of a complex matrix by one-sided Jacobi rotations: columns are
/// orthogonalised in place, which computes singular values to high relative
/// accuracy without ever forming the Gram matrix.
pub fn jacobi_svd(m: &Array2<Complex64>) -> (Array2<Complex64>, Vec<f64>, Array2<Complex64>) {
    let (rows, cols) = m.dim();
    if rows < cols {
        // Work on the conjugate transpose and swap the roles of U and V.
        let (u, sigma, v) = jacobi_svd(&m.t().mapv(|c| c.conj()));
        return (v, sigma, u);
    }
    let mut a = m.clone();
    let mut v: Array2<Complex64> = Array2::eye(cols);

    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::default();
                for i in 0..rows {
                    app += a[[i, p]].norm_sqr();
                    aqq += a[[i, q]].norm_sqr();
                    apq += a[[i, p]].conj() * a[[i, q]];
                }
                let r = apq.norm();
                if r <= 1e-15 * (app * aqq).sqrt() + 1e-300 {
                    continue;
                }
                rotated = true;
                let w = apq / r;
                let theta = (aqq - app) / (2.0 * r);
                let t = -theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..rows {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = aip * c + aiq * (s * w.conj());
                    a[[i, q]] = aip * (-s * w) + aiq * c;
                }
                for i in 0..cols {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = vip * c + viq * (s * w.conj());
                    v[[i, q]] = vip * (-s * w) + viq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| a[[i, j]].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut u = Array2::zeros((rows, cols));
    let mut v_sorted = Array2::zeros((cols, cols));
    let mut sigma = Vec::with_capacity(cols);
    for (dst, &src) in order.iter().enumerate() {
        let norm = norms[src];
        sigma.push(norm);
        if norm > 1e-300 {
            for i in 0..rows {
                u[[i, dst]] = a[[i, src]] / norm;
            }
        }
        for i in 0..cols {
            v_sorted[[i, dst]] = v[[i, src]];
        }
    }
    (u, sigma, v_sorted)
}

/// Singular values of a complex matrix, descending.
pub fn singular_values(m: &Array2<Complex64>) -> Vec<f64> {
    jacobi_svd(m).1
}

// ---------------------------------------------------------------------------
// Step-by-step tensor nuclear norms
// ---------------------------------------------------------------------------

/// Per-slice singular values of the oriented tensor's tube DFT.
fn slice_singular_values(t: &Tensor3, orientation: Orientation) -> Vec<Vec<f64>> {
    let data = oriented(t.data(), orientation);
    let spectrum = tube_dft(&data);
    let (_, _, n3) = data.dim();
    (0..n3)
        .map(|k| {
            let slice = spectrum.slice(ndarray::s![.., .., k]).to_owned();
            singular_values(&slice)
        })
        .collect()
}

/// Spatial-domain tensor nuclear norm computed step by step: tube DFT,
/// per-slice singular values, inverse DFT of each diagonal tube, then the
/// sum of absolute diagonal entries.
pub fn spatial_tnn_oracle(t: &Tensor3, orientation: Orientation) -> f64 {
    let per_slice = slice_singular_values(t, orientation);
    let rank = per_slice[0].len();
    let mut total = 0.0;
    for i in 0..rank {
        let tube: Vec<Complex64> = per_slice
            .iter()
            .map(|slice| Complex64::new(slice[i], 0.0))
            .collect();
        total += naive_idft(&tube).iter().map(|c| c.re.abs()).sum::<f64>();
    }
    total
}

/// Fourier-domain tensor nuclear norm: mean over slices of the matrix
/// nuclear norm.
pub fn fourier_tnn_oracle(t: &Tensor3, orientation: Orientation) -> f64 {
    let per_slice = slice_singular_values(t, orientation);
    let n3 = per_slice.len() as f64;
    per_slice.iter().map(|s| s.iter().sum::<f64>()).sum::<f64>() / n3
}

// ---------------------------------------------------------------------------
// Subgradient reference for the proximal step
// ---------------------------------------------------------------------------

/// `tau * fourier_tnn(x) + 1/2 ||x - t||_F^2`, all by reference routes.
pub fn prox_objective(x: &Tensor3, t: &Tensor3, tau: f64, orientation: Orientation) -> f64 {
    let diff: f64 = x
        .data()
        .iter()
        .zip(t.data().iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    tau * fourier_tnn_oracle(x, orientation) + 0.5 * diff
}

/// One subgradient of the Fourier-domain tensor nuclear norm at `x`:
/// per Fourier slice `sum_i u_i v_i^H` over the nonzero singular triples,
/// pulled back through the inverse DFT.
fn fourier_tnn_subgradient(x: &Tensor3, orientation: Orientation) -> Array3<f64> {
    let data = oriented(x.data(), orientation);
    let (n1, n2, n3) = data.dim();
    let spectrum = tube_dft(&data);
    let mut grad_f: Array3<Complex64> = Array3::zeros((n1, n2, n3));
    for k in 0..n3 {
        let slice = spectrum.slice(ndarray::s![.., .., k]).to_owned();
        let (u, sigma, v) = jacobi_svd(&slice);
        let cutoff = sigma.first().copied().unwrap_or(0.0) * 1e-9 + 1e-300;
        let mut g: Array2<Complex64> = Array2::zeros((n1, n2));
        for (idx, &s) in sigma.iter().enumerate() {
            if s > cutoff {
                for i in 0..n1 {
                    for j in 0..n2 {
                        g[[i, j]] += u[[i, idx]] * v[[j, idx]].conj();
                    }
                }
            }
        }
        grad_f.slice_mut(ndarray::s![.., .., k]).assign(&g);
    }
    let spatial = tube_idft(&grad_f).mapv(|c| c.re);
    match orientation {
        Orientation::Frontal => spatial,
        Orientation::Lateral => permute_lateral(&spatial),
    }
}

/// Minimises the proximal objective by plain subgradient descent with the
/// classic strongly-convex step size, returning the best objective value
/// seen. Independent of the closed-form thresholding path.
pub fn subgradient_prox_reference(
    t: &Tensor3,
    tau: f64,
    orientation: Orientation,
    iterations: usize,
) -> (Tensor3, f64) {
    let mut x = t.data().clone();
    let mut best = prox_objective(t, t, tau, orientation);
    let mut best_x = x.clone();
    for it in 0..iterations {
        let xt = Tensor3::new(x.clone()).unwrap();
        if it % 10 == 0 {
            let f = prox_objective(&xt, t, tau, orientation);
            if f < best {
                best = f;
                best_x = x.clone();
            }
        }
        let sub = fourier_tnn_subgradient(&xt, orientation);
        let step = 2.0 / (it as f64 + 2.0);
        ndarray::Zip::from(&mut x)
            .and(&sub)
            .and(t.data())
            .for_each(|xi, &gi, &ti| {
                *xi -= step * (tau * gi + (*xi - ti));
            });
    }
    let xt = Tensor3::new(x.clone()).unwrap();
    let f = prox_objective(&xt, t, tau, orientation);
    if f < best {
        best = f;
        best_x = x;
    }
    (Tensor3::new(best_x).unwrap(), best)
}

// ---------------------------------------------------------------------------
// Shared random generators
// ---------------------------------------------------------------------------

/// Uniformly random tensor with entries in `(-1, 1)`.
pub fn random_tensor(rng: &mut SmallRng, n1: usize, n2: usize, n3: usize) -> Tensor3 {
    Tensor3::new(Array3::from_shape_fn((n1, n2, n3), |_| {
        rng.random_range(-1.0..1.0)
    }))
    .unwrap()
}

/// Isotropic Gaussian blobs: `sizes[c]` points around `centers[c]`, plus the
/// ground-truth labels.
pub fn gaussian_blobs(
    sizes: &[usize],
    centers: &[Vec<f64>],
    sigma: f64,
    seed: u64,
) -> (Array2<f64>, Vec<u32>) {
    assert_eq!(sizes.len(), centers.len());
    let dim = centers[0].len();
    let total: usize = sizes.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Array2::zeros((total, dim));
    let mut truth = Vec::with_capacity(total);
    let mut row = 0;
    for (c, (&size, center)) in sizes.iter().zip(centers.iter()).enumerate() {
        for _ in 0..size {
            for d in 0..dim {
                data[[row, d]] = center[d] + sigma * standard_normal(&mut rng);
            }
            truth.push(c as u32);
            row += 1;
        }
    }
    (data, truth)
}

/// Box-Muller standard normal draw.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

// ---------------------------------------------------------------------------
// Clustering references
// ---------------------------------------------------------------------------

/// Average-linkage agglomeration that recomputes every cluster distance from
/// the raw dissimilarities at every step. Returns the merge trace as
/// `(cluster_a, cluster_b, distance)` with stable cluster ids: points are
/// `0..n`, the merge at step `s` creates cluster `n + s`.
pub fn average_linkage_trace(d: &Array2<f64>, k: usize) -> (Vec<(usize, usize, f64)>, Vec<u32>) {
    let n = d.nrows();
    let mut members: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut next_id = n;
    let mut trace = Vec::new();
    while members.len() > k {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..members.len() {
            for b in (a + 1)..members.len() {
                let mut sum = 0.0;
                for &i in &members[a].1 {
                    for &j in &members[b].1 {
                        sum += d[[i, j]];
                    }
                }
                let dist = sum / (members[a].1.len() * members[b].1.len()) as f64;
                let candidate_ids = (
                    members[a].0.min(members[b].0),
                    members[a].0.max(members[b].0),
                );
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => dist < bd || (dist == bd && candidate_ids < (bi, bj)),
                };
                if better {
                    best = Some((dist, candidate_ids.0, candidate_ids.1));
                }
            }
        }
        let (dist, id_a, id_b) = best.expect("at least two clusters remain");
        let pos_a = members.iter().position(|(id, _)| *id == id_a).unwrap();
        let pos_b = members.iter().position(|(id, _)| *id == id_b).unwrap();
        let (keep, gone) = (pos_a.min(pos_b), pos_a.max(pos_b));
        let absorbed = members.remove(gone).1;
        members[keep].1.extend(absorbed);
        members[keep].0 = next_id;
        trace.push((id_a, id_b, dist));
        next_id += 1;
    }
    let mut labels = vec![0u32; n];
    let mut ordered: Vec<&Vec<usize>> = members.iter().map(|(_, m)| m).collect();
    ordered.sort_by_key(|m| *m.iter().min().unwrap());
    for (c, cluster) in ordered.iter().enumerate() {
        for &i in cluster.iter() {
            labels[i] = c as u32;
        }
    }
    (trace, labels)
}

/// Exhaustive best split into two non-empty clusters, maximising the summed
/// within-cluster similarity. Only sensible for tiny `n`.
pub fn best_two_partition(s: &Array2<f64>) -> Vec<u32> {
    let n = s.nrows();
    assert!(n <= 20, "exhaustive search is exponential in n");
    let mut best_score = f64::NEG_INFINITY;
    let mut best_labels = vec![0u32; n];
    for mask in 1..(1u32 << (n - 1)) {
        let labels: Vec<u32> = (0..n).map(|i| (mask >> i) & 1).collect();
        let mut score = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                if labels[i] == labels[j] {
                    score += s[[i, j]];
                }
            }
        }
        if score > best_score {
            best_score = score;
            best_labels = labels;
        }
    }
    best_labels
}

/// True exactly when the two labelings induce the same partition.
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[i] == a[j]) != (b[i] == b[j]) {
                return false;
            }
        }
    }
    true
}
