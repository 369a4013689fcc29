//! Third-order tensors, the tensor SVD, and the nuclear-norm proximal step.
//!
//! A [`Tensor3`] is an `n1 x n2 x n3` array of reals whose third mode is the
//! *tube* axis: transforms run a DFT along each tube `(i, j, :)`, turning
//! tensor operations into independent matrix operations per Fourier slice.
//! The DFT is unnormalized on the way forward and carries the `1/n3` factor
//! on the way back.
//!
//! Two nuclear norms coexist deliberately:
//!
//! * [`tensor_nuclear_norm`] sums `|S(i, i, k)|` over the *spatial-domain*
//!   core tensor of the t-SVD, and is the quantity reported alongside
//!   results;
//! * [`fourier_nuclear_norm`] averages the per-Fourier-slice matrix nuclear
//!   norms, and is the convex function [`tnn_prox`] provably minimises.
//!
//! For `n3 = 1` both collapse to the matrix nuclear norm and [`tnn_prox`]
//! collapses to singular-value thresholding.
//!
//! [`Orientation`] selects which mode plays the tube role: `Frontal` uses the
//! tensor as stored, `Lateral` swaps modes two and three first (an `n x n x 2`
//! stack becomes `n x 2 x n`, so slices mix evidence along the sample axis)
//! and swaps back after the operation.

use ndarray::{s, Array1, Array2, Array3, ArrayView2};
use ndarray_linalg::{JobSvd, SVD, SVDDC};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Largest imaginary magnitude tolerated when an inverse FFT is expected to
/// produce a real tensor.
const IMAG_TOL: f64 = 1e-10;

/// A dense real tensor of order three.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    data: Array3<f64>,
}

impl Tensor3 {
    /// Wraps an array, rejecting NaN and infinite entries and empty axes.
    pub fn new(data: Array3<f64>) -> Result<Self> {
        let (n1, n2, n3) = data.dim();
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::EmptyInput("tensor axis of length zero"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor"));
        }
        Ok(Self { data })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Self {
            data: Array3::zeros((n1, n2, n3)),
        }
    }

    /// Stacks frontal slices of equal shape along the tube axis.
    pub fn from_frontal_slices(slices: &[ArrayView2<'_, f64>]) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::EmptyInput("no frontal slices"));
        }
        let (n1, n2) = slices[0].dim();
        let mut data = Array3::zeros((n1, n2, slices.len()));
        for (k, slice) in slices.iter().enumerate() {
            if slice.dim() != (n1, n2) {
                return Err(Error::DimensionMismatch {
                    context: "frontal slice rows",
                    expected: n1,
                    actual: slice.dim().0,
                });
            }
            data.slice_mut(s![.., .., k]).assign(slice);
        }
        Self::new(data)
    }

    /// Shape as `(n1, n2, n3)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    /// The underlying array.
    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    /// Consumes the tensor, returning the underlying array.
    pub fn into_data(self) -> Array3<f64> {
        self.data
    }

    /// Frontal slice `k` as an owned matrix.
    pub fn frontal_slice(&self, k: usize) -> Array2<f64> {
        self.data.slice(s![.., .., k]).to_owned()
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Which mode supplies the tubes for transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Tubes run along the stored third mode.
    Frontal,
    /// Modes two and three are swapped before (and after) the operation.
    #[default]
    Lateral,
}

impl Orientation {
    /// Applies the mode permutation for this orientation.
    fn permute(self, t: &Tensor3) -> Tensor3 {
        match self {
            Orientation::Frontal => t.clone(),
            Orientation::Lateral => Tensor3 {
                data: t
                    .data
                    .view()
                    .permuted_axes([0, 2, 1])
                    .as_standard_layout()
                    .to_owned(),
            },
        }
    }

    /// Undoes [`Orientation::permute`]; the swap is an involution.
    fn restore(self, t: &Tensor3) -> Tensor3 {
        self.permute(t)
    }
}

/// Tensor SVD factors: `t` equals `u * s * transpose(v)` under the tensor
/// product, where `s` is f-diagonal (each frontal slice diagonal).
///
/// Factors live in the frame selected by the orientation the decomposition
/// was computed in; [`TSvdFactors::reconstruct`] returns to the original
/// frame.
#[derive(Debug, Clone)]
pub struct TSvdFactors {
    /// Left factor, `n1 x n1 x n3`, orthogonal under the tensor product.
    pub u: Tensor3,
    /// F-diagonal core, `n1 x n2 x n3`.
    pub s: Tensor3,
    /// Right factor, `n2 x n2 x n3`, orthogonal under the tensor product.
    pub v: Tensor3,
    orientation: Orientation,
}

impl TSvdFactors {
    /// Multiplies the factors back together and restores the original frame.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        let product = tprod(&self.u, &tprod(&self.s, &t_transpose(&self.v))?)?;
        Ok(self.orientation.restore(&product))
    }

    /// Orientation the decomposition was computed in.
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }
}

/// Forward DFT along every tube. The transform is unnormalized.
fn fft_mode3(data: &Array3<f64>) -> Array3<Complex64> {
    let (n1, n2, n3) = data.dim();
    let mut spectrum = data.mapv(|v| Complex64::new(v, 0.0));
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n3);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let flat = spectrum
        .as_slice_mut()
        .expect("freshly mapped array is contiguous");
    debug_assert_eq!(flat.len(), n1 * n2 * n3);
    for tube in flat.chunks_exact_mut(n3) {
        fft.process_with_scratch(tube, &mut scratch);
    }
    spectrum
}

/// Inverse DFT along every tube, scaled by `1/n3`.
fn ifft_mode3(spectrum: &mut Array3<Complex64>) {
    let n3 = spectrum.dim().2;
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n3);
    let mut scratch = vec![Complex64::default(); ifft.get_inplace_scratch_len()];
    let flat = spectrum
        .as_slice_mut()
        .expect("spectrum tensors are kept contiguous");
    for tube in flat.chunks_exact_mut(n3) {
        ifft.process_with_scratch(tube, &mut scratch);
    }
    let scale = 1.0 / n3 as f64;
    spectrum.mapv_inplace(|v| v * scale);
}

/// Inverse DFT that must land on a real tensor; a large imaginary residue is
/// reported as an internal inconsistency.
fn ifft_mode3_real(mut spectrum: Array3<Complex64>, context: &str) -> Result<Array3<f64>> {
    ifft_mode3(&mut spectrum);
    let worst_imag = spectrum.iter().fold(0.0f64, |acc, v| acc.max(v.im.abs()));
    if worst_imag > IMAG_TOL {
        return Err(Error::Inconsistent(format!(
            "{context}: imaginary residue {worst_imag:e} after inverse FFT"
        )));
    }
    Ok(spectrum.mapv(|v| v.re))
}

/// Complex frontal slice `k` of a spectrum. Rebuilt element by element:
/// `to_owned` keeps the zero strides ndarray assigns to length-1 axes, and
/// the LAPACK layout check refuses them.
fn spectrum_slice(spectrum: &Array3<Complex64>, k: usize) -> Array2<Complex64> {
    let view = spectrum.slice(s![.., .., k]);
    Array2::from_shape_fn(view.raw_dim(), |idx| view[idx])
}

fn assign_spectrum_slice(spectrum: &mut Array3<Complex64>, k: usize, slice: &Array2<Complex64>) {
    spectrum.slice_mut(s![.., .., k]).assign(slice);
}

/// Indices `0..=n3/2` cover every Fourier slice of a real tensor once; the
/// remaining slices are complex conjugates. Returns the mirror partner of
/// `k`, which is `k` itself for the self-conjugate slices.
fn mirror_index(k: usize, n3: usize) -> usize {
    if k == 0 {
        0
    } else {
        n3 - k
    }
}

/// Tensor SVD via per-Fourier-slice matrix SVDs.
///
/// Under `Orientation::Lateral` the decomposition applies to the
/// mode-permuted tensor and the factors stay in that frame;
/// [`TSvdFactors::reconstruct`] restores the original frame.
pub fn tsvd(t: &Tensor3, orientation: Orientation) -> Result<TSvdFactors> {
    let p = orientation.permute(t);
    let (n1, n2, n3) = p.dims();
    let spectrum = fft_mode3(p.data());

    let mut u_f: Array3<Complex64> = Array3::zeros((n1, n1, n3));
    let mut s_f: Array3<Complex64> = Array3::zeros((n1, n2, n3));
    let mut v_f: Array3<Complex64> = Array3::zeros((n2, n2, n3));

    for k in 0..=n3 / 2 {
        let slice = spectrum_slice(&spectrum, k);
        let (u, sigma, vh) = slice.svd(true, true)?;
        let u = u.expect("left singular vectors requested");
        let vh = vh.expect("right singular vectors requested");
        let v = conjugate_transpose(&vh);
        let mut s = Array2::zeros((n1, n2));
        for (i, &val) in sigma.iter().enumerate() {
            s[[i, i]] = Complex64::new(val, 0.0);
        }
        let mirror = mirror_index(k, n3);
        assign_spectrum_slice(&mut u_f, k, &u);
        assign_spectrum_slice(&mut s_f, k, &s);
        assign_spectrum_slice(&mut v_f, k, &v);
        if mirror != k {
            assign_spectrum_slice(&mut u_f, mirror, &u.mapv(|c| c.conj()));
            assign_spectrum_slice(&mut s_f, mirror, &s);
            assign_spectrum_slice(&mut v_f, mirror, &v.mapv(|c| c.conj()));
        }
    }

    Ok(TSvdFactors {
        u: Tensor3::new(ifft_mode3_real(u_f, "tsvd left factor")?)?,
        s: Tensor3::new(ifft_mode3_real(s_f, "tsvd core")?)?,
        v: Tensor3::new(ifft_mode3_real(v_f, "tsvd right factor")?)?,
        orientation,
    })
}

fn conjugate_transpose(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|c| c.conj())
}

/// Per-Fourier-slice singular values, in LAPACK's descending order, for
/// slices `0..n3` of the oriented tensor.
fn fourier_singular_values(t: &Tensor3, orientation: Orientation) -> Result<Vec<Array1<f64>>> {
    let p = orientation.permute(t);
    let n3 = p.dims().2;
    let spectrum = fft_mode3(p.data());
    let mut per_slice: Vec<Option<Array1<f64>>> = vec![None; n3];
    for k in 0..=n3 / 2 {
        let slice = spectrum_slice(&spectrum, k);
        let (_, sigma, _) = slice.svd(false, false)?;
        let mirror = mirror_index(k, n3);
        if mirror != k {
            per_slice[mirror] = Some(sigma.clone());
        }
        per_slice[k] = Some(sigma);
    }
    Ok(per_slice
        .into_iter()
        .map(|s| s.expect("every slice visited"))
        .collect())
}

/// Spatial-domain tensor nuclear norm: the sum of `|S(i, i, k)|` over the
/// core tensor of the t-SVD taken in the given orientation.
pub fn tensor_nuclear_norm(t: &Tensor3, orientation: Orientation) -> Result<f64> {
    let per_slice = fourier_singular_values(t, orientation)?;
    let n3 = per_slice.len();
    let rank = per_slice[0].len();
    // S(i, i, :) is the inverse DFT of the i-th singular value across slices;
    // transforming the diagonal tubes alone avoids forming full factors.
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n3);
    let mut scratch = vec![Complex64::default(); ifft.get_inplace_scratch_len()];
    let mut total = 0.0;
    for i in 0..rank {
        let mut tube: Vec<Complex64> = per_slice
            .iter()
            .map(|slice| Complex64::new(slice[i], 0.0))
            .collect();
        ifft.process_with_scratch(&mut tube, &mut scratch);
        total += tube.iter().map(|c| (c.re / n3 as f64).abs()).sum::<f64>();
    }
    Ok(total)
}

/// Fourier-domain tensor nuclear norm: the mean over Fourier slices of the
/// matrix nuclear norm, `(1/n3) * sum_k ||X_f(:,:,k)||_*`.
///
/// This is the convex function whose proximal map [`tnn_prox`] computes.
pub fn fourier_nuclear_norm(t: &Tensor3, orientation: Orientation) -> Result<f64> {
    let per_slice = fourier_singular_values(t, orientation)?;
    let n3 = per_slice.len() as f64;
    Ok(per_slice.iter().map(|s| s.sum()).sum::<f64>() / n3)
}

/// Proximal map of the Fourier-domain tensor nuclear norm:
///
/// ```text
/// tnn_prox(t, tau) = argmin_x  tau * fourier_nuclear_norm(x) + 1/2 ||x - t||_F^2
/// ```
///
/// computed by soft-thresholding the singular values of every Fourier slice
/// by `tau`. With `n3 = 1` this is exactly matrix singular-value
/// thresholding, and `tau = 0` returns the input up to FFT round-trip error.
pub fn tnn_prox(t: &Tensor3, tau: f64, orientation: Orientation) -> Result<Tensor3> {
    Ok(tnn_prox_with_norm(t, tau, orientation)?.0)
}

/// [`tnn_prox`] plus the Fourier-domain nuclear norm of the output, which
/// falls out of the thresholded singular values at no extra cost.
pub fn tnn_prox_with_norm(
    t: &Tensor3,
    tau: f64,
    orientation: Orientation,
) -> Result<(Tensor3, f64)> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("threshold must be finite and non-negative, got {tau}"),
        });
    }
    let p = orientation.permute(t);
    let (_, _, n3) = p.dims();
    let spectrum = fft_mode3(p.data());
    let mut out: Array3<Complex64> = Array3::zeros(spectrum.dim());
    let mut norm_sum = 0.0;

    for k in 0..=n3 / 2 {
        let slice = spectrum_slice(&spectrum, k);
        let (u, mut sigma, vh) = slice.svddc(JobSvd::Some)?;
        let u = u.expect("thin left singular vectors requested");
        let vh = vh.expect("thin right singular vectors requested");
        sigma.mapv_inplace(|s| (s - tau).max(0.0));
        let mirror = mirror_index(k, n3);
        let weight = if mirror == k { 1.0 } else { 2.0 };
        norm_sum += weight * sigma.sum();
        let thresholded = scaled_product(&u, &sigma, &vh);
        if mirror != k {
            assign_spectrum_slice(&mut out, mirror, &thresholded.mapv(|c| c.conj()));
        }
        assign_spectrum_slice(&mut out, k, &thresholded);
    }

    let shrunk = Tensor3::new(ifft_mode3_real(out, "nuclear norm prox")?)?;
    Ok((orientation.restore(&shrunk), norm_sum / n3 as f64))
}

/// `u * diag(sigma) * vh` for a thin factorization.
fn scaled_product(
    u: &Array2<Complex64>,
    sigma: &Array1<f64>,
    vh: &Array2<Complex64>,
) -> Array2<Complex64> {
    let mut scaled = u.clone();
    for (mut col, &s) in scaled.columns_mut().into_iter().zip(sigma.iter()) {
        col.mapv_inplace(|c| c * s);
    }
    scaled.dot(vh)
}

/// Tensor product of frontal-framed tensors: per-Fourier-slice matrix
/// product, equivalently circular convolution of frontal slices along tubes.
pub fn tprod(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    let (a1, a2, a3) = a.dims();
    let (b1, b2, b3) = b.dims();
    if a2 != b1 {
        return Err(Error::DimensionMismatch {
            context: "tensor product inner mode",
            expected: a2,
            actual: b1,
        });
    }
    if a3 != b3 {
        return Err(Error::DimensionMismatch {
            context: "tensor product tube length",
            expected: a3,
            actual: b3,
        });
    }
    let fa = fft_mode3(a.data());
    let fb = fft_mode3(b.data());
    let mut out: Array3<Complex64> = Array3::zeros((a1, b2, a3));
    for k in 0..a3 {
        let prod = spectrum_slice(&fa, k).dot(&spectrum_slice(&fb, k));
        assign_spectrum_slice(&mut out, k, &prod);
    }
    Tensor3::new(ifft_mode3_real(out, "tensor product")?)
}

/// Tensor transpose: each frontal slice transposed, slices `2..n3` reversed.
pub fn t_transpose(t: &Tensor3) -> Tensor3 {
    let (n1, n2, n3) = t.dims();
    let mut data = Array3::zeros((n2, n1, n3));
    for k in 0..n3 {
        let src = if k == 0 { 0 } else { n3 - k };
        data.slice_mut(s![.., .., k])
            .assign(&t.data.slice(s![.., .., src]).t());
    }
    Tensor3 { data }
}

/// Identity for the tensor product: first frontal slice is the identity
/// matrix, the rest are zero.
pub fn identity_tensor(n: usize, n3: usize) -> Tensor3 {
    let mut data = Array3::zeros((n, n, n3));
    for i in 0..n {
        data[[i, i, 0]] = 1.0;
    }
    Tensor3 { data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    fn random_tensor(rng: &mut SmallRng, n1: usize, n2: usize, n3: usize) -> Tensor3 {
        Tensor3::new(Array3::from_shape_fn((n1, n2, n3), |_| {
            rng.random_range(-1.0..1.0)
        }))
        .unwrap()
    }

    #[test]
    fn tube_fft_round_trips() {
        let mut rng = SmallRng::seed_from_u64(7);
        let t = random_tensor(&mut rng, 4, 3, 5);
        let spectrum = fft_mode3(t.data());
        let back = ifft_mode3_real(spectrum, "round trip").unwrap();
        assert_abs_diff_eq!(t.data(), &back, epsilon = 1e-12);
    }

    #[test]
    fn tprod_matches_circular_convolution() {
        let mut rng = SmallRng::seed_from_u64(13);
        let a = random_tensor(&mut rng, 3, 4, 4);
        let b = random_tensor(&mut rng, 4, 2, 4);
        let fast = tprod(&a, &b).unwrap();
        let n3 = 4;
        let mut slow = Array3::zeros((3, 2, n3));
        for k in 0..n3 {
            let mut acc = Array2::zeros((3, 2));
            for j in 0..n3 {
                let shift = (k + n3 - j) % n3;
                acc = acc + a.frontal_slice(j).dot(&b.frontal_slice(shift));
            }
            slow.slice_mut(s![.., .., k]).assign(&acc);
        }
        assert_abs_diff_eq!(fast.data(), &slow, epsilon = 1e-10);
    }

    #[test]
    fn tprod_identity_is_neutral() {
        let mut rng = SmallRng::seed_from_u64(19);
        let a = random_tensor(&mut rng, 4, 4, 3);
        let id = identity_tensor(4, 3);
        let left = tprod(&id, &a).unwrap();
        let right = tprod(&a, &id).unwrap();
        assert_abs_diff_eq!(left.data(), a.data(), epsilon = 1e-10);
        assert_abs_diff_eq!(right.data(), a.data(), epsilon = 1e-10);
    }

    #[test]
    fn transpose_reverses_products() {
        let mut rng = SmallRng::seed_from_u64(23);
        let a = random_tensor(&mut rng, 3, 4, 5);
        let b = random_tensor(&mut rng, 4, 3, 5);
        let lhs = t_transpose(&tprod(&a, &b).unwrap());
        let rhs = tprod(&t_transpose(&b), &t_transpose(&a)).unwrap();
        assert_abs_diff_eq!(lhs.data(), rhs.data(), epsilon = 1e-10);
        assert_abs_diff_eq!(
            t_transpose(&t_transpose(&a)).data(),
            a.data(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn tsvd_reconstructs_both_orientations() {
        let mut rng = SmallRng::seed_from_u64(29);
        for &orientation in &[Orientation::Frontal, Orientation::Lateral] {
            let t = random_tensor(&mut rng, 5, 4, 3);
            let factors = tsvd(&t, orientation).unwrap();
            let back = factors.reconstruct().unwrap();
            let err = (back.data() - t.data()).mapv(f64::abs).sum();
            assert!(err < 1e-9, "reconstruction error {err} for {orientation:?}");
        }
    }

    #[test]
    fn tsvd_factors_are_orthogonal() {
        let mut rng = SmallRng::seed_from_u64(31);
        let t = random_tensor(&mut rng, 4, 4, 4);
        let f = tsvd(&t, Orientation::Frontal).unwrap();
        let uut = tprod(&f.u, &t_transpose(&f.u)).unwrap();
        let vvt = tprod(&f.v, &t_transpose(&f.v)).unwrap();
        let id = identity_tensor(4, 4);
        assert_abs_diff_eq!(uut.data(), id.data(), epsilon = 1e-9);
        assert_abs_diff_eq!(vvt.data(), id.data(), epsilon = 1e-9);
    }

    #[test]
    fn single_slice_tensor_behaves_like_matrix_svd() {
        let m = array![[4.0, 0.0, 0.0], [0.0, -2.0, 0.0]];
        let t = Tensor3::from_frontal_slices(&[m.view()]).unwrap();
        let f = tsvd(&t, Orientation::Frontal).unwrap();
        let sigma: Vec<f64> = (0..2).map(|i| f.s.data()[[i, i, 0]]).collect();
        assert_abs_diff_eq!(sigma[0], 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sigma[1], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            tensor_nuclear_norm(&t, Orientation::Frontal).unwrap(),
            6.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            fourier_nuclear_norm(&t, Orientation::Frontal).unwrap(),
            6.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn degenerate_axes_are_supported() {
        // Length-1 axes give ndarray views with zero strides; every entry
        // point must still hand LAPACK a standard-layout slice.
        for dims in [(1, 1, 1), (1, 1, 3), (1, 3, 1), (3, 1, 1)] {
            let t = Tensor3::new(Array3::from_shape_fn(dims, |(i, j, k)| {
                (i + 2 * j + 3 * k) as f64 - 1.0
            }))
            .unwrap();
            for orientation in [Orientation::Frontal, Orientation::Lateral] {
                let f = tsvd(&t, orientation).unwrap();
                let back = f.reconstruct().unwrap();
                for (a, b) in back.data().iter().zip(t.data().iter()) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
                }
                tensor_nuclear_norm(&t, orientation).unwrap();
                tnn_prox(&t, 0.3, orientation).unwrap();
            }
        }
    }

    #[test]
    fn single_slice_prox_is_matrix_svt() {
        let m = array![[3.0, 0.0], [0.0, 1.0]];
        let t = Tensor3::from_frontal_slices(&[m.view()]).unwrap();
        let shrunk = tnn_prox(&t, 1.5, Orientation::Frontal).unwrap();
        let expected = array![[1.5, 0.0], [0.0, 0.0]];
        assert_abs_diff_eq!(&shrunk.frontal_slice(0), &expected, epsilon = 1e-10);
    }

    #[test]
    fn zero_threshold_prox_round_trips() {
        let mut rng = SmallRng::seed_from_u64(37);
        let t = random_tensor(&mut rng, 4, 3, 2);
        let out = tnn_prox(&t, 0.0, Orientation::Lateral).unwrap();
        assert_abs_diff_eq!(out.data(), t.data(), epsilon = 1e-12);
    }

    #[test]
    fn huge_threshold_prox_annihilates() {
        let mut rng = SmallRng::seed_from_u64(41);
        let t = random_tensor(&mut rng, 4, 4, 2);
        let out = tnn_prox(&t, 1e6, Orientation::Lateral).unwrap();
        assert!(out.max_abs() < 1e-12);
    }

    #[test]
    fn prox_reports_output_norm() {
        let mut rng = SmallRng::seed_from_u64(43);
        let t = random_tensor(&mut rng, 5, 5, 3);
        for &orientation in &[Orientation::Frontal, Orientation::Lateral] {
            let (out, reported) = tnn_prox_with_norm(&t, 0.3, orientation).unwrap();
            let recomputed = fourier_nuclear_norm(&out, orientation).unwrap();
            assert_abs_diff_eq!(reported, recomputed, epsilon = 1e-9);
        }
    }

    #[test]
    fn lateral_orientation_is_the_mode_permutation() {
        let mut rng = SmallRng::seed_from_u64(47);
        let t = random_tensor(&mut rng, 4, 3, 2);
        let permuted = Tensor3::new(
            t.data()
                .view()
                .permuted_axes([0, 2, 1])
                .as_standard_layout()
                .to_owned(),
        )
        .unwrap();
        let lateral = tensor_nuclear_norm(&t, Orientation::Lateral).unwrap();
        let frontal = tensor_nuclear_norm(&permuted, Orientation::Frontal).unwrap();
        assert_abs_diff_eq!(lateral, frontal, epsilon = 1e-12);

        let a = tnn_prox(&t, 0.2, Orientation::Lateral).unwrap();
        let b = tnn_prox(&permuted, 0.2, Orientation::Frontal).unwrap();
        let b_restored = Tensor3::new(
            b.data()
                .view()
                .permuted_axes([0, 2, 1])
                .as_standard_layout()
                .to_owned(),
        )
        .unwrap();
        assert_abs_diff_eq!(a.data(), b_restored.data(), epsilon = 1e-12);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut data = Array3::zeros((2, 2, 2));
        data[[0, 0, 0]] = f64::NAN;
        assert!(matches!(Tensor3::new(data), Err(Error::NonFinite(_))));
    }

    #[test]
    fn negative_threshold_is_rejected() {
        let t = Tensor3::zeros(2, 2, 2);
        assert!(tnn_prox(&t, -0.5, Orientation::Frontal).is_err());
    }
}
