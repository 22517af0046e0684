//! RGB images, MR fusion, and the GSMR quality metrics.

use crate::error::{GscloError, Result};
use crate::num::Real;

/// Side length of the SSIM Gaussian window.
pub const SSIM_WINDOW: usize = 11;
/// Standard deviation of the SSIM Gaussian window, in pixels.
pub const SSIM_SIGMA: f64 = 1.5;
/// SSIM stabilizers `(K₁L)²` and `(K₂L)²` for dynamic range `L = 1`.
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;
/// PSNR reported for bit-identical images.
pub const PSNR_CAP_DB: f64 = 60.0;

const CHANNELS: usize = 3;

/// Row-major interleaved RGB image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<F> {
    height: usize,
    width: usize,
    data: Vec<F>,
}

impl<F: Real> Image<F> {
    pub fn new(height: usize, width: usize, data: Vec<F>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(GscloError::InvalidArgument("image dimensions must be positive".into()));
        }
        let expected = height * width * CHANNELS;
        if data.len() != expected {
            return Err(GscloError::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        if data.iter().any(|&v| !(v >= F::zero() && v <= F::one())) {
            return Err(GscloError::InvalidArgument("pixel values must lie in [0, 1]".into()));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: F) -> Result<Self> {
        Self::new(height, width, vec![value; height * width * CHANNELS])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> F) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..CHANNELS {
                    data.push(f(r, c, ch));
                }
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        CHANNELS
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> F {
        self.data[(row * self.width + col) * CHANNELS + ch]
    }

    fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(GscloError::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }
}

/// Blends the real image into the virtual one wherever the mask is 1.
pub fn fuse_mr<F: Real>(real: &Image<F>, virt: &Image<F>, mask: &Image<F>) -> Result<Image<F>> {
    real.same_dims(virt)?;
    real.same_dims(mask)?;
    if mask.data.iter().any(|&m| m != F::zero() && m != F::one()) {
        return Err(GscloError::NonBinaryMask);
    }
    let data = real
        .data
        .iter()
        .zip(&virt.data)
        .zip(&mask.data)
        .map(|((&r, &v), &m)| if m == F::one() { r } else { v })
        .collect();
    Ok(Image {
        height: real.height,
        width: real.width,
        data,
    })
}

fn gaussian_kernel<F: Real>() -> [F; SSIM_WINDOW] {
    let mut k = [F::zero(); SSIM_WINDOW];
    let centre = F::count(SSIM_WINDOW / 2);
    let two_sigma2 = F::lit(2.0 * SSIM_SIGMA * SSIM_SIGMA);
    for (i, w) in k.iter_mut().enumerate() {
        let d = F::count(i) - centre;
        *w = (-(d * d) / two_sigma2).exp();
    }
    let sum: F = k.iter().copied().sum();
    for w in &mut k {
        *w /= sum;
    }
    k
}

/// Separable "valid" Gaussian filter over a single-channel plane.
fn filter_valid<F: Real>(plane: &[F], height: usize, width: usize, kernel: &[F; SSIM_WINDOW]) -> Vec<F> {
    let out_w = width + 1 - SSIM_WINDOW;
    let out_h = height + 1 - SSIM_WINDOW;
    let mut horiz = vec![F::zero(); height * out_w];
    for r in 0..height {
        let row = &plane[r * width..(r + 1) * width];
        for c in 0..out_w {
            let mut acc = F::zero();
            for (k, &w) in kernel.iter().enumerate() {
                acc += w * row[c + k];
            }
            horiz[r * out_w + c] = acc;
        }
    }
    let mut out = vec![F::zero(); out_h * out_w];
    for r in 0..out_h {
        for c in 0..out_w {
            let mut acc = F::zero();
            for (k, &w) in kernel.iter().enumerate() {
                acc += w * horiz[(r + k) * out_w + c];
            }
            out[r * out_w + c] = acc;
        }
    }
    out
}

/// Mean single-scale SSIM with an 11×11 Gaussian window (σ = 1.5),
/// computed per RGB channel and averaged.
pub fn ssim<F: Real>(a: &Image<F>, b: &Image<F>) -> Result<F> {
    a.same_dims(b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(GscloError::ImageTooSmall {
            height: h,
            width: w,
            window: SSIM_WINDOW,
        });
    }
    let kernel = gaussian_kernel::<F>();
    let c1 = F::lit(SSIM_C1);
    let c2 = F::lit(SSIM_C2);
    let two = F::lit(2.0);
    let mut total = F::zero();
    for ch in 0..CHANNELS {
        let pa: Vec<F> = a.data.iter().skip(ch).step_by(CHANNELS).copied().collect();
        let pb: Vec<F> = b.data.iter().skip(ch).step_by(CHANNELS).copied().collect();
        let paa: Vec<F> = pa.iter().map(|&v| v * v).collect();
        let pbb: Vec<F> = pb.iter().map(|&v| v * v).collect();
        let pab: Vec<F> = pa.iter().zip(&pb).map(|(&x, &y)| x * y).collect();
        let mu_a = filter_valid(&pa, h, w, &kernel);
        let mu_b = filter_valid(&pb, h, w, &kernel);
        let e_aa = filter_valid(&paa, h, w, &kernel);
        let e_bb = filter_valid(&pbb, h, w, &kernel);
        let e_ab = filter_valid(&pab, h, w, &kernel);
        let mut acc = F::zero();
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let num = (two * ma * mb + c1) * (two * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
            acc += num / den;
        }
        total += acc / F::count(mu_a.len());
    }
    Ok(total / F::count(CHANNELS))
}

fn mean_abs_diff<F: Real>(a: &Image<F>, b: &Image<F>) -> F {
    let sum: F = a.data.iter().zip(&b.data).map(|(&x, &y)| (x - y).abs()).sum();
    sum / F::count(a.data.len())
}

fn mean_sq_diff<F: Real>(a: &Image<F>, b: &Image<F>) -> F {
    let sum: F = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    sum / F::count(a.data.len())
}

/// `(1−λ)·mean|m − m̂| + λ·(1 − SSIM(m, m̂))`.
pub fn gsmr_loss<F: Real>(m: &Image<F>, m_hat: &Image<F>, lambda: F) -> Result<F> {
    m.same_dims(m_hat)?;
    if !(lambda >= F::zero() && lambda <= F::one()) {
        return Err(GscloError::InvalidArgument("lambda must lie in [0, 1]".into()));
    }
    let l1 = mean_abs_diff(m, m_hat);
    if lambda == F::zero() {
        return Ok(l1);
    }
    let dssim = F::one() - ssim(m, m_hat)?;
    Ok((F::one() - lambda) * l1 + lambda * dssim)
}

/// PSNR in dB for unit peak, capped at [`PSNR_CAP_DB`].
pub fn psnr<F: Real>(m: &Image<F>, m_hat: &Image<F>) -> Result<F> {
    m.same_dims(m_hat)?;
    let mse = mean_sq_diff(m, m_hat);
    let cap = F::lit(PSNR_CAP_DB);
    if mse == F::zero() {
        return Ok(cap);
    }
    Ok((F::lit(10.0) * (F::one() / mse).log10()).min(cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn img(h: usize, w: usize, v: f64) -> Image<f64> {
        Image::filled(h, w, v).unwrap()
    }

    #[test]
    fn fuse_identity_masks() {
        let r = img(4, 5, 0.8);
        let v = img(4, 5, 0.2);
        assert_eq!(fuse_mr(&r, &v, &img(4, 5, 1.0)).unwrap(), r);
        assert_eq!(fuse_mr(&r, &v, &img(4, 5, 0.0)).unwrap(), v);
    }

    #[test]
    fn fuse_left_half_mask() {
        let r = img(4, 6, 0.8);
        let v = img(4, 6, 0.2);
        let mask = Image::from_fn(4, 6, |_, c, _| if c < 3 { 1.0 } else { 0.0 }).unwrap();
        let out = fuse_mr(&r, &v, &mask).unwrap();
        for row in 0..4 {
            for col in 0..6 {
                for ch in 0..3 {
                    let want = if col < 3 { 0.8 } else { 0.2 };
                    assert_eq!(out.get(row, col, ch), want);
                }
            }
        }
    }

    #[test]
    fn fuse_rejects_soft_mask_and_mismatch() {
        let r = img(4, 6, 0.8);
        assert_eq!(
            fuse_mr(&r, &r, &img(4, 6, 0.5)).unwrap_err(),
            GscloError::NonBinaryMask
        );
        assert!(matches!(
            fuse_mr(&r, &img(4, 5, 0.2), &img(4, 6, 1.0)),
            Err(GscloError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ssim_of_identical_is_one() {
        let a = Image::from_fn(16, 20, |r, c, ch| ((r * 7 + c * 3 + ch) % 11) as f64 / 10.0).unwrap();
        assert_abs_diff_eq!(ssim(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ssim(&img(12, 12, 0.5), &img(12, 12, 0.5)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ssim_constant_pair_matches_formula() {
        // Zero variance: only the luminance term survives.
        let (ma, mb) = (0.5, 0.6);
        let want = (2.0 * ma * mb + SSIM_C1) / (ma * ma + mb * mb + SSIM_C1);
        let got = ssim(&img(12, 14, ma), &img(12, 14, mb)).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 0.983_609_244_3, epsilon = 1e-9);
    }

    #[test]
    fn ssim_rejects_small_images() {
        assert!(matches!(
            ssim(&img(10, 20, 0.5), &img(10, 20, 0.5)),
            Err(GscloError::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn loss_l1_only() {
        let got = gsmr_loss(&img(12, 12, 0.0), &img(12, 12, 0.1), 0.0).unwrap();
        assert_abs_diff_eq!(got, 0.1, epsilon = 1e-15);
        assert_eq!(gsmr_loss(&img(12, 12, 0.3), &img(12, 12, 0.3), 0.2).unwrap(), 0.0);
    }

    #[test]
    fn psnr_anchors() {
        assert_eq!(psnr(&img(3, 3, 0.4), &img(3, 3, 0.4)).unwrap(), PSNR_CAP_DB);
        assert_abs_diff_eq!(psnr(&img(3, 3, 0.4), &img(3, 3, 0.5)).unwrap(), 20.0, epsilon = 1e-9);
        assert_abs_diff_eq!(psnr(&img(3, 3, 0.4), &img(3, 3, 0.41)).unwrap(), 40.0, epsilon = 1e-9);
    }

    #[test]
    fn metrics_are_symmetric() {
        let a = Image::from_fn(13, 15, |r, c, ch| ((r * 5 + c + 2 * ch) % 9) as f64 / 8.0).unwrap();
        let b = Image::from_fn(13, 15, |r, c, ch| ((r + c * 4 + ch) % 7) as f64 / 6.0).unwrap();
        assert_abs_diff_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            gsmr_loss(&a, &b, 0.2).unwrap(),
            gsmr_loss(&b, &a, 0.2).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn works_in_single_precision() {
        let a = Image::<f32>::filled(12, 12, 0.25).unwrap();
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-5);
    }
}
