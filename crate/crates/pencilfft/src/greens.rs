//! Green's function catalog and spectral construction.
//!
//! Supports any mix of periodic, symmetric and unbounded directions. For
//! unbounded-containing directions the kernel is sampled in physical space on
//! the extended grid (domain doubling), forward-transformed with a DCT-I that
//! realizes the displacement-ring DFT, and scaled by the volume element of
//! those directions. Purely spectral problems fill the multiplier directly
//! from the kernel's symbol.

use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::decomp::Topology;
use crate::error::{Error, Result};
use crate::fft1d::{plan_transform, Role, TransformKind, TransformPlan};
use crate::field::FieldBuffer;
use crate::grid::{Bc, BcPair, Domain, Layout};
use crate::specfn::{adaptive_simpson, e1, k0, one_minus_x_k1, si, EULER_GAMMA};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Kernel families: CHAT2 is the plain second-order (spectrally exact for
/// bounded problems) inverse Laplacian; HEJm are Gaussian-regularized kernels
/// of order m; HEJ0 is the spectral-like sharp-truncation variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelTag {
    Chat2,
    Hej0,
    Hej2,
    Hej4,
    Hej6,
    Hej8,
    Hej10,
}

impl KernelTag {
    pub const ALL: [KernelTag; 7] = [
        KernelTag::Chat2,
        KernelTag::Hej0,
        KernelTag::Hej2,
        KernelTag::Hej4,
        KernelTag::Hej6,
        KernelTag::Hej8,
        KernelTag::Hej10,
    ];

    /// Regularization order; the numeric suffix for the HEJ family.
    pub fn order(&self) -> Option<usize> {
        match self {
            KernelTag::Chat2 => None,
            KernelTag::Hej0 => Some(0),
            KernelTag::Hej2 => Some(2),
            KernelTag::Hej4 => Some(4),
            KernelTag::Hej6 => Some(6),
            KernelTag::Hej8 => Some(8),
            KernelTag::Hej10 => Some(10),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelTag::Chat2 => "CHAT2",
            KernelTag::Hej0 => "HEJ0",
            KernelTag::Hej2 => "HEJ2",
            KernelTag::Hej4 => "HEJ4",
            KernelTag::Hej6 => "HEJ6",
            KernelTag::Hej8 => "HEJ8",
            KernelTag::Hej10 => "HEJ10",
        }
    }
}

/// Kernel selection plus the smoothing-length ratio sigma/h used by the
/// regularized family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelId {
    pub tag: KernelTag,
    pub sigma_ratio: f64,
}

impl KernelId {
    pub fn new(tag: KernelTag) -> Self {
        Self { tag, sigma_ratio: 2.0 }
    }

    pub fn with_sigma_ratio(tag: KernelTag, sigma_ratio: f64) -> Self {
        Self { tag, sigma_ratio }
    }
}

/// Extension geometry of one unbounded-containing direction.
///
/// `pad_zeros` is (count, start) in extended sample indices. Kernel distance
/// samples run 0..=green_mirror and mirror around that index on the green's
/// transform ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtensionSpec {
    pub dir: usize,
    pub n_user: usize,
    pub n_ext: usize,
    pub pad_zeros: (usize, usize),
    pub green_mirror: usize,
}

pub fn extension_geometry(domain: &Domain, dir: usize) -> Result<ExtensionSpec> {
    let bc = domain.bc(dir);
    if !bc.has_unbounded() {
        return Err(Error::Unsupported(format!(
            "direction {dir} is spectral; only unbounded-containing directions extend"
        )));
    }
    let n = domain.cells(dir);
    let node = domain.layout() == Layout::NodeCentered;
    let n_ext = 2 * n;
    if bc.is_fully_unbounded() {
        let (n_user, pad_zeros) = if node { (n + 1, (n - 1, n + 1)) } else { (n, (n, n)) };
        return Ok(ExtensionSpec { dir, n_user, n_ext, pad_zeros, green_mirror: n });
    }
    // semi-unbounded: the extension sits entirely on the unbounded side
    let n_user = if node { n + 1 } else { n };
    let start = if bc.left() == Bc::Unbounded { 0 } else { n_user };
    Ok(ExtensionSpec { dir, n_user, n_ext, pad_zeros: (n, start), green_mirror: n_ext })
}

/// Spectral attenuation factor of the order-m regularized kernel,
/// e^{-s} * sum_{j<m/2} s^j / j!.
pub fn zeta_hat(m: usize, s: f64) -> f64 {
    debug_assert!((2..=10).contains(&m) && m % 2 == 0);
    let mut sum = 1.0;
    let mut term = 1.0;
    for j in 1..(m / 2) {
        term *= s / j as f64;
        sum += term;
    }
    (-s).exp() * sum
}

/// Multiplier for a purely spectral mode.
pub fn spectral_green_value(kernel: KernelId, omega: [f64; 3], h: [f64; 3]) -> Result<f64> {
    let w2 = omega.iter().map(|w| w * w).sum::<f64>();
    if w2 == 0.0 {
        return Err(Error::Numerical("green's function is singular at the zero mode".into()));
    }
    Ok(match kernel.tag {
        KernelTag::Chat2 => -1.0 / w2,
        KernelTag::Hej0 => {
            // sharp truncation at the per-direction Nyquist; lattice modes
            // never exceed it, so this matches CHAT2 on every live slot
            let inside = (0..3).all(|d| omega[d].abs() <= PI / h[d] * (1.0 + 1e-12));
            if inside {
                -1.0 / w2
            } else {
                0.0
            }
        }
        tag => {
            let m = tag.order().unwrap();
            let sigma = kernel.sigma_ratio * h.iter().fold(0.0f64, |a, &b| a.max(b));
            -zeta_hat(m, 0.5 * sigma * sigma * w2) / w2
        }
    })
}

/// Gaussian polynomial correction P_m of the 3D regularized kernels.
fn hej_poly_3d(m: usize, rho: f64) -> f64 {
    let r2 = rho * rho;
    match m {
        2 => 0.0,
        4 => 0.5 * rho,
        6 => rho * (7.0 / 8.0 - r2 / 8.0),
        8 => rho * (19.0 / 16.0 + r2 * (-1.0 / 3.0 + r2 / 48.0)),
        10 => rho * (187.0 / 128.0 + r2 * (-233.0 / 384.0 + r2 * (29.0 / 384.0 - r2 / 384.0))),
        _ => unreachable!("kernel order"),
    }
}

/// Slope of P_m at the origin; fixes the r = 0 kernel limit.
fn hej_c1(m: usize) -> f64 {
    match m {
        2 => 0.0,
        4 => 0.5,
        6 => 7.0 / 8.0,
        8 => 19.0 / 16.0,
        10 => 187.0 / 128.0,
        _ => unreachable!("kernel order"),
    }
}

/// Free-space kernel value at distance r for three unbounded directions.
pub fn unbounded_kernel_value(kernel: KernelId, r: f64, sigma: f64, h: [f64; 3]) -> f64 {
    match kernel.tag {
        KernelTag::Chat2 => {
            if r == 0.0 {
                chat2_cell_average_3d(h)
            } else {
                -1.0 / (4.0 * PI * r)
            }
        }
        KernelTag::Hej0 => {
            // equivalent physical kernel of the sharp spherical truncation
            let kc = PI / h.iter().fold(0.0f64, |a, &b| a.max(b));
            if r == 0.0 {
                -kc / (2.0 * PI * PI)
            } else {
                -si(kc * r) / (2.0 * PI * PI * r)
            }
        }
        tag => {
            let m = tag.order().unwrap();
            if r == 0.0 {
                return -(1.0 + hej_c1(m)) * SQRT_2_OVER_PI / (4.0 * PI * sigma);
            }
            let rho = r / sigma;
            -(libm::erf(rho / SQRT_2) + SQRT_2_OVER_PI * (-0.5 * rho * rho).exp() * hej_poly_3d(m, rho))
                / (4.0 * PI * r)
        }
    }
}

/// Cell average of -1/(4 pi r) over one grid cell, by fixed midpoint rule.
fn chat2_cell_average_3d(h: [f64; 3]) -> f64 {
    const Q: usize = 32;
    let mut sum = 0.0;
    for i in 0..Q {
        let x = ((i as f64 + 0.5) / Q as f64 - 0.5) * h[0];
        for j in 0..Q {
            let y = ((j as f64 + 0.5) / Q as f64 - 0.5) * h[1];
            for k in 0..Q {
                let z = ((k as f64 + 0.5) / Q as f64 - 0.5) * h[2];
                sum += 1.0 / (x * x + y * y + z * z).sqrt();
            }
        }
    }
    -sum / (Q * Q * Q) as f64 / (4.0 * PI)
}

/// Axial-mode 1D kernel for one unbounded direction under two spectral ones.
fn screened_1d(kappa: f64, x: f64) -> f64 {
    if kappa == 0.0 {
        0.5 * x.abs()
    } else {
        -(-kappa * x.abs()).exp() / (2.0 * kappa)
    }
}

/// Mean of a radial kernel over the hx-by-hy cell around the origin.
/// `inner(R)` must supply the primitive integral_0^R f(r) r dr.
fn cell_average_polar<F: Fn(f64) -> f64>(hx: f64, hy: f64, inner: F) -> f64 {
    let split = (hy / hx).atan();
    let g = |th: f64| {
        let run = if th <= split { hx / (2.0 * th.cos()) } else { hy / (2.0 * th.sin()) };
        inner(run)
    };
    let scale = inner(0.5 * hx.max(hy)).abs().max(1e-300);
    let quad = adaptive_simpson(&g, 0.0, split, 1e-13 * scale)
        + adaptive_simpson(&g, split, 0.5 * PI, 1e-13 * scale);
    4.0 * quad / (hx * hy)
}

/// Transverse 2D kernel for two unbounded directions under one spectral one.
fn screened_2d_chat2(kappa: f64, r: f64, hx: f64, hy: f64) -> f64 {
    if kappa == 0.0 {
        if r == 0.0 {
            cell_average_polar(hx, hy, |run| 0.25 * run * run * (2.0 * run.ln() - 1.0)) / (2.0 * PI)
        } else {
            r.ln() / (2.0 * PI)
        }
    } else if r == 0.0 {
        -cell_average_polar(hx, hy, |run| one_minus_x_k1(kappa * run) / (kappa * kappa))
            / (2.0 * PI)
    } else {
        -k0(kappa * r) / (2.0 * PI)
    }
}

/// sum_{j=1..m/2-1} p_j(x)/j! entering the axial-zero-mode 2D kernel.
fn hej_poly_2d(m: usize, x: f64) -> f64 {
    let mut s = 0.0;
    if m >= 4 {
        s += 1.0;
    }
    if m >= 6 {
        s += 0.5 * (1.0 - 0.5 * x);
    }
    if m >= 8 {
        s += (2.0 + x * (-2.0 + 0.25 * x)) / 6.0;
    }
    if m >= 10 {
        s += (6.0 + x * (-9.0 + x * (2.25 - 0.125 * x))) / 24.0;
    }
    s
}

fn harmonic(j: usize) -> f64 {
    (1..=j).map(|i| 1.0 / i as f64).sum()
}

/// Regularized 2D kernel at kappa = 0, gauged to ln(r)/2pi at large r.
fn hej_2d_log(m: usize, sigma: f64, r: f64) -> f64 {
    if r == 0.0 {
        return (sigma.ln() + 0.5 * (LN_2 - EULER_GAMMA) - 0.5 * harmonic(m / 2 - 1)) / (2.0 * PI);
    }
    let x = (r / sigma) * (r / sigma);
    (r.ln() + 0.5 * e1(0.5 * x)) / (2.0 * PI) - (-0.5 * x).exp() * hej_poly_2d(m, x) / (4.0 * PI)
}

/// Regularized 2D kernel on the axis (r = 0) for kappa > 0:
/// -(1/4pi) integral_s^inf zeta_hat_m(t)/t dt in closed form.
fn hej_2d_axis(m: usize, sigma: f64, kappa: f64) -> f64 {
    let s = 0.5 * (sigma * kappa) * (sigma * kappa);
    let es = (-s).exp();
    let mut acc = e1(s);
    let mut partial = 1.0;
    let mut term = 1.0;
    for j in 1..(m / 2) {
        acc += es * partial / j as f64;
        term *= s / j as f64;
        partial += term;
    }
    -acc / (4.0 * PI)
}

/// Gaussian-decaying difference between the order-m kernel and -1/(4 pi r).
fn hej_diff_3d(m: usize, sigma: f64, r: f64) -> f64 {
    let rho = r / sigma;
    (libm::erfc(rho / SQRT_2) - SQRT_2_OVER_PI * (-0.5 * rho * rho).exp() * hej_poly_3d(m, rho))
        / (4.0 * PI * r)
}

/// Regularized 2D kernel for a whole column of axial modes at one transverse
/// distance. `kappas` are the |omega| of the axial modes; `out` receives one
/// value per mode. `scratch` is reused across calls.
fn hej_2d_column(
    m: usize,
    sigma: f64,
    r: f64,
    kappas: &[f64],
    out: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    debug_assert_eq!(kappas.len(), out.len());
    if r == 0.0 {
        for (o, &k) in out.iter_mut().zip(kappas) {
            *o = if k == 0.0 { hej_2d_log(m, sigma, 0.0) } else { hej_2d_axis(m, sigma, k) };
        }
        return;
    }
    let kmax = kappas.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut dz = 0.0;
    if kmax > 0.0 {
        // split off the screened singular part (a K0), leaving a smooth even
        // integrand whose trapezoid sum converges spectrally; the alias band
        // is pushed past both the gaussian scale and the 1/r roughness
        let omega_extra = (23.0 / r).max(9.0 / sigma);
        dz = 2.0 * PI / (kmax + omega_extra);
        let nq = (12.0 * sigma / dz).ceil() as usize;
        scratch.clear();
        for q in 0..=nq {
            let z = q as f64 * dz;
            scratch.push(hej_diff_3d(m, sigma, (r * r + z * z).sqrt()));
        }
    }
    for (o, &k) in out.iter_mut().zip(kappas) {
        if k == 0.0 {
            *o = hej_2d_log(m, sigma, r);
            continue;
        }
        let mut acc = 0.5 * scratch[0];
        for (q, &dv) in scratch.iter().enumerate().skip(1) {
            acc += dv * (k * q as f64 * dz).cos();
        }
        *o = -k0(k * r) / (2.0 * PI) + 2.0 * dz * acc;
    }
}

/// What happens to the all-zero spectral mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroModePolicy {
    /// Mean-zero gauge for fully spectral problems.
    SetZero,
    /// The kernel's own value stands (unbounded-containing problems).
    Keep,
}

/// Rank-local spectral multiplier, one real value per lattice point of the
/// final forward topology, in that topology's memory order.
#[derive(Clone, Debug)]
pub struct GreenSpectrum {
    values: Vec<f64>,
    nf: usize,
    zero_mode_policy: ZeroModePolicy,
}

impl GreenSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nf(&self) -> usize {
        self.nf
    }

    pub fn zero_mode_policy(&self) -> ZeroModePolicy {
        self.zero_mode_policy
    }
}

/// Pointwise product of a spectral field with the multiplier.
pub fn multiply_spectrum(f_hat: &mut FieldBuffer, g_hat: &GreenSpectrum) -> Result<()> {
    let need = g_hat.values.len() * g_hat.nf;
    let data = f_hat.active_mut();
    if data.len() < need {
        return Err(Error::ShapeMismatch { expected: need, got: data.len() });
    }
    if g_hat.nf == 1 {
        for (d, g) in data[..need].iter_mut().zip(&g_hat.values) {
            *d *= g;
        }
    } else {
        for (i, g) in g_hat.values.iter().enumerate() {
            data[2 * i] *= g;
            data[2 * i + 1] *= g;
        }
    }
    Ok(())
}

struct ConvDir {
    dir: usize,
    mirror: usize,
    h: f64,
    plan: TransformPlan,
}

/// Build the rank-local multiplier for `domain` as seen after the forward
/// chain described by the per-direction `plans`, laid out on `topo`.
pub fn build_green(
    kernel: KernelId,
    domain: &Domain,
    plans: [&TransformPlan; 3],
    topo: &Topology,
    rank: usize,
) -> Result<GreenSpectrum> {
    if !(kernel.sigma_ratio > 0.0) || !kernel.sigma_ratio.is_finite() {
        return Err(Error::InvalidDomain(format!(
            "sigma ratio must be positive and finite, got {}",
            kernel.sigma_ratio
        )));
    }
    for d in 0..3 {
        if topo.global()[d] != plans[d].n_out() {
            return Err(Error::TopologyMismatch(format!(
                "direction {d}: topology extent {} vs plan mode count {}",
                topo.global()[d],
                plans[d].n_out()
            )));
        }
    }
    let h = [domain.spacing(0), domain.spacing(1), domain.spacing(2)];
    let order = topo.axis_order();
    let origin = topo.local_origin(rank);
    let shape = topo.local_shape(rank);
    let npts = shape.iter().product::<usize>();
    let mut values = vec![0.0f64; npts];

    let conv_dirs: Vec<usize> = (0..3).filter(|&d| domain.bc(d).has_unbounded()).collect();
    let spec_dirs: Vec<usize> = (0..3).filter(|&d| !domain.bc(d).has_unbounded()).collect();

    if conv_dirs.is_empty() {
        let mut idx = 0;
        let mut g = [0usize; 3];
        for c2 in 0..shape[order[2]] {
            g[order[2]] = origin[order[2]] + c2;
            for c1 in 0..shape[order[1]] {
                g[order[1]] = origin[order[1]] + c1;
                for c0 in 0..shape[order[0]] {
                    g[order[0]] = origin[order[0]] + c0;
                    let omega =
                        [plans[0].mode(g[0]).omega, plans[1].mode(g[1]).omega, plans[2].mode(g[2]).omega];
                    let w2 = omega.iter().map(|w| w * w).sum::<f64>();
                    values[idx] =
                        if w2 == 0.0 { 0.0 } else { spectral_green_value(kernel, omega, h)? };
                    idx += 1;
                }
            }
        }
        return Ok(GreenSpectrum { values, nf: topo.nf(), zero_mode_policy: ZeroModePolicy::SetZero });
    }

    // capability gates for mixed spectral/unbounded problems
    if conv_dirs.len() < 3 {
        match kernel.tag {
            KernelTag::Chat2 => {}
            KernelTag::Hej0 => {
                return Err(Error::Unsupported(
                    "the spectral-like kernel is defined for fully spectral or fully unbounded problems only"
                        .into(),
                ))
            }
            _ if conv_dirs.len() == 1 => {
                return Err(Error::Unsupported(
                    "regularized kernels need at least two unbounded directions; use CHAT2 here"
                        .into(),
                ))
            }
            _ => {}
        }
    }

    let conv: Vec<ConvDir> = conv_dirs
        .iter()
        .map(|&d| -> Result<ConvDir> {
            let mirror = extension_geometry(domain, d)?.green_mirror;
            let plan = plan_transform(
                BcPair::new(Bc::Even, Bc::Even)?,
                Layout::NodeCentered,
                Role::FirstSpectral,
                mirror,
                h[d],
            )?;
            Ok(ConvDir { dir: d, mirror, h: h[d], plan })
        })
        .collect::<Result<_>>()?;

    // per-direction table index contributions: kernel transform slots for
    // convolution directions, window offsets for spectral ones
    let grid_len: usize = conv.iter().map(|c| c.mirror + 1).product();
    let mut contrib: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut stride = 1usize;
    for c in &conv {
        let n_out = plans[c.dir].n_out();
        let nt = plans[c.dir].transform_cells();
        let map: Vec<usize> = match plans[c.dir].kind() {
            TransformKind::R2cDft => (0..n_out).collect(),
            TransformKind::C2cDft => (0..n_out).map(|s| s.min(nt - s)).collect(),
            TransformKind::Dct1 | TransformKind::Dst1 | TransformKind::Dct2 | TransformKind::Dst2 => {
                (0..n_out).collect()
            }
            k => {
                return Err(Error::Unsupported(format!(
                    "transform {k:?} cannot carry an unbounded direction"
                )))
            }
        };
        contrib[c.dir] = map.iter().map(|&t| t * stride).collect();
        stride *= c.mirror + 1;
    }
    debug_assert_eq!(stride, grid_len);
    let mut spec_width = Vec::new();
    for &d in &spec_dirs {
        let w = shape[d];
        contrib[d] = (0..plans[d].n_out())
            .map(|s| s.saturating_sub(origin[d]).min(w.saturating_sub(1)) * stride)
            .collect();
        spec_width.push(w);
        stride *= w;
    }
    let mut table = vec![0.0f64; stride];

    // kernels see the smoothing scale of the sampled directions
    let sigma = kernel.sigma_ratio * conv.iter().map(|c| c.h).fold(0.0f64, f64::max);
    let vol: f64 = conv.iter().map(|c| c.h).product();
    let spec_omega: Vec<Vec<f64>> = spec_dirs
        .iter()
        .map(|&d| (0..shape[d]).map(|c| plans[d].mode(origin[d] + c).omega.abs()).collect())
        .collect();

    match conv.len() {
        3 => {
            let (m0, m1, m2) = (conv[0].mirror, conv[1].mirror, conv[2].mirror);
            let mut t = 0;
            for j2 in 0..=m2 {
                let z = j2 as f64 * conv[2].h;
                for j1 in 0..=m1 {
                    let y = j1 as f64 * conv[1].h;
                    for j0 in 0..=m0 {
                        let x = j0 as f64 * conv[0].h;
                        let r = (x * x + y * y + z * z).sqrt();
                        table[t] = unbounded_kernel_value(kernel, r, sigma, h) * vol;
                        t += 1;
                    }
                }
            }
        }
        2 => {
            let (m0, m1) = (conv[0].mirror, conv[1].mirror);
            let kappas = &spec_omega[0];
            if kernel.tag == KernelTag::Chat2 {
                for (w, &kappa) in kappas.iter().enumerate() {
                    let mut t = w * grid_len;
                    for j1 in 0..=m1 {
                        let y = j1 as f64 * conv[1].h;
                        for j0 in 0..=m0 {
                            let x = j0 as f64 * conv[0].h;
                            let r = (x * x + y * y).sqrt();
                            table[t] = screened_2d_chat2(kappa, r, conv[0].h, conv[1].h) * vol;
                            t += 1;
                        }
                    }
                }
            } else {
                let m = kernel.tag.order().unwrap();
                let mut column = vec![0.0f64; kappas.len()];
                let mut scratch = Vec::new();
                for j1 in 0..=m1 {
                    let y = j1 as f64 * conv[1].h;
                    for j0 in 0..=m0 {
                        let x = j0 as f64 * conv[0].h;
                        let r = (x * x + y * y).sqrt();
                        hej_2d_column(m, sigma, r, kappas, &mut column, &mut scratch);
                        let cell = j0 + (m0 + 1) * j1;
                        for (w, &v) in column.iter().enumerate() {
                            table[cell + w * grid_len] = v * vol;
                        }
                    }
                }
            }
        }
        1 => {
            let m0 = conv[0].mirror;
            for (w1, &wb) in spec_omega[1].iter().enumerate() {
                for (w0, &wa) in spec_omega[0].iter().enumerate() {
                    let kappa = (wa * wa + wb * wb).sqrt();
                    let mut t = (w0 + spec_width[0] * w1) * grid_len;
                    for j0 in 0..=m0 {
                        table[t] = screened_1d(kappa, j0 as f64 * conv[0].h) * vol;
                        t += 1;
                    }
                }
            }
        }
        _ => unreachable!("one to three convolution directions"),
    }

    // displacement-ring DFT along each sampled direction
    let mut st = 1;
    for c in &conv {
        dct_along(&mut table, &c.plan, c.mirror + 1, st)?;
        st *= c.mirror + 1;
    }

    let mut idx = 0;
    let mut g = [0usize; 3];
    for c2 in 0..shape[order[2]] {
        g[order[2]] = origin[order[2]] + c2;
        for c1 in 0..shape[order[1]] {
            g[order[1]] = origin[order[1]] + c1;
            for c0 in 0..shape[order[0]] {
                g[order[0]] = origin[order[0]] + c0;
                values[idx] = table[contrib[0][g[0]] + contrib[1][g[1]] + contrib[2][g[2]]];
                idx += 1;
            }
        }
    }
    Ok(GreenSpectrum { values, nf: topo.nf(), zero_mode_policy: ZeroModePolicy::Keep })
}

/// In-place forward transform along one strided dimension of a dense table.
fn dct_along(table: &mut [f64], plan: &TransformPlan, len: usize, stride: usize) -> Result<()> {
    debug_assert_eq!(plan.n_in(), len);
    debug_assert_eq!(plan.n_out(), len);
    let mut scratch = plan.make_scratch();
    let mut line = vec![0.0f64; len];
    let mut out = vec![0.0f64; len];
    let block = len * stride;
    debug_assert_eq!(table.len() % block, 0);
    for b in (0..table.len()).step_by(block) {
        for i in 0..stride {
            for (q, v) in line.iter_mut().enumerate() {
                *v = table[b + i + q * stride];
            }
            plan.execute_forward(&mut line, &mut out, &mut scratch)?;
            for (q, &v) in out.iter().enumerate() {
                table[b + i + q * stride] = v;
            }
        }
    }
    Ok(())
}
