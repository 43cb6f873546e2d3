//! 1D transforms with exact endpoint conventions: the ten kinds of the
//! transform table, their inverses, mode frequencies and a brute-force oracle.
//!
//! Every real-to-real kind runs through one engine. The defining sums all
//! have the shape
//!
//!   out[q] = sum_p w_p f_p trig(pi (p + A)(q + D) / Nt),   A, D in {0, 1/2}
//!
//! which the engine evaluates by placing w_p f_p e^{-i pi p D / Nt} on a
//! complex ring of length 2 Nt, running one forward FFT, and post-twiddling
//! by e^{-i pi A (q + D) / Nt}; the real part gives cosine kinds, the negated
//! imaginary part sine kinds. Twiddle angles are reduced with integer
//! arithmetic first so endpoint identities like sin(pi (k + 1/2)) = (-1)^k
//! survive to machine precision.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Bc, BcPair, Layout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransformKind {
    R2cDft,
    C2cDft,
    Dct1,
    Dct2,
    Dct3,
    Dct4,
    Dst1,
    Dst2,
    Dst3,
    Dst4,
}

/// Position of a direction in the solver's stage chain, which decides the
/// DFT flavor and the extension treatment.
///
/// Periodic directions take `FirstSpectral` (real-to-complex) or
/// `SubsequentSpectral` (complex-to-complex). A fully unbounded direction
/// takes `DoubledUnbounded` when it is the first DFT-carrying direction and
/// `SubsequentSpectral` afterwards; either way it transforms the doubled
/// line. Semi-unbounded pairs always take `SemiUnbounded`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    FirstSpectral,
    SubsequentSpectral,
    DoubledUnbounded,
    SemiUnbounded,
}

/// Endpoint actions tied to a plan. Indices count elements (complex pairs
/// count as one element).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixup {
    /// Forward: the element is boundary data implied by the BCs; zero it
    /// before transforming.
    OverwriteZero(usize),
    /// Forward: the element is never read (duplicated point of a periodic
    /// node line).
    Ignore(usize),
    /// Backward: copy the element at the given index into the last output
    /// slot, restoring the duplicated point.
    DuplicateFrom(usize),
}

/// Trigonometric family of a direction's modes, in the forward basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Cos,
    Sin,
    Complex,
}

/// Frequency bookkeeping for one output slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeMeta {
    pub k: i64,
    /// Angular frequency; signed for complex DFT modes past Nyquist.
    pub omega: f64,
    /// Half modes carry frequency (k + 1/2) pi / Lt instead of k pi / Lt.
    pub half_mode: bool,
    pub is_real_pair: bool,
}

#[derive(Clone, Copy, Debug)]
enum Trig {
    Cos,
    Sin,
}

/// One real-to-real sum in engine coordinates.
#[derive(Clone, Copy, Debug)]
struct R2rForm {
    trig: Trig,
    /// Input positions offset by 1/2 (cell-centered samples or half modes).
    a_half: bool,
    /// Output frequencies offset by 1/2.
    d_half: bool,
    in_first: usize,
    in_count: usize,
    /// Ring position of input slot `in_first`.
    in_pos0: i64,
    w_first: f64,
    w_mid: f64,
    w_last: f64,
    out_first: usize,
    out_count: usize,
    /// Ring frequency of output slot `out_first`.
    out_freq0: i64,
    n_in: usize,
    n_out: usize,
}

enum Engine {
    R2r {
        fwd: R2rForm,
        bwd: R2rForm,
        fft: Arc<dyn Fft<f64>>,
    },
    R2c {
        fwd: Arc<dyn Fft<f64>>,
        inv: Arc<dyn Fft<f64>>,
    },
    C2c {
        fwd: Arc<dyn Fft<f64>>,
        inv: Arc<dyn Fft<f64>>,
    },
}

/// Planned 1D transform for one direction of one stage.
///
/// Forward and backward are unnormalized; a round trip multiplies data by
/// `normalization`, which the solver divides out exactly once per direction.
pub struct TransformPlan {
    kind: TransformKind,
    basis: Basis,
    n_cells: usize,
    /// Transform cells: N for spectral directions, 2N for extended ones.
    nt: usize,
    /// DFT-equivalent length; also the round-trip gain.
    n_logical: usize,
    n_in: usize,
    n_out: usize,
    nf_in: usize,
    nf_out: usize,
    h: f64,
    fixups_fwd: Vec<Fixup>,
    fixups_bwd: Vec<Fixup>,
    engine: Engine,
}

/// Per-thread workspace for plan execution.
pub struct TransformScratch {
    ring: Vec<Complex<f64>>,
    work: Vec<Complex<f64>>,
}

/// e^{-i pi num / den}, with the angle reduced in integer arithmetic.
fn unit(num: i64, den: i64) -> Complex<f64> {
    let m = num.rem_euclid(2 * den);
    let angle = -PI * m as f64 / den as f64;
    Complex::new(angle.cos(), angle.sin())
}

fn spectral_forms(kind: TransformKind, nt: usize) -> (R2rForm, R2rForm) {
    use TransformKind::*;
    use Trig::{Cos, Sin};
    let base = R2rForm {
        trig: Cos,
        a_half: false,
        d_half: false,
        in_first: 0,
        in_count: nt,
        in_pos0: 0,
        w_first: 2.0,
        w_mid: 2.0,
        w_last: 2.0,
        out_first: 0,
        out_count: nt,
        out_freq0: 0,
        n_in: nt,
        n_out: nt,
    };
    match kind {
        Dct1 => {
            let f = R2rForm {
                w_first: 1.0,
                w_last: 1.0,
                in_count: nt + 1,
                out_count: nt + 1,
                n_in: nt + 1,
                n_out: nt + 1,
                ..base
            };
            (f, f)
        }
        Dst1 => {
            let f = R2rForm {
                trig: Sin,
                in_count: nt + 1,
                out_count: nt + 1,
                n_in: nt + 1,
                n_out: nt + 1,
                ..base
            };
            (f, f)
        }
        Dst3 => {
            let f = R2rForm {
                trig: Sin,
                d_half: true,
                in_count: nt + 1,
                w_last: 1.0,
                n_in: nt + 1,
                ..base
            };
            let b = R2rForm {
                trig: Sin,
                a_half: true,
                out_count: nt + 1,
                n_out: nt + 1,
                ..base
            };
            (f, b)
        }
        Dct3 => {
            let f = R2rForm {
                d_half: true,
                in_count: nt + 1,
                w_first: 1.0,
                n_in: nt + 1,
                ..base
            };
            let b = R2rForm {
                a_half: true,
                out_count: nt + 1,
                n_out: nt + 1,
                ..base
            };
            (f, b)
        }
        Dct2 => {
            let f = R2rForm { a_half: true, ..base };
            let b = R2rForm { d_half: true, w_first: 1.0, ..base };
            (f, b)
        }
        Dst2 => {
            let f = R2rForm { trig: Sin, a_half: true, out_freq0: 1, ..base };
            let b = R2rForm { trig: Sin, d_half: true, in_pos0: 1, w_last: 1.0, ..base };
            (f, b)
        }
        Dct4 => {
            let f = R2rForm { a_half: true, d_half: true, ..base };
            (f, f)
        }
        Dst4 => {
            let f = R2rForm { trig: Sin, a_half: true, d_half: true, ..base };
            (f, f)
        }
        R2cDft | C2cDft => unreachable!("DFT kinds have no real-to-real form"),
    }
}

/// Extended-line forms for a semi-unbounded direction: the symmetric kind of
/// the bounded side, on 2N cells, with outputs padded to 2N + 1 slots so the
/// mode slot always equals the integer frequency index.
fn semi_forms(sym: Bc, layout: Layout, n: usize) -> (TransformKind, R2rForm, R2rForm) {
    use TransformKind::*;
    let nt = 2 * n;
    match (layout, sym) {
        (Layout::NodeCentered, Bc::Even) => {
            let (f, b) = spectral_forms(Dct1, nt);
            (Dct1, f, b)
        }
        (Layout::NodeCentered, Bc::Odd) => {
            let (f, b) = spectral_forms(Dst1, nt);
            (Dst1, f, b)
        }
        (Layout::CellCentered, Bc::Even) => {
            let (mut f, mut b) = spectral_forms(Dct2, nt);
            f.n_out = nt + 1; // slot 2N zeroed; DCT-II has no frequency-2N mode
            b.n_in = nt + 1; // slot 2N never read back
            (Dct2, f, b)
        }
        (Layout::CellCentered, Bc::Odd) => {
            let (mut f, mut b) = spectral_forms(Dst2, nt);
            // slide outputs so slot s holds frequency s; slot 0 zeroed
            f.out_first = 1;
            f.out_freq0 = 1;
            f.n_out = nt + 1;
            b.in_first = 1;
            b.in_pos0 = 1;
            b.n_in = nt + 1;
            (Dst2, f, b)
        }
        _ => unreachable!("semi-unbounded bounded side is Even or Odd"),
    }
}

/// Table-driven plan selection for one direction.
///
/// `n` is the user cell count and `h` the grid spacing; extended roles plan
/// for the doubled line the switch into their stage materializes.
pub fn plan_transform(bc: BcPair, layout: Layout, role: Role, n: usize, h: f64) -> Result<TransformPlan> {
    use TransformKind::*;
    if n < 4 {
        return Err(Error::InvalidDomain(format!("need at least 4 cells, got {n}")));
    }
    let node = layout == Layout::NodeCentered;
    let mut planner = FftPlanner::new();

    if bc.is_periodic() {
        let nt = n;
        let n_in = if node { n + 1 } else { n };
        return match role {
            Role::FirstSpectral => Ok(TransformPlan {
                kind: R2cDft,
                basis: Basis::Complex,
                n_cells: n,
                nt,
                n_logical: nt,
                n_in,
                n_out: nt / 2 + 1,
                nf_in: 1,
                nf_out: 2,
                h,
                fixups_fwd: if node { vec![Fixup::Ignore(n)] } else { vec![] },
                fixups_bwd: if node { vec![Fixup::DuplicateFrom(0)] } else { vec![] },
                engine: Engine::R2c {
                    fwd: planner.plan_fft_forward(nt),
                    inv: planner.plan_fft_inverse(nt),
                },
            }),
            Role::SubsequentSpectral => Ok(TransformPlan {
                kind: C2cDft,
                basis: Basis::Complex,
                n_cells: n,
                nt,
                n_logical: nt,
                n_in,
                n_out: nt,
                nf_in: 2,
                nf_out: 2,
                h,
                fixups_fwd: if node { vec![Fixup::Ignore(n)] } else { vec![] },
                fixups_bwd: if node { vec![Fixup::DuplicateFrom(0)] } else { vec![] },
                engine: Engine::C2c {
                    fwd: planner.plan_fft_forward(nt),
                    inv: planner.plan_fft_inverse(nt),
                },
            }),
            _ => Err(Error::Unsupported(
                "periodic direction cannot take an extended role".into(),
            )),
        };
    }

    if bc.is_fully_unbounded() {
        // doubled line: ring of 2N holds the user samples plus zero padding
        let nt = 2 * n;
        let n_in = nt;
        return match role {
            Role::DoubledUnbounded => Ok(TransformPlan {
                kind: R2cDft,
                basis: Basis::Complex,
                n_cells: n,
                nt,
                n_logical: nt,
                n_in,
                n_out: nt / 2 + 1,
                nf_in: 1,
                nf_out: 2,
                h,
                fixups_fwd: vec![],
                fixups_bwd: vec![],
                engine: Engine::R2c {
                    fwd: planner.plan_fft_forward(nt),
                    inv: planner.plan_fft_inverse(nt),
                },
            }),
            Role::SubsequentSpectral => Ok(TransformPlan {
                kind: C2cDft,
                basis: Basis::Complex,
                n_cells: n,
                nt,
                n_logical: nt,
                n_in,
                n_out: nt,
                nf_in: 2,
                nf_out: 2,
                h,
                fixups_fwd: vec![],
                fixups_bwd: vec![],
                engine: Engine::C2c {
                    fwd: planner.plan_fft_forward(nt),
                    inv: planner.plan_fft_inverse(nt),
                },
            }),
            _ => Err(Error::Unsupported(
                "fully unbounded direction needs a doubled or subsequent-spectral role".into(),
            )),
        };
    }

    if bc.is_semi_unbounded() {
        if role != Role::SemiUnbounded {
            return Err(Error::Unsupported(
                "semi-unbounded direction requires the semi-unbounded role".into(),
            ));
        }
        let bounded_left = bc.right() == Bc::Unbounded;
        let sym = if bounded_left { bc.left() } else { bc.right() };
        let (kind, fwd, bwd) = semi_forms(sym, layout, n);
        let nt = 2 * n;
        let mut fixups_fwd = Vec::new();
        if node && sym == Bc::Odd {
            // odd boundary samples of the extended line are implied zero
            fixups_fwd.push(Fixup::OverwriteZero(0));
            fixups_fwd.push(Fixup::OverwriteZero(nt));
        }
        return Ok(TransformPlan {
            kind,
            basis: if matches!(fwd.trig, Trig::Cos) { Basis::Cos } else { Basis::Sin },
            n_cells: n,
            nt,
            n_logical: 2 * nt,
            n_in: fwd.n_in,
            n_out: fwd.n_out,
            nf_in: 1,
            nf_out: 1,
            h,
            fixups_fwd,
            fixups_bwd: vec![],
            engine: Engine::R2r { fwd, bwd, fft: planner.plan_fft_forward(2 * nt) },
        });
    }

    // symmetric pair: the transform table proper
    if !matches!(role, Role::FirstSpectral | Role::SubsequentSpectral) {
        return Err(Error::Unsupported(
            "symmetric direction takes a spectral role".into(),
        ));
    }
    let kind = match (node, bc.left(), bc.right()) {
        (true, Bc::Odd, Bc::Odd) => Dst1,
        (true, Bc::Odd, Bc::Even) => Dst3,
        (true, Bc::Even, Bc::Odd) => Dct3,
        (true, Bc::Even, Bc::Even) => Dct1,
        (false, Bc::Odd, Bc::Odd) => Dst2,
        (false, Bc::Odd, Bc::Even) => Dst4,
        (false, Bc::Even, Bc::Odd) => Dct4,
        (false, Bc::Even, Bc::Even) => Dct2,
        _ => unreachable!("symmetric pair"),
    };
    let nt = n;
    let (fwd, bwd) = spectral_forms(kind, nt);
    let fixups_fwd = match kind {
        Dst1 => vec![Fixup::OverwriteZero(0), Fixup::OverwriteZero(n)],
        Dst3 => vec![Fixup::OverwriteZero(0)],
        Dct3 => vec![Fixup::OverwriteZero(n)],
        _ => vec![],
    };
    Ok(TransformPlan {
        kind,
        basis: if matches!(fwd.trig, Trig::Cos) { Basis::Cos } else { Basis::Sin },
        n_cells: n,
        nt,
        n_logical: 2 * nt,
        n_in: fwd.n_in,
        n_out: fwd.n_out,
        nf_in: 1,
        nf_out: 1,
        h,
        fixups_fwd,
        fixups_bwd: vec![],
        engine: Engine::R2r { fwd, bwd, fft: planner.plan_fft_forward(2 * nt) },
    })
}

impl TransformPlan {
    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn transform_cells(&self) -> usize {
        self.nt
    }

    pub fn n_logical(&self) -> usize {
        self.n_logical
    }

    /// Elements consumed by the forward pass (complex pairs count one).
    pub fn n_in(&self) -> usize {
        self.n_in
    }

    /// Elements produced by the forward pass.
    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn nf_in(&self) -> usize {
        self.nf_in
    }

    pub fn nf_out(&self) -> usize {
        self.nf_out
    }

    /// Round-trip gain to divide out after forward + backward.
    pub fn normalization(&self) -> f64 {
        self.n_logical as f64
    }

    pub fn forward_fixups(&self) -> &[Fixup] {
        &self.fixups_fwd
    }

    pub fn backward_fixups(&self) -> &[Fixup] {
        &self.fixups_bwd
    }

    pub fn make_scratch(&self) -> TransformScratch {
        let (ring, work) = match &self.engine {
            Engine::R2r { fft, .. } => (2 * self.nt, fft.get_inplace_scratch_len()),
            Engine::R2c { fwd, inv } | Engine::C2c { fwd, inv } => (
                self.nt,
                fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len()),
            ),
        };
        TransformScratch {
            ring: vec![Complex::new(0.0, 0.0); ring],
            work: vec![Complex::new(0.0, 0.0); work],
        }
    }

    /// Frequency metadata for output slot `slot`.
    pub fn mode(&self, slot: usize) -> ModeMeta {
        debug_assert!(slot < self.n_out);
        let lt = self.nt as f64 * self.h;
        match &self.engine {
            Engine::R2r { fwd, .. } => {
                let k = slot as i64 - fwd.out_first as i64 + fwd.out_freq0;
                let offset = if fwd.d_half { 0.5 } else { 0.0 };
                ModeMeta {
                    k,
                    omega: (k as f64 + offset) * PI / lt,
                    half_mode: fwd.d_half,
                    is_real_pair: false,
                }
            }
            Engine::R2c { .. } => ModeMeta {
                k: slot as i64,
                omega: 2.0 * PI * slot as f64 / lt,
                half_mode: false,
                is_real_pair: true,
            },
            Engine::C2c { .. } => {
                let k = if slot <= self.nt / 2 { slot as i64 } else { slot as i64 - self.nt as i64 };
                ModeMeta {
                    k,
                    omega: 2.0 * PI * k as f64 / lt,
                    half_mode: false,
                    is_real_pair: true,
                }
            }
        }
    }

    /// Zero the samples the boundary conditions imply; part of the forward
    /// contract and idempotent.
    pub fn apply_forward_fixups(&self, samples: &mut [f64]) {
        for f in &self.fixups_fwd {
            if let Fixup::OverwriteZero(i) = f {
                for c in 0..self.nf_in {
                    samples[i * self.nf_in + c] = 0.0;
                }
            }
        }
    }

    fn apply_backward_fixups(&self, samples: &mut [f64]) {
        for f in &self.fixups_bwd {
            if let Fixup::DuplicateFrom(src) = f {
                let last = self.n_in - 1;
                for c in 0..self.nf_in {
                    samples[last * self.nf_in + c] = samples[src * self.nf_in + c];
                }
            }
        }
    }

    /// Unnormalized forward transform of one line. Applies fixups to
    /// `samples` in place, then writes `n_out * nf_out` values.
    pub fn execute_forward(
        &self,
        samples: &mut [f64],
        out: &mut [f64],
        scratch: &mut TransformScratch,
    ) -> Result<()> {
        if samples.len() != self.n_in * self.nf_in {
            return Err(Error::ShapeMismatch { expected: self.n_in * self.nf_in, got: samples.len() });
        }
        if out.len() != self.n_out * self.nf_out {
            return Err(Error::ShapeMismatch { expected: self.n_out * self.nf_out, got: out.len() });
        }
        self.apply_forward_fixups(samples);
        match &self.engine {
            Engine::R2r { fwd, fft, .. } => exec_r2r(fwd, self.nt, fft, samples, out, scratch),
            Engine::R2c { fwd, .. } => {
                let ring = &mut scratch.ring[..self.nt];
                for (p, x) in ring.iter_mut().enumerate() {
                    *x = Complex::new(samples[p], 0.0);
                }
                fwd.process_with_scratch(ring, &mut scratch.work);
                for k in 0..self.n_out {
                    out[2 * k] = ring[k].re;
                    out[2 * k + 1] = ring[k].im;
                }
            }
            Engine::C2c { fwd, .. } => {
                let ring = &mut scratch.ring[..self.nt];
                for (p, x) in ring.iter_mut().enumerate() {
                    *x = Complex::new(samples[2 * p], samples[2 * p + 1]);
                }
                fwd.process_with_scratch(ring, &mut scratch.work);
                for k in 0..self.nt {
                    out[2 * k] = ring[k].re;
                    out[2 * k + 1] = ring[k].im;
                }
            }
        }
        Ok(())
    }

    /// Unnormalized backward transform; inverse pairing of `execute_forward`
    /// up to the `normalization` gain.
    pub fn execute_backward(
        &self,
        modes: &[f64],
        out: &mut [f64],
        scratch: &mut TransformScratch,
    ) -> Result<()> {
        if modes.len() != self.n_out * self.nf_out {
            return Err(Error::ShapeMismatch { expected: self.n_out * self.nf_out, got: modes.len() });
        }
        if out.len() != self.n_in * self.nf_in {
            return Err(Error::ShapeMismatch { expected: self.n_in * self.nf_in, got: out.len() });
        }
        match &self.engine {
            Engine::R2r { bwd, fft, .. } => exec_r2r(bwd, self.nt, fft, modes, out, scratch),
            Engine::R2c { inv, .. } => {
                let ring = &mut scratch.ring[..self.nt];
                ring[0] = Complex::new(modes[0], modes[1]);
                for k in 1..self.n_out {
                    ring[k] = Complex::new(modes[2 * k], modes[2 * k + 1]);
                }
                // rebuild the conjugate half the forward pass dropped
                for k in self.n_out..self.nt {
                    ring[k] = ring[self.nt - k].conj();
                }
                inv.process_with_scratch(ring, &mut scratch.work);
                for j in 0..self.nt {
                    out[j] = ring[j].re;
                }
                for j in self.nt..self.n_in {
                    out[j] = 0.0;
                }
                self.apply_backward_fixups(out);
            }
            Engine::C2c { inv, .. } => {
                let ring = &mut scratch.ring[..self.nt];
                for (k, x) in ring.iter_mut().enumerate() {
                    *x = Complex::new(modes[2 * k], modes[2 * k + 1]);
                }
                inv.process_with_scratch(ring, &mut scratch.work);
                for j in 0..self.nt {
                    out[2 * j] = ring[j].re;
                    out[2 * j + 1] = ring[j].im;
                }
                for j in self.nt..self.n_in {
                    out[2 * j] = 0.0;
                    out[2 * j + 1] = 0.0;
                }
                self.apply_backward_fixups(out);
            }
        }
        Ok(())
    }
}

fn exec_r2r(
    form: &R2rForm,
    nt: usize,
    fft: &Arc<dyn Fft<f64>>,
    input: &[f64],
    out: &mut [f64],
    scratch: &mut TransformScratch,
) {
    let ring_len = 2 * nt;
    let ring = &mut scratch.ring[..ring_len];
    ring.fill(Complex::new(0.0, 0.0));
    let d2 = form.d_half as i64;
    for s in 0..form.in_count {
        let w = if s == 0 {
            form.w_first
        } else if s == form.in_count - 1 {
            form.w_last
        } else {
            form.w_mid
        };
        let p = form.in_pos0 + s as i64;
        let v = w * input[form.in_first + s];
        ring[p as usize] = if d2 == 0 {
            Complex::new(v, 0.0)
        } else {
            unit(p * d2, 2 * nt as i64) * v
        };
    }
    fft.process_with_scratch(ring, &mut scratch.work);
    let a2 = form.a_half as i64;
    out[..form.n_out].fill(0.0);
    for s in 0..form.out_count {
        let q = form.out_freq0 + s as i64;
        let bin = q.rem_euclid(ring_len as i64) as usize;
        let mut v = ring[bin];
        if a2 != 0 {
            v *= unit(a2 * (2 * q + d2), 4 * nt as i64);
        }
        out[form.out_first + s] = match form.trig {
            Trig::Cos => v.re,
            Trig::Sin => -v.im,
        };
    }
}

/// Direct O(N^2) evaluation of the defining sums; the reference all engine
/// paths are tested against. `nt` is the transform cell count. DFT kinds
/// take and return interleaved complex values.
pub fn naive_oracle(kind: TransformKind, nt: usize, samples: &[f64]) -> Vec<f64> {
    use TransformKind::*;
    let n = nt;
    let nf = n as f64;
    match kind {
        Dct1 => (0..=n)
            .map(|k| {
                let mut acc = samples[0] + if k % 2 == 0 { samples[n] } else { -samples[n] };
                for j in 1..n {
                    acc += 2.0 * samples[j] * (PI * (j * k) as f64 / nf).cos();
                }
                acc
            })
            .collect(),
        Dst1 => (0..=n)
            .map(|k| {
                let mut acc = 0.0;
                for j in 1..n {
                    acc += 2.0 * samples[j] * (PI * (j * k) as f64 / nf).sin();
                }
                acc
            })
            .collect(),
        Dst3 => (0..n)
            .map(|k| {
                let mut acc = if k % 2 == 0 { samples[n] } else { -samples[n] };
                for j in 1..n {
                    acc += 2.0 * samples[j] * (PI * j as f64 * (k as f64 + 0.5) / nf).sin();
                }
                acc
            })
            .collect(),
        Dct3 => (0..n)
            .map(|k| {
                let mut acc = samples[0];
                for j in 1..n {
                    acc += 2.0 * samples[j] * (PI * j as f64 * (k as f64 + 0.5) / nf).cos();
                }
                acc
            })
            .collect(),
        Dct2 => (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| 2.0 * samples[j] * (PI * (j as f64 + 0.5) * k as f64 / nf).cos())
                    .sum()
            })
            .collect(),
        Dst2 => (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| 2.0 * samples[j] * (PI * (j as f64 + 0.5) * (k + 1) as f64 / nf).sin())
                    .sum()
            })
            .collect(),
        Dct4 => (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| 2.0 * samples[j] * (PI * (j as f64 + 0.5) * (k as f64 + 0.5) / nf).cos())
                    .sum()
            })
            .collect(),
        Dst4 => (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| 2.0 * samples[j] * (PI * (j as f64 + 0.5) * (k as f64 + 0.5) / nf).sin())
                    .sum()
            })
            .collect(),
        R2cDft => {
            let mut out = Vec::with_capacity(2 * (n / 2 + 1));
            for k in 0..=n / 2 {
                let mut acc = Complex::new(0.0, 0.0);
                for j in 0..n {
                    let angle = -2.0 * PI * (j * k) as f64 / nf;
                    acc += samples[j] * Complex::new(angle.cos(), angle.sin());
                }
                out.push(acc.re);
                out.push(acc.im);
            }
            out
        }
        C2cDft => {
            let mut out = Vec::with_capacity(2 * n);
            for k in 0..n {
                let mut acc = Complex::new(0.0, 0.0);
                for j in 0..n {
                    let angle = -2.0 * PI * (j * k) as f64 / nf;
                    acc += Complex::new(samples[2 * j], samples[2 * j + 1])
                        * Complex::new(angle.cos(), angle.sin());
                }
                out.push(acc.re);
                out.push(acc.im);
            }
            out
        }
    }
}
