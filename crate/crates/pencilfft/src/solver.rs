//! Distributed Poisson and rotational solves over pencil FFT chains.
//!
//! A solve runs one transform stage per direction. Reflecting and
//! semi-unbounded directions go first (their transforms stay real), then the
//! first periodic or fully unbounded direction switches the field to complex
//! interleaved storage, and any remaining spectral directions follow. Between
//! stages the field is redistributed so the active direction is always
//! contiguous in local memory. The spectrum is multiplied by the Green's
//! function at the final pencil and the chain runs in reverse.

use crate::decomp::Topology;
use crate::error::{Error, Result};
use crate::exchange::{execute_switch, EventLog, Strategy, SwitchKnobs, SwitchPlan};
use crate::fft1d::{plan_transform, Basis, Role, TransformPlan};
use crate::field::FieldBuffer;
use crate::greens::{build_green, multiply_spectrum, GreenSpectrum, KernelId};
use crate::exchange::transport::Transport;
use crate::grid::{Bc, BcPair, Domain, Layout};
use std::time::Instant;

/// How the per-line transform loop runs on each rank.
///
/// `Parallel` fans lines out over a rayon pool. Without the `parallel`
/// feature it behaves like `Sequential`, so callers can hold the knob
/// without caring how the library was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Spectral multiplier used for first derivatives in rotational solves.
///
/// The finite-difference variants reproduce the modified wavenumber of the
/// matching centered stencil, so a spectral solve can mimic a grid code of
/// the same order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeScheme {
    Spectral,
    Fd2,
    Fd4,
    Fd6,
}

impl DerivativeScheme {
    /// Signed derivative symbol at angular frequency `omega` and spacing `h`.
    pub fn symbol(self, omega: f64, h: f64) -> f64 {
        let t = omega * h;
        match self {
            DerivativeScheme::Spectral => omega,
            DerivativeScheme::Fd2 => t.sin() / h,
            DerivativeScheme::Fd4 => (4.0 / 3.0 * t.sin() - 1.0 / 6.0 * (2.0 * t).sin()) / h,
            DerivativeScheme::Fd6 => {
                (1.5 * t.sin() - 0.3 * (2.0 * t).sin() + (3.0 * t).sin() / 30.0) / h
            }
        }
    }

    /// Formal order of accuracy; `None` for the exact symbol.
    pub fn order(self) -> Option<usize> {
        match self {
            DerivativeScheme::Spectral => None,
            DerivativeScheme::Fd2 => Some(2),
            DerivativeScheme::Fd4 => Some(4),
            DerivativeScheme::Fd6 => Some(6),
        }
    }
}

/// Execution knobs shared by every solve on a plan.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub strategy: Strategy,
    pub exec: ExecMode,
    pub knobs: SwitchKnobs,
    /// Only consulted by rotational solves.
    pub derivative: DerivativeScheme,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Nb,
            exec: ExecMode::default(),
            knobs: SwitchKnobs::default(),
            derivative: DerivativeScheme::Spectral,
        }
    }
}

/// Wall-clock buckets for one stage of a solve.
#[derive(Clone, Debug)]
pub struct StageProfile {
    pub label: String,
    /// Transform and pointwise work.
    pub compute_s: f64,
    /// Time inside the pencil switch.
    pub comm_s: f64,
    /// Portion of `comm_s` spent packing or unpacking while transfers were
    /// still pending.
    pub overlap_s: f64,
    pub bytes: u64,
}

impl StageProfile {
    fn new(label: String) -> Self {
        Self { label, compute_s: 0.0, comm_s: 0.0, overlap_s: 0.0, bytes: 0 }
    }
}

/// Timing breakdown of one solve on one rank.
#[derive(Clone, Debug, Default)]
pub struct SolveProfile {
    pub wall_s: f64,
    pub stages: Vec<StageProfile>,
}

impl SolveProfile {
    /// Total compute and communication seconds across stages.
    pub fn bucket_totals(&self) -> (f64, f64) {
        let c = self.stages.iter().map(|s| s.compute_s).sum();
        let m = self.stages.iter().map(|s| s.comm_s).sum();
        (c, m)
    }
}

/// One direction of the chain: its transform, the pencils on either side of
/// it, and the switches that move data in and out.
struct Stage {
    axis: usize,
    plan: TransformPlan,
    topo_out: Topology,
    /// None when the data is already laid out as `topo_in`.
    fwd: Option<SwitchPlan>,
    bwd: Option<SwitchPlan>,
    /// Lines this rank transforms, same for both pencils of the stage.
    lines: usize,
}

/// Transform chain for one scalar field on one rank.
struct ChainPlan {
    rank: usize,
    input: Topology,
    stages: Vec<Stage>,
    /// Product of the per-direction logical lengths; one backward pass
    /// divides by this once.
    norm: f64,
    capacity: usize,
}

/// Directions grouped by transform class: real-to-real first in ascending
/// order, then the spectral (periodic or doubled) ones.
fn stage_axes(domain: &Domain) -> Vec<usize> {
    let spectral =
        |d: usize| domain.bc(d).is_periodic() || domain.bc(d).is_fully_unbounded();
    let mut axes: Vec<usize> = (0..3).filter(|&d| !spectral(d)).collect();
    axes.extend((0..3).filter(|&d| spectral(d)));
    axes
}

impl ChainPlan {
    fn new(
        domain: &Domain,
        p: usize,
        rank: usize,
        knobs: SwitchKnobs,
        tag: &mut u64,
    ) -> Result<ChainPlan> {
        let axes = stage_axes(domain);
        let first_spectral = axes
            .iter()
            .copied()
            .find(|&d| domain.bc(d).is_periodic() || domain.bc(d).is_fully_unbounded());
        let input = Topology::new(axes[0], domain.sample_counts(), p, 1)?;
        if rank >= p {
            return Err(Error::IndexOutOfRange { index: rank, extent: p });
        }

        let mut extents = domain.sample_counts();
        let mut prev = input.clone();
        let mut stages = Vec::with_capacity(3);
        let mut norm = 1.0;
        let mut capacity = input.local_len(rank);
        for &a in &axes {
            let bc = domain.bc(a);
            let role = if bc.is_semi_unbounded() {
                Role::SemiUnbounded
            } else if Some(a) == first_spectral {
                if bc.is_fully_unbounded() { Role::DoubledUnbounded } else { Role::FirstSpectral }
            } else if bc.is_periodic() || bc.is_fully_unbounded() {
                Role::SubsequentSpectral
            } else {
                Role::FirstSpectral
            };
            let plan = plan_transform(bc, domain.layout(), role, domain.cells(a), domain.spacing(a))?;

            let mut g_in = extents;
            g_in[a] = plan.n_in();
            let topo_in = Topology::new(a, g_in, p, plan.nf_in())?;
            extents[a] = plan.n_out();
            let topo_out = Topology::new(a, extents, p, plan.nf_out())?;

            // A left-open semi-unbounded direction keeps its user samples in
            // the upper half of the extended line; everything else starts
            // at zero and the switch zero-fills the extension.
            let mut dst_base = [0usize; 3];
            if bc.is_semi_unbounded() && bc.left() == Bc::Unbounded {
                dst_base[a] = domain.cells(a);
            }
            let identity = prev == topo_in && dst_base == [0; 3];
            let (fwd, bwd) = if identity {
                (None, None)
            } else {
                let f = SwitchPlan::new(prev.clone(), topo_in.clone(), [0; 3], dst_base, knobs, next_tag(tag))?;
                let b = SwitchPlan::new(topo_in.clone(), prev.clone(), dst_base, [0; 3], knobs, next_tag(tag))?;
                (Some(f), Some(b))
            };

            let sh = topo_in.local_shape(rank);
            let ord = topo_in.axis_order();
            debug_assert_eq!(sh[ord[0]], plan.n_in());
            let lines = sh[ord[1]] * sh[ord[2]];
            capacity = capacity.max(topo_in.local_len(rank)).max(topo_out.local_len(rank));
            norm *= plan.normalization();
            prev = topo_out.clone();
            stages.push(Stage { axis: a, plan, topo_out, fwd, bwd, lines });
        }
        Ok(ChainPlan { rank, input, stages, norm, capacity })
    }

    fn dir_plan(&self, dir: usize) -> &TransformPlan {
        &self.stages.iter().find(|s| s.axis == dir).expect("three stages cover all dirs").plan
    }

    fn spectral_topo(&self) -> &Topology {
        &self.stages.last().expect("chain has stages").topo_out
    }

    fn forward(
        &self,
        field: &mut FieldBuffer,
        opts: &SolverOptions,
        t: &mut dyn Transport,
        log: Option<&EventLog>,
        prefix: &str,
        out: &mut Vec<StageProfile>,
    ) -> Result<()> {
        for st in &self.stages {
            let mut sp = StageProfile::new(format!("{prefix}fwd-dir{}", st.axis));
            if let Some(sw) = &st.fwd {
                let stats = execute_switch(opts.strategy, sw, field, t, log)?;
                sp.comm_s = stats.wall_s;
                sp.overlap_s = stats.overlap_s;
                sp.bytes = stats.bytes_sent as u64;
            }
            let t0 = Instant::now();
            transform_lines(&st.plan, st.lines, true, field, opts.exec)?;
            sp.compute_s = t0.elapsed().as_secs_f64();
            out.push(sp);
        }
        Ok(())
    }

    /// Inverse of `forward`, ending with the single normalization pass.
    fn backward(
        &self,
        field: &mut FieldBuffer,
        opts: &SolverOptions,
        t: &mut dyn Transport,
        log: Option<&EventLog>,
        prefix: &str,
        out: &mut Vec<StageProfile>,
    ) -> Result<()> {
        for st in self.stages.iter().rev() {
            let mut sp = StageProfile::new(format!("{prefix}bwd-dir{}", st.axis));
            let t0 = Instant::now();
            transform_lines(&st.plan, st.lines, false, field, opts.exec)?;
            sp.compute_s = t0.elapsed().as_secs_f64();
            if let Some(sw) = &st.bwd {
                let stats = execute_switch(opts.strategy, sw, field, t, log)?;
                sp.comm_s = stats.wall_s;
                sp.overlap_s = stats.overlap_s;
                sp.bytes = stats.bytes_sent as u64;
            }
            out.push(sp);
        }
        let t0 = Instant::now();
        let scale = 1.0 / self.norm;
        let n = self.input.local_len(self.rank);
        for v in &mut field.active_mut()[..n] {
            *v *= scale;
        }
        if let Some(sp) = out.last_mut() {
            sp.compute_s += t0.elapsed().as_secs_f64();
        }
        Ok(())
    }
}

fn next_tag(tag: &mut u64) -> u64 {
    let t = *tag;
    *tag += 1;
    t
}

/// Run the stage transform over every local line, reading the active bank
/// and writing the spare, then swap.
fn transform_lines(
    plan: &TransformPlan,
    lines: usize,
    forward: bool,
    field: &mut FieldBuffer,
    exec: ExecMode,
) -> Result<()> {
    let w_in = plan.n_in() * plan.nf_in();
    let w_out = plan.n_out() * plan.nf_out();
    let (rw, ww) = if forward { (w_in, w_out) } else { (w_out, w_in) };
    let (active, spare) = field.banks_mut();
    let src = &mut active[..lines * rw];
    let dst = &mut spare[..lines * ww];
    match exec {
        ExecMode::Sequential => lines_seq(plan, forward, src, dst, rw, ww)?,
        ExecMode::Parallel => lines_par(plan, forward, src, dst, rw, ww)?,
    }
    field.swap_banks();
    Ok(())
}

fn lines_seq(
    plan: &TransformPlan,
    forward: bool,
    src: &mut [f64],
    dst: &mut [f64],
    rw: usize,
    ww: usize,
) -> Result<()> {
    let mut scratch = plan.make_scratch();
    for (a, b) in src.chunks_exact_mut(rw).zip(dst.chunks_exact_mut(ww)) {
        if forward {
            plan.execute_forward(a, b, &mut scratch)?;
        } else {
            plan.execute_backward(a, b, &mut scratch)?;
        }
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn lines_par(
    plan: &TransformPlan,
    forward: bool,
    src: &mut [f64],
    dst: &mut [f64],
    rw: usize,
    ww: usize,
) -> Result<()> {
    use rayon::prelude::*;
    src.par_chunks_exact_mut(rw)
        .zip(dst.par_chunks_exact_mut(ww))
        .try_for_each_init(
            || plan.make_scratch(),
            |scratch, (a, b)| {
                if forward {
                    plan.execute_forward(a, b, scratch)
                } else {
                    plan.execute_backward(a, b, scratch)
                }
            },
        )
}

#[cfg(not(feature = "parallel"))]
fn lines_par(
    plan: &TransformPlan,
    forward: bool,
    src: &mut [f64],
    dst: &mut [f64],
    rw: usize,
    ww: usize,
) -> Result<()> {
    lines_seq(plan, forward, src, dst, rw, ww)
}

/// Per-rank plan for `lap u = f` on one scalar field.
///
/// Construction fixes the domain, kernel, rank count and rank; the plan can
/// then run any number of solves. The field passed to [`solve`] holds the
/// right-hand side on entry and the solution on return, both laid out as
/// [`input_topology`] describes.
///
/// [`solve`]: SolvePlan::solve
/// [`input_topology`]: SolvePlan::input_topology
pub struct SolvePlan {
    chain: ChainPlan,
    green: GreenSpectrum,
    options: SolverOptions,
}

impl SolvePlan {
    pub fn new(
        domain: &Domain,
        kernel: KernelId,
        options: SolverOptions,
        p: usize,
        rank: usize,
    ) -> Result<Self> {
        let mut tag = 0u64;
        let chain = ChainPlan::new(domain, p, rank, options.knobs, &mut tag)?;
        let plans = [chain.dir_plan(0), chain.dir_plan(1), chain.dir_plan(2)];
        let green = build_green(kernel, domain, plans, chain.spectral_topo(), rank)?;
        Ok(Self { chain, green, options })
    }

    /// Pencil the caller fills with samples and reads the solution from.
    pub fn input_topology(&self) -> &Topology {
        &self.chain.input
    }

    /// Pencil the multiplied spectrum lives on.
    pub fn spectral_topology(&self) -> &Topology {
        self.chain.spectral_topo()
    }

    pub fn green(&self) -> &GreenSpectrum {
        &self.green
    }

    /// Transform plan of one direction, independent of stage order.
    pub fn dir_plan(&self, dir: usize) -> &TransformPlan {
        self.chain.dir_plan(dir)
    }

    /// Stage order actually used by the chain.
    pub fn stage_axes(&self) -> Vec<usize> {
        self.chain.stages.iter().map(|s| s.axis).collect()
    }

    /// A buffer large enough for every pencil of the solve.
    pub fn make_field(&self) -> FieldBuffer {
        FieldBuffer::new(self.chain.capacity)
    }

    fn check_transport(&self, t: &dyn Transport) -> Result<()> {
        if t.rank() != self.chain.rank || t.size() != self.chain.input.nranks() {
            return Err(Error::TopologyMismatch(format!(
                "plan built for rank {} of {}, transport is rank {} of {}",
                self.chain.rank,
                self.chain.input.nranks(),
                t.rank(),
                t.size()
            )));
        }
        Ok(())
    }

    /// Forward transforms only; leaves the unnormalized spectrum of the
    /// active bank on the spectral pencil.
    pub fn forward(
        &self,
        field: &mut FieldBuffer,
        t: &mut dyn Transport,
        log: Option<&EventLog>,
    ) -> Result<Vec<StageProfile>> {
        self.check_transport(t)?;
        let mut out = Vec::new();
        self.chain.forward(field, &self.options, t, log, "", &mut out)?;
        Ok(out)
    }

    /// Inverse of [`forward`], including normalization.
    ///
    /// [`forward`]: SolvePlan::forward
    pub fn backward(
        &self,
        field: &mut FieldBuffer,
        t: &mut dyn Transport,
        log: Option<&EventLog>,
    ) -> Result<Vec<StageProfile>> {
        self.check_transport(t)?;
        let mut out = Vec::new();
        self.chain.backward(field, &self.options, t, log, "", &mut out)?;
        Ok(out)
    }

    /// Solve `lap u = f` in place.
    pub fn solve(
        &self,
        field: &mut FieldBuffer,
        t: &mut dyn Transport,
        log: Option<&EventLog>,
    ) -> Result<SolveProfile> {
        self.check_transport(t)?;
        let t0 = Instant::now();
        let mut stages = Vec::new();
        self.chain.forward(field, &self.options, t, log, "", &mut stages)?;
        let tm = Instant::now();
        multiply_spectrum(field, &self.green)?;
        let mut sp = StageProfile::new("spectrum".into());
        sp.compute_s = tm.elapsed().as_secs_f64();
        stages.push(sp);
        self.chain.backward(field, &self.options, t, log, "", &mut stages)?;
        Ok(SolveProfile { wall_s: t0.elapsed().as_secs_f64(), stages })
    }
}

/// Flip the reflection parities of a pair; periodic and unbounded sides are
/// unaffected. Differentiating along a direction does exactly this.
fn flip_pair(p: BcPair) -> Result<BcPair> {
    let f = |b: Bc| match b {
        Bc::Even => Bc::Odd,
        Bc::Odd => Bc::Even,
        other => other,
    };
    BcPair::new(f(p.left()), f(p.right()))
}

/// Boundary pairs of `curl f` from the pairs of `f`.
///
/// Each output component has two source terms; they must agree on every
/// direction's parity or the input set is not the restriction of a single
/// vector field with reflection symmetries.
fn derive_curl_bcs(bcs: &[[BcPair; 3]; 3]) -> Result<[[BcPair; 3]; 3]> {
    let mut out = *bcs;
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        for d in 0..3 {
            let via_jk = if d == j { flip_pair(bcs[k][d])? } else { bcs[k][d] };
            let via_kj = if d == k { flip_pair(bcs[j][d])? } else { bcs[j][d] };
            if via_jk != via_kj {
                return Err(Error::Unsupported(format!(
                    "source parities are not curl-consistent in direction {d}"
                )));
            }
            out[i][d] = via_jk;
        }
    }
    Ok(out)
}

/// Signed derivative multiplier per local slot of one direction.
///
/// Unpaired Nyquist modes of spectral directions get zero: their sampled
/// derivative vanishes at the grid points, and a nonzero imaginary
/// multiplier would break the conjugate symmetry of the real field.
fn nu_table(
    plan: &TransformPlan,
    scheme: DerivativeScheme,
    origin: usize,
    count: usize,
    h: f64,
) -> Vec<f64> {
    (0..count)
        .map(|c| {
            let m = plan.mode(origin + c);
            let mut nu = scheme.symbol(m.omega, h);
            if plan.basis() == Basis::Complex && m.k.unsigned_abs() as usize * 2 == plan.transform_cells() {
                nu = 0.0;
            }
            nu
        })
        .collect()
}

/// Slots of a sine direction that carry no degrees of freedom (frequencies
/// 0 and Nyquist of full-mode transforms). Assembled values landing there
/// must be discarded before the backward pass.
fn dead_table(plan: &TransformPlan, origin: usize, count: usize) -> Vec<bool> {
    let nt = plan.transform_cells() as i64;
    (0..count)
        .map(|c| {
            let m = plan.mode(origin + c);
            plan.basis() == Basis::Sin && !m.half_mode && (m.k == 0 || m.k == nt)
        })
        .collect()
}

/// Apply a derivative along one direction to a stored spectral value.
/// Sine modes become cosine modes and vice versa; the slot is unchanged.
fn apply_derivative(data: &[f64], pt: usize, nf: usize, nu: f64, basis: Basis) -> (f64, f64) {
    let re = data[pt * nf];
    let im = if nf == 2 { data[pt * nf + 1] } else { 0.0 };
    match basis {
        Basis::Complex => (-nu * im, nu * re),
        Basis::Sin => (nu * re, nu * im),
        Basis::Cos => (-nu * re, -nu * im),
    }
}

/// Per-rank plan for `lap u = curl f` over a three-component field.
///
/// The forward chains carry the source components, the curl is assembled
/// and multiplied by the Green's function at the spectral pencil, and the
/// backward chains carry the flipped parities of the output components.
/// Velocity from vorticity is the `f = -omega` special case.
pub struct CurlPlan {
    f_chains: [ChainPlan; 3],
    u_chains: [ChainPlan; 3],
    green: GreenSpectrum,
    options: SolverOptions,
    spacing: [f64; 3],
    capacity: usize,
}

impl CurlPlan {
    /// `base` supplies the cells, lengths and layout; the boundary pairs on
    /// it are ignored in favor of `bcs[component][dir]` for the source
    /// components.
    pub fn new(
        base: &Domain,
        bcs: [[BcPair; 3]; 3],
        kernel: KernelId,
        options: SolverOptions,
        p: usize,
        rank: usize,
    ) -> Result<Self> {
        for comp in &bcs {
            for d in 0..3 {
                let bc = comp[d];
                // Cell-centered full reflections change transform length
                // across the derivative (DCT-II and DST-II modes do not
                // share slots), which the assembly cannot express.
                if base.layout() == Layout::CellCentered
                    && bc.is_symmetric()
                    && bc.left() == bc.right()
                {
                    return Err(Error::Unsupported(
                        "cell-centered rotational solve with equal-parity reflecting pairs".into(),
                    ));
                }
                if comp[d].is_periodic() != bcs[0][d].is_periodic()
                    || comp[d].is_fully_unbounded() != bcs[0][d].is_fully_unbounded()
                    || comp[d].is_semi_unbounded() != bcs[0][d].is_semi_unbounded()
                {
                    return Err(Error::Unsupported(format!(
                        "components disagree on the boundary class of direction {d}"
                    )));
                }
            }
        }
        let u_bcs = derive_curl_bcs(&bcs)?;

        let cells = [base.cells(0), base.cells(1), base.cells(2)];
        let length = [base.length(0), base.length(1), base.length(2)];
        let chain_for = |pairs: [BcPair; 3], tag: &mut u64| -> Result<ChainPlan> {
            let d = Domain::new(cells, length, base.layout(), pairs)?;
            ChainPlan::new(&d, p, rank, options.knobs, tag)
        };
        let mut tag = 0u64;
        let f_chains = [
            chain_for(bcs[0], &mut tag)?,
            chain_for(bcs[1], &mut tag)?,
            chain_for(bcs[2], &mut tag)?,
        ];
        let u_chains = [
            chain_for(u_bcs[0], &mut tag)?,
            chain_for(u_bcs[1], &mut tag)?,
            chain_for(u_bcs[2], &mut tag)?,
        ];
        for c in 1..3 {
            if f_chains[c].spectral_topo() != f_chains[0].spectral_topo() {
                return Err(Error::TopologyMismatch(
                    "component spectra land on different pencils".into(),
                ));
            }
        }
        for c in 0..3 {
            if u_chains[c].spectral_topo() != f_chains[0].spectral_topo() {
                return Err(Error::TopologyMismatch(
                    "output spectra land on different pencils".into(),
                ));
            }
        }

        let green_domain = Domain::new(cells, length, base.layout(), bcs[0])?;
        let plans = [
            f_chains[0].dir_plan(0),
            f_chains[0].dir_plan(1),
            f_chains[0].dir_plan(2),
        ];
        let green = build_green(kernel, &green_domain, plans, f_chains[0].spectral_topo(), rank)?;
        let capacity = f_chains
            .iter()
            .chain(u_chains.iter())
            .map(|c| c.capacity)
            .max()
            .expect("six chains");
        let spacing = [base.spacing(0), base.spacing(1), base.spacing(2)];
        Ok(Self { f_chains, u_chains, green, options, spacing, capacity })
    }

    pub fn input_topology(&self) -> &Topology {
        &self.f_chains[0].input
    }

    pub fn spectral_topology(&self) -> &Topology {
        self.f_chains[0].spectral_topo()
    }

    pub fn green(&self) -> &GreenSpectrum {
        &self.green
    }

    pub fn make_field(&self) -> FieldBuffer {
        FieldBuffer::new(self.capacity)
    }

    /// Solve `lap u = curl f` in place: `fields` holds the three source
    /// components on entry and the three solution components on return.
    pub fn solve(
        &self,
        fields: &mut [FieldBuffer; 3],
        t: &mut dyn Transport,
        log: Option<&EventLog>,
    ) -> Result<SolveProfile> {
        if t.rank() != self.f_chains[0].rank || t.size() != self.f_chains[0].input.nranks() {
            return Err(Error::TopologyMismatch(format!(
                "plan built for rank {} of {}, transport is rank {} of {}",
                self.f_chains[0].rank,
                self.f_chains[0].input.nranks(),
                t.rank(),
                t.size()
            )));
        }
        let t0 = Instant::now();
        let mut stages = Vec::new();
        let comp = ["x", "y", "z"];
        for c in 0..3 {
            let prefix = format!("f{}-", comp[c]);
            self.f_chains[c].forward(&mut fields[c], &self.options, t, log, &prefix, &mut stages)?;
        }
        let tm = Instant::now();
        self.assemble(fields, t.rank());
        let mut sp = StageProfile::new("spectrum".into());
        sp.compute_s = tm.elapsed().as_secs_f64();
        stages.push(sp);
        for c in 0..3 {
            let prefix = format!("u{}-", comp[c]);
            self.u_chains[c].backward(&mut fields[c], &self.options, t, log, &prefix, &mut stages)?;
        }
        Ok(SolveProfile { wall_s: t0.elapsed().as_secs_f64(), stages })
    }

    /// Pointwise curl of the transformed sources times the Green's
    /// function, written into the spare banks in output-component bases.
    fn assemble(&self, fields: &mut [FieldBuffer; 3], rank: usize) {
        let topo = self.spectral_topology();
        let nf = topo.nf();
        let or = topo.local_origin(rank);
        let sh = topo.local_shape(rank);
        let ord = topo.axis_order();

        let mut nu = [Vec::new(), Vec::new(), Vec::new()];
        let mut dead: [[Vec<bool>; 3]; 3] = Default::default();
        let mut basis = [[Basis::Cos; 3]; 3];
        for d in 0..3 {
            nu[d] = nu_table(
                self.f_chains[0].dir_plan(d),
                self.options.derivative,
                or[d],
                sh[d],
                self.spacing[d],
            );
            for i in 0..3 {
                dead[i][d] = dead_table(self.u_chains[i].dir_plan(d), or[d], sh[d]);
                basis[i][d] = self.f_chains[i].dir_plan(d).basis();
            }
        }

        let g = self.green.values();
        let [fa, fb, fc] = fields;
        let (a0, s0) = fa.banks_mut();
        let (a1, s1) = fb.banks_mut();
        let (a2, s2) = fc.banks_mut();
        let act: [&[f64]; 3] = [a0, a1, a2];
        let out = [s0, s1, s2];

        let mut pt = 0usize;
        let mut c = [0usize; 3];
        for i2 in 0..sh[ord[2]] {
            c[ord[2]] = i2;
            for i1 in 0..sh[ord[1]] {
                c[ord[1]] = i1;
                for i0 in 0..sh[ord[0]] {
                    c[ord[0]] = i0;
                    let gv = g[pt];
                    for i in 0..3 {
                        let j = (i + 1) % 3;
                        let k = (i + 2) % 3;
                        let (pr, pi) =
                            apply_derivative(act[k], pt, nf, nu[j][c[j]], basis[k][j]);
                        let (qr, qi) =
                            apply_derivative(act[j], pt, nf, nu[k][c[k]], basis[j][k]);
                        let masked =
                            dead[i][0][c[0]] || dead[i][1][c[1]] || dead[i][2][c[2]];
                        let (re, im) = if masked {
                            (0.0, 0.0)
                        } else {
                            (gv * (pr - qr), gv * (pi - qi))
                        };
                        out[i][pt * nf] = re;
                        if nf == 2 {
                            out[i][pt * nf + 1] = im;
                        }
                    }
                    pt += 1;
                }
            }
        }
        for f in fields.iter_mut() {
            f.swap_banks();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::transport::run_ranks;
    use crate::fft1d::TransformKind;
    use crate::greens::KernelTag;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn pair(l: Bc, r: Bc) -> BcPair {
        BcPair::new(l, r).unwrap()
    }

    fn bc(s: &str) -> BcPair {
        let b = |ch: u8| match ch {
            b'P' => Bc::Periodic,
            b'U' => Bc::Unbounded,
            b'E' => Bc::Even,
            b'O' => Bc::Odd,
            _ => unreachable!(),
        };
        pair(b(s.as_bytes()[0]), b(s.as_bytes()[1]))
    }

    fn domain(cells: [usize; 3], length: [f64; 3], layout: Layout, bcs: [&str; 3]) -> Domain {
        Domain::new(cells, length, layout, [bc(bcs[0]), bc(bcs[1]), bc(bcs[2])]).unwrap()
    }

    /// Fill the local pencil from a function of physical coordinates.
    fn fill(
        domain: &Domain,
        topo: &Topology,
        rank: usize,
        out: &mut [f64],
        f: &dyn Fn(f64, f64, f64) -> f64,
    ) {
        let or = topo.local_origin(rank);
        let sh = topo.local_shape(rank);
        let ord = topo.axis_order();
        let off = match domain.layout() {
            Layout::NodeCentered => 0.0,
            Layout::CellCentered => 0.5,
        };
        let nf = topo.nf();
        let mut idx = 0;
        for i2 in 0..sh[ord[2]] {
            for i1 in 0..sh[ord[1]] {
                for i0 in 0..sh[ord[0]] {
                    let mut g = [0usize; 3];
                    g[ord[0]] = or[ord[0]] + i0;
                    g[ord[1]] = or[ord[1]] + i1;
                    g[ord[2]] = or[ord[2]] + i2;
                    let x = |d: usize| (g[d] as f64 + off) * domain.spacing(d);
                    out[idx] = f(x(0), x(1), x(2));
                    for e in 1..nf {
                        out[idx + e] = 0.0;
                    }
                    idx += nf;
                }
            }
        }
    }

    /// Scatter per-rank pencils into one dense global array, component 0.
    fn gather(topo: &Topology, parts: &[Vec<f64>]) -> Vec<f64> {
        let n = topo.global();
        let nf = topo.nf();
        let mut out = vec![f64::NAN; n[0] * n[1] * n[2]];
        for (rank, part) in parts.iter().enumerate() {
            let or = topo.local_origin(rank);
            let sh = topo.local_shape(rank);
            let ord = topo.axis_order();
            let mut idx = 0;
            for i2 in 0..sh[ord[2]] {
                for i1 in 0..sh[ord[1]] {
                    for i0 in 0..sh[ord[0]] {
                        let mut g = [0usize; 3];
                        g[ord[0]] = or[ord[0]] + i0;
                        g[ord[1]] = or[ord[1]] + i1;
                        g[ord[2]] = or[ord[2]] + i2;
                        out[g[0] + n[0] * (g[1] + n[1] * g[2])] = part[idx];
                        idx += nf;
                    }
                }
            }
        }
        assert!(out.iter().all(|v| v.is_finite()));
        out
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    #[test]
    fn stage_order_groups_real_transforms_first() {
        let d = domain([8, 8, 8], [1.0; 3], Layout::NodeCentered, ["EE", "OO", "PP"]);
        let plan = SolvePlan::new(&d, KernelId::new(KernelTag::Chat2), SolverOptions::default(), 1, 0).unwrap();
        assert_eq!(plan.stage_axes(), vec![0, 1, 2]);
        assert_eq!(plan.dir_plan(0).kind(), TransformKind::Dct1);
        assert_eq!(plan.dir_plan(1).kind(), TransformKind::Dst1);
        assert_eq!(plan.dir_plan(2).kind(), TransformKind::R2cDft);

        let d = domain([8, 8, 8], [1.0; 3], Layout::CellCentered, ["PP", "EE", "UO"]);
        let plan = SolvePlan::new(&d, KernelId::new(KernelTag::Chat2), SolverOptions::default(), 1, 0).unwrap();
        assert_eq!(plan.stage_axes(), vec![1, 2, 0]);
        assert_eq!(plan.dir_plan(1).kind(), TransformKind::Dct2);
        assert_eq!(plan.dir_plan(2).kind(), TransformKind::Dst2);
        assert_eq!(plan.dir_plan(0).kind(), TransformKind::R2cDft);

        let d = domain([8, 8, 8], [1.0; 3], Layout::CellCentered, ["UU", "UU", "UU"]);
        let plan = SolvePlan::new(&d, KernelId::new(KernelTag::Hej2), SolverOptions::default(), 1, 0).unwrap();
        assert_eq!(plan.stage_axes(), vec![0, 1, 2]);
        assert_eq!(plan.dir_plan(0).kind(), TransformKind::R2cDft);
        assert_eq!(plan.dir_plan(0).n_in(), 16);
        assert_eq!(plan.dir_plan(0).n_out(), 9);
        assert_eq!(plan.dir_plan(1).kind(), TransformKind::C2cDft);
        assert_eq!(plan.dir_plan(2).n_out(), 16);
    }

    #[test]
    fn derivative_symbols_match_their_stencils() {
        let h = 0.35;
        let x = 0.3;
        for omega in [0.7, 2.1, 4.4] {
            let f = |y: f64| (omega * y).sin();
            let exact = omega * (omega * x).cos();
            let fd2 = (f(x + h) - f(x - h)) / (2.0 * h);
            let fd4 = (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h))
                / (12.0 * h);
            let fd6 = (f(x + 3.0 * h) - 9.0 * f(x + 2.0 * h) + 45.0 * f(x + h)
                - 45.0 * f(x - h)
                + 9.0 * f(x - 2.0 * h)
                - f(x - 3.0 * h))
                / (60.0 * h);
            let c = (omega * x).cos();
            assert!((DerivativeScheme::Spectral.symbol(omega, h) * c - exact).abs() < 1e-12);
            assert!((DerivativeScheme::Fd2.symbol(omega, h) * c - fd2).abs() < 1e-12);
            assert!((DerivativeScheme::Fd4.symbol(omega, h) * c - fd4).abs() < 1e-12);
            assert!((DerivativeScheme::Fd6.symbol(omega, h) * c - fd6).abs() < 1e-12);
        }
        // every stencil annihilates the Nyquist sawtooth
        for s in [DerivativeScheme::Fd2, DerivativeScheme::Fd4, DerivativeScheme::Fd6] {
            assert!(s.symbol(PI / h, h).abs() < 1e-14 / h);
        }
    }

    /// A sine half-mode differentiates onto the cosine half-mode of the same
    /// slot with multiplier (k + 1/2) pi / L.
    #[test]
    fn half_mode_derivative_swaps_bases() {
        let n = 12;
        let l = 1.3;
        let h = l / n as f64;
        let fwd = plan_transform(bc("OE"), Layout::NodeCentered, Role::FirstSpectral, n, h).unwrap();
        let bwd = plan_transform(bc("EO"), Layout::NodeCentered, Role::FirstSpectral, n, h).unwrap();
        assert_eq!(fwd.kind(), TransformKind::Dst3);
        assert_eq!(bwd.kind(), TransformKind::Dct3);
        let k = 3usize;
        let omega = (k as f64 + 0.5) * PI / l;
        let mut samples: Vec<f64> =
            (0..fwd.n_in()).map(|j| (omega * j as f64 * h).sin()).collect();
        let mut modes = vec![0.0; fwd.n_out()];
        let mut scratch = fwd.make_scratch();
        fwd.execute_forward(&mut samples, &mut modes, &mut scratch).unwrap();
        for m in &mut modes {
            *m *= omega;
        }
        let mut deriv = vec![0.0; bwd.n_in()];
        let mut scratch = bwd.make_scratch();
        bwd.execute_backward(&modes, &mut deriv, &mut scratch).unwrap();
        let norm = fwd.normalization();
        for (j, v) in deriv.iter().enumerate() {
            let want = omega * (omega * j as f64 * h).cos();
            assert!(
                (v / norm - want).abs() < 1e-10,
                "slot {j}: {} vs {want}",
                v / norm
            );
        }
    }

    #[test]
    fn forward_backward_is_a_projection() {
        let cases: [([usize; 3], Layout, [&str; 3]); 4] = [
            ([8, 9, 8], Layout::NodeCentered, ["EE", "OO", "PP"]),
            ([8, 8, 9], Layout::CellCentered, ["UU", "EO", "PP"]),
            ([9, 8, 8], Layout::NodeCentered, ["UO", "EE", "UU"]),
            ([8, 8, 8], Layout::CellCentered, ["OE", "PP", "OU"]),
        ];
        for (cells, layout, bcs) in cases {
            let d = domain(cells, [1.1, 0.9, 1.4], layout, bcs);
            for p in [1usize, 2] {
                let outs = run_ranks(p, |rank, ep| {
                    let plan = SolvePlan::new(
                        &d,
                        KernelId::new(KernelTag::Chat2),
                        SolverOptions::default(),
                        p,
                        rank,
                    )
                    .unwrap();
                    let n = plan.input_topology().local_len(rank);
                    let mut rng = ChaCha8Rng::seed_from_u64(7 + rank as u64);
                    let mut field = plan.make_field();
                    for v in &mut field.active_mut()[..n] {
                        *v = rng.gen::<f64>() - 0.5;
                    }
                    plan.forward(&mut field, ep, None).unwrap();
                    plan.backward(&mut field, ep, None).unwrap();
                    let first = field.active()[..n].to_vec();
                    plan.forward(&mut field, ep, None).unwrap();
                    plan.backward(&mut field, ep, None).unwrap();
                    let second = field.active()[..n].to_vec();
                    (first, second)
                });
                for (first, second) in outs {
                    let scale = max_abs(&first).max(1.0);
                    for (a, b) in first.iter().zip(&second) {
                        assert!(
                            (a - b).abs() <= 1e-12 * scale,
                            "{bcs:?} {layout:?} p={p}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn periodic_manufactured_solution_is_exact() {
        let l = [1.3, 0.9, 1.7];
        let d = domain([16, 16, 16], l, Layout::CellCentered, ["PP", "PP", "PP"]);
        let w = [2.0 * PI / l[0], 4.0 * PI / l[1], 6.0 * PI / l[2]];
        let phi = move |x: f64, y: f64, z: f64| {
            (w[0] * x).sin() * (w[1] * y).cos() * (w[2] * z).sin()
        };
        let k2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        for p in [1usize, 2] {
            let errs = run_ranks(p, |rank, ep| {
                let plan = SolvePlan::new(
                    &d,
                    KernelId::new(KernelTag::Chat2),
                    SolverOptions::default(),
                    p,
                    rank,
                )
                .unwrap();
                let topo = plan.input_topology().clone();
                let n = topo.local_len(rank);
                let mut field = plan.make_field();
                fill(&d, &topo, rank, &mut field.active_mut()[..n], &|x, y, z| {
                    -k2 * phi(x, y, z)
                });
                plan.solve(&mut field, ep, None).unwrap();
                let mut want = vec![0.0; n];
                fill(&d, &topo, rank, &mut want, &phi);
                field.active()[..n]
                    .iter()
                    .zip(&want)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            });
            for e in errs {
                assert!(e < 1e-12, "p={p}: error {e}");
            }
        }
    }

    #[test]
    fn reflecting_manufactured_solution_is_exact() {
        let l = [1.0, 1.5, 0.8];
        let d = domain([8, 8, 8], l, Layout::NodeCentered, ["EE", "OO", "EE"]);
        let w = [PI / l[0], 2.0 * PI / l[1], PI / l[2]];
        let phi = move |x: f64, y: f64, z: f64| {
            (w[0] * x).cos() * (w[1] * y).sin() * (w[2] * z).cos()
        };
        let k2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        let errs = run_ranks(2, |rank, ep| {
            let plan = SolvePlan::new(
                &d,
                KernelId::new(KernelTag::Chat2),
                SolverOptions::default(),
                2,
                rank,
            )
            .unwrap();
            let topo = plan.input_topology().clone();
            let n = topo.local_len(rank);
            let mut field = plan.make_field();
            fill(&d, &topo, rank, &mut field.active_mut()[..n], &|x, y, z| {
                -k2 * phi(x, y, z)
            });
            plan.solve(&mut field, ep, None).unwrap();
            let mut want = vec![0.0; n];
            fill(&d, &topo, rank, &mut want, &phi);
            field.active()[..n]
                .iter()
                .zip(&want)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        });
        for e in errs {
            assert!(e < 1e-12, "error {e}");
        }
    }

    /// Multiplying the solution spectrum by -|omega|^2 recovers the source
    /// spectrum, mode by mode.
    #[test]
    fn spectrum_satisfies_the_symbol_equation() {
        let d = domain([8, 8, 8], [1.0, 1.3, 0.7], Layout::CellCentered, ["PP", "PP", "PP"]);
        run_ranks(1, |rank, ep| {
            let plan = SolvePlan::new(
                &d,
                KernelId::new(KernelTag::Chat2),
                SolverOptions::default(),
                1,
                rank,
            )
            .unwrap();
            let topo = plan.input_topology().clone();
            let n = topo.local_len(rank);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut field = plan.make_field();
            for v in &mut field.active_mut()[..n] {
                *v = rng.gen::<f64>() - 0.5;
            }
            plan.forward(&mut field, ep, None).unwrap();
            let st = plan.spectral_topology().clone();
            let f_hat = field.active()[..st.local_len(rank)].to_vec();
            multiply_spectrum(&mut field, plan.green()).unwrap();
            let u_hat = &field.active()[..st.local_len(rank)];

            let sh = st.local_shape(rank);
            let ord = st.axis_order();
            let nf = st.nf();
            let scale = max_abs(&f_hat);
            let mut pt = 0usize;
            let mut c = [0usize; 3];
            for i2 in 0..sh[ord[2]] {
                c[ord[2]] = i2;
                for i1 in 0..sh[ord[1]] {
                    c[ord[1]] = i1;
                    for i0 in 0..sh[ord[0]] {
                        c[ord[0]] = i0;
                        let mut w2 = 0.0;
                        for dir in 0..3 {
                            let m = plan.dir_plan(dir).mode(c[dir]);
                            w2 += m.omega * m.omega;
                        }
                        for e in 0..nf {
                            let want = f_hat[pt * nf + e];
                            let got = -w2 * u_hat[pt * nf + e];
                            if w2 > 0.0 {
                                assert!(
                                    (want - got).abs() <= 1e-12 * scale,
                                    "slot {c:?}: {got} vs {want}"
                                );
                            }
                        }
                        pt += 1;
                    }
                }
            }
            0
        });
    }

    #[test]
    fn switch_strategies_agree_bitwise() {
        let d = domain([8, 8, 8], [1.0, 1.0, 2.0], Layout::NodeCentered, ["UU", "EE", "PP"]);
        let p = 2;
        let mut per_strategy = Vec::new();
        for strategy in [Strategy::A2a, Strategy::Nb, Strategy::Isr] {
            let outs = run_ranks(p, |rank, ep| {
                let opts = SolverOptions { strategy, ..Default::default() };
                let plan =
                    SolvePlan::new(&d, KernelId::new(KernelTag::Chat2), opts, p, rank).unwrap();
                let topo = plan.input_topology().clone();
                let n = topo.local_len(rank);
                let mut field = plan.make_field();
                fill(&d, &topo, rank, &mut field.active_mut()[..n], &|x, y, z| {
                    (x - 0.43).powi(2) - (y * z).sin()
                });
                plan.solve(&mut field, ep, None).unwrap();
                field.active()[..n].to_vec()
            });
            per_strategy.push(outs);
        }
        for s in 1..per_strategy.len() {
            for (a, b) in per_strategy[0].iter().zip(&per_strategy[s]) {
                assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }

    #[test]
    fn solution_is_independent_of_rank_count() {
        let d = domain([12, 8, 9], [1.0, 0.8, 1.1], Layout::CellCentered, ["PP", "OO", "EU"]);
        let mut globals = Vec::new();
        for p in [1usize, 2, 4] {
            let outs = run_ranks(p, |rank, ep| {
                let plan = SolvePlan::new(
                    &d,
                    KernelId::new(KernelTag::Chat2),
                    SolverOptions::default(),
                    p,
                    rank,
                )
                .unwrap();
                let topo = plan.input_topology().clone();
                let n = topo.local_len(rank);
                let mut field = plan.make_field();
                fill(&d, &topo, rank, &mut field.active_mut()[..n], &|x, y, z| {
                    (2.0 * PI * x).cos() * y * (1.1 - z)
                });
                plan.solve(&mut field, ep, None).unwrap();
                field.active()[..n].to_vec()
            });
            let topo = Topology::new(stage_axes(&d)[0], d.sample_counts(), p, 1).unwrap();
            globals.push(gather(&topo, &outs));
        }
        let scale = max_abs(&globals[0]);
        for g in &globals[1..] {
            for (a, b) in globals[0].iter().zip(g) {
                assert!((a - b).abs() <= 1e-13 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn fully_periodic_solution_has_zero_mean() {
        let d = domain([8, 8, 8], [1.0; 3], Layout::CellCentered, ["PP", "PP", "PP"]);
        run_ranks(1, |rank, ep| {
            let plan = SolvePlan::new(
                &d,
                KernelId::new(KernelTag::Chat2),
                SolverOptions::default(),
                1,
                rank,
            )
            .unwrap();
            let n = plan.input_topology().local_len(rank);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut field = plan.make_field();
            for v in &mut field.active_mut()[..n] {
                *v = rng.gen::<f64>() + 0.3;
            }
            plan.solve(&mut field, ep, None).unwrap();
            let u = &field.active()[..n];
            let mean = u.iter().sum::<f64>() / n as f64;
            assert!(mean.abs() <= 1e-12 * max_abs(u));
            0
        });
    }

    #[test]
    fn curl_solve_recovers_a_single_periodic_mode() {
        let l = [2.0, 1.0, 1.0];
        let d = domain([8, 8, 8], l, Layout::CellCentered, ["PP", "PP", "PP"]);
        let bcs = [[bc("PP"); 3]; 3];
        let k = 2.0 * PI / l[0];
        for p in [1usize, 2] {
            let errs = run_ranks(p, |rank, ep| {
                let plan = CurlPlan::new(
                    &d,
                    bcs,
                    KernelId::new(KernelTag::Chat2),
                    SolverOptions::default(),
                    p,
                    rank,
                )
                .unwrap();
                let topo = plan.input_topology().clone();
                let n = topo.local_len(rank);
                let mut fields = [plan.make_field(), plan.make_field(), plan.make_field()];
                fill(&d, &topo, rank, &mut fields[2].active_mut()[..n], &|x, _, _| {
                    (k * x).sin()
                });
                plan.solve(&mut fields, ep, None).unwrap();
                let mut want = vec![0.0; n];
                fill(&d, &topo, rank, &mut want, &|x, _, _| (k * x).cos() / k);
                let mut err = 0.0f64;
                for (c, field) in fields.iter().enumerate() {
                    for (i, v) in field.active()[..n].iter().enumerate() {
                        let w = if c == 1 { want[i] } else { 0.0 };
                        err = err.max((v - w).abs());
                    }
                }
                err
            });
            for e in errs {
                assert!(e < 1e-12, "p={p}: {e}");
            }
        }
    }

    #[test]
    fn curl_solve_flips_reflection_parities() {
        let l = [1.0, 1.4, 1.0];
        let d = domain([8, 8, 8], l, Layout::NodeCentered, ["PP", "OO", "PP"]);
        let bcs = [
            [bc("PP"), bc("OO"), bc("PP")],
            [bc("PP"), bc("EE"), bc("PP")],
            [bc("PP"), bc("OO"), bc("PP")],
        ];
        let w = PI / l[1];
        let errs = run_ranks(2, |rank, ep| {
            let plan = CurlPlan::new(
                &d,
                bcs,
                KernelId::new(KernelTag::Chat2),
                SolverOptions::default(),
                2,
                rank,
            )
            .unwrap();
            let topo = plan.input_topology().clone();
            let n = topo.local_len(rank);
            let mut fields = [plan.make_field(), plan.make_field(), plan.make_field()];
            fill(&d, &topo, rank, &mut fields[2].active_mut()[..n], &|_, y, _| {
                (w * y).sin()
            });
            plan.solve(&mut fields, ep, None).unwrap();
            let mut want = vec![0.0; n];
            fill(&d, &topo, rank, &mut want, &|_, y, _| -(w * y).cos() / w);
            let mut err = 0.0f64;
            for (c, field) in fields.iter().enumerate() {
                for (i, v) in field.active()[..n].iter().enumerate() {
                    let expect = if c == 0 { want[i] } else { 0.0 };
                    err = err.max((v - expect).abs());
                }
            }
            err
        });
        for e in errs {
            assert!(e < 1e-12, "{e}");
        }
    }

    #[test]
    fn curl_plans_reject_bad_inputs() {
        // cell-centered equal-parity reflection
        let d = domain([8, 8, 8], [1.0; 3], Layout::CellCentered, ["PP", "EE", "PP"]);
        let got = CurlPlan::new(
            &d,
            [[bc("PP"), bc("EE"), bc("PP")]; 3],
            KernelId::new(KernelTag::Chat2),
            SolverOptions::default(),
            1,
            0,
        );
        assert!(matches!(got.err(), Some(Error::Unsupported(_))));

        // identical parities on all components cannot come from one curl
        let d = domain([8, 8, 8], [1.0; 3], Layout::NodeCentered, ["PP", "OO", "PP"]);
        let got = CurlPlan::new(
            &d,
            [[bc("PP"), bc("OO"), bc("PP")]; 3],
            KernelId::new(KernelTag::Chat2),
            SolverOptions::default(),
            1,
            0,
        );
        assert!(matches!(got.err(), Some(Error::Unsupported(_))));
    }

    #[test]
    fn exec_modes_agree() {
        let d = domain([9, 8, 8], [1.0, 1.2, 0.9], Layout::NodeCentered, ["UO", "PP", "EE"]);
        let mut results = Vec::new();
        for exec in [ExecMode::Sequential, ExecMode::Parallel] {
            let outs = run_ranks(2, |rank, ep| {
                let opts = SolverOptions { exec, ..Default::default() };
                let plan =
                    SolvePlan::new(&d, KernelId::new(KernelTag::Chat2), opts, 2, rank).unwrap();
                let topo = plan.input_topology().clone();
                let n = topo.local_len(rank);
                let mut field = plan.make_field();
                fill(&d, &topo, rank, &mut field.active_mut()[..n], &|x, y, z| {
                    (x * 3.1).sin() + y - z * z
                });
                plan.solve(&mut field, ep, None).unwrap();
                field.active()[..n].to_vec()
            });
            results.push(outs);
        }
        for (a, b) in results[0].iter().zip(&results[1]) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn profiles_cover_the_whole_chain() {
        let d = domain([8, 8, 8], [1.0; 3], Layout::CellCentered, ["UU", "PP", "EO"]);
        run_ranks(2, |rank, ep| {
            let plan = SolvePlan::new(
                &d,
                KernelId::new(KernelTag::Chat2),
                SolverOptions::default(),
                2,
                rank,
            )
            .unwrap();
            let topo = plan.input_topology().clone();
            let n = topo.local_len(rank);
            let mut field = plan.make_field();
            fill(&d, &topo, rank, &mut field.active_mut()[..n], &|x, y, z| x * y + z);
            let profile = plan.solve(&mut field, ep, None).unwrap();
            // three stages each way plus the multiply
            assert_eq!(profile.stages.len(), 7);
            let (compute, comm) = profile.bucket_totals();
            assert!(compute > 0.0);
            assert!(profile.wall_s >= compute + comm - 1e-9);
            0
        });
    }
}
