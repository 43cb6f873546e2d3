//! Reference problems with analytic solutions, plus the error, convergence
//! and scaling metrics used to judge solver output.
//!
//! Each case fixes a unit box, a boundary set and a smooth source whose
//! exact potential (or velocity) is known in closed form. The sources built
//! from compactly supported bumps vanish with all derivatives at the
//! support edge, so measured convergence orders reflect the kernel and not
//! the data.

use crate::error::Result;
use crate::exchange::transport::{allreduce_max, run_ranks};
use crate::greens::KernelId;
use crate::grid::{Bc, BcPair, Domain, Layout};
use crate::solver::{CurlPlan, SolvePlan, SolveProfile, SolverOptions};
use crate::specfn::e2;
use crate::decomp::Topology;
use std::f64::consts::PI;
use std::fmt;

/// Tag base for the error reductions after a solve, clear of switch tags.
const REDUCE_TAG: u64 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseKind {
    /// Separable trig potential on reflecting, half-mode and periodic
    /// directions; every kernel resolves it to roundoff except the
    /// regularized ones, which converge at their design order.
    SpectralMixed,
    /// Product of compact bumps with all three directions unbounded.
    FullyUnbounded,
    /// Bump sources against one even and one odd wall, third direction
    /// unbounded: exercises the mirrored extensions.
    SemiUnbounded,
    /// Velocity induced by a straight compact vortex tube through the
    /// rotational solve; the swirl profile is known exactly.
    BiotSavartTube,
}

impl CaseKind {
    pub const ALL: [CaseKind; 4] = [
        CaseKind::SpectralMixed,
        CaseKind::FullyUnbounded,
        CaseKind::SemiUnbounded,
        CaseKind::BiotSavartTube,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::SpectralMixed => "spectral-mixed",
            CaseKind::FullyUnbounded => "fully-unbounded",
            CaseKind::SemiUnbounded => "semi-unbounded",
            CaseKind::BiotSavartTube => "biot-savart-tube",
        }
    }

    pub fn is_vector(self) -> bool {
        self == CaseKind::BiotSavartTube
    }

    /// Unit box with this case's boundary set. For the tube case the pairs
    /// are those of the axial vorticity component; the transverse
    /// components carry flipped reflection parities.
    pub fn domain(self, cells: usize, layout: Layout) -> Result<Domain> {
        let pair = |l, r| BcPair::new(l, r);
        let bcs = match self {
            CaseKind::SpectralMixed => [
                pair(Bc::Even, Bc::Even)?,
                pair(Bc::Odd, Bc::Even)?,
                pair(Bc::Periodic, Bc::Periodic)?,
            ],
            CaseKind::FullyUnbounded => [pair(Bc::Unbounded, Bc::Unbounded)?; 3],
            CaseKind::SemiUnbounded => [
                pair(Bc::Unbounded, Bc::Even)?,
                pair(Bc::Unbounded, Bc::Unbounded)?,
                pair(Bc::Odd, Bc::Unbounded)?,
            ],
            CaseKind::BiotSavartTube => [
                pair(Bc::Unbounded, Bc::Unbounded)?,
                pair(Bc::Unbounded, Bc::Unbounded)?,
                pair(Bc::Even, Bc::Even)?,
            ],
        };
        Domain::new([cells; 3], [1.0; 3], layout, bcs)
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CaseKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        CaseKind::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown case {s:?}, expected one of: spectral-mixed, fully-unbounded, semi-unbounded, biot-savart-tube"))
    }
}

/// Compact bump, 1 at the center and identically 0 for |xi| >= 1, with all
/// derivatives vanishing at the edge.
fn bump(xi: f64) -> f64 {
    let s = 1.0 - xi * xi;
    if s <= 0.0 {
        0.0
    } else {
        (10.0 * (1.0 - 1.0 / s)).exp()
    }
}

/// Second derivative of [`bump`] with respect to `xi`.
fn bump_dd(xi: f64) -> f64 {
    let s = 1.0 - xi * xi;
    if s <= 0.0 {
        0.0
    } else {
        let x2 = xi * xi;
        bump(xi) * (-20.0 / (s * s) - 80.0 * x2 / (s * s * s) + 400.0 * x2 / (s * s * s * s))
    }
}

// The spectral-mixed potential: one reflecting cosine, one half mode and
// one periodic sine on the unit box.
const WX: f64 = PI;
const WY: f64 = 2.5 * PI;
const WZ: f64 = 8.0 * PI;

fn spectral_mixed_phi(x: [f64; 3]) -> f64 {
    (WX * x[0]).cos() * (WY * x[1]).sin() * (WZ * x[2]).sin()
}

fn fully_unbounded_phi(x: [f64; 3]) -> f64 {
    x.iter().map(|&v| bump(2.0 * v - 1.0)).product()
}

fn fully_unbounded_rhs(x: [f64; 3]) -> f64 {
    let xi = [2.0 * x[0] - 1.0, 2.0 * x[1] - 1.0, 2.0 * x[2] - 1.0];
    let b = [bump(xi[0]), bump(xi[1]), bump(xi[2])];
    let mut f = 0.0;
    for d in 0..3 {
        let mut term = 4.0 * bump_dd(xi[d]);
        for e in 0..3 {
            if e != d {
                term *= b[e];
            }
        }
        f += term;
    }
    f
}

// Semi-unbounded profiles. The first direction is even about x = 1 (the
// second bump is the mirror image of the first), the last is odd about
// z = 0; both halves of each pair overlap the box so the analytic form
// already equals its own extension.
fn semi_profile(dir: usize, v: f64) -> f64 {
    match dir {
        0 => bump(2.0 * v - 1.4) + bump(2.0 * v - 2.6),
        1 => bump(2.0 * v - 1.0),
        _ => bump(2.0 * v - 0.6) - bump(2.0 * v + 0.6),
    }
}

fn semi_profile_dd(dir: usize, v: f64) -> f64 {
    4.0 * match dir {
        0 => bump_dd(2.0 * v - 1.4) + bump_dd(2.0 * v - 2.6),
        1 => bump_dd(2.0 * v - 1.0),
        _ => bump_dd(2.0 * v - 0.6) - bump_dd(2.0 * v + 0.6),
    }
}

fn semi_unbounded_phi(x: [f64; 3]) -> f64 {
    semi_profile(0, x[0]) * semi_profile(1, x[1]) * semi_profile(2, x[2])
}

fn semi_unbounded_rhs(x: [f64; 3]) -> f64 {
    let p = [
        semi_profile(0, x[0]),
        semi_profile(1, x[1]),
        semi_profile(2, x[2]),
    ];
    semi_profile_dd(0, x[0]) * p[1] * p[2]
        + p[0] * semi_profile_dd(1, x[1]) * p[2]
        + p[0] * p[1] * semi_profile_dd(2, x[2])
}

/// Exact potential of a scalar case.
pub fn reference_scalar(kind: CaseKind, x: [f64; 3]) -> f64 {
    match kind {
        CaseKind::SpectralMixed => spectral_mixed_phi(x),
        CaseKind::FullyUnbounded => fully_unbounded_phi(x),
        CaseKind::SemiUnbounded => semi_unbounded_phi(x),
        CaseKind::BiotSavartTube => panic!("tube case is vector valued"),
    }
}

/// Laplacian of [`reference_scalar`], the right-hand side fed to the solver.
pub fn source_scalar(kind: CaseKind, x: [f64; 3]) -> f64 {
    match kind {
        CaseKind::SpectralMixed => {
            -(WX * WX + WY * WY + WZ * WZ) * spectral_mixed_phi(x)
        }
        CaseKind::FullyUnbounded => fully_unbounded_rhs(x),
        CaseKind::SemiUnbounded => semi_unbounded_rhs(x),
        CaseKind::BiotSavartTube => panic!("tube case is vector valued"),
    }
}

// Vortex tube of unit circulation along z through (1/2, 1/2), radius 1/4.
const TUBE_R: f64 = 0.25;
const TUBE_C: f64 = 0.5;

fn e2_at_1() -> f64 {
    // E2(1), the normalization that makes the tube circulation exactly 1
    static CACHE: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *CACHE.get_or_init(|| e2(1.0))
}

/// Vorticity of the tube case; only the axial component is nonzero.
pub fn tube_vorticity(x: [f64; 3]) -> [f64; 3] {
    let (dx, dy) = (x[0] - TUBE_C, x[1] - TUBE_C);
    let rho2 = (dx * dx + dy * dy) / (TUBE_R * TUBE_R);
    let s = 1.0 - rho2;
    let wz = if s <= 0.0 {
        0.0
    } else {
        (1.0 / (2.0 * PI)) * (2.0 / (TUBE_R * TUBE_R)) / e2_at_1() * (-1.0 / s).exp()
    };
    [0.0, 0.0, wz]
}

/// Exact induced velocity of the tube case.
pub fn tube_velocity(x: [f64; 3]) -> [f64; 3] {
    let (dx, dy) = (x[0] - TUBE_C, x[1] - TUBE_C);
    let r = (dx * dx + dy * dy).sqrt();
    if r < 1e-14 {
        return [0.0; 3];
    }
    let rho2 = (r / TUBE_R) * (r / TUBE_R);
    let s = 1.0 - rho2;
    // fraction of the unit circulation enclosed by radius r
    let enclosed = if s <= 0.0 { 1.0 } else { 1.0 - s * e2(1.0 / s) / e2_at_1() };
    let ut = enclosed / (2.0 * PI * r);
    [-ut * dy / r, ut * dx / r, 0.0]
}

/// Boundary pairs of the three vorticity components: transverse components
/// are odd across the end walls, the axial one even.
pub fn tube_component_bcs() -> [[BcPair; 3]; 3] {
    let uu = BcPair::new(Bc::Unbounded, Bc::Unbounded).unwrap();
    let oo = BcPair::new(Bc::Odd, Bc::Odd).unwrap();
    let ee = BcPair::new(Bc::Even, Bc::Even).unwrap();
    [[uu, uu, oo], [uu, uu, oo], [uu, uu, ee]]
}

/// Fill a local pencil from a function of physical coordinates. The
/// topology must be scalar (one value per sample).
pub fn fill_field(
    domain: &Domain,
    topo: &Topology,
    rank: usize,
    out: &mut [f64],
    f: &dyn Fn([f64; 3]) -> f64,
) {
    assert_eq!(topo.nf(), 1, "fill expects scalar samples");
    for_each_sample(domain, topo, rank, &mut |idx, x| out[idx] = f(x));
}

/// Visit local samples in memory order with their physical coordinates.
fn for_each_sample(
    domain: &Domain,
    topo: &Topology,
    rank: usize,
    visit: &mut dyn FnMut(usize, [f64; 3]),
) {
    let or = topo.local_origin(rank);
    let sh = topo.local_shape(rank);
    let ord = topo.axis_order();
    let off = match domain.layout() {
        Layout::NodeCentered => 0.0,
        Layout::CellCentered => 0.5,
    };
    let h = [domain.spacing(0), domain.spacing(1), domain.spacing(2)];
    let mut idx = 0;
    let mut g = [0usize; 3];
    for i2 in 0..sh[ord[2]] {
        g[ord[2]] = or[ord[2]] + i2;
        for i1 in 0..sh[ord[1]] {
            g[ord[1]] = or[ord[1]] + i1;
            for i0 in 0..sh[ord[0]] {
                g[ord[0]] = or[ord[0]] + i0;
                let x = [
                    (g[0] as f64 + off) * h[0],
                    (g[1] as f64 + off) * h[1],
                    (g[2] as f64 + off) * h[2],
                ];
                visit(idx, x);
                idx += 1;
            }
        }
    }
}

/// Outcome of one case at one resolution.
#[derive(Clone, Debug)]
pub struct CaseRun {
    /// Max-norm error against the analytic reference, over all ranks and
    /// (for the tube) components.
    pub einf: f64,
    /// Max-norm of the reference itself, for relative reporting.
    pub ref_scale: f64,
    /// Grid spacing (equal in all directions).
    pub h: f64,
    /// Slowest rank's wall time.
    pub wall_s: f64,
    /// Rank 0's stage breakdown.
    pub profile: SolveProfile,
}

/// Run one case end to end on `p` simulated ranks and compare against the
/// analytic solution.
pub fn run_case(
    kind: CaseKind,
    kernel: KernelId,
    layout: Layout,
    cells: usize,
    p: usize,
    options: SolverOptions,
) -> Result<CaseRun> {
    let domain = kind.domain(cells, layout)?;
    let outs: Vec<Result<(f64, f64, SolveProfile)>> = run_ranks(p, |rank, ep| {
        if kind.is_vector() {
            let plan = CurlPlan::new(&domain, tube_component_bcs(), kernel, options, p, rank)?;
            let topo = plan.input_topology().clone();
            let n = topo.local_len(rank);
            let mut fields = [plan.make_field(), plan.make_field(), plan.make_field()];
            for (c, field) in fields.iter_mut().enumerate() {
                fill_field(&domain, &topo, rank, &mut field.active_mut()[..n], &|x| {
                    -tube_vorticity(x)[c]
                });
            }
            let profile = plan.solve(&mut fields, ep, None)?;
            let mut diff = 0.0f64;
            let mut scale = 0.0f64;
            for (c, field) in fields.iter().enumerate() {
                let u = field.active();
                for_each_sample(&domain, &topo, rank, &mut |idx, x| {
                    let want = tube_velocity(x)[c];
                    diff = diff.max((u[idx] - want).abs());
                    scale = scale.max(want.abs());
                });
            }
            let einf = allreduce_max(ep, REDUCE_TAG, diff)?;
            let scale = allreduce_max(ep, REDUCE_TAG + 2, scale)?;
            Ok((einf, scale, profile))
        } else {
            let plan = SolvePlan::new(&domain, kernel, options, p, rank)?;
            let topo = plan.input_topology().clone();
            let n = topo.local_len(rank);
            let mut field = plan.make_field();
            fill_field(&domain, &topo, rank, &mut field.active_mut()[..n], &|x| {
                source_scalar(kind, x)
            });
            let profile = plan.solve(&mut field, ep, None)?;
            let u = field.active();
            let mut diff = 0.0f64;
            let mut scale = 0.0f64;
            for_each_sample(&domain, &topo, rank, &mut |idx, x| {
                let want = reference_scalar(kind, x);
                diff = diff.max((u[idx] - want).abs());
                scale = scale.max(want.abs());
            });
            let einf = allreduce_max(ep, REDUCE_TAG, diff)?;
            let scale = allreduce_max(ep, REDUCE_TAG + 2, scale)?;
            Ok((einf, scale, profile))
        }
    });
    let mut runs = Vec::with_capacity(p);
    for o in outs {
        runs.push(o?);
    }
    let wall_s = runs.iter().map(|r| r.2.wall_s).fold(0.0, f64::max);
    let (einf, ref_scale, profile) = runs.swap_remove(0);
    Ok(CaseRun { einf, ref_scale, h: domain.spacing(0), wall_s, profile })
}

/// Observed order of accuracy from a resolution sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConvergenceOrder {
    /// Every error sits at the roundoff floor; no algebraic rate exists.
    Spectral,
    Algebraic(f64),
}

impl fmt::Display for ConvergenceOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvergenceOrder::Spectral => f.write_str("spectral"),
            ConvergenceOrder::Algebraic(p) => write!(f, "{p:.4}"),
        }
    }
}

/// Least-squares slope of log error against log spacing. `scale` is the
/// reference magnitude deciding the roundoff floor.
pub fn convergence_order(hs: &[f64], errs: &[f64], scale: f64) -> ConvergenceOrder {
    assert!(hs.len() == errs.len() && hs.len() >= 2, "need matched resolutions");
    if errs.iter().all(|&e| e <= 1e-13 * scale.max(1e-300)) {
        return ConvergenceOrder::Spectral;
    }
    let n = hs.len() as f64;
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    ConvergenceOrder::Algebraic(num / den)
}

/// Speedup of a strong scaling with serial fraction `beta` on `ranks` ranks.
pub fn amdahl_speedup(beta: f64, ranks: f64) -> f64 {
    ranks / (beta * ranks + (1.0 - beta))
}

pub fn strong_efficiency(speedup: f64, ranks: f64) -> f64 {
    speedup / ranks
}

/// Serial fraction from measured strong-scaling speedups. The model gives
/// 1/s - 1/r = beta (1 - 1/r), a line through the origin.
pub fn fit_strong_serial_fraction(ranks: &[f64], speedups: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&r, &s) in ranks.iter().zip(speedups) {
        let x = 1.0 - 1.0 / r;
        let y = 1.0 / s - 1.0 / r;
        num += x * y;
        den += x * x;
    }
    num / den
}

/// Weak-scaling efficiency: reference time over measured time at equal
/// work per rank.
pub fn weak_efficiency(t_ref: f64, t_r: f64) -> f64 {
    t_ref / t_r
}

/// Serial (non-overlapped) fraction from weak-scaling efficiencies, from
/// 1/eta - 1 = beta (r - 1).
pub fn fit_weak_serial_fraction(ranks: &[f64], etas: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&r, &eta) in ranks.iter().zip(etas) {
        let x = r - 1.0;
        let y = 1.0 / eta - 1.0;
        num += x * y;
        den += x * x;
    }
    num / den
}
