//! Three-layer constructions.
//!
//! Every builder projects the samples onto one separating direction, groups
//! the sorted projections into consecutive windows (first layer), and solves
//! one clip system per second-layer neuron so that chosen representatives hit
//! their targets while every other sample saturates.

pub mod clip;
pub mod window;

use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::instance::{find_direction, Direction, FineTuneInstance};
use crate::network::{Layer, Network, VerifyReport};
use crate::partition::reduced_index_set;
use crate::pwl::Activation;
use crate::scalar::Scalar;

pub use clip::{solve_clip_system, ClipOptions, ClipSystem, Side};
pub use window::{BoundaryPolicy, NeuronPlan, Rep, WindowScheme};

use window::{place_boundaries, slot_order, transversal_reps};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Grid,
    Bump,
    Sparse,
    Compact,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Grid => "grid",
            Method::Bump => "bump",
            Method::Sparse => "sparse",
            Method::Compact => "compact",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "grid" => Some(Method::Grid),
            "bump" => Some(Method::Bump),
            "sparse" => Some(Method::Sparse),
            "compact" => Some(Method::Compact),
            _ => None,
        }
    }
}

/// Half-width of the bump activations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpWidth {
    /// `|z_t| / 4` per neuron: each bump only ever sees its own target and 0.
    #[default]
    PerNeuron,
    /// A quarter of the smallest gap between distinct values of the tuned
    /// targets and 0, shared by all bumps.
    Shared,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub seed: u64,
    pub boundaries: BoundaryPolicy,
    pub bump_width: BumpWidth,
}

/// Ramp width of the tail-cut and window-linear activations, and the clip
/// margin they require.
const RAMP: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronReport {
    /// Representative sample per group (1-based); `None` for virtual points.
    pub representatives: Vec<Option<usize>>,
    pub lambda: f64,
    pub lambda_exponent: Option<u32>,
    pub nu_spread: f64,
    pub activation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeLayerReport {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub method: String,
    pub boundary_policy: BoundaryPolicy,
    pub direction: Vec<f64>,
    /// Sample indices (1-based) of every group, in window order.
    pub groups: Vec<Vec<usize>>,
    /// Empty groups of the compact scheme (1-based, before renumbering).
    pub dropped_groups: Vec<usize>,
    pub boundaries: Vec<f64>,
    pub neurons: Vec<NeuronReport>,
    pub margin: f64,
    /// Ramp width, or the shared bump half-width; per-neuron bump widths
    /// are in the neuron activations.
    pub delta: Option<f64>,
    pub relu_count: usize,
    pub layer_relu_widths: Vec<usize>,
    /// Method-specific ceiling on `relu_count`.
    pub bound: usize,
    pub max_abs_weight: f64,
    /// Sparse only: removed samples lie between their block endpoints in
    /// every first-layer output.
    pub sandwich: Option<bool>,
    /// Sparse only: all second-layer weights positive.
    pub positive_weights: Option<bool>,
    pub verify: Option<VerifyReport>,
    pub auto: Option<AutoChoice>,
}

/// Branch values of the three-layer upper bound, as real numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoChoice {
    pub grid: f64,
    pub bump: f64,
    pub sparse: f64,
    pub chosen: Method,
}

/// Picks the branch minimizing `4√K`, `2√K + 3N`, `6√(3N+2)`; ties go to
/// the earlier branch.
pub fn choose_method(k: usize, n: usize) -> AutoChoice {
    let rk = (k as f64).sqrt();
    let grid = 4.0 * rk;
    let bump = 2.0 * rk + 3.0 * n as f64;
    let sparse = 6.0 * ((3 * n + 2) as f64).sqrt();
    let chosen = if grid <= bump && grid <= sparse {
        Method::Grid
    } else if bump <= sparse {
        Method::Bump
    } else {
        Method::Sparse
    };
    AutoChoice { grid, bump, sparse, chosen }
}

pub fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// Ceiling on the ReLU-equivalent count of each method.
pub fn method_bound(method: Method, k: usize, n: usize) -> usize {
    match method {
        Method::Grid => 4 * ceil_sqrt(k),
        Method::Bump => 2 * ceil_sqrt(k) + 3 * n,
        Method::Sparse => 6 * ceil_sqrt(3 * n + 2),
        Method::Compact => 4 * n + 4,
    }
}

/// Splits `items` into `g` consecutive runs whose sizes differ by at most one.
fn balanced_groups(items: &[usize], g: usize) -> Vec<Vec<usize>> {
    let (q, r) = (items.len() / g, items.len() % g);
    let mut out = Vec::with_capacity(g);
    let mut at = 0;
    for i in 0..g {
        let len = q + usize::from(i < r);
        out.push(items[at..at + len].to_vec());
        at += len;
    }
    out
}

struct Prepared<S: Scalar> {
    dir: Direction<S>,
    /// Sorted projections.
    c: Vec<S>,
    /// Targets by sorted position.
    z: Vec<S>,
    /// Sample coordinates by sorted position.
    x: Vec<Vec<S>>,
}

fn prepare<S: Scalar>(inst: &FineTuneInstance, seed: u64) -> Result<Prepared<S>> {
    inst.validate()?;
    inst.require_unit_targets()?;
    if inst.k == 0 {
        return Err(FtcError::InsufficientData("no samples".into()));
    }
    let dir: Direction<S> = find_direction(&inst.points, seed)?;
    let c = dir.sorted_projections();
    let z = dir.order.iter().map(|&i| S::from_f64(inst.targets[i])).collect();
    let points = inst.points_as::<S>();
    let x = dir.order.iter().map(|&i| points[i].clone()).collect();
    Ok(Prepared { dir, c, z, x })
}

struct Built<S: Scalar> {
    scheme: WindowScheme<S>,
    second: Layer<S>,
    output_weights: Vec<S>,
    output_bias: S,
    neurons: Vec<NeuronReport>,
}

/// First-layer outputs (plus a trailing 1) of every sample, computed by the
/// lifted layer exactly as the final network will compute them.
fn sample_rows<S: Scalar>(prep: &Prepared<S>, scheme: &WindowScheme<S>) -> Result<Vec<Vec<S>>> {
    let lifted = Network {
        input_dim: 1,
        layers: vec![scheme.layer()],
        output_weights: vec![S::zero(); scheme.len()],
        output_bias: S::zero(),
    }
    .lift_projection(&prep.dir.vector)?;
    prep.x
        .iter()
        .map(|x| {
            let (_, trace) = lifted.eval(x)?;
            let mut row = trace.post.into_iter().next().unwrap();
            row.push(S::one());
            Ok(row)
        })
        .collect()
}

fn solve_plan<S: Scalar>(
    prep: &Prepared<S>,
    scheme: &WindowScheme<S>,
    rows: &[Vec<S>],
    plan: &NeuronPlan,
    targets: &[S],
    opts: &ClipOptions<S>,
) -> Result<ClipSystem<S>> {
    let rep_rows: Vec<Vec<S>> = plan
        .reps
        .iter()
        .map(|r| match r {
            Rep::Sample(p) => rows[*p].clone(),
            Rep::Virtual { .. } => scheme.beta_row(&scheme.rep_point(r, &prep.c)),
        })
        .collect();
    let mut off_rows = Vec::with_capacity(plan.off.len());
    for &(p, side) in &plan.off {
        let row = rows[p].clone();
        let g = scheme
            .window_of(&prep.c[p])
            .ok_or_else(|| FtcError::InvalidRange(format!("sorted position {} outside every window", p + 1)))?;
        let differing = row.iter().zip(&rep_rows[g]).filter(|(a, b)| a != b).count();
        if differing > 1 {
            return Err(FtcError::InvalidRange(format!(
                "sorted position {} differs from its representative in {differing} coordinates",
                p + 1
            )));
        }
        off_rows.push((row, side));
    }
    solve_clip_system(&rep_rows, targets, &off_rows, opts)
}

fn neuron_report<S: Scalar>(prep: &Prepared<S>, plan: &NeuronPlan, sys: &ClipSystem<S>, act: &Activation<S>) -> NeuronReport {
    NeuronReport {
        representatives: plan
            .reps
            .iter()
            .map(|r| match r {
                Rep::Sample(p) => Some(prep.dir.order[*p] + 1),
                Rep::Virtual { .. } => None,
            })
            .collect(),
        lambda: sys.lambda.as_f64(),
        lambda_exponent: sys.lambda_exponent,
        nu_spread: sys.nu_spread(),
        activation: act.kind().into(),
    }
}

fn push_neuron<S: Scalar>(layer: &mut Layer<S>, sys: &ClipSystem<S>, act: Activation<S>) {
    let mut w = sys.solution();
    let b = w.pop().unwrap();
    layer.push(w, b, act);
}

fn tolerance<S: Scalar>() -> S {
    if S::MODE == "f64" {
        S::from_f64(1e-8)
    } else {
        S::zero()
    }
}

#[allow(clippy::too_many_arguments)]
fn finish<S: Scalar>(
    inst: &FineTuneInstance,
    prep: &Prepared<S>,
    method: Method,
    opts: &BuildOptions,
    built: Built<S>,
    dropped_groups: Vec<usize>,
    margin: f64,
    delta: Option<f64>,
) -> ProjectedBuild<S> {
    let net = Network {
        input_dim: 1,
        layers: vec![built.scheme.layer(), built.second],
        output_weights: built.output_weights,
        output_bias: built.output_bias,
    };
    let report = ThreeLayerReport {
        k: inst.k,
        n: inst.n(),
        method: method.name().into(),
        boundary_policy: opts.boundaries,
        direction: prep.dir.vector_f64(),
        groups: built
            .scheme
            .groups
            .iter()
            .map(|g| g.iter().map(|&p| prep.dir.order[p] + 1).collect())
            .collect(),
        dropped_groups,
        boundaries: built.scheme.boundaries.iter().map(Scalar::as_f64).collect(),
        neurons: built.neurons,
        margin,
        delta,
        relu_count: net.relu_widths().iter().sum(),
        layer_relu_widths: net.relu_widths(),
        bound: method_bound(method, inst.k, inst.n()),
        max_abs_weight: 0.0,
        sandwich: None,
        positive_weights: None,
        verify: None,
        auto: None,
    };
    ProjectedBuild { net, direction: Some(prep.dir.vector.clone()), report }
}

/// A three-layer build before lifting: the network reads the scalar
/// projection `aᵀx`.
#[derive(Clone, Debug)]
pub struct ProjectedBuild<S: Scalar> {
    pub net: Network<S>,
    /// `None` only for the zero network.
    pub direction: Option<Vec<S>>,
    pub report: ThreeLayerReport,
}

fn zero_build<S: Scalar>(inst: &FineTuneInstance, method: Method, opts: &BuildOptions) -> ProjectedBuild<S> {
    ProjectedBuild { net: Network::zero(1), direction: None, report: zero_report(inst, method, opts) }
}

/// Lifts to the instance's input dimension and runs the exactness gate.
fn lift_and_gate<S: Scalar>(inst: &FineTuneInstance, b: ProjectedBuild<S>) -> Result<(Network<S>, ThreeLayerReport)> {
    let net = match &b.direction {
        Some(a) => b.net.lift_projection(a)?,
        None => Network::zero(inst.d),
    };
    let mut report = b.report;
    report.max_abs_weight = net.max_abs_weight();
    gate(inst, net, report)
}

/// Final exactness gate shared by all builders.
fn gate<S: Scalar>(
    inst: &FineTuneInstance,
    net: Network<S>,
    mut report: ThreeLayerReport,
) -> Result<(Network<S>, ThreeLayerReport)> {
    let v = net.verify_finetune(inst, &tolerance::<S>())?;
    let pass = v.pass;
    report.verify = Some(v);
    if !pass {
        return Err(FtcError::VerificationFailed(format!(
            "{} build misses targets: on T {:.3e}, off T {:.3e}",
            report.method,
            report.verify.as_ref().unwrap().max_err_on_t,
            report.verify.as_ref().unwrap().max_err_off_t
        )));
    }
    Ok((net, report))
}

fn zero_report(inst: &FineTuneInstance, method: Method, opts: &BuildOptions) -> ThreeLayerReport {
    ThreeLayerReport {
        k: inst.k,
        n: inst.n(),
        method: method.name().into(),
        boundary_policy: opts.boundaries,
        direction: vec![],
        groups: vec![],
        dropped_groups: vec![],
        boundaries: vec![],
        neurons: vec![],
        margin: RAMP,
        delta: None,
        relu_count: 0,
        layer_relu_widths: vec![],
        bound: method_bound(method, inst.k, inst.n()),
        max_abs_weight: 0.0,
        sandwich: None,
        positive_weights: None,
        verify: None,
        auto: None,
    }
}

/// Transversal plans over `groups`: neuron `k` uses slot `k` of every group
/// and must clip every sample in `universe` other than its own
/// representatives, with sides fixed by slot order when `sided`.
fn slot_plans(groups: &[Vec<usize>], universe: &[usize], sided: bool) -> Vec<NeuronPlan> {
    let p = groups.iter().map(Vec::len).max().unwrap_or(0);
    let mut slot_of = std::collections::HashMap::new();
    for (g, grp) in groups.iter().enumerate() {
        for (s, &pos) in slot_order(grp, g).iter().enumerate() {
            slot_of.insert(pos, s);
        }
    }
    (0..p)
        .map(|k| {
            let reps = transversal_reps(groups, k, p);
            let off = universe
                .iter()
                .filter(|pos| !reps.contains(&Rep::Sample(**pos)))
                .map(|&pos| {
                    let side = match (sided, slot_of.get(&pos)) {
                        (true, Some(&s)) if s > k => Side::Positive,
                        (true, Some(_)) => Side::Negative,
                        _ => Side::Either,
                    };
                    (pos, side)
                })
                .collect();
            NeuronPlan { reps, off }
        })
        .collect()
}

fn grid_scheme<S: Scalar>(prep: &Prepared<S>, opts: &BuildOptions, margin: f64) -> Result<(WindowScheme<S>, Vec<NeuronPlan>)> {
    let k = prep.c.len();
    let all: Vec<usize> = (0..k).collect();
    let groups = balanced_groups(&all, ceil_sqrt(k));
    let plans = slot_plans(&groups, &all, true);
    let b = place_boundaries(&groups, &prep.c, &prep.dir.eps, opts.boundaries, &plans, margin);
    Ok((WindowScheme::new(groups, b, &prep.c)?, plans))
}

/// `⌈√K⌉` windows and `⌈√K⌉` hard-tanh neurons; neuron `k` reproduces the
/// targets of every group's `k`-th member (sign-alternated), the others
/// saturate to constants cancelled by the output bias.
pub fn build_grid<S: Scalar>(inst: &FineTuneInstance, opts: &BuildOptions) -> Result<(Network<S>, ThreeLayerReport)> {
    lift_and_gate(inst, grid_projected(inst, opts)?)
}

fn grid_projected<S: Scalar>(inst: &FineTuneInstance, opts: &BuildOptions) -> Result<ProjectedBuild<S>> {
    let prep = prepare::<S>(inst, opts.seed)?;
    let (scheme, plans) = grid_scheme(&prep, opts, RAMP)?;
    let rows = sample_rows(&prep, &scheme)?;
    let clip = ClipOptions { margin: S::from_f64(RAMP), positive_weights: false };
    let mut second = Layer::empty();
    let mut output_weights = Vec::new();
    let mut neurons = Vec::new();
    for (k, plan) in plans.iter().enumerate() {
        let sign = if k % 2 == 0 { S::one() } else { -S::one() };
        let targets: Vec<S> = plan
            .reps
            .iter()
            .map(|r| match r {
                Rep::Sample(p) => sign.clone() * prep.z[*p].clone(),
                Rep::Virtual { .. } => S::zero(),
            })
            .collect();
        let sys = solve_plan(&prep, &scheme, &rows, plan, &targets, &clip)?;
        neurons.push(neuron_report(&prep, plan, &sys, &Activation::HardTanh));
        push_neuron(&mut second, &sys, Activation::HardTanh);
        output_weights.push(sign);
    }
    let output_bias = if plans.len() % 2 == 1 { S::zero() } else { -S::one() };
    let built = Built { scheme, second, output_weights, output_bias, neurons };
    Ok(finish(inst, &prep, Method::Grid, opts, built, vec![], RAMP, None))
}

/// Grid windows plus one bump neuron per tuned sample with a nonzero
/// target; each bump is solved on its sample's transversal with every other
/// representative sent to 0.
pub fn build_bump<S: Scalar>(inst: &FineTuneInstance, opts: &BuildOptions) -> Result<(Network<S>, ThreeLayerReport)> {
    lift_and_gate(inst, bump_projected(inst, opts)?)
}

fn bump_projected<S: Scalar>(inst: &FineTuneInstance, opts: &BuildOptions) -> Result<ProjectedBuild<S>> {
    let prep = prepare::<S>(inst, opts.seed)?;
    let pos = prep.dir.positions();
    let tuned: Vec<usize> = inst
        .tune_set
        .iter()
        .map(|&t| pos[t - 1])
        .filter(|&p| !prep.z[p].is_zero())
        .collect();
    let mut levels: Vec<f64> = tuned.iter().map(|&p| prep.z[p].as_f64()).chain([0.0]).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let min_gap = levels.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let width = |z: &S| match opts.bump_width {
        BumpWidth::PerNeuron => z.abs() / S::from_i64(4),
        BumpWidth::Shared => S::from_f64(min_gap / 4.0),
    };
    let widest = tuned.iter().map(|&p| width(&prep.z[p]).as_f64()).fold(0.0, f64::max);
    let margin_f = widest.max(RAMP);
    let (scheme, plans) = grid_scheme(&prep, opts, margin_f)?;
    let rows = sample_rows(&prep, &scheme)?;
    let clip = ClipOptions { margin: S::from_f64(margin_f), positive_weights: false };
    let mut slot_of = vec![0; prep.c.len()];
    let mut group_of = vec![0; prep.c.len()];
    for (g, grp) in scheme.groups.iter().enumerate() {
        for (s, &p) in slot_order(grp, g).iter().enumerate() {
            slot_of[p] = s;
            group_of[p] = g;
        }
    }
    let mut second = Layer::empty();
    let mut neurons = Vec::new();
    for &t in &tuned {
        let base = &plans[slot_of[t]];
        let plan = NeuronPlan {
            reps: base.reps.clone(),
            off: base.off.iter().map(|&(p, _)| (p, Side::Either)).collect(),
        };
        let targets: Vec<S> = (0..scheme.len())
            .map(|g| if g == group_of[t] { prep.z[t].clone() } else { S::zero() })
            .collect();
        let act = Activation::Bump { center: prep.z[t].clone(), halfwidth: width(&prep.z[t]) };
        let sys = solve_plan(&prep, &scheme, &rows, &plan, &targets, &clip)?;
        neurons.push(neuron_report(&prep, &plan, &sys, &act));
        push_neuron(&mut second, &sys, act);
    }
    let output_weights = vec![S::one(); second.width()];
    let built = Built { scheme, second, output_weights, output_bias: S::zero(), neurons };
    if built.second.width() == 0 {
        // First layer only; the output ignores it.
        let net = Network {
            input_dim: 1,
            layers: vec![built.scheme.layer()],
            output_weights: vec![S::zero(); built.scheme.len()],
            output_bias: S::zero(),
        };
        let mut report = zero_report(inst, Method::Bump, opts);
        report.direction = prep.dir.vector_f64();
        report.groups = built.scheme.groups.iter().map(|g| g.iter().map(|&p| prep.dir.order[p] + 1).collect()).collect();
        report.boundaries = built.scheme.boundaries.iter().map(Scalar::as_f64).collect();
        report.relu_count = net.relu_widths().iter().sum();
        report.layer_relu_widths = net.relu_widths();
        return Ok(ProjectedBuild { net, direction: Some(prep.dir.vector.clone()), report });
    }
    let delta = match opts.bump_width {
        BumpWidth::PerNeuron => None,
        BumpWidth::Shared => Some(min_gap / 4.0),
    };
    Ok(finish(inst, &prep, Method::Bump, opts, built, vec![], margin_f, delta))
}

/// Windows over the reduced index set only; the removed samples sit between
/// kept neighbours in every window, so positive second-layer weights keep
/// them clipped too.
pub fn build_sparse<S: Scalar>(inst: &FineTuneInstance, opts: &BuildOptions) -> Result<(Network<S>, ThreeLayerReport)> {
    lift_and_gate(inst, sparse_projected(inst, opts)?)
}

fn sparse_projected<S: Scalar>(inst: &FineTuneInstance, opts: &BuildOptions) -> Result<ProjectedBuild<S>> {
    if inst.n() == 0 {
        inst.validate()?;
        return Ok(zero_build(inst, Method::Sparse, opts));
    }
    let prep = prepare::<S>(inst, opts.seed)?;
    let k = prep.c.len();
    let pos = prep.dir.positions();
    let tuned: Vec<usize> = inst.tune_set.iter().map(|&t| pos[t - 1] + 1).collect();
    let reduced = reduced_index_set(k, &tuned)?;
    let j: Vec<usize> = reduced.j.iter().map(|p| p - 1).collect();
    let groups = balanced_groups(&j, ceil_sqrt(j.len()));
    let all: Vec<usize> = (0..k).collect();
    let plans = slot_plans(&groups, &all, false);
    let b = place_boundaries(&groups, &prep.c, &prep.dir.eps, opts.boundaries, &plans, RAMP);
    let scheme = WindowScheme::new(groups, b, &prep.c)?;
    let rows = sample_rows(&prep, &scheme)?;
    let clip = ClipOptions { margin: S::from_f64(RAMP), positive_weights: true };
    let act = Activation::WindowLinear { delta: S::from_f64(RAMP) };
    let mut second = Layer::empty();
    let mut neurons = Vec::new();
    for plan in &plans {
        let targets: Vec<S> = plan
            .reps
            .iter()
            .map(|r| match r {
                Rep::Sample(p) => prep.z[*p].clone(),
                Rep::Virtual { .. } => S::zero(),
            })
            .collect();
        let sys = solve_plan(&prep, &scheme, &rows, plan, &targets, &clip)?;
        neurons.push(neuron_report(&prep, plan, &sys, &act));
        push_neuron(&mut second, &sys, act.clone());
    }
    let positive = second.weights.iter().flatten().all(|w| *w > S::zero());
    let sandwich = reduced.untuned_blocks.iter().filter(|b| b.len() > 2).all(|blk| {
        let lo = scheme.beta_row(&prep.c[blk.start - 1]);
        let hi = scheme.beta_row(&prep.c[blk.end - 1]);
        (blk.start + 1..blk.end).all(|i| {
            let mid = scheme.beta_row(&prep.c[i - 1]);
            mid.iter().zip(lo.iter().zip(&hi)).all(|(m, (a, b))| {
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                a <= m && m <= b
            })
        })
    });
    if !sandwich {
        return Err(FtcError::SandwichViolation(inst.k));
    }
    let output_weights = vec![S::one(); second.width()];
    let built = Built { scheme, second, output_weights, output_bias: S::zero(), neurons };
    let mut b = finish(inst, &prep, Method::Sparse, opts, built, vec![], RAMP, Some(RAMP));
    b.report.sandwich = Some(sandwich);
    b.report.positive_weights = Some(positive);
    Ok(b)
}

/// Alternating scheme over the nonzero-target tuned samples: singleton
/// windows for them, gap windows in between. A single tail-cut neuron hits
/// each target at the singleton and pushes every other sample of a gap
/// window past the cut.
pub fn build_compact<S: Scalar>(inst: &FineTuneInstance, opts: &BuildOptions) -> Result<(Network<S>, ThreeLayerReport)> {
    lift_and_gate(inst, compact_projected(inst, opts)?)
}

fn compact_projected<S: Scalar>(inst: &FineTuneInstance, opts: &BuildOptions) -> Result<ProjectedBuild<S>> {
    let prep = prepare::<S>(inst, opts.seed)?;
    let k = prep.c.len();
    let pos = prep.dir.positions();
    let mut tuned: Vec<usize> = inst
        .tune_set
        .iter()
        .map(|&t| pos[t - 1])
        .filter(|&p| !prep.z[p].is_zero())
        .collect();
    tuned.sort_unstable();
    if tuned.is_empty() {
        return Ok(zero_build(inst, Method::Compact, opts));
    }
    let mut raw: Vec<Vec<usize>> = Vec::with_capacity(2 * tuned.len() + 1);
    let mut next = 0;
    for &t in &tuned {
        raw.push((next..t).collect());
        raw.push(vec![t]);
        next = t + 1;
    }
    raw.push((next..k).collect());
    let dropped: Vec<usize> = raw.iter().enumerate().filter(|(_, g)| g.is_empty()).map(|(i, _)| i + 1).collect();
    let groups: Vec<Vec<usize>> = raw.into_iter().filter(|g| !g.is_empty()).collect();
    let reps: Vec<Rep> = groups
        .iter()
        .enumerate()
        .map(|(g, grp)| Rep::Sample(slot_order(grp, g)[0]))
        .collect();
    let off: Vec<(usize, Side)> = (0..k)
        .filter(|p| !reps.contains(&Rep::Sample(*p)))
        .map(|p| (p, Side::Positive))
        .collect();
    let plan = NeuronPlan { reps, off };
    let b = place_boundaries(&groups, &prep.c, &prep.dir.eps, opts.boundaries, std::slice::from_ref(&plan), RAMP);
    let scheme = WindowScheme::new(groups, b, &prep.c)?;
    let rows = sample_rows(&prep, &scheme)?;
    let targets: Vec<S> = plan
        .reps
        .iter()
        .map(|r| match r {
            Rep::Sample(p) => prep.z[*p].clone(),
            Rep::Virtual { .. } => S::zero(),
        })
        .collect();
    let clip = ClipOptions { margin: S::from_f64(RAMP), positive_weights: false };
    let sys = solve_plan(&prep, &scheme, &rows, &plan, &targets, &clip)?;
    let act = Activation::TailCut { delta: S::from_f64(RAMP) };
    let mut second = Layer::empty();
    let neurons = vec![neuron_report(&prep, &plan, &sys, &act)];
    push_neuron(&mut second, &sys, act);
    let built = Built { scheme, second, output_weights: vec![S::one()], output_bias: S::zero(), neurons };
    Ok(finish(inst, &prep, Method::Compact, opts, built, dropped, RAMP, Some(RAMP)))
}

pub fn build_method<S: Scalar>(
    method: Method,
    inst: &FineTuneInstance,
    opts: &BuildOptions,
) -> Result<(Network<S>, ThreeLayerReport)> {
    match method {
        Method::Grid => build_grid(inst, opts),
        Method::Bump => build_bump(inst, opts),
        Method::Sparse => build_sparse(inst, opts),
        Method::Compact => build_compact(inst, opts),
    }
}

/// Builds `method` without lifting or verification; the network reads the
/// projection onto `direction`.
pub fn build_projected<S: Scalar>(method: Method, inst: &FineTuneInstance, opts: &BuildOptions) -> Result<ProjectedBuild<S>> {
    match method {
        Method::Grid => grid_projected(inst, opts),
        Method::Bump => bump_projected(inst, opts),
        Method::Sparse => sparse_projected(inst, opts),
        Method::Compact => compact_projected(inst, opts),
    }
}

/// Builds with whichever of grid, bump and sparse has the smallest bound.
pub fn three_layer_auto<S: Scalar>(inst: &FineTuneInstance, opts: &BuildOptions) -> Result<(Network<S>, ThreeLayerReport)> {
    let choice = choose_method(inst.k, inst.n());
    let (net, mut report) = build_method(choice.chosen, inst, opts)?;
    report.auto = Some(choice);
    Ok((net, report))
}
