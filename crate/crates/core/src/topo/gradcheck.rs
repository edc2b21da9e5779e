use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::block::{
    connection_forward, connection_scores_backward, enhance_forward, topo_block_backward,
    TopoBlockParams,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub eps: f64,
    /// Check at most this many randomly chosen entries per tensor; `None`
    /// checks every entry.
    pub max_coords_per_tensor: Option<usize>,
    /// Seed for the coordinate subsample.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: 1e-5,
            max_coords_per_tensor: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `max |analytic − numeric| / max(1, |analytic|)` over checked entries.
    pub max_rel_error: f64,
    /// Tensor and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    /// Entries whose ±eps probe flipped a ReLU, where central differences
    /// are meaningless.
    pub skipped_kinks: usize,
}

/// Checks [`topo_block_backward`] against central differences of
/// `L = ½‖topo_enhance(F, M)‖²`, over every entry of `F`, `M` and all
/// enhancement-MLP parameters.
pub fn grad_check(
    f: ArrayView2<f64>,
    m: ArrayView2<f64>,
    p: &TopoBlockParams,
    eps: f64,
) -> Result<GradCheckReport> {
    grad_check_with(
        f,
        m,
        p,
        GradCheckOptions {
            eps,
            ..GradCheckOptions::default()
        },
    )
}

struct Probe {
    f: Array2<f64>,
    m: Array2<f64>,
    p: TopoBlockParams,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!(
            "finite-difference step {eps} must be positive"
        )));
    }
    Ok(())
}

fn select(len: usize, cap: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match cap {
        Some(k) if k < len => {
            let mut idx = rand::seq::index::sample(rng, len, k).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..len).collect(),
    }
}

/// `L(x+) − L(x−)` for `L = ½‖y‖²`, summed as `Σ ½(y₊ − y₋)(y₊ + y₋)`.
/// Subtracting the two loss totals instead cancels catastrophically once
/// `L` is large (about 3e5 at N=200, D=256), swamping the signal at small
/// steps.
fn half_sq_norm_diff(plus: &Array2<f64>, minus: &Array2<f64>) -> f64 {
    plus.iter()
        .zip(minus.iter())
        .map(|(p, m)| 0.5 * (p - m) * (p + m))
        .sum()
}

/// Shared finite-difference driver. `tensor(probe, t)` exposes the `t`-th
/// tensor mutably; `eval` returns the block output and the ReLU sign pattern.
fn run(
    mut probe: Probe,
    names: &[String],
    analytic: &[Vec<f64>],
    opts: GradCheckOptions,
    tensor: impl Fn(&mut Probe, usize) -> &mut [f64],
    eval: impl Fn(&Probe) -> (Array2<f64>, Vec<bool>),
) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (_, base_pattern) = eval(&probe);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        skipped_kinks: 0,
    };
    for (t, name) in names.iter().enumerate() {
        let len = tensor(&mut probe, t).len();
        for i in select(len, opts.max_coords_per_tensor, &mut rng) {
            let original = tensor(&mut probe, t)[i];
            tensor(&mut probe, t)[i] = original + opts.eps;
            let (plus, plus_pattern) = eval(&probe);
            tensor(&mut probe, t)[i] = original - opts.eps;
            let (minus, minus_pattern) = eval(&probe);
            tensor(&mut probe, t)[i] = original;
            if plus_pattern != base_pattern || minus_pattern != base_pattern {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = half_sq_norm_diff(&plus, &minus) / (2.0 * opts.eps);
            let a = analytic[t][i];
            let rel = (a - numeric).abs() / a.abs().max(1.0);
            report.checked += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((name.clone(), i));
            }
        }
    }
    report
}

fn mlp_tensor_names(prefix: &str, layers: usize) -> Vec<String> {
    (0..layers)
        .flat_map(|k| [format!("{prefix}.{k}.weight"), format!("{prefix}.{k}.bias")])
        .collect()
}

pub fn grad_check_with(
    f: ArrayView2<f64>,
    m: ArrayView2<f64>,
    p: &TopoBlockParams,
    opts: GradCheckOptions,
) -> Result<GradCheckReport> {
    check_eps(opts.eps)?;
    let out = super::block::topo_enhance(f, m, p)?;
    let grads = topo_block_backward(f, m, p, out.view())?;

    let mut names = vec!["f".to_string(), "m".to_string()];
    let mut analytic = vec![
        grads.f.iter().copied().collect::<Vec<_>>(),
        grads.m.iter().copied().collect(),
    ];
    for (name, mlp, g) in [
        ("mlp_succ", &p.mlp_succ, &grads.mlp_succ),
        ("mlp_prede", &p.mlp_prede, &grads.mlp_prede),
        ("mlp_fuse", &p.mlp_fuse, &grads.mlp_fuse),
    ] {
        names.extend(mlp_tensor_names(name, mlp.layers.len()));
        analytic.extend(g.tensors().into_iter().map(|t| t.to_vec()));
    }

    let probe = Probe {
        f: f.as_standard_layout().into_owned(),
        m: m.as_standard_layout().into_owned(),
        p: p.clone(),
    };
    Ok(run(
        probe,
        &names,
        &analytic,
        opts,
        |probe, t| match t {
            0 => probe.f.as_slice_mut().expect("standard layout"),
            1 => probe.m.as_slice_mut().expect("standard layout"),
            _ => {
                let mut all: Vec<&mut [f64]> = probe
                    .p
                    .enhance_mlps_mut()
                    .into_iter()
                    .flat_map(|(_, mlp)| mlp.tensors_mut())
                    .collect();
                all.swap_remove(t - 2)
            }
        },
        |probe| {
            let (out, cache) = enhance_forward(probe.f.view(), probe.m.view(), &probe.p);
            let mut pattern = Vec::new();
            cache.relu_pattern(&probe.p, &mut pattern);
            (out, pattern)
        },
    ))
}

/// Same check for [`connection_scores_backward`] with
/// `L = ½‖connection_scores(Q)‖²`, over `Q` and both head MLPs.
pub fn grad_check_connection(
    q: ArrayView2<f64>,
    p: &TopoBlockParams,
    opts: GradCheckOptions,
) -> Result<GradCheckReport> {
    check_eps(opts.eps)?;
    let scores = super::block::connection_scores(q, p)?;
    let grads = connection_scores_backward(q, p, scores.view())?;

    let mut names = vec!["q".to_string()];
    let mut analytic = vec![grads.q.iter().copied().collect::<Vec<_>>()];
    for (name, mlp, g) in [
        ("head_end", &p.head_end, &grads.head_end),
        ("head_start", &p.head_start, &grads.head_start),
    ] {
        names.extend(mlp_tensor_names(name, mlp.layers.len()));
        analytic.extend(g.tensors().into_iter().map(|t| t.to_vec()));
    }
    let probe = Probe {
        f: q.as_standard_layout().into_owned(),
        m: Array2::zeros((0, 0)),
        p: p.clone(),
    };
    Ok(run(
        probe,
        &names,
        &analytic,
        opts,
        |probe, t| match t {
            0 => probe.f.as_slice_mut().expect("standard layout"),
            _ => {
                let mut all: Vec<&mut [f64]> = probe
                    .p
                    .head_mlps_mut()
                    .into_iter()
                    .flat_map(|(_, mlp)| mlp.tensors_mut())
                    .collect();
                all.swap_remove(t - 1)
            }
        },
        |probe| {
            let (scores, cache) = connection_forward(probe.f.view(), &probe.p);
            let mut pattern = Vec::new();
            cache.relu_pattern(&probe.p, &mut pattern);
            (scores, pattern)
        },
    ))
}
