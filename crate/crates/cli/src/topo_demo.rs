//! Gradient-check demonstration of the topology block.

use std::path::PathBuf;

use ndarray::{concatenate, Array2, Axis};
use sdlane::dataio::read_tensor_file;
use sdlane::topo::{
    connection_scores, grad_check_connection, grad_check_with, mlp_forward, smooth_instance,
    topo_block_backward, topo_enhance, GradCheckOptions, GradCheckReport, MlpParams,
    TopoBlockParams,
};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

/// Pass threshold on the max relative error.
pub const TOLERANCE: f64 = 1e-5;

/// Minimum |pre-activation| requested from the instance sampler.
const SMOOTH_MARGIN: f64 = 1e-3;

pub struct DemoArgs {
    pub n: usize,
    pub d: usize,
    pub d_e: Option<usize>,
    pub seed: u64,
    pub eps: f64,
    pub max_coords: Option<usize>,
    pub features: Option<PathBuf>,
    pub topology: Option<PathBuf>,
}

fn load_matrix(path: &PathBuf, what: &str) -> CliResult<Array2<f64>> {
    let t = read_tensor_file(path)?;
    let &[rows, cols] = t.dims() else {
        return Err(CliError::Domain(format!(
            "{what} tensor {} has rank {}, expected 2",
            path.display(),
            t.dims().len()
        )));
    };
    let data = t.into_data().into_iter().map(f64::from).collect();
    Ok(Array2::from_shape_vec((rows, cols), data).expect("dims checked by the tensor reader"))
}

fn matrix_json(a: &Array2<f64>) -> Value {
    json!(a.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

fn report_json(r: &GradCheckReport) -> Value {
    json!({
        "max_rel_error": r.max_rel_error,
        "worst": r.worst.as_ref().map(|(t, i)| json!({"tensor": t, "index": i})),
        "checked": r.checked,
        "skipped_kinks": r.skipped_kinks,
    })
}

fn mlp_json(p: &MlpParams) -> Value {
    json!(p
        .layers
        .iter()
        .map(|l| json!({"weight": matrix_json(&l.weight), "bias": l.bias.to_vec()}))
        .collect::<Vec<_>>())
}

/// Every quantity of the forward and backward pass, for checking by hand.
fn intermediates(f: &Array2<f64>, m: &Array2<f64>, p: &TopoBlockParams) -> CliResult<Value> {
    let f_succ = m.dot(f);
    let f_prede = m.t().dot(f);
    let succ = mlp_forward(f_succ.view(), &p.mlp_succ)?;
    let prede = mlp_forward(f_prede.view(), &p.mlp_prede)?;
    let joined = concatenate(Axis(1), &[f.view(), succ.view(), prede.view()]).expect("rows agree");
    let out = mlp_forward(joined.view(), &p.mlp_fuse)?;
    let loss = 0.5 * out.iter().map(|v| v * v).sum::<f64>();
    let grads = topo_block_backward(f.view(), m.view(), p, out.view())?;
    Ok(json!({
        "params": {
            "mlp_succ": mlp_json(&p.mlp_succ),
            "mlp_prede": mlp_json(&p.mlp_prede),
            "mlp_fuse": mlp_json(&p.mlp_fuse),
            "head_end": mlp_json(&p.head_end),
            "head_start": mlp_json(&p.head_start),
        },
        "f": matrix_json(f),
        "m": matrix_json(m),
        "f_succ": matrix_json(&f_succ),
        "f_prede": matrix_json(&f_prede),
        "mlp_succ_out": matrix_json(&succ),
        "mlp_prede_out": matrix_json(&prede),
        "out": matrix_json(&out),
        "loss": loss,
        "grad_f": matrix_json(&grads.f),
        "grad_m": matrix_json(&grads.m),
        "connection_scores": matrix_json(&connection_scores(f.view(), p)?),
    }))
}

/// Returns the report and whether both checks passed.
pub fn run(args: &DemoArgs) -> CliResult<(Value, bool)> {
    let features = args
        .features
        .as_ref()
        .map(|p| load_matrix(p, "features"))
        .transpose()?;
    let (n, d) = features.as_ref().map_or((args.n, args.d), |f| f.dim());
    let d_e = args.d_e.unwrap_or((d / 2).max(1));
    let mut inst = smooth_instance(n, d, d_e, args.seed, SMOOTH_MARGIN)?;
    if let Some(f) = features {
        inst.f = f;
    }
    if let Some(path) = &args.topology {
        inst.m = load_matrix(path, "topology")?;
    }
    // Surfaces shape and range errors in the loaded inputs.
    topo_enhance(inst.f.view(), inst.m.view(), &inst.params)?;

    let opts = GradCheckOptions {
        eps: args.eps,
        max_coords_per_tensor: args.max_coords,
        seed: args.seed,
    };
    let enhance = grad_check_with(inst.f.view(), inst.m.view(), &inst.params, opts)?;
    let connection = grad_check_connection(inst.f.view(), &inst.params, opts)?;
    let passed = [&enhance, &connection]
        .iter()
        .all(|r| r.checked > 0 && r.max_rel_error < TOLERANCE);

    let mut report = json!({
        "n": n,
        "d": d,
        "d_e": d_e,
        "seed": args.seed,
        "eps": args.eps,
        "tolerance": TOLERANCE,
        "enhance": report_json(&enhance),
        "connection": report_json(&connection),
        "passed": passed,
    });
    if n == 1 && d == 1 {
        report["intermediates"] = intermediates(&inst.f, &inst.m, &inst.params)?;
    }
    Ok((report, passed))
}
