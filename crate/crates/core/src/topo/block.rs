use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::mlp::{backward, forward_cached, MlpCache, MlpGrads, MlpParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TopoBlockParams {
    /// D → D, applied to `M · F`.
    pub mlp_succ: MlpParams,
    /// D → D, applied to `Mᵀ · F`.
    pub mlp_prede: MlpParams,
    /// 3D → D over the concatenated features.
    pub mlp_fuse: MlpParams,
    /// D → D_e, end embedding.
    pub head_end: MlpParams,
    /// D → D_e, start embedding.
    pub head_start: MlpParams,
}

impl TopoBlockParams {
    pub fn new(
        mlp_succ: MlpParams,
        mlp_prede: MlpParams,
        mlp_fuse: MlpParams,
        head_end: MlpParams,
        head_start: MlpParams,
    ) -> Result<Self> {
        let d = mlp_succ.input_dim();
        let checks = [
            ("mlp_succ", &mlp_succ, d, d),
            ("mlp_prede", &mlp_prede, d, d),
            ("mlp_fuse", &mlp_fuse, 3 * d, d),
            ("head_start", &head_start, d, head_end.output_dim()),
            ("head_end", &head_end, d, head_end.output_dim()),
        ];
        for (name, mlp, input, output) in checks {
            if mlp.input_dim() != input || mlp.output_dim() != output {
                return Err(Error::Shape(format!(
                    "{name} maps {} → {}, expected {input} → {output}",
                    mlp.input_dim(),
                    mlp.output_dim()
                )));
            }
        }
        Ok(TopoBlockParams {
            mlp_succ,
            mlp_prede,
            mlp_fuse,
            head_end,
            head_start,
        })
    }

    /// Two-layer MLPs everywhere (hidden width D, ReLU).
    pub fn random<R: Rng>(d: usize, d_e: usize, rng: &mut R) -> Result<Self> {
        if d == 0 || d_e == 0 {
            return Err(Error::Shape("feature dimensions must be positive".into()));
        }
        Self::new(
            MlpParams::random(&[d, d, d], rng)?,
            MlpParams::random(&[d, d, d], rng)?,
            MlpParams::random(&[3 * d, d, d], rng)?,
            MlpParams::random(&[d, d, d_e], rng)?,
            MlpParams::random(&[d, d, d_e], rng)?,
        )
    }

    /// Single linear layer per MLP: the block is then linear in `F` for a
    /// fixed `M`.
    pub fn random_linear<R: Rng>(d: usize, d_e: usize, rng: &mut R) -> Result<Self> {
        Self::new(
            MlpParams::random(&[d, d], rng)?,
            MlpParams::random(&[d, d], rng)?,
            MlpParams::random(&[3 * d, d], rng)?,
            MlpParams::random(&[d, d_e], rng)?,
            MlpParams::random(&[d, d_e], rng)?,
        )
    }

    pub fn feature_dim(&self) -> usize {
        self.mlp_succ.input_dim()
    }

    pub fn embed_dim(&self) -> usize {
        self.head_end.output_dim()
    }

    pub(crate) fn enhance_mlps_mut(&mut self) -> [(&'static str, &mut MlpParams); 3] {
        [
            ("mlp_succ", &mut self.mlp_succ),
            ("mlp_prede", &mut self.mlp_prede),
            ("mlp_fuse", &mut self.mlp_fuse),
        ]
    }

    pub(crate) fn head_mlps_mut(&mut self) -> [(&'static str, &mut MlpParams); 2] {
        [
            ("head_end", &mut self.head_end),
            ("head_start", &mut self.head_start),
        ]
    }
}

fn check_features(f: &ArrayView2<f64>, p: &TopoBlockParams) -> Result<()> {
    if f.ncols() != p.feature_dim() {
        return Err(Error::Shape(format!(
            "features have {} columns, block expects {}",
            f.ncols(),
            p.feature_dim()
        )));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Shape("features must be finite".into()));
    }
    Ok(())
}

fn check_topo(m: &ArrayView2<f64>, n: usize) -> Result<()> {
    if m.dim() != (n, n) {
        return Err(Error::Shape(format!(
            "topology matrix is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    if let Some(v) = m.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Shape(format!("topology entry {v} outside [0, 1]")));
    }
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) struct ConnectionCache {
    end_cache: MlpCache,
    start_cache: MlpCache,
    end: Array2<f64>,
    start: Array2<f64>,
}

impl ConnectionCache {
    pub(crate) fn relu_pattern(&self, p: &TopoBlockParams, out: &mut Vec<bool>) {
        self.end_cache.relu_pattern(&p.head_end, out);
        self.start_cache.relu_pattern(&p.head_start, out);
    }
}

pub(crate) fn connection_forward(
    q: ArrayView2<f64>,
    p: &TopoBlockParams,
) -> (Array2<f64>, ConnectionCache) {
    let (end, end_cache) = forward_cached(q, &p.head_end);
    let (start, start_cache) = forward_cached(q, &p.head_start);
    let scores = end.dot(&start.t()).mapv(sigmoid);
    (
        scores,
        ConnectionCache {
            end_cache,
            start_cache,
            end,
            start,
        },
    )
}

/// `σ(E_e · E_sᵀ)` with `E_e = head_end(Q)` and `E_s = head_start(Q)`.
pub fn connection_scores(q: ArrayView2<f64>, p: &TopoBlockParams) -> Result<Array2<f64>> {
    check_features(&q, p)?;
    Ok(connection_forward(q, p).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionGrads {
    pub q: Array2<f64>,
    pub head_end: MlpGrads,
    pub head_start: MlpGrads,
}

pub fn connection_scores_backward(
    q: ArrayView2<f64>,
    p: &TopoBlockParams,
    upstream: ArrayView2<f64>,
) -> Result<ConnectionGrads> {
    check_features(&q, p)?;
    let n = q.nrows();
    if upstream.dim() != (n, n) {
        return Err(Error::Shape(format!(
            "upstream gradient is {}x{}, expected {n}x{n}",
            upstream.nrows(),
            upstream.ncols()
        )));
    }
    let (scores, cache) = connection_forward(q, p);
    let d_raw = &upstream * &scores.mapv(|s| s * (1.0 - s));
    let d_end = d_raw.dot(&cache.start);
    let d_start = d_raw.t().dot(&cache.end);
    let (dq_end, head_end) = backward(&p.head_end, &cache.end_cache, d_end.view());
    let (dq_start, head_start) = backward(&p.head_start, &cache.start_cache, d_start.view());
    Ok(ConnectionGrads {
        q: dq_end + dq_start,
        head_end,
        head_start,
    })
}

pub(crate) struct EnhanceCache {
    succ_cache: MlpCache,
    prede_cache: MlpCache,
    fuse_cache: MlpCache,
}

impl EnhanceCache {
    pub(crate) fn relu_pattern(&self, p: &TopoBlockParams, out: &mut Vec<bool>) {
        self.succ_cache.relu_pattern(&p.mlp_succ, out);
        self.prede_cache.relu_pattern(&p.mlp_prede, out);
        self.fuse_cache.relu_pattern(&p.mlp_fuse, out);
    }

    fn min_abs_relu_pre(&self, p: &TopoBlockParams) -> f64 {
        self.succ_cache
            .min_abs_relu_pre(&p.mlp_succ)
            .min(self.prede_cache.min_abs_relu_pre(&p.mlp_prede))
            .min(self.fuse_cache.min_abs_relu_pre(&p.mlp_fuse))
    }
}

pub(crate) fn enhance_forward(
    f: ArrayView2<f64>,
    m: ArrayView2<f64>,
    p: &TopoBlockParams,
) -> (Array2<f64>, EnhanceCache) {
    let f_succ = m.dot(&f);
    let f_prede = m.t().dot(&f);
    let (succ, succ_cache) = forward_cached(f_succ.view(), &p.mlp_succ);
    let (prede, prede_cache) = forward_cached(f_prede.view(), &p.mlp_prede);
    let joined =
        concatenate(Axis(1), &[f.view(), succ.view(), prede.view()]).expect("row counts agree");
    let (out, fuse_cache) = forward_cached(joined.view(), &p.mlp_fuse);
    (
        out,
        EnhanceCache {
            succ_cache,
            prede_cache,
            fuse_cache,
        },
    )
}

/// Topology-enhanced features, N×D.
pub fn topo_enhance(
    f: ArrayView2<f64>,
    m: ArrayView2<f64>,
    p: &TopoBlockParams,
) -> Result<Array2<f64>> {
    check_features(&f, p)?;
    check_topo(&m, f.nrows())?;
    Ok(enhance_forward(f, m, p).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopoGrads {
    pub f: Array2<f64>,
    pub m: Array2<f64>,
    pub mlp_succ: MlpGrads,
    pub mlp_prede: MlpGrads,
    pub mlp_fuse: MlpGrads,
}

/// Gradients of `⟨upstream, topo_enhance(F, M)⟩` with respect to `F`, `M`
/// and the three enhancement MLPs. `M` is treated as an independent input.
pub fn topo_block_backward(
    f: ArrayView2<f64>,
    m: ArrayView2<f64>,
    p: &TopoBlockParams,
    upstream: ArrayView2<f64>,
) -> Result<TopoGrads> {
    check_features(&f, p)?;
    check_topo(&m, f.nrows())?;
    if upstream.dim() != f.dim() {
        return Err(Error::Shape(format!(
            "upstream gradient is {}x{}, expected {}x{}",
            upstream.nrows(),
            upstream.ncols(),
            f.nrows(),
            f.ncols()
        )));
    }
    let d = p.feature_dim();
    let (_, cache) = enhance_forward(f, m, p);
    let (d_joined, mlp_fuse) = backward(&p.mlp_fuse, &cache.fuse_cache, upstream);
    let d_succ_out = d_joined.slice(s![.., d..2 * d]);
    let d_prede_out = d_joined.slice(s![.., 2 * d..]);
    let (d_succ, mlp_succ) = backward(&p.mlp_succ, &cache.succ_cache, d_succ_out);
    let (d_prede, mlp_prede) = backward(&p.mlp_prede, &cache.prede_cache, d_prede_out);

    let df = d_joined.slice(s![.., ..d]).to_owned() + m.t().dot(&d_succ) + m.dot(&d_prede);
    let dm = d_succ.dot(&f.t()) + f.dot(&d_prede.t());
    Ok(TopoGrads {
        f: df,
        m: dm,
        mlp_succ,
        mlp_prede,
        mlp_fuse,
    })
}

/// A random problem: features, a topology matrix and block parameters.
#[derive(Debug, Clone)]
pub struct TopoInstance {
    pub f: Array2<f64>,
    pub m: Array2<f64>,
    pub params: TopoBlockParams,
}

/// Standard-normal features, `M` uniform in `[0.02, 0.98]`, random
/// two-layer MLPs.
pub fn random_instance(n: usize, d: usize, d_e: usize, seed: u64) -> Result<TopoInstance> {
    if n == 0 {
        return Err(Error::Shape("need at least one query".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = TopoBlockParams::random(d, d_e, &mut rng)?;
    let f = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let m = Array2::from_shape_fn((n, n), |_| 0.02 + 0.96 * rng.random::<f64>());
    Ok(TopoInstance { f, m, params })
}

/// Like [`random_instance`], but resamples (up to 200 draws from successive
/// seeds) until every ReLU pre-activation of the block and of the connection
/// head is at least `margin` away from zero. Falls back to the last draw.
pub fn smooth_instance(
    n: usize,
    d: usize,
    d_e: usize,
    seed: u64,
    margin: f64,
) -> Result<TopoInstance> {
    let mut last = None;
    for attempt in 0..200u64 {
        let inst = random_instance(
            n,
            d,
            d_e,
            seed.wrapping_mul(1_000_003).wrapping_add(attempt),
        )?;
        let (_, enhance) = enhance_forward(inst.f.view(), inst.m.view(), &inst.params);
        let (_, conn) = connection_forward(inst.f.view(), &inst.params);
        let min_pre = enhance
            .min_abs_relu_pre(&inst.params)
            .min(conn.end_cache.min_abs_relu_pre(&inst.params.head_end))
            .min(conn.start_cache.min_abs_relu_pre(&inst.params.head_start));
        if min_pre >= margin {
            return Ok(inst);
        }
        last = Some(inst);
    }
    Ok(last.expect("at least one attempt"))
}
