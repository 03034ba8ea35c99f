//! Rotate-commute audits for every layer, the tensor-product oracle check, and
//! a hook that deliberately breaks the coupling coefficients.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{argument, Result};
use crate::escn::{escn_convolution, reparametrize_weights, So2LinearWeights};
use crate::graph::{random_structure, AtomicStructure};
use crate::irreps::{
    depthwise_tensor_product_with, so3_convolution, so3_convolution_with, CgLookup,
    DepthwiseWeights, IrrepsFeature, IrrepsLayout, PathWeights,
};
use crate::layers::{
    equivariant_layer_norm, gate_activation, s2_activation, separable_layer_norm,
    separable_s2_activation, NormParams,
};
use crate::model::{EdgeContext, Model, ModelConfig};
use crate::nn::silu;
use crate::so3::{clebsch_gordan, spherical_harmonics, wigner_d_all, CgTensor, Rotation, WignerBlock};

/// Largest degree accepted by [`check_oracle`].
pub const ORACLE_MAX_DEGREE: usize = 3;
pub const ORACLE_TOLERANCE: f64 = 1e-8;

const AUDIT_CHANNELS: usize = 3;
const AUDIT_SPECIES: [u8; 4] = [1, 6, 7, 8];

/// Coupling tensors with their largest entry perturbed.
pub fn corrupted_clebsch_gordan(l1: usize, l2: usize, l3: usize) -> Result<Arc<CgTensor>> {
    Ok(Arc::new(clebsch_gordan(l1, l2, l3)?.corrupted()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub name: &'static str,
    /// Largest relative error over all trials.
    pub max_error: f64,
    pub tolerance: f64,
}

impl AuditEntry {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(AuditEntry::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| !e.passed())
    }

    pub fn get(&self, name: &str) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:<26} {} max_error={:.3e} tolerance={:.0e}",
                e.name,
                if e.passed() { "PASS" } else { "FAIL" },
                e.max_error,
                e.tolerance
            );
        }
        s
    }
}

/// `|a - b|_∞ / max(|b|_∞, 1e-12)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn feature_error(a: &IrrepsFeature, b: &IrrepsFeature) -> f64 {
    relative_error(a.as_slice(), b.as_slice())
}

fn nodes_error(a: &[IrrepsFeature], b: &[IrrepsFeature]) -> f64 {
    let flat = |v: &[IrrepsFeature]| v.iter().flat_map(|f| f.as_slice().to_vec()).collect::<Vec<_>>();
    relative_error(&flat(a), &flat(b))
}

fn random_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.sample(StandardNormal))
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = random_vector(rng);
        if v.norm() > 1e-3 {
            return v.normalize();
        }
    }
}

fn random_values(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn rotate_all(x: &[IrrepsFeature], d: &[WignerBlock]) -> Vec<IrrepsFeature> {
    x.iter().map(|f| f.rotate(d)).collect()
}

struct Scene {
    rotation: Rotation,
    wigner: Vec<WignerBlock>,
    nodes: Vec<IrrepsFeature>,
    edges: Vec<EdgeContext>,
    rotated_edges: Vec<EdgeContext>,
    structure: AtomicStructure,
}

impl Scene {
    fn new(model: &Model, rng: &mut ChaCha8Rng) -> Result<Scene> {
        let cfg = model.config();
        let n = rng.random_range(4..=16);
        let box_size = (n as f64).cbrt() * 2.0;
        let structure = random_structure(rng, n, box_size, 1.0, &AUDIT_SPECIES)?;
        let rotation = Rotation::random(rng);
        let wigner = wigner_d_all(&rotation, cfg.l_max)?;
        let edges = model.edges(&model.graph(&structure)?)?;
        let rotated_edges = model.edges(&model.graph(&structure.rotated(&rotation))?)?;
        let layout = IrrepsLayout::new(cfg.l_max, cfg.d_embed);
        let nodes = (0..n).map(|_| IrrepsFeature::random(layout, rng)).collect();
        Ok(Scene {
            rotation,
            wigner,
            nodes,
            edges,
            rotated_edges,
            structure,
        })
    }
}

struct Probe<'a> {
    trials: usize,
    rng: &'a mut ChaCha8Rng,
    entries: Vec<AuditEntry>,
}

impl Probe<'_> {
    fn run(
        &mut self,
        name: &'static str,
        tolerance: f64,
        mut trial: impl FnMut(&mut ChaCha8Rng) -> Result<f64>,
    ) -> Result<()> {
        let mut max_error = 0.0f64;
        for _ in 0..self.trials {
            let e = trial(self.rng)?;
            max_error = if e.is_nan() { f64::INFINITY } else { max_error.max(e) };
        }
        self.entries.push(AuditEntry {
            name,
            max_error,
            tolerance,
        });
        Ok(())
    }
}

/// Rotate-commute check of every layer and of the full model with random
/// weights. With `corrupt_cg` the tensor-product layers use perturbed coupling
/// tensors and are expected to fail.
pub fn check_equivariance(
    config: &ModelConfig,
    seed: u64,
    trials: usize,
    corrupt_cg: bool,
) -> Result<AuditReport> {
    if trials == 0 {
        return Err(argument("at least one trial is required"));
    }
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = Model::random(config, rng.random())?;
    let cg: &CgLookup<'_> = if corrupt_cg {
        &corrupted_clebsch_gordan
    } else {
        &clebsch_gordan
    };
    let l = config.l_max;
    let c = AUDIT_CHANNELS;
    let grid = model.grid();
    let layout = IrrepsLayout::new(l, c);

    let mut probe = Probe {
        trials,
        rng: &mut rng,
        entries: Vec::new(),
    };

    probe.run("spherical_harmonics", 1e-10, |rng| {
        let r = Rotation::random(rng);
        let v = random_unit(rng);
        let d = wigner_d_all(&r, l)?;
        let y = IrrepsFeature::from_vec(
            IrrepsLayout::new(l, 1),
            spherical_harmonics(&v, l)?.as_slice().to_vec(),
        )?;
        let yr = IrrepsFeature::from_vec(
            IrrepsLayout::new(l, 1),
            spherical_harmonics(&r.apply(&v), l)?.as_slice().to_vec(),
        )?;
        Ok(feature_error(&yr, &y.rotate(&d)))
    })?;

    probe.run("wigner_homomorphism", 1e-10, |rng| {
        let (a, b) = (Rotation::random(rng), Rotation::random(rng));
        let (da, db) = (wigner_d_all(&a, l)?, wigner_d_all(&b, l)?);
        let dab = wigner_d_all(&a.compose(&b), l)?;
        let mut worst = 0.0f64;
        for k in 0..=l {
            let prod: DMatrix<f64> = da[k].matrix() * db[k].matrix();
            worst = worst.max(relative_error(prod.as_slice(), dab[k].matrix().as_slice()));
        }
        Ok(worst)
    })?;

    probe.run("so3_convolution", 1e-10, |rng| {
        let w = PathWeights::random(l, l, l, c, c, rng);
        let x = IrrepsFeature::random(layout, rng);
        let r = Rotation::random(rng);
        let v = random_vector(rng);
        let d = wigner_d_all(&r, l)?;
        let a = so3_convolution_with(cg, &x.rotate(&d), &r.apply(&v), &w, l)?;
        let b = so3_convolution_with(cg, &x, &v, &w, l)?.rotate(&d);
        Ok(feature_error(&a, &b))
    })?;

    probe.run("depthwise_tensor_product", 1e-10, |rng| {
        let w = DepthwiseWeights::random(l, l, l, c, rng);
        let x = IrrepsFeature::random(layout, rng);
        let r = Rotation::random(rng);
        let v = random_unit(rng);
        let d = wigner_d_all(&r, l)?;
        let f = spherical_harmonics(&v, l)?;
        let fr = spherical_harmonics(&r.apply(&v), l)?;
        let a = depthwise_tensor_product_with(cg, &x.rotate(&d), &fr, &w, l)?;
        let b = depthwise_tensor_product_with(cg, &x, &f, &w, l)?.rotate(&d);
        Ok(feature_error(&a, &b))
    })?;

    probe.run("escn_convolution", 1e-10, |rng| {
        let w = So2LinearWeights::random(l, l, config.m_max, c, c, rng);
        let x = IrrepsFeature::random(layout, rng);
        let r = Rotation::random(rng);
        let v = random_vector(rng);
        let d = wigner_d_all(&r, l)?;
        let a = escn_convolution(&x.rotate(&d), &r.apply(&v), &w)?;
        let b = escn_convolution(&x, &v, &w)?.rotate(&d);
        Ok(feature_error(&a, &b))
    })?;

    probe.run("gate_activation", 1e-10, |rng| {
        let x = IrrepsFeature::random(layout, rng);
        let gates = random_values(l * c, rng);
        let d = wigner_d_all(&Rotation::random(rng), l)?;
        let a = gate_activation(&x.rotate(&d), &gates)?;
        let b = gate_activation(&x, &gates)?.rotate(&d);
        Ok(feature_error(&a, &b))
    })?;

    probe.run("s2_activation", 1e-6, |rng| {
        let x = IrrepsFeature::random(layout, rng);
        let d = wigner_d_all(&Rotation::random(rng), l)?;
        let a = s2_activation(&x.rotate(&d), grid, silu)?;
        let b = s2_activation(&x, grid, silu)?.rotate(&d);
        Ok(feature_error(&a, &b))
    })?;

    probe.run("separable_s2_activation", 1e-6, |rng| {
        let x = IrrepsFeature::random(layout, rng);
        let s = random_values(c, rng);
        let d = wigner_d_all(&Rotation::random(rng), l)?;
        let a = separable_s2_activation(&s, &x.rotate(&d), grid, silu)?;
        let b = separable_s2_activation(&s, &x, grid, silu)?.rotate(&d);
        Ok(feature_error(&a, &b))
    })?;

    let mut norm = NormParams::new(l, c);
    for g in &mut norm.gamma {
        g.iter_mut().for_each(|v| *v = 1.0 + 0.5 * v.sin());
    }
    norm.beta.iter_mut().enumerate().for_each(|(i, v)| *v = 0.1 * i as f64);
    probe.run("equivariant_layer_norm", 1e-10, |rng| {
        let x = IrrepsFeature::random(layout, rng);
        let d = wigner_d_all(&Rotation::random(rng), l)?;
        let a = equivariant_layer_norm(&x.rotate(&d), &norm)?;
        let b = equivariant_layer_norm(&x, &norm)?.rotate(&d);
        Ok(feature_error(&a, &b))
    })?;
    probe.run("separable_layer_norm", 1e-10, |rng| {
        let x = IrrepsFeature::random(layout, rng);
        let d = wigner_d_all(&Rotation::random(rng), l)?;
        let a = separable_layer_norm(&x.rotate(&d), &norm)?;
        let b = separable_layer_norm(&x, &norm)?.rotate(&d);
        Ok(feature_error(&a, &b))
    })?;

    probe.run("edge_degree_embedding", 1e-9, |rng| {
        let s = Scene::new(&model, rng)?;
        let scalars: Vec<Vec<f64>> = s.nodes.iter().map(|x| x.scalars().to_vec()).collect();
        let a = model.edge_degree.forward(&scalars, &s.rotated_edges)?;
        let b = rotate_all(&model.edge_degree.forward(&scalars, &s.edges)?, &s.wigner);
        Ok(nodes_error(&a, &b))
    })?;

    let block = model
        .blocks
        .first()
        .ok_or_else(|| argument("the model has no blocks"))?;
    probe.run("graph_attention", 1e-8, |rng| {
        let s = Scene::new(&model, rng)?;
        let a = block
            .attention
            .forward(&rotate_all(&s.nodes, &s.wigner), &s.rotated_edges, grid)?;
        let b = rotate_all(&block.attention.forward(&s.nodes, &s.edges, grid)?, &s.wigner);
        Ok(nodes_error(&a, &b))
    })?;
    probe.run("feed_forward", 1e-8, |rng| {
        let x = IrrepsFeature::random(IrrepsLayout::new(l, config.d_embed), rng);
        let d = wigner_d_all(&Rotation::random(rng), l)?;
        let a = block.ffn.forward(&x.rotate(&d), grid)?;
        let b = block.ffn.forward(&x, grid)?.rotate(&d);
        Ok(feature_error(&a, &b))
    })?;
    probe.run("transformer_block", 1e-8, |rng| {
        let s = Scene::new(&model, rng)?;
        let a = block.forward(&rotate_all(&s.nodes, &s.wigner), &s.rotated_edges, grid)?;
        let b = rotate_all(&block.forward(&s.nodes, &s.edges, grid)?, &s.wigner);
        Ok(nodes_error(&a, &b))
    })?;

    let mut force_errors = Vec::new();
    probe.run("model_energy", 1e-6, |rng| {
        let s = Scene::new(&model, rng)?;
        let p = model.predict(&s.structure)?;
        let pr = model.predict(&s.structure.rotated(&s.rotation))?;
        let expected: Vec<f64> = p.forces.iter().flat_map(|f| s.rotation.apply(f).as_slice().to_vec()).collect();
        let got: Vec<f64> = pr.forces.iter().flat_map(|f| f.as_slice().to_vec()).collect();
        force_errors.push(relative_error(&got, &expected));
        Ok(relative_error(&[pr.energy], &[p.energy]))
    })?;
    probe.entries.push(AuditEntry {
        name: "model_forces",
        max_error: force_errors.iter().fold(0.0f64, |m, e| m.max(*e)),
        tolerance: 1e-6,
    });

    Ok(AuditReport {
        entries: probe.entries,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub l_max: usize,
    pub n_edges: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

/// Largest `|escn − so3|` over `n_edges` random edges, with the eSCN weights
/// obtained by reparametrising random tensor-product weights at
/// `M_max = L_max`.
pub fn check_oracle(l_max: usize, seed: u64, n_edges: usize) -> Result<OracleReport> {
    if l_max == 0 || l_max > ORACLE_MAX_DEGREE {
        return Err(argument(format!(
            "oracle check supports 1 ≤ L_max ≤ {ORACLE_MAX_DEGREE}, got {l_max}"
        )));
    }
    if n_edges == 0 {
        return Err(argument("at least one edge is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0f64;
    for _ in 0..n_edges {
        let pw = PathWeights::random(l_max, 2 * l_max, l_max, AUDIT_CHANNELS, AUDIT_CHANNELS, &mut rng);
        let so2 = reparametrize_weights(&pw, l_max)?;
        let x = IrrepsFeature::random(IrrepsLayout::new(l_max, AUDIT_CHANNELS), &mut rng);
        let v = random_vector(&mut rng);
        let a = escn_convolution(&x, &v, &so2)?;
        let b = so3_convolution(&x, &v, &pw, l_max)?;
        max_error = max_error.max(a.max_abs_diff(&b));
    }
    Ok(OracleReport {
        l_max,
        n_edges,
        max_error,
        tolerance: ORACLE_TOLERANCE,
    })
}
