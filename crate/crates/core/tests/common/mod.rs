//! Dense full-vector reference simulator used to check the sparse engine.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qdsim::state::{Basis, Layout, SiteOp, SparseState};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// State vector indexed in mixed radix with site 0 least significant.
#[derive(Debug, Clone)]
pub struct Dense {
    pub dims: Vec<usize>,
    pub amps: Vec<Complex64>,
}

impl Dense {
    pub fn product(dims: &[usize], values: &[usize]) -> Self {
        let size = dims.iter().product();
        let mut amps = vec![c(0.0, 0.0); size];
        amps[Self::index_of(dims, values)] = c(1.0, 0.0);
        Self {
            dims: dims.to_vec(),
            amps,
        }
    }

    fn index_of(dims: &[usize], values: &[usize]) -> usize {
        values.iter().zip(dims).rev().fold(0, |acc, (&v, &d)| acc * d + v)
    }

    pub fn values(&self, mut index: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let v = index % d;
                index /= d;
                v
            })
            .collect()
    }

    fn stride(&self, site: usize) -> usize {
        self.dims[..site].iter().product()
    }

    pub fn apply_matrix(&mut self, site: usize, m: &DMatrix<Complex64>) {
        let d = self.dims[site];
        let stride = self.stride(site);
        let mut out = vec![c(0.0, 0.0); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            if a == c(0.0, 0.0) {
                continue;
            }
            let v = (i / stride) % d;
            let base = i - v * stride;
            for b in 0..d {
                out[base + b * stride] += m[(b, v)] * a;
            }
        }
        self.amps = out;
    }

    pub fn apply_op(&mut self, op: &SiteOp) {
        let m = op_matrix(op, self.dims[op.site()]);
        self.apply_matrix(op.site(), &m);
    }

    pub fn apply_controlled(&mut self, control: usize, family: &[Vec<SiteOp>]) {
        let d = self.dims[control];
        let stride = self.stride(control);
        let mut total = vec![c(0.0, 0.0); self.amps.len()];
        for (value, ops) in family.iter().enumerate().take(d) {
            let mut part = self.clone();
            for (i, a) in part.amps.iter_mut().enumerate() {
                if (i / stride) % d != value {
                    *a = c(0.0, 0.0);
                }
            }
            for op in ops {
                part.apply_op(op);
            }
            for (t, a) in total.iter_mut().zip(part.amps) {
                *t += a;
            }
        }
        self.amps = total;
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        let mut out = vec![c(0.0, 0.0); self.amps.len()];
        for (i, &amp) in self.amps.iter().enumerate() {
            let mut v = self.values(i);
            v.swap(a, b);
            out[Self::index_of(&self.dims, &v)] = amp;
        }
        self.amps = out;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        self.amps.iter_mut().for_each(|a| *a /= n);
    }

    /// Probability of each basis outcome on `site`.
    pub fn probabilities(&self, site: usize, basis: &Basis) -> Vec<f64> {
        let total = self.norm_sqr();
        basis
            .vectors()
            .iter()
            .map(|b| {
                let mut s = self.clone();
                s.apply_matrix(site, &projector(b));
                s.norm_sqr() / total
            })
            .collect()
    }

    pub fn collapse(&mut self, site: usize, basis: &Basis, k: usize) -> f64 {
        let total = self.norm_sqr();
        self.apply_matrix(site, &projector(&basis.vectors()[k]));
        let p = self.norm_sqr() / total;
        self.normalize();
        p
    }

    /// Largest amplitude difference to a sparse state on the same sites.
    pub fn max_diff(&self, sparse: &SparseState, layout: &Layout) -> f64 {
        let mut dev: f64 = 0.0;
        for (i, &a) in self.amps.iter().enumerate() {
            let key = layout.pack(&self.values(i)).unwrap();
            dev = dev.max((a - sparse.amplitude(key)).norm());
        }
        dev
    }
}

pub fn op_matrix(op: &SiteOp, d: usize) -> DMatrix<Complex64> {
    match op {
        SiteOp::Permute { perm, .. } => {
            DMatrix::from_fn(d, d, |i, j| if perm[j] == i { c(1.0, 0.0) } else { c(0.0, 0.0) })
        }
        SiteOp::Diagonal { diag, .. } => DMatrix::from_fn(d, d, |i, j| if i == j { diag[i] } else { c(0.0, 0.0) }),
        SiteOp::Matrix { matrix, .. } => matrix.clone(),
    }
}

fn projector(b: &[Complex64]) -> DMatrix<Complex64> {
    let d = b.len();
    DMatrix::from_fn(d, d, |i, j| b[i] * b[j].conj())
}

pub const TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum Step {
    Permute(usize, u64),
    Diagonal(usize, u64),
    Unitary(usize, u64),
    Controlled(usize, usize, u64),
    Swap(usize, usize),
    Measure(usize, bool, usize),
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    m.qr().q()
}

pub fn random_perm(d: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..d).collect();
    p.shuffle(rng);
    p
}

pub fn random_phases(d: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..d)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..6.3)))
        .collect()
}

pub fn random_op(site: usize, d: usize, rng: &mut ChaCha8Rng) -> SiteOp {
    match rng.random_range(0..3) {
        0 => SiteOp::Permute {
            site,
            perm: random_perm(d, rng),
        },
        1 => SiteOp::Diagonal {
            site,
            diag: random_phases(d, rng),
        },
        _ => SiteOp::Matrix {
            site,
            matrix: random_unitary(d, rng),
        },
    }
}

/// Applies `steps` to a random product state through both engines and
/// compares after every step.
pub fn run_steps(dims: Vec<usize>, start: u64, steps: Vec<Step>) -> Result<(), String> {
    let layout = Arc::new(Layout::new(dims.clone()).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(start);
    let values: Vec<usize> = dims.iter().map(|&d| rng.random_range(0..d)).collect();
    let mut sparse = SparseState::product(layout.clone(), &values).unwrap();
    let mut dense = Dense::product(&dims, &values);
    let n = dims.len();
    for step in steps {
        match step {
            Step::Permute(s, r) => {
                let s = s % n;
                let op = SiteOp::Permute {
                    site: s,
                    perm: random_perm(dims[s], &mut ChaCha8Rng::seed_from_u64(r)),
                };
                sparse.apply_op(&op).unwrap();
                dense.apply_op(&op);
            }
            Step::Diagonal(s, r) => {
                let s = s % n;
                let op = SiteOp::Diagonal {
                    site: s,
                    diag: random_phases(dims[s], &mut ChaCha8Rng::seed_from_u64(r)),
                };
                sparse.apply_op(&op).unwrap();
                dense.apply_op(&op);
            }
            Step::Unitary(s, r) => {
                let s = s % n;
                let u = random_unitary(dims[s], &mut ChaCha8Rng::seed_from_u64(r));
                sparse.apply_site_unitary(s, &u).unwrap();
                dense.apply_matrix(s, &u);
            }
            Step::Controlled(a, b, r) => {
                if n < 2 {
                    continue;
                }
                let control = a % n;
                let target = (control + 1 + b % (n - 1)) % n;
                let mut rng = ChaCha8Rng::seed_from_u64(r);
                let family: Vec<Vec<SiteOp>> = (0..dims[control])
                    .map(|_| vec![random_op(target, dims[target], &mut rng)])
                    .collect();
                sparse.apply_group_controlled(control, |v| family[v].clone()).unwrap();
                dense.apply_controlled(control, &family);
            }
            Step::Swap(a, b) => {
                let (a, b) = (a % n, b % n);
                if dims[a] != dims[b] {
                    ensure(sparse.swap_sites(a, b).is_err(), || {
                        "swap across dimensions accepted".into()
                    })?;
                    continue;
                }
                sparse.swap_sites(a, b).unwrap();
                dense.swap(a, b);
            }
            Step::Measure(s, fourier, k) => {
                let s = s % n;
                let d = dims[s];
                let basis = if fourier {
                    Basis::fourier(d)
                } else {
                    Basis::computational(d)
                };
                let expect = dense.probabilities(s, &basis);
                let got = sparse.outcome_probabilities(s, &basis).unwrap();
                for (x, y) in got.iter().zip(&expect) {
                    ensure((x - y).abs() < TOL, || format!("probabilities {got:?} vs {expect:?}"))?;
                }
                let total: f64 = got.iter().sum();
                ensure((total - 1.0).abs() < TOL, || format!("probabilities sum to {total}"))?;
                let allowed: Vec<usize> = (0..d).filter(|&i| expect[i] > 1e-6).collect();
                let outcome = allowed[k % allowed.len()];
                let (p, collapsed) = sparse.measure_branch(s, &basis, outcome).unwrap();
                let q = dense.collapse(s, &basis, outcome);
                ensure((p - q).abs() < TOL, || format!("branch probability {p} vs {q}"))?;
                sparse = collapsed;
            }
        }
        let norm = sparse.norm_sqr();
        ensure((norm - 1.0).abs() < TOL, || format!("norm {norm}"))?;
        let dev = dense.max_diff(&sparse, &layout);
        ensure(dev < TOL, || format!("deviation {dev:e} after {n} sites {dims:?}"))?;
    }
    Ok(())
}
