//! Sparse state vectors over registers of qudits.
//!
//! A basis configuration assigns one value to every site and is packed into
//! a [`Key`] with `ceil(log2 d)` bits per site. The state stores a sorted list
//! of `(key, amplitude)` pairs; every operation rebuilds the list in key
//! order, so iteration and floating-point reductions are deterministic.
//!
//! Protocol amplitudes are all of the form `±1/sqrt(integer)` times roots of
//! unity, so pruning with the default threshold only clears numerical dust
//! left behind by destructive interference.

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_index, Error, Result};
use crate::group::FiniteGroup;

/// Packed basis configuration.
pub type Key = u128;

pub const DEFAULT_PRUNE_EPSILON: f64 = 1e-12;
/// Outcomes below this probability cannot be selected.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-14;
const ORTHO_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-12;

/// Per-site dimensions and the bit packing derived from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    dims: Vec<usize>,
    shifts: Vec<u32>,
    masks: Vec<Key>,
}

impl Layout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let mut shifts = Vec::with_capacity(dims.len());
        let mut masks = Vec::with_capacity(dims.len());
        let mut offset = 0u32;
        for &d in &dims {
            if d == 0 {
                return Err(Error::Validation("site dimension 0".into()));
            }
            let width = usize::BITS - (d - 1).leading_zeros();
            shifts.push(offset);
            masks.push(((1u128 << width) - 1) << offset);
            offset += width;
            if offset > Key::BITS {
                return Err(Error::KeyOverflow(offset));
            }
        }
        Ok(Self { dims, shifts, masks })
    }

    pub fn uniform(sites: usize, dim: usize) -> Result<Self> {
        Self::new(vec![dim; sites])
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dim(&self, site: usize) -> usize {
        self.dims[site]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn get(&self, key: Key, site: usize) -> usize {
        ((key & self.masks[site]) >> self.shifts[site]) as usize
    }

    #[inline]
    pub fn set(&self, key: Key, site: usize, value: usize) -> Key {
        (key & !self.masks[site]) | ((value as Key) << self.shifts[site])
    }

    /// Key with `site` cleared, used to group configurations that differ only there.
    #[inline]
    pub fn without(&self, key: Key, site: usize) -> Key {
        key & !self.masks[site]
    }

    pub fn pack(&self, values: &[usize]) -> Result<Key> {
        if values.len() != self.len() {
            return Err(Error::Validation(format!(
                "assignment covers {} of {} sites",
                values.len(),
                self.len()
            )));
        }
        let mut key = 0;
        for (site, &v) in values.iter().enumerate() {
            if v >= self.dims[site] {
                return Err(Error::ValueOutOfRange {
                    site,
                    value: v,
                    dim: self.dims[site],
                });
            }
            key = self.set(key, site, v);
        }
        Ok(key)
    }

    pub fn unpack(&self, key: Key) -> Vec<usize> {
        (0..self.len()).map(|s| self.get(key, s)).collect()
    }
}

/// A single-site operation, used inside controlled families and linear maps.
#[derive(Debug, Clone)]
pub enum SiteOp {
    /// Basis permutation `|a⟩ ↦ |perm[a]⟩`.
    Permute { site: usize, perm: Vec<usize> },
    /// Diagonal `|a⟩ ↦ diag[a] |a⟩`.
    Diagonal { site: usize, diag: Vec<Complex64> },
    /// Dense `d×d` matrix acting on the site.
    Matrix { site: usize, matrix: DMatrix<Complex64> },
}

impl SiteOp {
    pub fn site(&self) -> usize {
        match self {
            SiteOp::Permute { site, .. } | SiteOp::Diagonal { site, .. } | SiteOp::Matrix { site, .. } => *site,
        }
    }

    pub fn left_mul(site: usize, group: &FiniteGroup, h: usize) -> Self {
        SiteOp::Permute {
            site,
            perm: group.left_perm(h),
        }
    }

    pub fn right_mul(site: usize, group: &FiniteGroup, h: usize) -> Self {
        SiteOp::Permute {
            site,
            perm: group.right_perm(h),
        }
    }
}

/// An orthonormal measurement basis for one site.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    vectors: Vec<Vec<Complex64>>,
}

impl Basis {
    /// Checks that the vectors form a complete orthonormal set.
    pub fn new(vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let d = vectors.len();
        if vectors.iter().any(|v| v.len() != d) {
            let len = vectors.iter().map(Vec::len).find(|&l| l != d).unwrap_or(d);
            return Err(Error::BasisShape { got: d, len, dim: d });
        }
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let ip = inner_vec(&vectors[i], &vectors[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((ip - Complex64::new(want, 0.0)).norm());
            }
        }
        if dev > ORTHO_TOL {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(Self { vectors })
    }

    pub fn computational(d: usize) -> Self {
        Self {
            vectors: (0..d).map(|k| unit_vec(d, k)).collect(),
        }
    }

    /// The discrete Fourier basis `|j̃⟩`.
    pub fn fourier(d: usize) -> Self {
        let norm = 1.0 / (d as f64).sqrt();
        let vectors = (0..d)
            .map(|j| {
                (0..d)
                    .map(|k| Complex64::from_polar(norm, 2.0 * std::f64::consts::PI * (j * k) as f64 / d as f64))
                    .collect()
            })
            .collect();
        Self { vectors }
    }

    /// Completes a set of orthonormal vectors with Gram–Schmidt over the
    /// computational basis. The given vectors keep their order and come first.
    pub fn completed(partial: Vec<Vec<Complex64>>, d: usize) -> Result<Self> {
        let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(d);
        for v in partial {
            if v.len() != d {
                return Err(Error::BasisShape {
                    got: vectors.len() + 1,
                    len: v.len(),
                    dim: d,
                });
            }
            vectors.push(v);
        }
        for k in 0..d {
            if vectors.len() == d {
                break;
            }
            let mut w = unit_vec(d, k);
            for v in &vectors {
                let ip = inner_vec(v, &w);
                for (x, y) in w.iter_mut().zip(v) {
                    *x -= ip * y;
                }
            }
            let n = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if n > 1e-9 {
                w.iter_mut().for_each(|x| *x /= n);
                vectors.push(w);
            }
        }
        Self::new(vectors)
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

fn unit_vec(d: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// `⟨a|b⟩` for plain vectors.
pub fn inner_vec(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// How measurement outcomes are selected.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Mode {
    /// Born-rule sampling from a seeded ChaCha8 stream.
    Sample(ChaCha8Rng),
    /// Exact branch selection: forced outcomes are consumed in order; once
    /// the queue is empty the first outcome with non-negligible probability
    /// is taken.
    Branch(VecDeque<usize>),
}

impl Mode {
    pub fn sample(seed: u64) -> Self {
        Mode::Sample(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn branch() -> Self {
        Mode::Branch(VecDeque::new())
    }

    pub fn forced(outcomes: impl IntoIterator<Item = usize>) -> Self {
        Mode::Branch(outcomes.into_iter().collect())
    }

    pub fn is_branch(&self) -> bool {
        matches!(self, Mode::Branch(_))
    }

    /// Picks an outcome index given the full probability vector.
    pub fn choose(&mut self, probs: &[f64]) -> Result<usize> {
        match self {
            Mode::Sample(rng) => {
                let total: f64 = probs.iter().sum();
                let u: f64 = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut last = 0;
                for (k, &p) in probs.iter().enumerate() {
                    if p < MIN_BRANCH_PROBABILITY {
                        continue;
                    }
                    acc += p;
                    last = k;
                    if u < acc {
                        return Ok(k);
                    }
                }
                Ok(last)
            }
            Mode::Branch(queue) => {
                if let Some(k) = queue.pop_front() {
                    let p = probs.get(k).copied().unwrap_or(0.0);
                    if p < MIN_BRANCH_PROBABILITY {
                        return Err(Error::ZeroProbability {
                            outcome: k,
                            probability: p,
                        });
                    }
                    Ok(k)
                } else {
                    probs
                        .iter()
                        .position(|&p| p >= MIN_BRANCH_PROBABILITY)
                        .ok_or(Error::Annihilated)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOutcome {
    pub outcome: usize,
    pub probability: f64,
}

/// Neumaier-compensated running sum. Plain summation over ~10⁵ amplitudes
/// drifts by more than the 1e-10 tolerances used throughout.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Accumulator::default();
    xs.into_iter().for_each(|x| acc.add(x));
    acc.value()
}

fn compensated_complex_sum(xs: impl IntoIterator<Item = Complex64>) -> Complex64 {
    let (mut re, mut im) = (Accumulator::default(), Accumulator::default());
    for x in xs {
        re.add(x.re);
        im.add(x.im);
    }
    Complex64::new(re.value(), im.value())
}

struct SiteGroups {
    d: usize,
    rests: Vec<Key>,
    vals: Vec<Complex64>,
}

impl SiteGroups {
    fn iter(&self) -> impl Iterator<Item = (Key, &[Complex64])> {
        self.rests.iter().copied().zip(self.vals.chunks_exact(self.d))
    }
}

/// Diagonal or permutation-averaged projector for expectation values.
pub enum Projector<'a> {
    Identity,
    /// Projector onto configurations accepted by the predicate.
    Diagonal(Box<dyn Fn(Key) -> bool + 'a>),
    /// `(1/n) Σ_k M_k` for basis permutations `M_k` forming a group.
    Average(Vec<Box<dyn Fn(Key) -> Key + 'a>>),
}

#[derive(Debug, Clone)]
pub struct SparseState {
    layout: Arc<Layout>,
    entries: Vec<(Key, Complex64)>,
    prune_epsilon: f64,
}

impl SparseState {
    /// Single-configuration state with amplitude 1.
    pub fn product(layout: Arc<Layout>, values: &[usize]) -> Result<Self> {
        let key = layout.pack(values)?;
        Ok(Self {
            layout,
            entries: vec![(key, Complex64::new(1.0, 0.0))],
            prune_epsilon: DEFAULT_PRUNE_EPSILON,
        })
    }

    /// Builds a state from raw amplitudes, summing duplicate keys. No normalization.
    pub fn from_amplitudes(layout: Arc<Layout>, amplitudes: impl IntoIterator<Item = (Key, Complex64)>) -> Self {
        let mut s = Self {
            layout,
            entries: amplitudes.into_iter().collect(),
            prune_epsilon: DEFAULT_PRUNE_EPSILON,
        };
        s.canonicalize();
        s
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Key, Complex64)] {
        &self.entries
    }

    pub fn prune_epsilon(&self) -> f64 {
        self.prune_epsilon
    }

    pub fn set_prune_epsilon(&mut self, eps: f64) {
        self.prune_epsilon = eps;
    }

    pub fn amplitude(&self, key: Key) -> Complex64 {
        match self.entries.binary_search_by_key(&key, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.entries.iter().map(|(_, a)| a.norm_sqr()))
    }

    /// Rescales to unit norm; returns the squared norm before rescaling.
    pub fn normalize(&mut self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if n2 < MIN_BRANCH_PROBABILITY {
            return Err(Error::Annihilated);
        }
        let inv = 1.0 / n2.sqrt();
        self.entries.iter_mut().for_each(|(_, a)| *a *= inv);
        Ok(n2)
    }

    fn canonicalize(&mut self) {
        self.entries.sort_unstable_by_key(|e| e.0);
        let mut out: Vec<(Key, Complex64)> = Vec::with_capacity(self.entries.len());
        for (k, a) in self.entries.drain(..) {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += a,
                _ => out.push((k, a)),
            }
        }
        out.retain(|(_, a)| a.re != 0.0 || a.im != 0.0);
        self.entries = out;
    }

    fn drop_small(&mut self) {
        let eps = self.prune_epsilon;
        self.entries.retain(|(_, a)| a.norm() >= eps);
    }

    /// Removes amplitudes below the prune threshold and renormalizes.
    pub fn prune(&mut self) -> Result<()> {
        self.drop_small();
        self.normalize().map(|_| ())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        check_index("site", site, self.layout.len())
    }

    /// Rewrites every key with a bijection on configurations.
    pub fn map_keys(&mut self, f: impl Fn(Key) -> Key) -> Result<()> {
        let before = self.entries.len();
        for e in self.entries.iter_mut() {
            e.0 = f(e.0);
        }
        self.entries.sort_unstable_by_key(|e| e.0);
        let distinct = self.entries.windows(2).all(|w| w[0].0 != w[1].0);
        if !distinct || self.entries.len() != before {
            return Err(Error::NotAPermutation);
        }
        Ok(())
    }

    /// Multiplies each amplitude by a configuration-dependent factor.
    pub fn apply_diagonal(&mut self, f: impl Fn(Key) -> Complex64) {
        for e in self.entries.iter_mut() {
            e.1 *= f(e.0);
        }
        self.entries.retain(|(_, a)| a.re != 0.0 || a.im != 0.0);
    }

    pub fn permute_site(&mut self, site: usize, perm: &[usize]) -> Result<()> {
        self.check_site(site)?;
        let layout = self.layout.clone();
        if perm.len() != layout.dim(site) {
            return Err(Error::NotAPermutation);
        }
        self.map_keys(|k| layout.set(k, site, perm[layout.get(k, site)]))
    }

    /// `L_h`: `|g⟩ ↦ |h g⟩` on one site.
    pub fn left_mul(&mut self, site: usize, h: usize, group: &FiniteGroup) -> Result<()> {
        check_index("element", h, group.order())?;
        self.permute_site(site, &group.left_perm(h))
    }

    /// `R_h`: `|g⟩ ↦ |g h⟩` on one site.
    pub fn right_mul(&mut self, site: usize, h: usize, group: &FiniteGroup) -> Result<()> {
        check_index("element", h, group.order())?;
        self.permute_site(site, &group.right_perm(h))
    }

    pub fn swap_sites(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_site(a)?;
        self.check_site(b)?;
        let layout = self.layout.clone();
        if layout.dim(a) != layout.dim(b) {
            return Err(Error::Validation("swap between sites of different dimension".into()));
        }
        self.map_keys(|k| {
            let (x, y) = (layout.get(k, a), layout.get(k, b));
            layout.set(layout.set(k, a, y), b, x)
        })
    }

    /// Applies an arbitrary matrix to one site. Linear, no renormalization.
    pub fn apply_site_matrix(&mut self, site: usize, matrix: &DMatrix<Complex64>) -> Result<()> {
        self.check_site(site)?;
        let d = self.layout.dim(site);
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, site dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let layout = self.layout.clone();
        let mut out = Vec::with_capacity(self.entries.len() * 2);
        for &(k, amp) in &self.entries {
            let a = layout.get(k, site);
            for b in 0..d {
                let m = matrix[(b, a)];
                if m.re != 0.0 || m.im != 0.0 {
                    out.push((layout.set(k, site, b), m * amp));
                }
            }
        }
        self.entries = out;
        self.canonicalize();
        Ok(())
    }

    /// Applies a unitary to one site; rejects non-unitary matrices.
    pub fn apply_site_unitary(&mut self, site: usize, u: &DMatrix<Complex64>) -> Result<()> {
        if u.nrows() != u.ncols() {
            return Err(Error::NotUnitary(f64::INFINITY));
        }
        let dev = (u.adjoint() * u - DMatrix::identity(u.nrows(), u.ncols()))
            .iter()
            .fold(0.0f64, |m, x| m.max(x.norm()));
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        self.apply_site_matrix(site, u)?;
        self.prune()
    }

    pub fn apply_op(&mut self, op: &SiteOp) -> Result<()> {
        match op {
            SiteOp::Permute { site, perm } => self.permute_site(*site, perm),
            SiteOp::Diagonal { site, diag } => {
                self.check_site(*site)?;
                if diag.len() != self.layout.dim(*site) {
                    return Err(Error::Validation("diagonal length mismatch".into()));
                }
                let layout = self.layout.clone();
                let s = *site;
                self.apply_diagonal(|k| diag[layout.get(k, s)]);
                Ok(())
            }
            SiteOp::Matrix { site, matrix } => self.apply_site_matrix(*site, matrix),
        }
    }

    /// `Σ_h |h⟩⟨h|_control ⊗ family(h)`, where each branch is a sequence of
    /// site operations on sites other than the control.
    pub fn apply_group_controlled(&mut self, control: usize, family: impl Fn(usize) -> Vec<SiteOp>) -> Result<()> {
        self.check_site(control)?;
        let d = self.layout.dim(control);
        let branches: Vec<Vec<SiteOp>> = (0..d).map(&family).collect();
        for ops in &branches {
            for op in ops {
                if op.site() == control {
                    return Err(Error::SiteOverlap(control));
                }
            }
        }
        let mut parts: Vec<Vec<(Key, Complex64)>> = vec![Vec::new(); d];
        for &(k, a) in &self.entries {
            parts[self.layout.get(k, control)].push((k, a));
        }
        let mut out = Vec::with_capacity(self.entries.len());
        for (value, entries) in parts.into_iter().enumerate() {
            if entries.is_empty() {
                continue;
            }
            let mut sub = SparseState {
                layout: self.layout.clone(),
                entries,
                prune_epsilon: self.prune_epsilon,
            };
            for op in &branches[value] {
                sub.apply_op(op)?;
            }
            out.extend(sub.entries);
        }
        self.entries = out;
        self.canonicalize();
        self.drop_small();
        Ok(())
    }

    /// Applies a product of (possibly non-unitary) site operations, then
    /// renormalizes. Returns the post-selection weight `‖O ψ‖²`.
    pub fn apply_linear(&mut self, ops: &[SiteOp]) -> Result<f64> {
        let before = self.norm_sqr();
        for op in ops {
            self.apply_op(op)?;
        }
        self.drop_small();
        let after = self.norm_sqr();
        if after < MIN_BRANCH_PROBABILITY * before {
            return Err(Error::Annihilated);
        }
        self.normalize()?;
        Ok(after / before)
    }

    fn check_basis(&self, site: usize, basis: &Basis) -> Result<()> {
        self.check_site(site)?;
        let d = self.layout.dim(site);
        if basis.len() != d {
            return Err(Error::BasisShape {
                got: basis.len(),
                len: basis.vectors().first().map_or(0, Vec::len),
                dim: d,
            });
        }
        Ok(())
    }

    /// Groups amplitudes by the configuration of every other site, in key
    /// order of the remaining sites.
    fn site_groups(&self, site: usize) -> SiteGroups {
        let d = self.layout.dim(site);
        let mut tagged: Vec<(Key, usize, Complex64)> = self
            .entries
            .iter()
            .map(|&(k, a)| (self.layout.without(k, site), self.layout.get(k, site), a))
            .collect();
        tagged.sort_unstable_by_key(|t| (t.0, t.1));
        let mut rests = Vec::new();
        let mut vals = Vec::new();
        for (rest, v, a) in tagged {
            if rests.last() != Some(&rest) {
                rests.push(rest);
                vals.resize(vals.len() + d, Complex64::new(0.0, 0.0));
            }
            let base = vals.len() - d;
            vals[base + v] += a;
        }
        SiteGroups { d, rests, vals }
    }

    /// Born probabilities of every basis outcome on `site`.
    pub fn outcome_probabilities(&self, site: usize, basis: &Basis) -> Result<Vec<f64>> {
        self.check_basis(site, basis)?;
        let groups = self.site_groups(site);
        let total = self.norm_sqr();
        let mut acc = vec![Accumulator::default(); basis.len()];
        for (_, w) in groups.iter() {
            for (p, b) in acc.iter_mut().zip(basis.vectors()) {
                p.add(inner_vec(b, w).norm_sqr());
            }
        }
        Ok(acc.iter().map(|p| p.value() / total).collect())
    }

    /// Projects onto outcome `k` without renormalizing.
    fn project(&self, site: usize, basis: &Basis, k: usize) -> Vec<(Key, Complex64)> {
        let b = &basis.vectors()[k];
        let groups = self.site_groups(site);
        let mut out = Vec::with_capacity(self.entries.len());
        for (rest, w) in groups.iter() {
            let c = inner_vec(b, w);
            if c.norm() == 0.0 {
                continue;
            }
            for (a, bv) in b.iter().enumerate() {
                if bv.re != 0.0 || bv.im != 0.0 {
                    out.push((self.layout.set(rest, site, a), bv * c));
                }
            }
        }
        out
    }

    /// Collapsed copy for outcome `k` and its probability.
    pub fn measure_branch(&self, site: usize, basis: &Basis, k: usize) -> Result<(f64, SparseState)> {
        self.check_basis(site, basis)?;
        check_index("outcome", k, basis.len())?;
        let total = self.norm_sqr();
        let mut s = SparseState {
            layout: self.layout.clone(),
            entries: self.project(site, basis, k),
            prune_epsilon: self.prune_epsilon,
        };
        s.canonicalize();
        s.drop_small();
        let p = s.norm_sqr() / total;
        if p < MIN_BRANCH_PROBABILITY {
            return Err(Error::ZeroProbability {
                outcome: k,
                probability: p,
            });
        }
        s.normalize()?;
        Ok((p, s))
    }

    /// Projective measurement of one site; the state collapses in place.
    pub fn measure(&mut self, site: usize, basis: &Basis, mode: &mut Mode) -> Result<MeasurementOutcome> {
        let probs = self.outcome_probabilities(site, basis)?;
        let k = mode.choose(&probs)?;
        let (p, s) = self.measure_branch(site, basis, k)?;
        *self = s;
        Ok(MeasurementOutcome {
            outcome: k,
            probability: p,
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SparseState) -> Result<Complex64> {
        if !Arc::ptr_eq(&self.layout, &other.layout) && *self.layout != *other.layout {
            return Err(Error::LayoutMismatch);
        }
        let (mut i, mut j) = (0, 0);
        let (mut re, mut im) = (Accumulator::default(), Accumulator::default());
        while i < self.entries.len() && j < other.entries.len() {
            let (ka, a) = self.entries[i];
            let (kb, b) = other.entries[j];
            match ka.cmp(&kb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let t = a.conj() * b;
                    re.add(t.re);
                    im.add(t.im);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(Complex64::new(re.value(), im.value()))
    }

    /// `|⟨self|other⟩|`, equal to 1 for states equal up to global phase.
    pub fn overlap(&self, other: &SparseState) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    /// Largest amplitude difference, for exact (phase-sensitive) comparisons.
    pub fn max_amplitude_diff(&self, other: &SparseState) -> f64 {
        let mut dev: f64 = 0.0;
        for &(k, a) in &self.entries {
            dev = dev.max((a - other.amplitude(k)).norm());
        }
        for &(k, b) in &other.entries {
            dev = dev.max((b - self.amplitude(k)).norm());
        }
        dev
    }

    /// `⟨ψ|P|ψ⟩` for a normalized state.
    pub fn expectation(&self, projector: &Projector<'_>) -> f64 {
        match projector {
            Projector::Identity => self.norm_sqr(),
            Projector::Diagonal(pred) => {
                compensated_sum(self.entries.iter().filter(|(k, _)| pred(*k)).map(|(_, a)| a.norm_sqr()))
            }
            Projector::Average(maps) => {
                let total = compensated_complex_sum(
                    maps.iter()
                        .flat_map(|m| self.entries.iter().map(move |&(k, a)| self.amplitude(m(k)).conj() * a)),
                );
                total.re / maps.len() as f64
            }
        }
    }

    /// Marginal distribution of one site in the computational basis.
    pub fn site_distribution(&self, site: usize) -> Result<Vec<f64>> {
        self.check_site(site)?;
        let mut p = vec![Accumulator::default(); self.layout.dim(site)];
        for &(k, a) in &self.entries {
            p[self.layout.get(k, site)].add(a.norm_sqr());
        }
        Ok(p.iter().map(Accumulator::value).collect())
    }

    /// If `site` is in a pure product state with the rest, returns its
    /// normalized state vector (fixed up to a phase).
    pub fn site_pure_state(&self, site: usize) -> Result<Option<Vec<Complex64>>> {
        self.check_site(site)?;
        let groups = self.site_groups(site);
        let Some((_, u0)) = groups.iter().next() else {
            return Ok(None);
        };
        let n = u0.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let u: Vec<Complex64> = u0.iter().map(|x| x / n).collect();
        let mut residual = 0.0;
        for (_, w) in groups.iter() {
            let c = inner_vec(&u, w);
            residual += w.iter().zip(&u).map(|(x, y)| (x - c * y).norm_sqr()).sum::<f64>();
        }
        if residual > 1e-20 * self.norm_sqr().max(1.0) {
            return Ok(None);
        }
        Ok(Some(u))
    }

    /// Replaces a disentangled site by the basis state `value`.
    pub fn reset_site(&mut self, site: usize, value: usize) -> Result<()> {
        let u = self.site_pure_state(site)?.ok_or_else(|| Error::AncillaNotReady {
            site,
            reason: "entangled with the rest of the register".into(),
        })?;
        if value >= self.layout.dim(site) {
            return Err(Error::ValueOutOfRange {
                site,
                value,
                dim: self.layout.dim(site),
            });
        }
        let entries = self
            .site_groups(site)
            .iter()
            .map(|(rest, w)| (self.layout.set(rest, site, value), inner_vec(&u, w)))
            .collect();
        self.entries = entries;
        self.canonicalize();
        self.drop_small();
        Ok(())
    }

    /// The state on the leading sites of `prefix`, which must match this
    /// layout site by site. Every other site has to be in `|0⟩`.
    pub fn restrict_to_prefix(&self, prefix: Arc<Layout>) -> Result<SparseState> {
        let n = prefix.len();
        if n > self.layout.len() || prefix.dims() != &self.layout.dims()[..n] {
            return Err(Error::LayoutMismatch);
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for &(k, a) in &self.entries {
            let mut rest = k;
            for s in 0..n {
                rest = self.layout.without(rest, s);
            }
            if rest != 0 {
                let site = (n..self.layout.len())
                    .find(|&s| self.layout.get(k, s) != 0)
                    .unwrap_or(n);
                return Err(Error::AncillaNotReady {
                    site,
                    reason: "not in |0⟩".into(),
                });
            }
            entries.push((k, a));
        }
        Ok(SparseState {
            layout: prefix,
            entries,
            prune_epsilon: self.prune_epsilon,
        })
    }

    /// Text dump: one line per configuration, `site-values : re : im`, in key order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for &(k, a) in &self.entries {
            let vals: Vec<String> = self.layout.unpack(k).iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("{} : {:+.15e} : {:+.15e}\n", vals.join(" "), a.re, a.im));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hadamard() -> DMatrix<Complex64> {
        let s = 1.0 / 2f64.sqrt();
        DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
    }

    #[test]
    fn layout_packing() {
        let l = Layout::new(vec![6, 2, 6, 3]).unwrap();
        let vals = vec![5, 1, 3, 2];
        assert_eq!(l.unpack(l.pack(&vals).unwrap()), vals);
        assert!(l.pack(&[6, 0, 0, 0]).is_err());
        assert!(l.pack(&[0, 0]).is_err());
        assert!(Layout::uniform(43, 6).is_err());
        assert!(Layout::uniform(42, 6).is_ok());
    }

    #[test]
    fn product_state_is_single_entry() {
        let l = Arc::new(Layout::uniform(4, 6).unwrap());
        let s = SparseState::product(l, &[0; 4]).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hadamard_and_inverse() {
        let l = Arc::new(Layout::uniform(2, 2).unwrap());
        let mut s = SparseState::product(l, &[0, 0]).unwrap();
        let orig = s.clone();
        let h = hadamard();
        s.apply_site_unitary(0, &h).unwrap();
        assert_eq!(s.len(), 2);
        for &(_, a) in s.entries() {
            assert!((a - c(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-15);
        }
        s.apply_site_unitary(0, &h.adjoint()).unwrap();
        assert!(s.max_amplitude_diff(&orig) < 1e-12);
        let bad = DMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(s.apply_site_unitary(0, &bad), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn left_and_right_multiplication_commute() {
        let g = FiniteGroup::s3();
        let l = Arc::new(Layout::uniform(1, 6).unwrap());
        for x in 0..6 {
            for h in 0..6 {
                for k in 0..6 {
                    let mut a = SparseState::product(l.clone(), &[x]).unwrap();
                    let mut b = a.clone();
                    a.left_mul(0, h, &g).unwrap();
                    a.right_mul(0, k, &g).unwrap();
                    b.right_mul(0, k, &g).unwrap();
                    b.left_mul(0, h, &g).unwrap();
                    assert_eq!(a.entries(), b.entries());
                }
            }
        }
        let z2 = FiniteGroup::z2();
        let l2 = Arc::new(Layout::uniform(1, 2).unwrap());
        let mut s = SparseState::product(l2, &[0]).unwrap();
        s.left_mul(0, 1, &z2).unwrap();
        assert_eq!(s.layout().get(s.entries()[0].0, 0), 1);
    }

    #[test]
    fn controlled_x_makes_bell_pair() {
        let z2 = FiniteGroup::z2();
        let l = Arc::new(Layout::uniform(2, 2).unwrap());
        let mut s = SparseState::product(l.clone(), &[0, 0]).unwrap();
        s.apply_site_unitary(0, &hadamard()).unwrap();
        s.apply_group_controlled(0, |h| vec![SiteOp::left_mul(1, &z2, h)])
            .unwrap();
        let k00 = l.pack(&[0, 0]).unwrap();
        let k11 = l.pack(&[1, 1]).unwrap();
        let s2 = 1.0 / 2f64.sqrt();
        assert!((s.amplitude(k00) - c(s2, 0.0)).norm() < 1e-15);
        assert!((s.amplitude(k11) - c(s2, 0.0)).norm() < 1e-15);
        assert_eq!(s.len(), 2);
        let err = s.apply_group_controlled(0, |h| vec![SiteOp::left_mul(0, &z2, h)]);
        assert!(matches!(err, Err(Error::SiteOverlap(0))));
    }

    #[test]
    fn linear_maps_report_survival() {
        let l = Arc::new(Layout::uniform(1, 6).unwrap());
        let mut s = SparseState::product(l.clone(), &[0]).unwrap();
        s.apply_site_unitary(
            0,
            &DMatrix::from_fn(6, 6, |i, j| {
                Complex64::from_polar(1.0 / 6f64.sqrt(), 2.0 * std::f64::consts::PI * (i * j) as f64 / 6.0)
            }),
        )
        .unwrap();
        let w = SiteOp::Diagonal {
            site: 0,
            diag: [2.0, -1.0, -1.0, 0.0, 0.0, 0.0].iter().map(|&x| c(x, 0.0)).collect(),
        };
        let p = s.apply_linear(&[w]).unwrap();
        // (4 + 1 + 1) / 6
        assert!((p - 1.0).abs() < 1e-12);
        assert_eq!(s.len(), 3);

        let mut t = SparseState::product(l, &[3]).unwrap();
        let kill = SiteOp::Diagonal {
            site: 0,
            diag: [1.0, 1.0, 1.0, 0.0, 0.0, 0.0].iter().map(|&x| c(x, 0.0)).collect(),
        };
        assert!(matches!(t.apply_linear(&[kill]), Err(Error::Annihilated)));
    }

    #[test]
    fn measurement_in_x_basis() {
        let l = Arc::new(Layout::uniform(1, 2).unwrap());
        let mut s = SparseState::product(l, &[1]).unwrap();
        s.apply_site_unitary(0, &hadamard()).unwrap();
        let pm = Basis::fourier(2);
        let probs = s.outcome_probabilities(0, &pm).unwrap();
        assert!((probs[1] - 1.0).abs() < 1e-12);
        let out = s.measure(0, &pm, &mut Mode::branch()).unwrap();
        assert_eq!(out.outcome, 1);
        assert!((out.probability - 1.0).abs() < 1e-12);
        assert!(s.measure_branch(0, &pm, 0).is_err());
    }

    #[test]
    fn basis_validation() {
        assert!(Basis::new(vec![vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(-1.0, 0.0)]]).is_err());
        let b = Basis::completed(vec![vec![c(0.6, 0.0), c(0.8, 0.0), c(0.0, 0.0)]], 3).unwrap();
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn prune_clears_dust() {
        let l = Arc::new(Layout::uniform(2, 2).unwrap());
        let mut s = SparseState::from_amplitudes(l, vec![(0, c(1.0, 0.0)), (1, c(1e-18, 0.0)), (2, c(0.0, 1e-3))]);
        s.prune().unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let before = s.clone();
        s.prune().unwrap();
        assert_eq!(before.entries(), s.entries());
    }

    #[test]
    fn inner_products() {
        let g = FiniteGroup::s3();
        let l = Arc::new(Layout::uniform(3, 6).unwrap());
        let a = SparseState::product(l.clone(), &[0, 1, 2]).unwrap();
        let mut b = a.clone();
        assert!((a.inner(&b).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        b.left_mul(1, 3, &g).unwrap();
        assert_eq!(a.inner(&b).unwrap().norm(), 0.0);
        let other = Arc::new(Layout::uniform(3, 2).unwrap());
        let z = SparseState::product(other, &[0, 0, 0]).unwrap();
        assert!(matches!(a.inner(&z), Err(Error::LayoutMismatch)));
    }

    #[test]
    fn reset_requires_product_state() {
        let z2 = FiniteGroup::z2();
        let l = Arc::new(Layout::uniform(2, 2).unwrap());
        let mut s = SparseState::product(l, &[0, 0]).unwrap();
        s.apply_site_unitary(0, &hadamard()).unwrap();
        assert!(s.site_pure_state(0).unwrap().is_some());
        let mut bell = s.clone();
        bell.apply_group_controlled(0, |h| vec![SiteOp::left_mul(1, &z2, h)])
            .unwrap();
        assert!(bell.site_pure_state(0).unwrap().is_none());
        assert!(bell.reset_site(0, 0).is_err());
        s.reset_site(0, 1).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.layout().get(s.entries()[0].0, 0), 1);
    }

    #[test]
    fn dump_is_sorted() {
        let l = Arc::new(Layout::uniform(2, 2).unwrap());
        let s = SparseState::from_amplitudes(l, vec![(3, c(0.6, 0.0)), (0, c(0.8, 0.0))]);
        let d = s.dump();
        let lines: Vec<&str> = d.lines().collect();
        assert!(lines[0].starts_with("0 0 :"));
        assert!(lines[1].starts_with("1 1 :"));
    }
}
