//! Finite groups, their irreducible representations and the Fourier basis.
//!
//! Two groups are built in: ℤ₂ (the toric code) and S₃. Elements are plain
//! indices into the multiplication table with the identity at index 0. The
//! S₃ ordering is `e, c+, c-, t0, t1, t2`, composition is `(g·h)(x) = g(h(x))`,
//! `c+` is the cycle 0→1→2→0 and `t_k` is the transposition fixing point `k`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};

/// Index of a group element.
pub type Element = usize;

/// The identity element is always stored at index 0.
pub const IDENTITY: Element = 0;

const MATRIX_TOL: f64 = 1e-12;

/// Irrep labels. For ℤ₂ only `Trivial` and `Sign` exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IrrepLabel {
    /// R₁⁺
    Trivial,
    /// R₁⁻
    Sign,
    /// R₂, the two-dimensional irrep of S₃
    Two,
}

impl IrrepLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            IrrepLabel::Trivial => "R1+",
            IrrepLabel::Sign => "R1-",
            IrrepLabel::Two => "R2",
        }
    }
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IrrepLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r1+" | "r1p" | "trivial" => Ok(IrrepLabel::Trivial),
            "r1-" | "r1m" | "sign" => Ok(IrrepLabel::Sign),
            "r2" | "two" => Ok(IrrepLabel::Two),
            _ => Err(Error::UnknownIrrep(s.to_string())),
        }
    }
}

/// An irreducible unitary representation stored as one matrix per element.
#[derive(Debug, Clone)]
pub struct Irrep {
    pub label: IrrepLabel,
    pub dim: usize,
    pub matrices: Vec<DMatrix<Complex64>>,
}

impl Irrep {
    pub fn matrix(&self, g: Element) -> &DMatrix<Complex64> {
        &self.matrices[g]
    }

    pub fn character(&self, g: Element) -> Complex64 {
        self.matrices[g].trace()
    }
}

/// Outcome of [`FiniteGroup::validate`].
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<(String, bool)>,
    pub violations: Vec<String>,
}

impl ValidationReport {
    fn record(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        self.checks.push((name.to_string(), ok));
        if !ok {
            self.violations.push(format!("{name}: {}", detail()));
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct FiniteGroup {
    name: String,
    element_names: Vec<String>,
    mul_table: Vec<Vec<Element>>,
    inv_table: Vec<Element>,
    class_of: Vec<usize>,
    classes: Vec<Vec<Element>>,
    irreps: Vec<Irrep>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mat2(a: Complex64, b: Complex64, cc: Complex64, d: Complex64) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[a, b, cc, d])
}

fn scalar_irrep(label: IrrepLabel, values: &[f64]) -> Irrep {
    Irrep {
        label,
        dim: 1,
        matrices: values.iter().map(|&v| DMatrix::from_element(1, 1, c(v, 0.0))).collect(),
    }
}

impl FiniteGroup {
    /// The cyclic group of order two: `e, g1`.
    pub fn z2() -> Self {
        Self::from_table(
            "z2",
            &["e", "g1"],
            vec![vec![0, 1], vec![1, 0]],
            vec![
                scalar_irrep(IrrepLabel::Trivial, &[1.0, 1.0]),
                scalar_irrep(IrrepLabel::Sign, &[1.0, -1.0]),
            ],
        )
    }

    /// The symmetric group on three points.
    pub fn s3() -> Self {
        let table = vec![
            vec![0, 1, 2, 3, 4, 5],
            vec![1, 2, 0, 5, 3, 4],
            vec![2, 0, 1, 4, 5, 3],
            vec![3, 4, 5, 0, 1, 2],
            vec![4, 5, 3, 2, 0, 1],
            vec![5, 3, 4, 1, 2, 0],
        ];
        // R2(c_rho) = exp(i rho 2pi/3 sigma_z), R2(t_k) = sigma_x exp(i k 2pi/3 sigma_z)
        let w = |k: f64| Complex64::from_polar(1.0, 2.0 * PI * k / 3.0);
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let two = Irrep {
            label: IrrepLabel::Two,
            dim: 2,
            matrices: vec![
                mat2(one, zero, zero, one),
                mat2(w(1.0), zero, zero, w(-1.0)),
                mat2(w(-1.0), zero, zero, w(1.0)),
                mat2(zero, w(0.0), w(0.0), zero),
                mat2(zero, w(-1.0), w(1.0), zero),
                mat2(zero, w(-2.0), w(2.0), zero),
            ],
        };
        Self::from_table(
            "s3",
            &["e", "c+", "c-", "t0", "t1", "t2"],
            table,
            vec![
                scalar_irrep(IrrepLabel::Trivial, &[1.0; 6]),
                scalar_irrep(IrrepLabel::Sign, &[1.0, 1.0, 1.0, -1.0, -1.0, -1.0]),
                two,
            ],
        )
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "z2" => Ok(Self::z2()),
            "s3" => Ok(Self::s3()),
            _ => Err(Error::UnknownGroup(name.to_string())),
        }
    }

    /// Builds a group from raw tables. Inverses and conjugacy classes are
    /// derived from the table; nothing is validated here, see [`Self::validate`].
    pub fn from_table(name: &str, element_names: &[&str], mul_table: Vec<Vec<Element>>, irreps: Vec<Irrep>) -> Self {
        let order = mul_table.len();
        let inv_table = (0..order)
            .map(|g| (0..order).find(|&h| mul_table[g][h] == IDENTITY).unwrap_or(IDENTITY))
            .collect::<Vec<_>>();
        let mut class_of = vec![usize::MAX; order];
        let mut classes: Vec<Vec<Element>> = Vec::new();
        for g in 0..order {
            if class_of[g] != usize::MAX {
                continue;
            }
            let mut members: Vec<Element> = (0..order)
                .map(|h| {
                    // clamped so that malformed tables still build and fail validation
                    let hg = mul_table[h][g].min(order - 1);
                    mul_table[hg][inv_table[h]].min(order - 1)
                })
                .collect();
            members.sort_unstable();
            members.dedup();
            let idx = classes.len();
            for &m in &members {
                if class_of[m] == usize::MAX {
                    class_of[m] = idx;
                }
            }
            classes.push(members);
        }
        Self {
            name: name.to_string(),
            element_names: element_names.iter().map(|s| s.to_string()).collect(),
            mul_table,
            inv_table,
            class_of,
            classes,
            irreps,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.mul_table.len()
    }

    pub fn element_name(&self, g: Element) -> &str {
        &self.element_names[g]
    }

    pub fn element_by_name(&self, name: &str) -> Result<Element> {
        self.element_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Validation(format!("unknown element {name:?} in {}", self.name)))
    }

    pub fn mul(&self, g: Element, h: Element) -> Result<Element> {
        check_index("element", g, self.order())?;
        check_index("element", h, self.order())?;
        Ok(self.mul_table[g][h])
    }

    pub fn inv(&self, g: Element) -> Result<Element> {
        check_index("element", g, self.order())?;
        Ok(self.inv_table[g])
    }

    /// Unchecked product for hot loops; callers guarantee valid indices.
    #[inline]
    pub fn op(&self, g: Element, h: Element) -> Element {
        self.mul_table[g][h]
    }

    #[inline]
    pub fn inverse(&self, g: Element) -> Element {
        self.inv_table[g]
    }

    /// `{h g h⁻¹ : h ∈ G}`, sorted.
    pub fn conjugacy_class(&self, g: Element) -> Result<Vec<Element>> {
        check_index("element", g, self.order())?;
        Ok(self.classes[self.class_of[g]].clone())
    }

    pub fn class_index(&self, g: Element) -> usize {
        self.class_of[g]
    }

    pub fn classes(&self) -> &[Vec<Element>] {
        &self.classes
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    pub fn irrep(&self, label: IrrepLabel) -> Result<&Irrep> {
        self.irreps
            .iter()
            .find(|r| r.label == label)
            .ok_or_else(|| Error::UnknownIrrep(format!("{label} for group {}", self.name)))
    }

    pub fn character(&self, label: IrrepLabel, g: Element) -> Result<Complex64> {
        check_index("element", g, self.order())?;
        Ok(self.irrep(label)?.character(g))
    }

    /// `(|R|/|G|) · conj(R(g)[μ,ν])`, the coefficient of `g` in `P^R_{μν}`.
    pub fn projector_coefficient(&self, label: IrrepLabel, mu: usize, nu: usize, g: Element) -> Result<Complex64> {
        let irrep = self.irrep(label)?;
        check_index("irrep row", mu, irrep.dim)?;
        check_index("irrep column", nu, irrep.dim)?;
        check_index("element", g, self.order())?;
        let scale = irrep.dim as f64 / self.order() as f64;
        Ok(irrep.matrices[g][(mu, nu)].conj() * scale)
    }

    /// `|j̃⟩ = |G|^{-1/2} Σ_k e^{2πi jk/|G|} |k⟩` over the element ordering.
    pub fn fourier_state(&self, j: usize) -> Result<Vec<Complex64>> {
        let d = self.order();
        check_index("fourier index", j, d)?;
        let norm = 1.0 / (d as f64).sqrt();
        Ok((0..d)
            .map(|k| Complex64::from_polar(norm, 2.0 * PI * (j * k) as f64 / d as f64))
            .collect())
    }

    /// `L_h` as a permutation of element indices: `g ↦ h g`.
    pub fn left_perm(&self, h: Element) -> Vec<Element> {
        (0..self.order()).map(|g| self.mul_table[h][g]).collect()
    }

    /// `R_h` as a permutation of element indices: `g ↦ g h`.
    pub fn right_perm(&self, h: Element) -> Vec<Element> {
        (0..self.order()).map(|g| self.mul_table[g][h]).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.order();
        let t = &self.mul_table;
        let mut report = ValidationReport::default();

        let shape_ok = t.iter().all(|row| row.len() == n && row.iter().all(|&x| x < n));
        report.record("table shape", shape_ok, || "rows must have |G| valid entries".into());
        if !shape_ok {
            return report;
        }

        let identity_ok = (0..n).all(|g| t[IDENTITY][g] == g && t[g][IDENTITY] == g);
        report.record("identity at index 0", identity_ok, || "e·g = g·e = g fails".into());

        let mut latin = true;
        for i in 0..n {
            let mut row_seen = vec![false; n];
            let mut col_seen = vec![false; n];
            for j in 0..n {
                row_seen[t[i][j]] = true;
                col_seen[t[j][i]] = true;
            }
            latin &= row_seen.iter().all(|&x| x) && col_seen.iter().all(|&x| x);
        }
        report.record("rows and columns are permutations", latin, || {
            "latin square property fails".into()
        });

        let mut bad_assoc = None;
        'outer: for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    if t[t[a][b]][cc] != t[a][t[b][cc]] {
                        bad_assoc = Some((a, b, cc));
                        break 'outer;
                    }
                }
            }
        }
        report.record("associativity", bad_assoc.is_none(), || {
            format!("(ab)c != a(bc) at {:?}", bad_assoc.unwrap())
        });

        let inv_ok = (0..n).all(|g| t[g][self.inv_table[g]] == IDENTITY);
        report.record("inverses", inv_ok, || "g·inv(g) != e".into());

        let mut covered = vec![0usize; n];
        for class in &self.classes {
            for &g in class {
                covered[g] += 1;
            }
        }
        let partition_ok = covered.iter().all(|&k| k == 1) && self.classes[0] == vec![IDENTITY];
        report.record("classes partition the group", partition_ok, || {
            "each element must lie in exactly one class; [e] = {e}".into()
        });

        let mut dim_sum = 0;
        for irrep in &self.irreps {
            dim_sum += irrep.dim * irrep.dim;
            let mut hom_dev: f64 = 0.0;
            let mut unit_dev: f64 = 0.0;
            for (g, m) in irrep.matrices.iter().enumerate() {
                let id = DMatrix::<Complex64>::identity(irrep.dim, irrep.dim);
                unit_dev = unit_dev.max(max_abs(&(m.adjoint() * m - id)));
                for (h, mh) in irrep.matrices.iter().enumerate() {
                    hom_dev = hom_dev.max(max_abs(&(m * mh - &irrep.matrices[t[g][h]])));
                }
            }
            report.record(&format!("{} homomorphism", irrep.label), hom_dev <= MATRIX_TOL, || {
                format!("deviation {hom_dev:e}")
            });
            report.record(&format!("{} unitary", irrep.label), unit_dev <= MATRIX_TOL, || {
                format!("deviation {unit_dev:e}")
            });
        }
        report.record("sum of squared irrep dimensions", dim_sum == n, || {
            format!("{dim_sum} != {n}")
        });
        report
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}
