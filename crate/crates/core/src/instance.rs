//! Platform instances: customer and supplier MNL weights plus pair revenues.
//!
//! Customers are indexed `0..n`, suppliers `0..m`. The outside option of every
//! agent has weight 1 and is not stored.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One violated instance invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptySide { side: &'static str },
    Dimension { field: &'static str, expected: String, found: String },
    NonFinite { field: &'static str, row: usize, col: usize },
    NonpositiveCustomerWeight { customer: usize, supplier: usize, value: f64 },
    NonpositiveSupplierWeight { supplier: usize, customer: usize, value: f64 },
    NegativeRevenue { customer: usize, supplier: usize, value: f64 },
    BadRevenueScale(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySide { side } => write!(f, "{side} count must be positive"),
            Violation::Dimension { field, expected, found } => {
                write!(f, "dimension mismatch in `{field}`: expected {expected}, found {found}")
            }
            Violation::NonFinite { field, row, col } => {
                write!(f, "non-finite value in `{field}` at [{row}][{col}]")
            }
            Violation::NonpositiveCustomerWeight { customer, supplier, value } => {
                write!(f, "nonpositive customer weight u[{customer}][{supplier}] = {value}")
            }
            Violation::NonpositiveSupplierWeight { supplier, customer, value } => {
                write!(f, "nonpositive supplier weight w[{supplier}][{customer}] = {value}")
            }
            Violation::NegativeRevenue { customer, supplier, value } => {
                write!(f, "negative revenue r[{customer}][{supplier}] = {value}")
            }
            Violation::BadRevenueScale(v) => write!(f, "revenue_scale must be positive, got {v}"),
        }
    }
}

/// A two-sided platform instance.
///
/// `u[i][j]` is customer `i`'s weight for supplier `j`, `w[j][i]` is supplier
/// `j`'s weight for customer `i`, and `r[i][j]` the revenue of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    m: usize,
    u: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    revenue_scale: f64,
}

/// On-disk layout of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    pub u: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revenue_scale: Option<f64>,
}

impl InstanceFile {
    /// Lists every violated invariant; empty when the data forms a valid instance.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push(Violation::EmptySide { side: "customer" });
        }
        if self.m == 0 {
            out.push(Violation::EmptySide { side: "supplier" });
        }
        check_matrix(&mut out, "u", &self.u, self.n, self.m);
        check_matrix(&mut out, "w", &self.w, self.m, self.n);
        check_matrix(&mut out, "r", &self.r, self.n, self.m);
        for (i, row) in self.u.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v.is_finite() && v <= 0.0 {
                    out.push(Violation::NonpositiveCustomerWeight { customer: i, supplier: j, value: v });
                }
            }
        }
        for (j, row) in self.w.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if v.is_finite() && v <= 0.0 {
                    out.push(Violation::NonpositiveSupplierWeight { supplier: j, customer: i, value: v });
                }
            }
        }
        for (i, row) in self.r.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v.is_finite() && v < 0.0 {
                    out.push(Violation::NegativeRevenue { customer: i, supplier: j, value: v });
                }
            }
        }
        if let Some(s) = self.revenue_scale {
            if !(s.is_finite() && s > 0.0) {
                out.push(Violation::BadRevenueScale(s));
            }
        }
        out
    }
}

fn check_matrix(
    out: &mut Vec<Violation>,
    field: &'static str,
    mat: &[Vec<f64>],
    rows: usize,
    cols: usize,
) {
    if mat.len() != rows || mat.iter().any(|r| r.len() != cols) {
        let found = match mat.iter().map(|r| r.len()).collect::<Vec<_>>() {
            lens if lens.windows(2).all(|w| w[0] == w[1]) => {
                format!("{}x{}", mat.len(), lens.first().copied().unwrap_or(0))
            }
            lens => format!("{} ragged rows {:?}", mat.len(), lens),
        };
        out.push(Violation::Dimension {
            field,
            expected: format!("{rows}x{cols}"),
            found,
        });
    }
    for (a, row) in mat.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation::NonFinite { field, row: a, col: b });
            }
        }
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        let v = f.violations();
        if !v.is_empty() {
            return Err(Error::InvalidInstance(v));
        }
        Ok(Instance {
            n: f.n,
            m: f.m,
            u: f.u,
            w: f.w,
            r: f.r,
            revenue_scale: f.revenue_scale.unwrap_or(1.0),
        })
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            n: inst.n,
            m: inst.m,
            u: inst.u.clone(),
            w: inst.w.clone(),
            r: inst.r.clone(),
            revenue_scale: Some(inst.revenue_scale),
        }
    }
}

/// A permutation of customers under which every supplier's revenue column is
/// nonincreasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SameOrderCertificate(Vec<usize>);

impl SameOrderCertificate {
    /// Wraps `order` after checking it is a permutation that sorts every column of `inst`.
    pub fn verify(inst: &Instance, order: Vec<usize>) -> Option<Self> {
        let mut seen = vec![false; inst.n];
        if order.len() != inst.n {
            return None;
        }
        for &i in &order {
            if i >= inst.n || seen[i] {
                return None;
            }
            seen[i] = true;
        }
        let sorted = order.windows(2).all(|p| (0..inst.m).all(|j| inst.r[p[0]][j] >= inst.r[p[1]][j]));
        sorted.then_some(SameOrderCertificate(order))
    }

    /// An order taken on trust, used by the forced greedy heuristic.
    pub fn unchecked(order: Vec<usize>) -> Self {
        SameOrderCertificate(order)
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    /// `rank[i]` is the position of customer `i` in the order.
    pub fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.0.len()];
        for (pos, &i) in self.0.iter().enumerate() {
            rank[i] = pos;
        }
        rank
    }
}

impl Instance {
    /// Validating constructor; dimensions are taken from `u`.
    pub fn new(u: Vec<Vec<f64>>, w: Vec<Vec<f64>>, r: Vec<Vec<f64>>) -> Result<Self> {
        let n = u.len();
        let m = u.first().map_or(0, |row| row.len());
        InstanceFile { n, m, u, w, r, revenue_scale: None }.try_into()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&InstanceFile::from(self))
            .expect("instance serialization cannot fail");
        s.push('\n');
        s
    }

    /// Re-checks the invariants. Instances built through the public constructors
    /// always pass; this exists for callers holding raw file data.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let v = InstanceFile::from(self).violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn u(&self, i: usize, j: usize) -> f64 {
        self.u[i][j]
    }

    pub fn w(&self, j: usize, i: usize) -> f64 {
        self.w[j][i]
    }

    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.r[i][j]
    }

    /// Customer `i`'s weights over all suppliers.
    pub fn customer_weights(&self, i: usize) -> &[f64] {
        &self.u[i]
    }

    /// Supplier `j`'s weights over all customers.
    pub fn supplier_weights(&self, j: usize) -> &[f64] {
        &self.w[j]
    }

    pub fn revenue_scale(&self) -> f64 {
        self.revenue_scale
    }

    pub fn max_revenue(&self) -> f64 {
        self.r.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Divides all revenues by the largest one so that every expected revenue is at most 1.
    pub fn normalize_revenues(&self) -> Instance {
        let top = self.max_revenue();
        if top <= 0.0 || top == 1.0 {
            return self.clone();
        }
        let mut out = self.clone();
        for row in &mut out.r {
            for v in row.iter_mut() {
                *v /= top;
            }
        }
        out.revenue_scale = self.revenue_scale * top;
        out
    }

    /// True when each supplier sees the same revenue from every customer.
    pub fn is_supplier_uniform(&self) -> bool {
        (0..self.m).all(|j| (1..self.n).all(|i| self.r[i][j] == self.r[0][j]))
    }

    /// Finds a common nonincreasing revenue order of customers, if one exists.
    pub fn detect_same_order(&self) -> Option<SameOrderCertificate> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| {
            for j in 0..self.m {
                match self.r[b][j].partial_cmp(&self.r[a][j]).unwrap_or(Ordering::Equal) {
                    Ordering::Equal => continue,
                    other => return other,
                }
            }
            a.cmp(&b)
        });
        SameOrderCertificate::verify(self, order)
    }

    /// Relabels suppliers: new supplier `k` is old supplier `perm[k]`.
    pub fn permute_suppliers(&self, perm: &[usize]) -> Instance {
        assert_eq!(perm.len(), self.m);
        let mut out = self.clone();
        for i in 0..self.n {
            out.u[i] = perm.iter().map(|&j| self.u[i][j]).collect();
            out.r[i] = perm.iter().map(|&j| self.r[i][j]).collect();
        }
        out.w = perm.iter().map(|&j| self.w[j].clone()).collect();
        out
    }

    /// Three customers, one supplier, weights (1, 1, 3) and revenues (4, 3, 2): the
    /// standard witness that optimal MNL revenue is monotone but not submodular.
    pub fn non_submodular_fixture() -> Instance {
        Instance::new(
            vec![vec![1.0], vec![1.0], vec![1.0]],
            vec![vec![1.0, 1.0, 3.0]],
            vec![vec![4.0], vec![3.0], vec![2.0]],
        )
        .expect("fixture is valid")
    }

    /// One customer, one supplier, all weights and the revenue equal to 1.
    pub fn unit() -> Instance {
        Instance::new(vec![vec![1.0]], vec![vec![1.0]], vec![vec![1.0]]).expect("fixture is valid")
    }
}

/// Random instance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    UniformRandom,
    SameOrderAdditive,
    SameOrderMultiplicative,
    SupplierUniform,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 4] = [
        GeneratorKind::UniformRandom,
        GeneratorKind::SameOrderAdditive,
        GeneratorKind::SameOrderMultiplicative,
        GeneratorKind::SupplierUniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::UniformRandom => "uniform-random",
            GeneratorKind::SameOrderAdditive => "same-order-additive",
            GeneratorKind::SameOrderMultiplicative => "same-order-multiplicative",
            GeneratorKind::SupplierUniform => "supplier-uniform",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

const WEIGHT_LOW: f64 = 0.1;
const WEIGHT_HIGH: f64 = 10.0;

fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(WEIGHT_LOW.ln()..WEIGHT_HIGH.ln()).exp()
}

/// Deterministic random instance of the given family.
pub fn generate(kind: GeneratorKind, n: usize, m: usize, seed: u64) -> Result<Instance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!("instance sides must be positive, got n={n}, m={m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| log_uniform(&mut rng)).collect()).collect();
    let w: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| log_uniform(&mut rng)).collect()).collect();
    let r: Vec<Vec<f64>> = match kind {
        GeneratorKind::UniformRandom => (0..n)
            .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
            .collect(),
        GeneratorKind::SameOrderAdditive | GeneratorKind::SameOrderMultiplicative => {
            let rc: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let rs: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let combine = |a: f64, b: f64| {
                if kind == GeneratorKind::SameOrderAdditive {
                    a + b
                } else {
                    a * b
                }
            };
            rc.iter().map(|&a| rs.iter().map(|&b| combine(a, b)).collect()).collect()
        }
        GeneratorKind::SupplierUniform => {
            let rs: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            vec![rs; n]
        }
    };
    Instance::new(u, w, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(u: f64, w: f64, r: f64) -> InstanceFile {
        InstanceFile { n: 1, m: 1, u: vec![vec![u]], w: vec![vec![w]], r: vec![vec![r]], revenue_scale: None }
    }

    #[test]
    fn minimal_instance_is_valid() {
        assert!(file(1.0, 1.0, 1.0).violations().is_empty());
        assert!(Instance::unit().validate().is_ok());
    }

    #[test]
    fn zero_customer_weight_rejected() {
        let v = file(0.0, 1.0, 1.0).violations();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("nonpositive customer weight"));
    }

    #[test]
    fn negative_revenue_rejected() {
        let v = file(1.0, 1.0, -0.5).violations();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("negative revenue"));
    }

    #[test]
    fn reports_all_violations() {
        let f = InstanceFile {
            n: 2,
            m: 1,
            u: vec![vec![1.0], vec![-1.0]],
            w: vec![vec![0.0]],
            r: vec![vec![-1.0], vec![f64::NAN]],
            revenue_scale: Some(0.0),
        };
        let v = f.violations();
        let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert!(text.iter().any(|t| t.contains("dimension mismatch in `w`")), "{text:?}");
        assert!(text.iter().any(|t| t.contains("nonpositive customer weight")));
        assert!(text.iter().any(|t| t.contains("nonpositive supplier weight")));
        assert!(text.iter().any(|t| t.contains("negative revenue")));
        assert!(text.iter().any(|t| t.contains("non-finite")));
        assert!(text.iter().any(|t| t.contains("revenue_scale")));
    }

    #[test]
    fn normalize_fixture_divides_by_four() {
        let inst = Instance::non_submodular_fixture().normalize_revenues();
        assert_eq!(inst.revenue_scale(), 4.0);
        assert_eq!(inst.r(0, 0), 1.0);
        assert_eq!(inst.r(1, 0), 0.75);
        assert_eq!(inst.r(2, 0), 0.5);
    }

    #[test]
    fn normalize_degenerate_and_idempotent() {
        let zero = Instance::new(vec![vec![1.0]], vec![vec![1.0]], vec![vec![0.0]]).unwrap();
        let z = zero.normalize_revenues();
        assert_eq!(z, zero);
        assert_eq!(z.revenue_scale(), 1.0);
        let once = Instance::non_submodular_fixture().normalize_revenues();
        assert_eq!(once.normalize_revenues(), once);
    }

    #[test]
    fn same_order_additive_identity() {
        let rc = [3.0, 2.0, 1.0];
        let rs = [0.5, 1.5];
        let r: Vec<Vec<f64>> = rc.iter().map(|a| rs.iter().map(|b| a + b).collect()).collect();
        let inst = Instance::new(vec![vec![1.0; 2]; 3], vec![vec![1.0; 3]; 2], r).unwrap();
        assert_eq!(inst.detect_same_order().unwrap().order(), &[0, 1, 2]);
    }

    #[test]
    fn crossing_revenues_have_no_order() {
        let inst = Instance::new(
            vec![vec![1.0; 2]; 2],
            vec![vec![1.0; 2]; 2],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        assert!(inst.detect_same_order().is_none());
        // both permutations fail by hand
        assert!(SameOrderCertificate::verify(&inst, vec![0, 1]).is_none());
        assert!(SameOrderCertificate::verify(&inst, vec![1, 0]).is_none());
    }

    #[test]
    fn single_customer_always_ordered() {
        assert_eq!(Instance::unit().detect_same_order().unwrap().order(), &[0]);
    }

    #[test]
    fn generated_families() {
        let a = generate(GeneratorKind::SameOrderAdditive, 3, 2, 11).unwrap();
        assert!(a.detect_same_order().is_some());
        let s = generate(GeneratorKind::SupplierUniform, 4, 3, 5).unwrap();
        for j in 0..3 {
            assert!((0..4).all(|i| s.r(i, j) == s.r(0, j)));
        }
        assert!(s.is_supplier_uniform());
        assert_eq!(
            generate(GeneratorKind::UniformRandom, 4, 3, 9).unwrap(),
            generate(GeneratorKind::UniformRandom, 4, 3, 9).unwrap()
        );
        for i in 0..4 {
            for j in 0..3 {
                assert!((0.1..=10.0).contains(&s.u(i, j)));
                assert!((0.1..=10.0).contains(&s.w(j, i)));
            }
        }
    }

    #[test]
    fn unknown_kind() {
        assert!(matches!("bogus".parse::<GeneratorKind>(), Err(Error::UnknownKind(_))));
        for k in GeneratorKind::ALL {
            assert_eq!(k.name().parse::<GeneratorKind>().unwrap(), k);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let inst = generate(GeneratorKind::UniformRandom, 3, 2, 42).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn json_rejects_bad_files() {
        assert!(matches!(Instance::from_json("{"), Err(Error::Parse(_))));
        let bad = r#"{"n":1,"m":1,"u":[[0]],"w":[[1]],"r":[[1]]}"#;
        assert!(matches!(Instance::from_json(bad), Err(Error::InvalidInstance(_))));
        let extra = r#"{"n":1,"m":1,"u":[[1]],"w":[[1]],"r":[[1]],"x":1}"#;
        assert!(matches!(Instance::from_json(extra), Err(Error::Parse(_))));
    }
}
