use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BestApproxInstance, ConstraintMap};
use crate::error::{Error, Result};
use crate::linalg::{LinearMap, SparseRowMap, SymMatrix};

/// Binary quadratic data `min xᵀQx + cᵀx, x ∈ {0,1}ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiqData {
    pub n: usize,
    /// Off-diagonal entries `(i, j, Q_ij)` with `i < j`; `Q` is symmetric
    /// with zero diagonal.
    pub q: Vec<(usize, usize, f64)>,
    pub c: DVector<f64>,
}

impl BiqData {
    pub fn q_get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.q
            .iter()
            .find(|&&(a, b, _)| a == i && b == j)
            .map_or(0.0, |t| t.2)
    }
}

/// File contents before the sign flip: `(i, j, W_ij)` 0-based with `i <= j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBiq {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl RawBiq {
    /// The Biq Mac files store the maximization objective, so
    /// `Q_ij = −W_ij` off the diagonal and `c_i = −W_ii`.
    pub fn to_biq(&self) -> BiqData {
        let mut q = Vec::new();
        let mut c = DVector::zeros(self.n);
        for &(i, j, w) in &self.entries {
            if i == j {
                c[i] = -w;
            } else {
                q.push((i, j, -w));
            }
        }
        q.sort_by_key(|&(i, j, _)| (i, j));
        BiqData { n: self.n, q, c }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the Biq Mac sparse format: a header `n nnz` followed by `nnz`
/// lines `i j v` with 1-based indices. Blank lines and lines starting with
/// `#` are skipped.
pub fn parse_raw_biq(text: &str) -> Result<RawBiq> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header line `n nnz`"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(parse_err(hline, "header must be `n nnz`"));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad dimension `{}`", fields[0])))?;
    let nnz: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad entry count `{}`", fields[1])))?;
    if n == 0 {
        return Err(parse_err(hline, "dimension must be positive"));
    }

    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(nnz);
    let mut last_line = hline;
    for (ln, line) in lines {
        last_line = ln;
        if entries.len() == nnz {
            return Err(parse_err(ln, format!("more than the declared {nnz} entries")));
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(ln, "expected `i j value`"));
        }
        let idx = |s: &str| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|_| parse_err(ln, format!("bad index `{s}`")))?;
            if v == 0 || v > n {
                return Err(parse_err(ln, format!("index {v} outside 1..={n}")));
            }
            Ok(v - 1)
        };
        let (a, b) = (idx(f[0])?, idx(f[1])?);
        let v: f64 = f[2]
            .parse()
            .map_err(|_| parse_err(ln, format!("bad value `{}`", f[2])))?;
        if !v.is_finite() {
            return Err(parse_err(ln, "non-finite value"));
        }
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        if !seen.insert((i, j)) {
            return Err(parse_err(ln, format!("duplicate entry ({}, {})", i + 1, j + 1)));
        }
        entries.push((i, j, v));
    }
    if entries.len() != nnz {
        return Err(parse_err(
            last_line,
            format!("expected {nnz} entries, found {}", entries.len()),
        ));
    }
    Ok(RawBiq { n, entries })
}

pub fn parse_biq(text: &str) -> Result<BiqData> {
    Ok(parse_raw_biq(text)?.to_biq())
}

pub fn load_biq(path: impl AsRef<Path>) -> Result<BiqData> {
    parse_biq(&std::fs::read_to_string(path)?)
}

/// Serializes raw data back into the sparse format, with optional leading
/// comment lines.
pub fn write_biq(raw: &RawBiq, comments: &[&str]) -> String {
    let mut s = String::new();
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    let _ = writeln!(s, "{} {}", raw.n, raw.entries.len());
    for &(i, j, v) in &raw.entries {
        let _ = writeln!(s, "{} {} {}", i + 1, j + 1, v);
    }
    s
}

/// Random data with the OR-Library `bqp` parameters: each upper-triangle
/// entry is present with probability `density` and drawn uniformly from the
/// integers in `[−100, 100]` (zeros are dropped).
pub fn generate_bqp(n: usize, density: f64, seed: u64) -> RawBiq {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            if rng.random::<f64>() < density {
                let v = rng.random_range(-100i32..=100);
                if v != 0 {
                    entries.push((i, j, f64::from(v)));
                }
            }
        }
    }
    RawBiq { n, entries }
}

/// The inequality block of ex-BIQ over `𝕊^{n+1}` with `Y = X[0..n, 0..n]`
/// and `x = X[0..n, n]`. For every pair `i < j` (lexicographic) it holds
/// three consecutive rows
///
/// ```text
/// −Y_ij + x_i ≥ 0,   −Y_ij + x_j ≥ 0,   Y_ij − x_i − x_j ≥ −1.
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExBiqPairs {
    /// Number of binary variables.
    pub n: usize,
}

impl ExBiqPairs {
    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j)))
    }

    /// Row offset of pair `(i, j)`, `i < j`.
    pub fn pair_offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        3 * (i * (2 * self.n - i - 1) / 2 + (j - i - 1))
    }
}

impl LinearMap for ExBiqPairs {
    fn rows(&self) -> usize {
        3 * self.n * self.n.saturating_sub(1) / 2
    }

    fn dim(&self) -> usize {
        self.n + 1
    }

    fn apply(&self, x: &SymMatrix) -> DVector<f64> {
        let last = self.n;
        let mut out = DVector::zeros(self.rows());
        for (k, (i, j)) in self.pairs().enumerate() {
            let y = x.get(i, j);
            let xi = x.get(i, last);
            let xj = x.get(j, last);
            out[3 * k] = xi - y;
            out[3 * k + 1] = xj - y;
            out[3 * k + 2] = y - xi - xj;
        }
        out
    }

    fn adjoint_add(&self, z: &DVector<f64>, out: &mut SymMatrix) {
        let last = self.n;
        for (k, (i, j)) in self.pairs().enumerate() {
            let (z1, z2, z3) = (z[3 * k], z[3 * k + 1], z[3 * k + 2]);
            out.add_at(i, j, 0.5 * (z3 - z1 - z2));
            out.add_at(i, last, 0.5 * (z1 - z3));
            out.add_at(j, last, 0.5 * (z2 - z3));
        }
    }
}

/// Assembles the ex-BIQ doubly nonnegative relaxation over `𝕊^{n+1}`:
///
/// * `G = −½ [[Q, c], [cᵀ, 0]]`,
/// * equalities `diag(Y) − x = 0` and `X_{n+1,n+1} = 1`,
/// * the pairwise inequalities of [`ExBiqPairs`].
pub fn build_ex_biq(data: &BiqData, name: impl Into<String>) -> Result<BestApproxInstance> {
    let n = data.n;
    if n < 2 {
        return Err(Error::Invalid(format!(
            "ex-BIQ needs at least two binary variables, got {n}"
        )));
    }
    if data.c.len() != n {
        return Err(Error::Dimension {
            context: "length of c",
            expected: n,
            found: data.c.len(),
        });
    }
    let ns = n + 1;
    let mut g = SymMatrix::zeros(ns);
    for &(i, j, v) in &data.q {
        if i >= j || j >= n {
            return Err(Error::Invalid(format!("bad Q entry ({i}, {j})")));
        }
        g.set(i, j, -0.5 * v);
    }
    for i in 0..n {
        g.set(i, n, -0.5 * data.c[i]);
    }

    let mut rows: Vec<Vec<(usize, usize, f64)>> = (0..n)
        .map(|i| vec![(i, i, 1.0), (i, n, -0.5)])
        .collect();
    rows.push(vec![(n, n, 1.0)]);
    let eq = ConstraintMap::Sparse(SparseRowMap::new(ns, rows)?);
    let mut b = DVector::zeros(ns);
    b[n] = 1.0;

    let pairs = ExBiqPairs { n };
    let m = pairs.rows();
    let d = DVector::from_fn(m, |r, _| if r % 3 == 2 { -1.0 } else { 0.0 });
    BestApproxInstance::new(name, g, eq, b, ConstraintMap::ExBiqPairs(pairs), d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn sign_convention() {
        let d = parse_biq("2 1\n1 2 5\n").unwrap();
        assert_eq!(d.q_get(0, 1), -5.0);
        assert_eq!(d.q_get(1, 0), -5.0);
        let d = parse_biq("1 1\n1 1 3\n").unwrap();
        assert_eq!(d.c[0], -3.0);
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let d = parse_biq("# synthetic\n\n3 2\n1 3 -4\n\n2 2 7\n").unwrap();
        assert_eq!(d.q_get(0, 2), 4.0);
        assert_eq!(d.c.as_slice(), &[0.0, -7.0, 0.0]);
    }

    #[test]
    fn malformed_inputs_report_lines() {
        let cases = [
            ("", 1),
            ("2\n", 1),
            ("2 1\n1 3 5\n", 2),
            ("2 1\n1 x 5\n", 2),
            ("2 2\n1 2 5\n2 1 4\n", 3),
            ("2 1\n1 2\n", 2),
            ("2 2\n1 2 1\n", 2),
            ("2 1\n1 2 1\n2 2 1\n", 3),
        ];
        for (text, line) in cases {
            match parse_biq(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn writer_round_trips() {
        let raw = generate_bqp(12, 0.3, 7);
        let text = write_biq(&raw, &["synthetic"]);
        assert_eq!(parse_raw_biq(&text).unwrap(), raw);
    }

    #[test]
    fn ex_biq_shapes() {
        let data = parse_biq("3 2\n1 2 2\n3 3 1\n").unwrap();
        let inst = build_ex_biq(&data, "t").unwrap();
        assert_eq!(inst.n(), 4);
        assert_eq!(inst.m_eq(), 4);
        assert_eq!(inst.m_ineq(), 9);
        assert_eq!(inst.b.as_slice(), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(inst.g.get(0, 1), 1.0);
        assert_eq!(inst.g.get(2, 3), 0.5);
        assert_eq!(inst.g.get(3, 3), 0.0);
        assert!(build_ex_biq(&parse_biq("1 0\n").unwrap(), "t").is_err());
    }

    #[test]
    fn ex_biq_rows_on_binary_points() {
        // X = [x;1][x;1]ᵀ for binary x satisfies every constraint.
        let n = 4;
        let pairs = ExBiqPairs { n };
        let data = generate_bqp(n, 1.0, 1).to_biq();
        let inst = build_ex_biq(&data, "t").unwrap();
        for mask in 0..(1u32 << n) {
            let v: Vec<f64> = (0..n)
                .map(|i| f64::from((mask >> i) & 1))
                .chain(std::iter::once(1.0))
                .collect();
            let x = SymMatrix::from_upper_fn(n + 1, |i, j| v[i] * v[j]);
            let ax = inst.eq.apply(&x);
            assert!((ax - &inst.b).norm() < 1e-14);
            let bx = pairs.apply(&x);
            assert!((bx - &inst.d).iter().all(|&r| r >= 0.0));
        }
        assert_eq!(pairs.pair_offset(0, 1), 0);
        assert_eq!(pairs.pair_offset(1, 2), 3 * 3);
        assert_eq!(pairs.pair_offset(2, 3), 3 * 5);
    }

    #[test]
    fn equality_gram_is_diagonal() {
        let inst = build_ex_biq(&generate_bqp(5, 0.5, 3).to_biq(), "t").unwrap();
        let g = crate::linalg::build_gram(&inst.eq).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = match (i == j, i) {
                    (true, 5) => 1.0,
                    (true, _) => 1.5,
                    _ => 0.0,
                };
                assert_relative_eq!(g.matrix[(i, j)], expect, epsilon = 1e-15);
            }
        }
    }

    fn sym_strategy(n: usize) -> impl Strategy<Value = SymMatrix> {
        proptest::collection::vec(-5.0..5.0f64, n * n)
            .prop_map(move |v| SymMatrix::from_upper_fn(n, |i, j| v[i * n + j]))
    }

    proptest! {
        #[test]
        fn pairs_adjoint_identity(
            x in sym_strategy(6),
            z in proptest::collection::vec(-5.0..5.0f64, 30),
        ) {
            let pairs = ExBiqPairs { n: 5 };
            let z = DVector::from_vec(z);
            let lhs = pairs.apply(&x).dot(&z);
            let rhs = x.dot(&pairs.adjoint(&z));
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }

        #[test]
        fn pairs_match_sparse_rows(x in sym_strategy(5)) {
            let n = 4;
            let pairs = ExBiqPairs { n };
            let mut rows = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    rows.push(vec![(i, j, -0.5), (i, n, 0.5)]);
                    rows.push(vec![(i, j, -0.5), (j, n, 0.5)]);
                    rows.push(vec![(i, j, 0.5), (i, n, -0.5), (j, n, -0.5)]);
                }
            }
            let sparse = SparseRowMap::new(n + 1, rows).unwrap();
            prop_assert!((pairs.apply(&x) - sparse.apply(&x)).norm() < 1e-12);
        }
    }
}
