//! Frozen-set construction.
//!
//! Covers Bhattacharyya reliability ordering, the frozen set of a product of two polar codes,
//! the per-row / per-column component codes of a polar code viewed as an irregular product
//! code, and the hybrid design that freezes extra least-reliable positions on top of a
//! product frozen set.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::polar::{log2_exact, BitMatrix, NatMatrix};

/// Sorted set of frozen input positions of a length-`N` polar code.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrozenSet {
    indices: Vec<usize>,
    code_length: usize,
}

impl FrozenSet {
    /// Builds a frozen set. Indices may come in any order but must be distinct and `< N`.
    pub fn new(code_length: usize, mut indices: Vec<usize>) -> Result<Self> {
        if code_length == 0 {
            return invalid("code length must be positive");
        }
        indices.sort_unstable();
        if let Some(&bad) = indices.iter().find(|&&i| i >= code_length) {
            return invalid(format!("frozen index {bad} out of range for N={code_length}"));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return invalid(format!("duplicate frozen index {}", w[0]));
        }
        Ok(Self { indices, code_length })
    }

    pub fn empty(code_length: usize) -> Self {
        Self { indices: Vec::new(), code_length }
    }

    pub fn all(code_length: usize) -> Self {
        Self { indices: (0..code_length).collect(), code_length }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn code_length(&self) -> usize {
        self.code_length
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Number of information bits `K = N - |F|`.
    pub fn dimension(&self) -> usize {
        self.code_length - self.indices.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn is_subset_of(&self, other: &FrozenSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    /// `mask[i]` is true when position `i` is frozen.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.code_length];
        for &i in &self.indices {
            mask[i] = true;
        }
        mask
    }

    /// Unfrozen positions, ascending.
    pub fn information_positions(&self) -> Vec<usize> {
        let mask = self.mask();
        (0..self.code_length).filter(|&i| !mask[i]).collect()
    }

    pub fn indicator(&self) -> IndicatorVector {
        IndicatorVector(self.mask().into_iter().map(|f| u8::from(!f)).collect())
    }

    /// Serializes as `N=<n> K=<k>` followed by one index per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("N={} K={}\n", self.code_length, self.dimension());
        for i in &self.indices {
            writeln!(out, "{i}").unwrap();
        }
        out
    }

    /// Parses the format written by [`FrozenSet::to_text`]. Indices must be strictly ascending
    /// and there must be exactly `N - K` of them.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (line_no, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let (n, k) = parse_header(header, line_no)?;
        let k = k.ok_or(Error::Parse { line: line_no, message: "header lacks K=".into() })?;
        if k > n {
            return Err(Error::Parse { line: line_no, message: format!("K={k} exceeds N={n}") });
        }
        let mut indices = Vec::with_capacity(n - k);
        for (line_no, line) in lines {
            let idx = parse_index(line, line_no)?;
            if indices.last().is_some_and(|&prev| prev >= idx) {
                return Err(Error::Parse {
                    line: line_no,
                    message: "indices must be strictly ascending".into(),
                });
            }
            indices.push(idx);
        }
        if indices.len() != n - k {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected {} frozen indices, found {}", n - k, indices.len()),
            });
        }
        Self::new(n, indices)
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, Option<usize>)> {
    let mut n = None;
    let mut k = None;
    for token in line.split_whitespace() {
        let (key, value) = token.split_once('=').ok_or(Error::Parse {
            line: line_no,
            message: format!("expected key=value, got {token:?}"),
        })?;
        let value: usize = value.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad integer {value:?}"),
        })?;
        match key {
            "N" => n = Some(value),
            "K" => k = Some(value),
            other => {
                return Err(Error::Parse { line: line_no, message: format!("unknown key {other}") })
            }
        }
    }
    let n = n.ok_or(Error::Parse { line: line_no, message: "header lacks N=".into() })?;
    Ok((n, k))
}

fn parse_index(line: &str, line_no: usize) -> Result<usize> {
    line.parse()
        .map_err(|_| Error::Parse { line: line_no, message: format!("bad index {line:?}") })
}

/// Zero/one vector with zeros exactly on the frozen positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorVector(pub Vec<u8>);

impl IndicatorVector {
    /// Positions of the zero entries.
    pub fn zeros(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &z)| z == 0).map(|(i, _)| i).collect()
    }

    pub fn to_frozen_set(&self) -> FrozenSet {
        FrozenSet { indices: self.zeros(), code_length: self.0.len() }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &IndicatorVector) -> IndicatorVector {
        IndicatorVector(self.0.iter().flat_map(|&a| other.0.iter().map(move |&b| a & b)).collect())
    }
}

/// Input positions ordered from least to most reliable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityOrder {
    order: Vec<usize>,
    /// Initial Bhattacharyya value, `None` when the order was supplied externally.
    design_parameter: Option<f64>,
}

impl ReliabilityOrder {
    /// Wraps an externally supplied order, which must be a permutation of `0..N`.
    pub fn from_permutation(order: Vec<usize>) -> Result<Self> {
        if log2_exact(order.len()).is_none() {
            return invalid(format!("order length {} is not a power of two", order.len()));
        }
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || std::mem::replace(&mut seen[i], true) {
                return invalid(format!("order is not a permutation (index {i})"));
            }
        }
        Ok(Self { order, design_parameter: None })
    }

    /// Parses `N=<n>` (an optional `K=` is ignored) followed by the `N` indices, least
    /// reliable first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (line_no, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let (n, _) = parse_header(header, line_no)?;
        let order = lines.map(|(no, l)| parse_index(l, no)).collect::<Result<Vec<_>>>()?;
        if order.len() != n {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected {n} indices, found {}", order.len()),
            });
        }
        Self::from_permutation(order)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("N={}\n", self.order.len());
        for i in &self.order {
            writeln!(out, "{i}").unwrap();
        }
        out
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn design_parameter(&self) -> Option<f64> {
        self.design_parameter
    }
}

/// Natural logarithms of the Bhattacharyya parameters of the `N` synthesized bit channels,
/// starting from `z0` and applying `z -> 2z - z^2` (bit 0) or `z -> z^2` (bit 1) for each
/// index bit, most significant first.
pub fn bhattacharyya_log_parameters(n: usize, z0: f64) -> Result<Vec<f64>> {
    let levels = log2_exact(n).ok_or_else(|| {
        Error::InvalidArgument(format!("code length {n} is not a power of two"))
    })?;
    if !(z0 > 0.0 && z0 < 1.0) {
        return invalid(format!("initial Bhattacharyya parameter {z0} must lie in (0, 1)"));
    }
    let mut log_z = vec![z0.ln()];
    for _ in 0..levels {
        log_z = log_z
            .iter()
            // ln(2z - z^2) = ln z + ln(1 + (1 - z)), kept accurate for z close to 1
            .flat_map(|&lz| [lz + (-lz.exp_m1()).ln_1p(), 2.0 * lz])
            .collect();
    }
    Ok(log_z)
}

/// Reliability order from the Bhattacharyya recursion. Equal parameters are ordered by
/// ascending index.
pub fn bhattacharyya_order(n: usize, z0: f64) -> Result<ReliabilityOrder> {
    let log_z = bhattacharyya_log_parameters(n, z0)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| log_z[b].total_cmp(&log_z[a]).then(a.cmp(&b)));
    Ok(ReliabilityOrder { order, design_parameter: Some(z0) })
}

/// Freezes the `N - K` least reliable positions.
pub fn frozen_from_order(order: &ReliabilityOrder, k: usize) -> Result<FrozenSet> {
    let n = order.len();
    if k > n {
        return invalid(format!("dimension K={k} exceeds N={n}"));
    }
    FrozenSet::new(n, order.order[..n - k].to_vec())
}

/// Frozen set of the product of a row code and a column code: the zeros of `z_c ⊗ z_r`.
pub fn product_frozen_set(row: &FrozenSet, col: &FrozenSet) -> FrozenSet {
    col.indicator().kron(&row.indicator()).to_frozen_set()
}

/// `N_c x N_r` indicator matrix `Z` of a frozen set, reshaped row by row.
pub fn indicator_matrix(frozen: &FrozenSet, n_r: usize, n_c: usize) -> Result<NatMatrix> {
    check_split(frozen.code_length(), n_r, n_c)?;
    let data = frozen.indicator().0.into_iter().map(u32::from).collect();
    NatMatrix::from_vec(n_c, n_r, data)
}

fn check_split(n: usize, n_r: usize, n_c: usize) -> Result<()> {
    if log2_exact(n_r).is_none() || log2_exact(n_c).is_none() {
        return invalid(format!("component lengths {n_r}, {n_c} must be powers of two"));
    }
    if n_r * n_c != n {
        return invalid(format!("{n_r} x {n_c} does not split a length-{n} code"));
    }
    Ok(())
}

/// Counts of unfrozen input bits feeding every virtual input bit: returns `(Z_r, Z_c)` with
/// `Z_r = Z * T_{N_r}` and `Z_c = T_{N_c}^T * Z`, products taken over the naturals.
pub fn component_weights(frozen: &FrozenSet, n_r: usize, n_c: usize) -> Result<(NatMatrix, NatMatrix)> {
    let z = indicator_matrix(frozen, n_r, n_c)?;

    // Same butterflies as the GF(2) encoder with addition in place of XOR.
    let mut z_r = z.clone();
    for i in 0..n_c {
        let row = z_r.row_mut(i);
        let mut half = 1;
        while half < n_r {
            for block in row.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for (a, b) in lo.iter_mut().zip(hi.iter()) {
                    *a += *b;
                }
            }
            half *= 2;
        }
    }

    let mut z_c = z;
    let mut half = 1;
    while half < n_c {
        for block in (0..n_c).step_by(2 * half) {
            for i in block..block + half {
                for j in 0..n_r {
                    z_c[(i, j)] += z_c[(i + half, j)];
                }
            }
        }
        half *= 2;
    }
    Ok((z_r, z_c))
}

/// Frozen sets of the row and column component codes of a polar code seen as an
/// `N_c x N_r` irregular product code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentProfile {
    /// One length-`N_r` frozen set per row (`N_c` of them).
    pub row_frozen_sets: Vec<FrozenSet>,
    /// One length-`N_c` frozen set per column (`N_r` of them).
    pub col_frozen_sets: Vec<FrozenSet>,
}

impl ComponentProfile {
    pub fn n_r(&self) -> usize {
        self.row_frozen_sets[0].code_length()
    }

    pub fn n_c(&self) -> usize {
        self.col_frozen_sets[0].code_length()
    }

    pub fn row_dimensions(&self) -> Vec<usize> {
        self.row_frozen_sets.iter().map(FrozenSet::dimension).collect()
    }

    pub fn col_dimensions(&self) -> Vec<usize> {
        self.col_frozen_sets.iter().map(FrozenSet::dimension).collect()
    }
}

/// Component frozen sets: column `j` freezes the zero entries of column `j` of `Z_r`, row `i`
/// the zero entries of row `i` of `Z_c`.
pub fn component_frozen_sets(frozen: &FrozenSet, n_r: usize, n_c: usize) -> Result<ComponentProfile> {
    let (z_r, z_c) = component_weights(frozen, n_r, n_c)?;
    let zeros = |values: Vec<u32>| -> Vec<usize> {
        values.iter().enumerate().filter(|(_, &v)| v == 0).map(|(i, _)| i).collect()
    };
    let row_frozen_sets = (0..n_c)
        .map(|i| FrozenSet { indices: zeros(z_c.row(i).to_vec()), code_length: n_r })
        .collect();
    let col_frozen_sets = (0..n_r)
        .map(|j| FrozenSet { indices: zeros(z_r.column(j)), code_length: n_c })
        .collect();
    Ok(ComponentProfile { row_frozen_sets, col_frozen_sets })
}

/// `T_N = T_2^{⊗n}` built by explicit Kronecker products.
pub fn transform_matrix(n: usize) -> Result<BitMatrix> {
    let levels = log2_exact(n)
        .ok_or_else(|| Error::InvalidArgument(format!("{n} is not a power of two")))?;
    let mut t = BitMatrix::from_vec(1, 1, vec![1])?;
    let kernel = [[1u8, 0], [1, 1]];
    for _ in 0..levels {
        let size = t.rows();
        let mut next = BitMatrix::zeros(2 * size, 2 * size);
        for (a, krow) in kernel.iter().enumerate() {
            for (b, &kv) in krow.iter().enumerate() {
                for i in 0..size {
                    for j in 0..size {
                        next[(a * size + i, b * size + j)] = kv & t[(i, j)];
                    }
                }
            }
        }
        t = next;
    }
    Ok(t)
}

/// Which dimension a [`frozen_bit_oracle`] query refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Line {
    Row(usize),
    Column(usize),
}

/// Input positions of `u` that combine into virtual input bit `bit` of the given row or
/// column code, read off the Kronecker structure `T_{N_c}^{(i)} ⊗ I_{N_r}` (rows) or
/// `I_{N_c} ⊗ T_{N_r}^{(j)}` (columns).
pub fn combined_inputs(line: Line, bit: usize, n_r: usize, n_c: usize) -> Result<Vec<usize>> {
    match line {
        Line::Row(i) => {
            if i >= n_c || bit >= n_r {
                return invalid("row query out of range");
            }
            let t = transform_matrix(n_c)?;
            Ok((0..n_c).filter(|&k| t[(k, i)] == 1).map(|k| k * n_r + bit).collect())
        }
        Line::Column(j) => {
            if j >= n_r || bit >= n_c {
                return invalid("column query out of range");
            }
            let t = transform_matrix(n_r)?;
            Ok((0..n_r).filter(|&m| t[(m, j)] == 1).map(|m| bit * n_r + m).collect())
        }
    }
}

/// True when virtual input bit `bit` of the given row or column component code is frozen,
/// i.e. every input position combined into it belongs to `frozen`.
pub fn frozen_bit_oracle(frozen: &FrozenSet, n_r: usize, n_c: usize, line: Line, bit: usize) -> Result<bool> {
    check_split(frozen.code_length(), n_r, n_c)?;
    Ok(combined_inputs(line, bit, n_r, n_c)?.iter().all(|&p| frozen.contains(p)))
}

/// How a [`CodeSpec`]'s frozen set was obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Product of a row and a column polar code.
    Product { row: FrozenSet, col: FrozenSet },
    /// Ordinary polar code, decomposed after the fact.
    Flat,
    /// Product frozen set plus extra least-reliable positions.
    Hybrid { row: FrozenSet, col: FrozenSet },
}

/// A length-`N = N_r N_c` polar code together with its irregular product decomposition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeSpec {
    frozen: FrozenSet,
    n_r: usize,
    n_c: usize,
    profile: ComponentProfile,
    provenance: Provenance,
}

impl CodeSpec {
    fn build(frozen: FrozenSet, n_r: usize, n_c: usize, provenance: Provenance) -> Result<Self> {
        let profile = component_frozen_sets(&frozen, n_r, n_c)?;
        Ok(Self { frozen, n_r, n_c, profile, provenance })
    }

    /// Any polar code, viewed as an `N_c x N_r` irregular product code.
    pub fn flat(frozen: FrozenSet, n_r: usize, n_c: usize) -> Result<Self> {
        Self::build(frozen, n_r, n_c, Provenance::Flat)
    }

    /// Product of the row code `row` (length `N_r`) and column code `col` (length `N_c`).
    pub fn product(row: &FrozenSet, col: &FrozenSet) -> Result<Self> {
        let frozen = product_frozen_set(row, col);
        Self::build(
            frozen,
            row.code_length(),
            col.code_length(),
            Provenance::Product { row: row.clone(), col: col.clone() },
        )
    }

    pub fn frozen(&self) -> &FrozenSet {
        &self.frozen
    }

    pub fn profile(&self) -> &ComponentProfile {
        &self.profile
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Row component length.
    pub fn n_r(&self) -> usize {
        self.n_r
    }

    /// Column component length.
    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn length(&self) -> usize {
        self.frozen.code_length()
    }

    pub fn dimension(&self) -> usize {
        self.frozen.dimension()
    }

    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.length() as f64
    }

    /// Largest row-code dimension; rows decode in parallel so this bounds their latency.
    pub fn max_row_dimension(&self) -> usize {
        self.profile.row_dimensions().into_iter().max().unwrap_or(0)
    }

    pub fn max_col_dimension(&self) -> usize {
        self.profile.col_dimensions().into_iter().max().unwrap_or(0)
    }
}

/// Hybrid design: freeze the product set of `row` and `col`, then the least reliable
/// remaining positions of `order` until the code has dimension `k`.
pub fn hybrid_frozen_set(row: &FrozenSet, col: &FrozenSet, k: usize, order: &ReliabilityOrder) -> Result<CodeSpec> {
    let n = row.code_length() * col.code_length();
    if order.len() != n {
        return invalid(format!("reliability order has length {}, expected {n}", order.len()));
    }
    let product = product_frozen_set(row, col);
    let product_k = product.dimension();
    if k > product_k {
        return invalid(format!("target K={k} exceeds product dimension {product_k}"));
    }
    let mut mask = product.mask();
    let mut extra = product_k - k;
    for &pos in order.order() {
        if extra == 0 {
            break;
        }
        if !mask[pos] {
            mask[pos] = true;
            extra -= 1;
        }
    }
    let frozen = FrozenSet::new(n, (0..n).filter(|&i| mask[i]).collect())?;
    CodeSpec::build(
        frozen,
        row.code_length(),
        col.code_length(),
        Provenance::Hybrid { row: row.clone(), col: col.clone() },
    )
}

/// Places `info` row by row, starting top-left, into the unfrozen entries of a length-`N`
/// input vector.
pub fn place_information(frozen: &FrozenSet, info: &[u8]) -> Result<Vec<u8>> {
    if info.len() != frozen.dimension() {
        return invalid(format!(
            "{} information bits for a code of dimension {}",
            info.len(),
            frozen.dimension()
        ));
    }
    let mut u = vec![0u8; frozen.code_length()];
    for (&pos, &b) in frozen.information_positions().iter().zip(info) {
        u[pos] = b;
    }
    Ok(u)
}
