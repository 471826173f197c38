//! Industry-coded transaction flows and period-stamped flow matrices.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::period::{PeriodSpan, YearMonth};
use crate::scalar::Scalar;

/// Industry classification scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    Sic5,
    Sic3,
    Cpa105,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sic5" => Ok(Scheme::Sic5),
            "sic3" => Ok(Scheme::Sic3),
            "cpa105" | "cpa" => Ok(Scheme::Cpa105),
            other => Err(Error::Usage(format!("unknown classification scheme {other:?}"))),
        }
    }

    /// Guess the scheme from the shape of a code: 5 or 3 digits are SIC, anything else CPA.
    pub fn infer(code: &str) -> Scheme {
        let digits = !code.is_empty() && code.bytes().all(|b| b.is_ascii_digit());
        match (digits, code.len()) {
            (true, 5) => Scheme::Sic5,
            (true, 3) => Scheme::Sic3,
            _ => Scheme::Cpa105,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Sic5 => "SIC5",
            Scheme::Sic3 => "SIC3",
            Scheme::Cpa105 => "CPA105",
        })
    }
}

/// Code of an industry under a given classification scheme.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndustryCode {
    scheme: Scheme,
    code: String,
}

/// Code used for SIC codes without a concordance rule under the `Unclassified` policy.
pub const UNCLASSIFIED: &str = "UNCLASSIFIED";

impl IndustryCode {
    pub fn new(scheme: Scheme, code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        let valid = match scheme {
            Scheme::Sic5 => code.len() == 5 && code.bytes().all(|b| b.is_ascii_digit()),
            Scheme::Sic3 => code.len() == 3 && code.bytes().all(|b| b.is_ascii_digit()),
            Scheme::Cpa105 => !code.is_empty() && code.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_'),
        };
        if !valid {
            return Err(Error::Validation(format!("invalid {scheme} code {code:?}")));
        }
        Ok(IndustryCode { scheme, code })
    }

    /// Parse a code, inferring its scheme from its shape.
    pub fn infer(code: &str) -> Result<Self> {
        IndustryCode::new(Scheme::infer(code), code)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn as_str(&self) -> &str {
        &self.code
    }
}

impl fmt::Display for IndustryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// A measurement that statistical disclosure control may have withheld.
///
/// `Suppressed` is never the same thing as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Measured<T> {
    Observed(T),
    Suppressed,
}

impl<T: Copy> Measured<T> {
    pub fn observed(self) -> Option<T> {
        match self {
            Measured::Observed(v) => Some(v),
            Measured::Suppressed => None,
        }
    }

    pub fn is_suppressed(&self) -> bool {
        matches!(self, Measured::Suppressed)
    }
}

/// One aggregated payer-to-payee observation for one month.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub period: YearMonth,
    pub payer: IndustryCode,
    pub payee: IndustryCode,
    pub value: Measured<f64>,
    pub count: Measured<u64>,
}

impl FlowRecord {
    pub fn validate(&self) -> Result<()> {
        if let Measured::Observed(v) = self.value {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Validation(format!(
                    "{} {}->{}: value {v} is not a finite nonnegative amount",
                    self.period, self.payer, self.payee
                )));
            }
        }
        Ok(())
    }

    fn weight(&self, kind: WeightKind) -> Measured<f64> {
        match kind {
            WeightKind::Value => self.value,
            WeightKind::Count => match self.count {
                Measured::Observed(c) => Measured::Observed(c as f64),
                Measured::Suppressed => Measured::Suppressed,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightKind {
    Value,
    Count,
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightKind::Value => "value",
            WeightKind::Count => "count",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// `Z[i][j]` is the amount paid by `i` to `j`.
    PayerToPayee,
    /// `Z[i][j]` is the amount `i` supplied to (was paid by) `j`.
    SupplierToBuyer,
}

/// Which table a matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SourceTag {
    PaymentValue,
    PaymentCount,
    IxI,
    PxP,
    Sut,
    Synthetic,
}

impl SourceTag {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "value" | "paymentvalue" | "payment-value" => Ok(SourceTag::PaymentValue),
            "count" | "paymentcount" | "payment-count" => Ok(SourceTag::PaymentCount),
            "ixi" => Ok(SourceTag::IxI),
            "pxp" => Ok(SourceTag::PxP),
            "sut" => Ok(SourceTag::Sut),
            "synthetic" | "synth" => Ok(SourceTag::Synthetic),
            other => Err(Error::Usage(format!("unknown source tag {other:?}"))),
        }
    }

    /// Default tag for a payment-derived matrix of the given weight kind.
    pub fn payment(kind: WeightKind) -> Self {
        match kind {
            WeightKind::Value => SourceTag::PaymentValue,
            WeightKind::Count => SourceTag::PaymentCount,
        }
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceTag::PaymentValue => "Value",
            SourceTag::PaymentCount => "Count",
            SourceTag::IxI => "IxI",
            SourceTag::PxP => "PxP",
            SourceTag::Sut => "SUT",
            SourceTag::Synthetic => "Synthetic",
        })
    }
}

/// Descriptive fields of a [`FlowMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub span: PeriodSpan,
    pub scheme: Scheme,
    pub weight_kind: WeightKind,
    pub orientation: Orientation,
    pub source: SourceTag,
}

pub type Cell = (usize, usize);

/// Sparse weighted directed matrix of flows between industries for one period.
///
/// Only strictly positive observed weights are stored. Suppressed cells are kept
/// in a separate set; a cell is never both stored and suppressed. Cells whose
/// stored weight is an observed partial sum over periods with suppressed
/// components are flagged in `partial`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix<S: Scalar = f64> {
    meta: MatrixMeta,
    nodes: Vec<IndustryCode>,
    index: HashMap<IndustryCode, usize>,
    entries: BTreeMap<Cell, S>,
    suppressed: BTreeSet<Cell>,
    partial: BTreeSet<Cell>,
}

impl<S: Scalar> FlowMatrix<S> {
    pub fn from_parts(
        meta: MatrixMeta,
        nodes: Vec<IndustryCode>,
        entries: impl IntoIterator<Item = (Cell, S)>,
        suppressed: impl IntoIterator<Item = Cell>,
        partial: impl IntoIterator<Item = Cell>,
    ) -> Result<Self> {
        let n = nodes.len();
        let mut index = HashMap::with_capacity(n);
        for (i, code) in nodes.iter().enumerate() {
            if code.scheme() != meta.scheme && code.as_str() != UNCLASSIFIED {
                return Err(Error::Schema(format!("node {code} is not a {} code", meta.scheme)));
            }
            if index.insert(code.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate node {code}")));
            }
        }
        let in_range = |(i, j): Cell| i < n && j < n;
        let mut stored = BTreeMap::new();
        for (cell, w) in entries {
            if !in_range(cell) {
                return Err(Error::Validation(format!("cell {cell:?} outside a {n}x{n} matrix")));
            }
            if !w.is_finite() || w < S::zero() {
                return Err(Error::Validation(format!("weight {w} at {cell:?} is not finite and nonnegative")));
            }
            if w > S::zero() {
                stored.insert(cell, w);
            }
        }
        let suppressed: BTreeSet<Cell> = suppressed.into_iter().collect();
        for &cell in &suppressed {
            if !in_range(cell) {
                return Err(Error::Validation(format!("suppressed cell {cell:?} outside matrix")));
            }
            if stored.contains_key(&cell) {
                return Err(Error::Validation(format!("cell {cell:?} is both observed and suppressed")));
            }
        }
        let partial: BTreeSet<Cell> = partial.into_iter().filter(|c| stored.contains_key(c)).collect();
        Ok(FlowMatrix { meta, nodes, index, entries: stored, suppressed, partial })
    }

    /// Matrix from a dense row-major table; zeros are absent cells.
    pub fn from_dense(meta: MatrixMeta, nodes: Vec<IndustryCode>, dense: &[Vec<S>]) -> Result<Self> {
        if dense.len() != nodes.len() || dense.iter().any(|r| r.len() != nodes.len()) {
            return Err(Error::Validation("dense table shape does not match node list".into()));
        }
        let entries =
            dense.iter().enumerate().flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &w)| ((i, j), w)));
        FlowMatrix::from_parts(meta, nodes, entries, [], [])
    }

    pub fn meta(&self) -> &MatrixMeta {
        &self.meta
    }

    pub fn span(&self) -> PeriodSpan {
        self.meta.span
    }

    pub fn scheme(&self) -> Scheme {
        self.meta.scheme
    }

    pub fn weight_kind(&self) -> WeightKind {
        self.meta.weight_kind
    }

    pub fn orientation(&self) -> Orientation {
        self.meta.orientation
    }

    pub fn source(&self) -> SourceTag {
        self.meta.source
    }

    pub fn with_source(mut self, source: SourceTag) -> Self {
        self.meta.source = source;
        self
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[IndustryCode] {
        &self.nodes
    }

    pub fn index_of(&self, code: &IndustryCode) -> Option<usize> {
        self.index.get(code).copied()
    }

    /// Weight at `(i, j)`, zero when the cell is absent or suppressed.
    pub fn get(&self, i: usize, j: usize) -> S {
        self.entries.get(&(i, j)).copied().unwrap_or_else(S::zero)
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<S> {
        self.entries.get(&(i, j)).copied()
    }

    /// Stored cells in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (Cell, S)> + '_ {
        self.entries.iter().map(|(&c, &w)| (c, w))
    }

    pub fn suppressed(&self) -> &BTreeSet<Cell> {
        &self.suppressed
    }

    pub fn is_suppressed(&self, i: usize, j: usize) -> bool {
        self.suppressed.contains(&(i, j))
    }

    pub fn partial(&self) -> &BTreeSet<Cell> {
        &self.partial
    }

    pub fn n_edges(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> S {
        self.entries.values().fold(S::zero(), |acc, &w| acc + w)
    }

    pub fn row_sums(&self) -> Vec<S> {
        let mut sums = vec![S::zero(); self.n()];
        for (&(i, _), &w) in &self.entries {
            sums[i] = sums[i] + w;
        }
        sums
    }

    pub fn col_sums(&self) -> Vec<S> {
        let mut sums = vec![S::zero(); self.n()];
        for (&(_, j), &w) in &self.entries {
            sums[j] = sums[j] + w;
        }
        sums
    }

    pub fn to_dense(&self) -> Vec<Vec<S>> {
        let mut dense = vec![vec![S::zero(); self.n()]; self.n()];
        for (&(i, j), &w) in &self.entries {
            dense[i][j] = w;
        }
        dense
    }

    fn transposed(&self, orientation: Orientation) -> Self {
        let flip = |&(i, j): &Cell| (j, i);
        FlowMatrix {
            meta: MatrixMeta { orientation, ..self.meta },
            nodes: self.nodes.clone(),
            index: self.index.clone(),
            entries: self.entries.iter().map(|(c, &w)| (flip(c), w)).collect(),
            suppressed: self.suppressed.iter().map(flip).collect(),
            partial: self.partial.iter().map(flip).collect(),
        }
    }

    /// Transpose a payment matrix into the supplier-to-buyer (input-output) convention.
    pub fn to_supplier_orientation(&self) -> Result<Self> {
        match self.meta.orientation {
            Orientation::PayerToPayee => Ok(self.transposed(Orientation::SupplierToBuyer)),
            Orientation::SupplierToBuyer => {
                Err(Error::Orientation("matrix is already in supplier-to-buyer orientation".into()))
            }
        }
    }

    /// Inverse of [`FlowMatrix::to_supplier_orientation`].
    pub fn to_payer_orientation(&self) -> Result<Self> {
        match self.meta.orientation {
            Orientation::SupplierToBuyer => Ok(self.transposed(Orientation::PayerToPayee)),
            Orientation::PayerToPayee => {
                Err(Error::Orientation("matrix is already in payer-to-payee orientation".into()))
            }
        }
    }

    /// Supplier-oriented view, transposing only when needed.
    pub fn supplier_oriented(&self) -> Self {
        match self.meta.orientation {
            Orientation::SupplierToBuyer => self.clone(),
            Orientation::PayerToPayee => self.transposed(Orientation::SupplierToBuyer),
        }
    }

    /// Copy keeping only the stored cells accepted by `keep`; suppressed cells are untouched.
    pub fn retain_entries(&self, mut keep: impl FnMut(Cell, S) -> bool) -> Self {
        let entries: BTreeMap<Cell, S> =
            self.entries.iter().filter(|(&c, &w)| keep(c, w)).map(|(&c, &w)| (c, w)).collect();
        let partial = self.partial.iter().filter(|c| entries.contains_key(c)).copied().collect();
        FlowMatrix { entries, partial, ..self.clone() }
    }

    /// Every stored weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: S) -> Self {
        FlowMatrix { entries: self.entries.iter().map(|(&c, &w)| (c, w * factor)).collect(), ..self.clone() }
    }

    /// Same matrix over a larger node universe; missing nodes become isolated.
    pub fn reindexed(&self, universe: &[IndustryCode]) -> Result<Self> {
        let mut nodes: BTreeSet<IndustryCode> = universe.iter().cloned().collect();
        nodes.extend(self.nodes.iter().cloned());
        let nodes: Vec<IndustryCode> = nodes.into_iter().collect();
        let pos: HashMap<&IndustryCode, usize> = nodes.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let map = |&(i, j): &Cell| (pos[&self.nodes[i]], pos[&self.nodes[j]]);
        FlowMatrix::from_parts(
            self.meta,
            nodes.clone(),
            self.entries.iter().map(|(c, &w)| (map(c), w)),
            self.suppressed.iter().map(map),
            self.partial.iter().map(map),
        )
    }

    /// Convert the weight type, e.g. to `f32`.
    pub fn cast<T: Scalar>(&self) -> FlowMatrix<T> {
        FlowMatrix {
            meta: self.meta,
            nodes: self.nodes.clone(),
            index: self.index.clone(),
            entries: self.entries.iter().map(|(&c, &w)| (c, T::lit(w.as_f64()))).collect(),
            suppressed: self.suppressed.clone(),
            partial: self.partial.clone(),
        }
    }
}

#[derive(Default)]
struct CellAccumulator<S> {
    observed: Option<S>,
    suppressed: bool,
    partial: bool,
}

impl<S: Scalar> CellAccumulator<S> {
    fn add(&mut self, w: S) {
        self.observed = Some(self.observed.unwrap_or_else(S::zero) + w);
    }
}

fn finish_cells<S: Scalar>(cells: BTreeMap<Cell, CellAccumulator<S>>) -> (Vec<(Cell, S)>, Vec<Cell>, Vec<Cell>) {
    let mut entries = Vec::new();
    let mut suppressed = Vec::new();
    let mut partial = Vec::new();
    for (cell, acc) in cells {
        match acc.observed {
            Some(w) if w > S::zero() => {
                entries.push((cell, w));
                if acc.suppressed || acc.partial {
                    partial.push(cell);
                }
            }
            _ if acc.suppressed => suppressed.push(cell),
            _ => {}
        }
    }
    (entries, suppressed, partial)
}

/// Build a payer-to-payee matrix from flow records.
///
/// Records outside `span` are ignored. Duplicate `(payer, payee)` pairs are summed;
/// suppressed components are excluded from sums and recorded in the suppressed set
/// (or flag the cell as partial when observed components also exist). The node list
/// is the sorted union of codes in the retained records and `universe`.
pub fn build_matrix<S: Scalar>(
    records: &[FlowRecord],
    scheme: Scheme,
    weight_kind: WeightKind,
    span: PeriodSpan,
    universe: &[IndustryCode],
) -> Result<FlowMatrix<S>> {
    let scheme_ok = |c: &IndustryCode| c.scheme() == scheme || c.as_str() == UNCLASSIFIED;
    for code in universe {
        if !scheme_ok(code) {
            return Err(Error::Schema(format!("universe code {code} is not a {scheme} code")));
        }
    }
    let mut kept = Vec::new();
    for r in records {
        if !scheme_ok(&r.payer) || !scheme_ok(&r.payee) {
            return Err(Error::Schema(format!(
                "record {} {}->{} mixes schemes with {scheme}",
                r.period, r.payer, r.payee
            )));
        }
        r.validate()?;
        if span.contains(r.period) {
            kept.push(r);
        }
    }

    let mut nodes: BTreeSet<IndustryCode> = universe.iter().cloned().collect();
    for r in &kept {
        nodes.insert(r.payer.clone());
        nodes.insert(r.payee.clone());
    }
    let nodes: Vec<IndustryCode> = nodes.into_iter().collect();
    let pos: HashMap<&IndustryCode, usize> = nodes.iter().enumerate().map(|(i, c)| (c, i)).collect();

    let mut cells: BTreeMap<Cell, CellAccumulator<S>> = BTreeMap::new();
    for r in &kept {
        let acc = cells.entry((pos[&r.payer], pos[&r.payee])).or_default();
        match r.weight(weight_kind) {
            Measured::Observed(w) => acc.add(S::lit(w)),
            Measured::Suppressed => acc.suppressed = true,
        }
    }
    let (entries, suppressed, partial) = finish_cells(cells);
    let meta = MatrixMeta {
        span,
        scheme,
        weight_kind,
        orientation: Orientation::PayerToPayee,
        source: SourceTag::payment(weight_kind),
    };
    FlowMatrix::from_parts(meta, nodes, entries, suppressed, partial)
}

/// Entrywise sum of matrices covering disjoint periods.
///
/// Inputs are summed in chronological order, so the result does not depend on the
/// order of `matrices`. A cell suppressed in some periods and observed in others
/// carries the observed partial sum and is flagged partial.
pub fn aggregate_periods<S: Scalar>(matrices: &[FlowMatrix<S>]) -> Result<FlowMatrix<S>> {
    let first = matrices.first().ok_or_else(|| Error::Usage("aggregate_periods needs at least one matrix".into()))?;
    for m in matrices {
        let (a, b) = (&first.meta, &m.meta);
        if a.scheme != b.scheme
            || a.weight_kind != b.weight_kind
            || a.orientation != b.orientation
            || a.source != b.source
        {
            return Err(Error::Schema(format!(
                "cannot aggregate {:?}/{}/{:?} with {:?}/{}/{:?}",
                a.scheme, a.weight_kind, a.orientation, b.scheme, b.weight_kind, b.orientation
            )));
        }
    }
    let mut ordered: Vec<&FlowMatrix<S>> = matrices.iter().collect();
    ordered.sort_by_key(|m| m.meta.span);
    for pair in ordered.windows(2) {
        if pair[0].meta.span.overlaps(&pair[1].meta.span) {
            return Err(Error::Usage(format!("period spans {} and {} overlap", pair[0].meta.span, pair[1].meta.span)));
        }
    }

    let nodes: Vec<IndustryCode> =
        ordered.iter().flat_map(|m| m.nodes.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    let pos: HashMap<&IndustryCode, usize> = nodes.iter().enumerate().map(|(i, c)| (c, i)).collect();

    let mut cells: BTreeMap<Cell, CellAccumulator<S>> = BTreeMap::new();
    for m in &ordered {
        let remap = |&(i, j): &Cell| (pos[&m.nodes[i]], pos[&m.nodes[j]]);
        for (c, &w) in &m.entries {
            let acc = cells.entry(remap(c)).or_default();
            acc.add(w);
            acc.partial |= m.partial.contains(c);
        }
        for c in &m.suppressed {
            cells.entry(remap(c)).or_default().suppressed = true;
        }
    }
    let (entries, suppressed, partial) = finish_cells(cells);
    let span = PeriodSpan {
        start: ordered.first().map(|m| m.meta.span.start).unwrap_or(first.meta.span.start),
        end: ordered.iter().map(|m| m.meta.span.end).max().unwrap_or(first.meta.span.end),
    };
    FlowMatrix::from_parts(MatrixMeta { span, ..first.meta }, nodes, entries, suppressed, partial)
}
