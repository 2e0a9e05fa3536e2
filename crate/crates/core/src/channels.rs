//! Information-constrained channels with finite output alphabets.
//!
//! A channel either has a finite input alphabet and an explicit
//! row-stochastic table, or reads a real vector through a piecewise-constant
//! response (a subset of signs, or one coordinate binned by thresholds and
//! then randomised). Piecewise-constant responses keep every expectation
//! under product inputs exact.

use std::borrow::Cow;
use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, unsupported, Error, Result};
use crate::families::{cell_of, sign_vectors, FiniteDist, ProductBernoulli, SphericalGaussian};

const ROW_TOL: f64 = 1e-12;
/// Largest output alphabet that functionals will enumerate.
pub const MAX_ENUMERATED_OUTPUTS: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSpace {
    Finite(Vec<Vec<i32>>),
    RealVector(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputAlphabet {
    Listed(Vec<Vec<i32>>),
    /// All ±1 tuples of the given length, lexicographic with −1 first.
    SignTuples(u32),
}

impl OutputAlphabet {
    pub fn len(&self) -> u64 {
        match self {
            Self::Listed(v) => v.len() as u64,
            Self::SignTuples(l) => 1u64 << l,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn symbol(&self, idx: u64) -> Option<Vec<i32>> {
        match self {
            Self::Listed(v) => v.get(idx as usize).cloned(),
            Self::SignTuples(l) => (idx < self.len()).then(|| {
                (0..*l).map(|j| if idx >> (l - 1 - j) & 1 == 1 { 1 } else { -1 }).collect()
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    Comm { bits: u32 },
    Ldp { epsilon: f64 },
    Unconstrained,
}

impl ConstraintSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Comm { bits } if bits == 0 || bits > 63 => {
                Err(invalid(format!("bit budget must be in 1..=63, got {bits}")))
            }
            Self::Ldp { epsilon } if !(epsilon > 0.0 && epsilon.is_finite()) => {
                Err(invalid(format!("privacy level must be positive, got {epsilon}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    /// Deterministically forwards the signs of the listed coordinates.
    SubsetForward { coords: Vec<usize> },
    /// Bins one coordinate by sorted thresholds, then emits from the cell's row.
    Binned {
        coord: usize,
        thresholds: Vec<f64>,
        table: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Table(Vec<Vec<f64>>),
    Response(Response),
}

/// Conditional law of the output given one input.
#[derive(Clone, Debug, PartialEq)]
pub enum Row<'a> {
    Dense(Cow<'a, [f64]>),
    Point(u64),
}

impl Row<'_> {
    pub fn prob(&self, y: u64) -> f64 {
        match self {
            Row::Dense(r) => r[y as usize],
            Row::Point(i) => f64::from(u8::from(*i == y)),
        }
    }
}

/// A weighted input cell on which the channel acts with a single row.
#[derive(Clone, Debug)]
pub struct Atom<'a> {
    pub prob: f64,
    pub row: Row<'a>,
}

/// An input point: finite symbol or real vector.
#[derive(Clone, Copy, Debug)]
pub enum Point<'a> {
    Symbol(&'a [i32]),
    Real(&'a [f64]),
}

/// Distributions a channel can be averaged against.
#[derive(Clone, Debug)]
pub enum InputDist {
    Finite(FiniteDist),
    ProductBernoulli(ProductBernoulli),
    Gaussian(SphericalGaussian),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ChannelDoc {
    input: InputSpace,
    outputs: OutputAlphabet,
    kernel: Kernel,
    constraint: Vec<ConstraintSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ChannelDoc", into = "ChannelDoc")]
pub struct Channel {
    input: InputSpace,
    outputs: OutputAlphabet,
    kernel: Kernel,
    constraint: Vec<ConstraintSpec>,
    index: HashMap<Vec<i32>, usize>,
}

impl PartialEq for Channel {
    fn eq(&self, other: &Self) -> bool {
        self.input == other.input
            && self.outputs == other.outputs
            && self.kernel == other.kernel
            && self.constraint == other.constraint
    }
}

impl TryFrom<ChannelDoc> for Channel {
    type Error = Error;
    fn try_from(doc: ChannelDoc) -> Result<Self> {
        Channel::new(doc.input, doc.outputs, doc.kernel, doc.constraint)
    }
}

impl From<Channel> for ChannelDoc {
    fn from(c: Channel) -> Self {
        ChannelDoc {
            input: c.input,
            outputs: c.outputs,
            kernel: c.kernel,
            constraint: c.constraint,
        }
    }
}

fn check_row(row: &[f64], width: usize, what: &str) -> Result<()> {
    if row.len() != width {
        return Err(invalid(format!("{what}: row has {} entries, expected {width}", row.len())));
    }
    if row.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(invalid(format!("{what}: negative or non-finite entry")));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > ROW_TOL {
        return Err(invalid(format!("{what}: row sums to {s}")));
    }
    Ok(())
}

/// `max_y max_{a,b} K[a][y]/K[b][y]` over a set of rows.
fn rows_ratio<'r>(rows: impl Iterator<Item = &'r Vec<f64>> + Clone, width: usize) -> f64 {
    let mut worst = 1.0f64;
    for y in 0..width {
        let col = rows.clone().map(|r| r[y]);
        let hi = col.clone().fold(0.0, f64::max);
        let lo = col.fold(f64::INFINITY, f64::min);
        if hi > 0.0 {
            worst = worst.max(if lo == 0.0 { f64::INFINITY } else { hi / lo });
        }
    }
    worst
}

impl Channel {
    pub fn new(
        input: InputSpace,
        outputs: OutputAlphabet,
        kernel: Kernel,
        constraint: Vec<ConstraintSpec>,
    ) -> Result<Self> {
        let width = outputs.len();
        match &outputs {
            OutputAlphabet::Listed(v) => {
                if v.is_empty() {
                    return Err(invalid("output alphabet is empty"));
                }
                let mut seen = std::collections::HashSet::new();
                if !v.iter().all(|s| seen.insert(s)) {
                    return Err(invalid("output alphabet has duplicate symbols"));
                }
            }
            OutputAlphabet::SignTuples(l) => {
                if *l == 0 || *l > 63 {
                    return Err(invalid(format!("sign tuple length must be in 1..=63, got {l}")));
                }
            }
        }
        let mut index = HashMap::new();
        match (&input, &kernel) {
            (InputSpace::Finite(symbols), Kernel::Table(rows)) => {
                if symbols.is_empty() {
                    return Err(invalid("input alphabet is empty"));
                }
                if rows.len() != symbols.len() {
                    return Err(invalid("kernel needs one row per input symbol"));
                }
                for (i, s) in symbols.iter().enumerate() {
                    if index.insert(s.clone(), i).is_some() {
                        return Err(invalid("input alphabet has duplicate symbols"));
                    }
                }
                if width > MAX_ENUMERATED_OUTPUTS {
                    return Err(invalid("tabulated kernel is too wide"));
                }
                for r in rows {
                    check_row(r, width as usize, "kernel")?;
                }
            }
            (InputSpace::RealVector(d), Kernel::Response(resp)) => {
                if *d == 0 {
                    return Err(invalid("input dimension must be positive"));
                }
                match resp {
                    Response::SubsetForward { coords } => {
                        if coords.is_empty() {
                            return Err(invalid("subset must be nonempty"));
                        }
                        let mut sorted = coords.clone();
                        sorted.sort_unstable();
                        sorted.dedup();
                        if sorted.len() != coords.len() || sorted.last().is_some_and(|c| c >= d) {
                            return Err(invalid("subset coordinates must be distinct and < d"));
                        }
                        if outputs != OutputAlphabet::SignTuples(coords.len() as u32) {
                            return Err(invalid("subset forwarding emits sign tuples of |S|"));
                        }
                    }
                    Response::Binned { coord, thresholds, table } => {
                        if coord >= d {
                            return Err(invalid("binned coordinate out of range"));
                        }
                        if thresholds.iter().any(|t| !t.is_finite())
                            || thresholds.windows(2).any(|w| w[0] >= w[1])
                        {
                            return Err(invalid("thresholds must be finite and increasing"));
                        }
                        if table.len() != thresholds.len() + 1 {
                            return Err(invalid("binned table needs one row per cell"));
                        }
                        if width > MAX_ENUMERATED_OUTPUTS {
                            return Err(invalid("binned table is too wide"));
                        }
                        for r in table {
                            check_row(r, width as usize, "binned table")?;
                        }
                    }
                }
            }
            _ => return Err(invalid("tables need finite inputs, responses need real vectors")),
        }
        let ch = Self { input, outputs, kernel, constraint, index };
        for c in &ch.constraint {
            c.validate()?;
            if !ch.satisfies(c) {
                return Err(invalid(format!("channel violates its constraint tag {c:?}")));
            }
        }
        Ok(ch)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel documents always serialise")
    }

    pub fn input(&self) -> &InputSpace {
        &self.input
    }

    pub fn outputs(&self) -> &OutputAlphabet {
        &self.outputs
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn constraints(&self) -> &[ConstraintSpec] {
        &self.constraint
    }

    pub fn output_count(&self) -> u64 {
        self.outputs.len()
    }

    /// True when every input yields the same output law.
    pub fn is_constant(&self) -> bool {
        let same = |rows: &[Vec<f64>]| rows.windows(2).all(|w| w[0] == w[1]);
        match &self.kernel {
            Kernel::Table(rows) => same(rows),
            Kernel::Response(Response::Binned { table, .. }) => same(table),
            Kernel::Response(Response::SubsetForward { coords }) => coords.is_empty(),
        }
    }

    /// Whether the channel meets a constraint.
    pub fn satisfies(&self, c: &ConstraintSpec) -> bool {
        match *c {
            ConstraintSpec::Unconstrained => true,
            ConstraintSpec::Comm { bits } => bits >= 63 || self.output_count() <= 1u64 << bits,
            ConstraintSpec::Ldp { epsilon } => {
                let r = match &self.kernel {
                    Kernel::Table(rows) => rows_ratio(rows.iter(), self.output_count() as usize),
                    Kernel::Response(Response::Binned { table, .. }) => {
                        rows_ratio(table.iter(), self.output_count() as usize)
                    }
                    Kernel::Response(Response::SubsetForward { .. }) => f64::INFINITY,
                };
                r <= epsilon.exp() * (1.0 + ROW_TOL)
            }
        }
    }

    /// Row of the kernel at `x`.
    pub fn row<'s>(&'s self, x: Point<'_>) -> Result<Row<'s>> {
        match (&self.kernel, x) {
            (Kernel::Table(rows), Point::Symbol(s)) => self
                .index
                .get(s)
                .map(|&i| Row::Dense(Cow::Borrowed(&rows[i])))
                .ok_or_else(|| Error::Domain(format!("symbol {s:?} is not an input"))),
            (Kernel::Table(rows), Point::Real(v)) => {
                let s: Option<Vec<i32>> = v
                    .iter()
                    .map(|x| (x.fract() == 0.0 && x.abs() < 1e9).then_some(*x as i32))
                    .collect();
                s.and_then(|s| self.index.get(&s).map(|&i| Row::Dense(Cow::Borrowed(&rows[i]))))
                    .ok_or_else(|| Error::Domain(format!("point {v:?} is not an input")))
            }
            (Kernel::Response(resp), x) => {
                let d = match self.input {
                    InputSpace::RealVector(d) => d,
                    InputSpace::Finite(_) => unreachable!("validated at construction"),
                };
                let coord = |j: usize| -> f64 {
                    match x {
                        Point::Symbol(s) => f64::from(s[j]),
                        Point::Real(v) => v[j],
                    }
                };
                let len = match x {
                    Point::Symbol(s) => s.len(),
                    Point::Real(v) => v.len(),
                };
                if len != d {
                    return Err(Error::Domain(format!("input has length {len}, expected {d}")));
                }
                if (0..d).any(|j| coord(j).is_nan()) {
                    return Err(Error::Domain("input has NaN coordinates".into()));
                }
                Ok(match resp {
                    Response::SubsetForward { coords } => Row::Point(
                        coords.iter().fold(0u64, |acc, &j| (acc << 1) | u64::from(coord(j) > 0.0)),
                    ),
                    Response::Binned { coord: c, thresholds, table } => {
                        Row::Dense(Cow::Borrowed(&table[cell_of(coord(*c), thresholds)]))
                    }
                })
            }
        }
    }

    /// Draws an output index for input `x`.
    pub fn sample_output<R: Rng + ?Sized>(&self, x: Point<'_>, rng: &mut R) -> Result<u64> {
        self.output_for_uniform(x, rng.random())
    }

    /// Output index for input `x` by inverse CDF at `u ∈ [0, 1)`, so
    /// counter-based coins can drive the draw.
    pub fn output_for_uniform(&self, x: Point<'_>, u: f64) -> Result<u64> {
        Ok(match self.row(x)? {
            Row::Point(i) => i,
            Row::Dense(r) => {
                let mut acc = 0.0;
                let mut pick = r.iter().rposition(|p| *p > 0.0).unwrap_or(0);
                for (i, p) in r.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick as u64
            }
        })
    }

    /// Cells of the input law on which the kernel is constant.
    pub fn atoms(&self, dist: &InputDist) -> Result<Vec<Atom<'_>>> {
        match (&self.kernel, dist) {
            (_, InputDist::Finite(fd)) => fd
                .points()
                .iter()
                .zip(fd.probs())
                .filter(|(_, p)| **p > 0.0)
                .map(|(x, &prob)| Ok(Atom { prob, row: self.row(Point::Symbol(x))? }))
                .collect(),
            (Kernel::Table(rows), InputDist::ProductBernoulli(pb)) => {
                let InputSpace::Finite(symbols) = &self.input else { unreachable!() };
                let mut total = 0.0;
                let mut atoms = Vec::new();
                for (s, r) in symbols.iter().zip(rows) {
                    if s.len() == pb.dim() && s.iter().all(|v| *v == 1 || *v == -1) {
                        let prob = pb.prob(s);
                        total += prob;
                        if prob > 0.0 {
                            atoms.push(Atom { prob, row: Row::Dense(Cow::Borrowed(r)) });
                        }
                    }
                }
                if (total - 1.0).abs() > 1e-10 {
                    return Err(unsupported("channel inputs do not cover the sign cube"));
                }
                Ok(atoms)
            }
            (Kernel::Table(_), InputDist::Gaussian(_)) => {
                Err(unsupported("tabulated channels cannot read real-valued inputs"))
            }
            (Kernel::Response(resp), product) => {
                let (dim, cells): (usize, Box<dyn Fn(usize, &[f64]) -> Vec<f64>>) = match product {
                    InputDist::ProductBernoulli(pb) => {
                        (pb.dim(), Box::new(move |j, t| pb.coord_cell_probs(j, t)))
                    }
                    InputDist::Gaussian(g) => (g.dim(), Box::new(move |j, t| g.coord_cell_probs(j, t))),
                    InputDist::Finite(_) => unreachable!(),
                };
                if InputSpace::RealVector(dim) != self.input {
                    return Err(Error::Domain("input dimension mismatch".into()));
                }
                match resp {
                    Response::Binned { coord, thresholds, table } => Ok(cells(*coord, thresholds)
                        .into_iter()
                        .zip(table)
                        .filter(|(q, _)| *q > 0.0)
                        .map(|(prob, r)| Atom { prob, row: Row::Dense(Cow::Borrowed(r)) })
                        .collect()),
                    Response::SubsetForward { coords } => {
                        if self.output_count() > MAX_ENUMERATED_OUTPUTS {
                            return Err(Error::Budget {
                                what: "sign tuples",
                                needed: u128::from(self.output_count()),
                                limit: u128::from(MAX_ENUMERATED_OUTPUTS),
                            });
                        }
                        let per: Vec<Vec<f64>> = coords.iter().map(|&j| cells(j, &[0.0])).collect();
                        let l = coords.len();
                        Ok((0..self.output_count())
                            .map(|y| {
                                let prob = (0..l).map(|k| per[k][(y >> (l - 1 - k) & 1) as usize]).product();
                                Atom { prob, row: Row::Point(y) }
                            })
                            .filter(|a| a.prob > 0.0)
                            .collect())
                    }
                }
            }
        }
    }

    /// `y ↦ E_{X∼P}[W(y|X)]`.
    pub fn output_dist(&self, dist: &InputDist) -> Result<Vec<f64>> {
        let width = self.output_count();
        if width > MAX_ENUMERATED_OUTPUTS {
            return Err(Error::Budget {
                what: "output alphabet",
                needed: u128::from(width),
                limit: u128::from(MAX_ENUMERATED_OUTPUTS),
            });
        }
        let mut out = vec![0.0; width as usize];
        for a in self.atoms(dist)? {
            match a.row {
                Row::Point(y) => out[y as usize] += a.prob,
                Row::Dense(r) => out.iter_mut().zip(r.iter()).for_each(|(o, w)| *o += a.prob * w),
            }
        }
        Ok(out)
    }
}

/// `e^ε/(1 + e^ε)`: probability that randomized response keeps the input.
pub fn rr_bias(epsilon: f64) -> f64 {
    1.0 / (1.0 + (-epsilon).exp())
}

fn rr_table(keep: f64) -> Vec<Vec<f64>> {
    vec![vec![keep, 1.0 - keep], vec![1.0 - keep, keep]]
}

fn sign_symbols() -> Vec<Vec<i32>> {
    vec![vec![-1], vec![1]]
}

/// Binary randomized response on `{−1, +1}`.
pub fn make_rr_channel(epsilon: f64) -> Result<Channel> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("privacy level must be positive and finite, got {epsilon}")));
    }
    Channel::new(
        InputSpace::Finite(sign_symbols()),
        OutputAlphabet::Listed(sign_symbols()),
        Kernel::Table(rr_table(rr_bias(epsilon))),
        vec![ConstraintSpec::Ldp { epsilon }, ConstraintSpec::Comm { bits: 1 }],
    )
}

/// The `ε → 0` limit of randomized response: a fair coin independent of the input.
pub fn rr_limit_channel() -> Channel {
    Channel::new(
        InputSpace::Finite(sign_symbols()),
        OutputAlphabet::Listed(sign_symbols()),
        Kernel::Table(rr_table(0.5)),
        vec![ConstraintSpec::Comm { bits: 1 }],
    )
    .expect("fair coin is a valid channel")
}

/// Randomized response applied to coordinate `coord` of a `d`-vector
/// (the sign of the coordinate, with 0 read as −1).
pub fn make_coordinate_rr_channel(d: usize, coord: usize, epsilon: f64) -> Result<Channel> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("privacy level must be positive and finite, got {epsilon}")));
    }
    Channel::new(
        InputSpace::RealVector(d),
        OutputAlphabet::Listed(sign_symbols()),
        Kernel::Response(Response::Binned {
            coord,
            thresholds: vec![0.0],
            table: rr_table(rr_bias(epsilon)),
        }),
        vec![ConstraintSpec::Ldp { epsilon }, ConstraintSpec::Comm { bits: 1 }],
    )
}

/// Forwards the signs of `coords` (0-based) of a `d`-vector.
pub fn make_subset_forward_channel(d: usize, coords: &[usize]) -> Result<Channel> {
    if coords.is_empty() {
        return Err(invalid("subset must be nonempty"));
    }
    Channel::new(
        InputSpace::RealVector(d),
        OutputAlphabet::SignTuples(coords.len() as u32),
        Kernel::Response(Response::SubsetForward { coords: coords.to_vec() }),
        vec![ConstraintSpec::Comm { bits: coords.len() as u32 }],
    )
}

/// Lossless channel on a finite alphabet.
pub fn identity_channel(symbols: Vec<Vec<i32>>) -> Result<Channel> {
    let n = symbols.len();
    let rows = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    Channel::new(
        InputSpace::Finite(symbols.clone()),
        OutputAlphabet::Listed(symbols),
        Kernel::Table(rows),
        vec![],
    )
}

/// Channel whose output law is `row` whatever the input.
pub fn constant_channel(inputs: Vec<Vec<i32>>, row: Vec<f64>) -> Result<Channel> {
    let outputs = (0..row.len() as i32).map(|y| vec![y]).collect();
    let rows = vec![row; inputs.len()];
    Channel::new(
        InputSpace::Finite(inputs),
        OutputAlphabet::Listed(outputs),
        Kernel::Table(rows),
        vec![ConstraintSpec::Ldp { epsilon: f64::MIN_POSITIVE }],
    )
}

/// Tabulated channel over `inputs` with outputs labelled `0..width`.
pub fn table_channel(
    inputs: Vec<Vec<i32>>,
    rows: Vec<Vec<f64>>,
    constraint: Vec<ConstraintSpec>,
) -> Result<Channel> {
    let width = rows.first().map_or(0, Vec::len) as i32;
    let outputs = (0..width).map(|y| vec![y]).collect();
    Channel::new(InputSpace::Finite(inputs), OutputAlphabet::Listed(outputs), Kernel::Table(rows), constraint)
}

/// Worst-case likelihood ratio of a channel with finite inputs.
pub fn ldp_ratio(ch: &Channel) -> Result<f64> {
    match &ch.kernel {
        Kernel::Table(rows) => Ok(rows_ratio(rows.iter(), ch.output_count() as usize)),
        Kernel::Response(_) => Err(unsupported("likelihood ratio needs a finite input space")),
    }
}

/// Bits needed to index the output alphabet.
pub fn comm_bits(ch: &Channel) -> u32 {
    let n = ch.output_count();
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Sign cube helper re-exported for building tabulated channels.
pub fn sign_inputs(d: usize) -> Result<Vec<Vec<i32>>> {
    sign_vectors(d)
}
