//! Subpopulation-wise independent label priors.
//!
//! A [`LabelPrior`] stores one categorical distribution per atom. The prior
//! over labelling functions is the product of these rows, so conditioning on
//! other atoms' labels never changes an atom's row.

use rand::Rng;

use crate::distribution::UnlabelledDataset;
use crate::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
enum Table {
    /// Every row uniform over the labels.
    Uniform,
    /// Same explicit row for every atom.
    Shared(Vec<f64>),
    /// One row per atom, row-major.
    Rows(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelPrior {
    domain: usize,
    n_labels: usize,
    table: Table,
}

impl LabelPrior {
    /// Every atom uniform over `n_labels` labels.
    pub fn uniform(domain: usize, n_labels: usize) -> Result<Self> {
        check_labels(n_labels)?;
        Ok(Self {
            domain,
            n_labels,
            table: Table::Uniform,
        })
    }

    /// Every atom puts mass `top` on label 0 and spreads the rest evenly.
    pub fn skewed(domain: usize, n_labels: usize, top: f64) -> Result<Self> {
        check_labels(n_labels)?;
        if !(top >= 1.0 / n_labels as f64 && top <= 1.0) {
            return Err(Error::param(
                "skewed",
                format!("top mass {top} outside [1/|Y|, 1]"),
            ));
        }
        let rest = (1.0 - top) / (n_labels - 1) as f64;
        let mut row = vec![rest; n_labels];
        row[0] = top;
        Ok(Self {
            domain,
            n_labels,
            table: Table::Shared(row),
        })
    }

    /// Same explicit row repeated over the whole domain.
    pub fn shared_row(domain: usize, row: Vec<f64>) -> Result<Self> {
        check_labels(row.len())?;
        check_row(&row, 0)?;
        Ok(Self {
            domain,
            n_labels: row.len(),
            table: Table::Shared(row),
        })
    }

    /// One explicit row per atom.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_labels = rows.first().map(Vec::len).unwrap_or(0);
        check_labels(n_labels)?;
        let mut flat = Vec::with_capacity(rows.len() * n_labels);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_labels {
                return Err(Error::param(
                    "rows",
                    format!("row {i} has {} entries, expected {n_labels}", row.len()),
                ));
            }
            check_row(row, i)?;
            flat.extend_from_slice(row);
        }
        Ok(Self {
            domain: rows.len(),
            n_labels,
            table: Table::Rows(flat),
        })
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    /// Probability that atom `x` carries label `y`.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        match &self.table {
            Table::Uniform => 1.0 / self.n_labels as f64,
            Table::Shared(row) => row[y],
            Table::Rows(flat) => flat[x * self.n_labels + y],
        }
    }

    fn row(&self, x: usize) -> RowRef<'_> {
        match &self.table {
            Table::Uniform => RowRef::Uniform,
            Table::Shared(row) => RowRef::Slice(row),
            Table::Rows(flat) => RowRef::Slice(&flat[x * self.n_labels..(x + 1) * self.n_labels]),
        }
    }

    /// `max_y F(x)[y]` for one atom.
    pub fn row_max(&self, x: usize) -> f64 {
        match self.row(x) {
            RowRef::Uniform => 1.0 / self.n_labels as f64,
            RowRef::Slice(r) => r.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Largest single-label probability over all atoms and labels.
    pub fn sup_norm(&self) -> f64 {
        match &self.table {
            Table::Uniform => 1.0 / self.n_labels as f64,
            Table::Shared(row) => row.iter().copied().fold(0.0, f64::max),
            Table::Rows(flat) => flat.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Largest single-label probability over the atoms in `range`.
    pub fn sup_norm_over(&self, range: std::ops::Range<usize>) -> f64 {
        range.map(|x| self.row_max(x)).fold(0.0, f64::max)
    }

    /// Draws one labelling function, each atom independently from its row.
    pub fn sample_labelling<R: Rng + ?Sized>(&self, rng: &mut R) -> Labelling {
        let assignment = (0..self.domain)
            .map(|x| match self.row(x) {
                RowRef::Uniform => rng.random_range(0..self.n_labels) as u32,
                RowRef::Slice(r) => sample_categorical(r, rng.random::<f64>()) as u32,
            })
            .collect();
        Labelling {
            assignment,
            n_labels: self.n_labels,
        }
    }
}

enum RowRef<'a> {
    Uniform,
    Slice(&'a [f64]),
}

fn sample_categorical(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in row.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap at the top: take the last positive entry.
    row.iter().rposition(|&w| w > 0.0).unwrap_or(row.len() - 1)
}

fn check_labels(n_labels: usize) -> Result<()> {
    if n_labels < 2 {
        return Err(Error::param("n_labels", format!("{n_labels} < 2")));
    }
    if n_labels > u32::MAX as usize {
        return Err(Error::param("n_labels", "too many labels"));
    }
    Ok(())
}

fn check_row(row: &[f64], i: usize) -> Result<()> {
    if let Some(v) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::param(
            "rows",
            format!("row {i} has invalid entry {v}"),
        ));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::param("rows", format!("row {i} sums to {s}")));
    }
    Ok(())
}

pub fn make_prior_uniform(domain: usize, n_labels: usize) -> Result<LabelPrior> {
    LabelPrior::uniform(domain, n_labels)
}

pub fn make_prior_table(rows: &[Vec<f64>]) -> Result<LabelPrior> {
    LabelPrior::from_rows(rows)
}

pub fn sup_norm(prior: &LabelPrior) -> f64 {
    prior.sup_norm()
}

/// A labelling function `f`, total on the domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labelling {
    assignment: Vec<u32>,
    n_labels: usize,
}

impl Labelling {
    pub fn new(assignment: Vec<u32>, n_labels: usize) -> Result<Self> {
        check_labels(n_labels)?;
        if let Some(&y) = assignment.iter().find(|&&y| y as usize >= n_labels) {
            return Err(Error::param(
                "labelling",
                format!("label {y} >= {n_labels}"),
            ));
        }
        Ok(Self {
            assignment,
            n_labels,
        })
    }

    pub fn label(&self, x: usize) -> u32 {
        self.assignment[x]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.assignment
    }

    pub fn domain(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    /// Labels every draw of `dataset` with `f(draw)`.
    pub fn label_dataset(&self, dataset: &UnlabelledDataset) -> Result<LabelledDataset> {
        if self.domain() != dataset.spec().domain_size() {
            return Err(Error::param(
                "labelling",
                format!(
                    "labelling covers {} atoms, dataset domain has {}",
                    self.domain(),
                    dataset.spec().domain_size()
                ),
            ));
        }
        let labels = dataset
            .draws()
            .iter()
            .map(|&x| self.assignment[x])
            .collect();
        Ok(LabelledDataset {
            data: dataset.clone(),
            labels,
            n_labels: self.n_labels,
        })
    }
}

pub fn label_dataset(dataset: &UnlabelledDataset, f: &Labelling) -> Result<LabelledDataset> {
    f.label_dataset(dataset)
}

/// Draws paired with clean labels from a single labelling function.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledDataset {
    data: UnlabelledDataset,
    labels: Vec<u32>,
    n_labels: usize,
}

impl LabelledDataset {
    /// Builds a dataset from explicit pairs. Repeated atoms must agree.
    pub fn from_pairs(data: UnlabelledDataset, labels: Vec<u32>, n_labels: usize) -> Result<Self> {
        check_labels(n_labels)?;
        if labels.len() != data.m() {
            return Err(Error::param(
                "labels",
                format!("{} labels for {} draws", labels.len(), data.m()),
            ));
        }
        let mut seen: Vec<Option<u32>> = vec![None; data.spec().domain_size()];
        for (&x, &y) in data.draws().iter().zip(&labels) {
            if y as usize >= n_labels {
                return Err(Error::param("labels", format!("label {y} >= {n_labels}")));
            }
            match seen[x] {
                Some(prev) if prev != y => {
                    return Err(Error::param(
                        "labels",
                        format!("atom {x} carries labels {prev} and {y}"),
                    ))
                }
                _ => seen[x] = Some(y),
            }
        }
        Ok(Self {
            data,
            labels,
            n_labels,
        })
    }

    /// Like [`from_pairs`](Self::from_pairs) but lets repeated atoms carry
    /// different labels, as happens when atoms are recovered from noisy
    /// features.
    pub fn from_observed_pairs(
        data: UnlabelledDataset,
        labels: Vec<u32>,
        n_labels: usize,
    ) -> Result<Self> {
        check_labels(n_labels)?;
        if labels.len() != data.m() {
            return Err(Error::param(
                "labels",
                format!("{} labels for {} draws", labels.len(), data.m()),
            ));
        }
        if let Some(&y) = labels.iter().find(|&&y| y as usize >= n_labels) {
            return Err(Error::param("labels", format!("label {y} >= {n_labels}")));
        }
        Ok(Self {
            data,
            labels,
            n_labels,
        })
    }

    pub fn unlabelled(&self) -> &UnlabelledDataset {
        &self.data
    }

    pub fn draws(&self) -> &[usize] {
        self.data.draws()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn domain_size(&self) -> usize {
        self.data.spec().domain_size()
    }
}
