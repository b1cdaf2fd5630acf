//! Continuous synthetic data: Gaussian clusters on boolean hypercube
//! vertices.
//!
//! Minority clusters live on a cube of dimension `d_min = ⌈log₂(c m)⌉` and
//! majority clusters on one of dimension `d_maj = ⌈log₂(k (1 - p))⌉`. A row
//! carries both blocks: its own group's block holds the noisy vertex, the
//! other block is filled with the constant [`PAD`].
//!
//! Cluster ids follow the discrete domain layout, so majority clusters are
//! `0..n_majority` and minority clusters follow.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};

use crate::distribution::{DistributionSpec, Group};
use crate::labels::LabelledDataset;
use crate::{Error, Result};

/// Value of every padding coordinate.
pub const PAD: f64 = 1e-4;

/// Largest supported cube dimension.
pub const MAX_DIMENSION: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub p: f64,
    pub k: f64,
    pub m: usize,
    /// Ratio target, `N = ⌈c m⌉`.
    pub c: f64,
    pub sigma: f64,
    pub n_labels: usize,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(p: f64, k: f64, m: usize, c: f64) -> Self {
        Self {
            p,
            k,
            m,
            c,
            sigma: 0.1,
            n_labels: 2,
            seed: 0,
        }
    }

    pub fn n_minority(&self) -> usize {
        (self.c * self.m as f64).ceil() as usize
    }

    pub fn d_min(&self) -> u32 {
        ceil_log2(self.c * self.m as f64)
    }

    pub fn d_maj(&self) -> u32 {
        ceil_log2(self.k * (1.0 - self.p))
    }

    /// The discrete distribution the clusters stand for.
    pub fn discrete_spec(&self) -> Result<DistributionSpec> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param("c", format!("{} must be > 0", self.c)));
        }
        if self.m == 0 {
            return Err(Error::param("m", "need at least one row"));
        }
        DistributionSpec::long_tail(self.p, self.k, self.n_minority())
    }

    fn validate(&self) -> Result<DistributionSpec> {
        let spec = self.discrete_spec()?;
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(
                "sigma",
                format!("{} must be >= 0", self.sigma),
            ));
        }
        if self.n_labels < 2 {
            return Err(Error::param("n_labels", format!("{} < 2", self.n_labels)));
        }
        for (name, d, need) in [
            ("d_min", self.d_min(), spec.n_minority()),
            ("d_maj", self.d_maj(), spec.n_majority()),
        ] {
            if d > MAX_DIMENSION {
                return Err(Error::param(
                    "c",
                    format!("{name} = {d} exceeds {MAX_DIMENSION}"),
                ));
            }
            if (1u64 << d) < need as u64 {
                return Err(Error::param(
                    "k",
                    format!(
                        "{name} = {d} gives {} vertices for {need} clusters",
                        1u64 << d
                    ),
                ));
            }
        }
        Ok(spec)
    }
}

fn ceil_log2(x: f64) -> u32 {
    if x <= 2.0 {
        1
    } else {
        x.log2().ceil() as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRow {
    pub features: Vec<f64>,
    pub label: u32,
    pub group: Group,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDataset {
    pub params: SynthParams,
    pub spec: DistributionSpec,
    pub d_min: u32,
    pub d_maj: u32,
    /// Vertex of each cluster, as a bit mask over its group's cube.
    pub vertices: Vec<u64>,
    pub cluster_labels: Vec<u32>,
    pub rows: Vec<SynthRow>,
}

impl ContinuousDataset {
    pub fn width(&self) -> usize {
        (self.d_min + self.d_maj) as usize
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut cols: Vec<String> = (0..self.width()).map(|i| format!("f{i}")).collect();
        cols.extend(["label", "group", "cluster"].map(String::from));
        cols
    }

    /// Feature columns of `group`'s own block.
    pub fn block(&self, group: Group) -> std::ops::Range<usize> {
        let d_min = self.d_min as usize;
        match group {
            Group::Minority => 0..d_min,
            Group::Majority => d_min..self.width(),
        }
    }

    pub fn minority_rows(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.group == Group::Minority)
            .count()
    }

    /// Writes the dataset as CSV with 9 significant digits per feature.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.column_names())?;
        let mut record = Vec::with_capacity(self.width() + 3);
        for row in &self.rows {
            record.clear();
            record.extend(row.features.iter().map(|&v| sig9(v)));
            record.push(row.label.to_string());
            record.push(row.group.as_str().to_string());
            record.push(row.cluster.to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Decimal text with 9 significant digits.
pub fn sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding can carry into a new leading digit
    let digits = s
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count();
    if digits > 9 && decimals > 0 {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// Draws a dataset of `params.m` rows.
pub fn generate_continuous<R: Rng + ?Sized>(
    params: &SynthParams,
    rng: &mut R,
) -> Result<ContinuousDataset> {
    let spec = params.validate()?;
    let (d_min, d_maj) = (params.d_min(), params.d_maj());
    let n_maj = spec.n_majority();
    let n_min = spec.n_minority();

    let mut vertices: Vec<u64> = index::sample(rng, 1usize << d_maj, n_maj)
        .into_iter()
        .map(|v| v as u64)
        .collect();
    vertices.extend(
        index::sample(rng, 1usize << d_min, n_min)
            .into_iter()
            .map(|v| v as u64),
    );
    let cluster_labels: Vec<u32> = (0..n_maj + n_min)
        .map(|_| rng.random_range(0..params.n_labels) as u32)
        .collect();

    let m1 = Binomial::new(params.m as u64, params.p)
        .map_err(|e| Error::param("p", e.to_string()))?
        .sample(rng) as usize;
    let noise = if params.sigma > 0.0 {
        Some(Normal::new(0.0, params.sigma).map_err(|e| Error::param("sigma", e.to_string()))?)
    } else {
        None
    };

    let width = (d_min + d_maj) as usize;
    let mut rows = Vec::with_capacity(params.m);
    for i in 0..params.m {
        let group = if i < m1 {
            Group::Minority
        } else {
            Group::Majority
        };
        let (cluster, offset, d) = match group {
            Group::Minority => (n_maj + rng.random_range(0..n_min), 0, d_min),
            Group::Majority => (rng.random_range(0..n_maj), d_min as usize, d_maj),
        };
        let mut features = vec![PAD; width];
        let vertex = vertices[cluster];
        for bit in 0..d as usize {
            let mut v = ((vertex >> bit) & 1) as f64;
            if let Some(n) = &noise {
                v += n.sample(rng);
            }
            features[offset + bit] = v;
        }
        rows.push(SynthRow {
            features,
            label: cluster_labels[cluster],
            group,
            cluster,
        });
    }
    rows.shuffle(rng);

    Ok(ContinuousDataset {
        params: *params,
        spec,
        d_min,
        d_maj,
        vertices,
        cluster_labels,
        rows,
    })
}

/// Maps every row back to a discrete subpopulation.
///
/// The group comes from the padding block. The row's own block is
/// thresholded at 0.5 per coordinate; when the resulting vertex is not a
/// cluster centre the row goes to the centre nearest in Hamming distance
/// (lowest id on ties). Rows keep their own label, so an atom that received
/// a stray row can carry two labels.
pub fn nearest_vertex_discretize(data: &ContinuousDataset) -> Result<LabelledDataset> {
    let n_maj = data.spec.n_majority();
    let mut lookup: [HashMap<u64, usize>; 2] = [HashMap::new(), HashMap::new()];
    for (cluster, &v) in data.vertices.iter().enumerate() {
        lookup[(cluster >= n_maj) as usize].insert(v, cluster);
    }
    let pad_block = |g: Group| match g {
        Group::Minority => data.block(Group::Majority),
        Group::Majority => data.block(Group::Minority),
    };

    let mut draws = Vec::with_capacity(data.rows.len());
    let mut labels = Vec::with_capacity(data.rows.len());
    for row in &data.rows {
        let group = if row.features[pad_block(Group::Minority)]
            .iter()
            .all(|&v| v == PAD)
        {
            Group::Minority
        } else {
            Group::Majority
        };
        let block = &row.features[data.block(group)];
        let vertex = block
            .iter()
            .enumerate()
            .fold(0u64, |acc, (bit, &v)| acc | (((v > 0.5) as u64) << bit));
        let table = &lookup[(group == Group::Minority) as usize];
        let cluster = match table.get(&vertex) {
            Some(&c) => c,
            None => {
                let range = data.spec.group_range(group);
                range
                    .min_by_key(|&c| ((data.vertices[c] ^ vertex).count_ones(), c))
                    .expect("groups are nonempty")
            }
        };
        draws.push(cluster);
        labels.push(row.label);
    }
    let unlabelled = crate::distribution::UnlabelledDataset::from_draws(data.spec, draws)?;
    LabelledDataset::from_observed_pairs(unlabelled, labels, data.params.n_labels)
}
