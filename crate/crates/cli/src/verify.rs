//! `verify`: certificate for a given labeling.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use proxi_kmeans::geometry::{
    achieved_alpha, check_center_proximity, check_outlier_proximity, pair_geometry, verify_containment, Certificate,
    Clustering, ContainmentReport, Dataset, PairGeometry, DEFAULT_TOLERANCE,
};
use proxi_kmeans::ProximityParams;
use serde::{Deserialize, Serialize};

use crate::{to_json, write_atomic, Outcome};

#[derive(Args, Clone, Debug)]
pub struct VerifyArgs {
    /// Headerless points CSV.
    pub points: PathBuf,
    /// `id,label` CSV with 0 for outliers.
    pub labels: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// Also require every cluster to hold at least omega*n/k points.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Expected number of outliers (default: the number of 0 labels).
    #[arg(long)]
    pub z: Option<usize>,
    /// Number of clusters (default: the largest label).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Certificate destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    pub omega: f64,
    pub min_size: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    pub geometry: PairGeometry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub alpha: f64,
    pub tolerance: f64,
    pub n: usize,
    pub k: usize,
    pub z: usize,
    pub sizes: Vec<usize>,
    pub cost: f64,
    pub achieved_alpha: f64,
    pub certificate: Certificate,
    pub balance: Option<Balance>,
    pub outliers: Vec<usize>,
    pub pairs: Vec<PairRow>,
    /// Present when the proximity check passes.
    pub containment: Option<ContainmentReport>,
}

pub fn verify(data: &Dataset, labels: Vec<Option<usize>>, args: &VerifyArgs) -> Result<VerifyReport> {
    if labels.len() != data.len() {
        bail!("{} labels for {} points", labels.len(), data.len());
    }
    let max_label = labels.iter().flatten().max().map_or(0, |l| l + 1);
    let k = args.k.unwrap_or(max_label);
    if k < max_label {
        bail!("label {max_label} exceeds k = {k}");
    }
    let clustering = Clustering::from_labels(data, labels, k)?;
    let z = args.z.unwrap_or(clustering.outliers.len());
    let params = ProximityParams::new(args.alpha)?.with_tolerance(args.tolerance)?;
    let certificate = if z == 0 && clustering.outliers.is_empty() {
        check_center_proximity(data, &clustering, params.alpha, params.tolerance)
    } else {
        check_outlier_proximity(data, &clustering, z, params.alpha, params.tolerance)
    };
    let sizes = clustering.sizes();
    let balance = args
        .omega
        .map(|omega| -> Result<Balance> {
            let p = params.clone().with_omega(omega)?;
            let min_size = p.min_cluster_size(data.len(), k);
            Ok(Balance {
                omega,
                min_size,
                pass: sizes.iter().all(|&s| s >= min_size),
            })
        })
        .transpose()?;
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if let Ok(geometry) = pair_geometry(&clustering.means[i], &clustering.means[j], params.alpha) {
                pairs.push(PairRow { i, j, geometry });
            }
        }
    }
    let containment = if certificate.pass {
        verify_containment(data, &clustering, params.alpha, params.tolerance).ok()
    } else {
        None
    };
    Ok(VerifyReport {
        pass: certificate.pass && balance.as_ref().is_none_or(|b| b.pass),
        alpha: params.alpha,
        tolerance: params.tolerance,
        n: data.len(),
        k,
        z,
        achieved_alpha: achieved_alpha(data, &clustering),
        cost: clustering.cost,
        outliers: clustering.outliers.clone(),
        sizes,
        certificate,
        balance,
        pairs,
        containment,
    })
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Outcome> {
    let data = proxi_kmeans::io::read_points(&args.points).with_context(|| format!("reading {}", args.points.display()))?;
    let labels = proxi_kmeans::io::read_labels(&args.labels, args.k)
        .with_context(|| format!("reading {}", args.labels.display()))?;
    let report = verify(&data, labels, args)?;
    let json = to_json(&report)?;
    match &args.out {
        Some(p) => write_atomic(p, &json)?,
        None => print!("{}", String::from_utf8(json)?),
    }
    Ok(if report.pass { Outcome::Success } else { Outcome::Negative })
}
