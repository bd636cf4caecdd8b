//! `gen`: synthetic instances with ground truth.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use proxi_kmeans::geometry::Dataset;
use proxi_kmeans::instances::{
    add_planted_outliers, cover_to_clustering, gen_exponential_instance, gen_planted, known_cover,
    random_triangle_free_graph, Graph, PlantedSpec,
};
use proxi_kmeans::rng::{stream, stream_rng};
use serde::Serialize;

use crate::{labels_csv, to_json, write_atomic, Outcome};

pub const POINTS_FILE: &str = "points.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const INSTANCE_FILE: &str = "instance.json";

#[derive(Subcommand, Debug, Clone)]
pub enum GenCommand {
    /// k*m basis vectors; every balanced split is proximal below sqrt((m+1)/(m-1)).
    Exp(ExpArgs),
    /// Uniform-ball clusters around separated centers.
    Planted(PlantedArgs),
    /// One point per edge of a triangle-free graph, clustered by a vertex cover.
    Vc(VcArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ExpArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct PlantedArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 5)]
    pub n_per_cluster: usize,
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    /// Resample until the planted clustering is at least this proximal.
    #[arg(long, default_value_t = 2.0)]
    pub alpha_floor: f64,
    /// Outliers to append.
    #[arg(long, default_value_t = 0)]
    pub z: usize,
    /// Outlier distance from the centroid, in data diameters.
    #[arg(long, default_value_t = 3.0)]
    pub reach: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct VcArgs {
    /// Edge list (1-indexed `u v` per line); random graph when absent.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub vertices: usize,
    #[arg(long, default_value_t = 4)]
    pub max_degree: usize,
    #[arg(long, default_value_t = 200)]
    pub attempts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn write_instance<T: Serialize>(
    dir: &Path,
    data: &Dataset,
    labels: Option<&[Option<usize>]>,
    meta: &T,
) -> Result<()> {
    let mut buf = Vec::new();
    proxi_kmeans::io::write_points(data, &mut buf)?;
    write_atomic(&dir.join(POINTS_FILE), &buf)?;
    if let Some(l) = labels {
        write_atomic(&dir.join(LABELS_FILE), &labels_csv(l)?)?;
    }
    write_atomic(&dir.join(INSTANCE_FILE), &to_json(meta)?)?;
    Ok(())
}

pub fn cmd_gen(cmd: &GenCommand) -> Result<Outcome> {
    match cmd {
        GenCommand::Exp(a) => {
            let inst = gen_exponential_instance(a.k, a.m)?;
            let labels: Vec<Option<usize>> = (0..a.k * a.m).map(|i| Some(i / a.m)).collect();
            #[derive(Serialize)]
            struct Meta {
                kind: &'static str,
                k: usize,
                m: usize,
                threshold: f64,
                labeled_count: u128,
                labels: Vec<usize>,
            }
            write_instance(
                &a.out_dir,
                &inst.data,
                Some(&labels),
                &Meta {
                    kind: "exp",
                    k: a.k,
                    m: a.m,
                    threshold: inst.threshold,
                    labeled_count: inst.labeled_count,
                    labels: crate::one_based(&labels),
                },
            )?;
        }
        GenCommand::Planted(a) => {
            let spec = PlantedSpec::new(a.k, a.d, a.n_per_cluster, a.separation, a.spread, a.alpha_floor);
            let mut inst = gen_planted(&spec, a.seed)?;
            if a.z > 0 {
                inst = add_planted_outliers(&inst, a.z, a.reach, a.seed)?;
            }
            #[derive(Serialize)]
            struct Meta<'a> {
                kind: &'static str,
                z: usize,
                reach: f64,
                labels: Vec<usize>,
                means: &'a [Vec<f64>],
                centers: &'a [Vec<f64>],
                achieved_alpha: f64,
                spec: &'a PlantedSpec,
                seed: u64,
            }
            write_instance(
                &a.out_dir,
                &inst.data,
                Some(&inst.labels),
                &Meta {
                    kind: "planted",
                    z: a.z,
                    reach: a.reach,
                    labels: crate::one_based(&inst.labels),
                    means: &inst.means,
                    centers: &inst.centers,
                    achieved_alpha: inst.achieved_alpha,
                    spec: &inst.spec,
                    seed: inst.seed,
                },
            )?;
        }
        GenCommand::Vc(a) => {
            let graph = match &a.edges {
                Some(p) => Graph::read_edge_list(p).with_context(|| format!("reading {}", p.display()))?,
                None => {
                    let mut rng = stream_rng(a.seed, stream::GENERATOR + 2);
                    random_triangle_free_graph(a.vertices, a.max_degree, a.attempts, &mut rng)?
                }
            };
            let cover: BTreeSet<usize> = known_cover(&graph);
            let cc = cover_to_clustering(&graph, &cover)?;
            let data = proxi_kmeans::instances::gen_vertex_cover_instance(&graph)?;
            #[derive(Serialize)]
            struct Meta {
                kind: &'static str,
                n_vertices: usize,
                edges: Vec<(usize, usize)>,
                max_degree: usize,
                cover: Vec<usize>,
                cost: usize,
                achieved_alpha: f64,
                alpha_bound: f64,
                omega: f64,
                labels: Vec<usize>,
            }
            write_instance(
                &a.out_dir,
                &data,
                Some(&cc.clustering.labels),
                &Meta {
                    kind: "vc",
                    n_vertices: graph.n_vertices,
                    edges: graph.edges.iter().map(|&(u, v)| (u + 1, v + 1)).collect(),
                    max_degree: graph.max_degree(),
                    cover: cc.cover.iter().map(|v| v + 1).collect(),
                    cost: cc.integer_cost,
                    achieved_alpha: cc.achieved_alpha,
                    alpha_bound: cc.alpha_bound,
                    omega: cc.omega,
                    labels: crate::one_based(&cc.clustering.labels),
                },
            )?;
        }
    }
    Ok(Outcome::Success)
}
