//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use proxi_kmeans::geometry::{check_outlier_proximity, distance, pair_geometry, verify_containment, Dataset};
use proxi_kmeans::instances::{
    add_planted_outliers, cover_to_clustering, gen_exponential_instance, gen_planted, known_cover,
    random_triangle_free_graph, PlantedInstance, PlantedSpec,
};
use proxi_kmeans::oracle::{count_proximal_clusterings, oracle_solve, OracleBudget};
use proxi_kmeans::params::delta_bound;
use proxi_kmeans::peeling::{claim_radius_holds, peeling_mass, rad_min, radius_candidates, TreeConfig};
use proxi_kmeans::rng::{stream, stream_rng};
use proxi_kmeans::sampler::{
    concentration_sample_size, coverage_check, sample_mean_concentration_check, wilson_lower_bound,
};
use proxi_kmeans::solver::{assign, assign_with_outliers, mean_distance_ratio, Mode};
use proxi_kmeans::{Point, ProximityParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_proxi-kmeans");
const WILSON_Z: f64 = 1.645;
const TRIALS: usize = 10_000;

type Outcome = Result<String, String>;

fn criterion(failed: &mut usize, id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) {
    let clock = Instant::now();
    let mut r = f();
    let took = clock.elapsed();
    if let (Ok(msg), Some(limit)) = (&r, limit) {
        if took > limit {
            r = Err(format!("{msg}; took {took:.1?}, limit {limit:?}"));
        }
    }
    match r {
        Ok(msg) => println!("PASS {id}. {name}: {msg} [{took:.1?}]"),
        Err(msg) => {
            *failed += 1;
            println!("FAIL {id}. {name}: {msg} [{took:.1?}]");
        }
    }
}

fn write_points(dir: &Path, data: &Dataset) -> std::path::PathBuf {
    let path = dir.join("points.csv");
    proxi_kmeans::io::save_points(data, &path).unwrap();
    path
}

fn run_cli(args: &[&str]) -> Result<i32, String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    let code = out.status.code().unwrap_or(-1);
    if code == 1 {
        return Err(String::from_utf8_lossy(&out.stderr).trim().to_string());
    }
    Ok(code)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn labels_of(result: &Value) -> Option<Vec<Option<usize>>> {
    let labels = result["best"]["labels"].as_array()?;
    Some(labels.iter().map(|l| (l.as_u64().unwrap() as usize).checked_sub(1)).collect())
}

fn same_partition(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
    proxi_kmeans::geometry::canonical_labels(a) == proxi_kmeans::geometry::canonical_labels(b)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn planted(k: usize, d: usize, n: usize, spread: f64, floor: f64, seed: u64) -> PlantedInstance {
    gen_planted(&PlantedSpec::new(k, d, n, 10.0, spread, floor), seed).unwrap()
}

fn random_direction(rng: &mut ChaCha8Rng, d: usize) -> Point {
    loop {
        let v: Point = (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn perturb(rng: &mut ChaCha8Rng, mu: &[f64], max_norm: f64) -> Point {
    let dir = random_direction(rng, mu.len());
    let r = rng.random::<f64>() * max_norm;
    mu.iter().zip(dir).map(|(m, v)| m + r * v).collect()
}

/// Solver pipeline through the binary against the exhaustive oracle.
fn oracle_equivalence() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let params = ProximityParams::new(2.0).unwrap().with_omega(0.5).unwrap();
    let mut matched = 0;
    let mut misses = Vec::new();
    for i in 0..100u64 {
        let k = 2 + (i % 2) as usize;
        let d = 1 + (i / 2 % 4) as usize;
        let n = if k == 2 { 3 + (i / 8 % 4) } else { 2 + (i / 8 % 3) } as usize;
        let inst = planted(k, d, n, 2.0, 2.0, 1000 + i);
        let dir = tmp.path().join(format!("c1-{i}"));
        std::fs::create_dir_all(&dir).unwrap();
        let points = write_points(&dir, &inst.data);
        let k_arg = k.to_string();
        let seed = i.to_string();
        let code = run_cli(&[
            "solve",
            points.to_str().unwrap(),
            "--k",
            &k_arg,
            "--alpha",
            "2",
            "--omega",
            "0.5",
            "--mode",
            "balanced",
            "--sample-size",
            "8",
            "--repeats",
            "20",
            "--seed",
            &seed,
            "--out-dir",
            dir.to_str().unwrap(),
        ])?;
        let opt = oracle_solve(&inst.data, k, &params, Mode::Balanced, OracleBudget::default())
            .map_err(|e| e.to_string())?
            .best;
        let result = read_json(&dir.join("result.json"));
        let ok = match (&opt, labels_of(&result)) {
            (Some(o), Some(l)) => {
                code == 0 && same_partition(&o.labels, &l) && rel_close(o.cost, result["best"]["cost"].as_f64().unwrap(), 1e-9)
            }
            (None, None) => code == 2,
            _ => false,
        };
        if ok {
            matched += 1;
        } else {
            misses.push(i);
        }
    }
    let msg = format!("{matched}/100 match the oracle (misses: {misses:?})");
    if matched >= 95 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn proximal_alpha(inst: &PlantedInstance) -> f64 {
    inst.achieved_alpha.min(1e3) * (1.0 - 1e-9)
}

fn perturbation_exactness() -> Outcome {
    let mut rng = stream_rng(2, stream::CHECKS);
    let floors = [1.2, 1.5, 2.0, 3.0];
    let mut ok = 0;
    for i in 0..500u64 {
        let k = 2 + (i % 3) as usize;
        let d = 1 + (i / 3 % 5) as usize;
        let n = 2 + (i / 15 % 7) as usize;
        let inst = planted(k, d, n, 2.0, floors[(i % 4) as usize], 2000 + i);
        let alpha = proximal_alpha(&inst);
        let delta = delta_bound(alpha);
        let perturbed: Vec<Point> = (0..k)
            .map(|a| {
                let r_min = (0..k)
                    .filter(|&b| b != a)
                    .map(|b| alpha / (alpha * alpha - 1.0) * distance(&inst.means[a], &inst.means[b]).unwrap())
                    .fold(f64::INFINITY, f64::min);
                perturb(&mut rng, &inst.means[a], 2.0 * delta * r_min)
            })
            .collect();
        let got = assign(&inst.data, &perturbed).unwrap();
        if got.labels == inst.labels {
            ok += 1;
        }
    }
    let msg = format!("{ok}/500 reproduce the planted labels");
    if ok == 500 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn outlier_exactness() -> Outcome {
    let mut rng = stream_rng(3, stream::CHECKS);
    let floors = [1.5, 2.0, 3.0];
    let mut ok = 0;
    for i in 0..500u64 {
        let k = 2 + (i % 2) as usize;
        let d = 1 + (i / 2 % 4) as usize;
        let n = 3 + (i / 8 % 4) as usize;
        let z = 1 + (i / 3 % 2) as usize;
        let alpha = floors[(i % 3) as usize];
        let base = planted(k, d, n, 2.0, alpha, 3000 + i);
        let inst = add_planted_outliers(&base, z, 3.0, 3000 + i).map_err(|e| e.to_string())?;
        let c = inst.clustering();
        if !check_outlier_proximity(&inst.data, &c, z, alpha, 0.0).pass {
            return Err(format!("instance {i} does not satisfy the outlier definition"));
        }
        let delta = delta_bound(alpha);
        let perturbed: Vec<Point> = (0..k)
            .map(|a| {
                let members: Vec<&[f64]> = inst.data.select(&c.members(a));
                let diam = proxi_kmeans::geometry::diameter(&members);
                perturb(&mut rng, &inst.means[a], delta * diam)
            })
            .collect();
        let got = assign_with_outliers(&inst.data, &perturbed, z).unwrap();
        let found: BTreeSet<usize> = (0..got.labels.len()).filter(|&p| got.labels[p].is_none()).collect();
        let planted_z: BTreeSet<usize> = c.outliers.iter().copied().collect();
        if found == planted_z && got.labels == inst.labels {
            ok += 1;
        }
    }
    let msg = format!("{ok}/500 recover Z and the inlier labels");
    if ok == 500 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn vertex_cover_identity() -> Outcome {
    let mut rng = stream_rng(4, stream::CHECKS);
    let mut worst_margin = f64::INFINITY;
    for i in 0..100 {
        let n_vertices = 5 + i % 12;
        let graph = random_triangle_free_graph(n_vertices, 4, 4 * n_vertices, &mut rng).map_err(|e| e.to_string())?;
        if graph.max_degree() > 4 || !graph.is_triangle_free() {
            return Err(format!("graph {i} breaks the generator contract"));
        }
        let cover = known_cover(&graph);
        if !graph.is_vertex_cover(&cover) {
            return Err(format!("graph {i}: known cover is not a cover"));
        }
        let cc = cover_to_clustering(&graph, &cover).map_err(|e| e.to_string())?;
        let m = graph.edges.len();
        let k = cc.cover.len();
        if cc.integer_cost != m - k || (cc.clustering.cost - (m - k) as f64).abs() > 1e-9 {
            return Err(format!("graph {i}: cost {} / {} vs m - k = {}", cc.integer_cost, cc.clustering.cost, m - k));
        }
        let delta = graph.max_degree() as f64;
        let bound = if delta > 1.0 { ((delta + 1.0) / (delta - 1.0)).sqrt() } else { f64::INFINITY };
        if cc.achieved_alpha < bound - 1e-9 {
            return Err(format!("graph {i}: achieved alpha {} below {bound}", cc.achieved_alpha));
        }
        if bound.is_finite() {
            worst_margin = worst_margin.min(cc.achieved_alpha - bound);
        }
    }
    Ok(format!("100/100 graphs; smallest alpha margin {worst_margin:.3e}"))
}

fn exponential_counts() -> Outcome {
    let mut parts = Vec::new();
    for (k, m, expected) in [(2, 2, 6u128), (2, 3, 20), (3, 2, 90)] {
        let inst = gen_exponential_instance(k, m).map_err(|e| e.to_string())?;
        let count = |alpha: f64| {
            let params = ProximityParams::new(alpha).unwrap();
            count_proximal_clusterings(&inst.data, k, &params, Mode::Balanced, OracleBudget::default())
                .map_err(|e| e.to_string())
        };
        let below = count(0.999 * inst.threshold)?;
        let above = count(1.001 * inst.threshold)?;
        if below.labeled != expected || above.labeled != 0 || inst.labeled_count != expected {
            return Err(format!(
                "(k={k}, m={m}): {} below, {} above, expected {expected} and 0",
                below.labeled, above.labeled
            ));
        }
        parts.push(format!("({k},{m}) -> {}", below.labeled));
    }
    Ok(parts.join(", "))
}

fn geometry_identities() -> Outcome {
    let mut rng = stream_rng(6, stream::CHECKS);
    let close = |a: f64, b: f64| rel_close(a, b, 1e-9);
    for i in 0..1000 {
        let d = 1 + i % 5;
        let mu_i: Point = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mu_j: Point = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let sep = distance(&mu_i, &mu_j).unwrap();
        for alpha in [1.1, 1.5, 2.0, 3.0] {
            let g = pair_geometry(&mu_i, &mu_j, alpha).map_err(|e| e.to_string())?;
            let a2 = alpha * alpha;
            let hat: Point = mu_i.iter().zip(&mu_j).map(|(x, y)| (a2 * x - y) / (a2 - 1.0)).collect();
            let checks = [
                distance(&hat, &g.ball_center_i).unwrap() <= 1e-9 * sep.max(1.0),
                close(g.ball_radius_i, alpha / (a2 - 1.0) * sep),
                close(g.ball_radius_j, g.ball_radius_i),
                close(distance(&g.ball_center_i, &g.ball_center_j).unwrap(), g.center_distance),
                close(g.center_distance, (a2 + 1.0) / (a2 - 1.0) * sep),
                close(g.center_distance - 2.0 * g.ball_radius_i, g.gap),
                close(g.gap, (alpha - 1.0) / (alpha + 1.0) * sep),
                close(g.cone_half_angle.sin() * g.center_distance / 2.0, g.ball_radius_i),
                close(distance(&g.midpoint, &mu_i).unwrap(), sep / 2.0),
            ];
            if let Some(which) = checks.iter().position(|c| !c) {
                return Err(format!("pair {i}, alpha {alpha}: identity {which} fails"));
            }
        }
    }
    let floors = [1.2, 1.5, 2.0, 3.0];
    for i in 0..1000u64 {
        let k = 2 + (i % 3) as usize;
        let d = 1 + (i / 3 % 4) as usize;
        let n = 2 + (i / 12 % 5) as usize;
        let inst = planted(k, d, n, 2.0, floors[(i % 4) as usize], 6000 + i);
        let alpha = inst.achieved_alpha.min(50.0) * (1.0 - 1e-6);
        let report = verify_containment(&inst.data, &inst.clustering(), alpha, 1e-9).map_err(|e| e.to_string())?;
        if !report.pass {
            return Err(format!("clustering {i}: containment fails"));
        }
    }
    Ok("4000 pair geometries and 1000 containments hold".into())
}

fn sampling_concentration() -> Outcome {
    let mut rng = stream_rng(7, stream::CHECKS);
    let mut parts = Vec::new();
    for (alpha, beta3, size, dim) in [(3.0, 0.1, 50, 3), (4.0, 0.2, 200, 2)] {
        let delta = delta_bound(alpha);
        let a: Vec<Point> = (0..size).map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let l = concentration_sample_size(delta, beta3);
        let rate = sample_mean_concentration_check(&a, l, delta, beta3, TRIALS, &mut rng).map_err(|e| e.to_string())?;
        let lb = wilson_lower_bound((rate * TRIALS as f64).round() as usize, TRIALS, WILSON_Z);
        if lb < 1.0 - beta3 {
            return Err(format!("concentration at l={l}: lower bound {lb:.4} < {}", 1.0 - beta3));
        }
        parts.push(format!("concentration l={l} rate {rate:.4} (lb {lb:.4} >= {:.2})", 1.0 - beta3));
    }
    for (sizes, omega, l0, beta2) in [(vec![10, 20, 30], 0.5, 5, 0.1), (vec![25, 25], 1.0, 8, 0.05)] {
        let r = coverage_check(&sizes, omega, l0, beta2, TRIALS, &mut rng).map_err(|e| e.to_string())?;
        let lb = wilson_lower_bound((r.rate * TRIALS as f64).round() as usize, TRIALS, WILSON_Z);
        if lb < 1.0 - beta2 {
            return Err(format!("coverage m={}: lower bound {lb:.4} < {}", r.m, 1.0 - beta2));
        }
        parts.push(format!("coverage m={} rate {:.4} (lb {lb:.4} >= {:.2})", r.m, r.rate, 1.0 - beta2));
    }
    Ok(parts.join("; "))
}

fn peeling_tree() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (alpha, gamma, eps) = (2.0, 2.0, 0.25);
    let params = ProximityParams::new(alpha).unwrap().with_gamma(gamma).unwrap();
    let mut recovered = 0;
    let mut misses = Vec::new();
    let mut truncated = 0;
    let mut radius_checks = 0;
    for i in 0..20u64 {
        let inst = planted(2, 2, 6, 1.5, alpha, 8000 + i);
        if mean_distance_ratio(&inst.means) > gamma {
            return Err(format!("instance {i} exceeds gamma"));
        }
        let dir = tmp.path().join(format!("c8-{i}"));
        std::fs::create_dir_all(&dir).unwrap();
        let points = write_points(&dir, &inst.data);
        let seed = i.to_string();
        let code = run_cli(&[
            "solve",
            points.to_str().unwrap(),
            "--k",
            "2",
            "--alpha",
            "2",
            "--gamma",
            "2",
            "--mode",
            "gamma",
            "--candidate-source",
            "tree",
            "--epsilon",
            "0.25",
            "--tree-sample-size",
            "8",
            "--grid-density",
            "8",
            "--node-budget",
            "1000000",
            "--seed",
            &seed,
            "--out-dir",
            dir.to_str().unwrap(),
        ])?;
        let result = read_json(&dir.join("result.json"));
        if result["tree"]["truncated"].as_bool() == Some(true) {
            truncated += 1;
        }
        let opt = oracle_solve(&inst.data, 2, &params, Mode::Gamma, OracleBudget::default())
            .map_err(|e| e.to_string())?
            .best;
        let ok = match (&opt, labels_of(&result)) {
            (Some(o), Some(l)) => {
                code == 0 && same_partition(&o.labels, &l) && rel_close(o.cost, result["best"]["cost"].as_f64().unwrap(), 1e-9)
            }
            (None, None) => code == 2,
            _ => false,
        };
        if ok {
            recovered += 1;
        } else {
            misses.push(i);
        }

        // radius claim over the scanned schedule
        let cfg = TreeConfig::new(&inst.data, 2, alpha, gamma, eps, 8, 8, 1, 0).map_err(|e| e.to_string())?;
        let rm = rad_min(&inst.means, alpha).unwrap();
        for j in 1..=2 {
            let verdicts: Vec<Option<bool>> =
                cfg.zeta_schedule.iter().map(|&z| claim_radius_holds(j, eps, z, gamma, rm)).collect();
            if verdicts.contains(&Some(false)) {
                return Err(format!("instance {i}, j={j}: no radius in the claimed interval"));
            }
            if !verdicts.contains(&Some(true)) {
                return Err(format!("instance {i}, j={j}: no schedule value within [rad_min, (1+eps) rad_min]"));
            }
            radius_checks += verdicts.iter().filter(|v| v.is_some()).count();
        }
    }

    // peeling mass with exact inductive centers, at the capped epsilon
    let mut mass_checks = 0;
    for i in 0..50u64 {
        let k = 3;
        let inst = planted(k, 2, 4 + (i % 4) as usize, 1.5, 2.0, 8500 + i);
        let labels: Vec<usize> = inst.labels.iter().map(|l| l.unwrap()).collect();
        let g = mean_distance_ratio(&inst.means).max(1.0);
        let eps = 1.0 / (4.0 * (k * k) as f64);
        let rm = rad_min(&inst.means, alpha).unwrap();
        for j in 1..k {
            let lo = j as f64 * eps.sqrt() * g * rm;
            let hi = (1.0 + eps / 2.0) * lo;
            let r = radius_candidates(j, eps, rm, g)
                .into_iter()
                .find(|&r| r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12))
                .ok_or(format!("instance {i}: no radius for j={j}"))?;
            for (l, (count, bound)) in peeling_mass(&inst.data, &labels, &inst.means, j, r, eps).into_iter().enumerate() {
                if count as f64 > bound {
                    return Err(format!("instance {i}, j={j}, cluster {l}: {count} survivors > {bound}"));
                }
                mass_checks += 1;
            }
        }
    }

    let msg = format!(
        "{recovered}/20 recover the oracle optimum ({truncated} trees truncated by the budget; misses {misses:?}); \
         {radius_checks} radius claims and {mass_checks} peeling bounds hold"
    );
    if recovered >= 18 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inst = planted(3, 3, 4, 2.0, 2.0, 9000);
    let points = write_points(tmp.path(), &inst.data);
    let points = points.to_str().unwrap();
    let mut compared = 0;
    for (name, extra) in [
        ("sampler", vec!["--sample-size", "7", "--repeats", "5"]),
        ("tree", vec!["--candidate-source", "tree", "--mode", "gamma", "--gamma", "3", "--node-budget", "50000"]),
    ] {
        let dirs: Vec<_> = ["t1", "t4", "replay"].iter().map(|d| tmp.path().join(format!("{name}-{d}"))).collect();
        for (dir, threads) in dirs[..2].iter().zip(["1", "4"]) {
            let mut args = vec!["solve", points, "--k", "3", "--alpha", "2", "--omega", "0.5", "--seed", "11"];
            args.extend(&extra);
            args.extend(["--threads", threads, "--out-dir", dir.to_str().unwrap()]);
            run_cli(&args)?;
        }
        run_cli(&[
            "replay",
            dirs[0].join("manifest.json").to_str().unwrap(),
            "--out-dir",
            dirs[2].to_str().unwrap(),
            "--threads",
            "2",
        ])?;
        for file in ["result.json", "labels.csv"] {
            let bytes: Vec<Vec<u8>> = dirs.iter().map(|d| std::fs::read(d.join(file)).unwrap_or_default()).collect();
            if bytes[0].is_empty() || bytes.iter().any(|b| b != &bytes[0]) {
                return Err(format!("{name}: {file} differs across threads or replay"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} outputs byte-identical across threads 1/4 and manifest replay"))
}

fn main() {
    let mut failed = 0;
    let f = &mut failed;
    criterion(f, 1, "oracle equivalence", Some(Duration::from_secs(600)), oracle_equivalence);
    criterion(f, 2, "exactness under perturbation", None, perturbation_exactness);
    criterion(f, 3, "outlier exactness", None, outlier_exactness);
    criterion(f, 4, "vertex-cover identity", None, vertex_cover_identity);
    criterion(f, 5, "exponential counts", Some(Duration::from_secs(60)), exponential_counts);
    criterion(f, 6, "geometry identities", None, geometry_identities);
    criterion(f, 7, "sampling concentration", Some(Duration::from_secs(60)), sampling_concentration);
    criterion(f, 8, "peeling tree", None, peeling_tree);
    criterion(f, 9, "determinism", None, determinism);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
