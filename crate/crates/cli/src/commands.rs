use std::path::{Path, PathBuf};

use mtt_core::io::{TrackRecord, TrackSetRecord};
use mtt_core::metrics::{chain_summary, ospa, Histogram, Ospa};
use mtt_core::model::{simulate as simulate_scene, THETA_NAMES};
use mtt_core::moves::MoveKind;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::chains::{run_chains, ChainOutput, Sample};
use crate::config::Config;
use crate::error::{CliError, Result};
use crate::files::{csv_with_header, read_json, read_scene, scene_csv, Header, Outputs, TruthFile};

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Writes `scene.csv` and `truth.json`.
pub fn simulate(cfg: &Config, out: &mut Outputs) -> Result<()> {
    let (_, _, scene) = simulate_scene(&cfg.model.params(), cfg.run.n_scans, cfg.run.seed)?;
    let header = Header::new("simulate", cfg);
    out.write("scene.csv", &scene_csv(&scene, &header)?)?;
    let truth = scene.truth.as_ref().expect("simulated scenes carry their truth");
    let file = TruthFile { header: header.with("n_scans", scene.n()).to_json(), set: TrackSetRecord::from(truth) };
    out.write_json("truth.json", &file)?;
    Ok(())
}

#[derive(Serialize)]
struct SamplesFile<'a> {
    header: Value,
    samples: &'a [Sample],
}

#[derive(Serialize)]
struct ThetaSummary<'a> {
    name: &'a str,
    #[serde(flatten)]
    hist: &'a Histogram,
}

/// Runs the sampler on a scene file. Per chain `c` it writes `trace_c.csv`,
/// `samples_c.json`, `summary_c.json` and, when learning, `theta_c.csv`.
pub fn track(cfg: &Config, scene_path: &Path, learn: bool, workers: usize, out: &mut Outputs) -> Result<()> {
    let scene = read_scene(scene_path)?;
    let command = if learn { "learn" } else { "track" };
    let base = Header::new(command, cfg).with("scene_sha256", file_sha256(scene_path)?);
    let chains = run_chains(cfg, &scene, learn, workers)?;
    for (c, chain) in chains.iter().enumerate() {
        let header = base.clone().with("chain", c);
        write_chain(cfg, &header, c, chain, learn, out)?;
    }
    Ok(())
}

fn write_chain(cfg: &Config, header: &Header, c: usize, chain: &ChainOutput, learn: bool, out: &mut Outputs) -> Result<()> {
    let trace = csv_with_header(header, |w| {
        w.write_record(["sweep", "log_joint", "num_tracks", "move", "proposed", "accepted"])?;
        for e in &chain.trace {
            for kind in MoveKind::ALL {
                let i = kind.index();
                w.write_record([
                    e.sweep.to_string(),
                    e.log_joint.to_string(),
                    e.num_tracks.to_string(),
                    kind.name().to_string(),
                    e.moves.proposed[i].to_string(),
                    e.moves.accepted[i].to_string(),
                ])?;
            }
        }
        Ok(())
    })?;
    out.write(&format!("trace_{c}.csv"), &trace)?;
    if learn {
        let theta = csv_with_header(header, |w| {
            w.write_record(std::iter::once("sweep").chain(THETA_NAMES))?;
            for e in &chain.trace {
                let th = e.theta.expect("learning chains record θ");
                w.write_record(std::iter::once(e.sweep.to_string()).chain(th.iter().map(f64::to_string)))?;
            }
            Ok(())
        })?;
        out.write(&format!("theta_{c}.csv"), &theta)?;
    }
    out.write_json(&format!("samples_{c}.json"), &SamplesFile { header: header.to_json(), samples: &chain.samples })?;

    let s = chain_summary(&chain.trace, cfg.run.burn_in, cfg.run.hist_bins)?;
    let finite = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
    let acceptance: serde_json::Map<String, Value> =
        MoveKind::ALL.iter().map(|k| (k.name().to_string(), finite(s.acceptance[k.index()]))).collect();
    let theta: Vec<ThetaSummary> =
        s.theta_histograms.iter().zip(THETA_NAMES).map(|(hist, name)| ThetaSummary { name, hist }).collect();
    let map = &chain.trace[s.map_index];
    let summary = json!({
        "header": header.to_json(),
        "burn_in": cfg.run.burn_in,
        "acceptance": acceptance,
        "overall_acceptance": finite(s.overall_acceptance),
        "log_joint_mean": s.log_joint.iter().sum::<f64>() / s.log_joint.len() as f64,
        "map": { "sweep": map.sweep, "log_joint": map.log_joint, "num_tracks": map.num_tracks },
        "theta": theta,
    });
    out.write_json(&format!("summary_{c}.json"), &summary)?;
    Ok(())
}

/// Target positions alive at scan `t`.
fn positions_at(tracks: &[TrackRecord], t: usize) -> Vec<[f64; 2]> {
    tracks
        .iter()
        .filter(|r| r.t_b <= t && t < r.t_d)
        .map(|r| {
            let x = r.states[t - r.t_b];
            [x[0], x[2]]
        })
        .collect()
}

#[derive(Serialize)]
struct ScanReport {
    t: usize,
    posterior_mean: Ospa,
    map: Ospa,
}

#[derive(serde::Deserialize)]
struct SamplesIn {
    samples: Vec<Sample>,
}

/// Per-scan OSPA between the true positions and the sampled ones: averaged
/// over every sample and for the highest-density sample. Writes `ospa.json`
/// and the long-format `ospa.csv`.
pub fn evaluate(cfg: &Config, truth_path: &Path, sample_paths: &[PathBuf], out: &mut Outputs) -> Result<()> {
    let truth: TruthFile = read_json(truth_path)?;
    let n = truth.set.n_scans;
    let mut samples = Vec::new();
    for p in sample_paths {
        let file: SamplesIn = read_json(p)?;
        for s in &file.samples {
            if s.set.n_scans != n {
                return Err(CliError::input(p, format!("sample covers {} scans, truth has {n}", s.set.n_scans)));
            }
            if s.set.tracks.iter().any(|r| r.t_b == 0 || r.t_d != r.t_b + r.states.len() || r.t_d > n + 1) {
                return Err(CliError::input(p, format!("sample at sweep {} has an inconsistent track", s.sweep)));
            }
        }
        samples.extend(file.samples);
    }
    let Some(map) = samples.iter().max_by(|a, b| a.log_joint.total_cmp(&b.log_joint)) else {
        return Err(CliError::Config("no samples to evaluate".into()));
    };
    let (c, p) = (cfg.run.ospa_c, cfg.run.ospa_p);
    let mut scans = Vec::with_capacity(n);
    for t in 1..=n {
        let truth_t = positions_at(&truth.set.tracks, t);
        let mut sum = Ospa { total: 0.0, loc: 0.0, card: 0.0 };
        for s in &samples {
            let d = ospa(&truth_t, &positions_at(&s.set.tracks, t), c, p)?;
            sum.total += d.total;
            sum.loc += d.loc;
            sum.card += d.card;
        }
        let m = samples.len() as f64;
        scans.push(ScanReport {
            t,
            posterior_mean: Ospa { total: sum.total / m, loc: sum.loc / m, card: sum.card / m },
            map: ospa(&truth_t, &positions_at(&map.set.tracks, t), c, p)?,
        });
    }
    let mut header = Header::new("evaluate", cfg)
        .with("truth_sha256", file_sha256(truth_path)?)
        .with("ospa_c", c)
        .with("ospa_p", p)
        .with("samples", samples.len())
        .with("map_sweep", map.sweep);
    for (i, sp) in sample_paths.iter().enumerate() {
        header = header.with(&format!("samples_sha256_{i}"), file_sha256(sp)?);
    }
    let csv = csv_with_header(&header, |w| {
        w.write_record(["t", "estimate", "ospa", "ospa_loc", "ospa_card"])?;
        for r in &scans {
            for (name, d) in [("posterior_mean", &r.posterior_mean), ("map", &r.map)] {
                w.write_record([r.t.to_string(), name.into(), d.total.to_string(), d.loc.to_string(), d.card.to_string()])?;
            }
        }
        Ok(())
    })?;
    out.write("ospa.csv", &csv)?;
    out.write_json("ospa.json", &json!({ "header": header.to_json(), "scans": scans }))?;
    Ok(())
}
