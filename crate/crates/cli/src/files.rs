//! File formats.
//!
//! CSV files open with a block of `# key: value` lines followed by a column
//! header. JSON files carry the same block as a top-level `header` object.
//!
//! Scene file:
//!
//! ```text
//! # software: mtt-cli 0.1.0
//! # command: simulate
//! # seed: 7
//! # config_sha256: 3f1c...
//! # n_scans: 50
//! t,obs_id,y1,y2
//! 1,1,104.31,0.9087
//! ```
//!
//! `t` and `obs_id` are 1-based and observations of a scan are listed in
//! order. `n_scans` is required because trailing scans may be empty.

use std::fs;
use std::path::{Path, PathBuf};

use mtt_core::io::TrackSetRecord;
use mtt_core::linalg::ObsVec;
use mtt_core::model::Scene;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::Config;
use crate::error::{CliError, Result};

pub const SOFTWARE: &str = concat!("mtt-cli ", env!("CARGO_PKG_VERSION"));

/// Ordered `key: value` provenance block.
#[derive(Clone, Debug, PartialEq)]
pub struct Header(Vec<(String, String)>);

impl Header {
    pub fn new(command: &str, config: &Config) -> Self {
        Header(vec![
            ("software".into(), SOFTWARE.into()),
            ("command".into(), command.into()),
            ("seed".into(), config.run.seed.to_string()),
            ("config_sha256".into(), config.hash()),
        ])
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv_lines(&self) -> String {
        self.0.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect::<Map<_, _>>())
    }

    /// Leading comment block of a CSV file.
    pub fn parse_csv(text: &str) -> Self {
        Header(
            text.lines()
                .map_while(|l| l.strip_prefix('#'))
                .filter_map(|l| l.split_once(':'))
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .collect(),
        )
    }
}

/// Files written by one command. On failure every file recorded here is
/// removed so that no partial output survives.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Outputs { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(mtt_core::MttError::from)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn discard(self) {
        for p in self.written {
            let _ = fs::remove_file(p);
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Header block followed by whatever `fill` writes, column names included.
pub fn csv_with_header<F>(header: &Header, fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = header.to_csv_lines().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        fill(&mut w).map_err(|e| CliError::Config(format!("csv: {e}")))?;
        w.flush().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    }
    Ok(buf)
}

#[derive(Serialize, Deserialize)]
struct SceneRow {
    t: usize,
    obs_id: usize,
    y1: f64,
    y2: f64,
}

pub fn scene_csv(scene: &Scene, header: &Header) -> Result<Vec<u8>> {
    let header = header.clone().with("n_scans", scene.n());
    csv_with_header(&header, |w| {
        // Column names come from the first serialised row; an empty scene
        // still needs them.
        if scene.total_obs() == 0 {
            w.write_record(["t", "obs_id", "y1", "y2"])?;
        }
        for t in 1..=scene.n() {
            for o in 1..=scene.k_y(t) {
                let y = scene.y(t, o);
                w.serialize(SceneRow { t, obs_id: o, y1: y[0], y2: y[1] })?;
            }
        }
        Ok(())
    })
}

pub fn read_scene(path: &Path) -> Result<Scene> {
    let text = read_text(path)?;
    let header = Header::parse_csv(&text);
    let n: usize = header
        .get("n_scans")
        .ok_or_else(|| CliError::input(path, "missing `# n_scans:` header line"))?
        .parse()
        .map_err(|e| CliError::input(path, format!("n_scans: {e}")))?;
    let mut obs: Vec<Vec<ObsVec>> = vec![Vec::new(); n];
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut last_t = 0;
    for (line, row) in rdr.deserialize::<SceneRow>().enumerate() {
        let row = row.map_err(|e| CliError::input(path, e))?;
        let bad = |msg: &str| CliError::input(path, format!("data row {}: {msg}", line + 1));
        if row.t == 0 || row.t > n {
            return Err(bad("scan index outside 1..=n_scans"));
        }
        if row.t < last_t {
            return Err(bad("scans must be listed in increasing order"));
        }
        if row.obs_id != obs[row.t - 1].len() + 1 {
            return Err(bad("observation ids of a scan must run 1, 2, ..."));
        }
        if !row.y1.is_finite() || !row.y2.is_finite() {
            return Err(bad("observation is not finite"));
        }
        last_t = row.t;
        obs[row.t - 1].push(ObsVec::new(row.y1, row.y2));
    }
    Ok(Scene::new(obs))
}

/// A track set with its header block, used for ground truth.
#[derive(Serialize, Deserialize)]
pub struct TruthFile {
    pub header: Value,
    #[serde(flatten)]
    pub set: TrackSetRecord,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::input(path, e))
}
