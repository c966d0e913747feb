//! Result files: a CSV with one row per grid point or trial and a JSON
//! sidecar holding the scenario spec, solver settings and summary.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::{ScenarioResult, ScenarioSpec};
use crate::clearing::SolverConfig;
use crate::{Error, Result};

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl ScenarioResult {
    /// Number of price columns per block.
    fn asset_count(&self) -> usize {
        self.rows.first().map_or(0, |r| r.q.len())
    }

    pub fn csv_header(&self) -> Vec<String> {
        let m = self.asset_count();
        let mut h: Vec<String> = ["scenario", "grid_value", "rho", "seed"].map(String::from).to_vec();
        h.extend((1..=m).map(|k| format!("q_{k}")));
        h.extend(
            ["defaults_endo", "defaults_fixed", "mktcap", "mm_count", "converged"].map(String::from),
        );
        h.extend((1..=m).map(|k| format!("qfixed_{k}")));
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.csv_header())?;
        for r in &self.rows {
            let mut rec = vec![
                r.scenario.clone(),
                r.grid_value.to_string(),
                fmt_opt(&r.rho),
                fmt_opt(&r.seed),
            ];
            rec.extend(r.q.iter().map(f64::to_string));
            rec.extend([
                r.defaults_endo.to_string(),
                r.defaults_fixed.to_string(),
                r.mktcap.to_string(),
                r.mm_count.to_string(),
                r.converged.to_string(),
            ]);
            rec.extend(r.q_fixed.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn sidecar(&self, spec: &ScenarioSpec, cfg: &SolverConfig) -> serde_json::Value {
        serde_json::json!({
            "spec": spec,
            "solver": cfg,
            "summary": self.summary,
        })
    }

    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`, creating `dir`.
    pub fn save(
        &self,
        dir: impl AsRef<Path>,
        name: &str,
        spec: &ScenarioSpec,
        cfg: &SolverConfig,
    ) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{name}.csv"));
        let json_path = dir.join(format!("{name}.json"));
        let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let json = serde_json::to_string_pretty(&self.sidecar(spec, cfg))?;
        std::fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;
        Ok((csv_path, json_path))
    }
}
