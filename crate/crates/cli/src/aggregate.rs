//! `report`: fold the JSON reports in a directory into one summary CSV
//! and regenerate plot scripts for any sweep tables found. Files are
//! visited in name order so the summary is deterministic.

use crate::common::RunContext;
use anyhow::{bail, Context, Result};
use serde_json::Value;
use std::path::PathBuf;

fn fmt_f64(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x}"),
        None => String::from(""),
    }
}

pub fn run(ctx: &RunContext) -> Result<bool> {
    let inputs = PathBuf::from(ctx.config.str_or("inputs", "."));
    let mut files: Vec<PathBuf> = std::fs::read_dir(&inputs)
        .with_context(|| format!("listing {}", inputs.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no JSON reports found in {}", inputs.display());
    }

    let mut rows: Vec<String> = vec!["source,check,left,right,slack,pass".to_string()];
    let mut all_pass = true;
    let mut sweeps = 0usize;

    for path in &files {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let value: Value = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        let source = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();

        if let Some(reports) = value.get("reports").and_then(Value::as_array) {
            // Estimate bundle.
            for r in reports {
                let pass = r.get("pass").and_then(Value::as_bool).unwrap_or(false);
                all_pass &= pass;
                rows.push(format!(
                    "{source},{},{},{},{},{pass}",
                    r.get("name").and_then(Value::as_str).unwrap_or("?"),
                    fmt_f64(r.get("left").unwrap_or(&Value::Null)),
                    fmt_f64(r.get("right").unwrap_or(&Value::Null)),
                    fmt_f64(r.get("slack").unwrap_or(&Value::Null)),
                ));
            }
        } else if let Some(rungs) = value.get("rungs").and_then(Value::as_array) {
            // Sweep report.
            sweeps += 1;
            let monotone = value.get("monotone").and_then(Value::as_bool).unwrap_or(false);
            let within = value
                .get("all_within_budget")
                .and_then(Value::as_bool)
                .unwrap_or(false);
            all_pass &= monotone && within;
            rows.push(format!(
                "{source},sweep_monotone_and_budget,{},{},,{}",
                rungs.len(),
                rungs.len(),
                monotone && within
            ));
        } else if let Some(rms) = value.get("residual_rms").and_then(Value::as_array) {
            // Convergence report.
            let converged = value.get("converged").and_then(Value::as_bool).unwrap_or(false);
            all_pass &= converged;
            let last = rms.last().map(fmt_f64).unwrap_or_default();
            rows.push(format!("{source},newton_final_rms,{last},,,{converged}"));
        } else if value.get("tension_sup").is_some() {
            // Flow report.
            let converged = value.get("converged").and_then(Value::as_bool).unwrap_or(false);
            all_pass &= converged;
            rows.push(format!(
                "{source},heat_flow_tension,{},,,{converged}",
                fmt_f64(value.get("tension_sup").unwrap_or(&Value::Null)),
            ));
        }
        // Anything else (foreign JSON) is skipped silently.
    }

    let mut summary = rows.join("\n");
    summary.push('\n');
    ctx.write_text("summary.csv", &summary)?;

    if sweeps > 0 && inputs.join("sweep.csv").exists() {
        let script = format!(
            "# gnuplot script (generated)\nset datafile separator \",\"\n\
             set logscale xy\nset xlabel \"perturbation C1 norm\"\nset ylabel \"sup phi\"\n\
             plot \"{0}\" using 1:2 with linespoints title \"measured sup phi\", \\\n     \
             \"{0}\" using 1:3 with lines title \"frozen-C budget\"\n",
            inputs.join("sweep.csv").display()
        );
        ctx.write_text("sweep_plot.gp", &script)?;
    }

    println!(
        "report: {} rows from {} files → {}",
        rows.len() - 1,
        files.len(),
        ctx.out_path("summary.csv").display()
    );
    println!("[{}] aggregate", if all_pass { "PASS" } else { "FAIL" });
    Ok(all_pass)
}
