use std::fs;
use std::path::Path;

use clap::ValueEnum;
use movac_core::trainer::METRICS_FILE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// batch, sequence, delta_r
    DeltaR,
    /// batch, sequence, w_ij
    WMatrix,
    /// batch, sequence, ret_mean_i
    Returns,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::DeltaR => "delta-r",
            Kind::WMatrix => "w-matrix",
            Kind::Returns => "returns",
        }
    }

    fn keeps(self, column: &str) -> bool {
        match column {
            "batch" | "sequence" => true,
            c => match self {
                Kind::DeltaR => c == "delta_r",
                Kind::WMatrix => c.starts_with("w_"),
                Kind::Returns => c.starts_with("ret_mean_"),
            },
        }
    }
}

/// Copies the selected metrics columns into a standalone CSV.
pub fn run(run_dir: &Path, kind: Kind, out: Option<&Path>) -> Result<(), String> {
    let metrics = run_dir.join(METRICS_FILE);
    let text = fs::read_to_string(&metrics).map_err(|e| format!("no metrics in {}: {e}", run_dir.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| format!("{} is empty", metrics.display()))?.split(',').collect();
    let keep: Vec<usize> = (0..header.len()).filter(|&k| kind.keeps(header[k])).collect();
    let pick = |cols: &[&str]| keep.iter().map(|&k| cols[k]).collect::<Vec<_>>().join(",");

    let mut csv = pick(&header) + "\n";
    for (n, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != header.len() {
            return Err(format!("{}:{}: expected {} columns, found {}", metrics.display(), n + 2, header.len(), cols.len()));
        }
        csv.push_str(&pick(&cols));
        csv.push('\n');
    }
    let default = run_dir.join(format!("{}.csv", kind.name()));
    let path = out.unwrap_or(&default);
    fs::write(path, csv).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}
