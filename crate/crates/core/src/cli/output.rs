use super::config::{ExperimentConfig, EMBED_PREFIX};

pub const UNITS_LINE: &str = "# units: m = ħ = 1";

/// Footer data shared by CSV and NDJSON output.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: &'static str,
    pub seed: u64,
    pub config_hash: u64,
    pub canonical: String,
}

impl Provenance {
    pub fn new(command: &'static str, seed: u64, cfg: &ExperimentConfig) -> Self {
        Self {
            command,
            seed,
            config_hash: cfg.hash(),
            canonical: cfg.canonical(),
        }
    }
}

/// Rows with a fixed column set, summary lines and a provenance footer.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self, prov: &Provenance) -> String {
        let mut out = format!("# arrival {}\n{UNITS_LINE}\n", prov.command);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        for (k, v) in &self.summary {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&footer(prov));
        out
    }
}

pub fn footer(prov: &Provenance) -> String {
    let mut out = format!(
        "# version = {}\n# command = {}\n# seed = {}\n# config_hash = {:016x}\n",
        env!("CARGO_PKG_VERSION"),
        prov.command,
        prov.seed,
        prov.config_hash
    );
    for line in prov.canonical.lines() {
        out.push_str(EMBED_PREFIX);
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Last NDJSON record, carrying the same data as the CSV footer.
pub fn ndjson_footer(prov: &Provenance) -> String {
    let v = serde_json::json!({
        "footer": {
            "version": env!("CARGO_PKG_VERSION"),
            "command": prov.command,
            "units": "m = ħ = 1",
            "seed": prov.seed,
            "config_hash": format!("{:016x}", prov.config_hash),
            "config": prov.canonical,
        }
    });
    format!("{v}\n")
}

/// Shortest round-trip form; scientific notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&v.abs()) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
