//! Deterministic report assembly: fixed key order, 17-significant-digit
//! floats, no timestamps, so identical configs produce identical bytes.

use std::path::{Path, PathBuf};

use anyhow::Result;

use weakcurv::fields::io::fmt_f64;

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub values: Vec<(String, f64)>,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
            values: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.push((key.to_string(), value));
        self
    }
}

pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    /// Echoed configuration: grid, ladder, tolerances.
    pub config: Vec<(String, String)>,
}

impl SuiteReport {
    pub fn new(suite: &str) -> Self {
        Self {
            suite: suite.to_string(),
            checks: Vec::new(),
            config: Vec::new(),
        }
    }

    pub fn config_value(&mut self, key: &str, value: String) {
        self.config.push((key.to_string(), value));
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!("  \"suite\": \"{}\",\n", self.suite));
        out.push_str(&format!("  \"pass\": {},\n", self.pass()));
        out.push_str("  \"config\": {");
        for (i, (k, v)) in self.config.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&format!("\"{k}\": \"{v}\""));
        }
        out.push_str("},\n");
        out.push_str("  \"checks\": [\n");
        for (i, c) in self.checks.iter().enumerate() {
            out.push_str(&format!(
                "    {{\"name\": \"{}\", \"pass\": {}, \"detail\": \"{}\"",
                c.name, c.pass, c.detail
            ));
            for (k, v) in &c.values {
                out.push_str(&format!(", \"{k}\": {}", fmt_f64(*v)));
            }
            out.push('}');
            if i + 1 < self.checks.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("  ]\n}\n");
        out
    }

    /// Write the report, print the per-check lines, and return the path.
    pub fn finish(&self, out_dir: &Path) -> Result<(bool, PathBuf)> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(format!("{}.json", self.suite));
        std::fs::write(&path, self.to_json())?;
        for c in &self.checks {
            println!(
                "[{}] {:<32} {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let pass = self.pass();
        if pass {
            println!("suite {} passed; report: {}", self.suite, path.display());
        } else {
            println!("suite {} FAILED; report: {}", self.suite, path.display());
        }
        Ok((pass, path))
    }
}
