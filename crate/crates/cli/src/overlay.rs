use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// `key = value` settings read from a text file. Blank lines and lines
/// starting with `#` are skipped. Keys are checked against the set a
/// subcommand understands.
#[derive(Debug, Default)]
pub struct Overlay {
    values: BTreeMap<String, String>,
}

impl Overlay {
    pub fn parse(text: &str, origin: &Path, known: &[&str]) -> Result<Overlay, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| CliError::Usage(format!("{}:{}: {msg}", origin.display(), i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got {line:?}")))?;
            let key = key.trim();
            if !known.contains(&key) {
                return Err(at(format!("unknown key {key:?} (known: {})", known.join(", "))));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(at(format!("duplicate key {key:?}")));
            }
        }
        Ok(Overlay { values })
    }

    pub fn load(path: Option<&Path>, known: &[&str]) -> Result<Overlay, CliError> {
        match path {
            None => Ok(Overlay::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Overlay::parse(&text, p, known)
            }
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {s:?}"))),
        }
    }

    /// Comma-separated list, with the same precedence as [`Overlay::pick`].
    pub fn pick_list<T: FromStr>(&self, flag: Option<&str>, key: &str, default: Vec<T>) -> Result<Vec<T>, CliError> {
        match flag.or_else(|| self.raw(key)) {
            None => Ok(default),
            Some(s) => s
                .split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.parse()
                        .map_err(|_| CliError::Usage(format!("{key}: cannot parse list item {p:?}")))
                })
                .collect(),
        }
    }
}
