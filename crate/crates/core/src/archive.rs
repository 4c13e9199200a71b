//! Plain-text archive of a channel realization's white draws, so a trial can
//! be replayed exactly.
//!
//! ```text
//! fasris-realization 1
//! seed 42
//! config <sha256 of the canonical scenario TOML>
//! dims L M K
//! Z_br
//! <re> <im>      (L*M lines, row-major)
//! Z_rn
//! <re> <im>      (M*K lines)
//! Z_rm
//! <re> <im>      (M*K lines)
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::channel::{CMat, ChannelRealization, PortCorrelation};
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

const MAGIC: &str = "fasris-realization";
const VERSION: u32 = 1;

/// Hex SHA-256 of the scenario's canonical TOML form.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationArchive {
    pub seed: u64,
    pub config_hash: String,
    pub z_br: CMat,
    pub z_rn: CMat,
    pub z_rm: CMat,
}

impl RealizationArchive {
    pub fn from_realization(real: &ChannelRealization, seed: u64) -> Self {
        let (z_br, z_rn, z_rm) = real.draws();
        Self {
            seed,
            config_hash: config_hash(real.config()),
            z_br: z_br.clone(),
            z_rn: z_rn.clone(),
            z_rm: z_rm.clone(),
        }
    }

    pub fn encode(&self) -> String {
        let mut out = String::new();
        let (l, m) = self.z_br.shape();
        let k = self.z_rn.ncols();
        let _ = writeln!(out, "{MAGIC} {VERSION}");
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "config {}", self.config_hash);
        let _ = writeln!(out, "dims {l} {m} {k}");
        for (name, mat) in [("Z_br", &self.z_br), ("Z_rn", &self.z_rn), ("Z_rm", &self.z_rm)] {
            let _ = writeln!(out, "{name}");
            for i in 0..mat.nrows() {
                for j in 0..mat.ncols() {
                    let z = mat[(i, j)];
                    let _ = writeln!(out, "{} {}", z.re, z.im);
                }
            }
        }
        out
    }

    /// Realization for `cfg`, which must hash to the archived scenario.
    pub fn restore(&self, cfg: &ScenarioConfig) -> Result<ChannelRealization> {
        let hash = config_hash(cfg);
        if hash != self.config_hash {
            return Err(Error::Archive {
                line: 3,
                message: format!("scenario hash {hash} does not match archived {}", self.config_hash),
            });
        }
        let corr = Arc::new(PortCorrelation::for_config(cfg)?);
        ChannelRealization::from_draws(
            cfg.clone(),
            corr,
            self.z_br.clone(),
            self.z_rn.clone(),
            self.z_rm.clone(),
        )
    }
}

struct Lines<'a> {
    inner: std::str::Lines<'a>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        self.line += 1;
        self.inner.next().ok_or_else(|| Error::Archive {
            line: self.line,
            message: format!("unexpected end of input, expected {what}"),
        })
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Archive {
            line: self.line,
            message: message.into(),
        })
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let text = self.next(key)?;
        match text.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            _ => self.fail(format!("expected `{key} ...`")),
        }
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<CMat> {
        if self.next(name)?.trim() != name {
            return self.fail(format!("expected section `{name}`"));
        }
        let mut entries = Vec::new();
        for _ in 0..rows * cols {
            let text = self.next("a matrix entry")?;
            let mut parts = text.split_whitespace();
            let num = |part: Option<&str>| -> Result<f64> {
                match part.map(str::parse::<f64>) {
                    Some(Ok(x)) if x.is_finite() => Ok(x),
                    _ => self.fail("expected two finite numbers"),
                }
            };
            let re = num(parts.next())?;
            let im = num(parts.next())?;
            if parts.next().is_some() {
                return self.fail("trailing data after entry");
            }
            entries.push(Complex64::new(re, im));
        }
        Ok(CMat::from_row_iterator(rows, cols, entries))
    }
}

/// Largest dimension accepted from a header.
const MAX_DIM: usize = 1 << 16;

pub fn decode(text: &str) -> Result<RealizationArchive> {
    let mut lines = Lines {
        inner: text.lines(),
        line: 0,
    };
    let head = lines.next("header")?;
    if head.trim() != format!("{MAGIC} {VERSION}") {
        return lines.fail(format!("expected `{MAGIC} {VERSION}`"));
    }
    let seed = match lines.keyed("seed")?.parse::<u64>() {
        Ok(s) => s,
        Err(e) => return lines.fail(format!("bad seed: {e}")),
    };
    let config_hash = lines.keyed("config")?.to_string();
    if config_hash.len() != 64 || !config_hash.bytes().all(|b| b.is_ascii_hexdigit()) {
        return lines.fail("config hash must be 64 hex digits");
    }
    let dims: Vec<usize> = match lines.keyed("dims")?.split_whitespace().map(str::parse).collect() {
        Ok(d) => d,
        Err(e) => return lines.fail(format!("bad dims: {e}")),
    };
    let [l, m, k] = dims[..] else {
        return lines.fail("dims needs three counts");
    };
    if [l, m, k].iter().any(|&d| d == 0 || d > MAX_DIM) || m.checked_mul(k).is_none_or(|n| n > 1 << 26) {
        return lines.fail("dims out of range");
    }
    let z_br = lines.matrix("Z_br", l, m)?;
    let z_rn = lines.matrix("Z_rn", m, k)?;
    let z_rm = lines.matrix("Z_rm", m, k)?;
    if lines.inner.any(|rest| !rest.trim().is_empty()) {
        return Err(Error::Archive {
            line: lines.line + 1,
            message: "trailing content".into(),
        });
    }
    Ok(RealizationArchive {
        seed,
        config_hash,
        z_br,
        z_rn,
        z_rm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_realization;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.set_ris_elements(4);
        cfg.k1 = 3;
        cfg.k2 = 2;
        cfg.refresh_port_spacing();
        cfg
    }

    #[test]
    fn round_trip_is_bitwise() {
        let cfg = small();
        let real = sample_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let arch = RealizationArchive::from_realization(&real, 11);
        let text = arch.encode();
        let back = decode(&text).unwrap();
        assert_eq!(back, arch);
        let restored = back.restore(&cfg).unwrap();
        let q = cfg.ris_box.center();
        assert_eq!(restored.assemble_bs_ris(&q).unwrap(), real.assemble_bs_ris(&q).unwrap());
    }

    #[test]
    fn hash_mismatch_is_reported() {
        let cfg = small();
        let real = sample_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let arch = RealizationArchive::from_realization(&real, 1);
        let mut other = cfg.clone();
        other.rho = 5.0;
        assert!(matches!(arch.restore(&other), Err(Error::Archive { line: 3, .. })));
        assert_eq!(config_hash(&cfg).len(), 64);
    }

    #[test]
    fn malformed_inputs() {
        let cfg = small();
        let real = sample_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let good = RealizationArchive::from_realization(&real, 2).encode();
        assert!(matches!(decode(""), Err(Error::Archive { line: 1, .. })));
        let truncated: String = good.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(decode(&truncated).is_err());
        let bad_num = good.replacen("\nZ_br\n", "\nZ_br\nnan 0\n", 1);
        assert!(decode(&bad_num).is_err());
        let extra = format!("{good}1 2\n");
        assert!(decode(&extra).is_err());
        let huge = good.replacen("dims 4 4 6", "dims 4 99999999 6", 1);
        assert!(decode(&huge).is_err());
    }
}
