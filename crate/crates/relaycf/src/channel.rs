//! Channel specifications: alphabets, input laws, channel law, compressions.
//!
//! A spec fully describes one evaluation instance. `Full` mode carries relay
//! inputs `X_i` and their product input laws; `Digital` mode has no relay
//! inputs and instead carries noiseless relay-to-destination links with fixed
//! capacities. Conditional laws are flat row-major arrays whose conditioned
//! variables are the outer (slowest) indices.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::subsets::MAX_RELAYS;
use crate::tol;

#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Digital,
    Full,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Digital => write!(f, "digital"),
            Mode::Full => write!(f, "full"),
        }
    }
}

/// One relay channel instance.
///
/// Array layouts, all flat row-major with the rightmost index fastest:
/// * `channel`: `(x, x_1..x_n, y, y_1..y_n)` in full mode,
///   `(x, y, y_1..y_n)` in digital mode; the `(y, y_1..y_n)` block for each
///   fixed conditioning prefix is a distribution.
/// * `compressions[i]`: `(x_i, y_i, yhat_i)` in full mode, `(y_i, yhat_i)`
///   in digital mode; the `yhat_i` column for each prefix is a distribution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub mode: Mode,
    pub n: usize,
    pub alphabet_x: usize,
    pub alphabet_y: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet_xi: Option<Vec<usize>>,
    pub alphabet_yi: Vec<usize>,
    pub alphabet_yhat_i: Vec<usize>,
    pub channel: Vec<f64>,
    pub p_x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_xi: Option<Vec<Vec<f64>>>,
    pub compressions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_capacities: Option<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("invalid channel spec:\n  {}", issues.join("\n  "))]
    Invalid { issues: Vec<String> },
    #[error("could not parse channel spec: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl ChannelSpec {
    pub fn from_path(path: &Path) -> Result<ChannelSpec, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ChannelSpec::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<ChannelSpec, SpecError> {
        let spec: ChannelSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }

    /// Conditioning cardinality of the channel law: `|X| * prod |X_i|` in
    /// full mode, `|X|` in digital mode.
    pub fn channel_cond_card(&self) -> usize {
        match self.mode {
            Mode::Full => {
                let xi: usize = self.alphabet_xi.as_deref().unwrap_or(&[]).iter().product();
                self.alphabet_x * xi
            }
            Mode::Digital => self.alphabet_x,
        }
    }

    /// Output cardinality of the channel law: `|Y| * prod |Y_i|`.
    pub fn channel_out_card(&self) -> usize {
        self.alphabet_y * self.alphabet_yi.iter().product::<usize>()
    }

    /// Conditioning cardinality of compression `i` (0-based slot).
    pub fn compression_cond_card(&self, slot: usize) -> usize {
        match self.mode {
            Mode::Full => self.alphabet_xi.as_ref().unwrap()[slot] * self.alphabet_yi[slot],
            Mode::Digital => self.alphabet_yi[slot],
        }
    }

    /// Checks every structural and numerical invariant, reporting all
    /// violations at once with their coordinates.
    pub fn validate(&self) -> Result<(), SpecError> {
        let mut issues = Vec::new();

        if self.n < 1 || self.n > MAX_RELAYS {
            issues.push(format!("n = {} outside supported range 1..={MAX_RELAYS}", self.n));
            return Err(SpecError::Invalid { issues });
        }
        let n = self.n;

        if self.alphabet_x < 1 {
            issues.push("alphabet_x must be at least 1".into());
        }
        if self.alphabet_y < 1 {
            issues.push("alphabet_y must be at least 1".into());
        }
        check_len(&mut issues, "alphabet_yi", self.alphabet_yi.len(), n);
        check_len(&mut issues, "alphabet_yhat_i", self.alphabet_yhat_i.len(), n);
        for (slot, &card) in self.alphabet_yi.iter().enumerate() {
            if card < 1 {
                issues.push(format!("alphabet_yi[{}] must be at least 1", slot + 1));
            }
        }
        for (slot, &card) in self.alphabet_yhat_i.iter().enumerate() {
            if card < 1 {
                issues.push(format!("alphabet_yhat_i[{}] must be at least 1", slot + 1));
            }
        }

        match self.mode {
            Mode::Full => {
                match &self.alphabet_xi {
                    None => issues.push("full mode requires alphabet_xi".into()),
                    Some(xi) => {
                        check_len(&mut issues, "alphabet_xi", xi.len(), n);
                        for (slot, &card) in xi.iter().enumerate() {
                            if card < 1 {
                                issues.push(format!("alphabet_xi[{}] must be at least 1", slot + 1));
                            }
                        }
                    }
                }
                match &self.p_xi {
                    None => issues.push("full mode requires p_xi".into()),
                    Some(laws) => check_len(&mut issues, "p_xi", laws.len(), n),
                }
                if self.link_capacities.is_some() {
                    issues.push("full mode forbids link_capacities".into());
                }
            }
            Mode::Digital => {
                if self.alphabet_xi.is_some() {
                    issues.push("digital mode forbids alphabet_xi".into());
                }
                if self.p_xi.is_some() {
                    issues.push("digital mode forbids p_xi".into());
                }
                match &self.link_capacities {
                    None => issues.push("digital mode requires link_capacities".into()),
                    Some(caps) => {
                        check_len(&mut issues, "link_capacities", caps.len(), n);
                        for (slot, &cap) in caps.iter().enumerate() {
                            if !cap.is_finite() || cap < 0.0 {
                                issues.push(format!(
                                    "link_capacities[{}] = {cap} must be finite and nonnegative",
                                    slot + 1
                                ));
                            }
                        }
                    }
                }
            }
        }
        if !issues.is_empty() {
            // Shape problems make the array checks below meaningless.
            return Err(SpecError::Invalid { issues });
        }

        check_distribution(&mut issues, "p_x", &self.p_x, self.alphabet_x);
        if let Some(laws) = &self.p_xi {
            let cards = self.alphabet_xi.as_ref().unwrap();
            for (slot, law) in laws.iter().enumerate() {
                let name = format!("p_xi[{}]", slot + 1);
                check_distribution(&mut issues, &name, law, cards[slot]);
            }
        }

        let cond_names = self.channel_cond_names();
        let cond_dims = self.channel_cond_dims();
        check_conditional(
            &mut issues,
            "channel",
            &self.channel,
            &cond_dims,
            &cond_names,
            self.channel_out_card(),
        );

        check_len(&mut issues, "compressions", self.compressions.len(), n);
        if self.compressions.len() == n {
            for slot in 0..n {
                let relay = slot + 1;
                let name = format!("compressions[{relay}]");
                let (dims, names) = match self.mode {
                    Mode::Full => (
                        vec![self.alphabet_xi.as_ref().unwrap()[slot], self.alphabet_yi[slot]],
                        vec![format!("x_{relay}"), format!("y_{relay}")],
                    ),
                    Mode::Digital => {
                        (vec![self.alphabet_yi[slot]], vec![format!("y_{relay}")])
                    }
                };
                check_conditional(
                    &mut issues,
                    &name,
                    &self.compressions[slot],
                    &dims,
                    &names,
                    self.alphabet_yhat_i[slot],
                );
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(SpecError::Invalid { issues })
        }
    }

    fn channel_cond_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.alphabet_x];
        if self.mode == Mode::Full {
            dims.extend_from_slice(self.alphabet_xi.as_ref().unwrap());
        }
        dims
    }

    fn channel_cond_names(&self) -> Vec<String> {
        let mut names = vec!["x".to_string()];
        if self.mode == Mode::Full {
            names.extend((1..=self.n).map(|i| format!("x_{i}")));
        }
        names
    }
}

fn check_len(issues: &mut Vec<String>, name: &str, got: usize, want: usize) {
    if got != want {
        issues.push(format!("{name} has length {got}, expected {want}"));
    }
}

fn check_distribution(issues: &mut Vec<String>, name: &str, values: &[f64], card: usize) {
    if values.len() != card {
        issues.push(format!("{name} has length {}, expected {card}", values.len()));
        return;
    }
    let mut sum = 0.0;
    for (k, &p) in values.iter().enumerate() {
        if !p.is_finite() || p < tol::ENTRY_FLOOR {
            issues.push(format!("{name} has invalid entry {p} at position {k}"));
            return;
        }
        sum += p.max(0.0);
    }
    if (sum - 1.0).abs() > tol::SUM_ONE {
        issues.push(format!("{name} sums to {sum}, expected 1 within {}", tol::SUM_ONE));
    }
}

fn check_conditional(
    issues: &mut Vec<String>,
    name: &str,
    values: &[f64],
    cond_dims: &[usize],
    cond_names: &[String],
    out_card: usize,
) {
    let cond_card: usize = cond_dims.iter().product();
    if values.len() != cond_card * out_card {
        issues.push(format!(
            "{name} has length {}, expected {}",
            values.len(),
            cond_card * out_card
        ));
        return;
    }
    for row in 0..cond_card {
        let block = &values[row * out_card..(row + 1) * out_card];
        let coords = coord_label(row, cond_dims, cond_names);
        let mut sum = 0.0;
        let mut bad = false;
        for (k, &p) in block.iter().enumerate() {
            if !p.is_finite() || p < tol::ENTRY_FLOOR {
                issues.push(format!(
                    "{name} block ({coords}) has invalid entry {p} at position {k}"
                ));
                bad = true;
                break;
            }
            sum += p.max(0.0);
        }
        if !bad && (sum - 1.0).abs() > tol::SUM_ONE {
            issues.push(format!(
                "{name} block ({coords}) sums to {sum}, expected 1 within {}",
                tol::SUM_ONE
            ));
        }
    }
}

fn coord_label(mut flat: usize, dims: &[usize], names: &[String]) -> String {
    let mut coords = vec![0usize; dims.len()];
    for axis in (0..dims.len()).rev() {
        coords[axis] = flat % dims[axis];
        flat /= dims[axis];
    }
    let parts: Vec<String> = names
        .iter()
        .zip(&coords)
        .map(|(name, value)| format!("{name}={value}"))
        .collect();
    parts.join(", ")
}
