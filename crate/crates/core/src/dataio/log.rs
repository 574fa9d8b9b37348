use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqmodel::ItemId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub user: u32,
    pub item: ItemId,
    /// Seconds.
    pub timestamp: i64,
}

/// Interaction records with densely re-indexed users and items.
///
/// Ids are assigned in order of first appearance; the original labels are
/// kept so the log can be written back out unchanged.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InteractionLog {
    pub records: Vec<Interaction>,
    pub user_labels: Vec<String>,
    pub item_labels: Vec<String>,
}

impl InteractionLog {
    pub fn num_users(&self) -> usize {
        self.user_labels.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_labels.len()
    }

    pub fn num_clicks(&self) -> usize {
        self.records.len()
    }

    /// Builds a log from labelled triples, re-indexing ids by first appearance.
    pub fn from_labelled<U, I>(triples: impl IntoIterator<Item = (U, I, i64)>) -> Self
    where
        U: AsRef<str>,
        I: AsRef<str>,
    {
        let mut log = InteractionLog::default();
        let mut users: HashMap<String, u32> = HashMap::new();
        let mut items: HashMap<String, u32> = HashMap::new();
        for (u, i, timestamp) in triples {
            let user = intern(&mut users, &mut log.user_labels, u.as_ref());
            let item = intern(&mut items, &mut log.item_labels, i.as_ref());
            log.records.push(Interaction { user, item, timestamp });
        }
        log
    }
}

fn intern(map: &mut HashMap<String, u32>, labels: &mut Vec<String>, key: &str) -> u32 {
    if let Some(&id) = map.get(key) {
        return id;
    }
    let id = labels.len() as u32;
    map.insert(key.to_string(), id);
    labels.push(key.to_string());
    id
}

fn is_header(line: &str) -> bool {
    let fields: Vec<String> = line.split(',').map(|f| f.trim().to_ascii_lowercase()).collect();
    fields == ["user", "item", "timestamp"]
}

/// Parses `user,item,timestamp` lines. An optional `user,item,timestamp`
/// header line is skipped; blank lines are ignored.
pub fn parse_interactions(text: &str) -> Result<InteractionLog> {
    let mut triples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || (line_no == 1 && is_header(line)) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                column: fields.len().min(3) + 1,
                message: format!("expected 3 comma-separated fields, found {}", fields.len()),
            });
        }
        for (col, f) in fields[..2].iter().enumerate() {
            if f.trim().is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    column: col + 1,
                    message: "empty id".into(),
                });
            }
        }
        let ts = fields[2].trim().parse::<i64>().map_err(|e| Error::Parse {
            line: line_no,
            column: 3,
            message: format!("timestamp {:?}: {e}", fields[2].trim()),
        })?;
        triples.push((fields[0].trim().to_string(), fields[1].trim().to_string(), ts));
    }
    if triples.is_empty() {
        return Err(Error::input("interaction file contains no records"));
    }
    Ok(InteractionLog::from_labelled(triples))
}

pub fn load_interactions(path: impl AsRef<Path>) -> Result<InteractionLog> {
    let text = std::fs::read_to_string(path)?;
    parse_interactions(&text)
}

/// Serializes the log with its original labels, in record order, with header.
pub fn write_interactions(log: &InteractionLog) -> String {
    let mut out = String::from("user,item,timestamp\n");
    for r in &log.records {
        let _ = writeln!(
            out,
            "{},{},{}",
            log.user_labels[r.user as usize], log.item_labels[r.item as usize], r.timestamp
        );
    }
    out
}
