//! Residue scanner.
//!
//! Reads raw bytes only: every file under each copy's data directory and the
//! serialized cache contents. It never consults engine indexes or search.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use aho_corasick::AhoCorasick;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::engine::{LOGS_DIR, SEGMENTS_DIR, SNAPSHOTS_DIR, TRANSLOG_DIR};
use crate::subsystems::replica::{Role, Store};

use super::plan::Surface;

/// Short stable identifier of a marker, so reports do not repeat the data.
pub fn fingerprint(marker: &str) -> String {
    hex::encode(&Sha256::digest(marker.as_bytes())[..6])
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResidueMatch {
    pub copy: Role,
    pub surface: Surface,
    pub location: String,
    pub marker: String,
    pub occurrences: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueReport {
    pub markers_checked: usize,
    pub matches: Vec<ResidueMatch>,
}

impl ResidueReport {
    pub fn is_clean(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn surfaces(&self) -> Vec<(Role, Surface)> {
        let mut v: Vec<(Role, Surface)> =
            self.matches.iter().map(|m| (m.copy, m.surface)).collect();
        v.sort_by_key(|(c, s)| (c.as_str(), *s));
        v.dedup();
        v
    }

    pub fn on(&self, copy: Role) -> Vec<&ResidueMatch> {
        self.matches.iter().filter(|m| m.copy == copy).collect()
    }
}

fn surface_of(rel: &Path) -> Option<Surface> {
    let first = rel.components().next()?.as_os_str().to_str()?;
    Some(match first {
        SEGMENTS_DIR => Surface::Segments,
        TRANSLOG_DIR => Surface::Translog,
        SNAPSHOTS_DIR => Surface::Snapshots,
        LOGS_DIR => Surface::Logs,
        _ => return None,
    })
}

pub struct ResidueScanner {
    markers: Vec<String>,
    ac: Option<AhoCorasick>,
}

impl ResidueScanner {
    /// Markers are searched as raw bytes and in JSON-escaped form.
    pub fn new(markers: &[String]) -> Self {
        let mut needles: Vec<String> = Vec::new();
        let mut owner: Vec<String> = Vec::new();
        for m in markers.iter().filter(|m| !m.is_empty()) {
            needles.push(m.clone());
            owner.push(m.clone());
            let esc = serde_json::to_string(m).unwrap_or_default();
            let esc = esc[1..esc.len() - 1].to_string();
            if esc != *m {
                needles.push(esc);
                owner.push(m.clone());
            }
        }
        let ac = if needles.is_empty() {
            None
        } else {
            AhoCorasick::new(&needles).ok()
        };
        ResidueScanner { markers: owner, ac }
    }

    fn count(&self, bytes: &[u8]) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        if let Some(ac) = &self.ac {
            for m in ac.find_overlapping_iter(bytes) {
                *out.entry(self.markers[m.pattern().as_usize()].clone())
                    .or_default() += 1;
            }
        }
        out
    }

    fn scan_bytes(
        &self,
        copy: Role,
        surface: Surface,
        location: &str,
        bytes: &[u8],
        out: &mut Vec<ResidueMatch>,
    ) {
        for (marker, occurrences) in self.count(bytes) {
            out.push(ResidueMatch {
                copy,
                surface,
                location: location.to_string(),
                marker: fingerprint(&marker),
                occurrences,
            });
        }
    }

    /// Scans every file of a data directory.
    pub fn scan_dir(&self, copy: Role, root: &Path, out: &mut Vec<ResidueMatch>) {
        if self.ac.is_none() || !root.exists() {
            return;
        }
        for entry in WalkDir::new(root)
            .sort_by_file_name()
            .into_iter()
            .filter_map(|e| e.ok())
        {
            if !entry.file_type().is_file() {
                continue;
            }
            let Ok(rel) = entry.path().strip_prefix(root) else {
                continue;
            };
            let Some(surface) = surface_of(rel) else {
                continue;
            };
            if let Ok(bytes) = fs::read(entry.path()) {
                self.scan_bytes(copy, surface, &rel.to_string_lossy(), &bytes, out);
            }
        }
    }

    pub fn scan_store(&self, store: &Store) -> ResidueReport {
        let mut matches = Vec::new();
        for copy in Role::BOTH {
            let engine = store.engine(copy);
            self.scan_dir(copy, engine.dir(), &mut matches);
            if self.ac.is_some() {
                for (name, bytes) in engine.cache_dumps() {
                    self.scan_bytes(copy, Surface::Caches, name, &bytes, &mut matches);
                }
            }
        }
        let mut distinct = self.markers.clone();
        distinct.dedup();
        ResidueReport {
            markers_checked: distinct.len(),
            matches,
        }
    }
}
