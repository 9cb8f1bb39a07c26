//! A corpus is a directory of problem files, plus optional `corpus.json`
//! (`{"prompt_style": "kinship"}`), `exemplars.json` and `kb.json`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::kinship::restored_verdict;
use super::Problem;
use crate::llm::{Exemplar, OracleKb, PromptStyle};

pub const CORPUS_FILE: &str = "corpus.json";
pub const EXEMPLARS_FILE: &str = "exemplars.json";
pub const KB_FILE: &str = "kb.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub prompt_style: PromptStyle,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {field}: {message}", path.display())]
    Invalid {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("{} already exists (use --force to overwrite)", .0.display())]
    Exists(PathBuf),
}

impl CorpusError {
    fn invalid(path: &Path, field: impl Into<String>, message: impl ToString) -> Self {
        CorpusError::Invalid {
            path: path.to_path_buf(),
            field: field.into(),
            message: message.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CorpusError> {
    fs::write(path, text).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load one problem file.
pub fn load_problem(path: &Path) -> Result<Problem, CorpusError> {
    let text = read(path)?;
    Problem::parse_json(&text).map_err(|e| CorpusError::invalid(path, e.field, e.message))
}

/// Every `*.json` problem file in `dir`, sorted by file name, validated and
/// tagged with the corpus prompt style and exemplars. Problems carrying
/// withheld rules must be decided, matching their label, once the rules are
/// restored.
pub fn load_corpus(dir: &Path) -> Result<Vec<Problem>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let config_path = dir.join(CORPUS_FILE);
    let config: CorpusConfig = if config_path.exists() {
        serde_json::from_str(&read(&config_path)?).map_err(|e| CorpusError::invalid(&config_path, "document", e))?
    } else {
        CorpusConfig::default()
    };
    let exemplars_path = dir.join(EXEMPLARS_FILE);
    let exemplars: Vec<Exemplar> = if exemplars_path.exists() {
        serde_json::from_str(&read(&exemplars_path)?)
            .map_err(|e| CorpusError::invalid(&exemplars_path, "document", e))?
    } else {
        Vec::new()
    };

    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err)?;
    paths.retain(|p| {
        p.extension().is_some_and(|x| x == "json")
            && ![CORPUS_FILE, EXEMPLARS_FILE, KB_FILE]
                .iter()
                .any(|reserved| p.file_name().is_some_and(|n| n == *reserved))
    });
    paths.sort();

    let mut problems = Vec::with_capacity(paths.len());
    for path in paths {
        let mut p = load_problem(&path)?;
        if !p.withheld_rules.is_empty() {
            match (restored_verdict(&p), p.label) {
                (None, _) => {
                    return Err(CorpusError::invalid(
                        &path,
                        "withheld_rules",
                        "premises plus withheld rules do not decide the query",
                    ))
                }
                (Some(v), Some(l)) if v != l => {
                    return Err(CorpusError::invalid(
                        &path,
                        "label",
                        format!("restored rules give {v}, label says {l}"),
                    ))
                }
                _ => {}
            }
        }
        p.style = config.prompt_style;
        p.exemplars = exemplars.clone();
        problems.push(p);
    }
    Ok(problems)
}

/// Write a corpus directory. Refuses to touch an existing directory unless
/// `force` is set.
pub fn write_corpus(
    dir: &Path,
    problems: &[Problem],
    kb: Option<&OracleKb>,
    config: CorpusConfig,
    exemplars: &[Exemplar],
    force: bool,
) -> Result<(), CorpusError> {
    if dir.exists() {
        if !force {
            return Err(CorpusError::Exists(dir.to_path_buf()));
        }
        fs::remove_dir_all(dir).map_err(|source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for p in problems {
        write(&dir.join(format!("{}.json", p.id)), &p.to_json())?;
    }
    let mut cfg = serde_json::to_string_pretty(&config).expect("config serializes");
    cfg.push('\n');
    write(&dir.join(CORPUS_FILE), &cfg)?;
    if !exemplars.is_empty() {
        let mut ex = serde_json::to_string_pretty(exemplars).expect("exemplars serialize");
        ex.push('\n');
        write(&dir.join(EXEMPLARS_FILE), &ex)?;
    }
    if let Some(kb) = kb {
        write(&dir.join(KB_FILE), &kb.to_json())?;
    }
    Ok(())
}
