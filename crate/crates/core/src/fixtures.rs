//! Bundled example corpora and hand-written plans.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::plan::{parse_model_output, Blueprint, PlanError, PlanMode, Summary};
use crate::retrieval::{ingest_local, Corpus};

#[derive(Debug, Clone, Copy)]
pub struct CorpusFixture {
    pub name: &'static str,
    pub query: &'static str,
    pub jsonl: &'static str,
}

impl CorpusFixture {
    pub fn corpus(&self) -> Corpus {
        ingest_local(self.jsonl.as_bytes())
            .expect("bundled corpus is valid")
            .corpus
    }
}

pub const CORPORA: &[CorpusFixture] = &[
    CorpusFixture {
        name: "sky",
        query: "Why is the sky blue?",
        jsonl: include_str!("../fixtures/sky.jsonl"),
    },
    CorpusFixture {
        name: "titanic",
        query: "What is the Titanic known for?",
        jsonl: include_str!("../fixtures/titanic.jsonl"),
    },
    CorpusFixture {
        name: "cersei",
        query: "Who plays Queen Lannister in Game of Thrones?",
        jsonl: include_str!("../fixtures/cersei.jsonl"),
    },
];

/// A question-only plan and the summary written from it, as
/// `Q: ... Q: ... [SUMMARY] ...`.
#[derive(Debug, Clone, Copy)]
pub struct PlanFixture {
    pub name: &'static str,
    pub query: &'static str,
    pub text: &'static str,
}

impl PlanFixture {
    pub fn parse(&self) -> Result<(Blueprint, Summary), PlanError> {
        parse_model_output(self.text.trim_end(), PlanMode::QuestionOnly)
    }
}

macro_rules! plan {
    ($name:literal, $query:expr) => {
        PlanFixture {
            name: $name,
            query: $query,
            text: include_str!(concat!("../fixtures/plans/", $name, ".txt")),
        }
    };
}

const STATUE: &str = "Why did France give the US the Statue of Liberty?";
const CERSEI: &str = "Who plays Queen Lannister in Game of Thrones?";
const ENEMY: &str = "Who said my enemy's enemy is my friend?";
const EAGLE: &str = "Is it illegal to have a bald eagle?";
const SALARY: &str = "Is software engineer a good job?";

pub const PLANS: &[PlanFixture] = &[
    plan!("statue_machine", STATUE),
    plan!("statue_edited", STATUE),
    plan!("cersei_machine", CERSEI),
    plan!("cersei_edited", CERSEI),
    plan!("enemy_machine", ENEMY),
    plan!("enemy_edited", ENEMY),
    plan!("eagle_machine", EAGLE),
    plan!("eagle_edited", EAGLE),
    plan!("salary_machine", SALARY),
    plan!("salary_edited", SALARY),
];

pub fn corpus_fixture(name: &str) -> Option<&'static CorpusFixture> {
    CORPORA.iter().find(|c| c.name == name)
}

pub fn plan_fixture(name: &str) -> Option<&'static PlanFixture> {
    PLANS.iter().find(|p| p.name == name)
}

fn write_if_changed(path: &Path, contents: &str) -> io::Result<()> {
    if fs::read(path).is_ok_and(|old| old == contents.as_bytes()) {
        return Ok(());
    }
    fs::write(path, contents)
}

/// Writes `corpora/<name>.jsonl` and `plans/<name>.txt` under `dir`. Files
/// that already hold the right bytes are left untouched.
pub fn write_fixtures(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let corpora = dir.join("corpora");
    let plans = dir.join("plans");
    fs::create_dir_all(&corpora)?;
    fs::create_dir_all(&plans)?;
    for c in CORPORA {
        let path = corpora.join(format!("{}.jsonl", c.name));
        write_if_changed(&path, c.jsonl)?;
        written.push(path);
    }
    for p in PLANS {
        let path = plans.join(format!("{}.txt", p.name));
        write_if_changed(&path, p.text)?;
        written.push(path);
    }
    Ok(written)
}
