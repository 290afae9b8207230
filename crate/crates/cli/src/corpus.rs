//! Bundled problem files, one per worked example.

use crate::error::CliError;

pub const CORPUS: &[(&str, &str)] = &[
    ("kdv", include_str!("../corpus/kdv.json")),
    ("kdv-3comp", include_str!("../corpus/kdv-3comp.json")),
    ("boussinesq", include_str!("../corpus/boussinesq.json")),
    ("heat", include_str!("../corpus/heat.json")),
    ("burgers", include_str!("../corpus/burgers.json")),
    ("camassa-holm", include_str!("../corpus/camassa-holm.json")),
    ("camassa-holm-2comp", include_str!("../corpus/camassa-holm-2comp.json")),
    ("wdvv", include_str!("../corpus/wdvv.json")),
    ("kdv6", include_str!("../corpus/kdv6.json")),
    ("weingarten", include_str!("../corpus/weingarten.json")),
    ("potential-kdv-we", include_str!("../corpus/potential-kdv-we.json")),
    ("miura", include_str!("../corpus/miura.json")),
];

pub fn names() -> Vec<&'static str> {
    CORPUS.iter().map(|(n, _)| *n).collect()
}

pub fn corpus(name: &str) -> Result<&'static str, CliError> {
    CORPUS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| CliError::UnknownCorpus {
            name: name.to_string(),
            available: names().join(", "),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::ProblemFile;

    #[test]
    fn every_entry_parses_and_is_named() {
        for (name, text) in CORPUS {
            let p = ProblemFile::from_json(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(p.name.as_deref(), Some(*name));
            assert!(p.version.is_some(), "{name}");
            assert!(!p.tasks.is_empty(), "{name}");
        }
    }

    #[test]
    fn unknown_name_lists_the_corpus() {
        let e = corpus("unknown").unwrap_err().to_string();
        assert!(e.contains("kdv-3comp") && e.contains("miura"), "{e}");
    }
}
