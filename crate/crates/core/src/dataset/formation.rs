use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// The six canonical formation categories, ordered defensive to offensive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormationGroup {
    FiveFourOne,
    FourFourTwo,
    ThreeFiveTwo,
    FourTwoThreeOne,
    FourThreeThree,
    ThreeFourThree,
}

impl FormationGroup {
    pub const ALL: [FormationGroup; 6] = [
        FormationGroup::FiveFourOne,
        FormationGroup::FourFourTwo,
        FormationGroup::ThreeFiveTwo,
        FormationGroup::FourTwoThreeOne,
        FormationGroup::FourThreeThree,
        FormationGroup::ThreeFourThree,
    ];

    /// 1-based index in the defensive-to-offensive ordering.
    pub fn index(&self) -> usize {
        match self {
            FormationGroup::FiveFourOne => 1,
            FormationGroup::FourFourTwo => 2,
            FormationGroup::ThreeFiveTwo => 3,
            FormationGroup::FourTwoThreeOne => 4,
            FormationGroup::FourThreeThree => 5,
            FormationGroup::ThreeFourThree => 6,
        }
    }

    pub fn from_index(i: usize) -> Option<FormationGroup> {
        FormationGroup::ALL.get(i.checked_sub(1)?).copied()
    }

    pub fn label(&self) -> &'static str {
        match self {
            FormationGroup::FiveFourOne => "5-4-1",
            FormationGroup::FourFourTwo => "4-4-2",
            FormationGroup::ThreeFiveTwo => "3-5-2",
            FormationGroup::FourTwoThreeOne => "4-2-3-1",
            FormationGroup::FourThreeThree => "4-3-3",
            FormationGroup::ThreeFourThree => "3-4-3",
        }
    }

    pub fn from_label(label: &str) -> Option<FormationGroup> {
        FormationGroup::ALL.iter().copied().find(|g| g.label() == label)
    }
}

impl fmt::Display for FormationGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Lookup table from raw formation strings to canonical groups.
///
/// A default table covering the common raw formations ships with the crate;
/// sources with exotic systems can override it with their own file.
#[derive(Debug, Clone)]
pub struct FormationMap {
    map: HashMap<String, FormationGroup>,
}

const DEFAULT_MAPPING: &str = include_str!("../../data/default_formation_groups.txt");

impl Default for FormationMap {
    fn default() -> Self {
        FormationMap::parse(DEFAULT_MAPPING).expect("default mapping is valid")
    }
}

impl FormationMap {
    /// Parse a two-column (raw, group) mapping; `#` starts a comment.
    /// Columns may be separated by a comma or whitespace.
    pub fn parse(text: &str) -> Result<FormationMap> {
        let mut map = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty());
            let raw = parts.next();
            let group = parts.next();
            match (raw, group, parts.next()) {
                (Some(raw), Some(group), None) => {
                    let group = FormationGroup::from_label(group).ok_or_else(|| {
                        Error::Config(format!(
                            "mapping line {}: '{group}' is not one of the six canonical groups",
                            lineno + 1
                        ))
                    })?;
                    map.insert(raw.to_string(), group);
                }
                _ => {
                    return Err(Error::Config(format!(
                        "mapping line {}: expected 'raw,group'",
                        lineno + 1
                    )))
                }
            }
        }
        if map.is_empty() {
            return Err(Error::Config("formation mapping is empty".into()));
        }
        Ok(FormationMap { map })
    }

    pub fn from_file(path: &Path) -> Result<FormationMap> {
        FormationMap::parse(&std::fs::read_to_string(path)?)
    }

    pub fn lookup(&self, raw: &str) -> Result<FormationGroup> {
        self.map
            .get(raw)
            .copied()
            .ok_or_else(|| Error::UnmappedFormation(raw.to_string()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Raw formations known to this mapping, sorted.
    pub fn raw_formations(&self) -> Vec<&str> {
        let mut keys: Vec<&str> = self.map.keys().map(|s| s.as_str()).collect();
        keys.sort_unstable();
        keys
    }
}

/// Map one raw formation string to its canonical group.
pub fn group_formation(raw: &str, mapping: &FormationMap) -> Result<FormationGroup> {
    mapping.lookup(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::validate_formation_string;

    #[test]
    fn canonical_labels_map_to_themselves() {
        let map = FormationMap::default();
        for g in FormationGroup::ALL {
            assert_eq!(group_formation(g.label(), &map).unwrap(), g);
        }
    }

    #[test]
    fn cited_variation_goes_to_front_three_group() {
        let map = FormationMap::default();
        assert_eq!(
            group_formation("4-3-1-2", &map).unwrap(),
            FormationGroup::FourThreeThree
        );
    }

    #[test]
    fn unmapped_formation_is_an_error_naming_the_string() {
        let map = FormationMap::default();
        let err = group_formation("9-0-1", &map).unwrap_err();
        assert!(err.to_string().contains("9-0-1"));
    }

    #[test]
    fn default_mapping_has_28_valid_entries() {
        let map = FormationMap::default();
        assert_eq!(map.len(), 28);
        for raw in map.raw_formations() {
            validate_formation_string(raw).unwrap();
        }
    }

    #[test]
    fn index_label_bijection_is_total() {
        for (i, g) in FormationGroup::ALL.iter().enumerate() {
            assert_eq!(g.index(), i + 1);
            assert_eq!(FormationGroup::from_index(i + 1), Some(*g));
            assert_eq!(FormationGroup::from_label(g.label()), Some(*g));
        }
        assert_eq!(FormationGroup::from_index(0), None);
        assert_eq!(FormationGroup::from_index(7), None);
    }

    #[test]
    fn mapping_parser_accepts_comments_and_whitespace() {
        let map = FormationMap::parse("# comment\n4-4-2 4-4-2\n5-3-2,5-4-1\n").unwrap();
        assert_eq!(map.lookup("5-3-2").unwrap(), FormationGroup::FiveFourOne);
    }

    #[test]
    fn mapping_parser_rejects_unknown_group() {
        assert!(FormationMap::parse("4-4-2,4-4-1-1\n").is_err());
    }
}
