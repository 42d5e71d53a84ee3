//! KDD Cup 1999 connection-record format.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;

use super::{DatasetError, FlowClass};

/// Column names of the 41 KDD connection features, in file order.
pub const FEATURE_NAMES: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

pub const N_FEATURES: usize = FEATURE_NAMES.len();

/// Columns holding symbolic values: protocol_type, service, flag.
pub const SYMBOLIC_COLUMNS: [usize; 3] = [1, 2, 3];

const ATTACK_TABLE: &str = include_str!("attack_classes.txt");

/// One raw connection record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRecord {
    pub features: Vec<String>,
    pub label: String,
}

impl FlowRecord {
    pub fn new(features: Vec<String>, label: impl Into<String>) -> Result<Self, DatasetError> {
        let label = label.into();
        if features.len() != N_FEATURES {
            return Err(DatasetError::FeatureCount {
                expected: N_FEATURES,
                got: features.len(),
            });
        }
        if label.is_empty() {
            return Err(DatasetError::EmptyLabel { line: None });
        }
        Ok(Self { features, label })
    }

    pub fn class(&self) -> Result<FlowClass, DatasetError> {
        map_attack_to_class(&self.label)
    }
}

/// Reads a KDD-format file: 41 features then the label, optionally followed
/// by a difficulty column (NSL-KDD), which is dropped.
pub fn parse_kdd_csv(path: &Path) -> Result<Vec<FlowRecord>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_kdd_reader(BufReader::new(file)).map_err(|e| match e {
        DatasetError::Io { source, .. } => DatasetError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn parse_kdd_reader<R: BufRead>(reader: R) -> Result<Vec<FlowRecord>, DatasetError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io {
            path: Default::default(),
            source,
        })?;
        let line_no = idx + 1;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != N_FEATURES + 1 && fields.len() != N_FEATURES + 2 {
            return Err(DatasetError::FieldCount {
                line: line_no,
                got: fields.len(),
            });
        }
        // KDD-99 labels carry a trailing period ("smurf.").
        let label = fields[N_FEATURES].trim_end_matches('.');
        if label.is_empty() {
            return Err(DatasetError::EmptyLabel {
                line: Some(line_no),
            });
        }
        records.push(FlowRecord {
            features: fields[..N_FEATURES].iter().map(|s| s.to_string()).collect(),
            label: label.to_string(),
        });
    }
    Ok(records)
}

fn attack_table() -> &'static HashMap<&'static str, FlowClass> {
    static TABLE: OnceLock<HashMap<&'static str, FlowClass>> = OnceLock::new();
    TABLE.get_or_init(|| {
        ATTACK_TABLE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let (name, cat) = l.split_once(' ').expect("attack table row");
                let class = match cat.trim() {
                    "normal" => FlowClass::Normal,
                    "probe" => FlowClass::Probe,
                    "dos" => FlowClass::DoS,
                    "u2r" => FlowClass::U2R,
                    "r2l" => FlowClass::R2L,
                    other => panic!("bad category {other} in attack table"),
                };
                (name, class)
            })
            .collect()
    })
}

/// Maps a KDD attack name (with or without the trailing period, any case)
/// to its five-way category.
pub fn map_attack_to_class(label: &str) -> Result<FlowClass, DatasetError> {
    let key = label.trim().trim_end_matches('.').to_ascii_lowercase();
    attack_table()
        .get(key.as_str())
        .copied()
        .ok_or_else(|| DatasetError::UnknownLabel(label.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    pub(crate) fn sample_line(proto: &str, label: &str) -> String {
        let mut f: Vec<String> = (0..N_FEATURES).map(|i| format!("{i}")).collect();
        f[1] = proto.into();
        f[2] = "http".into();
        f[3] = "SF".into();
        f.push(label.into());
        f.join(",")
    }

    #[test]
    fn parses_well_formed_line() {
        let text = sample_line("tcp", "smurf.");
        let recs = parse_kdd_reader(Cursor::new(text)).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].features.len(), 41);
        assert_eq!(recs[0].label, "smurf");
    }

    #[test]
    fn empty_input_gives_no_records() {
        assert!(parse_kdd_reader(Cursor::new("")).unwrap().is_empty());
    }

    #[test]
    fn difficulty_column_is_dropped() {
        let text = format!("{},21\n", sample_line("udp", "normal"));
        let recs = parse_kdd_reader(Cursor::new(text)).unwrap();
        assert_eq!(recs[0].label, "normal");
        assert_eq!(recs[0].features.len(), 41);
    }

    #[test]
    fn short_line_names_line_and_count() {
        let good = sample_line("tcp", "normal.");
        let bad: Vec<&str> = good.split(',').take(40).collect();
        let text = format!("{good}\n{}\n", bad.join(","));
        let err = parse_kdd_reader(Cursor::new(text)).unwrap_err();
        assert_eq!(err.to_string(), "line 2: expected 42 fields, got 40");
    }

    #[test]
    fn missing_file_names_path() {
        let err = parse_kdd_csv(Path::new("/nonexistent/kdd.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/kdd.csv"));
    }

    #[test]
    fn attack_mapping_spot_checks() {
        assert_eq!(map_attack_to_class("normal").unwrap(), FlowClass::Normal);
        assert_eq!(map_attack_to_class("smurf").unwrap(), FlowClass::DoS);
        assert_eq!(map_attack_to_class("smurf.").unwrap(), FlowClass::DoS);
        assert_eq!(
            map_attack_to_class("buffer_overflow").unwrap(),
            FlowClass::U2R
        );
        assert_eq!(map_attack_to_class("neptune").unwrap(), FlowClass::DoS);
        assert_eq!(map_attack_to_class("portsweep").unwrap(), FlowClass::Probe);
        assert_eq!(map_attack_to_class("warezclient").unwrap(), FlowClass::R2L);
        assert_eq!(map_attack_to_class("snmpguess").unwrap(), FlowClass::R2L);
    }

    #[test]
    fn training_table_has_22_attacks() {
        let training: Vec<_> = ATTACK_TABLE
            .split("\n\n")
            .next()
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("normal"))
            .collect();
        assert_eq!(training.len(), 22);
        let per_class = |c: FlowClass| {
            training
                .iter()
                .filter(|l| map_attack_to_class(l.split(' ').next().unwrap()).unwrap() == c)
                .count()
        };
        // 4 probe, 6 dos, 4 u2r, 8 r2l
        assert_eq!(per_class(FlowClass::Probe), 4);
        assert_eq!(per_class(FlowClass::DoS), 6);
        assert_eq!(per_class(FlowClass::U2R), 4);
        assert_eq!(per_class(FlowClass::R2L), 8);
    }

    #[test]
    fn unknown_label_is_an_error() {
        let err = map_attack_to_class("frobnicate").unwrap_err();
        assert!(err.to_string().contains("frobnicate"));
    }
}
