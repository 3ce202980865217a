//! Line-oriented network description.
//!
//! ```text
//! # comment
//! network resnet18
//! layer name=L1 ifm_w=112 ifm_h=112 k_w=7 k_h=7 in_ch=3 out_ch=64
//! ```
//!
//! Blank lines and `#` comments are ignored. Every `layer` record must carry
//! all seven fields exactly once, in any order.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{LayerSpec, NetworkSpec};

const FIELDS: [&str; 7] = ["name", "ifm_w", "ifm_h", "k_w", "k_h", "in_ch", "out_ch"];

pub const VGG13: &str = include_str!("../fixtures/vgg13.net");
pub const RESNET18: &str = include_str!("../fixtures/resnet18.net");

pub fn vgg13() -> NetworkSpec {
    parse(VGG13).expect("bundled fixture parses")
}

pub fn resnet18() -> NetworkSpec {
    parse(RESNET18).expect("bundled fixture parses")
}

pub fn parse(text: &str) -> Result<NetworkSpec> {
    let mut name: Option<(usize, String)> = None;
    let mut layers = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match keyword {
            "network" => {
                if name.is_some() {
                    return Err(Error::parse(line_no, None, "duplicate `network` record"));
                }
                let n = rest.trim();
                if n.is_empty() || n.contains(char::is_whitespace) {
                    return Err(Error::parse(
                        line_no,
                        None,
                        "`network` takes exactly one name",
                    ));
                }
                name = Some((line_no, n.to_owned()));
            }
            "layer" => layers.push(parse_layer(line_no, rest)?),
            other => {
                return Err(Error::parse(
                    line_no,
                    None,
                    format!("unknown record `{other}`, expected `network` or `layer`"),
                ))
            }
        }
    }

    let Some((line_no, name)) = name else {
        return Err(Error::parse(
            last_line.max(1),
            None,
            "missing `network` record",
        ));
    };
    NetworkSpec::new(name, layers).map_err(|e| Error::parse(line_no, None, e.to_string()))
}

fn parse_layer(line_no: usize, rest: &str) -> Result<LayerSpec> {
    let mut values: HashMap<&str, &str> = HashMap::new();
    for token in rest.split_whitespace() {
        let Some((key, value)) = token.split_once('=') else {
            return Err(Error::parse(
                line_no,
                None,
                format!("expected key=value, got `{token}`"),
            ));
        };
        if !FIELDS.contains(&key) {
            return Err(Error::parse(line_no, Some(key), "unknown field"));
        }
        if values.insert(key, value).is_some() {
            return Err(Error::parse(line_no, Some(key), "field given twice"));
        }
    }
    let get = |key: &str| -> Result<&str> {
        values
            .get(key)
            .copied()
            .ok_or_else(|| Error::parse(line_no, Some(key), "missing field"))
    };
    let num = |key: &str| -> Result<usize> {
        let v = get(key)?;
        v.parse().map_err(|_| {
            Error::parse(
                line_no,
                Some(key),
                format!("`{v}` is not a non-negative integer"),
            )
        })
    };
    let layer_name = get("name")?;
    if layer_name.is_empty() {
        return Err(Error::parse(line_no, Some("name"), "empty name"));
    }
    LayerSpec::new(
        layer_name,
        num("ifm_w")?,
        num("ifm_h")?,
        num("k_w")?,
        num("k_h")?,
        num("in_ch")?,
        num("out_ch")?,
    )
    .map_err(|e| Error::parse(line_no, None, e.to_string()))
}

pub fn render(net: &NetworkSpec) -> String {
    let mut s = format!("network {}\n", net.name());
    for l in net.layers() {
        s.push_str(&format!(
            "layer name={} ifm_w={} ifm_h={} k_w={} k_h={} in_ch={} out_ch={}\n",
            l.name(),
            l.ifm_w(),
            l.ifm_h(),
            l.k_w(),
            l.k_h(),
            l.in_ch(),
            l.out_ch()
        ));
    }
    s
}

pub fn load(path: &Path) -> std::result::Result<NetworkSpec, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text).map_err(|source| LoadError::Parse {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: Error },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse() {
        let v = vgg13();
        assert_eq!(v.layers().len(), 10);
        assert_eq!(
            v.layers()[4],
            LayerSpec::square("L5", 56, 3, 128, 256).unwrap()
        );
        let r = resnet18();
        assert_eq!(r.layers().len(), 5);
        assert_eq!(
            r.layers()[0],
            LayerSpec::square("L1", 112, 7, 3, 64).unwrap()
        );
    }

    #[test]
    fn empty_file_is_error() {
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
        assert!(matches!(
            parse("network x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn errors_are_located() {
        let text = "network n\nlayer name=a ifm_w=8 ifm_h=8 k_w=3 k_h=3 in_ch=x out_ch=1\n";
        match parse(text).unwrap_err() {
            Error::Parse { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field.as_deref(), Some("in_ch"));
            }
            e => panic!("{e}"),
        }
        let text = "network n\nlayer name=a ifm_w=8 ifm_h=8 k_w=3 in_ch=1 out_ch=1\n";
        assert!(parse(text).unwrap_err().to_string().contains("`k_h`"));
        let text = "network n\nlayer name=a ifm_w=2 ifm_h=2 k_w=3 k_h=3 in_ch=1 out_ch=1\n";
        assert!(parse(text).unwrap_err().to_string().contains("exceeds IFM"));
        assert!(parse("network n\nconv a\n").is_err());
    }

    #[test]
    fn comments_and_order() {
        let text = "# hi\n\nnetwork n # trailing\nlayer out_ch=2 in_ch=1 k_h=3 k_w=3 ifm_h=5 ifm_w=6 name=a\n";
        let net = parse(text).unwrap();
        assert_eq!(
            net.layers()[0],
            LayerSpec::new("a", 6, 5, 3, 3, 1, 2).unwrap()
        );
    }
}
