use std::path::PathBuf;

use crate::corpus::FocalPair;
use crate::java::JavaSource;
use crate::journal::Workspace;

#[derive(Debug, thiserror::Error)]
pub enum PlacementError {
    #[error("generated source declares no top-level type")]
    NoType,
    #[error("generated source declares {0} top-level types, expected exactly one")]
    TooManyTypes(usize),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// `package.TypeName` of a test source, when it declares one type.
pub fn test_class_fqn(source: &str) -> Option<String> {
    let parsed = JavaSource::parse(source);
    let types = parsed.top_level_types();
    let [decl] = types.as_slice() else { return None };
    Some(match parsed.package() {
        Some(pkg) => format!("{pkg}.{}", decl.name),
        None => decl.name.clone(),
    })
}

/// Write `source` to `src/test/java/<package>/<Type>.java` of the focal
/// class's module. A missing package declaration is filled in with the
/// focal package. Returns the destination and the text actually written.
pub fn place_test_class(
    workspace: &mut Workspace,
    pair: &FocalPair,
    source: &str,
) -> Result<(PathBuf, String), PlacementError> {
    let parsed = JavaSource::parse(source);
    let types = parsed.top_level_types();
    let type_name = match types.as_slice() {
        [] => return Err(PlacementError::NoType),
        [decl] => decl.name.clone(),
        many => return Err(PlacementError::TooManyTypes(many.len())),
    };

    let (package, text) = match parsed.package() {
        Some(pkg) => (pkg, source.to_string()),
        None if pair.package.is_empty() => (String::new(), source.to_string()),
        None => (
            pair.package.clone(),
            format!("package {};\n\n{source}", pair.package),
        ),
    };

    let mut dest = workspace
        .root()
        .join(pair.module_prefix())
        .join("src/test/java");
    for segment in package.split('.').filter(|s| !s.is_empty()) {
        dest.push(segment);
    }
    dest.push(format!("{type_name}.java"));

    workspace
        .write(&dest, text.as_bytes())
        .map_err(|source| PlacementError::Io {
            path: dest.clone(),
            source,
        })?;
    Ok((dest, text))
}
