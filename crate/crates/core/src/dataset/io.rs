use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{EvalSplit, HeldOutSet, InteractionMatrix, SplitSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Tsv,
}

impl InputFormat {
    fn delimiter(self) -> u8 {
        match self {
            InputFormat::Csv => b',',
            InputFormat::Tsv => b'\t',
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            InputFormat::Csv => "csv",
            InputFormat::Tsv => "tsv",
        }
    }

    /// Guesses from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("tsv") || e.eq_ignore_ascii_case("tab") => InputFormat::Tsv,
            _ => InputFormat::Csv,
        }
    }
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "tsv" => Ok(InputFormat::Tsv),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}, expected csv or tsv"))),
        }
    }
}

/// Bidirectional mapping between external string ids and dense indices,
/// assigned in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdIndex {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdIndex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn get_or_insert(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    /// Writes `index<TAB>id` lines.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (i, id) in self.ids.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{id}");
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut idx = IdIndex::default();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: lineno as u64 + 1,
                message,
            };
            let (num, id) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `index<TAB>id`".into()))?;
            let num: usize = num.parse().map_err(|_| parse_err(format!("bad index {num:?}")))?;
            if num != idx.len() {
                return Err(parse_err(format!("indices must be consecutive, expected {}", idx.len())));
            }
            idx.get_or_insert(id);
        }
        Ok(idx)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdMap {
    pub users: IdIndex,
    pub items: IdIndex,
}

const USER_HEADERS: &[&str] = &["user", "users", "user_id", "userid", "uid", "user id"];
const ITEM_HEADERS: &[&str] = &[
    "item", "items", "item_id", "itemid", "iid", "item id", "movie", "movie_id", "movieid", "song", "song_id", "sid",
];

fn looks_like_header(fields: &[&str]) -> bool {
    if fields.len() >= 3 && fields[2].trim().parse::<f64>().is_err() {
        return true;
    }
    fields.len() >= 2
        && USER_HEADERS.contains(&fields[0].trim().to_ascii_lowercase().as_str())
        && ITEM_HEADERS.contains(&fields[1].trim().to_ascii_lowercase().as_str())
}

struct RawRecord {
    line: u64,
    user: String,
    item: String,
    value: f64,
}

fn read_records(path: &Path, format: InputFormat) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    let mut first = true;
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = rec.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if looks_like_header(&fields) {
                continue;
            }
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        if fields.len() < 2 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(parse_err(format!(
                "expected user_id{0}item_id[{0}count], got {1:?}",
                format.delimiter() as char,
                fields.join(",")
            )));
        }
        let value = match fields.get(2).copied() {
            None | Some("") => 1.0,
            Some(s) => s.parse::<f64>().map_err(|_| parse_err(format!("bad count {s:?}")))?,
        };
        if !(value > 0.0) || !value.is_finite() {
            return Err(parse_err(format!("count must be positive and finite, got {value}")));
        }
        out.push(RawRecord {
            line,
            user: fields[0].to_owned(),
            item: fields[1].to_owned(),
            value,
        });
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Reads `user_id,item_id[,count]` rows (header optional). Ids are arbitrary
/// strings mapped to dense indices in order of first appearance; duplicate
/// pairs are summed and then binarized if requested.
pub fn load_interactions(
    path: impl AsRef<Path>,
    format: InputFormat,
    binarize: bool,
) -> Result<(InteractionMatrix, IdMap)> {
    let path = path.as_ref();
    let records = read_records(path, format)?;
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut ids = IdMap::default();
    let triples: Vec<(usize, usize, f64)> = records
        .iter()
        .map(|r| (ids.users.get_or_insert(&r.user), ids.items.get_or_insert(&r.item), r.value))
        .collect();
    let x = InteractionMatrix::from_triples(ids.users.len(), ids.items.len(), triples, binarize)?;
    Ok((x, ids))
}

/// Reads an interaction file against fixed id maps. Rows follow `users`
/// order; every user and item must be known.
fn load_with_ids(
    path: &Path,
    format: InputFormat,
    binarize: bool,
    items: &IdIndex,
    all_users: &IdIndex,
    users: &mut Vec<usize>,
    extend_users: bool,
) -> Result<InteractionMatrix> {
    let records = read_records(path, format)?;
    let mut local: HashMap<usize, usize> = users.iter().enumerate().map(|(r, &u)| (u, r)).collect();
    let mut triples = Vec::with_capacity(records.len());
    for r in records {
        let unknown = |what: &str, id: &str| Error::Parse {
            path: path.to_owned(),
            line: r.line,
            message: format!("unknown {what} id {id:?}"),
        };
        let u = all_users.get(&r.user).ok_or_else(|| unknown("user", &r.user))?;
        let i = items.get(&r.item).ok_or_else(|| unknown("item", &r.item))?;
        let row = match local.get(&u) {
            Some(&row) => row,
            None if extend_users => {
                users.push(u);
                local.insert(u, users.len() - 1);
                users.len() - 1
            }
            None => return Err(unknown("held-out user", &r.user)),
        };
        triples.push((row, i, r.value));
    }
    InteractionMatrix::from_triples(users.len(), items.len(), triples, binarize)
}

/// Writes an interaction file in the input schema, with a header line.
pub fn write_interactions(
    path: &Path,
    x: &InteractionMatrix,
    row_ids: impl Fn(usize) -> String,
    items: &IdIndex,
    format: InputFormat,
) -> Result<()> {
    let d = format.delimiter() as char;
    let mut w = BufWriter::new(fs::File::create(path)?);
    if x.is_binarized() {
        writeln!(w, "user_id{d}item_id")?;
    } else {
        writeln!(w, "user_id{d}item_id{d}count")?;
    }
    for (u, i, v) in x.entries() {
        if x.is_binarized() {
            writeln!(w, "{}{d}{}", row_ids(u), items.id(i))?;
        } else {
            writeln!(w, "{}{d}{}{d}{}", row_ids(u), items.id(i), v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SPLIT_PARTS: [&str; 5] = [
    "train",
    "validation_foldin",
    "validation_holdout",
    "test_foldin",
    "test_holdout",
];

fn part_path(dir: &Path, part: &str, format: InputFormat) -> PathBuf {
    dir.join(format!("{part}.{}", format.extension()))
}

/// Persists a split: manifest, five interaction files, `users.tsv`, `items.tsv`.
/// Output is a pure function of the inputs, so reruns are byte-identical.
pub fn write_split_dir(
    dir: &Path,
    split: &EvalSplit,
    ids: &IdMap,
    spec: &SplitSpec,
    source: &str,
    format: InputFormat,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    ids.users.write_tsv(&dir.join("users.tsv"))?;
    ids.items.write_tsv(&dir.join("items.tsv"))?;
    let uid = |users: &[usize], r: usize| ids.users.id(users[r]).to_owned();
    write_interactions(
        &part_path(dir, "train", format),
        &split.train,
        |r| uid(&split.train_users, r),
        &ids.items,
        format,
    )?;
    for (name, set) in [("validation", &split.validation), ("test", &split.test)] {
        write_interactions(
            &part_path(dir, &format!("{name}_foldin"), format),
            &set.foldin,
            |r| uid(&set.users, r),
            &ids.items,
            format,
        )?;
        write_interactions(
            &part_path(dir, &format!("{name}_holdout"), format),
            &set.holdout,
            |r| uid(&set.users, r),
            &ids.items,
            format,
        )?;
    }

    let mut m = String::new();
    let _ = writeln!(m, "format_version=1");
    let _ = writeln!(m, "source={source}");
    let _ = writeln!(m, "file_format={}", format.extension());
    let _ = writeln!(m, "binarized={}", split.train.is_binarized());
    let _ = writeln!(m, "num_users={}", ids.users.len());
    let _ = writeln!(m, "num_items={}", ids.items.len());
    let _ = writeln!(m, "seed={}", spec.seed);
    let _ = writeln!(m, "validation_fraction={}", spec.validation_fraction);
    let _ = writeln!(m, "test_fraction={}", spec.test_fraction);
    let _ = writeln!(m, "foldin_fraction={}", spec.foldin_fraction);
    let _ = writeln!(m, "train_users={}", split.train_users.len());
    let _ = writeln!(m, "train_nnz={}", split.train.nnz());
    for (name, set) in [("validation", &split.validation), ("test", &split.test)] {
        let _ = writeln!(m, "{name}_users={}", set.users.len());
        let _ = writeln!(m, "{name}_foldin_nnz={}", set.foldin.nnz());
        let _ = writeln!(m, "{name}_holdout_nnz={}", set.holdout.nnz());
    }
    for part in SPLIT_PARTS {
        let _ = writeln!(m, "file={part}.{}", format.extension());
    }
    fs::write(dir.join(MANIFEST_FILE), m)?;
    Ok(())
}

/// Key/value pairs of a split manifest.
pub fn read_manifest(dir: &Path) -> Result<HashMap<String, String>> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path)?;
    let mut out = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.clone(),
            line: lineno as u64 + 1,
            message: "expected key=value".into(),
        })?;
        // Repeated keys (`file=`) keep the last; only scalar keys are read back.
        out.insert(k.to_owned(), v.to_owned());
    }
    Ok(out)
}

/// Loads a split written by [`write_split_dir`].
pub fn read_split_dir(dir: &Path) -> Result<(EvalSplit, IdMap)> {
    let manifest = read_manifest(dir)?;
    let format: InputFormat = manifest.get("file_format").map(String::as_str).unwrap_or("csv").parse()?;
    let binarized = manifest.get("binarized").map(String::as_str) != Some("false");
    let ids = IdMap {
        users: IdIndex::read_tsv(&dir.join("users.tsv"))?,
        items: IdIndex::read_tsv(&dir.join("items.tsv"))?,
    };
    let mut train_users = Vec::new();
    let train = load_with_ids(
        &part_path(dir, "train", format),
        format,
        binarized,
        &ids.items,
        &ids.users,
        &mut train_users,
        true,
    )?;
    let mut sets = Vec::new();
    for name in ["validation", "test"] {
        let mut users = Vec::new();
        let foldin = load_with_ids(
            &part_path(dir, &format!("{name}_foldin"), format),
            format,
            binarized,
            &ids.items,
            &ids.users,
            &mut users,
            true,
        )?;
        let holdout = load_with_ids(
            &part_path(dir, &format!("{name}_holdout"), format),
            format,
            binarized,
            &ids.items,
            &ids.users,
            &mut users,
            false,
        )?;
        sets.push(HeldOutSet { users, foldin, holdout });
    }
    let test = sets.pop().expect("two sets");
    let validation = sets.pop().expect("two sets");
    Ok((
        EvalSplit {
            train_users,
            train,
            validation,
            test,
        },
        ids,
    ))
}
