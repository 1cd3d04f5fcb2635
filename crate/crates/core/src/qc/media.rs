use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufReader, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::model::CorpusTable;

pub const MEDIA_EXTENSIONS: [&str; 6] = ["wav", "mp3", "mp4", "mov", "ogg", "flac"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCheck {
    pub found: bool,
    /// Known only for PCM WAV files.
    pub duration_ms: Option<i64>,
}

fn media_extension(name: &str) -> Option<(&str, String)> {
    let (stem, ext) = name.rsplit_once('.')?;
    let ext = ext.to_ascii_lowercase();
    MEDIA_EXTENSIONS.contains(&ext.as_str()).then_some((stem, ext))
}

/// `conv01.WAV` → `conv01`; names without a media extension are unchanged.
pub fn strip_media_extension(source: &str) -> &str {
    media_extension(source).map_or(source, |(stem, _)| stem)
}

/// Looks up every distinct source value among the media files under
/// `media_dir` (recursive, stems compared case-insensitively). When several
/// files share a stem, the first in path order wins.
pub fn verify_sources(table: &CorpusTable, media_dir: &Path) -> Result<BTreeMap<String, SourceCheck>> {
    let unreadable = |source: io::Error| Error::MediaDirUnreadable { path: media_dir.to_path_buf(), source };
    if !media_dir.is_dir() {
        return Err(unreadable(io::Error::new(io::ErrorKind::NotFound, "not a directory")));
    }
    let mut files: HashMap<String, (PathBuf, String)> = HashMap::new();
    for entry in WalkDir::new(media_dir).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) if e.depth() == 0 => {
                return Err(unreadable(e.into_io_error().unwrap_or_else(|| io::Error::other("walk failed"))))
            }
            Err(_) => continue,
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if let Some((stem, ext)) = media_extension(&name) {
            files.entry(stem.to_lowercase()).or_insert_with(|| (entry.path().to_path_buf(), ext));
        }
    }

    let mut out = BTreeMap::new();
    for group in table.by_source() {
        let source = &group[0].source;
        let key = strip_media_extension(source).to_lowercase();
        let check = match files.get(&key) {
            Some((path, ext)) => SourceCheck {
                found: true,
                duration_ms: if ext == "wav" { wav_duration_ms(path).ok().flatten() } else { None },
            },
            None => SourceCheck::default(),
        };
        out.insert(source.clone(), check);
    }
    Ok(out)
}

/// Duration of a PCM (or PCM-extensible) RIFF WAV file from its `fmt ` and
/// `data` chunks: data bytes / byte rate, rounded to the nearest ms.
/// `Ok(None)` for readable files that are not PCM WAV.
pub fn wav_duration_ms(path: &Path) -> io::Result<Option<i64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 12];
    if r.read_exact(&mut head).is_err() || &head[0..4] != b"RIFF" || &head[8..12] != b"WAVE" {
        return Ok(None);
    }
    let mut format: Option<(u16, u32)> = None;
    loop {
        let mut chunk = [0u8; 8];
        if r.read_exact(&mut chunk).is_err() {
            return Ok(None);
        }
        let size = u32::from_le_bytes(chunk[4..8].try_into().unwrap());
        match &chunk[0..4] {
            b"fmt " => {
                if size < 16 {
                    return Ok(None);
                }
                let mut fmt = [0u8; 16];
                r.read_exact(&mut fmt)?;
                let tag = u16::from_le_bytes([fmt[0], fmt[1]]);
                let byte_rate = u32::from_le_bytes(fmt[8..12].try_into().unwrap());
                format = Some((tag, byte_rate));
                r.seek(SeekFrom::Current(i64::from(size - 16) + i64::from(size % 2)))?;
            }
            b"data" => {
                let Some((tag, byte_rate)) = format else { return Ok(None) };
                if !(tag == 1 || tag == 0xFFFE) || byte_rate == 0 {
                    return Ok(None);
                }
                let (bytes, rate) = (i128::from(size), i128::from(byte_rate));
                return Ok(Some(((bytes * 2000 + rate) / (2 * rate)) as i64));
            }
            _ => {
                r.seek(SeekFrom::Current(i64::from(size) + i64::from(size % 2)))?;
            }
        }
    }
}
