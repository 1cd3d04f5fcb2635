use std::path::{Path, PathBuf};

use turnkit::parsers::{detect_format, parse_file, Format, ParsedDocument, DETECT_HEAD_LEN};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn golden(name: &str) -> ParsedDocument {
    let text = std::fs::read_to_string(fixture(&format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn check(name: &str, format: Format) {
    let path = fixture(name);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(detect_format(&path, &bytes[..bytes.len().min(DETECT_HEAD_LEN)]).unwrap(), format);
    let doc = parse_file(&path).unwrap();
    let want = golden(name);
    assert_eq!(
        doc,
        want,
        "\nparsed:\n{}\nexpected:\n{}",
        serde_json::to_string_pretty(&doc).unwrap(),
        serde_json::to_string_pretty(&want).unwrap()
    );
    assert!(doc.tiers.len() >= 2);
    assert!(doc.annotation_count() >= 6);
}

#[test]
fn eaf_fixture() {
    check("conversation.eaf", Format::Eaf);
}

#[test]
fn cha_fixture() {
    check("conversation.cha", Format::Cha);
}

#[test]
fn textgrid_fixture() {
    check("conversation.TextGrid", Format::TextGrid);
}

#[test]
fn exb_fixture() {
    check("conversation.exb", Format::Exb);
}

#[test]
fn short_textgrid_matches_long() {
    let mut short = parse_file(&fixture("conversation_short.TextGrid")).unwrap();
    assert_eq!(short.source_id, "conversation_short");
    short.source_id = "conversation".into();
    assert_eq!(short, golden("conversation.TextGrid"));
}

#[test]
fn golden_documents_round_trip_through_json() {
    for name in ["conversation.eaf", "conversation.cha", "conversation.TextGrid", "conversation.exb"] {
        let doc = parse_file(&fixture(name)).unwrap();
        let back: ParsedDocument = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(back, doc);
    }
}
