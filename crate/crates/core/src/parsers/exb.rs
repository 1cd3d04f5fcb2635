//! EXMARaLDA basic-transcription (`.exb`) reader.

use std::collections::HashMap;

use roxmltree::{Document, Node};

use super::time::{fill_between, seconds_literal_to_ms};
use super::{decode_text, media_file_name, unique_tier_id, Format, ParsedDocument, RawAnnotation, RawTier};
use crate::error::{Error, Result};

pub fn parse_exb(bytes: &[u8], source_id: &str) -> Result<ParsedDocument> {
    let text = decode_text(bytes)?;
    let xml = Document::parse(&text).map_err(|e| Error::MalformedXml(e.to_string()))?;
    let root = xml.root_element();
    if root.tag_name().name() != "basic-transcription" {
        return Err(Error::MalformedXml(format!(
            "expected basic-transcription root, found {}",
            root.tag_name().name()
        )));
    }
    let mut doc = ParsedDocument::new(source_id, Format::Exb);

    if let Some(head) = child(root, "head") {
        if let Some(meta) = child(head, "meta-information") {
            for node in meta.children().filter(Node::is_element) {
                match node.tag_name().name() {
                    "referenced-file" => {
                        if let Some(url) = node.attribute("url").filter(|u| !u.trim().is_empty()) {
                            doc.media_refs.push(media_file_name(url));
                        }
                    }
                    "ud-meta-information" | "comment" => {}
                    name => {
                        if let Some(t) = node.text().map(str::trim).filter(|t| !t.is_empty()) {
                            doc.metadata.insert(name.to_string(), t.to_string());
                        }
                    }
                }
            }
        }
        if let Some(speakers) = child(head, "speakertable") {
            for sp in speakers.children().filter(|n| n.has_tag_name("speaker")) {
                if let (Some(id), Some(abbr)) = (sp.attribute("id"), child(sp, "abbreviation")) {
                    doc.metadata
                        .insert(format!("speaker.{id}"), abbr.text().unwrap_or("").trim().to_string());
                }
            }
        }
    }

    let body = child(root, "basic-body").ok_or_else(|| Error::MalformedXml("missing basic-body".into()))?;

    let mut tli_index: HashMap<String, usize> = HashMap::new();
    let mut times: Vec<Option<i64>> = Vec::new();
    let mut tli_ids: Vec<String> = Vec::new();
    if let Some(timeline) = child(body, "common-timeline") {
        for tli in timeline.children().filter(|n| n.has_tag_name("tli")) {
            let id = tli
                .attribute("id")
                .ok_or_else(|| Error::MalformedXml("tli without id".into()))?;
            let time = match tli.attribute("time") {
                Some(t) => Some(
                    seconds_literal_to_ms(t)
                        .ok_or_else(|| Error::MalformedXml(format!("tli {id} has bad time {t:?}")))?,
                ),
                None => None,
            };
            tli_index.insert(id.to_string(), times.len());
            tli_ids.push(id.to_string());
            times.push(time);
        }
    }
    fill_between(&mut times);

    let mut tier_kinds: Vec<String> = Vec::new();
    for tier_node in body.children().filter(|n| n.has_tag_name("tier")) {
        let wanted = tier_node
            .attribute("id")
            .ok_or_else(|| Error::MalformedXml("tier without id".into()))?;
        let mut tier = RawTier::new(unique_tier_id(&doc.tiers, wanted));
        tier.participant = tier_node.attribute("speaker").unwrap_or("").to_string();
        tier.category = tier_node.attribute("category").unwrap_or("").to_string();
        for event in tier_node.children().filter(|n| n.has_tag_name("event")) {
            let bound = |attr: &str| -> Result<i64> {
                let id = event
                    .attribute(attr)
                    .ok_or_else(|| Error::MalformedXml(format!("event without {attr}")))?;
                let &i = tli_index.get(id).ok_or_else(|| Error::DanglingTliRef {
                    tier: tier.tier_id.clone(),
                    tli: id.to_string(),
                })?;
                times[i].ok_or_else(|| Error::UnresolvableTime(tli_ids[i].clone()))
            };
            let begin = bound("start")?;
            let end = bound("end")?;
            let text: String = event.children().filter_map(|n| n.text()).collect();
            tier.annotations.push(RawAnnotation::new(begin, end, text).with_participant(&tier.participant));
        }
        tier_kinds.push(tier_node.attribute("type").unwrap_or("").to_string());
        doc.tiers.push(tier);
    }

    // Annotation and description tiers hang off the speaker's transcription tier.
    for i in 0..doc.tiers.len() {
        if tier_kinds[i] == "t" || doc.tiers[i].participant.is_empty() {
            continue;
        }
        let parent = doc
            .tiers
            .iter()
            .zip(&tier_kinds)
            .find(|(t, kind)| kind.as_str() == "t" && t.participant == doc.tiers[i].participant)
            .map(|(t, _)| t.tier_id.clone());
        doc.tiers[i].parent_tier = parent;
    }

    Ok(doc)
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exb(timeline: &str, tiers: &str) -> String {
        format!(
            r#"<?xml version="1.0" encoding="UTF-8"?>
<basic-transcription>
 <head>
  <meta-information><project-name>demo</project-name><transcription-name>t1</transcription-name>
   <referenced-file url="media/conv02.wav"/><ud-meta-information/><comment/><transcription-convention/></meta-information>
  <speakertable><speaker id="SPK0"><abbreviation>A</abbreviation></speaker><speaker id="SPK1"><abbreviation>B</abbreviation></speaker></speakertable>
 </head>
 <basic-body>
  <common-timeline>{timeline}</common-timeline>
  {tiers}
 </basic-body>
</basic-transcription>"#
        )
    }

    #[test]
    fn direct_mapping_and_metadata() {
        let src = exb(
            r#"<tli id="T0" time="0.0"/><tli id="T1" time="2.5"/>"#,
            r#"<tier id="TIE0" speaker="SPK0" category="v" type="t"><event start="T0" end="T1">nee</event></tier>"#,
        );
        let doc = parse_exb(src.as_bytes(), "conv02").unwrap();
        assert_eq!(doc.media_refs, vec!["conv02.wav"]);
        assert_eq!(doc.metadata["project-name"], "demo");
        assert_eq!(doc.metadata["speaker.SPK0"], "A");
        let t = &doc.tiers[0];
        assert_eq!((t.participant.as_str(), t.category.as_str()), ("SPK0", "v"));
        assert_eq!(t.annotations, vec![RawAnnotation::new(0, 2500, "nee").with_participant("SPK0")]);
    }

    #[test]
    fn untimed_tli_is_interpolated() {
        let src = exb(
            r#"<tli id="T0" time="0"/><tli id="T1"/><tli id="T2" time="4"/>"#,
            r#"<tier id="TIE0" speaker="SPK0" category="v" type="t"><event start="T0" end="T1">a</event></tier>"#,
        );
        let doc = parse_exb(src.as_bytes(), "x").unwrap();
        assert_eq!(doc.tiers[0].annotations[0].end_ms, 2000);
    }

    #[test]
    fn overlapping_speakers_stay_separate_and_annotation_tiers_get_parents() {
        let src = exb(
            r#"<tli id="T0" time="0"/><tli id="T1" time="1"/><tli id="T2" time="2"/>"#,
            r#"<tier id="TIE0" speaker="SPK0" category="v" type="t"><event start="T0" end="T2">long turn</event></tier>
               <tier id="TIE1" speaker="SPK1" category="v" type="t"><event start="T1" end="T2">overlap</event></tier>
               <tier id="TIE2" speaker="SPK0" category="en" type="a"><event start="T0" end="T2">gloss</event></tier>"#,
        );
        let doc = parse_exb(src.as_bytes(), "x").unwrap();
        assert_eq!(doc.tiers[0].annotations[0].text, "long turn");
        assert_eq!(doc.tiers[1].annotations[0].text, "overlap");
        assert_eq!(doc.tiers[2].parent_tier.as_deref(), Some("TIE0"));
        assert_eq!(doc.tiers[0].parent_tier, None);
    }

    #[test]
    fn errors() {
        let dangling = exb(
            r#"<tli id="T0" time="0"/>"#,
            r#"<tier id="TIE0" speaker="SPK0" type="t"><event start="T0" end="T9">a</event></tier>"#,
        );
        assert!(matches!(parse_exb(dangling.as_bytes(), "x"), Err(Error::DanglingTliRef { .. })));
        let open_end = exb(
            r#"<tli id="T0" time="0"/><tli id="T1"/>"#,
            r#"<tier id="TIE0" speaker="SPK0" type="t"><event start="T0" end="T1">a</event></tier>"#,
        );
        assert!(matches!(parse_exb(open_end.as_bytes(), "x"), Err(Error::UnresolvableTime(_))));
        assert!(matches!(parse_exb(b"<basic-transcription><basic-body>", "x"), Err(Error::MalformedXml(_))));
    }
}
