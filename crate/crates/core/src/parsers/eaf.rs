//! ELAN `.eaf` reader.

use std::collections::{HashMap, HashSet};

use roxmltree::{Document, Node};

use super::time::fill_between;
use super::{decode_text, media_file_name, unique_tier_id, AnnotationRef, Format, ParsedDocument, RawAnnotation, RawTier};
use crate::error::{Error, Result};

enum Pending {
    Aligned { ts1: String, ts2: String },
    Referring { target: String },
}

struct PendingAnnotation {
    id: String,
    kind: Pending,
    text: String,
}

pub fn parse_eaf(bytes: &[u8], source_id: &str) -> Result<ParsedDocument> {
    let text = decode_text(bytes)?;
    let xml = Document::parse(&text).map_err(|e| Error::MalformedXml(e.to_string()))?;
    let root = xml.root_element();
    if root.tag_name().name() != "ANNOTATION_DOCUMENT" {
        return Err(Error::MalformedXml(format!(
            "expected ANNOTATION_DOCUMENT root, found {}",
            root.tag_name().name()
        )));
    }

    let mut doc = ParsedDocument::new(source_id, Format::Eaf);
    for attr in root.attributes() {
        if attr.namespace().is_none() {
            doc.metadata.insert(attr.name().to_string(), attr.value().to_string());
        }
    }

    if let Some(header) = child(root, "HEADER") {
        for attr in header.attributes() {
            doc.metadata.insert(attr.name().to_string(), attr.value().to_string());
        }
        for node in header.children().filter(Node::is_element) {
            match node.tag_name().name() {
                "MEDIA_DESCRIPTOR" => {
                    let url = node
                        .attribute("MEDIA_URL")
                        .or_else(|| node.attribute("RELATIVE_MEDIA_URL"));
                    if let Some(url) = url.filter(|u| !u.trim().is_empty()) {
                        doc.media_refs.push(media_file_name(url));
                    }
                }
                "PROPERTY" => {
                    if let Some(name) = node.attribute("NAME") {
                        doc.metadata
                            .insert(name.to_string(), node.text().unwrap_or("").to_string());
                    }
                }
                _ => {}
            }
        }
    }

    let mut slots: HashMap<String, Option<i64>> = HashMap::new();
    let mut slot_order: Vec<String> = Vec::new();
    if let Some(order) = child(root, "TIME_ORDER") {
        for slot in order.children().filter(|n| n.has_tag_name("TIME_SLOT")) {
            let id = required(slot, "TIME_SLOT_ID")?;
            let value = match slot.attribute("TIME_VALUE") {
                Some(v) => Some(v.trim().parse::<i64>().map_err(|_| {
                    Error::MalformedXml(format!("time slot {id} has non-integer TIME_VALUE {v:?}"))
                })?),
                None => None,
            };
            slot_order.push(id.to_string());
            slots.insert(id.to_string(), value);
        }
    }

    // Collect tiers and their annotations before resolving any time.
    let mut pending: Vec<Vec<PendingAnnotation>> = Vec::new();
    let mut declared_parents: Vec<Option<String>> = Vec::new();
    for tier_node in root.children().filter(|n| n.has_tag_name("TIER")) {
        let wanted = required(tier_node, "TIER_ID")?;
        let mut tier = RawTier::new(unique_tier_id(&doc.tiers, wanted));
        tier.participant = tier_node.attribute("PARTICIPANT").unwrap_or("").to_string();
        tier.category = tier_node.attribute("LINGUISTIC_TYPE_REF").unwrap_or("").to_string();
        declared_parents.push(tier_node.attribute("PARENT_REF").map(str::to_string));

        let mut anns = Vec::new();
        for ann in tier_node.children().filter(|n| n.has_tag_name("ANNOTATION")) {
            let Some(inner) = ann.children().find(Node::is_element) else {
                continue;
            };
            let id = required(inner, "ANNOTATION_ID")?.to_string();
            let text = child(inner, "ANNOTATION_VALUE")
                .map(|v| v.text().unwrap_or("").to_string())
                .unwrap_or_default();
            let kind = match inner.tag_name().name() {
                "ALIGNABLE_ANNOTATION" => {
                    let ts1 = required(inner, "TIME_SLOT_REF1")?.to_string();
                    let ts2 = required(inner, "TIME_SLOT_REF2")?.to_string();
                    for ts in [&ts1, &ts2] {
                        if !slots.contains_key(ts) {
                            return Err(Error::DanglingTimeSlotRef { annotation: id, slot: ts.clone() });
                        }
                    }
                    Pending::Aligned { ts1, ts2 }
                }
                "REF_ANNOTATION" => Pending::Referring {
                    target: required(inner, "ANNOTATION_REF")?.to_string(),
                },
                other => {
                    return Err(Error::MalformedXml(format!("unexpected annotation element {other}")));
                }
            };
            anns.push(PendingAnnotation { id, kind, text });
        }
        doc.tiers.push(tier);
        pending.push(anns);
    }

    let tier_ids: HashSet<String> = doc.tiers.iter().map(|t| t.tier_id.clone()).collect();
    for (tier, parent) in doc.tiers.iter_mut().zip(declared_parents) {
        if let Some(parent) = parent {
            if !tier_ids.contains(&parent) {
                return Err(Error::DanglingTierRef { tier: tier.tier_id.clone(), parent });
            }
            tier.parent_tier = Some(parent);
        }
    }

    resolve_slots(&mut slots, &slot_order, &pending)?;

    let mut positions: HashMap<&str, AnnotationRef> = HashMap::new();
    for (t, anns) in pending.iter().enumerate() {
        for (i, a) in anns.iter().enumerate() {
            positions.insert(a.id.as_str(), AnnotationRef { tier: t, index: i });
        }
    }

    let mut spans: HashMap<AnnotationRef, (i64, i64)> = HashMap::new();
    for (t, anns) in pending.iter().enumerate() {
        for (i, a) in anns.iter().enumerate() {
            let here = AnnotationRef { tier: t, index: i };
            let (begin, end) = span_of(here, &pending, &positions, &slots, &mut spans, 0)?;
            let parent = match &a.kind {
                Pending::Referring { target } => Some(positions[target.as_str()]),
                Pending::Aligned { .. } => None,
            };
            let participant = doc.tiers[t].participant.clone();
            doc.tiers[t].annotations.push(RawAnnotation {
                begin_ms: begin,
                end_ms: end,
                text: a.text.clone(),
                participant_hint: participant,
                parent,
                untimed: false,
            });
        }
    }

    Ok(doc)
}

/// Interpolates unanchored slots along chains of annotations that share
/// boundary slots on the same tier, repeating until nothing changes.
fn resolve_slots(
    slots: &mut HashMap<String, Option<i64>>,
    slot_order: &[String],
    pending: &[Vec<PendingAnnotation>],
) -> Result<()> {
    let mut chains: Vec<Vec<&str>> = Vec::new();
    for anns in pending {
        let aligned: Vec<(&str, &str)> = anns
            .iter()
            .filter_map(|a| match &a.kind {
                Pending::Aligned { ts1, ts2 } => Some((ts1.as_str(), ts2.as_str())),
                Pending::Referring { .. } => None,
            })
            .collect();
        let ends: HashSet<&str> = aligned.iter().map(|&(_, e)| e).collect();
        let mut by_start: HashMap<&str, &str> = HashMap::new();
        for &(s, e) in &aligned {
            by_start.entry(s).or_insert(e);
        }
        let mut visited: HashSet<&str> = HashSet::new();
        let heads = aligned.iter().filter(|(s, _)| !ends.contains(s)).map(|&(s, _)| s);
        // cycles have no head; pick them up from any unvisited start afterwards
        let rest: Vec<&str> = aligned.iter().map(|&(s, _)| s).collect();
        for head in heads.chain(rest) {
            if visited.contains(head) {
                continue;
            }
            let mut chain = vec![head];
            visited.insert(head);
            let mut cur = head;
            while let Some(&next) = by_start.get(cur) {
                chain.push(next);
                if !visited.insert(next) {
                    break;
                }
                cur = next;
            }
            chains.push(chain);
        }
    }

    loop {
        let mut changed = false;
        for chain in &chains {
            let mut values: Vec<Option<i64>> = chain.iter().map(|s| slots[*s]).collect();
            if fill_between(&mut values) {
                for (slot, v) in chain.iter().zip(values) {
                    let entry = slots.get_mut(*slot).expect("slot declared");
                    if entry.is_none() && v.is_some() {
                        *entry = v;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let used: HashSet<&str> = chains.iter().flatten().copied().collect();
    if let Some(missing) = slot_order
        .iter()
        .find(|id| used.contains(id.as_str()) && slots[id.as_str()].is_none())
    {
        return Err(Error::UnresolvableTime(missing.clone()));
    }
    Ok(())
}

fn span_of(
    at: AnnotationRef,
    pending: &[Vec<PendingAnnotation>],
    positions: &HashMap<&str, AnnotationRef>,
    slots: &HashMap<String, Option<i64>>,
    memo: &mut HashMap<AnnotationRef, (i64, i64)>,
    depth: usize,
) -> Result<(i64, i64)> {
    if let Some(&span) = memo.get(&at) {
        return Ok(span);
    }
    let a = &pending[at.tier][at.index];
    if depth > pending.iter().map(Vec::len).sum::<usize>() {
        return Err(Error::MalformedXml(format!("cyclic ANNOTATION_REF at {}", a.id)));
    }
    let span = match &a.kind {
        Pending::Aligned { ts1, ts2 } => {
            let begin = slots[ts1].ok_or_else(|| Error::UnresolvableTime(ts1.clone()))?;
            let end = slots[ts2].ok_or_else(|| Error::UnresolvableTime(ts2.clone()))?;
            (begin, end)
        }
        Pending::Referring { target } => {
            let &to = positions.get(target.as_str()).ok_or_else(|| Error::DanglingAnnotationRef {
                annotation: a.id.clone(),
                target: target.clone(),
            })?;
            span_of(to, pending, positions, slots, memo, depth + 1)?
        }
    };
    memo.insert(at, span);
    Ok(span)
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

fn required<'a>(node: Node<'a, '_>, attr: &str) -> Result<&'a str> {
    node.attribute(attr).ok_or_else(|| {
        Error::MalformedXml(format!("<{}> lacks required attribute {attr}", node.tag_name().name()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eaf(time_order: &str, tiers: &str) -> String {
        format!(
            r#"<?xml version="1.0" encoding="UTF-8"?>
<ANNOTATION_DOCUMENT AUTHOR="" FORMAT="3.0" VERSION="3.0">
  <HEADER MEDIA_FILE="" TIME_UNITS="milliseconds">
    <MEDIA_DESCRIPTOR MEDIA_URL="file:///data/conv01.wav" MIME_TYPE="audio/x-wav"/>
  </HEADER>
  <TIME_ORDER>{time_order}</TIME_ORDER>
  {tiers}
</ANNOTATION_DOCUMENT>"#
        )
    }

    #[test]
    fn single_alignable_annotation() {
        let src = eaf(
            r#"<TIME_SLOT TIME_SLOT_ID="ts1" TIME_VALUE="0"/><TIME_SLOT TIME_SLOT_ID="ts2" TIME_VALUE="1500"/>"#,
            r#"<TIER TIER_ID="A" PARTICIPANT="Ann" LINGUISTIC_TYPE_REF="utt">
                 <ANNOTATION><ALIGNABLE_ANNOTATION ANNOTATION_ID="a1" TIME_SLOT_REF1="ts1" TIME_SLOT_REF2="ts2">
                   <ANNOTATION_VALUE>mhm</ANNOTATION_VALUE></ALIGNABLE_ANNOTATION></ANNOTATION>
               </TIER>"#,
        );
        let doc = parse_eaf(src.as_bytes(), "conv01").unwrap();
        assert_eq!(doc.media_refs, vec!["conv01.wav"]);
        assert_eq!(doc.tiers.len(), 1);
        let t = &doc.tiers[0];
        assert_eq!((t.participant.as_str(), t.category.as_str()), ("Ann", "utt"));
        assert_eq!(t.annotations, vec![RawAnnotation::new(0, 1500, "mhm").with_participant("Ann")]);
        assert_eq!(doc.metadata["TIME_UNITS"], "milliseconds");
    }

    #[test]
    fn interior_slots_are_interpolated_along_the_chain() {
        let src = eaf(
            r#"<TIME_SLOT TIME_SLOT_ID="ts1" TIME_VALUE="0"/><TIME_SLOT TIME_SLOT_ID="ts2"/>
               <TIME_SLOT TIME_SLOT_ID="ts3"/><TIME_SLOT TIME_SLOT_ID="ts4" TIME_VALUE="3000"/>"#,
            r#"<TIER TIER_ID="A" LINGUISTIC_TYPE_REF="utt">
                 <ANNOTATION><ALIGNABLE_ANNOTATION ANNOTATION_ID="a3" TIME_SLOT_REF1="ts3" TIME_SLOT_REF2="ts4"><ANNOTATION_VALUE>c</ANNOTATION_VALUE></ALIGNABLE_ANNOTATION></ANNOTATION>
                 <ANNOTATION><ALIGNABLE_ANNOTATION ANNOTATION_ID="a1" TIME_SLOT_REF1="ts1" TIME_SLOT_REF2="ts2"><ANNOTATION_VALUE>a</ANNOTATION_VALUE></ALIGNABLE_ANNOTATION></ANNOTATION>
                 <ANNOTATION><ALIGNABLE_ANNOTATION ANNOTATION_ID="a2" TIME_SLOT_REF1="ts2" TIME_SLOT_REF2="ts3"><ANNOTATION_VALUE>b</ANNOTATION_VALUE></ALIGNABLE_ANNOTATION></ANNOTATION>
               </TIER>"#,
        );
        let doc = parse_eaf(src.as_bytes(), "x").unwrap();
        let spans: Vec<(i64, i64)> = doc.tiers[0].annotations.iter().map(|a| (a.begin_ms, a.end_ms)).collect();
        assert_eq!(spans, vec![(2000, 3000), (0, 1000), (1000, 2000)]);
    }

    #[test]
    fn reference_annotations_inherit_parent_span() {
        let src = eaf(
            r#"<TIME_SLOT TIME_SLOT_ID="ts1" TIME_VALUE="0"/><TIME_SLOT TIME_SLOT_ID="ts2" TIME_VALUE="1500"/>"#,
            r#"<TIER TIER_ID="A" LINGUISTIC_TYPE_REF="utt">
                 <ANNOTATION><ALIGNABLE_ANNOTATION ANNOTATION_ID="a1" TIME_SLOT_REF1="ts1" TIME_SLOT_REF2="ts2"><ANNOTATION_VALUE>mhm</ANNOTATION_VALUE></ALIGNABLE_ANNOTATION></ANNOTATION>
               </TIER>
               <TIER TIER_ID="A-eng" PARENT_REF="A" LINGUISTIC_TYPE_REF="translation">
                 <ANNOTATION><REF_ANNOTATION ANNOTATION_ID="a2" ANNOTATION_REF="a1"><ANNOTATION_VALUE>uh-huh</ANNOTATION_VALUE></REF_ANNOTATION></ANNOTATION>
               </TIER>
               <TIER TIER_ID="A-gloss" PARENT_REF="A-eng" LINGUISTIC_TYPE_REF="gloss">
                 <ANNOTATION><REF_ANNOTATION ANNOTATION_ID="a3" ANNOTATION_REF="a2"><ANNOTATION_VALUE>BC</ANNOTATION_VALUE></REF_ANNOTATION></ANNOTATION>
               </TIER>"#,
        );
        let doc = parse_eaf(src.as_bytes(), "x").unwrap();
        let child = &doc.tiers[1];
        assert_eq!(child.parent_tier.as_deref(), Some("A"));
        assert_eq!((child.annotations[0].begin_ms, child.annotations[0].end_ms), (0, 1500));
        assert_eq!(child.annotations[0].parent, Some(AnnotationRef { tier: 0, index: 0 }));
        assert_eq!((doc.tiers[2].annotations[0].begin_ms, doc.tiers[2].annotations[0].end_ms), (0, 1500));
    }

    #[test]
    fn error_paths() {
        let undeclared = eaf(
            r#"<TIME_SLOT TIME_SLOT_ID="ts1" TIME_VALUE="0"/>"#,
            r#"<TIER TIER_ID="A"><ANNOTATION><ALIGNABLE_ANNOTATION ANNOTATION_ID="a1" TIME_SLOT_REF1="ts1" TIME_SLOT_REF2="ts9"><ANNOTATION_VALUE>x</ANNOTATION_VALUE></ALIGNABLE_ANNOTATION></ANNOTATION></TIER>"#,
        );
        assert!(matches!(parse_eaf(undeclared.as_bytes(), "x"), Err(Error::DanglingTimeSlotRef { .. })));

        let unanchored = eaf(
            r#"<TIME_SLOT TIME_SLOT_ID="ts1" TIME_VALUE="0"/><TIME_SLOT TIME_SLOT_ID="ts2"/>"#,
            r#"<TIER TIER_ID="A"><ANNOTATION><ALIGNABLE_ANNOTATION ANNOTATION_ID="a1" TIME_SLOT_REF1="ts1" TIME_SLOT_REF2="ts2"><ANNOTATION_VALUE>x</ANNOTATION_VALUE></ALIGNABLE_ANNOTATION></ANNOTATION></TIER>"#,
        );
        assert!(matches!(parse_eaf(unanchored.as_bytes(), "x"), Err(Error::UnresolvableTime(s)) if s == "ts2"));

        let dangling_ref = eaf(
            "",
            r#"<TIER TIER_ID="A"><ANNOTATION><REF_ANNOTATION ANNOTATION_ID="a1" ANNOTATION_REF="nope"><ANNOTATION_VALUE>x</ANNOTATION_VALUE></REF_ANNOTATION></ANNOTATION></TIER>"#,
        );
        assert!(matches!(parse_eaf(dangling_ref.as_bytes(), "x"), Err(Error::DanglingAnnotationRef { .. })));

        let bad_parent = eaf("", r#"<TIER TIER_ID="A" PARENT_REF="B"/>"#);
        assert!(matches!(parse_eaf(bad_parent.as_bytes(), "x"), Err(Error::DanglingTierRef { .. })));

        assert!(matches!(parse_eaf(b"<ANNOTATION_DOCUMENT><TIER></ANNOTATION_DOCUMENT>", "x"), Err(Error::MalformedXml(_))));
        assert!(matches!(parse_eaf(b"<other/>", "x"), Err(Error::MalformedXml(_))));
    }

    #[test]
    fn entities_are_decoded_and_text_kept_verbatim() {
        let src = eaf(
            r#"<TIME_SLOT TIME_SLOT_ID="ts1" TIME_VALUE="10"/><TIME_SLOT TIME_SLOT_ID="ts2" TIME_VALUE="20"/>"#,
            r#"<TIER TIER_ID="A"><ANNOTATION><ALIGNABLE_ANNOTATION ANNOTATION_ID="a1" TIME_SLOT_REF1="ts1" TIME_SLOT_REF2="ts2"><ANNOTATION_VALUE> so &amp; then </ANNOTATION_VALUE></ALIGNABLE_ANNOTATION></ANNOTATION>
               <ANNOTATION><ALIGNABLE_ANNOTATION ANNOTATION_ID="a2" TIME_SLOT_REF1="ts1" TIME_SLOT_REF2="ts2"><ANNOTATION_VALUE></ANNOTATION_VALUE></ALIGNABLE_ANNOTATION></ANNOTATION></TIER>"#,
        );
        let doc = parse_eaf(src.as_bytes(), "x").unwrap();
        assert_eq!(doc.tiers[0].annotations[0].text, " so & then ");
        assert_eq!(doc.tiers[0].annotations[1].text, "");
    }
}
