use super::{CotRecord, CotSource};
use crate::caption::KeyCaptionSet;
use crate::reward::{Label, TAGS};

/// Deterministic CoT built from the captions alone. Parsing the result
/// gives back exactly the regions, phrases and label that went in.
pub fn template_cot(captions: &KeyCaptionSet, label: Label) -> CotRecord {
    let mut think = Vec::new();
    let (regions, clues) = match label {
        Label::Real => {
            think.push(
                "I examine the face region by region, comparing color, illumination, local contrast, sharpness and geometry with the surrounding skin."
                    .to_string(),
            );
            think.push(
                "Skin tone and lighting change smoothly across the eyes, nose, mouth, brows and forehead, and edges line up with the facial structure."
                    .to_string(),
            );
            think.push(
                "I find no blending seams, no mismatched texture and no displaced features, so there is no evidence of local manipulation."
                    .to_string(),
            );
            (String::new(), String::new())
        }
        Label::Fake => {
            think.push(
                "I examine the face region by region, comparing color, illumination, local contrast, sharpness and geometry with the surrounding skin."
                    .to_string(),
            );
            for region in &captions.regions {
                let phrases: Vec<&str> = captions
                    .keywords
                    .iter()
                    .filter(|k| k.region == *region)
                    .map(|k| k.phrase.as_str())
                    .collect();
                think.push(format!("In the {} I observe: {}.", region.display_name(), phrases.join(", and ")));
            }
            think.push(
                "These local inconsistencies do not match the rest of the face and are typical of a manipulated patch blended onto a genuine image."
                    .to_string(),
            );
            let regions: Vec<&str> = captions.regions.iter().map(|r| r.display_name()).collect();
            (regions.join(", "), captions.phrases().join("; "))
        }
    };
    let text = format!(
        "<{t}>\n{}\n</{t}>\n<{k}>Regions: {regions}; Clues: {clues}</{k}>\n<{a}>{}</{a}>",
        think.join("\n"),
        label.as_answer(),
        t = TAGS.think,
        k = TAGS.key,
        a = TAGS.answer,
    );
    CotRecord {
        text,
        regions: if label == Label::Fake { captions.regions.clone() } else { Default::default() },
        keywords: if label == Label::Fake { captions.phrases() } else { Vec::new() },
        label,
        source: CotSource::Template,
        attempts: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::captions;
    use super::*;
    use crate::region::RegionId;
    use crate::reward::{parse_response, reward_length};

    #[test]
    fn real_template_has_empty_regions() {
        let rec = template_cot(&KeyCaptionSet::default(), Label::Real);
        let p = parse_response(&rec.text).unwrap();
        assert!(p.regions.is_empty() && p.clues.is_empty());
        assert_eq!(p.answer, Label::Real);
        assert!(rec.text.contains("<answer>Real</answer>"));
        assert_eq!(reward_length(p.token_count, [48, 320]), 1.0);
    }

    #[test]
    fn single_caption_key_section() {
        let rec = template_cot(&captions(&[(RegionId::Nose, "unnatural color transition")]), Label::Fake);
        assert!(rec.text.contains("<key>Regions: nose; Clues: unnatural color transition</key>"));
        assert!(parse_response(&rec.text).unwrap().token_count >= 48);
    }

    #[test]
    fn parse_recovers_captions() {
        let c = captions(&[
            (RegionId::LeftEye, "left eye texture smoothed or oversharpened"),
            (RegionId::Nose, "tinted nose region"),
            (RegionId::Nose, "uneven light falloff on the nose"),
            (RegionId::FullFace, "warped face outline"),
        ]);
        let rec = template_cot(&c, Label::Fake);
        let p = parse_response(&rec.text).unwrap();
        assert_eq!(p.regions, c.regions);
        assert_eq!(p.clues, c.phrases());
        assert_eq!(p.answer, Label::Fake);
        assert!(p.unknown_regions.is_empty());
    }
}
