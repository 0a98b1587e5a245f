//! Assembly of the combined report from stage outputs. Nothing here
//! computes statistics; sections are copied verbatim.

/// One report section and the stage artifact it is copied from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionSpec {
    pub title: &'static str,
    /// Path relative to the output directory.
    pub source: &'static str,
    pub required: bool,
}

pub const SECTIONS: &[SectionSpec] = &[
    SectionSpec { title: "Corpus summary", source: "cohort/summary.md", required: true },
    SectionSpec { title: "Obligation disclosure by group and wave", source: "stats/obligations.md", required: true },
    SectionSpec { title: "Policy length", source: "cohort/word_counts.md", required: true },
    SectionSpec { title: "Law mentions", source: "cohort/mentions.md", required: true },
    SectionSpec {
        title: "October policies by update status, rank and language",
        source: "stats/stratified.md",
        required: true,
    },
    SectionSpec { title: "Generator prevalence", source: "generators/prevalence.md", required: false },
    SectionSpec { title: "Generator use by language and rank", source: "generators/language_rank.md", required: false },
    SectionSpec { title: "Obligations by generator use", source: "generators/use.md", required: false },
    SectionSpec {
        title: "Obligations by generator (single-generator policies)",
        source: "generators/compliance_single.md",
        required: false,
    },
    SectionSpec { title: "Annotation validation", source: "validation/metrics.md", required: false },
    SectionSpec { title: "Inter-annotator agreement", source: "agreement/alpha.md", required: false },
    SectionSpec { title: "Generator cluster cohesion", source: "cluster/cohesion.md", required: false },
];

/// Renders the report. `bodies` pairs each section with its artifact
/// content, or `None` when the stage has not produced it; optional
/// sections without content are left out.
pub fn assemble(title: &str, bodies: &[(&SectionSpec, Option<String>)]) -> String {
    let mut out = format!("# {title}\n");
    for (spec, body) in bodies {
        match body {
            Some(text) => {
                out.push_str(&format!("\n## {}\n\n", spec.title));
                out.push_str(text.trim_end());
                out.push('\n');
            }
            None if spec.required => {
                out.push_str(&format!("\n## {}\n\n_missing: {}_\n", spec.title, spec.source));
            }
            None => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copies_bodies_verbatim() {
        let bodies: Vec<_> = SECTIONS
            .iter()
            .map(|s| (s, (s.source == "stats/obligations.md").then(|| "| a |\n|---|\n| 1 |\n\n".to_string())))
            .collect();
        let r = assemble("Report", &bodies);
        assert!(r.contains("## Obligation disclosure by group and wave\n\n| a |\n|---|\n| 1 |\n"));
        assert!(r.contains("_missing: cohort/summary.md_"));
        assert!(!r.contains("Generator prevalence"));
    }
}
