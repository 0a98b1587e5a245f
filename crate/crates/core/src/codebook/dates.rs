//! Update-date parsing and normalization to `DD/MM/YYYY`.

use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;

const MONTHS: &[(&str, u32)] = &[
    // en
    ("january", 1),
    ("jan", 1),
    ("february", 2),
    ("feb", 2),
    ("march", 3),
    ("mar", 3),
    ("april", 4),
    ("apr", 4),
    ("may", 5),
    ("june", 6),
    ("jun", 6),
    ("july", 7),
    ("jul", 7),
    ("august", 8),
    ("aug", 8),
    ("september", 9),
    ("sept", 9),
    ("sep", 9),
    ("october", 10),
    ("oct", 10),
    ("november", 11),
    ("nov", 11),
    ("december", 12),
    ("dec", 12),
    // de
    ("januar", 1),
    ("jänner", 1),
    ("februar", 2),
    ("märz", 3),
    ("maerz", 3),
    ("mär", 3),
    ("mai", 5),
    ("juni", 6),
    ("juli", 7),
    ("oktober", 10),
    ("okt", 10),
    ("dezember", 12),
    ("dez", 12),
    // fr
    ("janvier", 1),
    ("février", 2),
    ("fevrier", 2),
    ("mars", 3),
    ("avril", 4),
    ("juin", 6),
    ("juillet", 7),
    ("août", 8),
    ("aout", 8),
    ("septembre", 9),
    ("octobre", 10),
    ("novembre", 11),
    ("décembre", 12),
    ("decembre", 12),
    // it
    ("gennaio", 1),
    ("febbraio", 2),
    ("marzo", 3),
    ("aprile", 4),
    ("maggio", 5),
    ("giugno", 6),
    ("luglio", 7),
    ("agosto", 8),
    ("settembre", 9),
    ("ottobre", 10),
    ("dicembre", 12),
];

fn month_number(name: &str) -> Option<u32> {
    let lower = name.to_lowercase();
    let lower = lower.trim_end_matches('.');
    MONTHS.iter().find(|(n, _)| *n == lower).map(|(_, m)| *m)
}

fn month_alternation() -> String {
    let mut names: Vec<&str> = MONTHS.iter().map(|(n, _)| *n).collect();
    // longest first so `march` wins over `mar`
    names.sort_by_key(|n| std::cmp::Reverse(n.chars().count()));
    names.join("|")
}

struct Patterns {
    numeric_dmy: Regex,
    iso: Regex,
    day_month_year: Regex,
    month_day_year: Regex,
    scan: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| {
        let months = month_alternation();
        let dmy_named = format!(r"(\d{{1,2}})(?:\.|er|st|nd|rd|th|°|º)?\s+({months})\.?\s+(\d{{4}})");
        let mdy_named = format!(r"({months})\.?\s+(\d{{1,2}})(?:st|nd|rd|th)?,?\s+(\d{{4}})");
        Patterns {
            numeric_dmy: Regex::new(r"^(\d{1,2})[./](\d{1,2})[./](\d{4})$").unwrap(),
            iso: Regex::new(r"^(\d{4})-(\d{2})-(\d{2})$").unwrap(),
            day_month_year: Regex::new(&format!("(?i)^{dmy_named}$")).unwrap(),
            month_day_year: Regex::new(&format!("(?i)^{mdy_named}$")).unwrap(),
            scan: Regex::new(&format!(
                r"(?i)\b(?:\d{{1,2}}[./]\d{{1,2}}[./]\d{{4}}|\d{{4}}-\d{{2}}-\d{{2}}|{dmy_named}|{mdy_named})\b"
            ))
            .unwrap(),
        }
    })
}

fn ymd(y: &str, m: u32, d: &str) -> Option<NaiveDate> {
    NaiveDate::from_ymd_opt(y.parse().ok()?, m, d.parse().ok()?)
}

/// Parses one date string. Numeric forms are read day-first; two-digit
/// years and impossible dates yield `None`.
pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let s = raw.trim();
    let p = patterns();
    if let Some(c) = p.numeric_dmy.captures(s) {
        return ymd(&c[3], c[2].parse().ok()?, &c[1]);
    }
    if let Some(c) = p.iso.captures(s) {
        return ymd(&c[1], c[2].parse().ok()?, &c[3]);
    }
    if let Some(c) = p.day_month_year.captures(s) {
        return ymd(&c[3], month_number(&c[2])?, &c[1]);
    }
    if let Some(c) = p.month_day_year.captures(s) {
        return ymd(&c[3], month_number(&c[1])?, &c[2]);
    }
    None
}

/// Latest valid date among `candidates`, or `None` (NA).
pub fn normalize_update_date<S: AsRef<str>>(candidates: &[S]) -> Option<NaiveDate> {
    candidates.iter().filter_map(|c| parse_date(c.as_ref())).max()
}

/// Date-looking substrings of `text`, in order of appearance.
pub fn extract_date_candidates(text: &str) -> Vec<&str> {
    patterns().scan.find_iter(text).map(|m| m.as_str()).collect()
}

pub fn format_date(date: NaiveDate) -> String {
    date.format("%d/%m/%Y").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn most_recent_wins() {
        assert_eq!(normalize_update_date(&["01/03/2023", "15/06/2023"]), Some(d(2023, 6, 15)));
    }

    #[test]
    fn empty_is_na() {
        assert_eq!(normalize_update_date::<&str>(&[]), None);
    }

    #[test]
    fn month_names() {
        assert_eq!(parse_date("1 March 2023"), Some(d(2023, 3, 1)));
        assert_eq!(format_date(parse_date("1 March 2023").unwrap()), "01/03/2023");
        assert_eq!(parse_date("1. März 2023"), Some(d(2023, 3, 1)));
        assert_eq!(parse_date("1er août 2023"), Some(d(2023, 8, 1)));
        assert_eq!(parse_date("12 settembre 2023"), Some(d(2023, 9, 12)));
        assert_eq!(parse_date("September 5, 2023"), Some(d(2023, 9, 5)));
        assert_eq!(parse_date("5 Sept. 2023"), Some(d(2023, 9, 5)));
    }

    #[test]
    fn numeric_forms_day_first() {
        assert_eq!(parse_date("03/04/2023"), Some(d(2023, 4, 3)));
        assert_eq!(parse_date("3.4.2023"), Some(d(2023, 4, 3)));
        assert_eq!(parse_date("2023-04-03"), Some(d(2023, 4, 3)));
    }

    #[test]
    fn rejects_invalid() {
        assert_eq!(parse_date("01/13/2023"), None);
        assert_eq!(parse_date("31/02/2023"), None);
        assert_eq!(parse_date("01/03/23"), None);
        assert_eq!(parse_date("soon"), None);
        assert_eq!(normalize_update_date(&["01/13/2023", "nope"]), None);
    }

    #[test]
    fn scan_finds_dates_in_text() {
        let text = "Stand: 1. März 2023. Letzte Änderung 15.06.2023, zuvor 2022-12-01.";
        let found = extract_date_candidates(text);
        assert_eq!(found.len(), 3, "{found:?}");
        assert_eq!(normalize_update_date(&found), Some(d(2023, 6, 15)));
    }

    proptest! {
        #[test]
        fn permutation_invariant(days in proptest::collection::vec((1u32..=28, 1u32..=12, 2000i32..2030), 0..8)) {
            let strs: Vec<String> = days.iter().map(|(d, m, y)| format!("{d:02}/{m:02}/{y}")).collect();
            let mut rev = strs.clone();
            rev.reverse();
            prop_assert_eq!(normalize_update_date(&strs), normalize_update_date(&rev));
        }
    }
}
