//! Display names for Scopus top-level subject area codes (ASJC). Codes not in
//! the table are displayed verbatim.

const NAMES: &[(&str, &str)] = &[
    ("1000", "Multidisciplinary"),
    ("1100", "Agricultural and Biological Sciences"),
    ("1200", "Arts and Humanities"),
    ("1300", "Biochemistry, Genetics and Molecular Biology"),
    ("1400", "Business, Management and Accounting"),
    ("1500", "Chemical Engineering"),
    ("1600", "Chemistry"),
    ("1700", "Computer Science"),
    ("1800", "Decision Sciences"),
    ("1900", "Earth and Planetary Sciences"),
    ("2000", "Economics, Econometrics and Finance"),
    ("2100", "Energy"),
    ("2200", "Engineering"),
    ("2300", "Environmental Science"),
    ("2400", "Immunology and Microbiology"),
    ("2500", "Materials Science"),
    ("2600", "Mathematics"),
    ("2700", "Medicine"),
    ("2800", "Neuroscience"),
    ("2900", "Nursing"),
    ("3000", "Pharmacology, Toxicology and Pharmaceutics"),
    ("3100", "Physics and Astronomy"),
    ("3200", "Psychology"),
    ("3300", "Social Sciences"),
    ("3400", "Veterinary"),
    ("3500", "Dentistry"),
    ("3600", "Health Professions"),
];

pub fn display_name(code: &str) -> String {
    NAMES
        .iter()
        .find(|(c, _)| *c == code)
        .map(|(_, n)| n.to_string())
        .unwrap_or_else(|| code.to_string())
}

#[cfg(test)]
mod tests {
    #[test]
    fn known_and_unknown_codes() {
        assert_eq!(super::display_name("3100"), "Physics and Astronomy");
        assert_eq!(super::display_name("SIM"), "SIM");
    }
}
