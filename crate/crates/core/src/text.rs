use unicode_normalization::UnicodeNormalization;

/// Canonical form of a label or ontology term: Unicode NFC, surrounding
/// whitespace trimmed, case preserved.
pub fn canonical_label(raw: &str) -> String {
    raw.nfc().collect::<String>().trim().to_string()
}
