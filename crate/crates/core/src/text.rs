//! String similarity: grapheme Levenshtein ratio and a phonetic key.

/// `1 - d / max(|a|, |b|)` over chars, where `d` is the Levenshtein distance.
/// Two empty strings have ratio 1.
pub fn levenshtein_ratio(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(a, b)
}

/// Maps an utterance to a phoneme-level key compared with the same ratio.
pub trait PhoneticKey {
    fn key(&self, text: &str) -> String;
}

/// Consonant-skeleton encoding in the Soundex family.
///
/// Each word keeps its first letter (upper-cased) followed by the Soundex
/// digit class of later consonants. Vowels, `h`, `w` and `y` are dropped,
/// adjacent repeats of a class collapse (also across `h`/`w`), and there is no
/// zero padding or truncation. Word keys are concatenated without separators.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConsonantSkeleton;

fn soundex_class(c: char) -> Option<char> {
    match c {
        'b' | 'f' | 'p' | 'v' => Some('1'),
        'c' | 'g' | 'j' | 'k' | 'q' | 's' | 'x' | 'z' => Some('2'),
        'd' | 't' => Some('3'),
        'l' => Some('4'),
        'm' | 'n' => Some('5'),
        'r' => Some('6'),
        _ => None,
    }
}

impl PhoneticKey for ConsonantSkeleton {
    fn key(&self, text: &str) -> String {
        let mut out = String::new();
        for word in text.split_whitespace() {
            let letters: Vec<char> = word
                .chars()
                .flat_map(char::to_lowercase)
                .filter(|c| c.is_alphabetic())
                .collect();
            let Some((&first, rest)) = letters.split_first() else {
                continue;
            };
            out.extend(first.to_uppercase());
            let mut previous = soundex_class(first);
            for &c in rest {
                let class = soundex_class(c);
                match class {
                    Some(digit) if class != previous => out.push(digit),
                    _ => {}
                }
                // h and w do not separate equal classes; vowels do.
                if !matches!(c, 'h' | 'w') {
                    previous = class;
                }
            }
        }
        out
    }
}
