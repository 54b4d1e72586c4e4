//! Numeric expression detection and format-preserving perturbation.

use std::sync::LazyLock;

use rand::Rng;
use regex::Regex;

use super::sample::{sample_combinations, Alternatives};
use super::tokenize::match_case;
use super::{resolve_spans, AugmentConfig, NumericClass, Span, SpanLabel, Transform};

const ORDINAL_WORDS: [&str; 10] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

struct Pattern {
    regex: Regex,
    class: NumericClass,
}

static PATTERNS: LazyLock<Vec<Pattern>> = LazyLock::new(|| {
    let p = |re: &str, class| Pattern {
        regex: Regex::new(re).expect("valid pattern"),
        class,
    };
    vec![
        p(r"\b\d{4}-\d{2}-\d{2}\b", NumericClass::Date),
        p(r"\b\d{1,2}[/.\-]\d{1,2}[/.\-](?:\d{4}|\d{2})\b", NumericClass::Date),
        p(r"\b\d{1,2}:\d{2}(?::\d{2})?\b", NumericClass::Time),
        p(r"\b\d+(?:\.\d+)?%", NumericClass::Percent),
        p(r"\b\d+(?:st|nd|rd|th)\b", NumericClass::Ordinal),
        p(
            r"(?i)\b(?:first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth)\b",
            NumericClass::Ordinal,
        ),
        p(r"\b\d{1,3}(?:,\d{3})+(?:\.\d+)?\b", NumericClass::Number),
        p(r"\b\d+\.\d+\b", NumericClass::Number),
        p(r"\b\d+\b", NumericClass::Cardinal),
    ]
});

/// Dates, times, percentages, ordinals, decimals and integers, resolved to
/// non-overlapping spans (longest match first).
pub fn detect_numbers(sentence: &str) -> Vec<Span> {
    let mut found = Vec::new();
    for p in PATTERNS.iter() {
        for m in p.regex.find_iter(sentence) {
            found.push(Span::new(m.start(), m.end(), SpanLabel::Numeric(p.class)));
        }
    }
    resolve_spans(found)
}

/// One variable slot of a numeric template.
#[derive(Debug, Clone)]
enum Field {
    /// Integer values in `lo..=hi`. `pad` zero-pads to that width,
    /// `decimals` places an implied decimal point, `grouped` inserts
    /// thousands separators and `ordinal` appends st/nd/rd/th.
    Int {
        lo: u64,
        hi: u64,
        pad: usize,
        decimals: u32,
        grouped: bool,
        ordinal: bool,
    },
    Words(Vec<String>),
}

impl Field {
    fn int(lo: u64, hi: u64) -> Self {
        Field::padded(lo, hi, 0)
    }

    fn padded(lo: u64, hi: u64, pad: usize) -> Self {
        Field::Int {
            lo,
            hi,
            pad,
            decimals: 0,
            grouped: false,
            ordinal: false,
        }
    }

    fn size(&self) -> u64 {
        match self {
            Field::Int { lo, hi, .. } => hi - lo + 1,
            Field::Words(w) => w.len() as u64,
        }
    }

    fn render(&self, index: u64) -> String {
        match self {
            Field::Words(w) => w[index as usize].clone(),
            &Field::Int {
                lo,
                pad,
                decimals,
                grouped,
                ordinal,
                ..
            } => {
                let v = lo + index;
                let scale = 10u64.pow(decimals);
                let (int_part, frac) = (v / scale, v % scale);
                let mut digits = format!("{int_part:0pad$}");
                if grouped {
                    digits = group_thousands(&digits);
                }
                if decimals > 0 {
                    digits = format!("{digits}.{frac:0width$}", width = decimals as usize);
                }
                if ordinal {
                    digits.push_str(ordinal_suffix(int_part));
                }
                digits
            }
        }
    }

    /// Index of `value` within the field, if representable.
    fn index_of_int(&self, value: u64) -> Option<u64> {
        match *self {
            Field::Int { lo, hi, .. } if (lo..=hi).contains(&value) => Some(value - lo),
            _ => None,
        }
    }
}

fn group_thousands(digits: &str) -> String {
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn ordinal_suffix(n: u64) -> &'static str {
    match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

#[derive(Debug, Clone)]
enum Part {
    Lit(String),
    Field(Field),
}

/// Every string matching a template, minus the original.
#[derive(Debug, Clone)]
struct NumericDomain {
    parts: Vec<Part>,
    radices: Vec<u64>,
    size: u64,
    skip: Option<u64>,
}

impl NumericDomain {
    /// `original` holds the field indices of the source text, or `None` for
    /// a field whose original value lies outside its range.
    fn new(parts: Vec<Part>, original: Vec<Option<u64>>) -> Self {
        let radices: Vec<u64> = parts
            .iter()
            .filter_map(|p| match p {
                Part::Field(f) => Some(f.size()),
                Part::Lit(_) => None,
            })
            .collect();
        debug_assert_eq!(radices.len(), original.len());
        let size = radices
            .iter()
            .try_fold(1u64, |acc, &r| acc.checked_mul(r))
            .unwrap_or(u64::MAX);
        let skip = original
            .iter()
            .zip(&radices)
            .try_fold(0u64, |acc, (o, &r)| acc.checked_mul(r)?.checked_add((*o)?));
        Self {
            parts,
            radices,
            size,
            skip,
        }
    }

    fn render(&self, mut combined: u64) -> String {
        let mut indices = vec![0u64; self.radices.len()];
        for (slot, &r) in indices.iter_mut().zip(&self.radices).rev() {
            *slot = combined % r;
            combined /= r;
        }
        let mut fields = indices.into_iter();
        let mut out = String::new();
        for part in &self.parts {
            match part {
                Part::Lit(s) => out.push_str(s),
                Part::Field(f) => out.push_str(&f.render(fields.next().unwrap_or(0))),
            }
        }
        out
    }
}

impl Alternatives for NumericDomain {
    fn len(&self) -> u64 {
        self.size - u64::from(self.skip.is_some())
    }

    fn get(&self, index: u64) -> String {
        let combined = match self.skip {
            Some(s) if index >= s => index + 1,
            _ => index,
        };
        self.render(combined)
    }
}

/// Range of `width`-digit integers: no leading zero unless the original
/// has one or is a single digit. Wide numbers keep a literal prefix and
/// vary only the trailing 15 digits.
fn digit_field(text: &str) -> (Option<String>, Field, Option<u64>) {
    const MAX_VARIED: usize = 15;
    let (prefix, varied) = if text.len() > MAX_VARIED {
        let cut = text.len() - MAX_VARIED;
        (Some(text[..cut].to_owned()), &text[cut..])
    } else {
        (None, text)
    };
    let width = varied.len();
    let value: u64 = varied.parse().unwrap_or(0);
    let field = if prefix.is_some() || width == 1 || varied.starts_with('0') {
        Field::padded(0, 10u64.pow(width as u32) - 1, width)
    } else {
        Field::int(10u64.pow(width as u32 - 1), 10u64.pow(width as u32) - 1)
    };
    let index = field.index_of_int(value);
    (prefix, field, index)
}

fn simple(field: Field, original: Option<u64>, suffix: Option<&str>) -> NumericDomain {
    let mut parts = vec![Part::Field(field)];
    if let Some(s) = suffix {
        parts.push(Part::Lit(s.to_owned()));
    }
    NumericDomain::new(parts, vec![original])
}

static FULL_PERCENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d+)(?:\.(\d+))?%$").unwrap());
static FULL_DIGIT_ORDINAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d+)(st|nd|rd|th)$").unwrap());
static FULL_DECIMAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d+))?$").unwrap());
static FULL_TIME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,2}):(\d{2})(?::(\d{2}))?$").unwrap());
static FULL_ISO_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{4})-(\d{2})-(\d{2})$").unwrap());
static FULL_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,2})([/.\-])(\d{1,2})([/.\-])(\d{4}|\d{2})$").unwrap());
static DIGIT_RUN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+").unwrap());

fn percent_domain(text: &str) -> Option<NumericDomain> {
    let caps = FULL_PERCENT.captures(text)?;
    let decimals = caps.get(2).map_or(0, |m| m.as_str().len().min(6)) as u32;
    let scale = 10u64.pow(decimals);
    let field = Field::Int {
        lo: 0,
        hi: 100 * scale,
        pad: 0,
        decimals,
        grouped: false,
        ordinal: false,
    };
    let int: u64 = caps[1].parse().ok()?;
    let frac: u64 = caps.get(2).map_or(Some(0), |m| m.as_str()[..decimals as usize].parse().ok())?;
    let original = int.checked_mul(scale).map(|v| v + frac).and_then(|v| field.index_of_int(v));
    Some(simple(field, original, Some("%")))
}

fn ordinal_domain(text: &str) -> Option<NumericDomain> {
    let lower = text.to_lowercase();
    if let Some(pos) = ORDINAL_WORDS.iter().position(|w| *w == lower) {
        let words = ORDINAL_WORDS.iter().map(|w| match_case(text, w)).collect();
        return Some(simple(Field::Words(words), Some(pos as u64), None));
    }
    let caps = FULL_DIGIT_ORDINAL.captures(text)?;
    let digits = &caps[1];
    if digits.len() > 15 {
        return None;
    }
    let width = digits.len() as u32;
    let (lo, hi) = if width == 1 {
        (1, 9)
    } else {
        (10u64.pow(width - 1), 10u64.pow(width) - 1)
    };
    let field = Field::Int {
        lo,
        hi,
        pad: 0,
        decimals: 0,
        grouped: false,
        ordinal: true,
    };
    let original = digits.parse().ok().and_then(|v| field.index_of_int(v));
    Some(simple(field, original, None))
}

fn decimal_domain(text: &str) -> Option<NumericDomain> {
    let caps = FULL_DECIMAL.captures(text)?;
    let grouped = caps[1].contains(',');
    let int_digits: String = caps[1].chars().filter(char::is_ascii_digit).collect();
    let decimals = caps.get(2).map_or(0, |m| m.as_str().len()) as u32;
    if int_digits.len() + decimals as usize > 15 {
        return None;
    }
    let width = int_digits.len() as u32;
    let scale = 10u64.pow(decimals);
    let (lo, hi) = if width == 1 {
        (0, 10 * scale - 1)
    } else {
        (10u64.pow(width - 1) * scale, 10u64.pow(width) * scale - 1)
    };
    let field = Field::Int {
        lo,
        hi,
        pad: 0,
        decimals,
        grouped,
        ordinal: false,
    };
    let frac: u64 = caps.get(2).map_or(Some(0), |m| m.as_str().parse().ok())?;
    let value = int_digits.parse::<u64>().ok()? * scale + frac;
    let original = field.index_of_int(value);
    Some(simple(field, original, None))
}

fn time_domain(text: &str) -> Option<NumericDomain> {
    let caps = FULL_TIME.captures(text)?;
    let hour = &caps[1];
    let hour_field = if hour.len() == 2 {
        Field::padded(0, 23, 2)
    } else {
        Field::int(0, 9)
    };
    let minute = Field::padded(0, 59, 2);
    let mut original = vec![
        hour_field.index_of_int(hour.parse().ok()?),
        minute.index_of_int(caps[2].parse().ok()?),
    ];
    let mut parts = vec![
        Part::Field(hour_field),
        Part::Lit(":".into()),
        Part::Field(minute.clone()),
    ];
    if let Some(sec) = caps.get(3) {
        original.push(minute.index_of_int(sec.as_str().parse().ok()?));
        parts.push(Part::Lit(":".into()));
        parts.push(Part::Field(minute));
    }
    Some(NumericDomain::new(parts, original))
}

fn day_or_month(text: &str) -> Field {
    if text.len() == 2 {
        Field::padded(1, 12, 2)
    } else {
        Field::int(1, 9)
    }
}

fn year_field(text: &str) -> Field {
    if text.len() == 4 {
        Field::int(1900, 2099)
    } else {
        Field::padded(0, 99, 2)
    }
}

fn date_domain(text: &str) -> Option<NumericDomain> {
    if let Some(caps) = FULL_ISO_DATE.captures(text) {
        let fields = [year_field(&caps[1]), Field::padded(1, 12, 2), Field::padded(1, 28, 2)];
        let original = fields
            .iter()
            .zip([&caps[1], &caps[2], &caps[3]])
            .map(|(f, t)| t.parse().ok().and_then(|v| f.index_of_int(v)))
            .collect();
        let [y, m, d] = fields;
        let parts = vec![
            Part::Field(y),
            Part::Lit("-".into()),
            Part::Field(m),
            Part::Lit("-".into()),
            Part::Field(d),
        ];
        return Some(NumericDomain::new(parts, original));
    }
    let caps = FULL_DATE.captures(text)?;
    let fields = [day_or_month(&caps[1]), day_or_month(&caps[3]), year_field(&caps[5])];
    let original = fields
        .iter()
        .zip([&caps[1], &caps[3], &caps[5]])
        .map(|(f, t)| t.parse().ok().and_then(|v| f.index_of_int(v)))
        .collect();
    let [a, b, y] = fields;
    let parts = vec![
        Part::Field(a),
        Part::Lit(caps[2].to_owned()),
        Part::Field(b),
        Part::Lit(caps[4].to_owned()),
        Part::Field(y),
    ];
    Some(NumericDomain::new(parts, original))
}

/// Every maximal digit run varies independently; other text is kept.
fn digit_runs_domain(text: &str) -> Option<NumericDomain> {
    let mut parts = Vec::new();
    let mut original = Vec::new();
    let mut cursor = 0;
    for m in DIGIT_RUN.find_iter(text) {
        if m.start() > cursor {
            parts.push(Part::Lit(text[cursor..m.start()].to_owned()));
        }
        let (prefix, field, index) = digit_field(m.as_str());
        if let Some(p) = prefix {
            parts.push(Part::Lit(p));
        }
        parts.push(Part::Field(field));
        original.push(index);
        cursor = m.end();
    }
    if original.is_empty() {
        return None;
    }
    if cursor < text.len() {
        parts.push(Part::Lit(text[cursor..].to_owned()));
    }
    Some(NumericDomain::new(parts, original))
}

fn domain_for(text: &str, class: NumericClass) -> Option<NumericDomain> {
    let specific = match class {
        NumericClass::Percent => percent_domain(text),
        NumericClass::Ordinal => ordinal_domain(text),
        NumericClass::Number => decimal_domain(text),
        NumericClass::Time => time_domain(text),
        NumericClass::Date => date_domain(text),
        NumericClass::Cardinal => None,
    };
    specific.or_else(|| digit_runs_domain(text))
}

/// Perturbs one or more numeric spans per output, keeping each span's
/// class and surface format. Entity spans in `spans` are ignored.
pub fn number_transforms<R: Rng + ?Sized>(
    sentence: &str,
    spans: &[Span],
    config: &AugmentConfig,
    rng: &mut R,
) -> Vec<Transform> {
    let domains: Vec<(Span, NumericDomain)> = spans
        .iter()
        .filter_map(|s| match s.label {
            SpanLabel::Numeric(class) => domain_for(s.text(sentence), class).map(|d| (*s, d)),
            SpanLabel::Entity(_) => None,
        })
        .collect();
    let refs: Vec<(Span, &dyn Alternatives)> = domains
        .iter()
        .map(|(s, d)| (*s, d as &dyn Alternatives))
        .collect();
    sample_combinations(sentence, &refs, config.cap(), rng)
}

/// Text-only form of [`number_transforms`].
pub fn transform_numbers<R: Rng + ?Sized>(
    sentence: &str,
    spans: &[Span],
    config: &AugmentConfig,
    rng: &mut R,
) -> Vec<String> {
    number_transforms(sentence, spans, config, rng)
        .into_iter()
        .map(|t| t.text)
        .collect()
}
