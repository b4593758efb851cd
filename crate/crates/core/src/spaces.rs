//! Sizes of musical and physical possibility spaces, compared on a log scale.

use std::fmt;
use std::fmt::Write as _;

use dashu_int::IBig;
use num_bigint::BigUint;
use num_traits::One;

use crate::binomtail::{
    calibrate_p, chernoff, BinomialSpec, Direction, TailQuery, FLAGSHIP_K, FLAGSHIP_N,
    FLAGSHIP_TARGET_LOG10,
};
use crate::error::{Error, Result};
use crate::xprec::{pi, Precision, XReal};

/// Recomputed and published log2 sizes differing by more than this are
/// flagged.
pub const MISMATCH_LOG2: f64 = 0.05;

/// Largest integer, in decimal digits, that [`Quantity::to_integer`] will
/// build.
pub const MATERIALIZE_DIGIT_LIMIT: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Base {
    Int(u64),
    Pi,
}

/// `base^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factor {
    pub base: Base,
    pub exponent: i64,
}

impl Factor {
    pub fn int(value: u64) -> Self {
        Factor::pow(value, 1)
    }

    pub fn pow(base: u64, exponent: i64) -> Self {
        Factor {
            base: Base::Int(base),
            exponent,
        }
    }

    pub fn pi(exponent: i64) -> Self {
        Factor {
            base: Base::Pi,
            exponent,
        }
    }
}

/// A size, either as a product of powers or as a published log2 value.
#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    Product(Vec<Factor>),
    Log2(XReal),
}

impl Quantity {
    pub fn product(factors: Vec<Factor>) -> Result<Self> {
        for f in &factors {
            if let Base::Int(b) = f.base {
                if b < 2 {
                    return Err(Error::domain(format!("factor base {b} must be at least 2")));
                }
            }
        }
        Ok(Quantity::Product(factors))
    }

    pub fn log2_literal(text: &str, prec: Precision) -> Result<Self> {
        Ok(Quantity::Log2(XReal::parse(text, prec)?))
    }

    /// The exact integer, when the factors form one of at most
    /// [`MATERIALIZE_DIGIT_LIMIT`] digits.
    pub fn to_integer(&self) -> Option<BigUint> {
        let Quantity::Product(factors) = self else {
            return None;
        };
        let mut digits = 0.0;
        for f in factors {
            match f.base {
                Base::Pi => return None,
                Base::Int(_) if f.exponent < 0 => return None,
                Base::Int(b) => digits += f.exponent as f64 * (b as f64).log10(),
            }
        }
        if digits > MATERIALIZE_DIGIT_LIMIT {
            return None;
        }
        let mut v = BigUint::one();
        for f in factors {
            if let Base::Int(b) = f.base {
                v *= BigUint::from(b).pow(f.exponent as u32);
            }
        }
        Some(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogBase {
    Two,
    Ten,
}

impl LogBase {
    fn ln(self, prec: Precision) -> Result<XReal> {
        let b = match self {
            LogBase::Two => 2,
            LogBase::Ten => 10,
        };
        XReal::from_int(b, prec).ln()
    }
}

/// `log_base` of a quantity, from the logarithms of its factors.
pub fn quantity_log(quantity: &Quantity, base: LogBase, prec: Precision) -> Result<XReal> {
    let wide = prec.widen(10);
    let out = match quantity {
        Quantity::Log2(l) => match base {
            LogBase::Two => l.with_precision(wide),
            LogBase::Ten => l
                .with_precision(wide)
                .mul(&LogBase::Two.ln(wide)?)
                .div(&LogBase::Ten.ln(wide)?)?,
        },
        Quantity::Product(factors) => {
            let mut ln = XReal::zero(wide);
            for f in factors {
                let ln_base = match f.base {
                    Base::Int(b) => XReal::from_int(b, wide).ln()?,
                    Base::Pi => pi(wide).ln()?,
                };
                ln = ln.add(&XReal::from_int(f.exponent, wide).mul(&ln_base));
            }
            ln.div(&base.ln(wide)?)?
        }
    };
    Ok(out.with_precision(prec))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ComputedFromFormula,
    PaperLiteral,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ComputedFromFormula => "computed-from-formula",
            Provenance::PaperLiteral => "paper-literal",
        })
    }
}

/// One row of the comparison table.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: &'static str,
    pub description: &'static str,
    /// The size shown in the table.
    pub quantity: Quantity,
    pub provenance: Provenance,
    /// Published log2 size, kept as printed.
    pub paper_log2: &'static str,
    /// Published order of magnitude, kept as printed.
    pub paper_order: i64,
    /// For literal rows: log2 recomputed from the parameters in the prose.
    pub derived_log2: Option<XReal>,
    /// How `derived_log2` was obtained.
    pub derivation: Option<String>,
}

impl Scenario {
    pub fn log2(&self, prec: Precision) -> Result<XReal> {
        quantity_log(&self.quantity, LogBase::Two, prec)
    }

    pub fn log10(&self, prec: Precision) -> Result<XReal> {
        quantity_log(&self.quantity, LogBase::Ten, prec)
    }

    /// The recomputed log2: the formula itself, or the side recomputation of
    /// a literal row.
    pub fn recomputed_log2(&self, prec: Precision) -> Result<Option<XReal>> {
        Ok(match self.provenance {
            Provenance::ComputedFromFormula => Some(self.log2(prec)?),
            Provenance::PaperLiteral => self.derived_log2.clone(),
        })
    }

    /// The recomputed log2 when it departs from the published one by more
    /// than [`MISMATCH_LOG2`].
    pub fn mismatch(&self, prec: Precision) -> Result<Option<f64>> {
        let paper: f64 = self.paper_log2.parse().map_err(|_| {
            Error::domain(format!("unparseable published value {}", self.paper_log2))
        })?;
        Ok(self
            .recomputed_log2(prec)?
            .map(|r| r.to_f64())
            .filter(|r| (r - paper).abs() > MISMATCH_LOG2))
    }

    /// A note when the published order differs from `round(log10)`.
    pub fn rounding_note(&self, prec: Precision) -> Result<Option<String>> {
        let log10 = self.log10(prec)?.to_f64();
        Ok((log10.round() as i64 != self.paper_order).then(|| {
            format!(
                "{}: log10 = {log10:.2}, while the published order column gives {}",
                self.id, self.paper_order
            )
        }))
    }
}

/// Live values for the two rows backed by the probability engine.
#[derive(Clone, Debug)]
pub struct MusicLikeBounds {
    /// `-log2` of the continuity tail at the calibrated `p`.
    pub continuity_log2: XReal,
    pub calibrated_p: XReal,
    /// `-log2` of the zero-crossing Chernoff bound.
    pub zero_crossing_log2: XReal,
}

impl MusicLikeBounds {
    pub fn compute(prec: Precision) -> Result<Self> {
        let to_log2 = |log10: &XReal| -> Result<XReal> {
            let ten = XReal::from_int(10, prec).ln()?;
            let two = XReal::from_int(2, prec).ln()?;
            Ok(-log10.mul(&ten).div(&two)?)
        };
        let cal = calibrate_p(FLAGSHIP_N, FLAGSHIP_K, FLAGSHIP_TARGET_LOG10, prec)?;
        let spec = BinomialSpec::new(FLAGSHIP_N, cal.p.clone())?;
        let tail = crate::binomtail::tail(&TailQuery::upper(spec, FLAGSHIP_K)?)?;
        let half = BinomialSpec::new(44_100, XReal::from_ratio(1, 2, prec)?)?;
        let bound = chernoff(&half, 2205, Direction::Lower)?;
        let log10 = |m: &crate::xprec::LogMagnitude| {
            m.log10()
                .cloned()
                .ok_or_else(|| Error::domain("probability underflowed to zero"))
        };
        Ok(MusicLikeBounds {
            continuity_log2: to_log2(&log10(&tail)?)?,
            calibrated_p: cal.p,
            zero_crossing_log2: to_log2(&log10(&bound)?)?,
        })
    }
}

/// Seconds in a Julian year, `365.25·86400`.
const YEAR_SECONDS: u64 = 31_557_600;

fn product(factors: &[Factor]) -> Quantity {
    Quantity::product(factors.to_vec()).expect("builtin bases are at least 2")
}

/// The comparison table, sourcing the two music-like rows from
/// [`MusicLikeBounds::compute`].
pub fn builtin_scenarios(prec: Precision) -> Result<Vec<Scenario>> {
    builtin_scenarios_with(prec, &MusicLikeBounds::compute(prec)?)
}

/// [`builtin_scenarios`] with precomputed probability-engine rows.
pub fn builtin_scenarios_with(prec: Precision, live: &MusicLikeBounds) -> Result<Vec<Scenario>> {
    let formula = |id, description, factors: &[Factor], paper_log2, paper_order| Scenario {
        id,
        description,
        quantity: product(factors),
        provenance: Provenance::ComputedFromFormula,
        paper_log2,
        paper_order,
        derived_log2: None,
        derivation: None,
    };
    let literal = |id,
                   description,
                   paper_log2: &'static str,
                   paper_order,
                   derived: Option<(XReal, String)>|
     -> Result<Scenario> {
        let (derived_log2, derivation) = match derived {
            Some((v, how)) => (Some(v), Some(how)),
            None => (None, None),
        };
        Ok(Scenario {
            id,
            description,
            quantity: Quantity::log2_literal(paper_log2, prec)?,
            provenance: Provenance::PaperLiteral,
            paper_log2,
            paper_order,
            derived_log2,
            derivation,
        })
    };
    let from_factors = |factors: &[Factor], how: &str| -> Result<Option<(XReal, String)>> {
        Ok(Some((
            quantity_log(&product(factors), LogBase::Two, prec)?,
            how.to_string(),
        )))
    };

    Ok(vec![
        formula(
            "audio64",
            "Every one-second clip of 64-bit audio at 192 kHz",
            &[Factor::pow(2, 192_000 * 64)],
            "12288000",
            3_699_057,
        ),
        formula(
            "audio16",
            "Every one-second clip of 16-bit audio at 44.1 kHz",
            &[Factor::pow(2, 44_100 * 16)],
            "705600",
            212_407,
        ),
        formula(
            "chatgpt",
            "Language-model contexts: 32768 tokens over a 170000-word vocabulary plus one spare symbol",
            &[Factor::pow(170_001, 32_768)],
            "569350.02",
            171_391,
        ),
        literal(
            "continuity",
            "Bound on one-second 16-bit 44.1 kHz clips that move continuously like music",
            "205703.43",
            61_923,
            Some((
                live.continuity_log2.clone(),
                format!(
                    "-log2 P(X >= 43835; 44100, p) at calibrated p = {}",
                    live.calibrated_p.to_sci_string(15)
                ),
            )),
        )?,
        literal(
            "zero-crossings",
            "Bound on one-second 16-bit 44.1 kHz clips with music-like zero-crossing counts",
            "31469.89",
            9473,
            Some((
                live.zero_crossing_log2.clone(),
                "-log2 of the Chernoff bound for k = 2205 of n = 44100 at p = 1/2".to_string(),
            )),
        )?,
        formula(
            "orchestra",
            "A 30-player orchestra filling one 4/4 bar at 240 bpm: 37 choices at each of 32 positions per player",
            &[Factor::pow(37, 32 * 30)],
            "5001.08",
            1505,
        ),
        formula(
            "atoms",
            "Atoms in the observable universe",
            &[Factor::pow(10, 80)],
            "265.75",
            80,
        ),
        literal(
            "motives",
            "Orbit representatives of rhythm-pitch motives in Z12 x Z12",
            "124.66",
            38,
            None,
        )?,
        literal(
            "humans",
            "One-second clips, one per sample, from 1024 microphones around each of 10^11 people over 80-year lives",
            "98",
            30,
            from_factors(
                &[
                    Factor::pow(2, 10),
                    Factor::pow(10, 11),
                    Factor::int(80),
                    Factor::int(YEAR_SECONDS),
                    Factor::int(44_100),
                ],
                "1024 * 10^11 * 80 * 31557600 * 44100",
            )?,
        )?,
        formula(
            "melodies",
            "Monophonic 16-step melodies over two octaves plus a rest",
            &[Factor::pow(25, 16)],
            "74.30",
            22,
        ),
        literal(
            "universe-seconds",
            "Age of the universe in seconds, or beats at 60 bpm since the start of time",
            "58.59",
            17,
            from_factors(
                &[
                    Factor::int(13_787),
                    Factor::pow(10, 4),
                    Factor::int(36_525),
                    Factor::int(86_400),
                ],
                "13.787e9 * 365.25 * 86400",
            )?,
        )?,
        literal(
            "mobiles",
            "One-second clips, one per sample, from 17 billion phones recording for 3 years",
            "47.42",
            14,
            from_factors(
                &[
                    Factor::int(17),
                    Factor::pow(10, 9),
                    Factor::int(3),
                    Factor::int(YEAR_SECONDS),
                    Factor::int(44_100),
                ],
                "17e9 * 3 * 31557600 * 44100",
            )?,
        )?,
        formula(
            "componium",
            "Variations playable by Winkel's Componium (1821)",
            &[Factor::int(53_875_981_680_676)],
            "45.61",
            13,
        ),
        literal(
            "soundcloud",
            "One-second windows, one per sample, across 200 million three-minute tracks",
            "39.74",
            12,
            from_factors(
                &[
                    Factor::int(2),
                    Factor::pow(10, 8),
                    Factor::int(180),
                    Factor::int(44_100),
                ],
                "2e8 * 180 * 44100",
            )?,
        )?,
        formula(
            "tonerows",
            "Twelve-tone rows",
            &[Factor::int(9_985_920)],
            "23.25",
            7,
        ),
        formula(
            "rhythms",
            "On/off patterns over 16 steps",
            &[Factor::pow(2, 16)],
            "16",
            5,
        ),
        formula(
            "haystack",
            "Odds of grabbing the needle: 5 cm radius handful from a 2.5 m haystack",
            // 2.5^3 / ((4/3)·π·0.05^3) = 5^3·2^-3 · 3·2^-2 · π^-1 · 20^3
            &[
                Factor::pow(5, 3),
                Factor::pow(2, -5),
                Factor::int(3),
                Factor::pi(-1),
                Factor::pow(20, 3),
            ],
            "14.87",
            5,
        ),
    ])
}

/// Grid positions per second `x`, tracks `n`, parameters per synth `m`,
/// pitches `y` (each step chooses one of `y + 1` including "hold").
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DawSpaceSpec {
    pub x: u64,
    pub n: u64,
    pub m: u64,
    pub y: u64,
}

/// Distinct values of a 14-bit parameter.
pub const PARAMETER_RANGE: u64 = 16_384;

impl DawSpaceSpec {
    pub const SMALL_STUDIO: DawSpaceSpec = DawSpaceSpec {
        x: 96,
        n: 100,
        m: 100,
        y: 99,
    };
    pub const FESTIVAL_CROWD: DawSpaceSpec = DawSpaceSpec {
        x: 2048,
        n: 1_000_000,
        m: 100,
        y: 249,
    };
    /// Published value for [`Self::SMALL_STUDIO`].
    pub const SMALL_STUDIO_PAPER: &'static str = "980.58431417239";
    /// Published value for [`Self::FESTIVAL_CROWD`]; it equals the
    /// formula with `m = 1000`.
    pub const FESTIVAL_CROWD_PAPER: &'static str = "31974.113173438";

    pub fn new(x: u64, n: u64, m: u64, y: u64) -> Result<Self> {
        if n == 0 || m == 0 || y == 0 {
            return Err(Error::domain(
                "tracks, parameters and pitches must be at least 1",
            ));
        }
        Ok(DawSpaceSpec { x, n, m, y })
    }
}

/// `x·log10((y + 1)·16384·m·n)`, the log10 count of one-second projects.
pub fn daw_space_log10(spec: &DawSpaceSpec, prec: Precision) -> Result<XReal> {
    if spec.x == 0 {
        return Ok(XReal::zero(prec));
    }
    let wide = prec.widen(6);
    let per_step = IBig::from(spec.y + 1)
        * IBig::from(PARAMETER_RANGE)
        * IBig::from(spec.m)
        * IBig::from(spec.n);
    Ok(XReal::from_int(per_step, wide)
        .log10()?
        .mul(&XReal::from_int(spec.x, wide))
        .with_precision(prec))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
    Plain,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            "plain" | "text" => Ok(TableFormat::Plain),
            other => Err(Error::domain(format!("unknown table format {other:?}"))),
        }
    }
}

/// A rendered table row.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub id: String,
    pub description: String,
    pub log2: String,
    pub log10: String,
    pub paper_order: String,
    pub provenance: String,
    pub mismatch: String,
}

/// Rows sorted by descending log2. A row whose recomputation departs from
/// the published log2 carries `recomputed <value>` in `mismatch`.
pub fn table_rows(registry: &[Scenario], prec: Precision) -> Result<Vec<TableRow>> {
    let mut keyed = Vec::with_capacity(registry.len());
    for s in registry {
        let log2 = s.log2(prec)?;
        keyed.push((log2.clone(), s, log2.to_f64(), s.log10(prec)?.to_f64()));
    }
    keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    keyed
        .into_iter()
        .map(|(_, s, log2, log10)| {
            Ok(TableRow {
                id: s.id.to_string(),
                description: s.description.to_string(),
                log2: format!("{log2:.2}"),
                log10: format!("{log10:.2}"),
                paper_order: s.paper_order.to_string(),
                provenance: s.provenance.to_string(),
                mismatch: s
                    .mismatch(prec)?
                    .map(|r| format!("recomputed {r:.2}"))
                    .unwrap_or_default(),
            })
        })
        .collect()
}

const HEADERS: [&str; 7] = [
    "id",
    "description",
    "log2",
    "log10",
    "paper_order",
    "provenance",
    "mismatch",
];

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// The table in one of three text formats.
pub fn render_table(registry: &[Scenario], format: TableFormat, prec: Precision) -> Result<String> {
    if registry.is_empty() {
        return Err(Error::domain("cannot render an empty registry"));
    }
    let rows = table_rows(registry, prec)?;
    let cells: Vec<[&str; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.id.as_str(),
                r.description.as_str(),
                r.log2.as_str(),
                r.log10.as_str(),
                r.paper_order.as_str(),
                r.provenance.as_str(),
                r.mismatch.as_str(),
            ]
        })
        .collect();
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(&HEADERS.join(","));
            out.push('\n');
            for row in &cells {
                let fields: Vec<String> = row.iter().map(|c| csv_field(c)).collect();
                out.push_str(&fields.join(","));
                out.push('\n');
            }
        }
        TableFormat::Markdown => {
            let _ = writeln!(out, "| {} |", HEADERS.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(HEADERS.len()));
            for row in &cells {
                let escaped: Vec<String> = row.iter().map(|c| c.replace('|', "\\|")).collect();
                let _ = writeln!(out, "| {} |", escaped.join(" | "));
            }
        }
        TableFormat::Plain => {
            let mut widths = HEADERS.map(str::len);
            for row in &cells {
                for (w, c) in widths.iter_mut().zip(row) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let mut line = |row: &[&str; 7]| {
                let padded: Vec<String> = row
                    .iter()
                    .zip(widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect();
                let _ = writeln!(out, "{}", padded.join("  ").trim_end());
            };
            line(&HEADERS);
            for row in &cells {
                line(row);
            }
        }
    }
    Ok(out)
}

/// Rounding notes and literal-row recomputations, one line each.
pub fn table_notes(registry: &[Scenario], prec: Precision) -> Result<Vec<String>> {
    let mut notes = Vec::new();
    for s in registry {
        if let Some(note) = s.rounding_note(prec)? {
            notes.push(note);
        }
        if let (Some(d), Some(how)) = (&s.derived_log2, &s.derivation) {
            notes.push(format!(
                "{}: published log2 {}, recomputed {:.2} from {how}",
                s.id,
                s.paper_log2,
                d.to_f64()
            ));
        }
    }
    Ok(notes)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: Precision = Precision::DEFAULT;

    fn registry() -> Vec<Scenario> {
        // Stand-in engine rows so these tests stay independent of the
        // calibration; the live values are checked separately.
        let live = MusicLikeBounds {
            continuity_log2: XReal::parse("6703.29", P).unwrap(),
            calibrated_p: XReal::parse("0.878", P).unwrap(),
            zero_crossing_log2: XReal::parse("31469.89", P).unwrap(),
        };
        builtin_scenarios_with(P, &live).unwrap()
    }

    fn find<'a>(r: &'a [Scenario], id: &str) -> &'a Scenario {
        r.iter().find(|s| s.id == id).unwrap()
    }

    /// log10 of an integer from its decimal digits: `len - 1 + log10(lead)`.
    fn digit_log10(v: &BigUint) -> f64 {
        let s = v.to_string();
        let lead: f64 = format!("0.{}", &s[..s.len().min(17)]).parse().unwrap();
        s.len() as f64 + lead.log10()
    }

    #[test]
    fn log_examples() {
        let q = Quantity::product(vec![Factor::pow(2, 16)]).unwrap();
        assert_eq!(
            quantity_log(&q, LogBase::Two, P).unwrap(),
            XReal::from_int(16, P)
        );
        let q = Quantity::product(vec![Factor::pow(170_001, 32_768)]).unwrap();
        let l = quantity_log(&q, LogBase::Two, P).unwrap().to_f64();
        assert!((l - 569_350.02).abs() < 0.01, "{l}");
        let q = Quantity::product(vec![Factor::int(53_875_981_680_676)]).unwrap();
        let l = quantity_log(&q, LogBase::Two, P).unwrap().to_f64();
        assert!((l - (53_875_981_680_676f64).log2()).abs() < 1e-12);
        assert!((l - 45.61).abs() < 0.005);
        assert!(Quantity::product(vec![Factor::pow(1, 5)]).is_err());
    }

    #[test]
    fn formula_rows_match_published_log2() {
        let r = registry();
        for s in r
            .iter()
            .filter(|s| s.provenance == Provenance::ComputedFromFormula)
        {
            let paper: f64 = s.paper_log2.parse().unwrap();
            let l = s.log2(P).unwrap().to_f64();
            assert!((l - paper).abs() <= 0.01, "{}: {l} vs {paper}", s.id);
            assert!(s.mismatch(P).unwrap().is_none());
        }
        let audio16 = find(&r, "audio16");
        assert_eq!(audio16.log2(P).unwrap(), XReal::from_int(705_600, P));
        let l10 = audio16.log10(P).unwrap().to_f64();
        // 705600·log10(2) = 212406.7649405051…
        assert!(
            (l10 - 212_406.764_940_505).abs() < 1e-6 && l10.round() == 212_407.0,
            "{l10}"
        );
        let orchestra = find(&r, "orchestra").log2(P).unwrap().to_f64();
        assert!((orchestra - 5001.08).abs() < 0.005);
    }

    #[test]
    fn haystack_ratio() {
        let r = registry();
        let h = find(&r, "haystack").log2(P).unwrap().to_f64();
        let ratio = 2f64.powf(h);
        let direct = 15.625 / (4.0 / 3.0 * std::f64::consts::PI * 0.05f64.powi(3));
        assert!((ratio - direct).abs() < 1e-6 * direct);
        assert!((ratio - 29_842.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn mismatches_are_the_non_recomputable_rows() {
        let r = registry();
        let mut flagged: Vec<&str> = r
            .iter()
            .filter(|s| s.mismatch(P).unwrap().is_some())
            .map(|s| s.id)
            .collect();
        flagged.sort_unstable();
        assert_eq!(flagged, ["continuity", "humans", "mobiles", "soundcloud"]);
        let universe = find(&r, "universe-seconds")
            .derived_log2
            .clone()
            .unwrap()
            .to_f64();
        assert!((universe - 58.594).abs() < 0.001, "{universe}");
        let humans = find(&r, "humans").derived_log2.clone().unwrap().to_f64();
        assert!((humans - 93.2).abs() < 0.05, "{humans}");
    }

    #[test]
    fn rounding_notes() {
        let r = registry();
        let noted: Vec<&str> = r
            .iter()
            .filter(|s| s.rounding_note(P).unwrap().is_some())
            .map(|s| s.id)
            .collect();
        assert_eq!(noted, ["universe-seconds", "componium", "haystack"]);
        let note = find(&r, "componium").rounding_note(P).unwrap().unwrap();
        assert!(note.contains("13.73") && note.contains("13"));
    }

    #[test]
    fn base_conversion_invariant() {
        let log10_2 = 2f64.log10();
        for s in registry() {
            let l2 = s.log2(P).unwrap();
            let l10 = s.log10(P).unwrap();
            let via = l2.mul(&XReal::from_int(2, P).log10().unwrap());
            let rel = l10.sub(&via).abs().to_f64() / l10.abs().to_f64().max(1.0);
            assert!(rel < 1e-10, "{}", s.id);
            assert!(
                (l10.to_f64() - l2.to_f64() * log10_2).abs() <= 1e-10 * l10.to_f64().abs().max(1.0)
            );
        }
    }

    #[test]
    fn factor_logs_match_materialized_integers() {
        for s in registry() {
            if let Some(v) = s.quantity.to_integer() {
                if v.bits() as f64 * 2f64.log10() > 1e5 {
                    continue;
                }
                let l = s.log10(P).unwrap().to_f64();
                assert!((l - digit_log10(&v)).abs() < 1e-9, "{}", s.id);
            }
        }
        // About 1.2·10^7 digits, over the limit.
        let big = Quantity::product(vec![Factor::pow(2, 40_000_000)]).unwrap();
        assert!(big.to_integer().is_none());
        let q = Quantity::product(vec![Factor::pow(2, -1)]).unwrap();
        assert!(q.to_integer().is_none());
    }

    #[test]
    fn daw_space_values() {
        let v = daw_space_log10(&DawSpaceSpec::SMALL_STUDIO, P).unwrap();
        let paper = XReal::parse(DawSpaceSpec::SMALL_STUDIO_PAPER, P).unwrap();
        assert!(v.sub(&paper).abs().to_f64() < 1e-9, "{v}");

        let v = daw_space_log10(&DawSpaceSpec::FESTIVAL_CROWD, P).unwrap();
        assert!((v.to_f64() - 29_926.1132).abs() < 1e-3);
        let paper = XReal::parse(DawSpaceSpec::FESTIVAL_CROWD_PAPER, P).unwrap();
        assert!((paper.sub(&v).to_f64() - 2048.0).abs() < 1e-3);
        let m1000 = DawSpaceSpec {
            m: 1000,
            ..DawSpaceSpec::FESTIVAL_CROWD
        };
        assert!(
            daw_space_log10(&m1000, P)
                .unwrap()
                .sub(&paper)
                .abs()
                .to_f64()
                < 1e-9
        );

        let empty = DawSpaceSpec {
            x: 0,
            ..DawSpaceSpec::SMALL_STUDIO
        };
        assert!(daw_space_log10(&empty, P).unwrap().is_zero());
        assert!(DawSpaceSpec::new(1, 0, 1, 1).is_err());
    }

    #[test]
    fn daw_space_is_linear_and_monotone() {
        let base = DawSpaceSpec::new(7, 3, 5, 11).unwrap();
        let one = daw_space_log10(&base, P).unwrap();
        let triple = daw_space_log10(&DawSpaceSpec { x: 21, ..base }, P).unwrap();
        assert!(triple.sub(&one.mul(&XReal::from_int(3, P))).abs().to_f64() < 1e-50);
        for bumped in [
            DawSpaceSpec { n: 4, ..base },
            DawSpaceSpec { m: 6, ..base },
            DawSpaceSpec { y: 12, ..base },
        ] {
            assert!(daw_space_log10(&bumped, P).unwrap() > one);
        }
    }

    #[test]
    fn rendering() {
        let r = registry();
        let md = render_table(&r, TableFormat::Markdown, P).unwrap();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), r.len() + 2);
        assert!(lines[0].starts_with("| id | description | log2"));
        assert!(lines[2].starts_with("| audio64 |"));
        let rhythms = lines.iter().find(|l| l.starts_with("| rhythms |")).unwrap();
        assert!(rhythms.contains("| 16.00 | 4.82 | 5 |"), "{rhythms}");

        let csv = render_table(&r, TableFormat::Csv, P).unwrap();
        let mut csv_lines = csv.lines();
        assert_eq!(
            csv_lines.next(),
            Some("id,description,log2,log10,paper_order,provenance,mismatch")
        );
        assert_eq!(csv_lines.count(), r.len());
        assert!(csv.contains("\nhumans,"));
        let humans = csv.lines().find(|l| l.starts_with("humans,")).unwrap();
        assert!(
            humans.ends_with(",paper-literal,recomputed 93.20"),
            "{humans}"
        );

        let plain = render_table(&r, TableFormat::Plain, P).unwrap();
        assert_eq!(plain.lines().count(), r.len() + 1);
        assert!(render_table(&[], TableFormat::Plain, P).is_err());

        let order: Vec<String> = table_rows(&r, P)
            .unwrap()
            .into_iter()
            .map(|row| row.paper_order)
            .collect();
        assert_eq!(
            order,
            [
                "3699057", "212407", "171391", "61923", "9473", "1505", "80", "38", "30", "22",
                "17", "14", "13", "12", "7", "5", "5"
            ]
        );
    }

    #[test]
    fn notes_cover_literal_recomputations() {
        let notes = table_notes(&registry(), P).unwrap();
        assert!(notes
            .iter()
            .any(|n| n.starts_with("soundcloud: published log2 39.74")));
        assert!(notes
            .iter()
            .any(|n| n.starts_with("componium: log10 = 13.73")));
    }
}
