//! Multi-symbol range coder driven by explicit frequency tables.
//!
//! Every call to [`Encoder::encode`] receives the table to code under; the
//! coder keeps no model of its own. The decoder must be handed the same
//! table at the same position.
//!
//! # Bitstream
//!
//! The state is a 64-bit `low` holding a 56-bit coding window plus one carry
//! bit, and a `range` kept in `[2^48, 2^56]` after renormalization.
//!
//! * Coding a symbol with cumulative start `c`, frequency `f` and table total
//!   `t`: `r = range / t`, `low += c * r`, and `range = f * r`, except for the
//!   last symbol of the table (`c + f == t`) which takes `range - c * r`.
//! * Renormalization: while `range < 2^48`, shift one byte out of the top of
//!   the window (`low >> 48`) and multiply `range` by 256. Bytes equal to
//!   `0xFF` are held back as a pending run until a carry (bit 56 of `low`)
//!   resolves them.
//! * Termination: `low` is rounded up to the next multiple of `2^48`, which
//!   stays inside the final interval because `range >= 2^48`, and one final
//!   byte plus any pending run is emitted. Bytes are written most significant
//!   first.
//!
//! The decoder primes a 56-bit code register with the first seven bytes and
//! reads one byte per renormalization. Positions past the end of the payload
//! read as zero; a valid payload of length `L` is fully decoded after reading
//! exactly `L + 6` positions, so any further read reports [`Error::Truncated`].

use crate::error::{invalid, Error, Result};

/// Largest permitted table total.
pub const MAX_TOTAL: u32 = 1 << 30;

const WINDOW_MASK: u64 = (1 << 56) - 1;
const TOP_SHIFT: u32 = 48;
const RENORM: u64 = 1 << TOP_SHIFT;
const INITIAL_RANGE: u64 = 1 << 56;
const CODE_BYTES: usize = 7;
/// Zero bytes a decoder may read past the end of a valid payload.
const PHANTOM_BYTES: usize = CODE_BYTES - 1;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Repr {
    /// `m` symbols of frequency one.
    Uniform(u32),
    /// Cumulative frequencies, `cum[0] == 0`, one entry per symbol plus the total.
    Cumulative(Vec<u32>),
    /// `count` symbols; all but the last have frequency `full`.
    Buckets { count: u32, full: u32, last: u32 },
}

/// A frequency table over symbols `0..len()`. Every symbol has frequency at
/// least one and the total never exceeds [`MAX_TOTAL`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreqTable {
    repr: Repr,
}

impl FreqTable {
    /// `m` equiprobable symbols.
    pub fn uniform(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(invalid("uniform table needs at least one symbol"));
        }
        if m > MAX_TOTAL {
            return Err(invalid(format!("uniform table of {m} symbols exceeds 2^30")));
        }
        Ok(FreqTable { repr: Repr::Uniform(m) })
    }

    pub fn from_freqs(freqs: &[u32]) -> Result<Self> {
        if freqs.is_empty() {
            return Err(invalid("frequency table is empty"));
        }
        let mut cum = Vec::with_capacity(freqs.len() + 1);
        let mut total: u64 = 0;
        cum.push(0);
        for (s, &f) in freqs.iter().enumerate() {
            if f == 0 {
                return Err(invalid(format!("symbol {s} has zero frequency")));
            }
            total += u64::from(f);
            if total > u64::from(MAX_TOTAL) {
                return Err(invalid("frequency total exceeds 2^30"));
            }
            cum.push(total as u32);
        }
        Ok(FreqTable { repr: Repr::Cumulative(cum) })
    }

    /// `count` symbols where every symbol but the last has weight `full`.
    pub(crate) fn buckets(count: u32, full: u32, last: u32) -> Result<Self> {
        if count == 0 || full == 0 || last == 0 {
            return Err(invalid("bucket table needs positive counts and weights"));
        }
        let total = u64::from(count - 1) * u64::from(full) + u64::from(last);
        if total > u64::from(MAX_TOTAL) {
            return Err(invalid("bucket table total exceeds 2^30"));
        }
        Ok(FreqTable { repr: Repr::Buckets { count, full, last } })
    }

    /// Number of symbols.
    pub fn len(&self) -> u32 {
        match &self.repr {
            Repr::Uniform(m) => *m,
            Repr::Cumulative(cum) => (cum.len() - 1) as u32,
            Repr::Buckets { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total(&self) -> u32 {
        match &self.repr {
            Repr::Uniform(m) => *m,
            Repr::Cumulative(cum) => *cum.last().unwrap(),
            Repr::Buckets { count, full, last } => (count - 1) * full + last,
        }
    }

    /// Cumulative start and frequency of `symbol`.
    fn span(&self, symbol: u32) -> (u32, u32) {
        match &self.repr {
            Repr::Uniform(_) => (symbol, 1),
            Repr::Cumulative(cum) => {
                let s = symbol as usize;
                (cum[s], cum[s + 1] - cum[s])
            }
            Repr::Buckets { count, full, last } => {
                let f = if symbol + 1 == *count { *last } else { *full };
                (symbol * full, f)
            }
        }
    }

    pub fn freq(&self, symbol: u32) -> u32 {
        self.span(symbol).1
    }

    /// Symbol whose cumulative span contains `target` (`target < total`).
    fn lookup(&self, target: u32) -> (u32, u32, u32) {
        match &self.repr {
            Repr::Uniform(_) => (target, target, 1),
            Repr::Cumulative(cum) => {
                // first index with cum[i] > target, minus one
                let s = cum.partition_point(|&c| c <= target) - 1;
                (s as u32, cum[s], cum[s + 1] - cum[s])
            }
            Repr::Buckets { count, full, .. } => {
                let s = (target / full).min(count - 1);
                let (c, f) = self.span(s);
                (s, c, f)
            }
        }
    }

    /// Ideal code length of `symbol` in bits.
    pub fn cost_bits(&self, symbol: u32) -> f64 {
        (f64::from(self.total()) / f64::from(self.freq(symbol))).log2()
    }

    /// Frequencies as a vector. Intended for small tables.
    pub fn to_freqs(&self) -> Vec<u32> {
        (0..self.len()).map(|s| self.freq(s)).collect()
    }
}

/// The uniform model over `m` outcomes. Tables above 2^30 symbols must be
/// coded in stages, see [`crate::codec`].
pub fn uniform_table(m: u64) -> Result<FreqTable> {
    if m > u64::from(MAX_TOTAL) {
        return Err(Error::Unsupported(format!(
            "{m} symbols exceed the single-table limit; use staged count coding"
        )));
    }
    FreqTable::uniform(m as u32)
}

/// Range encoder. See the module docs for the byte format.
#[derive(Clone, Debug)]
pub struct Encoder {
    low: u64,
    range: u64,
    cache: Option<u8>,
    pending: u64,
    out: Vec<u8>,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Encoder {
            low: 0,
            range: INITIAL_RANGE,
            cache: None,
            pending: 0,
            out: Vec::new(),
        }
    }

    pub fn encode(&mut self, table: &FreqTable, symbol: u32) -> Result<()> {
        if symbol >= table.len() {
            return Err(invalid(format!(
                "symbol {symbol} out of range for a {}-symbol table",
                table.len()
            )));
        }
        let total = u64::from(table.total());
        let (start, freq) = table.span(symbol);
        let (start, freq) = (u64::from(start), u64::from(freq));
        let r = self.range / total;
        self.low += start * r;
        if start + freq == total {
            self.range -= start * r;
        } else {
            self.range = freq * r;
        }
        while self.range < RENORM {
            self.range <<= 8;
            self.shift_low();
        }
        Ok(())
    }

    fn shift_low(&mut self) {
        let top = self.low >> TOP_SHIFT;
        if top != 0xFF {
            let carry = (top >> 8) as u8;
            if let Some(c) = self.cache {
                self.out.push(c.wrapping_add(carry));
            }
            for _ in 0..self.pending {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.pending = 0;
            self.cache = Some(top as u8);
        } else {
            self.pending += 1;
        }
        self.low = (self.low & (RENORM - 1)) << 8;
    }

    /// Bytes committed so far, including held-back bytes. Grows by exactly one
    /// per renormalization step.
    pub fn bytes_emitted(&self) -> u64 {
        self.out.len() as u64 + self.pending + u64::from(self.cache.is_some())
    }

    pub fn bits_emitted(&self) -> u64 {
        self.bytes_emitted() * 8
    }

    /// Terminates the stream and returns the payload.
    pub fn finish(mut self) -> Vec<u8> {
        self.low = (self.low + (RENORM - 1)) & !(RENORM - 1);
        self.shift_low();
        if let Some(c) = self.cache {
            self.out.push(c);
        }
        for _ in 0..self.pending {
            self.out.push(0xFF);
        }
        self.out
    }
}

/// Range decoder over a borrowed payload.
#[derive(Clone, Debug)]
pub struct Decoder<'a> {
    code: u64,
    range: u64,
    input: &'a [u8],
    pos: usize,
    phantom: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self> {
        let mut dec = Decoder {
            code: 0,
            range: INITIAL_RANGE,
            input,
            pos: 0,
            phantom: 0,
        };
        for _ in 0..CODE_BYTES {
            dec.code = (dec.code << 8) | u64::from(dec.next_byte()?);
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8> {
        if let Some(&b) = self.input.get(self.pos) {
            self.pos += 1;
            Ok(b)
        } else {
            self.phantom += 1;
            if self.phantom > PHANTOM_BYTES {
                return Err(Error::Truncated);
            }
            Ok(0)
        }
    }

    pub fn decode(&mut self, table: &FreqTable) -> Result<u32> {
        let total = table.total();
        let r = self.range / u64::from(total);
        let target = (self.code / r).min(u64::from(total - 1)) as u32;
        let (symbol, start, freq) = table.lookup(target);
        let (start, freq) = (u64::from(start), u64::from(freq));
        self.code -= start * r;
        if start + freq == u64::from(total) {
            self.range -= start * r;
        } else {
            self.range = freq * r;
        }
        while self.range < RENORM {
            self.code = ((self.code << 8) | u64::from(self.next_byte()?)) & WINDOW_MASK;
            self.range <<= 8;
        }
        Ok(symbol)
    }

    /// Checks that the payload was consumed exactly.
    pub fn finish(self) -> Result<()> {
        // A complete stream is read to its end plus exactly PHANTOM_BYTES.
        let unread = self.input.len() - self.pos + PHANTOM_BYTES - self.phantom;
        if unread > 0 {
            return Err(Error::Format(format!("{unread} trailing bytes after arithmetic payload")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(items: &[(FreqTable, u32)]) -> Vec<u8> {
        let mut enc = Encoder::new();
        for (t, s) in items {
            enc.encode(t, *s).unwrap();
        }
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes).unwrap();
        for (t, s) in items {
            assert_eq!(dec.decode(t).unwrap(), *s);
        }
        dec.finish().unwrap();
        bytes
    }

    fn ideal_bits(items: &[(FreqTable, u32)]) -> f64 {
        items.iter().map(|(t, s)| t.cost_bits(*s)).sum()
    }

    #[test]
    fn binary_symbol_costs_one_bit() {
        let t = FreqTable::uniform(2).unwrap();
        assert_eq!(t.cost_bits(0), 1.0);
        let items: Vec<_> = (0..8000).map(|i| (t.clone(), (i * 7 % 3 == 0) as u32)).collect();
        let bytes = roundtrip(&items);
        let per_symbol = (bytes.len() * 8) as f64 / 8000.0;
        assert!((per_symbol - 1.0).abs() < 0.01, "{per_symbol}");
    }

    #[test]
    fn uniform_ten_within_entropy_bound() {
        let t = FreqTable::uniform(10).unwrap();
        let items: Vec<_> = (0..1000u32).map(|i| (t.clone(), (i * 31 + 7) % 10)).collect();
        let bytes = roundtrip(&items);
        let bound = (1000.0 * 10f64.log2()).ceil() as usize + 64;
        assert!(bytes.len() * 8 <= bound, "{} > {bound}", bytes.len() * 8);
    }

    #[test]
    fn skewed_symbol_amortized_cost() {
        let t = FreqTable::from_freqs(&[11, 3]).unwrap();
        let items: Vec<_> = (0..10_000).map(|_| (t.clone(), 0)).collect();
        let bytes = roundtrip(&items);
        let per_symbol = (bytes.len() * 8) as f64 / 10_000.0;
        let ideal = (14.0f64 / 11.0).log2();
        assert!((ideal - 0.348).abs() < 1e-3);
        assert!((per_symbol - ideal).abs() < 0.01, "{per_symbol} vs {ideal}");
    }

    #[test]
    fn exhaustive_short_sequences_uniform_four() {
        let t = FreqTable::uniform(4).unwrap();
        for seq in 0..64u32 {
            let items: Vec<_> = [seq % 4, seq / 4 % 4, seq / 16].iter().map(|&s| (t.clone(), s)).collect();
            roundtrip(&items);
        }
    }

    #[test]
    fn exhaustive_mixed_tables() {
        let tables = [
            FreqTable::uniform(2).unwrap(),
            FreqTable::uniform(10).unwrap(),
            FreqTable::uniform(5).unwrap(),
        ];
        for a in 0..2 {
            for b in 0..10 {
                for c in 0..5 {
                    roundtrip(&[(tables[0].clone(), a), (tables[1].clone(), b), (tables[2].clone(), c)]);
                }
            }
        }
    }

    #[test]
    fn single_symbol_alphabet_is_free() {
        let t = FreqTable::uniform(1).unwrap();
        assert_eq!(t.cost_bits(0), 0.0);
        let items: Vec<_> = (0..1000).map(|_| (t.clone(), 0)).collect();
        let bytes = roundtrip(&items);
        assert_eq!(bytes, roundtrip(&[]));
    }

    #[test]
    fn empty_and_tiny_payloads() {
        let empty = Encoder::new().finish();
        assert!(!empty.is_empty() && empty.len() <= 8);
        let one = roundtrip(&[(FreqTable::uniform(2).unwrap(), 1)]);
        assert!(one.len() <= 9);
    }

    #[test]
    fn framed_segments_decode_independently() {
        let t = FreqTable::from_freqs(&[5, 1, 9]).unwrap();
        let seg_a = [0u32, 2, 2, 1];
        let seg_b = [2u32, 0, 1];
        let mut framed = Vec::new();
        for seg in [&seg_a[..], &seg_b[..]] {
            let mut enc = Encoder::new();
            for &s in seg {
                enc.encode(&t, s).unwrap();
            }
            let bytes = enc.finish();
            framed.extend_from_slice(&(bytes.len() as u16).to_be_bytes());
            framed.extend_from_slice(&bytes);
        }
        let mut rest = &framed[..];
        for seg in [&seg_a[..], &seg_b[..]] {
            let len = u16::from_be_bytes([rest[0], rest[1]]) as usize;
            let mut dec = Decoder::new(&rest[2..2 + len]).unwrap();
            for &s in seg {
                assert_eq!(dec.decode(&t).unwrap(), s);
            }
            dec.finish().unwrap();
            rest = &rest[2 + len..];
        }
        assert!(rest.is_empty());
    }

    #[test]
    fn carries_propagate_through_ff_runs() {
        // Symbols at the top of a skewed table push `low` towards the window
        // edge, producing 0xFF runs that later carries must resolve.
        let t = FreqTable::from_freqs(&[1, 65_000]).unwrap();
        let steep = FreqTable::from_freqs(&[1 << 29, 1, 1]).unwrap();
        let mut items = Vec::new();
        for i in 0..20_000u32 {
            items.push((t.clone(), 1));
            if i % 97 == 0 {
                items.push((steep.clone(), 2));
                items.push((steep.clone(), 0));
            }
        }
        roundtrip(&items);
    }

    #[test]
    fn large_totals_stay_near_entropy() {
        let t = FreqTable::from_freqs(&[MAX_TOTAL - 3, 1, 1, 1]).unwrap();
        let items: Vec<_> = (0..100_000u32).map(|i| (t.clone(), [0, 1, 0, 3, 2][i as usize % 5])).collect();
        let bytes = roundtrip(&items);
        assert!((bytes.len() * 8) as f64 <= ideal_bits(&items) + 64.0);
    }

    #[test]
    fn truncation_is_reported() {
        let t = FreqTable::uniform(1000).unwrap();
        let mut enc = Encoder::new();
        for i in 0..500 {
            enc.encode(&t, i).unwrap();
        }
        let bytes = enc.finish();
        let cut = &bytes[..bytes.len() - 3];
        let mut dec = Decoder::new(cut).unwrap();
        let res: Result<Vec<_>> = (0..500).map(|_| dec.decode(&t)).collect();
        assert!(matches!(res, Err(Error::Truncated)));
    }

    #[test]
    fn trailing_bytes_are_reported() {
        let mut bytes = Encoder::new().finish();
        bytes.push(0);
        let dec = Decoder::new(&bytes).unwrap();
        assert!(matches!(dec.finish(), Err(Error::Format(_))));
    }

    #[test]
    fn table_invariants() {
        assert!(FreqTable::uniform(0).is_err());
        assert!(FreqTable::from_freqs(&[1, 0]).is_err());
        assert!(FreqTable::from_freqs(&[MAX_TOTAL, 1]).is_err());
        assert!(matches!(uniform_table((1 << 30) + 1), Err(Error::Unsupported(_))));
        let mut enc = Encoder::new();
        assert!(enc.encode(&FreqTable::uniform(3).unwrap(), 3).is_err());
        let t = FreqTable::uniform(10).unwrap();
        assert!((t.cost_bits(4) - std::f64::consts::LOG2_10).abs() < 1e-12);
    }

    #[test]
    fn bucket_lookup_matches_spans() {
        let t = FreqTable::buckets(5, 8, 3).unwrap();
        assert_eq!(t.total(), 35);
        for target in 0..35 {
            let (s, c, f) = t.lookup(target);
            assert!(c <= target && target < c + f);
            assert_eq!(t.span(s), (c, f));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn table_strategy() -> impl Strategy<Value = FreqTable> {
            prop_oneof![
                (1u32..2000).prop_map(|m| FreqTable::uniform(m).unwrap()),
                prop::collection::vec(1u32..70_000, 1..12).prop_map(|f| FreqTable::from_freqs(&f).unwrap()),
            ]
        }

        proptest! {
            #[test]
            fn roundtrip_and_entropy_bound(
                items in prop::collection::vec(
                    table_strategy().prop_flat_map(|t| { let n = t.len(); (Just(t), 0..n) }),
                    0..300,
                )
            ) {
                let bytes = roundtrip(&items);
                prop_assert!((bytes.len() * 8) as f64 <= ideal_bits(&items) + 64.0);
            }

            #[test]
            fn deterministic_output(symbols in prop::collection::vec(0u32..7, 0..200)) {
                let t = FreqTable::from_freqs(&[3, 1, 4, 1, 5, 9, 2]).unwrap();
                let run = || {
                    let mut e = Encoder::new();
                    for &s in &symbols { e.encode(&t, s).unwrap(); }
                    e.finish()
                };
                prop_assert_eq!(run(), run());
            }
        }
    }
}
