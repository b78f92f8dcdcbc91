/// Fixed-length bit array, least-significant bit first within each word.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Bits {
    words: Vec<u64>,
    len: u64,
}

impl Bits {
    pub fn zeros(len: u64) -> Self {
        Self {
            words: vec![0; len.div_ceil(64) as usize],
            len,
        }
    }

    pub fn ones(len: u64) -> Self {
        let mut bits = Self {
            words: vec![u64::MAX; len.div_ceil(64) as usize],
            len,
        };
        bits.clear_padding();
        bits
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    #[inline]
    pub fn get(&self, i: u64) -> bool {
        debug_assert!(i < self.len);
        self.words[(i >> 6) as usize] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: u64, value: bool) {
        debug_assert!(i < self.len);
        let word = &mut self.words[(i >> 6) as usize];
        let mask = 1u64 << (i & 63);
        if value {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn not(&self) -> Self {
        let mut out = Self {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        out.clear_padding();
        out
    }

    pub fn or(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len, other.len);
        Self {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a | b)
                .collect(),
            len: self.len,
        }
    }

    pub fn and(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len, other.len);
        Self {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
            len: self.len,
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let base = (w as u64) << 6;
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros();
                rest &= rest - 1;
                Some(base + u64::from(tz))
            })
        })
    }

    fn clear_padding(&mut self) {
        let tail = self.len & 63;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    /// Packed bytes, bit `k` at byte `k / 8`, position `k % 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8) as usize;
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(n);
        out
    }

    /// Inverse of [`Bits::to_bytes`]; `None` when a bit past `len` is set.
    pub fn from_bytes(bytes: &[u8], len: u64) -> Option<Self> {
        debug_assert_eq!(bytes.len() as u64, len.div_ceil(8));
        let mut words = vec![0u64; len.div_ceil(64) as usize];
        for (chunk, word) in bytes.chunks(8).zip(words.iter_mut()) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *word = u64::from_le_bytes(buf);
        }
        let bits = Self { words, len };
        let mut cleared = bits.clone();
        cleared.clear_padding();
        (cleared == bits).then_some(bits)
    }
}
