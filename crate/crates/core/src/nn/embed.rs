//! Pluggable text embedders.
//!
//! The default embedder hashes character trigrams into a fixed-width bag,
//! mean-pools, L2-normalizes, and appends four pattern flags. It is
//! deterministic and needs no external weights, so every stage of the
//! pipeline stays reproducible.

/// Maps text to a fixed-dimension vector.
pub trait TextEmbedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
}

/// Character-trigram feature hashing (64 buckets by default), mean-pooled and
/// L2-normalized, concatenated with four pattern flags:
/// numbering prefix (`3.2.`-style), all-caps ratio, digit ratio, and a
/// logarithmic length bucket in [0, 1].
#[derive(Debug, Clone)]
pub struct HashedTrigramEmbedder {
    pub buckets: usize,
}

pub const PATTERN_FLAGS: usize = 4;

impl Default for HashedTrigramEmbedder {
    fn default() -> Self {
        HashedTrigramEmbedder { buckets: 64 }
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Leading `3.` / `3.2` / `3.2.1.` style numbering followed by whitespace or
/// end of text.
fn starts_with_numbering(text: &str) -> bool {
    let t = text.trim_start();
    let mut chars = t.chars().peekable();
    let mut saw_digit = false;
    while let Some(&c) = chars.peek() {
        if c.is_ascii_digit() {
            saw_digit = true;
            chars.next();
        } else if (c == '.' || c == ')') && saw_digit {
            chars.next();
            // after a separator either more digits, whitespace, or end
            match chars.peek() {
                None => return true,
                Some(&n) if n.is_whitespace() => return true,
                Some(&n) if n.is_ascii_digit() => continue,
                _ => return false,
            }
        } else {
            break;
        }
    }
    false
}

impl TextEmbedder for HashedTrigramEmbedder {
    fn dim(&self) -> usize {
        self.buckets + PATTERN_FLAGS
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        let lower: Vec<char> = text.chars().flat_map(|c| c.to_lowercase()).collect();
        let mut count = 0usize;
        if lower.len() >= 3 {
            for w in lower.windows(3) {
                let s: String = w.iter().collect();
                let b = (fnv1a64(s.as_bytes()) % self.buckets as u64) as usize;
                v[b] += 1.0;
                count += 1;
            }
        } else if !lower.is_empty() {
            let s: String = lower.iter().collect();
            let b = (fnv1a64(s.as_bytes()) % self.buckets as u64) as usize;
            v[b] += 1.0;
            count = 1;
        }
        if count > 0 {
            let inv = 1.0 / count as f64;
            for x in v[..self.buckets].iter_mut() {
                *x *= inv;
            }
            let norm = v[..self.buckets].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in v[..self.buckets].iter_mut() {
                    *x /= norm;
                }
            }
        }

        let chars = text.chars().count();
        let alpha = text.chars().filter(|c| c.is_alphabetic()).count();
        let upper = text.chars().filter(|c| c.is_uppercase()).count();
        let digits = text.chars().filter(|c| c.is_ascii_digit()).count();
        let base = self.buckets;
        v[base] = if starts_with_numbering(text) { 1.0 } else { 0.0 };
        v[base + 1] = if alpha > 0 { upper as f64 / alpha as f64 } else { 0.0 };
        v[base + 2] = if chars > 0 { digits as f64 / chars as f64 } else { 0.0 };
        v[base + 3] = ((1.0 + chars as f64).ln() / (256.0f64).ln()).min(1.0);
        v
    }
}
