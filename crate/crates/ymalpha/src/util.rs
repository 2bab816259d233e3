//! Counter-based random streams and the checkpoint checksum.

/// splitmix64 finalizer; the basis of the counter-based RNG.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Uniform in [0,1) from a counter word.
#[inline]
pub fn counter_uniform(seed: u64, counter: u64) -> f64 {
    let bits = splitmix64(seed ^ splitmix64(counter));
    // 53 high bits -> [0,1)
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller, keyed by (seed, counter, lane).
/// Order-independent: each (counter, lane) pair is its own stream.
pub fn counter_gaussian(seed: u64, counter: u64, lane: u64) -> f64 {
    let u1 = counter_uniform(seed, counter.wrapping_mul(2).wrapping_add(lane << 32));
    let u2 = counter_uniform(seed, counter.wrapping_mul(2).wrapping_add(1).wrapping_add(lane << 32));
    let r = (-2.0 * (1.0 - u1).ln()).sqrt();
    r * (2.0 * std::f64::consts::PI * u2).cos()
}

/// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320), as used by zip/png.
pub fn crc32(data: &[u8]) -> u32 {
    let mut crc: u32 = 0xffff_ffff;
    for &b in data {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xedb8_8320 & mask);
        }
    }
    !crc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crc32_known_vectors() {
        // Reference values from the standard check strings.
        assert_eq!(crc32(b"123456789"), 0xcbf43926);
        assert_eq!(crc32(b""), 0x00000000);
        assert_eq!(crc32(b"The quick brown fox jumps over the lazy dog"), 0x414fa339);
    }

    #[test]
    fn gaussian_moments_reasonable() {
        let n = 20_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let g = counter_gaussian(42, i as u64, 0);
            sum += g;
            sumsq += g * g;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn streams_are_order_independent() {
        let a = counter_gaussian(7, 123, 2);
        let _ = counter_gaussian(7, 999, 0);
        let b = counter_gaussian(7, 123, 2);
        assert_eq!(a, b);
    }
}
