use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Sub-seed for one stochastic component: the first 8 bytes of
/// SHA-256(master || len(component) || component || index), little endian.
pub fn sub_seed(master: u64, component: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((component.len() as u64).to_le_bytes());
    h.update(component.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn component_rng(master: u64, component: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(master, component, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_and_separated() {
        assert_eq!(sub_seed(1, "covert", 0), sub_seed(1, "covert", 0));
        assert_ne!(sub_seed(1, "covert", 0), sub_seed(1, "covert", 1));
        assert_ne!(sub_seed(1, "covert", 0), sub_seed(2, "covert", 0));
        assert_ne!(sub_seed(1, "covert", 0), sub_seed(1, "aes", 0));
        // length prefix keeps ("ab", ..) and ("a", ..) apart
        assert_ne!(sub_seed(1, "ab", 0), sub_seed(1, "a", 0));
    }
}
