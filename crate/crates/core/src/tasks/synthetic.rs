use crate::error::{Error, Result};

pub fn copy(source: &[usize]) -> Vec<usize> {
    source.to_vec()
}

pub fn reverse(source: &[usize]) -> Vec<usize> {
    source.iter().rev().copied().collect()
}

/// Swaps every adjacent pair: `a1 a2 a3 a4 -> a2 a1 a4 a3`.
pub fn bigram_flip(source: &[usize]) -> Result<Vec<usize>> {
    if source.len() % 2 != 0 {
        return Err(Error::Task(format!(
            "bigram flip needs an even length, got {}",
            source.len()
        )));
    }
    Ok(source.chunks_exact(2).flat_map(|p| [p[1], p[0]]).collect())
}
