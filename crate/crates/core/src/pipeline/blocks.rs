use super::recording::ChannelRecording;
use crate::error::{Error, Result};
use crate::scene::{ChannelVector, ResourceSet};

/// Consecutive non-overlapping coherent blocks, each compressed to the same
/// Ω_s (indices relative to the block's first symbol). A trailing partial
/// block is dropped.
#[derive(Clone, Debug)]
pub struct BlockStream<'a> {
    recording: &'a ChannelRecording,
    rs: &'a ResourceSet,
    block_len: usize,
    next: usize,
    n_blocks: usize,
}

impl BlockStream<'_> {
    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    /// The recording is shorter than one block.
    pub fn is_short(&self) -> bool {
        self.n_blocks == 0
    }

    pub fn dropped_symbols(&self) -> usize {
        self.recording.n_symbols() - self.n_blocks * self.block_len
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }
}

impl Iterator for BlockStream<'_> {
    type Item = (ChannelVector, usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.n_blocks {
            return None;
        }
        let b = self.next;
        self.next += 1;
        let first = b * self.block_len;
        let values = self.rs.indices().iter().map(|&(n, m)| self.recording.at(n, first + m)).collect();
        Some((ChannelVector::new(values, self.rs).expect("one value per resource"), b))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.n_blocks - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for BlockStream<'_> {}

/// `rs_template` must span N × `block_len`.
pub fn block_stream<'a>(
    recording: &'a ChannelRecording,
    block_len: usize,
    rs_template: &'a ResourceSet,
) -> Result<BlockStream<'a>> {
    if block_len == 0 {
        return Err(Error::invalid("block length must be >= 1"));
    }
    if rs_template.n_subcarriers() != recording.n_subcarriers() || rs_template.n_symbols() != block_len {
        return Err(Error::invalid(format!(
            "resource template is {}x{}, blocks are {}x{block_len}",
            rs_template.n_subcarriers(),
            rs_template.n_symbols(),
            recording.n_subcarriers()
        )));
    }
    Ok(BlockStream {
        recording,
        rs: rs_template,
        block_len,
        next: 0,
        n_blocks: recording.n_symbols() / block_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::RecordingMeta;
    use num_complex::Complex64;

    fn ramp(n: usize, m: usize) -> ChannelRecording {
        let data = (0..n * m).map(|k| Complex64::new(k as f64, 0.5)).collect();
        ChannelRecording::new(n, m, data, RecordingMeta::default()).unwrap()
    }

    #[test]
    fn counts() {
        let rec = ramp(2, 600);
        let rs = ResourceSet::full(2, 200);
        let s = block_stream(&rec, 200, &rs).unwrap();
        assert_eq!(s.n_blocks(), 3);
        assert_eq!(s.count(), 3);
        let short = ramp(2, 199);
        let s = block_stream(&short, 200, &rs).unwrap();
        assert!(s.is_short());
        assert_eq!(s.dropped_symbols(), 199);
        assert!(block_stream(&rec, 100, &rs).is_err());
    }

    #[test]
    fn same_pattern_in_every_block() {
        let rec = ramp(4, 10);
        let rs = ResourceSet::new(4, 3, vec![(1, 0), (3, 2)]).unwrap();
        let blocks: Vec<_> = block_stream(&rec, 3, &rs).unwrap().collect();
        assert_eq!(blocks.len(), 3);
        for (v, b) in blocks {
            assert_eq!(v.values()[0], rec.at(1, 3 * b));
            assert_eq!(v.values()[1], rec.at(3, 3 * b + 2));
        }
    }
}
