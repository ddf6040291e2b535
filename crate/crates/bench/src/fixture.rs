//! A deliberately write-inefficient variant, used to check that the bound
//! check rejects it.

use aemsim_core::mergesort::aem_mergesort;
use aemsim_core::{ExtArray, Machine, Result};

/// [`aem_mergesort`], after which every output block is read back and
/// written a second time.
pub fn double_write_mergesort<T: Copy + Ord>(m: &mut Machine, input: ExtArray<T>) -> Result<ExtArray<T>> {
    let mut out = aem_mergesort(m, input)?;
    let mut blk = m.alloc::<T>(m.config().b)?;
    for i in 0..out.num_blocks() {
        m.read_block(&out, i, &mut blk)?;
        m.write_block(&mut out, i, &blk)?;
    }
    m.free(blk);
    Ok(out)
}
